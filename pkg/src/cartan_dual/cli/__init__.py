"""Command line interface: structure specifications, check catalogue, reports."""
from .checks import CheckError, CheckResult, run_checks
from .report import build_report, emit_report, validate_report
from .spec import (
    CHECKS,
    SchemaError,
    SpecError,
    SpecSyntaxError,
    SpecValidationError,
    Structure,
    Violation,
    build_structure,
    load_spec,
)

__all__ = [
    "CHECKS", "CheckError", "CheckResult", "SchemaError", "SpecError", "SpecSyntaxError",
    "SpecValidationError", "Structure", "Violation", "build_report", "build_structure",
    "emit_report", "load_spec", "run_checks", "validate_report",
]
