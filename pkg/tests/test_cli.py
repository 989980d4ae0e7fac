import json
import subprocess
import sys
from pathlib import Path

import pytest

from cartan_dual.cli.checks import CheckError, run_check, run_checks
from cartan_dual.cli.main import fixture_names, fixture_text, main
from cartan_dual.cli.report import build_report, emit_report, to_json, validate_report
from cartan_dual.cli.spec import (
    CHECKS, SchemaError, SpecError, SpecSyntaxError, SpecValidationError, build_structure, load_schema, load_spec,
    parse_document,
)
from cartan_dual.duality import MissingCandidate

from conftest import FIXTURES, structure

GOLDEN = Path(__file__).parent / "golden" / "minkowski_report.json"


def fixture_doc(name):
    return json.loads(fixture_text(name))


def write(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc), encoding="utf-8")
    return str(p)


def run(argv, capsysbinary):
    code = main(argv)
    out = capsysbinary.readouterr()
    return code, out.out, out.err.decode()


# -- loading -----------------------------------------------------------------

def test_fixtures_are_bundled():
    assert fixture_names() == sorted(FIXTURES)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixtures_load(name):
    st = structure(name)
    assert len(st.points) >= 5 and st.g is not None and st.L is not None


def test_minkowski_is_levi_civita():
    assert fixture_doc("minkowski")["connection"] == "levi-civita"
    assert structure("minkowski").L.label.startswith("levi-civita")


def test_asymmetric_metric_reported_at_pointer(tmp_path):
    doc = fixture_doc("minkowski")
    doc["metric"]["g10"] = "1"
    with pytest.raises(SpecValidationError) as e:
        load_spec(write(tmp_path, doc))
    assert [v.pointer for v in e.value.violations] == ["/metric/g01"]


def test_horizon_sample_point_rejected(tmp_path):
    doc = fixture_doc("schwarzschild")
    doc["sample_points"].append([0, 2, 1.0, 0.5])
    with pytest.raises(SpecValidationError) as e:
        load_spec(write(tmp_path, doc))
    (v,) = e.value.violations
    assert v.pointer == "/sample_points/5" and "singular locus" in v.message


def test_every_violation_is_listed(tmp_path):
    doc = fixture_doc("schwarzschild")
    doc["metric"]["g10"] = "r"
    doc["sample_points"] += [[0, 2, 1.0, 0.5], [0, 1e-300, 1, 1]]
    with pytest.raises(SpecValidationError) as e:
        load_spec(write(tmp_path, doc))
    pointers = [v.pointer for v in e.value.violations]
    assert "/metric/g01" in pointers and "/sample_points/5" in pointers and len(pointers) >= 3


def test_expression_errors_are_syntax_errors(tmp_path):
    doc = fixture_doc("minkowski")
    doc["metric"]["g00"] = "1 +"
    doc["metric"]["g11"] = "-w"
    with pytest.raises(SpecSyntaxError) as e:
        load_spec(write(tmp_path, doc))
    assert {v.pointer for v in e.value.violations} == {"/metric/g00", "/metric/g11"}
    assert isinstance(e.value, SyntaxError)


def test_schema_errors_collected(tmp_path):
    doc = fixture_doc("minkowski")
    del doc["metric"]["g33"]
    doc["sample_points"] = []
    doc["orientation"] = 2
    with pytest.raises(SchemaError) as e:
        load_spec(write(tmp_path, doc))
    assert len(e.value.violations) >= 3


def test_invalid_json(tmp_path):
    with pytest.raises(SpecSyntaxError) as e:
        load_spec(write(tmp_path, '{"spec_version": 1,'))
    assert "line 1" in str(e.value)
    with pytest.raises(SpecSyntaxError):
        parse_document("[1, 2")


def test_gprime_requested_without_candidate():
    doc = fixture_doc("schwarzschild")
    doc["checks"] = ["bianchi-1", "gprime"]
    with pytest.raises(SpecValidationError) as e:
        build_structure(doc)
    assert e.value.violations[0].pointer == "/checks/1"


def test_default_checks_skip_gprime_without_candidate():
    assert "gprime" not in structure("schwarzschild").checks
    assert structure("minkowski").checks == CHECKS


# -- running -----------------------------------------------------------------

def verdicts(name):
    return {r.name: r.verdict for r in run_checks(structure(name))}


def test_schwarzschild_verdicts():
    v = verdicts("schwarzschild")
    fails = {k for k, x in v.items() if x == "FAIL"}
    assert fails == {"same-metric-duality"}
    res = run_check(structure("schwarzschild"), "same-metric-duality")
    assert "curvature-match" in res.witnesses()[0][1]


def test_de_sitter_particular_case_fails():
    res = run_check(structure("desitter"), "particular-case")
    assert res.verdict == "FAIL"
    item = next(it for it in res.items if it.name == "scalar-curvature")
    assert item.tag == "clearly-violated" and res.item_verdict(item) == "FAIL"


def test_catalogue_has_pass_and_fail():
    seen = {}
    for name in FIXTURES:
        for check, v in verdicts(name).items():
            seen.setdefault(check, set()).add(v)
    assert set(seen) == set(CHECKS)
    assert any("PASS" in s for s in seen.values()) and any("FAIL" in s for s in seen.values())


def test_domain_errors_carry_check_name():
    st = structure("schwarzschild")
    with pytest.raises(CheckError) as e:
        run_check(st, "gprime")
    assert e.value.check == "gprime" and isinstance(e.value.cause, MissingCandidate)


def test_tolerance_override_flips_verdict():
    st = structure("schwarzschild")
    strict = run_check(st, "exterior-identities", hold=1e-30)
    assert strict.verdict in {"INDETERMINATE", "FAIL"}
    assert run_check(st, "exterior-identities").verdict == "PASS"


def test_empty_report_is_valid():
    rep = build_report(structure("minkowski"), [])
    validate_report(rep)
    assert rep["checks"] == [] and rep["verdict"] == "PASS"
    assert json.loads(emit_report(rep, "json")) == json.loads(json.dumps(rep))


def test_report_floats_fixed_format():
    text = to_json(build_report(structure("desitter"), run_checks(structure("desitter"), ["particular-case"])))
    assert b"e-" in text or b"e+" in text
    with pytest.raises(ValueError):
        emit_report({}, "yaml")


@pytest.mark.parametrize("name", FIXTURES)
def test_reports_validate(name):
    rep = build_report(structure(name), run_checks(structure(name)))
    validate_report(rep)
    for c in rep["checks"]:
        if c["verdict"] == "FAIL":
            assert c["witnesses"] and all(len(w["point"]) == 4 for w in c["witnesses"])


# -- command line ------------------------------------------------------------

@pytest.mark.parametrize("name", FIXTURES)
def test_json_is_byte_deterministic(name, capsysbinary):
    c1, out1, _ = run(["check", name], capsysbinary)
    c2, out2, _ = run(["check", name], capsysbinary)
    assert c1 == c2 and out1 == out2 and out1.endswith(b"\n")


def test_minkowski_golden(capsysbinary):
    code, out, _ = run(["check", "minkowski"], capsysbinary)
    assert code == 0
    assert out == GOLDEN.read_bytes()


@pytest.mark.parametrize("name, code", [("minkowski", 0), ("schwarzschild", 1), ("desitter", 1),
                                        ("torsionful-minkowski", 1)])
def test_exit_codes(name, code, capsysbinary):
    assert run(["check", name], capsysbinary)[0] == code


def test_exit_code_indeterminate(capsysbinary):
    code, out, _ = run(["check", "schwarzschild", "--only", "exterior-identities", "--tolerance", "1e-30"],
                       capsysbinary)
    assert code == 2 and json.loads(out)["verdict"] == "INDETERMINATE"


def test_exit_code_load_errors(tmp_path, capsysbinary):
    assert run(["check", str(tmp_path / "missing.json")], capsysbinary)[0] == 3
    doc = fixture_doc("minkowski")
    doc["metric"]["g10"] = "1"
    code, _, err = run(["validate", write(tmp_path, doc)], capsysbinary)
    assert code == 3 and "/metric/g01" in err


def test_only_filters_checks(capsysbinary):
    code, out, _ = run(["check", "desitter", "--only", "particular-case,bianchi-1"], capsysbinary)
    rep = json.loads(out)
    assert code == 1 and [c["name"] for c in rep["checks"]] == ["bianchi-1", "particular-case"]


def test_only_rejects_unknown_and_missing_candidate(capsysbinary):
    code, _, err = run(["check", "minkowski", "--only", "bogus"], capsysbinary)
    assert code == 3 and "bogus" in err
    code, _, err = run(["check", "schwarzschild", "--only", "gprime"], capsysbinary)
    assert code == 3 and "candidate" in err


def test_text_format_cites_tags(capsysbinary):
    code, out, _ = run(["check", "desitter", "--format", "text"], capsysbinary)
    text = out.decode()
    assert code == 1
    assert "[clearly-violated]" in text and "[particular-case]" in text and "witness (" in text
    assert text.rstrip().endswith("overall FAIL")


def test_output_file(tmp_path, capsysbinary):
    dest = tmp_path / "r.json"
    code, out, _ = run(["check", "minkowski", "-o", str(dest)], capsysbinary)
    assert code == 0 and out == b"" and dest.read_bytes() == GOLDEN.read_bytes()


def test_fixtures_subcommand(capsysbinary):
    code, out, _ = run(["fixtures", "--list"], capsysbinary)
    assert code == 0 and out.decode().split() == sorted(FIXTURES)
    code, out, _ = run(["fixtures", "--emit", "desitter"], capsysbinary)
    assert code == 0 and json.loads(out) == fixture_doc("desitter")
    assert run(["fixtures", "--emit", "nope"], capsysbinary)[0] == 3


def test_validate_subcommand(capsysbinary):
    code, out, _ = run(["validate", "torsionful-minkowski"], capsysbinary)
    assert code == 0 and b"valid" in out


def test_emitted_fixture_round_trips(tmp_path, capsysbinary):
    _, out, _ = run(["fixtures", "--emit", "schwarzschild"], capsysbinary)
    path = write(tmp_path, out.decode(), "schwarzschild.json")
    _, a, _ = run(["check", path], capsysbinary)
    _, b, _ = run(["check", "schwarzschild"], capsysbinary)
    assert a == b


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cartan_dual.cli.main", "check", "minkowski"],
                          capture_output=True, timeout=120)
    assert proc.returncode == 0 and proc.stdout == GOLDEN.read_bytes()


def test_spec_error_is_base():
    assert issubclass(SchemaError, SpecError) and issubclass(SpecValidationError, ValueError)


def test_threaded_evaluation_is_identical(monkeypatch, capsysbinary):
    _, serial, _ = run(["check", "torsionful-minkowski"], capsysbinary)
    monkeypatch.setenv("CARTAN_DUAL_THREADS", "4")
    _, threaded, _ = run(["check", "torsionful-minkowski"], capsysbinary)
    assert serial == threaded


def test_published_schemas_match_shipped_ones():
    docs = Path(__file__).parent.parent / "docs"
    for name in ("structure-spec", "check-report"):
        shipped = load_schema(name)
        assert json.loads((docs / f"{name}.schema.json").read_text()) == shipped
