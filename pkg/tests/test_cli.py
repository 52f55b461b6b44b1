import csv
import io
import json

import pytest

from lavgap.cli import EXIT_CONFIG, EXIT_OK, EXIT_REFUSED, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_classify_example(capsys):
    code, out, _ = run(capsys, "classify", "--weight", "power2n:1", "--p", "2", "--q", "4")
    assert code == EXIT_OK
    rows = table(out)
    assert list(rows[0]) == ["part", "parameter", "level", "estimate", "verdict"]
    assert rows[0]["verdict"] == "holds"
    assert {r["verdict"] for r in rows if r["part"].startswith(("sigma", "omega"))} == {"bounded"}


def test_polycover_example(capsys):
    code, out, _ = run(capsys, "polycover", "--coeffs", "1,-2,1", "--T", "2", "--eps", "1", "--verify", "10000")
    assert code == EXIT_OK
    rows = table(out)
    assert len(rows) == 1 and float(rows[0]["t"]) == 2.0


def test_polycover_hypothesis_error(capsys):
    code, _, err = run(capsys, "polycover", "--coeffs=-1,0,1", "--T", "2", "--eps", "1")
    assert code == EXIT_CONFIG and "negative" in err
    assert run(capsys, "polycover", "--coeffs", "1,0,-1", "--T", "2", "--eps", "1")[0] == EXIT_CONFIG


def test_unknown_subcommand(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == EXIT_USAGE and "usage" in err


def test_missing_subcommand_and_flag(capsys):
    assert run(capsys)[0] == EXIT_USAGE
    assert run(capsys, "classify", "--weight", "sin6")[0] == EXIT_USAGE


def test_gate_refusal(capsys):
    code, _, err = run(capsys, "approx", "--weight", "power2n:1", "--p", "1", "--q", "4", "--deltas", "0.1")
    assert code == EXIT_REFUSED and "False" in err


def test_unknown_weight(capsys):
    assert run(capsys, "decompose", "--weight", "nope")[0] == EXIT_CONFIG


def test_catalog_lists_all(capsys):
    code, out, _ = run(capsys, "catalog")
    assert code == EXIT_OK and len(table(out)) == 8


def test_decompose_json(capsys):
    code, out, _ = run(capsys, "decompose", "--weight", "power2n:1", "--resolution", "5", "--format", "json")
    recs = json.loads(out)
    assert code == EXIT_OK and len(recs) == 5
    assert recs[0]["sigma"] == 5.0 and recs[0]["omega"] == 0.2


def test_negative_region(capsys):
    code, out, _ = run(capsys, "zconst", "--weight", "power2n:1", "--kappa", "2", "--region=-1,1", "--levels", "2")
    assert code == EXIT_OK and table(out)[-1]["verdict"] == "bounded"


def test_out_file(tmp_path, capsys):
    dest = tmp_path / "cover.csv"
    assert run(capsys, "polycover", "--coeffs", "1,-2,1", "--T", "2", "--eps", "1", "--out", str(dest))[0] == EXIT_OK
    assert dest.read_text().startswith("s,t,ratio")


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"weight": "power2n:1", "kappa": 2.5, "levels": 2, "region": "-1,1"}))
    code, out, _ = run(capsys, "zconst", "--config", str(cfg))
    assert code == EXIT_OK and table(out)[-1]["verdict"] == "diverging"
    code, out, _ = run(capsys, "zconst", "--config", str(cfg), "--kappa", "2")
    assert code == EXIT_OK and table(out)[-1]["verdict"] == "bounded"


def test_missing_config(capsys, tmp_path):
    assert run(capsys, "catalog", "--config", str(tmp_path / "absent.json"))[0] == EXIT_CONFIG


def test_mollify_roundtrip(tmp_path, capsys):
    field = tmp_path / "u.csv"
    rows = ["x,u"] + [f"{x},{max(0.0, 1 - abs(x))}" for x in [i / 100 - 1 for i in range(201)]]
    field.write_text("\n".join(rows) + "\n")
    code, out, _ = run(capsys, "mollify", "--field", str(field), "--delta", "0.05", "--x0", "0", "--R", "0.9")
    vals = table(out)
    assert code == EXIT_OK and len(vals) == 201
    assert abs(float(vals[100]["u"]) - 1.0) <= 0.12


def test_minimize(capsys):
    code, out, err = run(capsys, "minimize", "--weight", "power2n:1", "--p", "2", "--q", "4", "--level", "5")
    assert code == EXIT_OK and len(table(out)) == 33 and "energy" in err


def test_help_exits_cleanly():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


def test_seeded_output_reproducible(capsys):
    argv = ["muck", "--weight", "power2n:1", "--r", "3.5", "--levels", "2", "--seed", "7"]
    first = run(capsys, *argv)[1]
    assert first == run(capsys, *argv)[1] and first
