import csv
import json

import pytest

from crncompare.cli import main


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


@pytest.fixture
def enzyme_files(tmp_path, capsys):
    _, base = _run(["demo", "enzyme1"], capsys)
    _, up = _run(["demo", "enzyme1", "--variant"], capsys)
    _, down = _run(["demo", "enzyme1", "--variant", "k3=1/2"], capsys)
    return (_write(tmp_path, "e1.json", base), _write(tmp_path, "e1up.json", up),
            _write(tmp_path, "e1down.json", down))


def test_demo_emits_model(capsys):
    code, out = _run(["demo", "enzyme1"], capsys)
    d = json.loads(out)
    assert code == 0 and len(d["species"]) == 4 and len(d["reactions"]) == 3
    _, out = _run(["demo", "braess", "--variant", "--order", "si1"], capsys)
    d = json.loads(out)
    assert d["params"]["k5"] == "1/2" and len(d["order_matrix"]) == 3


def test_check_exit_codes(enzyme_files, capsys):
    base, up, down = enzyme_files
    code, out = _run(["check", "--theorem", "3.2", "--model-a", base, "--model-b", up], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["result"]["verdict"] == "pass"
    assert set(doc["manifest"]["inputs"]) == {base, up}
    code, out = _run(["check", "--theorem", "3.2", "--model-a", base, "--model-b", down], capsys)
    assert code == 1 and json.loads(out)["result"]["witness"] is not None
    code, _ = _run(["check", "--theorem", "3.2", "--model-a", base, "--model-b", up,
                    "--order", "[[-2,0,0,0],[0,1,0,0]]"], capsys)
    assert code == 2


def test_check_braess_groups(tmp_path, capsys):
    _, a = _run(["demo", "braess", "--order", "si1", "--param", "k2=50", "--param", "k4=10",
                 "--param", "k5=1000", "--param", "k1=30", "--param", "k3=10"], capsys)
    _, b = _run(["demo", "braess", "--order", "si1", "--param", "k2=50", "--param", "k4=10",
                 "--param", "k5=10", "--param", "k1=30", "--param", "k3=10"], capsys)
    fa, fb = _write(tmp_path, "a.json", a), _write(tmp_path, "b.json", b)
    code, out = _run(["check", "--theorem", "S.2", "--model-a", fa, "--model-b", fb,
                      "--groups", "3,1;4,2;5"], capsys)
    assert code == 0, out


def test_simulate_deterministic_and_csv(enzyme_files, tmp_path, capsys):
    base, up, _ = enzyme_files
    argv = ["simulate", "--model-a", base, "--model-b", up, "--x0", "3,0,2,0",
            "--T", "5", "--reps", "20", "--seed", "9", "--gamma", "x2 == 3"]
    c1, o1 = _run(argv, capsys)
    c2, o2 = _run(argv + ["--threads", "1"], capsys)
    d1, d2 = json.loads(o1), json.loads(o2)
    assert c1 == c2 == 0
    for d in (d1, d2):
        d["manifest"].pop("timestamp")
        d["manifest"]["config"].pop("threads", None)
    assert d1 == d2
    assert d1["result"]["ordered_fraction"] == 1.0
    path = str(tmp_path / "paths.csv")
    code, out = _run(argv[:9] + ["--reps", "2", "--csv", path], capsys)
    assert code == 0
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["replicate", "chain", "time", "x1", "x2", "x3", "x4"]
    assert {r[1] for r in rows[1:]} == {"x", "xbreve"}
    assert json.load(open(path + ".manifest.json"))["command"] == "simulate"


def test_mfpt_commands(enzyme_files, capsys):
    base, up, _ = enzyme_files
    code, out = _run(["mfpt", "--model", base, "--x0", "3,0,2,0", "--gamma", "x2 == 3",
                      "--reps", "200", "--seed", "1"], capsys)
    r = json.loads(out)["result"]
    assert code == 0 and r["n_samples"] == 200 and r["std_error"] > 0
    code, out = _run(["mfpt-compare", "--model-a", base, "--model-b", up, "--x0", "3,0,2,0",
                      "--gamma", "x2 == 3", "--T", "500", "--reps", "200", "--seed", "1"], capsys)
    r = json.loads(out)["result"]
    assert code == 0 and r["pathwise_ok"] and r["mfpt_x"]["mean"] >= r["mfpt_xbreve"]["mean"]


def test_stationary_and_oracle(tmp_path, capsys):
    _, m = _run(["demo", "enzyme2"], capsys)
    fm = _write(tmp_path, "e2.json", m)
    code, out = _run(["stationary", "--model", fm, "--x0", "0,0,2,0", "--T", "5000",
                      "--truncation", "8,8,,", "--seed", "2"], capsys)
    assert code == 0
    rep = _write(tmp_path, "stat.json", out)
    code, out = _run(["stationary-oracle", "--Etot", "2", "--kappas", "1", "1", "1", "1", "1", "1",
                      "--caps", "8", "8", "--compare", rep], capsys)
    r = json.loads(out)["result"]
    assert code == 0 and r["n_states"] == 243 and r["tv_to_compare"] < 0.1


def test_drift_command(tmp_path, capsys):
    code, out = _run(["drift", "--example", "histone_tf", "--truncation", ",,40"], capsys)
    assert code == 0 and json.loads(out)["result"]["verdict"] == "pass"
    _, m = _run(["demo", "enzyme2"], capsys)
    fm = _write(tmp_path, "e2.json", m)
    code, out = _run(["drift", "--model", fm, "--V", "0", "--truncation", "5,5,,"], capsys)
    assert code == 1


def test_errors_exit_2(tmp_path, capsys):
    code = main(["check", "--theorem", "3.2", "--model-a", str(tmp_path / "missing.json"),
                 "--model-b", str(tmp_path / "missing.json")])
    captured = capsys.readouterr()
    assert code == 2 and json.loads(captured.out)["error"]
    bad = _write(tmp_path, "bad.json", '{"species": ["A"],')
    code = main(["mfpt", "--model", bad, "--x0", "1", "--gamma", "x1 == 0"])
    assert code == 2 and "ParseError" in capsys.readouterr().out
    assert main([]) == 2
    with pytest.raises(SystemExit):
        main(["demo", "nonsense"])
