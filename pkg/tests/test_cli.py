import json

import pytest

from qvmpool.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, main


@pytest.fixture(scope="module")
def device(tmp_path_factory):
    d = tmp_path_factory.mktemp("dev")
    assert main(["gen-fixture", "--rows", "7", "--cols", "3", "--out", str(d / "cal.json")]) == EXIT_OK
    assert main(["discover", "--calibration", str(d / "cal.json"), "--out", str(d / "pool.json")]) == EXIT_OK
    return d


def test_run_end_to_end(device):
    out = device / "run.json"
    args = ["run", "--pool", str(device / "pool.json"), "--batch-cap", "10", "--shots", "256", "--report", str(out)]
    assert main(args + ["--baseline"]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1 and doc["kind"] == "run"
    run = doc["runs"][0]
    assert len(run["circuits"]) == 29
    assert run["jobs_used"] == 3
    assert all(0.0 <= c["fidelity"] <= 1.0 for c in run["circuits"])
    assert all(c["baseline_fidelity"] is not None for c in run["circuits"])

    md = device / "run.md"
    assert main(["report", "--in", str(out), "--format", "md", "--out", str(md)]) == EXIT_OK
    text = md.read_text()
    assert "| Batch | Jobs | CostReduction | MeanFidelity |" in text
    assert "| Cap | Circuit | Width | Baseline | QualityAware | Delta |" in text
    csv_out = device / "run.csv"
    assert main(["report", "--in", str(out), "--format", "csv", "--out", str(csv_out)]) == EXIT_OK
    assert "Batch,Jobs,CostReduction,MeanFidelity" in csv_out.read_text()


def test_repeat_runs_are_byte_identical(device):
    paths = []
    for i in range(2):
        p = device / f"rep{i}.json"
        main(["run", "--pool", str(device / "pool.json"), "--batch-cap", "4,15", "--shots", "128",
              "--seed", "5", "--report", str(p)])
        paths.append(p.read_bytes())
    assert paths[0] == paths[1]


def test_schedule_cost_table(device):
    out = device / "sched.json"
    assert main(["schedule", "--pool", str(device / "pool.json"), "--batch-cap", "2,4,6,10,15",
                 "--report", str(out)]) == EXIT_OK
    jobs = [r["jobs_used"] for r in json.loads(out.read_text())["runs"]]
    assert jobs == [15, 8, 5, 3, 2]


def test_inject_defects_then_discover(device):
    dead = device / "dead.json"
    assert main(["inject-defects", "--calibration", str(device / "cal.json"), "--kill-coupler", "0,1",
                 "--kill-fraction", "0.05", "--seed", "3", "--out", str(dead)]) == EXIT_OK
    cal = json.loads(dead.read_text())
    assert main(["discover", "--calibration", str(dead), "--out", str(device / "dead_pool.json")]) == EXIT_OK
    pool = json.loads((device / "dead_pool.json").read_text())
    killed = {tuple(sorted((c["q0"], c["q1"]))) for c in cal["couplers"] if not c["operational"]}
    assert (0, 1) in killed
    for r in pool["regions"]:
        for e in r["edges"]:
            assert tuple(sorted(e)) not in killed


def test_exit_codes(device, tmp_path, capsys):
    assert main([]) == EXIT_INPUT
    assert main(["discover", "--calibration", str(tmp_path / "missing.json")]) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["discover", "--calibration", str(bad)]) == EXIT_INPUT
    assert main(["schedule", "--pool", str(device / "pool.json"), "--batch-cap", "0"]) == EXIT_INPUT
    wide = tmp_path / "wide"
    wide.mkdir()
    (wide / "big.qasm").write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[200];\ncreg c[200];\nh q[0];\n')
    (wide / "ok.qasm").write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\ncreg c[2];\nh q[0];\nmeasure q -> c;\n')
    assert main(["schedule", "--pool", str(device / "pool.json"), "--workload", str(wide),
                 "--report", str(tmp_path / "w.json")]) == EXIT_INFEASIBLE
    assert json.loads((tmp_path / "w.json").read_text())["runs"][0]["infeasible"] == ["big"]
    broken = tmp_path / "broken"
    broken.mkdir()
    (broken / "x.qasm").write_text("OPENQASM 2.0;\nqreg q[2];\nfoo q[0];\n")
    assert main(["schedule", "--pool", str(device / "pool.json"), "--workload", str(broken)]) == EXIT_INPUT
    assert "line 3" in capsys.readouterr().err
