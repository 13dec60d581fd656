import csv
import json

import numpy as np
import pytest

from microlab.cli import main
from microlab.function_spaces import lacunary_field
from microlab.grid import Grid, SampledField, load_field, save_field
from microlab.symbols import CoefficientSymbol, constant_field


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


@pytest.fixture
def symbol_file(tmp_path):
    g = Grid((128,))
    p = CoefficientSymbol(g, {(1,): lacunary_field(g, 1.5, 4) + 2.0, (0,): constant_field(g, 1.0)})
    path = tmp_path / "p.json"
    p.save(path)
    return path


def test_partition_check(capsys, tmp_path):
    code, out = run(capsys, "partition-check", "--n", 256, "--csv", tmp_path / "lp.csv")
    assert code == 0
    assert json.loads(out.out)["partition_error"] <= 1e-12
    assert (tmp_path / "lp.csv").exists()
    code, out = run(capsys, "partition-check", "--n", 32, "--dim", 2)
    assert code == 0


def test_synth_then_norm(capsys, tmp_path):
    f = tmp_path / "a.field"
    assert run(capsys, "synth", "--n", 512, "--r", 1.5, "--seed", 2, "-o", f)[0] == 0
    code, out = run(capsys, "norm", "--space", "zygmund", "--order", 1.5, f)
    assert code == 0 and 0.5 <= float(out.out) <= 2.0
    code, out = run(capsys, "norm", "--space", "sobolev", f)
    assert float(out.out) == pytest.approx(load_field(f).l2(), rel=1e-12)


def test_decompose_writes_shells(capsys, tmp_path, symbol_file):
    prefix = tmp_path / "out" / "split"
    prefix.parent.mkdir()
    assert run(capsys, "decompose", symbol_file, "-o", prefix)[0] == 0
    sharp = json.loads((prefix.parent / "split.sharp.json").read_text())
    flat = json.loads((prefix.parent / "split.flat.json").read_text())
    assert sharp["kind"] == "sharp" and len(sharp["shells"]) == sharp["J"] + 1
    p = CoefficientSymbol.load(symbol_file)
    # on every shell the low-passed and remainder coefficients add back to the original
    for s_k, f_k in zip(sharp["shells"], flat["shells"]):
        for ts, tf in zip(s_k["terms"], f_k["terms"]):
            alpha = tuple(ts["alpha"])
            total = load_field(prefix.parent / ts["field"]).values + load_field(prefix.parent / tf["field"]).values
            assert np.allclose(total, p.terms[alpha].values, atol=1e-12)


def test_quantize(capsys, tmp_path):
    g = Grid((64,))
    p = CoefficientSymbol(g, {(1,): SampledField(g, np.full(64, 1j))}, principally_real=False)
    p.save(tmp_path / "d.json")
    save_field(tmp_path / "f.field", SampledField.from_function(g, np.sin))
    assert run(capsys, "quantize", tmp_path / "d.json", tmp_path / "f.field", "-o", tmp_path / "o.field")[0] == 0
    assert np.allclose(load_field(tmp_path / "o.field").values, np.cos(g.axes()[0]), atol=1e-12)


def test_probe_bound(capsys, tmp_path, symbol_file):
    out = tmp_path / "pb.json"
    assert run(capsys, "probe-bound", symbol_file, "--trials", 12, "-o", out)[0] == 0
    d = json.loads(out.read_text())
    assert len(d["ratios"]) == 12 and d["m"] == 1
    pair = d["refinement_pairs"][0]
    assert (pair["n_coarse"], pair["n_fine"]) == (128, 256) and pair["ratio"] > 0
    assert run(capsys, "probe-bound", symbol_file, "--trials", 12, "--r", 1.5, "--refinements", 0, "-o", out)[0] == 0
    assert json.loads(out.read_text())["refinement_pairs"] == []


def test_flow(capsys, tmp_path, symbol_file):
    code, out = run(capsys, "flow", symbol_file, "--start", "0.5,1.0", "--t", 0.5, "-o", tmp_path / "f.csv")
    assert code == 0 and json.loads(out.out)["status"] == "ok"
    rows = list(csv.reader(open(tmp_path / "f.csv")))
    assert rows[0] == ["t", "x0", "xi0", "p_hat_value"] and float(rows[-1][0]) == pytest.approx(0.5)
    with pytest.raises(SystemExit):
        main(["flow", str(symbol_file), "--start", "1,2,3", "-o", str(tmp_path / "g.csv")])


def test_funnel(capsys, tmp_path):
    out = tmp_path / "funnel.json"
    assert run(capsys, "funnel", "--alpha", 1.0, "--ensemble", 16, "--levels", "-o", out)[0] == 0
    d = json.loads(out.read_text())
    assert d["alpha"] == 1.0 and "power_solution" not in d
    assert run(capsys, "funnel", "--alpha", 0.5, "--ensemble", 16, "--levels", 4, "-o", out)[0] == 0
    assert json.loads(out.read_text())["power_solution"]["K"] == pytest.approx(1 / 144)


def test_wavefront(capsys, tmp_path):
    g = Grid((512,))
    x = g.axes()[0]
    save_field(tmp_path / "u.field", SampledField(g, np.mod(x - np.pi, 2 * np.pi) - np.pi))
    code, out = run(capsys, "wavefront", tmp_path / "u.field", "--s", 1.0, "--svg", tmp_path / "wf.svg",
                    "-o", tmp_path / "wf.json")
    summary = json.loads(out.out)
    assert code == 0 and summary["singular"] > 0 and summary["probes"] == 2 * 512 // 16
    assert (tmp_path / "wf.svg").exists()


def test_wave_experiment(capsys, tmp_path):
    cfg = {"grid": {"n": 512}, "coeff": {"kind": "lacunary", "r": 1.5, "seed": 0, "a_min": 1.0, "amplitude": 0.0},
           "init": {"type": "step", "x0": 3.0}, "time": {"T": 0.5}, "query": {"s": 0.4}, "snapshots": 2}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    code, out = run(capsys, "wave-experiment", tmp_path / "c.json", "-o", tmp_path / "rep")
    assert code == 0 and json.loads(out.out)["passed"]
    assert {p.name for p in (tmp_path / "rep").iterdir()} == {"report.json", "timeseries.csv", "spacetime.svg"}
    cfg["init"] = {"type": "smooth"}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert run(capsys, "wave-experiment", tmp_path / "c.json", "-o", tmp_path / "rep2")[0] == 1


def test_errors_are_reported(capsys, tmp_path):
    code, out = run(capsys, "norm", "--space", "bmo", tmp_path / "missing.field")
    assert code == 2 and "microlab norm: error" in out.err
    g = Grid((512,))
    save_field(tmp_path / "u.field", SampledField.zeros(g))
    code, out = run(capsys, "wavefront", tmp_path / "u.field", "--h", 8, "--stride", 16, "-o", tmp_path / "w.json")
    assert code == 2
