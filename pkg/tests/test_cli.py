"""Command-line interface, driven in-process through ``main``."""

import json
from fractions import Fraction as F

import pytest

from cascade_relu import verify as V
from cascade_relu.cli import main
from cascade_relu.cpwl import function_to_json
from cascade_relu.network import deserialize, evaluate, serialize
from cascade_relu.refinement import Mask


@pytest.fixture
def files(tmp_path, hat_mask, pyramid):
    mask = tmp_path / "mask.json"
    seed = tmp_path / "seed.json"
    mask.write_text(json.dumps(hat_mask.to_json()))
    seed.write_text(json.dumps(function_to_json(pyramid)))
    return tmp_path, ["--mask", str(mask), "--seed", str(seed), "--window", "2", "2"]


def _json_out(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def one_step(g, m, p):
    """V g(p) = sum c[j,k] g(2p - (j,k)), written out by hand."""
    return sum(c * g((2 * p[0] - j, 2 * p[1] - k)) for (j, k), c in m.items())


@pytest.mark.parametrize("mode", ["direct", "cascade"])
def test_oracle_eval(files, capsys, mode, pyramid, hat_mask):
    _, prob = files
    assert main(["oracle-eval", "--mode", mode, "--point", "1/3,5/7", "--n", "1", *prob]) == 0
    out = capsys.readouterr().out.strip()
    p = (F(1, 3), F(5, 7))
    assert F(out) == one_step(pyramid, hat_mask, p)
    assert "/" in out


def test_compile_then_stats(files, capsys, seed_net_1):
    tmp, prob = files
    out = tmp / "v1.json"
    assert main(["compile", "--n", "1", "-o", str(out), *prob]) == 0
    doc = _json_out(capsys)
    net = deserialize(out.read_bytes())
    assert evaluate(net, (F(1, 3), F(5, 7))) == evaluate(seed_net_1.network, (F(1, 3), F(5, 7)))
    assert doc["width"] == seed_net_1.stats.width and doc["depth"] == seed_net_1.stats.depth
    assert main(["stats", str(out)]) == 0
    st = _json_out(capsys)
    assert st["hidden_layers"] == st["depth"] - 1
    assert st["width"] == doc["width"]
    assert "." not in st["max_abs_weight"]


def test_decompose(files, capsys):
    tmp, prob = files
    seed = prob[3]
    atoms = tmp / "atoms.json"
    assert main(["decompose", "--seed", seed, "-o", str(atoms), "--points", "50"]) == 0
    doc = _json_out(capsys)
    assert doc["atoms"] == len(json.loads(atoms.read_text())["atoms"])
    assert doc["atoms"] > 0


def test_render_network_and_oracle(files, capsys, seed_net_1):
    tmp, prob = files
    net = tmp / "v1.json"
    net.write_bytes(serialize(seed_net_1.network))
    img_a, img_b = tmp / "a.pgm", tmp / "b.pgm"
    assert main(["render", "--input", str(net), "--region", "0", "0", "2", "2", "--res", "9", "5",
                 "-o", str(img_a)]) == 0
    assert main(["render", "--input", "oracle", "--n", "1", "--region", "0", "0", "2", "2", "--res", "9", "5",
                 "-o", str(img_b), *prob]) == 0
    a = img_a.read_bytes()
    assert a.startswith(b"P5\n9 5\n255\n") and len(a) == len(b"P5\n9 5\n255\n") + 45
    assert a == img_b.read_bytes()
    assert (tmp / "a.csv").read_text() == (tmp / "b.csv").read_text()
    assert (tmp / "a.csv").read_text().splitlines()[0] == "row,col,x,y,value"


def _plan_file(tmp, **kw):
    plan = V.VerificationPlan.demo(n_values=(1,), suites=False,
                                   samples=V.SampleSpec(grid_offset=1, random=10, dyadic_lines=5, seam_orbits=5,
                                                        window_boundary=6, outside=5, cascade_checks=5), **kw)
    path = tmp / "plan.json"
    path.write_text(json.dumps(plan.to_json()))
    return path


def test_verify_exit_zero(tmp_path, capsys):
    report = tmp_path / "report.json"
    assert main(["verify", "--plan", str(_plan_file(tmp_path)), "-o", str(report), "--quiet"]) == 0
    assert _json_out(capsys)["ok"] is True
    assert json.loads(report.read_text())["mismatches"] == 0


def test_verify_exit_one_on_mismatch(tmp_path, capsys, monkeypatch, hat_mask):
    entries = dict(hat_mask.items())
    entries[(0, 0)] += F(1, 16)
    bad = Mask(entries)
    real_build = V.build_seed_net
    monkeypatch.setattr(V, "build_seed_net", lambda g, m, w, p, n, d=None: real_build(g, bad, w, p, n))
    report = tmp_path / "report.json"
    assert main(["verify", "--plan", str(_plan_file(tmp_path)), "-o", str(report), "--quiet"]) == 1
    assert json.loads(report.read_text())["mismatches"] > 0


@pytest.mark.parametrize("argv", [
    ["oracle-eval", "--point", "0.5,1/2", "--n", "1"],
    ["oracle-eval", "--point", "1/2", "--n", "1"],
    ["stats", "/nonexistent/net.json"],
    ["render", "--input", "oracle", "--region", "0", "0", "0", "1", "--res", "3", "3", "-o", "x.pgm"],
])
def test_input_errors_exit_two(files, capsys, argv):
    _, prob = files
    if argv[0] != "stats":
        argv = argv + prob
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_bad_mask_file_exit_two(files, capsys):
    tmp, prob = files
    (tmp / "mask.json").write_text('{"entries": [[0, 0, 0.5]]}')
    assert main(["oracle-eval", "--point", "1/2,1/2", "--n", "1", *prob]) == 2


def test_window_violation_exit_two(files, capsys):
    tmp, prob = files
    (tmp / "mask.json").write_text('{"entries": [[5, 0, "1/1"]]}')
    assert main(["oracle-eval", "--mode", "cascade", "--point", "1/2,1/2", "--n", "1", *prob]) == 2
