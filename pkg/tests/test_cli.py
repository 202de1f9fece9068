import json

import numpy as np
import pytest

from cdii.cli import ALL_CHECKS, build_parser, main
from cdii.field_core import Grid2D, ScalarField
from cdii.gridio import read_grid_text, write_grid_text


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def load(path):
    return json.loads(path.read_text())


# --- forward ---------------------------------------------------------------


def test_forward_unit_conductivity(tmp_path):
    code, out = run(tmp_path, "forward", "--sigma", "1", "--f", "linear", "--n", "65")
    assert code == 0
    u = read_grid_text(out / "u.txt")
    X, _ = u.grid.mesh()
    assert np.max(np.abs(u.values - X)) <= 1e-10
    for name in ("Jx.txt", "Jy.txt", "a.txt", "sigma.txt", "f.csv", "forward.json", "manifest.json"):
        assert (out / name).exists()
    meta = load(out / "forward.json")
    assert meta["residual"] <= 1e-10 and "admissibility" in meta
    man = load(out / "manifest.json")
    assert man["subcommand"] == "forward" and man["exit_code"] == 0 and "u.txt" in man["files"]


def test_forward_layered(tmp_path):
    code, out = run(tmp_path, "forward", "--sigma", "1+x", "--f", "layered", "--n", "129")
    assert code == 0
    u = read_grid_text(out / "u.txt")
    X, _ = u.grid.mesh()
    assert np.max(np.abs(u.values - np.log1p(X) / np.log(2))) <= 1e-3


def test_forward_zero_conductivity_is_invalid_input(tmp_path, capsys):
    code, out = run(tmp_path, "forward", "--sigma", "0")
    assert code == 2
    assert "sigma0" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize("expr", ["1 +", "foo(x)", "log(x)"])
def test_forward_bad_expression(tmp_path, capsys, expr):
    code, _ = run(tmp_path, "forward", "--sigma", expr, "--n", "9")
    assert code == 2
    assert "error" in capsys.readouterr().err


# --- reconstruct -----------------------------------------------------------


def test_reconstruct_round_trip_unit(tmp_path):
    _, fwd = run(tmp_path, "forward", "--sigma", "1", "--f", "linear", "--n", "65", name="fwd")
    code, out = run(tmp_path, "reconstruct", "--from-dir", str(fwd))
    assert code == 0
    s = read_grid_text(out / "sigma_hat.txt")
    assert np.sum(s.grid.quad_weights() * np.abs(s.values - 1.0)) <= 1e-3
    meta = load(out / "reconstruct.json")
    assert meta["lgp"]["converged"] is True and meta["sigma_errors"]["l1"] <= 1e-3
    assert {"max_excess", "div_l2_interior", "alignment_residual"} <= set(meta["certificates"])


def test_reconstruct_round_trip_layered(tmp_path):
    _, fwd = run(tmp_path, "forward", "--sigma", "1+x", "--f", "layered", "--n", "129", name="fwd")
    code, out = run(tmp_path, "reconstruct", "--from-dir", str(fwd))
    assert code == 0
    assert load(out / "reconstruct.json")["sigma_errors"]["rel_l1"] <= 0.05


def test_reconstruct_generated_with_expression_trace(tmp_path):
    code, out = run(tmp_path, "reconstruct", "--sigma", "1 + 0.3*x*y", "--f", "x + 0.2*y", "--n", "33")
    assert code == 0
    meta = load(out / "reconstruct.json")
    assert meta["sigma_errors"]["rel_l1"] <= 0.05 and "u_errors" in meta


def test_reconstruct_malformed_grid_names_line(tmp_path, capsys):
    bad = tmp_path / "a.txt"
    bad.write_text("3 3 0.5 0.5 0 0\n1 2 3\n4 x 6\n7 8 9\n")
    code, _ = run(tmp_path, "reconstruct", "--a", str(bad))
    assert code == 2
    assert f"{bad}:3" in capsys.readouterr().err


def test_reconstruct_nonconvergence_keeps_best_iterate(tmp_path):
    code, out = run(tmp_path, "reconstruct", "--sigma", "1 + 0.5*x*y", "--n", "33", "--max-iter", "50")
    assert code == 3
    meta = load(out / "reconstruct.json")
    assert meta["lgp"]["converged"] is False
    assert (out / "u_hat.txt").exists() and (out / "sigma_hat.txt").exists()
    assert load(out / "manifest.json")["exit_code"] == 3


def test_reconstruct_without_input(tmp_path):
    assert run(tmp_path, "reconstruct")[0] == 2


# --- lgp -------------------------------------------------------------------


def test_lgp_files(tmp_path):
    g = Grid2D.square(17)
    write_grid_text(tmp_path / "a.txt", ScalarField.constant(g, 1.0))
    code, out = run(tmp_path, "lgp", "--a", str(tmp_path / "a.txt"), "--f", "tilted-linear")
    assert code == 0
    meta = load(out / "lgp.json")
    assert meta["converged"] and meta["energy"] == pytest.approx(1.0, rel=1e-4)
    assert (out / "phix.txt").exists()


# --- sweep -----------------------------------------------------------------


CONSTANT_CFG = """\
grid: 33
sigma: "1"
eta: "1"
f: linear
epsilons: [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625]
"""


def test_sweep_constant_family_config(tmp_path):
    cfg = tmp_path / "const.yaml"
    cfg.write_text(CONSTANT_CFG)
    code, out = run(tmp_path, "sweep", "--config", str(cfg))
    assert code == 0
    rep = load(out / "report.json")
    slope = next(c["slope"] for c in rep["checks"] if c["name"] == "e_sigma_vs_dJmag")
    assert slope == pytest.approx(1.0, abs=0.05)
    assert len((out / "runs.csv").read_text().splitlines()) == 9
    assert load(out / "manifest.json")["config"]["n"] == 33


def test_sweep_bump_family(tmp_path):
    code, out = run(tmp_path, "sweep", "--n", "65")
    assert code == 0
    rep = load(out / "report.json")
    slopes = {c["name"]: c["slope"] for c in rep["checks"]}
    for name, alpha in [("e_J_vs_da", 0.5), ("e_u_vs_dJmag", 0.5), ("e_grad_vs_dJmag", 0.25),
                        ("e_sigma_vs_dJmag", 0.25)]:
        assert slopes[name] >= alpha - 0.1


def test_sweep_names_excluded_member(tmp_path, capsys):
    code, out = run(tmp_path, "sweep", "--n", "33", "--bounds", "0.2,5,0.5,1.9")
    assert code == 0
    rep = load(out / "report.json")
    assert [e["eps"] for e in rep["excluded"]] == [0.5]
    assert "sigma1" in rep["excluded"][0]["reason"]
    assert "eps=0.5  excluded" in capsys.readouterr().out


def test_sweep_too_many_exclusions_exits_3(tmp_path):
    code, out = run(tmp_path, "sweep", "--n", "33", "--bounds", "0.2,5,0.5,1.55")
    assert code == 3
    rep = load(out / "report.json")
    assert rep["excluded_fraction"] > 0.25 and "excluded_fraction" in rep["failed_checks"]


def test_sweep_failing_check_exits_3(tmp_path):
    # an impossible slack turns every fitted check into a failure
    code, out = run(tmp_path, "sweep", "--n", "33", "--slack", "-5", "--checks", "e_J_vs_da")
    assert code == 3
    assert load(out / "report.json")["failed_checks"] == ["e_J_vs_da"]


def test_sweep_disabled_checks_do_not_count(tmp_path):
    code, _ = run(tmp_path, "sweep", "--n", "33", "--slack", "-5", "--checks", "defect_nonnegative")
    assert code == 0


def test_sweep_unknown_check(tmp_path):
    assert run(tmp_path, "sweep", "--checks", "nope")[0] == 2


# --- levelsets -------------------------------------------------------------


def test_levelsets_u_equals_x(tmp_path):
    g = Grid2D.square(65)
    write_grid_text(tmp_path / "u.txt", ScalarField.from_function(g, lambda x, y: x))
    code, out = run(tmp_path, "levelsets", "--u", str(tmp_path / "u.txt"), "--levels", "32")
    assert code == 0
    stats = load(out / "stats.json")
    assert stats["stats"]["L_M_hat"] == pytest.approx(1.0, abs=1e-3)
    assert len(stats["levels"]) == 32
    assert (out / "contours.csv").read_text().startswith("t,component_id,s,x,y")


def test_levelsets_circle(tmp_path):
    g = Grid2D.square(256, 2.0, (-1.0, -1.0))
    write_grid_text(tmp_path / "u.txt", ScalarField.from_function(g, lambda x, y: x * x + y * y))
    code, out = run(tmp_path, "levelsets", "--u", str(tmp_path / "u.txt"), "--level", "0.25")
    assert code == 0
    (lev,) = load(out / "stats.json")["levels"]
    assert lev["components"][0]["arclength"] == pytest.approx(np.pi, rel=0.01)


def test_levelsets_well_structured_layered(tmp_path):
    _, fwd = run(tmp_path, "forward", "--sigma", "1+x", "--f", "layered", "--n", "65", name="fwd")
    code, out = run(tmp_path, "levelsets", "--u", str(fwd / "u.txt"), "--well-structured")
    assert code == 0
    est = load(out / "well_structured.json")
    assert est["K_hat"] <= 1e-3 and est["n_samples"] > 0
    assert est["verdict"].startswith("no violation found")


def test_levelsets_constant_field_exits_2(tmp_path):
    write_grid_text(tmp_path / "c.txt", ScalarField.constant(Grid2D.square(5), 1.0))
    assert run(tmp_path, "levelsets", "--u", str(tmp_path / "c.txt"))[0] == 2


# --- plumbing --------------------------------------------------------------


def test_every_subcommand_help_lists_defaults():
    parser, defaults = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        text = p.format_help().replace("\n", " ")
        for key in defaults[name]:
            flag = "--" + key.replace("_", "-")
            assert flag in text
        assert text.count("(default:") >= len(defaults[name])


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--help"])
    assert exc.value.code == 0
    assert "--fit-window" in capsys.readouterr().out


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"sigma": "2", "n": 9}))
    code, out = run(tmp_path, "forward", "--config", str(cfg), "--n", "11")
    assert code == 0
    man = load(out / "manifest.json")["config"]
    assert man["n"] == 11 and man["sigma"] == "2"


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("sigmaa: 2\n")
    assert run(tmp_path, "forward", "--config", str(cfg))[0] == 2


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CDII_OUTPUT_ROOT", str(tmp_path / "root"))
    assert main(["forward", "--n", "9"]) == 0
    (d,) = (tmp_path / "root").iterdir()
    assert d.name.startswith("forward-") and (d / "manifest.json").exists()


def test_runs_are_byte_identical_apart_from_timestamp(tmp_path):
    args = ["forward", "--sigma", "1 + 0.5*exp(-50*((x-0.5)^2+(y-0.5)^2))", "--f", "tilted-linear", "--n", "33"]
    _, a = run(tmp_path, *args, name="a")
    _, b = run(tmp_path, *args, name="b")
    for f in sorted(p.name for p in a.iterdir()):
        if f == "manifest.json":
            ma, mb = load(a / f), load(b / f)
            ma.pop("timestamp"), mb.pop("timestamp")
            ma["config"].pop("out"), mb["config"].pop("out")
            assert ma == mb
        else:
            assert (a / f).read_bytes() == (b / f).read_bytes()


def test_all_checks_cover_inequalities():
    assert "gagliardo_nirenberg" in ALL_CHECKS and "e_sigma_vs_dJmag" in ALL_CHECKS
