import csv
import io
import re
import subprocess
import sys
from pathlib import Path

import pytest

from durrmeyer.cli import ExperimentConfig, main
from durrmeyer.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ERROR_LINE = re.compile(r"^error: code=(\d+) kind=(\w+) message=.+$", re.M)


def _cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def _rows(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


FIRST_ORDER_SHORT = """
phi = bspline2
psi = f-kernel
function = gauss
points = 0.5; -0.8
n_grid = 16, 32, 64, 128
acceptance_tol = 0.03
"""


# ---------------------------------------------------------------- config parsing


def test_config_round_trip():
    cfg = ExperimentConfig.load(CONFIGS / "first_order_n2.cfg")
    assert cfg.dim == 2 and cfg.points[1] == [0.7, 0.2] and cfg.n_grid[-1] == 256
    phi, psi = cfg.kernels()
    assert phi.identifier == "tensor:bspline2^2" and psi.identifier == "tensor:f-kernel^2"


@pytest.mark.parametrize(
    "text",
    ["color = red", "dim = two", "n_grid = 8, 4", "order = 3", "points = 0.1, 0.2", "dim = 1\ndim = 2",
     "extrapolate = maybe", "quad_tol = 0", "just words"],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(text)


@pytest.mark.parametrize(
    "text", ["phi = nope", "phi = bochner-riesz", "function = exp", "scaling = log"],
)
def test_config_resolution_errors(tmp_path, capsys, text):
    code = main(["converge", "--config", str(_cfg(tmp_path, text)), "--out", str(tmp_path / "o")])
    assert code == 2
    m = ERROR_LINE.search(capsys.readouterr().err)
    assert m and m.group(1) == "2" and m.group(2) == "ConfigError"


def test_missing_config_file(tmp_path, capsys):
    assert main(["moments", "--config", str(tmp_path / "absent.cfg")]) == 2
    assert ERROR_LINE.search(capsys.readouterr().err)


def test_bad_worker_count(tmp_path):
    path = _cfg(tmp_path, FIRST_ORDER_SHORT)
    assert main(["converge", "--config", str(path), "--workers", "0", "--out", str(tmp_path)]) == 2


# ---------------------------------------------------------------- moments


def test_moments_b2_pair_fails_order_two(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["moments", "--config", str(CONFIGS / "bspline_pair.cfg"), "--out", str(out)])
    assert code == 7
    rows = {(r["assumption"], r["order"]): r for r in _rows(out / "verdict.csv")}
    assert rows[("i", "0")]["status"] == "pass"
    assert rows[("ii", "1")]["status"] == "pass"
    assert rows[("ii", "2")]["status"] == "FAIL"
    assert "maxdev=0.25" in rows[("ii", "2")]["evidence"]
    assert "k=(1,):0.0506605918212" in rows[("ii", "2")]["evidence"]
    assert rows[("iii", "2")]["status"] == "pass"
    table = {r["h"]: r for r in _rows(out / "moments.csv")}
    assert table["(2)"]["constant"] == "false"
    assert "VerificationFailure" in capsys.readouterr().err


def test_moments_bochner_riesz_pass(tmp_path):
    out = tmp_path / "o"
    assert main(["moments", "--config", str(CONFIGS / "second_order_bochner_riesz.cfg"), "--out", str(out)]) == 0
    table = {r["h"]: r for r in _rows(out / "moments.csv")}
    assert abs(float(table["(2)"]["m_mean"]) - 6.0) < 1e-3
    assert table["(2)"]["constant"] == "true"


def test_moments_first_order_pass(tmp_path):
    out = tmp_path / "o"
    assert main(["moments", "--config", str(CONFIGS / "first_order_n1.cfg"), "--out", str(out)]) == 0
    table = {r["h"]: r for r in _rows(out / "moments.csv")}
    assert abs(float(table["(1)"]["m_tilde"]) - 1 / 3) < 1e-12
    assert all(r["status"] == "pass" for r in _rows(out / "verdict.csv"))


# ---------------------------------------------------------------- converge


def test_converge_first_order(tmp_path):
    out = tmp_path / "o"
    assert main(["converge", "--config", str(_cfg(tmp_path, FIRST_ORDER_SHORT)), "--out", str(out)]) == 0
    rates = _rows(out / "rates.csv")
    assert [r["status"] for r in rates] == ["pass", "pass"]
    for r in rates:
        assert abs(float(r["slope"]) + 1) < 0.1
    report = _rows(out / "converge_0.csv")
    assert list(report[0]) == ["n", "value", "error", "scaled_error", "certified_bound",
                               "predicted_limit", "residual"]
    assert [int(r["n"]) for r in report] == [16, 32, 64, 128]


def test_converge_deterministic_across_runs_and_workers(tmp_path):
    path = _cfg(tmp_path, FIRST_ORDER_SHORT)
    outs = []
    for tag, workers in (("a", 1), ("b", 1), ("c", 2), ("d", 2)):
        out = tmp_path / tag
        assert main(["converge", "--config", str(path), "--out", str(out), "--workers", str(workers)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outs[0] == outs[1] == outs[2] == outs[3]


def test_converge_refuses_inadmissible(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["converge", "--config", str(CONFIGS / "bspline_discrepancy.cfg"), "--out", str(out)])
    assert code == 7
    assert "--force" in capsys.readouterr().err
    assert not (out / "rates.csv").exists()


def test_converge_discrepancy_report_carries_both_limits(tmp_path):
    out = tmp_path / "o"
    code = main(["converge", "--config", str(CONFIGS / "bspline_discrepancy.cfg"), "--out", str(out), "--force"])
    assert code == 7  # the formal limit is not met, which is the point of the report
    text = (out / "converge_0.csv").read_text()
    assert "forced past failed admissibility" in text
    assert "formal limit 0.3333333333333" in text and "pointwise limit 0.1666666666666" in text
    (rate,) = _rows(out / "rates.csv")
    assert abs(float(rate["predicted_limit"]) - 1 / 3) < 1e-12
    assert abs(float(rate["pointwise_limit"]) - 1 / 6) < 1e-12
    assert abs(float(rate["limit_estimate"]) - 1 / 6) < 1e-8
    assert float(rate["pointwise_residual"]) < 1e-8


def test_converge_constant_function_is_indeterminate(tmp_path):
    text = FIRST_ORDER_SHORT.replace("function = gauss", "function = const:2")
    out = tmp_path / "o"
    assert main(["converge", "--config", str(_cfg(tmp_path, text)), "--out", str(out)]) == 8
    for rep in ("converge_0.csv", "converge_1.csv"):
        for row in _rows(out / rep):
            assert abs(float(row["error"])) <= float(row["certified_bound"]) + 1e-15
    assert all(r["status"].startswith("indeterminate") for r in _rows(out / "rates.csv"))


# ---------------------------------------------------------------- verify-bounds


def test_verify_bounds_first_order(tmp_path):
    out = tmp_path / "o"
    assert main(["verify-bounds", "--config", str(CONFIGS / "first_order_n1.cfg"), "--out", str(out)]) == 0
    rows = _rows(out / "bounds.csv")
    assert len(rows) == 12
    assert all(r["status"] == "pass" for r in rows)
    assert all(float(r["drift"]) == 0.0 for r in rows)
    head = (out / "bounds.csv").read_text().splitlines()[0]
    assert head.startswith("# A_1=")


def test_verify_bounds_understated_norm_fails(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["verify-bounds", "--config", str(CONFIGS / "understated_norms.cfg"), "--out", str(out)])
    assert code == 7
    rows = _rows(out / "bounds.csv")
    assert any(r["status"] == "FAIL" for r in rows)
    err = capsys.readouterr().err
    assert "bound violated at point 0 n=" in err


def test_verify_bounds_shifted_law_has_drift(tmp_path):
    text = FIRST_ORDER_SHORT.replace("points = 0.5; -0.8", "points = 0.5") + "scaling = n+sqrt\n"
    out = tmp_path / "o"
    assert main(["verify-bounds", "--config", str(_cfg(tmp_path, text)), "--out", str(out)]) == 0
    assert all(float(r["drift"]) > 0 for r in _rows(out / "bounds.csv"))


def test_verify_bounds_divergent_moment(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["verify-bounds", "--config", str(CONFIGS / "second_order_bochner_riesz.cfg"), "--out", str(out)])
    assert code == 4
    assert "DivergenceError" in capsys.readouterr().err


def test_verify_bounds_precondition_failure(tmp_path):
    out = tmp_path / "o"
    assert main(["verify-bounds", "--config", str(CONFIGS / "bspline_pair.cfg"), "--out", str(out)]) == 7


# ---------------------------------------------------------------- kernel-info and entry point


def test_kernel_info(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["kernel-info", "bspline2", "bochner-riesz:gamma=3", "--out", str(out)]) == 0
    rows = _rows(out / "kernel_info.csv")
    keys = {(r["kernel"], r["key"]): r["value"] for r in rows}
    assert keys[("bochner-riesz:gamma=3", "decay_exponent")] == "4.0"
    assert keys[("bochner-riesz:gamma=3", "radius_tol1e-6_order3")] == "divergent"
    assert keys[("tensor:bspline2^1", "support_box")] == "[-1,1]"


def test_kernel_info_needs_input(capsys):
    assert main(["kernel-info"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "durrmeyer", "kernel-info", "f-kernel"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "f-kernel" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "durrmeyer", "moments", "--config", str(tmp_path / "x.cfg")],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and ERROR_LINE.search(proc.stderr)
