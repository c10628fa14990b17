"""Driving the command-line harness from Python.

Equivalent shell usage::

    durrmeyer moments --config configs/first_order_n1.cfg --out results/
    durrmeyer converge --config configs/first_order_n1.cfg --out results/ --workers 2
    durrmeyer verify-bounds --config configs/first_order_n1.cfg --out results/
    durrmeyer kernel-info bspline2 bochner-riesz:gamma=3

Run with ``python3 notebooks/05_cli.py``.
"""

import tempfile
from pathlib import Path

from durrmeyer.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp)
    for cmd, cfg, extra in [("moments", "first_order_n1", []),
                            ("converge", "first_order_n1", []),
                            ("verify-bounds", "first_order_n1", []),
                            ("verify-bounds", "understated_norms", []),
                            ("converge", "bspline_discrepancy", ["--force"])]:
        print(f"\n$ durrmeyer {cmd} --config configs/{cfg}.cfg {' '.join(extra)}")
        code = main([cmd, "--config", str(CONFIGS / f"{cfg}.cfg"), "--out", str(out / cfg), *extra])
        print(f"exit code {code}")
    print("\n" + (out / "bspline_discrepancy" / "rates.csv").read_text())
