"""Command-line harness: moment audits, convergence runs and bound checks.

Usage::

    durrmeyer moments       --config exp.cfg --out results/
    durrmeyer converge      --config exp.cfg --out results/ [--workers 4] [--force]
    durrmeyer verify-bounds --config exp.cfg --out results/
    durrmeyer kernel-info   --config exp.cfg | durrmeyer kernel-info bspline2 f-kernel

Configs are flat ``key = value`` files; see :class:`ExperimentConfig`.
Errors print one ``error: code=<n> kind=<name> message=<text>`` line on
stderr and exit with that code.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .asymptotics import (
    PreconditionWarning,
    bound_terms,
    convergence_report,
    empirical_rate,
    precondition_violations,
    quantitative_constants,
)
from .errors import ConfigError, DivergenceError, DurrmeyerError, VerificationFailure
from .functions import ScaledNorms, TestFunction, make_function
from .kernels import BochnerRieszKernel, KernelND, MultiIndex, TensorKernel, make_kernel
from .lattice import tail_bound, truncation_radius
from .moments import MomentTable, fourier_moment_check, moment_table
from .operator import OperatorConfig, ScalingSequence, make_scaling

_ONE_D_IDS = ("bspline2", "f-kernel")


# ---------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    """Flat experiment description.

    Keys (one per line, ``key = value``, ``#`` starts a comment):

    ``phi``, ``psi``
        Kernel ids: ``bspline2``, ``f-kernel``, ``bochner-riesz`` (with
        ``gamma``), ``bochner-riesz:gamma=<g>`` or ``tensor:<id>^N``.  One-dimensional
        ids are tensorised automatically when ``dim > 1``.
    ``dim``, ``gamma``, ``order``
        Dimension ``N``, Bochner-Riesz exponent, Voronovskaja order ``r`` (1 or 2).
    ``scaling``
        ``linear``, ``linear:<c1>,...`` (``p_i = c_i n``) or ``n+sqrt``.
    ``function``
        ``const:<c>``, ``monomial:<e1>,...``, ``gauss``, ``sin``, ``cos``, ``trig:<k1>,...``.
    ``points``
        Evaluation points separated by ``;``, coordinates by ``,``.
    ``n_grid``
        Strictly increasing positive integers separated by ``,``.
    ``lattice_tol``, ``quad_tol``, ``domain_trunc_tol``
        Operator tolerances.
    ``acceptance_tol``
        Relative tolerance for the limit estimate against the prediction.
    ``truncation_tol``, ``constancy_tol``
        Lattice truncation and constancy tolerances for the moment audit.
    ``sup_norm_scale``
        Multiplies the sup-norm bounds of order ``r + 1`` (1 by default;
        values below 1 understate them on purpose).
    ``extrapolate``
        ``true`` to add a Richardson estimate of the limit.
    ``label``
        Free text copied into reports.
    """

    phi: str = "bspline2"
    psi: str = "bspline2"
    dim: int = 1
    gamma: Optional[float] = None
    scaling: str = "linear"
    function: str = "gauss"
    points: list = field(default_factory=lambda: [[0.5]])
    n_grid: list = field(default_factory=lambda: [8, 16, 32, 64, 128, 256])
    order: int = 1
    lattice_tol: float = 1e-10
    quad_tol: float = 1e-12
    domain_trunc_tol: float = 1e-14
    acceptance_tol: float = 0.02
    truncation_tol: float = 1e-3
    constancy_tol: float = 1e-8
    sup_norm_scale: float = 1.0
    extrapolate: bool = False
    label: str = ""

    # ---- parsing

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in raw:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            raw[key] = value
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kw = {}
        try:
            for key, value in raw.items():
                if key in ("dim", "order"):
                    kw[key] = int(value)
                elif key in ("gamma", "lattice_tol", "quad_tol", "domain_trunc_tol", "acceptance_tol",
                             "truncation_tol", "constancy_tol", "sup_norm_scale"):
                    kw[key] = float(value)
                elif key == "extrapolate":
                    if value.lower() not in ("true", "false"):
                        raise ConfigError("extrapolate must be true or false")
                    kw[key] = value.lower() == "true"
                elif key == "n_grid":
                    kw[key] = [int(v) for v in value.split(",")]
                elif key == "points":
                    kw[key] = [[float(c) for c in pt.split(",")] for pt in value.split(";") if pt.strip()]
                else:
                    kw[key] = value
        except ValueError as exc:
            raise ConfigError(f"bad value: {exc}") from None
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_text(text)

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.order not in (1, 2):
            raise ConfigError("order must be 1 or 2")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must hold positive integers")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if not self.points:
            raise ConfigError("at least one evaluation point is required")
        for pt in self.points:
            if len(pt) != self.dim:
                raise ConfigError(f"point {pt} does not have dimension {self.dim}")
        for name in ("lattice_tol", "quad_tol", "domain_trunc_tol", "acceptance_tol",
                     "truncation_tol", "constancy_tol", "sup_norm_scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")

    # ---- resolution

    def _kernel(self, ident: str) -> KernelND:
        ident = ident.strip()
        if ident == "bochner-riesz":
            if self.gamma is None:
                raise ConfigError("bochner-riesz needs a gamma key")
            ident = f"bochner-riesz:gamma={self.gamma:g}"
        if ident in _ONE_D_IDS and self.dim > 1:
            ident = f"tensor:{ident}^{self.dim}"
        k = make_kernel(ident, self.dim)
        if k.dim != self.dim:
            raise ConfigError(f"kernel {ident} has dimension {k.dim}, config says {self.dim}")
        return k

    def kernels(self) -> tuple[KernelND, KernelND]:
        return self._kernel(self.phi), self._kernel(self.psi)

    def test_function(self) -> TestFunction:
        f = make_function(self.function, self.dim)
        if self.sup_norm_scale != 1.0:
            f = ScaledNorms(f, self.sup_norm_scale, from_order=self.order + 1)
        return f

    def scaling_sequence(self) -> ScalingSequence:
        return make_scaling(self.scaling, self.dim)

    def operator_config(self) -> OperatorConfig:
        return OperatorConfig(self.lattice_tol, self.quad_tol, self.domain_trunc_tol)


# ---------------------------------------------------------------- verdict


@dataclass
class VerdictRow:
    assumption: str
    order: int
    passed: bool
    evidence: str


def _fmt(x: float) -> str:
    return repr(float(x))


def admissibility(phi: KernelND, psi: KernelND, table: MomentTable, r: int,
                  truncation_tol: float) -> list[VerdictRow]:
    """Check partition of unity, moment constancy per order and tail decay."""
    rows = []
    e0 = table._entry(MultiIndex.zero(phi.dim))
    unity = e0.constant and abs(e0.m_mean - 1.0) <= 1e-8 + 2 * _tail(phi, 0, truncation_tol) \
        and abs(e0.m_tilde - 1.0) <= 1e-10
    rows.append(VerdictRow("i", 0, unity,
                           f"sum phi mean={_fmt(e0.m_mean)} maxdev={_fmt(e0.m_maxdev)}; "
                           f"int psi={_fmt(e0.m_tilde)}"))
    for nu in range(1, r + 1):
        ok = True
        parts = []
        for h in MultiIndex.of_order(nu, phi.dim):
            e = table._entry(h)
            ok &= e.constant and not math.isnan(e.m_tilde)
            parts.append(f"m_{h.label()} mean={_fmt(e.m_mean)} maxdev={_fmt(e.m_maxdev)}")
            if phi.has_fourier and nu <= 2:
                fc = fourier_moment_check(phi, h)
                parts.append(f"fourier {'pass' if fc.passes else 'fail'}"
                             + "".join(f" k={tuple(int(c) for c in k)}:{v:.12g}" for k, v in fc.offenders))
        rows.append(VerdictRow("ii", nu, bool(ok), "; ".join(parts)))
    M, Mt = table.M_order.get(r, math.nan), table.M_tilde_order.get(r, math.nan)
    try:
        R, b = truncation_radius(phi, r, truncation_tol)
        decay = f"tail bound {b:.3g} at w={R:.6g}"
        decays = True
    except DivergenceError as exc:
        decay, decays = str(exc), False
    rows.append(VerdictRow("iii", r, bool(math.isfinite(M) and math.isfinite(Mt) and decays),
                           f"M_{r}(phi)={_fmt(M)} Mt_{r}(psi)={_fmt(Mt)}; {decay}"))
    return rows


def _tail(phi: KernelND, r: int, tol: float) -> float:
    if phi.compact:
        return 0.0
    return truncation_radius(phi, r, tol)[1]


def verdict_csv(rows: list[VerdictRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["assumption", "order", "status", "evidence"])
    for row in rows:
        w.writerow([row.assumption, row.order, "pass" if row.passed else "FAIL", row.evidence])
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _table(cfg: ExperimentConfig, phi, psi, absolute_order: int) -> MomentTable:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PreconditionWarning)
        return moment_table(phi, psi, cfg.order, absolute_order,
                            constancy_tol=cfg.constancy_tol, truncation_tol=cfg.truncation_tol)


def cmd_moments(cfg: ExperimentConfig, out: Path, **_) -> int:
    phi, psi = cfg.kernels()
    table = _table(cfg, phi, psi, cfg.order + 1)
    rows = admissibility(phi, psi, table, cfg.order, cfg.truncation_tol)
    _write(out, "moments.csv", table.to_csv())
    _write(out, "verdict.csv", verdict_csv(rows))
    for row in rows:
        print(f"{row.assumption:>3} order {row.order}: {'pass' if row.passed else 'FAIL'}  {row.evidence}")
    if all(r.passed for r in rows):
        return 0
    raise VerificationFailure("admissibility: " + ", ".join(
        f"{r.assumption}(order {r.order})" for r in rows if not r.passed) + " failed")


def _mapper(workers: int):
    if workers <= 1:
        return None, map
    pool = ProcessPoolExecutor(max_workers=workers)
    return pool, pool.map


def cmd_converge(cfg: ExperimentConfig, out: Path, workers: int = 1, force: bool = False) -> int:
    phi, psi = cfg.kernels()
    f = cfg.test_function()
    seq = cfg.scaling_sequence()
    table = _table(cfg, phi, psi, cfg.order)
    rows = admissibility(phi, psi, table, cfg.order, cfg.truncation_tol)
    failed = [r for r in rows if not r.passed]
    notes = []
    if failed:
        msg = "; ".join(f"{r.assumption}(order {r.order}): {r.evidence}" for r in failed)
        if not force:
            raise VerificationFailure(f"admissibility failed, rerun with --force to proceed: {msg}")
        notes.append(f"forced past failed admissibility: {msg}")
    if cfg.label:
        notes.insert(0, cfg.label)
    pool, mapper = _mapper(workers)
    summary = io.StringIO()
    sw = csv.writer(summary, lineterminator="\n")
    sw.writerow(["point", "x", "slope", "limit_estimate", "extrapolated", "predicted_limit",
                 "pointwise_limit", "relative_residual", "pointwise_residual", "status"])
    status_all = 0
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PreconditionWarning)
            for i, x in enumerate(cfg.points):
                rep = convergence_report(f, phi, psi, seq, x, cfg.n_grid, cfg.order, table,
                                         cfg.operator_config(), mapper)
                rep.notes = notes + rep.notes
                _write(out, f"converge_{i}.csv", rep.to_csv())
                xs = ",".join(f"{c:g}" for c in x)
                try:
                    fit = empirical_rate(rep, cfg.extrapolate)
                except DurrmeyerError as exc:
                    sw.writerow([i, xs, "nan", "nan", "", _fmt(rep.predicted),
                                 "" if rep.pointwise is None else _fmt(rep.pointwise), "nan", "",
                                 f"indeterminate: {exc}"])
                    print(f"x={xs}: indeterminate rate ({exc})")
                    status_all = status_all or exc.exit_code
                    continue
                est = fit.extrapolated if fit.extrapolated is not None else fit.limit
                scale = abs(rep.predicted) if rep.predicted != 0 else 1.0
                rel = abs(est - rep.predicted) / scale
                ok = rel <= cfg.acceptance_tol
                prel = ""
                if rep.pointwise is not None:
                    prel = _fmt(abs(est - rep.pointwise) / (abs(rep.pointwise) or 1.0))
                sw.writerow([i, xs, _fmt(fit.slope), _fmt(fit.limit),
                             "" if fit.extrapolated is None else _fmt(fit.extrapolated),
                             _fmt(rep.predicted), "" if rep.pointwise is None else _fmt(rep.pointwise),
                             _fmt(rel), prel, "pass" if ok else "FAIL"])
                line = (f"x={xs}: slope {fit.slope:.4f}, n^r*err at n={rep.ns[-1]} = {fit.limit:.10g}, "
                        f"predicted {rep.predicted:.10g}")
                if rep.pointwise is not None:
                    line += f" (pointwise {rep.pointwise:.10g})"
                print(line + ("" if ok else "  FAIL"))
                if not ok:
                    status_all = status_all or VerificationFailure.exit_code
    finally:
        if pool is not None:
            pool.shutdown()
    _write(out, "rates.csv", "".join(f"# {n}\n" for n in notes) + summary.getvalue())
    return status_all


def cmd_verify_bounds(cfg: ExperimentConfig, out: Path, workers: int = 1, **_) -> int:
    phi, psi = cfg.kernels()
    f = cfg.test_function()
    seq = cfg.scaling_sequence()
    table = _table(cfg, phi, psi, cfg.order + 1)
    consts = quantitative_constants(table, cfg.order)
    if not (math.isfinite(consts.A) and math.isfinite(consts.B)):
        raise DivergenceError(f"absolute moments of order {cfg.order + 1} diverge "
                              f"(A={consts.A}, B={consts.B}); the direct estimate does not apply")
    issues = precondition_violations(table, cfg.order)
    if issues:
        raise VerificationFailure("direct estimate preconditions fail: " + "; ".join(issues))
    pool, mapper = _mapper(workers)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["point", "n", "lhs", "drift", "remainder", "bound", "numeric_slack", "margin", "status"])
    bad = []
    r = cfg.order
    try:
        for i, x in enumerate(cfg.points):
            rep = convergence_report(f, phi, psi, seq, x, cfg.n_grid, r, table, cfg.operator_config(), mapper)
            for n, s, b in zip(rep.ns, rep.scaled_errors, rep.bounds):
                lhs = abs(s - rep.predicted)
                bt = bound_terms(f, x, seq, n, table, consts, r)
                slack = n**r * b
                margin = bt.total + slack - lhs
                ok = margin >= 0
                if not ok:
                    bad.append((i, n))
                w.writerow([i, n, _fmt(lhs), _fmt(bt.drift), _fmt(bt.remainder), _fmt(bt.total),
                            _fmt(slack), _fmt(margin), "pass" if ok else "FAIL"])
    finally:
        if pool is not None:
            pool.shutdown()
    text = f"# A_{r}={consts.A!r} B_{r}={consts.B!r}\n" + buf.getvalue()
    _write(out, "bounds.csv", text)
    print(f"A_{r} = {consts.A:.12g}, B_{r} = {consts.B:.12g}")
    if bad:
        raise VerificationFailure("bound violated at " + ", ".join(f"point {i} n={n}" for i, n in bad))
    print(f"all {len(cfg.points) * len(cfg.n_grid)} checks pass")
    return 0


def kernel_info(k: KernelND) -> list[tuple[str, str]]:
    info = [("identifier", k.identifier), ("dim", str(k.dim)), ("compact", str(k.compact).lower()),
            ("nonnegative", str(k.nonnegative).lower()), ("has_fourier", str(k.has_fourier).lower()),
            ("value_at_origin", _fmt(float(k(np.zeros(k.dim)))))]
    if isinstance(k, TensorKernel):
        info.append(("support_box", ";".join(f"[{a:g},{b:g}]" for a, b in k.support_box)))
    if isinstance(k, BochnerRieszKernel):
        C, x0 = k.envelope()
        info += [("decay_exponent", _fmt(k.decay_exponent)), ("envelope_constant", _fmt(C)),
                 ("envelope_start", _fmt(x0))]
        for r in range(0, 4):
            try:
                R, b = truncation_radius(k, r, 1e-6)
                info.append((f"radius_tol1e-6_order{r}", _fmt(R)))
            except DivergenceError:
                info.append((f"radius_tol1e-6_order{r}", "divergent"))
    return info


def cmd_kernel_info(cfg: ExperimentConfig | None, out: Path | None, ids=(), dim: int = 1, **_) -> int:
    kernels = []
    if ids:
        helper = cfg or ExperimentConfig(dim=dim)
        kernels = [helper._kernel(i) for i in ids]
    elif cfg is not None:
        kernels = list(cfg.kernels())
    else:
        raise ConfigError("kernel-info needs kernel ids or --config")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kernel", "key", "value"])
    for k in kernels:
        for key, val in kernel_info(k):
            w.writerow([k.identifier, key, val])
            print(f"{k.identifier:32s} {key:24s} {val}")
    if out is not None:
        _write(out, "kernel_info.csv", buf.getvalue())
    return 0


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="durrmeyer", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("moments", "moment table and admissibility verdict"),
                        ("converge", "convergence run against the predicted limit"),
                        ("verify-bounds", "check the direct estimate at every n"),
                        ("kernel-info", "describe kernels")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, required=name != "kernel-info")
        p.add_argument("--out", type=Path, default=None if name == "kernel-info" else Path("results"))
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--force", action="store_true")
        if name == "kernel-info":
            p.add_argument("ids", nargs="*")
            p.add_argument("--dim", type=int, default=1)
    return parser


_COMMANDS = {"moments": cmd_moments, "converge": cmd_converge, "verify-bounds": cmd_verify_bounds}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = ExperimentConfig.load(args.config) if args.config else None
        if args.command == "kernel-info":
            return cmd_kernel_info(cfg, args.out, ids=args.ids, dim=args.dim)
        return _COMMANDS[args.command](cfg, args.out, workers=args.workers, force=args.force)
    except DurrmeyerError as exc:
        print(f"error: code={exc.exit_code} kind={type(exc).__name__} message={exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"error: code=1 kind={type(exc).__name__} message={exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
