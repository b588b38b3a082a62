"""Command-line front end.

Subcommands: renewal-exact, renewal-mc, green, check-conditions,
verify-limit, counterexample.  Exit codes: 0 success, 2 verification failed,
3 requested accuracy not achieved, 4 configuration error.  Runs are
deterministic: identical configuration and seed produce byte-identical
output files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from ._kernels import get_backend
from .bounds import (
    BoundInputError,
    VisitBoundInputs,
    check_domination,
    exceedance_floor,
    report_to_json,
    truncated_drift_floor,
    verify_bound,
    visit_bound,
)
from .chains import BUILTIN_NAMES, ChainError, ChainSpec, build_chain, load_spec
from .exact import (
    AccuracyError,
    WindowError,
    default_window,
    green_function,
    positive_probability_bounds,
    renewal_measure,
)
from .laws import LawError
from .limits import (
    LimitError,
    counterexample_growth,
    limit_report,
    write_counterexample_csv,
    write_limit_csv,
)
from .montecarlo import HorizonError, estimate_positive_prob, estimate_renewal, write_mc_csv

EXIT_OK = 0
EXIT_VERIFICATION = 2
EXIT_ACCURACY = 3
EXIT_CONFIG = 4


@dataclass
class RunConfig:
    """Resolved run description; serializes losslessly to and from JSON."""

    command: str
    chain: str = "random_walk"
    chain_file: str | None = None
    p: float | None = None
    q: float | None = None
    window_lo: int | None = None
    window_hi: int | None = None
    n_max: int = 200_000
    tol: float = 1e-10
    horizon: int = 1000
    n_traj: int = 10_000
    seed: int = 12345
    out: str | None = None
    strict: bool = False
    backend: str = "auto"
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ChainError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


def _fail(status: str, detail: str, code: int) -> int:
    print(json.dumps({"status": status, "detail": detail}, sort_keys=True))
    return code


def _resolve_chain(cfg: RunConfig):
    if cfg.chain_file:
        spec = load_spec(cfg.chain_file)
    else:
        params = {}
        if cfg.p is not None:
            params["p"] = cfg.p
        if cfg.q is not None:
            params["q"] = cfg.q
        spec = ChainSpec(cfg.chain, params)
    return spec, build_chain(spec)


def _resolve_window(cfg: RunConfig, kernel, probe_lo: int, probe_hi: int, spec=None):
    include = ()
    if spec is not None and kernel.lattice:
        include = tuple(int(s) for s in spec.initial_law().states)
    lo, hi = default_window(kernel, probe_lo, probe_hi, include=include)
    if cfg.window_lo is not None:
        lo = cfg.window_lo
    if cfg.window_hi is not None:
        hi = cfg.window_hi
    return lo, hi


def _numeric_positive(cfg: RunConfig) -> None:
    for name in ("n_max", "horizon", "n_traj"):
        if getattr(cfg, name) <= 0:
            raise ChainError(f"{name} must be positive")
    if cfg.tol <= 0:
        raise ChainError("tol must be positive")


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def _cmd_renewal_exact(cfg: RunConfig) -> int:
    spec, kernel = _resolve_chain(cfg)
    probe_lo = int(cfg.extras.get("probe_lo", 0))
    probe_hi = int(cfg.extras.get("probe_hi", 200))
    lo, hi = _resolve_window(cfg, kernel, probe_lo, probe_hi, spec)
    accuracy = cfg.extras.get("accuracy")
    measure = renewal_measure(
        kernel,
        spec.initial_law(),
        (lo, hi),
        n_max=cfg.n_max,
        stop_tol=cfg.tol,
        visit_cap=cfg.extras.get("visit_cap"),
        certified=(probe_lo, probe_hi) if lo <= probe_lo <= probe_hi <= hi else None,
        accuracy=None if accuracy is None else float(accuracy),
        backend=get_backend(cfg.backend),
    )
    out = cfg.out or "renewal.csv"
    measure.to_csv(out)
    print(
        f"renewal measure on [{lo}, {hi}]: {measure.iterations_used} iterations, "
        f"bracket {measure.bracket_width:.3e} -> {out}"
    )
    return EXIT_OK


def _cmd_green(cfg: RunConfig) -> int:
    spec, kernel = _resolve_chain(cfg)
    start = int(cfg.extras.get("start", 0))
    probe_lo = int(cfg.extras.get("probe_lo", start - 20))
    probe_hi = int(cfg.extras.get("probe_hi", start + 50))
    lo, hi = _resolve_window(cfg, kernel, probe_lo, probe_hi, spec)
    accuracy = cfg.extras.get("accuracy")
    g = green_function(
        kernel,
        start,
        (lo, hi),
        n_max=cfg.n_max,
        stop_tol=cfg.tol,
        visit_cap=cfg.extras.get("visit_cap"),
        certified=(probe_lo, probe_hi) if lo <= probe_lo <= probe_hi <= hi else None,
        accuracy=None if accuracy is None else float(accuracy),
        backend=get_backend(cfg.backend),
    )
    out = cfg.out or "green.csv"
    g.to_csv(out)
    print(f"green function from {start}: bracket {g.bracket_width:.3e} -> {out}")
    return EXIT_OK


def _cmd_renewal_mc(cfg: RunConfig) -> int:
    spec, kernel = _resolve_chain(cfg)
    targets = [(float(x), float(cfg.extras.get("h", 1.0))) for x in cfg.extras["targets"]]
    estimates = estimate_renewal(
        kernel,
        spec.initial_law() if kernel.lattice else float(spec.initial.get("state", 0)),
        targets,
        horizon=cfg.horizon,
        n_traj=cfg.n_traj,
        master_seed=cfg.seed,
        strict=cfg.strict,
        backend=get_backend(cfg.backend),
    )
    out = cfg.out or "renewal_mc.csv"
    write_mc_csv(estimates, out)
    print(f"{len(estimates)} occupation estimates ({cfg.n_traj} trajectories) -> {out}")
    return EXIT_OK


def _cmd_check_conditions(cfg: RunConfig) -> int:
    spec, kernel = _resolve_chain(cfg)
    cap = float(cfg.extras.get("cap", 1.0))
    grid = _certificate_grid(kernel)
    majorant = cfg.extras.get("majorant_const")
    majorant = float(majorant) if majorant is not None else kernel.declared_majorant
    certificates = []
    if majorant is not None:
        certificates.append(check_domination(kernel, majorant, "majorant", grid))
    if kernel.declared_minorant is not None:
        certificates.append(check_domination(kernel, kernel.declared_minorant, "minorant", grid))
    eps, eps_at = truncated_drift_floor(kernel, cap, grid)
    gamma, _ = exceedance_floor(kernel, cap, grid)
    nonneg = all(kernel.jump_at(s).tail(-1e-12) >= 1.0 - 1e-12 for s in grid)
    inputs = VisitBoundInputs(
        cap=cap,
        drift_floor=eps,
        stay_floor=cfg.extras.get("stay_floor"),
        exceed_floor=gamma if nonneg else None,
        source="grid",
    )
    reports = []
    h = float(cfg.extras.get("h", 1.0))
    for mech in ("drift_escape", "minorant", "nonnegative"):
        try:
            reports.append(visit_bound(inputs, h, mech))
        except BoundInputError:
            pass
    table = None
    verify_lo = cfg.extras.get("verify_lo")
    verify_hi = cfg.extras.get("verify_hi")
    if reports and verify_lo is not None and verify_hi is not None and kernel.lattice:
        vlo, vhi = int(verify_lo), int(verify_hi)
        lo, hi = _resolve_window(cfg, kernel, vlo, vhi + 1, spec)
        measure = renewal_measure(
            kernel, spec.initial_law(), (lo, hi),
            n_max=cfg.n_max, stop_tol=cfg.tol,
            visit_cap=cfg.extras.get("visit_cap"),
            certified=(vlo, vhi + 1),
            backend=get_backend(cfg.backend),
        )
        table = verify_bound(reports[0], measure, [(k, h) for k in range(vlo, vhi + 1)])
    doc = report_to_json(
        certificates, inputs, reports, table,
        extra={"chain": spec.name, "drift_floor_argmin": eps_at, "cap": cap},
    )
    out = cfg.out or "conditions.json"
    with open(out, "w") as fh:
        fh.write(doc + "\n")
    print(f"conditions report -> {out}")
    bad = [c for c in certificates if not c.valid]
    if bad:
        return _fail(
            "verification-failed",
            f"invalid {bad[0].kind} certificate (worst violation {bad[0].worst_violation:.3e} "
            f"at state {bad[0].worst_state})",
            EXIT_VERIFICATION,
        )
    if table is not None and not table.all_passed:
        return _fail("verification-failed", "computed measure exceeds the certified bound", EXIT_VERIFICATION)
    return EXIT_OK


def _certificate_grid(kernel) -> list:
    if kernel.name == "counterexample":
        # block tops carry the largest jumps; probe every block up to 2**10
        states = []
        for n in range(0, 10):
            bottom, top = (1 << n) - 1, (1 << (n + 1)) - 2
            states.extend({bottom, (bottom + top) // 2, top})
        return sorted(set(states))
    if kernel.lattice:
        return list(range(-50, 51))
    return [float(x) for x in np.linspace(-50.0, 50.0, 101)]


def _cmd_verify_limit(cfg: RunConfig) -> int:
    spec, kernel = _resolve_chain(cfg)
    range_lo = int(cfg.extras.get("range_lo", 100))
    range_hi = int(cfg.extras.get("range_hi", 150))
    rel_tol = float(cfg.extras.get("rel_tol", 2e-2))
    h = float(cfg.extras.get("h", 1.0))
    stats_mean = kernel.limit_mean
    if kernel.lattice:
        lo, hi = _resolve_window(cfg, kernel, range_lo, range_hi, spec)
        measure = renewal_measure(
            kernel, spec.initial_law(), (lo, hi),
            n_max=cfg.n_max, stop_tol=cfg.tol,
            visit_cap=cfg.extras.get("visit_cap"),
            certified=(range_lo, range_hi),
            backend=get_backend(cfg.backend),
        )
        pb = positive_probability_bounds(
            kernel, spec.initial_law(), (lo, hi),
            n_at=int(cfg.extras.get("p0_steps", 4000)),
            backend=get_backend(cfg.backend),
        )
        positive_prob = 0.5 * (pb.lower + pb.upper)
        report = limit_report(measure, h, positive_prob, stats_mean, (range_lo, range_hi))
        out = cfg.out or "limit.csv"
        write_limit_csv(measure, h, report.target, (range_lo, range_hi), out)
    else:
        pp = estimate_positive_prob(
            kernel, float(spec.initial.get("state", 0)), 0.0,
            probe_time=cfg.horizon, n_traj=cfg.n_traj, master_seed=cfg.seed,
            strict=cfg.strict, backend=get_backend(cfg.backend),
        )
        positive_prob = pp.value
        targets = [(float(x), h) for x in range(range_lo, range_hi)]
        estimates = estimate_renewal(
            kernel, float(spec.initial.get("state", 0)), targets,
            horizon=cfg.horizon, n_traj=cfg.n_traj, master_seed=cfg.seed,
            strict=cfg.strict, backend=get_backend(cfg.backend),
        )
        report = limit_report(estimates, h, positive_prob, stats_mean, (range_lo, range_hi))
        out = cfg.out or "limit.csv"
        write_mc_csv(estimates, out)
    print(
        f"density {report.density_estimate:.6f} vs target {report.target:.6f} "
        f"(unit-density {report.unit_density_target:.6f}"
        + (", targets differ" if report.targets_differ else "")
        + f"); relative error {report.relative_error:.2e} -> {out}"
    )
    if report.relative_error > rel_tol:
        return _fail(
            "verification-failed",
            f"relative error {report.relative_error:.3e} exceeds {rel_tol:.3e}",
            EXIT_VERIFICATION,
        )
    return EXIT_OK


def _cmd_counterexample(cfg: RunConfig) -> int:
    n_lo = int(cfg.extras.get("n_lo", 6))
    n_hi = int(cfg.extras.get("n_hi", 12))
    report = counterexample_growth(
        n_lo, n_hi,
        margin=int(cfg.extras.get("margin", 64)),
        stop_tol=cfg.tol,
        n_max=cfg.n_max,
        backend=get_backend(cfg.backend),
    )
    out = cfg.out or "counterexample.csv"
    write_counterexample_csv(report, out)
    lo_r, hi_r = report.ratio_band
    print(
        f"blocks {n_lo}..{n_hi}: spike/reference ratios in [{lo_r:.4f}, {hi_r:.4f}], "
        f"bracket {report.bracket_width:.3e} -> {out}"
    )
    return EXIT_OK


_COMMANDS = {
    "renewal-exact": _cmd_renewal_exact,
    "renewal-mc": _cmd_renewal_mc,
    "green": _cmd_green,
    "check-conditions": _cmd_check_conditions,
    "verify-limit": _cmd_verify_limit,
    "counterexample": _cmd_counterexample,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--chain", default="random_walk", choices=BUILTIN_NAMES)
    p.add_argument("--chain-file", default=None, help="JSON chain spec (overrides --chain)")
    p.add_argument("--p", type=float, default=None, help="three_branch origin up-probability")
    p.add_argument("--q", type=float, default=None, help="walk up-probability (nearest-neighbor law)")
    p.add_argument("--window-lo", type=int, default=None)
    p.add_argument("--window-hi", type=int, default=None)
    p.add_argument("--n-max", type=int, default=200_000)
    p.add_argument("--tol", type=float, default=1e-10, help="stopping tolerance for residual mass")
    p.add_argument("--horizon", type=int, default=1000)
    p.add_argument("--n-traj", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--out", default=None)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--backend", default="auto", choices=("auto", "compiled", "python"))
    p.add_argument("--visit-cap", type=float, default=None, dest="visit_cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="renewalab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("renewal-exact", help="dense window iteration of the renewal measure")
    _add_common(pe)
    pe.add_argument("--probe-lo", type=int, default=0)
    pe.add_argument("--probe-hi", type=int, default=200)
    pe.add_argument("--accuracy", type=float, default=None)

    pm = sub.add_parser("renewal-mc", help="Monte Carlo occupation estimates")
    _add_common(pm)
    pm.add_argument("--targets", required=True, help="comma-separated window left endpoints")
    pm.add_argument("--h", type=float, default=1.0)

    pg = sub.add_parser("green", help="renewal measure from a point start")
    _add_common(pg)
    pg.add_argument("--start", type=int, default=0)
    pg.add_argument("--probe-lo", type=int, default=None)
    pg.add_argument("--probe-hi", type=int, default=None)
    pg.add_argument("--accuracy", type=float, default=None)

    pc = sub.add_parser("check-conditions", help="domination certificates and visit bounds")
    _add_common(pc)
    pc.add_argument("--cap", type=float, default=1.0, help="truncation level for the drift floor")
    pc.add_argument("--h", type=float, default=1.0)
    pc.add_argument("--majorant-const", type=float, default=None)
    pc.add_argument("--stay-floor", type=float, default=None)
    pc.add_argument("--verify-lo", type=int, default=None)
    pc.add_argument("--verify-hi", type=int, default=None)

    pv = sub.add_parser("verify-limit", help="tail renewal density against its predicted limit")
    _add_common(pv)
    pv.add_argument("--range-lo", type=int, default=100)
    pv.add_argument("--range-hi", type=int, default=150)
    pv.add_argument("--rel-tol", type=float, default=2e-2)
    pv.add_argument("--h", type=float, default=1.0)
    pv.add_argument("--p0-steps", type=int, default=4000)

    px = sub.add_parser("counterexample", help="block-structure report of the counterexample chain")
    _add_common(px)
    px.add_argument("--n-lo", type=int, default=6)
    px.add_argument("--n-hi", type=int, default=12)
    px.add_argument("--margin", type=int, default=64)

    return parser


_EXTRA_KEYS = (
    "probe_lo", "probe_hi", "accuracy", "targets", "h", "start", "cap",
    "majorant_const", "stay_floor", "verify_lo", "verify_hi", "range_lo",
    "range_hi", "rel_tol", "p0_steps", "n_lo", "n_hi", "margin", "visit_cap",
)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    extras = {}
    for key in _EXTRA_KEYS:
        if hasattr(args, key) and getattr(args, key) is not None:
            extras[key] = getattr(args, key)
    if "targets" in extras and isinstance(extras["targets"], str):
        extras["targets"] = [float(t) for t in extras["targets"].split(",") if t.strip()]
    return RunConfig(
        command=args.command,
        chain=args.chain,
        chain_file=args.chain_file,
        p=args.p,
        q=args.q,
        window_lo=args.window_lo,
        window_hi=args.window_hi,
        n_max=args.n_max,
        tol=args.tol,
        horizon=args.horizon,
        n_traj=args.n_traj,
        seed=args.seed,
        out=args.out,
        strict=args.strict,
        backend=args.backend,
        extras=extras,
    )


def run(cfg: RunConfig) -> int:
    try:
        _numeric_positive(cfg)
        return _COMMANDS[cfg.command](cfg)
    except AccuracyError as exc:
        return _fail("accuracy-not-achieved", str(exc), EXIT_ACCURACY)
    except HorizonError as exc:
        return _fail("accuracy-not-achieved", str(exc), EXIT_ACCURACY)
    except (ChainError, LawError, WindowError, LimitError, BoundInputError, KeyError, OSError) as exc:
        return _fail("config-error", f"{type(exc).__name__}: {exc}", EXIT_CONFIG)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = config_from_args(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
