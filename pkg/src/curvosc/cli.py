"""Command-line front end: spectra, eigenfunction samples, algebra reports, orbits, limits.

Exit codes: 0 success, 2 usage/parameter error, 3 failed relation or
eigen-check, 4 runtime event (singularity, step-size rejection).
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field, asdict, fields
from fractions import Fraction
import csv
import io
import json
import math
import os
import sys

import numpy as np

from curvosc.ktrig import as_curvature
from curvosc.wavealg import DomainError, RegimeError

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_RUNTIME = 0, 2, 3, 4
COMMANDS = ("spectrum", "state", "check-algebra", "orbit", "limit")
DEFAULT_KAPPAS = "1/10,1/100,1/1000,1/10000"


class UsageError(ValueError):
    """Invalid command-line parameters (exit code 2)."""


def parse_rational(text: str) -> Fraction:
    """'p/q', an integer or a decimal (read exactly, e.g. '0.1' -> 1/10)."""
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a rational number: {text!r}") from None


def fmt(x: float) -> str:
    """17 significant digits, the CSV float format."""
    return format(float(x), ".17g")


@dataclass
class RunConfig:
    """Every parameter of a run; serializes to JSON and back unchanged."""

    command: str
    kappa: str = "1"
    n0: int | None = None
    omega: str | None = None
    nmax: int = 2
    jtwice: int | None = None
    p: int | None = None
    q: int | None = None
    n: int | None = None
    ell: str | None = None
    energy: str | None = None
    theta0: str | None = None
    phi0: str = "0"
    ptheta0: str = "0"
    tmax: str = "50"
    dt: str = "1e-3"
    stride: int = 10
    chart: str = "polar"
    theta_min: str | None = None
    theta_max: str | None = None
    points: int = 200
    kappas: str = DEFAULT_KAPPAS
    probes: int = 20
    mutate: str | None = None
    format: str = "json"
    out: str | None = None
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in vars(ns).items() if k in names})


# ---------------------------------------------------------------------------
# output helpers


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_spectrum(cfg: RunConfig) -> int:
    from curvosc.spectrum import degeneracy_audit, enumerate_levels

    k = parse_rational(cfg.kappa)
    if k == 0:
        if cfg.omega is None:
            raise UsageError("--omega is required at zero curvature")
        w = parse_rational(cfg.omega)
        if w <= 0:
            raise UsageError("--omega must be positive")
        param = w
    else:
        if cfg.n0 is None or cfg.n0 < 1:
            raise UsageError("--n0 must be a positive integer for nonzero curvature "
                             "(no discrete states otherwise)")
        param = cfg.n0
    if cfg.nmax < 0:
        raise UsageError("--nmax must be non-negative")
    spec = enumerate_levels(k, param, cfg.nmax)
    for note in spec.notices:
        print(f"notice: {note}", file=sys.stderr)
    if cfg.format == "csv":
        _emit(spec.to_csv(), cfg.out)
    else:
        data = spec.to_json()
        data["notices"] = spec.notices
        data["degeneracy_audit"] = degeneracy_audit(k, param, cfg.nmax)
        _emit(_dumps(data), cfg.out)
    if not spec.all_verified:
        print("error: an eigen-check failed", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def _state_label(cfg: RunConfig, k: Fraction, jtwice: int):
    from curvosc.spectrum import StateLabel

    if cfg.p is not None or cfg.q is not None:
        if cfg.p is None or cfg.q is None:
            raise UsageError("give both --p and --q")
        return StateLabel(cfg.p, cfg.q)
    if cfg.n is None or cfg.ell is None:
        raise UsageError("give (--p, --q) or (--n, --ell)")
    ell = int(parse_rational(cfg.ell))
    if k > 0:
        total = jtwice - cfg.n
    elif k < 0:
        total = cfg.n - jtwice
    else:
        total = cfg.n
    if total < 0 or (total + ell) % 2 or abs(ell) > total:
        raise UsageError(f"(n={cfg.n}, ell={ell}) is not on the lattice")
    return StateLabel((total - ell) // 2, (total + ell) // 2)


def cmd_state(cfg: RunConfig) -> int:
    from curvosc.spectrum import LatticeError, ladder_state, representation

    k = parse_rational(cfg.kappa)
    if k == 0:
        if cfg.omega is None or parse_rational(cfg.omega) <= 0:
            raise UsageError("--omega > 0 is required at zero curvature")
        rep = representation(k, omega=parse_rational(cfg.omega))
    else:
        if cfg.jtwice is None or cfg.jtwice < (1 if k < 0 else 0):
            raise UsageError("--jtwice (the representation's 2j) is required")
        rep = representation(k, cfg.jtwice)
    try:
        label = _state_label(cfg, k, rep.jtwice)
        psi = ladder_state(rep, label)
    except LatticeError as exc:
        raise UsageError(str(exc)) from None
    if cfg.points < 1:
        raise UsageError("--points must be positive")
    kf = float(k)
    default_max = math.pi / (2 * math.sqrt(kf)) if kf > 0 else (4.0 if kf == 0 else 3.0 / math.sqrt(-kf))
    lo = float(parse_rational(cfg.theta_min)) if cfg.theta_min is not None else None
    hi = float(parse_rational(cfg.theta_max)) if cfg.theta_max is not None else default_max
    if lo is None:
        grid = hi * np.arange(1, cfg.points + 1) / (cfg.points + 1)
    else:
        if not lo < hi and cfg.points > 1:
            raise UsageError("empty theta range")
        grid = np.linspace(lo, hi, cfg.points)
    try:
        vals = np.atleast_1d(psi.eval(grid))
    except DomainError as exc:
        raise UsageError(f"grid outside the domain: {exc}") from None
    rows = [(fmt(t), fmt(v.real), fmt(v.imag)) for t, v in zip(grid, vals)]
    _emit(_csv_text(["theta", "re_psi", "im_psi"], rows), cfg.out)
    return EXIT_OK


def cmd_check_algebra(cfg: RunConfig) -> int:
    from curvosc import qops

    k = as_curvature(parse_rational(cfg.kappa))
    mutate = {None: None, "flip-A3": "flip_A3", "flip_A3": "flip_A3"}.get(cfg.mutate, "?")
    if mutate == "?":
        raise UsageError(f"unknown mutation {cfg.mutate!r}")
    if cfg.probes < 1:
        raise UsageError("--probes must be positive")
    seed, count = cfg.seed, cfg.probes
    reports = qops.algebra_suite(k, seed, count, mutate=mutate)
    if mutate is None:
        if k.kappa != 0:
            reports += qops.intertwine_check(k, nfreq=2, ell=0, seed=seed, count=count)
            reports += qops.intertwine_check(k, nfreq=3, ell=1, seed=seed, count=count)
        else:
            reports += qops.intertwine_check(k, nfreq=1, ell=0, seed=seed, count=count)
        reports += qops.hamiltonian_consistency(k, seed, count)
        reports += qops.symmetry_checks(k, seed, count)
    _emit(_dumps([r.to_json() for r in reports]), cfg.out)
    bad = [r.relation for r in reports if not r.exact]
    for name in bad:
        print(f"violated: {name}", file=sys.stderr)
    return EXIT_FAILED if bad else EXIT_OK


def _wrap_or_nan(x):
    return "nan" if x is None else fmt(x)


def cmd_orbit(cfg: RunConfig) -> int:
    from curvosc import classical as cl

    k = float(parse_rational(cfg.kappa))
    if cfg.omega is None:
        raise UsageError("--omega is required")
    omega = float(parse_rational(cfg.omega))
    ell = float(parse_rational(cfg.ell)) if cfg.ell is not None else 0.0
    tmax, dt = float(parse_rational(cfg.tmax)), float(parse_rational(cfg.dt))
    if dt <= 0 or tmax < 0 or cfg.stride < 1:
        raise UsageError("need --dt > 0, --tmax >= 0 and --stride >= 1")
    try:
        if cfg.theta0 is not None:
            start = cl.PhasePoint(float(parse_rational(cfg.theta0)), float(parse_rational(cfg.phi0)),
                                  float(parse_rational(cfg.ptheta0)), ell, omega)
        else:
            if cfg.energy is None:
                raise UsageError("give --energy or an explicit --theta0")
            start = cl.orbit_start(k, omega, ell, float(parse_rational(cfg.energy)))
        traj = cl.integrate(k, start, tmax, dt, stride=cfg.stride, chart=cfg.chart)
    except (cl.InadmissibleError, cl.SingularityError) as exc:
        raise UsageError(str(exc)) from None
    except cl.StepSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    res = cl.orbit_residual(k, traj)
    per_d = res.get("per_sample_derived")
    per_p = res.get("per_sample_printed")
    args = np.unwrap([math.atan2(s.inv.qab.imag, s.inv.qab.real) for s in traj.samples])
    rows = []
    for i, s in enumerate(traj.samples):
        pt = s.point
        rows.append([fmt(s.t), fmt(pt.theta), fmt(pt.phi), fmt(pt.p_theta), fmt(pt.p_phi),
                     fmt(s.ambient[0]), fmt(s.ambient[1]), fmt(s.ambient[2]), fmt(s.inv.E), fmt(s.inv.ell),
                     fmt(s.inv.qa2), fmt(s.inv.qb2), fmt(args[i]),
                     _wrap_or_nan(None if per_d is None else per_d[i]),
                     _wrap_or_nan(None if per_p is None else per_p[i])])
    header = ["t", "theta", "phi", "p_theta", "p_phi", "x0", "x1", "x2", "E", "ell",
              "qa2", "qb2", "arg_qab", "residual_derived", "residual_paper"]
    _emit(_csv_text(header, rows), cfg.out)
    inv0 = traj.samples[0].inv
    summary = {
        "config": asdict(cfg),
        "integrator": traj.integrator,
        "dt": dt,
        "samples": len(traj.samples),
        "event": traj.event,
        "start": asdict(start),
        "invariants": {"q_a": inv0.q_a, "q_b": inv0.q_b, "phi0": inv0.phi0, "E": inv0.E, "ell": inv0.ell},
        "drift": traj.drift,
        "orbit_residual": {k_: v for k_, v in res.items() if not k_.startswith("per_sample")},
    }
    text = _dumps(summary)
    if cfg.out and cfg.out != "-":
        _emit(text, cfg.out + ".summary.json")
    else:
        sys.stderr.write(text)
    if traj.halted:
        print(f"warning: integration halted: {traj.event}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_limit(cfg: RunConfig) -> int:
    from curvosc import classical as cl
    from curvosc.qops import operator_convergence

    items = [s for s in (cfg.kappas or "").split(",") if s.strip()]
    if not items:
        raise UsageError("empty curvature list")
    kappas = [parse_rational(s) for s in items]
    if any(x <= 0 for x in kappas) or any(a <= b for a, b in zip(kappas, kappas[1:])):
        raise UsageError("curvatures must be positive and strictly decreasing")
    omega = int(parse_rational(cfg.omega)) if cfg.omega is not None else 1
    try:
        series = {f"operator:{n}": operator_convergence(n, kappas, omega=omega) for n in ("A+", "A-", "B+", "B-")}
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    start = cl.PhasePoint(0.8, 0.0, 0.3, 1.0, float(omega))
    series["trajectory"] = cl.trajectory_deviation([float(x) for x in kappas], start, tmax=5.0, dt=1e-3)
    import random

    rng = random.Random(cfg.seed)
    pts = [cl.PhasePoint(rng.uniform(0.2, 1.2), rng.uniform(0, 2 * math.pi), rng.uniform(-1, 1),
                         rng.uniform(-1, 1), float(omega)) for _ in range(20)]
    series["df_tensor"] = cl.df_flat_deviation([float(x) for x in kappas], pts, sign=+1)
    series["df_tensor_printed_sign"] = cl.df_flat_deviation([float(x) for x in kappas], pts, sign=-1)
    rows = []
    for name, pairs in series.items():
        slope = cl.loglog_slope(pairs) if len(pairs) > 1 else float("nan")
        for kap, err in pairs:
            rows.append([name, str(Fraction(kap).limit_denominator(10 ** 12)), fmt(err), fmt(slope)])
    _emit(_csv_text(["quantity", "kappa", "error", "slope"], rows), cfg.out)
    return EXIT_OK


HANDLERS = {
    "spectrum": cmd_spectrum,
    "state": cmd_state,
    "check-algebra": cmd_check_algebra,
    "orbit": cmd_orbit,
    "limit": cmd_limit,
}


def build_parser() -> argparse.ArgumentParser:
    env_seed = os.environ.get("CURVOSC_SEED")
    default_seed = int(env_seed) if env_seed not in (None, "") else 0
    parser = argparse.ArgumentParser(prog="curvosc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, kappa_default="1"):
        p.add_argument("--kappa", default=kappa_default, help="curvature, 'p/q' or decimal")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=default_seed, help="seed (default $CURVOSC_SEED or 0)")

    p = sub.add_parser("spectrum", help="energy levels with exact eigen-checks")
    common(p)
    p.add_argument("--n0", type=int, help="omega0 = n0 |k| (k != 0)")
    p.add_argument("--omega", help="frequency at k = 0")
    p.add_argument("--nmax", type=int, default=2)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("state", help="sample a ladder-built eigenfunction on a theta grid")
    common(p)
    p.add_argument("--jtwice", type=int, help="representation 2j (k != 0)")
    p.add_argument("--omega", help="frequency at k = 0")
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--ell")
    p.add_argument("--theta-min", dest="theta_min")
    p.add_argument("--theta-max", dest="theta_max")
    p.add_argument("--points", type=int, default=200)

    p = sub.add_parser("check-algebra", help="verify the operator relations on seeded probes")
    common(p)
    p.add_argument("--probes", type=int, default=20)
    p.add_argument("--mutate", choices=("flip-A3",), default=None, help=argparse.SUPPRESS)

    p = sub.add_parser("orbit", help="integrate a classical trajectory")
    common(p)
    p.add_argument("--omega", required=True)
    p.add_argument("--ell", default="0")
    p.add_argument("--energy")
    p.add_argument("--theta0")
    p.add_argument("--phi0", default="0")
    p.add_argument("--ptheta0", default="0")
    p.add_argument("--tmax", default="50")
    p.add_argument("--dt", default="1e-3")
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--chart", choices=("polar", "gnomonic", "auto"), default="polar")

    p = sub.add_parser("limit", help="zero-curvature convergence study")
    common(p)
    p.add_argument("--kappas", default=DEFAULT_KAPPAS, help="comma-separated, strictly decreasing")
    p.add_argument("--omega", default=None)
    return parser


def run(cfg: RunConfig) -> int:
    if cfg.command not in HANDLERS:
        raise UsageError(f"unknown command {cfg.command!r}")
    return HANDLERS[cfg.command](cfg)


def _join_negative_values(argv: list[str]) -> list[str]:
    """'--kappa -1/2' -> '--kappa=-1/2' (argparse takes '-1/2' for an option)."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and nxt is not None
                and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == ".")):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    ns = parser.parse_args(_join_negative_values(argv))
    cfg = RunConfig.from_namespace(ns)
    try:
        return run(cfg)
    except (UsageError, RegimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
