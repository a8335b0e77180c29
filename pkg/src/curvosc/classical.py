"""Classical curved oscillator in spherical canonical coordinates.

Phase space is (theta, phi, zeta; p_theta, p_phi, p_zeta) with p_zeta = omega
conserved and zeta cyclic.  The Hamiltonian is

    H = p_theta**2 + p_phi**2 / S_k(theta)**2 + omega**2 T_k(theta)**2.

Phase-space functions are built symbolically with sympy in terms of
s = S_k(theta) and c = C_k(theta); theta-derivatives use the chain rule
d/dtheta = c d/ds - k s d/dc, so Poisson brackets use exact partials.
Trajectories are integrated with fixed-step RK4.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from functools import lru_cache
import cmath
import math
from typing import Callable

import numpy as np
import sympy as sp
from scipy.optimize import brentq, minimize_scalar

from curvosc.ktrig import as_curvature, c_kappa, s_kappa, t_kappa

__all__ = [
    "PhasePoint",
    "OrbitInvariants",
    "Sample",
    "Trajectory",
    "SingularityError",
    "InadmissibleError",
    "StepSizeError",
    "PhaseFunction",
    "classical_generators",
    "poisson_bracket",
    "poisson_bracket_fd",
    "hamiltonian_classical",
    "invariants",
    "df_tensor",
    "embed",
    "effective_potential",
    "orbit_start",
    "integrate",
    "orbit_residual",
    "flat_cartesian",
    "constraint_residual",
    "drift_report",
    "trajectory_deviation",
    "df_flat_deviation",
    "loglog_slope",
]


class SingularityError(ArithmeticError):
    """The point lies on a coordinate singularity (S_k = 0 with p_phi != 0, or C_k <= 0)."""


class InadmissibleError(ValueError):
    """No real orbit exists for the requested (E, ell)."""


class StepSizeError(RuntimeError):
    """Relative energy drift exceeded the rejection threshold; reduce dt."""


@dataclass(frozen=True)
class PhasePoint:
    theta: float
    phi: float
    p_theta: float
    p_phi: float
    p_zeta: float
    zeta: float = 0.0

    def as_tuple(self) -> tuple:
        return (self.theta, self.phi, self.zeta, self.p_theta, self.p_phi, self.p_zeta)


@dataclass(frozen=True)
class OrbitInvariants:
    """q_a**2 = 4 A+ A-, q_b**2 = 4 B+ B-, 4 A+ B- = q_a q_b exp(2i phi0)."""

    q_a: float
    q_b: float
    phi0: float | None
    E: float
    ell: float
    qab: complex

    @property
    def qa2(self) -> float:
        return self.q_a ** 2

    @property
    def qb2(self) -> float:
        return self.q_b ** 2


# ---------------------------------------------------------------------------
# symbolic phase-space functions

_s, _c, _th, _ph, _ze, _pt, _pp, _pz, _k = sp.symbols("s c theta phi zeta p_theta p_phi p_zeta kappa", real=True)
_ARGS = (_s, _c, _ph, _ze, _pt, _pp, _pz, _k)


def _d_theta(expr):
    return sp.diff(expr, _s) * _c - _k * _s * sp.diff(expr, _c)


class PhaseFunction:
    """A phase-space function with compiled value and exact partial derivatives."""

    def __init__(self, name: str, expr):
        self.name = name
        self.expr = sp.sympify(expr)
        grads = [_d_theta(self.expr), sp.diff(self.expr, _ph), sp.diff(self.expr, _ze),
                 sp.diff(self.expr, _pt), sp.diff(self.expr, _pp), sp.diff(self.expr, _pz)]
        self._value = sp.lambdify(_ARGS, self.expr, modules="numpy")
        self._grad = sp.lambdify(_ARGS, grads, modules="numpy")

    @staticmethod
    def _args(k: float, pt: PhasePoint):
        s = float(s_kappa(k, pt.theta))
        c = float(c_kappa(k, pt.theta))
        return (s, c, pt.phi, pt.zeta, pt.p_theta, pt.p_phi, pt.p_zeta, k)

    def __call__(self, k, point: PhasePoint) -> complex:
        return complex(self._value(*self._args(float(as_curvature(k)), point)))

    def gradient(self, k, point: PhasePoint) -> np.ndarray:
        """Partials (d_theta, d_phi, d_zeta, d_ptheta, d_pphi, d_pzeta)."""
        g = self._grad(*self._args(float(as_curvature(k)), point))
        return np.array([complex(x) for x in g])

    def __repr__(self):
        return f"PhaseFunction({self.name})"


@lru_cache(maxsize=1)
def _symbolic() -> dict:
    I = sp.I
    T = _s / _c
    X = _pp / T + _pz * T
    Y = -_pp / T + _pz * T
    ea, eb = sp.exp(I * _ph), sp.exp(-I * _ph)
    zm, zp = sp.exp(-I * _ze * _k), sp.exp(I * _ze * _k)
    f = {
        "A+": sp.Rational(1, 2) * ea * zm * (-I * _pt + X),
        "A-": sp.Rational(1, 2) * eb * zp * (I * _pt + X),
        "A3": sp.Rational(1, 2) * (-_pz + _k * _pp),
        "B+": sp.Rational(1, 2) * eb * zm * (-I * _pt + Y),
        "B-": sp.Rational(1, 2) * ea * zp * (I * _pt + Y),
        "B3": sp.Rational(1, 2) * (_pz + _k * _pp),
    }
    # inverse of A+ = (a1+ + i a2+)/2, B+ = (a1+ - i a2+)/2, A- = (a1- - i a2-)/2, B- = (a1- + i a2-)/2
    f["a1+"] = f["A+"] + f["B+"]
    f["a2+"] = -I * (f["A+"] - f["B+"])
    f["a1-"] = f["A-"] + f["B-"]
    f["a2-"] = I * (f["A-"] - f["B-"])
    f["J01"] = sp.cos(_ph) * _pt - sp.sin(_ph) * _pp / T
    f["J02"] = sp.sin(_ph) * _pt + sp.cos(_ph) * _pp / T
    f["J12"] = _pp
    f["J21"] = -_pp
    f["H"] = _pt ** 2 + _pp ** 2 / _s ** 2 + _pz ** 2 * T ** 2
    f["QAA"] = f["A+"] * f["A-"]
    f["QBB"] = f["B+"] * f["B-"]
    f["QAB"] = f["A+"] * f["B-"]
    xs = {1: T * sp.cos(_ph), 2: T * sp.sin(_ph)}  # x_i / x_0
    for i, j in ((1, 1), (1, 2), (2, 2)):
        f[f"F{i}{j}"] = sp.Rational(1, 2) * (f[f"a{j}+"] * f[f"a{i}-"] + f[f"a{i}+"] * f[f"a{j}-"])
        jj = f[f"J0{i}"] * f[f"J0{j}"]
        f[f"F{i}{j}[w^2]"] = _pz ** 2 * xs[i] * xs[j] + jj
        f[f"F{i}{j}[w^2-k^2/4]"] = (_pz ** 2 - _k ** 2 / 4) * xs[i] * xs[j] + jj
    f["D12"] = (f["a1+"] * f["a2-"] - f["a2+"] * f["a1-"]) / (2 * I)
    f["I01"] = f["a1+"] * f["a1-"]
    f["I02"] = f["a2+"] * f["a2-"]
    f["I12"] = _pp ** 2
    f["p_theta"] = _pt
    f["p_phi"] = _pp
    f["p_zeta"] = _pz
    f["phi"] = _ph
    f["zeta"] = _ze
    return f


@lru_cache(maxsize=1)
def classical_generators() -> dict[str, PhaseFunction]:
    """All phase-space functions, keyed by name.

    Spherical basis: A+, A-, A3, B+, B-, B3 (A+ carries e^{i phi} e^{-i k zeta},
    B- carries e^{i phi} e^{+i k zeta}); parallel basis a1+-, a2+-; the fields
    J01, J02, J12; H; the invariants QAA, QBB, QAB = A+ B-; the DF tensor F_ij
    (from the a-products and from both coefficient variants), D12, I01, I02, I12.
    """
    return {name: PhaseFunction(name, e) for name, e in _symbolic().items()}


def poisson_bracket(f: PhaseFunction, g: PhaseFunction, k, point: PhasePoint) -> complex:
    """{f, g} from exact partials over (theta, p_theta), (phi, p_phi), (zeta, p_zeta)."""
    df, dg = f.gradient(k, point), g.gradient(k, point)
    return complex(sum(df[i] * dg[i + 3] - df[i + 3] * dg[i] for i in range(3)))


def poisson_bracket_fd(f: Callable[[PhasePoint], complex], g: Callable[[PhasePoint], complex],
                       point: PhasePoint, h: float = 1e-6) -> complex:
    """{f, g} by central differences for arbitrary callables of a PhasePoint."""
    coords = ("theta", "phi", "zeta")
    moms = ("p_theta", "p_phi", "p_zeta")

    def partial(fn, name):
        base = asdict(point)
        up, dn = dict(base), dict(base)
        up[name] += h
        dn[name] -= h
        return (complex(fn(PhasePoint(**up))) - complex(fn(PhasePoint(**dn)))) / (2 * h)

    return sum(partial(f, q) * partial(g, p) - partial(f, p) * partial(g, q) for q, p in zip(coords, moms))


# ---------------------------------------------------------------------------
# fast numerics


def _trig(k: float, theta: float) -> tuple[float, float]:
    if k > 0:
        r = math.sqrt(k)
        return math.sin(r * theta) / r, math.cos(r * theta)
    if k < 0:
        r = math.sqrt(-k)
        return math.sinh(r * theta) / r, math.cosh(r * theta)
    return theta, 1.0


def hamiltonian_classical(k, point: PhasePoint) -> float:
    k = float(as_curvature(k))
    s, c = _trig(k, point.theta)
    if point.p_phi != 0 and s == 0:
        raise SingularityError("S_k(theta) = 0 with nonzero p_phi")
    if c == 0:
        raise SingularityError("C_k(theta) = 0")
    kin = point.p_theta ** 2 + ((point.p_phi / s) ** 2 if point.p_phi else 0.0)
    return kin + point.p_zeta ** 2 * (s / c) ** 2


def effective_potential(k, omega: float, ell: float, theta):
    """U(theta) = ell**2 / S_k**2 + omega**2 T_k**2."""
    th = np.asarray(theta, dtype=float)
    s = np.asarray(s_kappa(float(as_curvature(k)), th))
    t = np.asarray(t_kappa(float(as_curvature(k)), th))
    with np.errstate(divide="ignore"):
        out = (ell ** 2 / s ** 2 if ell else 0.0) + omega ** 2 * t ** 2
    return out[()] if np.ndim(out) == 0 else out


def _qs(k: float, point: PhasePoint):
    s, c = _trig(k, point.theta)
    t = s / c
    pt, ell, w = point.p_theta, point.p_phi, point.p_zeta
    X = ell / t + w * t
    Y = -ell / t + w * t
    qa2 = pt * pt + X * X
    qb2 = pt * pt + Y * Y
    z = complex(pt * pt + X * Y, 2 * pt * ell / t)
    qab = cmath.exp(2j * point.phi) * z
    return qa2, qb2, qab, t


def invariants(k, point: PhasePoint) -> OrbitInvariants:
    """Orbit constants q_a, q_b, phi0 together with E and ell.

    The squared moduli are normalized as q_a**2 = 4 A+ A- = p_theta**2 +
    (ell/T + omega T)**2, which makes q_a**2 - q_b**2 = 4 omega ell.
    phi0 is None when q_a q_b vanishes (circular orbits).
    """
    kf = float(as_curvature(k))
    qa2, qb2, qab, _ = _qs(kf, point)
    qa, qb = math.sqrt(qa2), math.sqrt(qb2)
    scale = max(qa2 + qb2, 1e-300)
    phi0 = cmath.phase(qab) / 2 if abs(qab) > 1e-12 * scale else None
    return OrbitInvariants(qa, qb, phi0, hamiltonian_classical(kf, point), point.p_phi, qab)


def df_tensor(k, point: PhasePoint, variant: str = "a") -> dict[str, float]:
    """Demkov-Fradkin components F11, F12, F22 and D12 at a point.

    ``variant`` selects the construction: "a" (symmetrized a+- products),
    "w^2" or "w^2-k^2/4" (the closed forms with that potential coefficient).
    """
    g = classical_generators()
    suffix = "" if variant == "a" else f"[{variant}]"
    out = {n: g[f"{n}{suffix}"](k, point).real for n in ("F11", "F12", "F22")}
    out["D12"] = g["D12"](k, point).real
    return out


def flat_cartesian(point: PhasePoint) -> tuple[float, float, float, float]:
    """(x1, x2, p1, p2) of a flat polar phase point."""
    th, ph, pt, pp = point.theta, point.phi, point.p_theta, point.p_phi
    co, si = math.cos(ph), math.sin(ph)
    return th * co, th * si, co * pt - si * pp / th, si * pt + co * pp / th


def embed(k, theta, phi):
    """Ambient point (x0, x1, x2) = (C_k, S_k cos phi, S_k sin phi)."""
    k = as_curvature(k)
    s = s_kappa(k, theta)
    return c_kappa(k, theta), s * np.cos(phi), s * np.sin(phi)


def constraint_residual(k, theta) -> float:
    """|x0**2 + k (x1**2 + x2**2) - 1|, divided by x0**2 when |x0| > 1."""
    kf = float(as_curvature(k))
    s, c = _trig(kf, theta)
    if abs(c) > 1:
        return abs(1 + kf * (s / c) ** 2 - (1 / c) ** 2)
    return abs(c * c + kf * s * s - 1)


# ---------------------------------------------------------------------------
# initial conditions and integration


def _chart_limit(k: float) -> float:
    return math.pi / (2 * math.sqrt(k)) if k > 0 else math.inf


def orbit_start(k, omega: float, ell: float, energy: float, rtol: float = 1e-12) -> PhasePoint:
    """Turning point with p_theta = 0 on the orbit of energy E and momentum ell.

    ell != 0 starts at the inner turning point (at the potential minimum when
    E equals it, i.e. a circular orbit); ell = 0 starts at the outer one.
    """
    kf = float(as_curvature(k))
    if omega <= 0:
        raise InadmissibleError("omega must be positive")
    lim = _chart_limit(kf)
    hi = lim * (1 - 1e-9) if math.isfinite(lim) else 60.0 / math.sqrt(abs(kf)) if kf else 1e3
    U = lambda th: float(effective_potential(kf, omega, ell, th))  # noqa: E731
    if ell == 0:
        if energy <= 0:
            raise InadmissibleError("E must be positive for ell = 0")
        if U(hi) <= energy:
            raise InadmissibleError(f"no turning point: E = {energy} exceeds the potential range")
        th0 = brentq(lambda th: U(th) - energy, 0.0, hi, xtol=1e-15, rtol=1e-15)
        return PhasePoint(th0, 0.0, 0.0, 0.0, omega)
    # bracket the minimum on a geometric grid first: for k < 0 the potential
    # can have an interior minimum well below its asymptote omega^2/|k|
    grid = np.geomspace(1e-9 * hi, hi, 4001)
    i = int(np.argmin(effective_potential(kf, omega, ell, grid)))
    lo_b, hi_b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]

    def dU(th):
        s, c = _trig(kf, th)
        return -2 * ell * ell * c / s ** 3 + 2 * omega * omega * s / c ** 3

    if dU(lo_b) < 0 < dU(hi_b):
        # the root of U' is far better conditioned than the minimum of U
        th_min = brentq(dU, lo_b, hi_b, xtol=1e-16, rtol=1e-15)
    else:
        th_min = float(minimize_scalar(U, bounds=(lo_b, hi_b), method="bounded",
                                       options={"xatol": 1e-14}).x)
    u_min = U(th_min)
    if energy < u_min * (1 - rtol):
        if abs(energy - u_min) <= 1e-7 * u_min:
            return PhasePoint(th_min, 0.0, 0.0, ell, omega)
        raise InadmissibleError(f"E = {energy} is below the potential minimum {u_min:.12g}")
    if energy <= u_min * (1 + 1e-9):
        return PhasePoint(th_min, 0.0, 0.0, ell, omega)
    lo = th_min
    while U(lo) < energy:
        lo /= 2
    th0 = brentq(lambda th: U(th) - energy, lo, th_min, xtol=1e-15, rtol=1e-15)
    return PhasePoint(th0, 0.0, 0.0, ell, omega)


def _rhs_polar(k: float, y):
    th, ph, ze, pt, pp, pz = y
    s, c = _trig(k, th)
    t = s / c
    inv_s = 1.0 / s if pp else 0.0
    return (
        2 * pt,
        2 * pp * inv_s * inv_s,
        2 * pz * t * t,
        2 * pp * pp * c * inv_s ** 3 - 2 * pz * pz * t / (c * c),
        0.0,
        0.0,
    )


def _rhs_gnomonic(k: float, y):
    """Hamilton's equations for H = (1 + k u^2)(p^2 + k (u.p)^2) + omega^2 u^2, u = x / x0."""
    u1, u2, ze, p1, p2, pz = y
    uu = u1 * u1 + u2 * u2
    up = u1 * p1 + u2 * p2
    pp = p1 * p1 + p2 * p2
    g = 1 + k * uu
    kin = pp + k * up * up
    return (
        g * (2 * p1 + 2 * k * up * u1),
        g * (2 * p2 + 2 * k * up * u2),
        2 * pz * uu,
        -(2 * k * u1 * kin + g * 2 * k * up * p1 + 2 * pz * pz * u1),
        -(2 * k * u2 * kin + g * 2 * k * up * p2 + 2 * pz * pz * u2),
        0.0,
    )


def _to_gnomonic(k: float, y):
    th, ph, ze, pt, pp, pz = y
    s, c = _trig(k, th)
    r = s / c
    co, si = math.cos(ph), math.sin(ph)
    pr = pt * c * c
    pperp = pp / r if pp else 0.0
    return [r * co, r * si, ze, pr * co - pperp * si, pr * si + pperp * co, pz]


def _arctan_k(k: float, r: float) -> float:
    if k > 0:
        q = math.sqrt(k)
        return math.atan(q * r) / q
    if k < 0:
        q = math.sqrt(-k)
        return math.atanh(q * r) / q
    return r


def _from_gnomonic(k: float, y, phi_prev: float):
    """Polar state from a gnomonic one; the sign of theta keeps phi continuous."""
    u1, u2, ze, p1, p2, pz = y
    r = math.hypot(u1, u2)
    ell = u1 * p2 - u2 * p1
    if r == 0:
        return [0.0, phi_prev, ze, 0.0, ell, pz]
    ang = math.atan2(u2, u1)
    d = (ang - phi_prev + math.pi) % (2 * math.pi) - math.pi
    if abs(d) > math.pi / 2:
        r = -r
        d = (ang - phi_prev) % (2 * math.pi) - math.pi
    phi = phi_prev + d
    pr = (u1 * p1 + u2 * p2) / r
    th = _arctan_k(k, r)
    return [th, phi, ze, pr * (1 + k * r * r), ell, pz]


def _rk4(rhs, k, y, dt):
    k1 = rhs(k, y)
    k2 = rhs(k, [a + 0.5 * dt * b for a, b in zip(y, k1)])
    k3 = rhs(k, [a + 0.5 * dt * b for a, b in zip(y, k2)])
    k4 = rhs(k, [a + dt * b for a, b in zip(y, k3)])
    return [a + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]


@dataclass
class Sample:
    t: float
    point: PhasePoint
    ambient: tuple[float, float, float]
    inv: OrbitInvariants
    constraint: float


@dataclass
class Trajectory:
    kappa: float
    dt: float
    samples: list[Sample]
    integrator: str = "rk4"
    event: str | None = None
    drift: dict = field(default_factory=dict)

    @property
    def halted(self) -> bool:
        return self.event is not None


def _singular(k: float, th: float, pp: float) -> str | None:
    s, c = _trig(k, th)
    if not math.isfinite(s) or not math.isfinite(c):
        return f"overflow at theta = {th!r}"
    if k > 0 and c <= 0:
        return f"left the hemisphere (C_k <= 0) at theta = {th!r}"
    if pp != 0 and abs(s) < 1e-9:
        return f"reached the pole S_k = 0 with ell != 0 at theta = {th!r}"
    return None


def _sample(k: float, t: float, y) -> Sample:
    pt = PhasePoint(y[0], y[1], y[3], y[4], y[5], y[2])
    amb = tuple(float(v) for v in embed(k, y[0], y[1]))
    return Sample(t, pt, amb, invariants(k, pt), constraint_residual(k, y[0]))


CHARTS = ("auto", "polar", "gnomonic")


def integrate(k, start: PhasePoint, tmax: float, dt: float = 1e-3, stride: int = 1,
              reject_drift: float = 1e-4, chart: str = "polar") -> Trajectory:
    """Fixed-step RK4 of Hamilton's equations, sampling every ``stride`` steps.

    ``chart`` selects the coordinates the steps are taken in: "polar" is
    (theta, phi) directly; "gnomonic" is u = (x1, x2) / x0, where the same
    Hamiltonian reads (1 + k u^2)(p^2 + k (u.p)^2) + omega^2 u^2 and has no
    centrifugal singularity (but not valid for open orbits at k < 0, where
    u approaches the boundary 1/sqrt|k| exponentially).  "auto" picks
    gnomonic for k >= 0 and polar for k < 0.  Samples are always reported
    in the polar chart.

    Halts with ``event`` set at a coordinate singularity.  Raises
    StepSizeError if the relative energy drift exceeds ``reject_drift``.
    """
    kf = float(as_curvature(k))
    if dt <= 0 or tmax < 0 or stride < 1:
        raise ValueError("need dt > 0, tmax >= 0 and stride >= 1")
    if chart not in CHARTS:
        raise ValueError(f"unknown chart {chart!r}")
    if chart == "auto":
        chart = "gnomonic" if kf >= 0 else "polar"
    ev = _singular(kf, start.theta, start.p_phi)
    if ev:
        raise SingularityError(ev)
    y = [start.theta, start.phi, start.zeta, start.p_theta, start.p_phi, start.p_zeta]
    nsteps = int(round(tmax / dt))
    samples = [_sample(kf, 0.0, y)]
    e0 = samples[0].inv.E
    event = None
    if chart == "gnomonic":
        z = _to_gnomonic(kf, y)
        phi_prev = start.phi
        for i in range(1, nsteps + 1):
            z = _rk4(_rhs_gnomonic, kf, z, dt)
            r2 = z[0] * z[0] + z[1] * z[1]
            if not math.isfinite(r2) or (kf < 0 and kf * r2 <= -1) or r2 > 1e16:
                event = f"left the chart at t = {i * dt:g}"
                break
            if i % stride == 0 or i == nsteps:
                y = _from_gnomonic(kf, z, phi_prev)
                phi_prev = y[1]
                event = _check_sample(samples, kf, round(i * dt, 12), y, e0, reject_drift)
                if event:
                    break
    else:
        for i in range(1, nsteps + 1):
            y = _rk4(_rhs_polar, kf, y, dt)
            event = _singular(kf, y[0], y[4])
            if event:
                break
            if i % stride == 0 or i == nsteps:
                event = _check_sample(samples, kf, round(i * dt, 12), y, e0, reject_drift)
                if event:
                    break
    traj = Trajectory(kf, dt, samples, integrator=f"rk4-{chart}", event=event)
    traj.drift = drift_report(traj)
    return traj


def _check_sample(samples, kf, t, y, e0, reject_drift):
    ev = _singular(kf, y[0], y[4]) if y[0] != 0 else None
    if ev:
        return ev
    smp = _sample(kf, t, y)
    samples.append(smp)
    if abs(smp.inv.E - e0) > reject_drift * abs(e0):
        raise StepSizeError(f"relative energy drift {abs(smp.inv.E - e0) / abs(e0):.3e} "
                            f"at t = {t:g}; reduce dt")
    return None


def drift_report(traj: Trajectory) -> dict:
    """Maximum drifts along a trajectory.

    E and ell are relative to their initial magnitude; q_a**2 and q_b**2 are
    relative to q_a**2 + q_b**2 at t = 0; arg QAB is the absolute unwrapped
    change in radians (None when q_a q_b vanishes initially).  ``split`` is
    max |q_a**2 - q_b**2 - 4 omega ell|.
    """
    s0 = traj.samples[0]
    e0, l0 = s0.inv.E, s0.inv.ell
    norm = s0.inv.qa2 + s0.inv.qb2
    d = {
        "E": max(abs(s.inv.E - e0) for s in traj.samples) / abs(e0),
        "ell": max(abs(s.inv.ell - l0) for s in traj.samples) / max(abs(l0), 1.0),
        "qa2": max(abs(s.inv.qa2 - s0.inv.qa2) for s in traj.samples) / norm,
        "qb2": max(abs(s.inv.qb2 - s0.inv.qb2) for s in traj.samples) / norm,
        "split": max(abs(s.inv.qa2 - s.inv.qb2 - 4 * s.point.p_zeta * s.inv.ell) for s in traj.samples),
        "constraint": max(s.constraint for s in traj.samples),
    }
    if s0.inv.phi0 is None:
        d["arg_qab"] = None
    else:
        args = np.unwrap([cmath.phase(s.inv.qab) for s in traj.samples])
        d["arg_qab"] = float(np.max(np.abs(args - args[0])))
    return d


def _wrap(a):
    return (np.asarray(a) + np.pi) % (2 * np.pi) - np.pi


def _turning_gap(k: float, point: PhasePoint, qa: float, qb: float) -> float:
    y = [point.theta, point.phi, point.zeta, point.p_theta, point.p_phi, point.p_zeta]
    for _ in range(6):
        tau = -y[3] / _rhs_polar(k, y)[3]
        y = _rk4(_rhs_polar, k, y, tau)
    s, c = _trig(k, y[0])
    t = s / c
    X = y[4] / t + y[5] * t
    Y = -y[4] / t + y[5] * t
    return float(max(abs(1 - abs(X) / qa), abs(1 - abs(Y) / qb)))


def orbit_residual(k, traj: Trajectory) -> dict:
    """Orbit equations evaluated along a trajectory with the t = 0 constants.

    derived:        cos 2(phi - phi0) = ((q_a^2 + q_b^2)/2 - 2 ell^2/T^2) / (q_a q_b)
    printed:        cos 2(phi - phi0) = (q_a^2 + q_b^2 + 2 ell^2/T^2) / (q_a q_b)
    arccos_derived: 2(phi - phi0) = sgn(p_theta) (arccos(X/q_a) - arccos(Y/q_b))  (mod 2 pi)
    arccos_printed: 2(phi - phi0) = arccos(X/q_a) + arccos(Y/q_b)                  (mod 2 pi)
    with X = ell/T + omega T and Y = -ell/T + omega T.  Also returns the
    turning-point gap: at every sign change of p_theta the turning point is
    located by Newton steps in time (RK4 sub-steps of the flow), and the gap
    is max(|1 - |X|/q_a|, |1 - |Y|/q_b|) there; it vanishes at exact turns.
    """
    kf = float(as_curvature(k))
    s0 = traj.samples[0].inv
    if s0.phi0 is None or s0.q_a * s0.q_b == 0:
        return {"applicable": False, "reason": "q_a q_b = 0 (circular orbit): phi0 undefined"}
    qa, qb, phi0, ell = s0.q_a, s0.q_b, s0.phi0, s0.ell
    pts = traj.samples
    th = np.array([s.point.theta for s in pts])
    ph = np.array([s.point.phi for s in pts])
    pt = np.array([s.point.p_theta for s in pts])
    w = np.array([s.point.p_zeta for s in pts])
    t = np.array([_trig(kf, x)[0] / _trig(kf, x)[1] for x in th])
    X = ell / t + w * t
    Y = -ell / t + w * t
    lhs = np.cos(2 * (ph - phi0))
    derived = ((qa ** 2 + qb ** 2) / 2 - 2 * ell ** 2 / t ** 2) / (qa * qb)
    printed = (qa ** 2 + qb ** 2 + 2 * ell ** 2 / t ** 2) / (qa * qb)
    ca, cb = np.clip(X / qa, -1, 1), np.clip(Y / qb, -1, 1)
    sgn = np.where(pt >= 0, 1.0, -1.0)
    arc_d = _wrap(2 * (ph - phi0) - sgn * (np.arccos(ca) - np.arccos(cb)))
    arc_p = _wrap(2 * (ph - phi0) - (np.arccos(ca) + np.arccos(cb)))
    gaps = [_turning_gap(kf, s.point, qa, qb)
            for s, nxt in zip(pts, pts[1:]) if s.point.p_theta * nxt.point.p_theta < 0]
    return {
        "applicable": True,
        "derived": float(np.max(np.abs(lhs - derived))),
        "printed": float(np.max(np.abs(lhs - printed))),
        "arccos_derived": float(np.max(np.abs(arc_d))),
        "arccos_printed": float(np.max(np.abs(arc_p))),
        "turning_gap": max(gaps, default=0.0),
        "turning_points": len(gaps),
        "per_sample_derived": np.abs(lhs - derived),
        "per_sample_printed": np.abs(lhs - printed),
    }


# ---------------------------------------------------------------------------
# zero-curvature limit


def trajectory_deviation(kappas, start: PhasePoint, tmax: float = 5.0, dt: float = 1e-3) -> list[tuple[float, float]]:
    """max over samples of |(theta, phi)_k - (theta, phi)_0| for each k."""
    ref = integrate(0, start, tmax, dt)
    th0 = np.array([s.point.theta for s in ref.samples])
    ph0 = np.array([s.point.phi for s in ref.samples])
    out = []
    for k in kappas:
        tr = integrate(float(k), start, tmax, dt)
        if tr.halted or len(tr.samples) != len(ref.samples):
            raise SingularityError(f"trajectory at k = {k} halted: {tr.event}")
        th = np.array([s.point.theta for s in tr.samples])
        ph = np.array([s.point.phi for s in tr.samples])
        out.append((float(k), float(max(np.max(np.abs(th - th0)), np.max(np.abs(ph - ph0))))))
    return out


def df_flat_deviation(kappas, points, sign: int = +1) -> list[tuple[float, float]]:
    """max |F_ij^k - (omega^2 x_i x_j + sign p_i p_j)| over points and components.

    The flat reference uses the Cartesian data of the same (theta, phi,
    p_theta, p_phi) read as flat polar coordinates.
    """
    out = []
    for k in kappas:
        worst = 0.0
        for pt in points:
            x1, x2, p1, p2 = flat_cartesian(pt)
            w2 = pt.p_zeta ** 2
            ref = {"F11": w2 * x1 * x1 + sign * p1 * p1, "F12": w2 * x1 * x2 + sign * p1 * p2,
                   "F22": w2 * x2 * x2 + sign * p2 * p2}
            got = df_tensor(float(k), pt)
            worst = max(worst, *(abs(got[n] - ref[n]) for n in ref))
        out.append((float(k), worst))
    return out


def loglog_slope(pairs) -> float:
    """Least-squares slope of log(error) against log(k)."""
    ks = np.log([float(p[0]) for p in pairs])
    es = np.log([float(p[1]) for p in pairs])
    return float(np.polyfit(ks, es, 1)[0])
