"""Quantum operators of the curved oscillator acting on :class:`WaveFunction`.

Operators are built from the wavefunction primitives and compose right to
left.  Scalars that the operator formulas write as ``omega`` or ``J_3`` are
read from the labels of the term they meet at the point of application:
``-i d/dzeta -> omega`` and ``-i d/dphi -> ell``.

Relations are checked extensionally: both sides are applied to seeded probe
wavefunctions and the exact difference must vanish.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from fractions import Fraction
import random

from gmpy2 import mpq
from typing import Callable

from curvosc.ktrig import Curvature, as_curvature
from curvosc.wavealg import CRational, I, RegimeError, WaveFunction

HALF = mpq(1, 2)


class LinearOperator:
    """A linear map on wavefunctions with a readable descriptor."""

    __slots__ = ("action", "descriptor")

    def __init__(self, action: Callable[[WaveFunction], WaveFunction], descriptor: str):
        self.action = action
        self.descriptor = descriptor

    def __call__(self, f: WaveFunction) -> WaveFunction:
        return self.action(f)

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        return LinearOperator(lambda f: self.action(other.action(f)),
                              f"{self.descriptor}*{other.descriptor}")

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        return LinearOperator(lambda f: self.action(f) + other.action(f),
                              f"({self.descriptor} + {other.descriptor})")

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        return LinearOperator(lambda f: self.action(f) - other.action(f),
                              f"({self.descriptor} - {other.descriptor})")

    def __neg__(self) -> "LinearOperator":
        return LinearOperator(lambda f: -self.action(f), f"-{self.descriptor}")

    def __rmul__(self, c) -> "LinearOperator":
        c = CRational.of(c)
        return LinearOperator(lambda f: self.action(f).scale(c), f"{c!r}*{self.descriptor}")

    def power(self, n: int) -> "LinearOperator":
        op = identity()
        for _ in range(n):
            op = self @ op
        return op

    def __repr__(self):
        return f"LinearOperator({self.descriptor})"


def identity() -> LinearOperator:
    return LinearOperator(lambda f: f, "1")


def label_scalar(fn: Callable[[int, Fraction], object], descriptor: str) -> LinearOperator:
    """Multiplication by a scalar read from the (ell, omega) labels of each term."""
    return LinearOperator(lambda f: f.times_label(fn), descriptor)


def constant(c, descriptor: str | None = None) -> LinearOperator:
    c = CRational.of(c)
    return LinearOperator(lambda f: f.scale(c), descriptor or repr(c))


def commutator(x: LinearOperator, y: LinearOperator) -> LinearOperator:
    return LinearOperator(lambda f: x(y(f)) - y(x(f)), f"[{x.descriptor}, {y.descriptor}]")


D_THETA = LinearOperator(WaveFunction.d_theta, "d_theta")
MUL_T = LinearOperator(WaveFunction.mul_t, "T")
DIV_T = LinearOperator(WaveFunction.div_t, "1/T")


def _shift_ell(d: int) -> LinearOperator:
    return LinearOperator(lambda f: f.shift_ell(d), f"e^({d:+d}i phi)")


def _shift_n(d: int, flat: bool) -> LinearOperator:
    if flat:
        return identity()
    return LinearOperator(lambda f: f.shift_n(d), f"e^({-d:+d}i k zeta)")


# ---------------------------------------------------------------------------
# spherical basis


def _bracket(k: Curvature, sign_d: int, sign_cot: int) -> LinearOperator:
    """1/2 (sign_d d_theta + sign_cot (1/2 + i d_phi)/T + (-i d_zeta + k/2) T).

    Applied in a single pass: on S^a C^b (theta^a e^{-sigma theta^2/2} when
    k = 0) the bracket only produces the two neighbours S^(a-1) C^(b+1) and
    S^(a+1) C^(b-1).
    """
    kap = mpq(k.kappa)
    flat = kap == 0
    half_k = kap / 2

    def rule(key):
        a, b, ell, label = key
        lo = (sign_d * a + sign_cot * (HALF - ell)) / 2
        if flat:
            hi = (label - sign_d * label) / 2
            return [((a - 1, b, ell, label), lo), ((a + 1, b, ell, label), hi)]
        hi = (label * kap + half_k - sign_d * kap * b) / 2
        return [((a - 1, b + 1, ell, label), lo), ((a + 1, b - 1, ell, label), hi)]

    sd = "+" if sign_d > 0 else "-"
    sc = "+" if sign_cot > 0 else "-"
    return LinearOperator(lambda f: f.map_keys(rule), f"1/2({sd}d_theta {sc}(1/2+i d_phi)/T + (-i d_zeta+k/2)T)")


def spherical_generators(k, mutate: str | None = None) -> dict[str, LinearOperator]:
    """A+, A-, A3, B+, B-, B3, L3 and Omega in the (theta, phi, zeta) realization.

    Phase factors act where they are written: in A+ the shifts of ell and of
    the frequency happen before the bracket, so the bracket reads the
    shifted labels.  ``mutate="flip_A3"`` negates A3 (negative control only).
    """
    k = as_curvature(k)
    kap = k.kappa
    flat = kap == 0
    ops = {
        "A+": (_bracket(k, -1, -1) @ _shift_ell(+1) @ _shift_n(-1, flat)),
        "A-": (_shift_n(+1, flat) @ _shift_ell(-1) @ _bracket(k, +1, -1)),
        "B-": (_shift_ell(-1) @ _bracket(k, -1, +1) @ _shift_n(-1, flat)),
        "B+": (_shift_n(+1, flat) @ _bracket(k, +1, +1) @ _shift_ell(+1)),
        "A3": label_scalar(lambda ell, w: (-w + kap * ell) / 2, "A3"),
        "B3": label_scalar(lambda ell, w: (w + kap * ell) / 2, "B3"),
        "L3": label_scalar(lambda ell, w: ell, "L3"),
        "Omega": label_scalar(lambda ell, w: w, "Omega"),
    }
    for name in ("A+", "A-", "B+", "B-"):
        ops[name].descriptor = name
    if mutate == "flip_A3":
        ops["A3"] = label_scalar(lambda ell, w: (w - kap * ell) / 2, "A3(flipped)")
    elif mutate is not None:
        raise ValueError(f"unknown mutation {mutate!r}")
    return ops


def j12(k=None) -> LinearOperator:
    """J_12 = -d_phi, i.e. the scalar -i*ell."""
    return label_scalar(lambda ell, w: -I * ell, "J12")


def parallel_ops(k, gens: dict | None = None) -> dict[str, LinearOperator]:
    """a1+, a1-, a2+, a2- obtained by inverting the change to the spherical basis."""
    g = gens or spherical_generators(k)
    ops = {
        "a1+": g["A+"] + g["B-"],
        "a2+": (-I) * (g["A+"] - g["B-"]),
        "a1-": g["A-"] + g["B+"],
        "a2-": I * (g["A-"] - g["B+"]),
    }
    for name, op in ops.items():
        op.descriptor = name
    return ops


# ---------------------------------------------------------------------------
# Hamiltonians, Casimirs, symmetries

HAMILTONIAN_MODES = ("viaAB", "viaAB_printed", "viaShift", "viaCasimir", "flat", "differential")


def casimirs(k, gens: dict | None = None) -> dict[str, LinearOperator]:
    """Both Casimirs, each in its two equivalent orderings."""
    k = as_curvature(k)
    kap = k.kappa
    if kap == 0:
        raise RegimeError("the Casimirs are singular at zero curvature")
    g = gens or spherical_generators(k)
    A3, B3 = g["A3"], g["B3"]
    kc = constant(kap)
    c = Fraction(4) / kap
    ops = {
        "C1": c * (kap * (g["A+"] @ g["A-"]) + A3 @ (A3 - kc)),
        "C1_alt": c * (kap * (g["A-"] @ g["A+"]) + A3 @ (A3 + kc)),
        "C2": c * (kap * (g["B-"] @ g["B+"]) + B3 @ (B3 + kc)),
        "C2_alt": c * (kap * (g["B+"] @ g["B-"]) + B3 @ (B3 - kc)),
    }
    for name, op in ops.items():
        op.descriptor = name
    return ops


def hamiltonian(k, mode: str = "viaAB", gens: dict | None = None) -> LinearOperator:
    """Curved oscillator Hamiltonian in one of several equivalent forms.

    ``viaAB`` is ``4A+A- + (4/k)A3(A3-k) - (w^2-k^2)/k`` written out in the
    labels, which stays finite at k = 0.  ``viaAB_printed`` is the variant
    ``4A+A- - 2i w J3 + (2w+k) - k J3^2``; it exceeds the others by
    ``2 k ell`` and is kept for comparison only.  ``differential`` is the
    second-order operator
    ``-d_theta^2 + (ell^2 - 1/4)/S^2 - k/4 + (w^2 - k^2/4) T^2``.
    """
    k = as_curvature(k)
    kap = k.kappa
    g = gens or spherical_generators(k)
    if mode not in HAMILTONIAN_MODES:
        raise ValueError(f"unknown Hamiltonian mode {mode!r}")
    if mode == "flat" and kap != 0:
        raise RegimeError("flat mode requires zero curvature")
    if mode == "viaCasimir" and kap == 0:
        raise RegimeError("viaCasimir requires nonzero curvature")

    four_aa = 4 * (g["A+"] @ g["A-"])
    if mode == "viaAB":
        op = four_aa + label_scalar(
            lambda ell, w: -2 * (w + kap) * ell + kap * ell * ell + 2 * w + kap, "scalar")
    elif mode == "viaAB_printed":
        # -2i w J3 - k J3^2 with J3 -> -i ell
        op = four_aa + label_scalar(lambda ell, w: -2 * w * ell + 2 * w + kap + kap * ell * ell, "scalar")
    elif mode == "flat":
        op = four_aa + label_scalar(lambda ell, w: -2 * w * ell + 2 * w, "scalar")
    elif mode == "viaShift":
        a = parallel_ops(k, g)
        op = (a["a1+"] @ a["a1-"]) + (a["a2+"] @ a["a2-"]) + label_scalar(
            lambda ell, w: 2 * (w + kap / 2) + kap * ell * ell, "2(w+k/2) - k I12")
    elif mode == "viaCasimir":
        c = casimirs(k, g)
        op = HALF * (c["C1"] + c["C2"]) - label_scalar(lambda ell, w: (w * w - kap * kap) / kap, "(w^2-k^2)/k")
    else:
        op = (-(D_THETA @ D_THETA)
              + label_scalar(lambda ell, w: ell * ell - Fraction(1, 4), "(l^2-1/4)")
              @ LinearOperator(lambda f: f.mul_monomial(-2, 0), "S^-2")
              + constant(-kap / 4)
              + label_scalar(lambda ell, w: w * w - kap * kap / 4, "(w^2-k^2/4)")
              @ LinearOperator(WaveFunction.mul_t2, "T^2"))
    op.descriptor = f"H[{mode}]"
    return op


def symmetry_suite(k, gens: dict | None = None) -> dict[str, LinearOperator]:
    """Frequency-preserving symmetries built from the shift operators."""
    k = as_curvature(k)
    kap = k.kappa
    g = gens or spherical_generators(k)
    a = parallel_ops(k, g)
    J = j12(k)
    ops = {
        "QAA": g["A+"] @ g["A-"],
        "QBB": g["B+"] @ g["B-"],
        "QAB": g["A+"] @ g["B+"],
    }
    for i in (1, 2):
        for j in (1, 2):
            ops[f"Q{i}{j}"] = a[f"a{i}+"] @ a[f"a{j}-"]
    for i, j in ((1, 1), (1, 2), (2, 2)):
        ops[f"F{i}{j}"] = HALF * (a[f"a{j}+"] @ a[f"a{i}-"] + a[f"a{i}+"] @ a[f"a{j}-"])
    ops["D12"] = CRational(0, Fraction(-1, 2)) * (a["a1+"] @ a["a2-"] - a["a2+"] @ a["a1-"])
    ops["I12"] = J @ J
    shift = label_scalar(lambda ell, w: w + kap / 2, "(w+k/2)")
    ops["I01"] = a["a1+"] @ a["a1-"] + shift
    ops["I02"] = a["a2+"] @ a["a2-"] + shift
    for name, op in ops.items():
        op.descriptor = name
    return ops


def mu_constant(k, omega) -> Fraction:
    """Constant (w + k/2)^2 / k of the barred factorization."""
    kap = as_curvature(k).kappa
    if kap == 0:
        raise RegimeError("mu diverges at zero curvature")
    return (Fraction(omega) + kap / 2) ** 2 / kap


# ---------------------------------------------------------------------------
# probes and reports

PROBE_A = (HALF, Fraction(3, 2), Fraction(5, 2))
PROBE_B = tuple(Fraction(n, 2) for n in range(-5, 6, 2))
PROBE_SIGMA = (HALF, Fraction(1), Fraction(2))


def _rand_coeff(rng: random.Random) -> CRational:
    while True:
        re, im = rng.randint(-3, 3), rng.randint(-3, 3)
        if re or im:
            return CRational(Fraction(re), Fraction(im))


def probe_term(k, rng: random.Random, *, ell=None, nfreq=None, gsigma=None) -> WaveFunction:
    k = as_curvature(k)
    a = rng.choice(PROBE_A)
    b = rng.choice(PROBE_B)
    ell = rng.randint(-3, 3) if ell is None else ell
    c = _rand_coeff(rng)
    if k.kappa == 0:
        sig = rng.choice(PROBE_SIGMA) if gsigma is None else gsigma
        return WaveFunction.term(k, a, 0, ell=ell, gsigma=sig, coeff=c)
    n = rng.randint(-3, 3) if nfreq is None else nfreq
    return WaveFunction.term(k, a, b, ell=ell, nfreq=n, coeff=c)


def probes(k, seed: int, count: int = 20, **labels) -> list[WaveFunction]:
    """Seeded single-term probes spanning the exponent lattice the ladders generate."""
    rng = random.Random(seed)
    return [probe_term(k, rng, **labels) for _ in range(count)]


@dataclass
class AlgebraReport:
    relation: str
    regime: str
    probes: int
    seed: int
    max_residual: float
    exact: bool
    note: str = ""

    def to_json(self) -> dict:
        d = asdict(self)
        if not d["note"]:
            del d["note"]
        return d


def residual(f: WaveFunction) -> float:
    return max((abs(c) for _, c in f.items()), default=0.0)


def check_relation(name: str, lhs: LinearOperator, rhs: LinearOperator, k, seed: int,
                   count: int = 20, note: str = "", **labels) -> AlgebraReport:
    k = as_curvature(k)
    worst, exact = 0.0, True
    for p in probes(k, seed, count, **labels):
        diff = lhs(p) - rhs(p)
        if not diff.vanishes():
            exact = False
            worst = max(worst, residual(diff))
    return AlgebraReport(name, k.regime, count, seed, worst, exact, note)


def algebra_suite(k, seed: int = 0, count: int = 20, mutate: str | None = None) -> list[AlgebraReport]:
    """Every commutation relation of the spherical and parallel bases."""
    k = as_curvature(k)
    kap = k.kappa
    g = spherical_generators(k, mutate=mutate)
    A_p, A_m, A3, B_p, B_m, B3, L3 = (g[n] for n in ("A+", "A-", "A3", "B+", "B-", "B3", "L3"))
    zero = constant(0, "0")
    C = commutator
    rel = []

    def add(name, lhs, rhs, note=""):
        rel.append(check_relation(name, lhs, rhs, k, seed, count, note))

    if kap != 0:
        add("[A+,A-] = 2 A3", C(A_p, A_m), 2 * A3)
        add("[A3,A+] = k A+", C(A3, A_p), kap * A_p)
        add("[A3,A-] = -k A-", C(A3, A_m), (-kap) * A_m)
        add("[B-,B+] = -2 B3", C(B_m, B_p), -2 * B3)
        add("[B3,B-] = -k B-", C(B3, B_m), (-kap) * B_m)
        add("[B3,B+] = k B+", C(B3, B_p), kap * B_p)
        Om = g["Omega"]
        add("[Omega,A+] = -k A+", C(Om, A_p), (-kap) * A_p)
        add("[Omega,A-] = k A-", C(Om, A_m), kap * A_m)
        add("[Omega,B+] = k B+", C(Om, B_p), kap * B_p)
        add("[Omega,B-] = -k B-", C(Om, B_m), (-kap) * B_m)
    else:
        w = g["Omega"]
        add("[A-,A+] = w", C(A_m, A_p), w)
        add("[A3,A+] = 0", C(A3, A_p), zero)
        add("[A3,A-] = 0", C(A3, A_m), zero)
        add("[B-,B+] = -w", C(B_m, B_p), -w)
        add("[B3,B+] = 0", C(B3, B_p), zero)
        add("[B3,B-] = 0", C(B3, B_m), zero)
    add("B3 - A3 = Omega", B3 - A3, g["Omega"])
    add("A3 + B3 = k L3", A3 + B3, kap * L3)
    for x, xn in ((A_p, "A+"), (A_m, "A-")):
        for y, yn in ((B_p, "B+"), (B_m, "B-")):
            add(f"[{xn},{yn}] = 0", C(x, y), zero)
    add("[L3,A+] = A+", C(L3, A_p), A_p)
    add("[L3,A-] = -A-", C(L3, A_m), -A_m)
    add("[L3,B+] = B+", C(L3, B_p), B_p)
    add("[L3,B-] = -B-", C(L3, B_m), -B_m)

    a = parallel_ops(k, g)
    J = j12(k)
    w = g["Omega"]
    for i in (1, 2):
        add(f"[a{i}-,a{i}+] = 2 Omega", C(a[f"a{i}-"], a[f"a{i}+"]), 2 * w,
            note="closes with 2*omega = -2i d_zeta (no extra factor of k)")
    add("[a1-,a2+] = -2k J12", C(a["a1-"], a["a2+"]), (-2 * kap) * J)
    add("[a2-,a1+] = 2k J12", C(a["a2-"], a["a1+"]), (2 * kap) * J)
    add("[a1+,a2-] = -2k J12", C(a["a1+"], a["a2-"]), (-2 * kap) * J)
    add("[a2+,a1-] = 2k J12", C(a["a2+"], a["a1-"]), (2 * kap) * J)
    for s in "+-":
        add(f"[a1{s},a2{s}] = 0", C(a[f"a1{s}"], a[f"a2{s}"]), zero)
        add(f"[J12,a2{s}] = -a1{s}", C(J, a[f"a2{s}"]), -a[f"a1{s}"])
        add(f"[J21,a1{s}] = -a2{s}", C(-J, a[f"a1{s}"]), -a[f"a2{s}"])
        if kap != 0:
            sign = -1 if s == "+" else 1
            for i in (1, 2):
                add(f"[Omega,a{i}{s}] = {'-' if sign < 0 else ''}k a{i}{s}",
                    C(w, a[f"a{i}{s}"]), (sign * kap) * a[f"a{i}{s}"])
    return rel


def intertwine_check(k, nfreq: int = 2, ell: int = 0, seed: int = 0, count: int = 20) -> list[AlgebraReport]:
    """a_i^- H - (H + 2(w + k/2)) a_i^- on probes with fixed labels.

    At zero curvature the flat ladder relations [H, A+-] = +-2w A+-,
    [H, B+-] = -+2w B+- are checked instead (``nfreq`` is then read as the
    Gaussian width).
    """
    k = as_curvature(k)
    kap = k.kappa
    g = spherical_generators(k)
    H = hamiltonian(k, "viaAB", g)
    out = []
    if kap == 0:
        two_w = label_scalar(lambda l, w: 2 * w, "2w")
        lab = dict(ell=ell, gsigma=Fraction(nfreq))
        for name, op, sgn in (("A+", g["A+"], 1), ("A-", g["A-"], -1), ("B+", g["B+"], -1), ("B-", g["B-"], 1)):
            out.append(check_relation(f"[H,{name}] = {'+' if sgn > 0 else '-'}2w {name}",
                                      commutator(H, op), sgn * (two_w @ op), k, seed, count, **lab))
        return out
    a = parallel_ops(k, g)
    # after a^- the label reads w' = w + k, so 2(w + k/2) = 2(w' - k/2)
    offset = label_scalar(lambda l, w: 2 * (w - kap / 2), "2(w+k/2)")
    for i in (1, 2):
        am = a[f"a{i}-"]
        out.append(check_relation(f"a{i}- H = (H + 2(w+k/2)) a{i}-", am @ H, (H + offset) @ am,
                                  k, seed, count, ell=ell, nfreq=nfreq))
    return out


def hamiltonian_consistency(k, seed: int = 0, count: int = 20) -> list[AlgebraReport]:
    """Pairwise agreement of the Hamiltonian forms on probes."""
    k = as_curvature(k)
    modes = ["viaAB", "viaShift", "differential"] + (["flat"] if k.kappa == 0 else ["viaCasimir"])
    g = spherical_generators(k)
    ref = hamiltonian(k, "viaAB", g)
    return [check_relation(f"H[viaAB] = H[{m}]", ref, hamiltonian(k, m, g), k, seed, count)
            for m in modes[1:]]


def symmetry_checks(k, seed: int = 0, count: int = 20) -> list[AlgebraReport]:
    k = as_curvature(k)
    g = spherical_generators(k)
    H = hamiltonian(k, "viaAB", g)
    zero = constant(0, "0")
    return [check_relation(f"[{name},H] = 0", commutator(op, H), zero, k, seed, count)
            for name, op in symmetry_suite(k, g).items()]


# ---------------------------------------------------------------------------
# zero-curvature limit


def operator_convergence(name: str, kappas, omega: int = 1, a=Fraction(3, 2), ell: int = 1,
                         theta=None) -> list[tuple[Fraction, float]]:
    """max |A^k psi_k - A^0 psi_0| on a theta grid, for each k in ``kappas``.

    psi_k = S_k^a C_k^(omega/k) e^{i ell phi} at frequency omega (which needs
    omega/k integral) and psi_0 = theta^a exp(-omega theta^2/2) e^{i ell phi};
    both are evaluated at phi = zeta = 0.
    """
    import numpy as np

    grid = np.linspace(0.1, 3.0, 59) if theta is None else np.asarray(theta, dtype=float)
    flat = Curvature(Fraction(0))
    ref = spherical_generators(flat)[name](
        WaveFunction.term(flat, a, 0, ell=ell, gsigma=Fraction(omega))).eval(grid)
    out = []
    for k in kappas:
        k = Fraction(k)
        if k <= 0:
            raise ValueError("curvatures must be positive")
        nfreq = Fraction(omega) / k
        if nfreq.denominator != 1:
            raise ValueError(f"omega / k must be an integer (k = {k})")
        psi = WaveFunction.term(k, a, int(nfreq), ell=ell, nfreq=int(nfreq))
        val = spherical_generators(k)[name](psi).eval(grid)
        out.append((k, float(np.max(np.abs(val - ref)))))
    return out
