"""Representations, ladder-built eigenfunctions and spectra of the 2D curved oscillator.

A representation j x j is anchored at an extremal state annihilated by A- and
B+.  Every other state is ``A+^q B-^p`` applied to it; for k > 0 the lattice
is the finite square 0 <= p, q <= 2j, for k <= 0 it is unbounded.  Energies
are exact rationals and each listed state is verified by applying the
Hamiltonian symbolically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import csv
import io
import json
import math
from typing import Iterator

from curvosc.ktrig import Curvature, as_curvature
from curvosc.qops import casimirs, hamiltonian, spherical_generators
from curvosc.wavealg import RegimeError, WaveFunction, to_fraction

__all__ = [
    "LatticeError",
    "Representation",
    "StateLabel",
    "StateRecord",
    "Level",
    "Spectrum",
    "extremal_state",
    "representation",
    "ladder_state",
    "eigenvalue_of",
    "eigen_check",
    "casimir_check",
    "edge_closure",
    "lattice_dimension",
    "p_max",
    "level_energy",
    "enumerate_levels",
    "degeneracy_audit",
]


class LatticeError(ValueError):
    """A label lies outside the representation lattice or the ladder produced zero."""


@dataclass(frozen=True)
class StateLabel:
    """Ladder position: ``p`` applications of B- and ``q`` of A+."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise LatticeError("ladder counts must be non-negative")


@dataclass(frozen=True)
class Representation:
    """The j x j representation anchored at ``extremal``.

    ``jtwice`` is 2j (the extremal frequency quantum n-bar or n-underbar);
    at zero curvature it is 0 and ``omega`` carries the oscillator frequency.
    """

    kappa: Curvature
    jtwice: int
    omega: Fraction
    extremal: WaveFunction

    @property
    def bounded(self) -> bool:
        return self.kappa.kappa > 0

    def contains(self, label: StateLabel) -> bool:
        if self.bounded:
            return label.p <= self.jtwice and label.q <= self.jtwice
        return True

    def quantum_numbers(self, label: StateLabel) -> tuple[int, int]:
        """(n, ell) of a lattice state; n is omega in units of |k| (k != 0)."""
        p, q = label.p, label.q
        ell = q - p
        if self.kappa.kappa > 0:
            return self.jtwice - p - q, ell
        if self.kappa.kappa < 0:
            return self.jtwice + p + q, ell
        return p + q, ell

    def labels(self) -> Iterator[StateLabel]:
        """All lattice labels (k > 0 only; the other lattices are infinite)."""
        if not self.bounded:
            raise LatticeError("the lattice is unbounded for k <= 0")
        for p in range(self.jtwice + 1):
            for q in range(self.jtwice + 1):
                yield StateLabel(p, q)


def extremal_state(k, jtwice: int = 0, omega=None) -> WaveFunction:
    """State annihilated by A- and B+.

    k > 0: S^(1/2) C^(jtwice + 1/2) at frequency jtwice*k.
    k < 0: S^(1/2) C^(-jtwice + 1/2) at frequency jtwice*|k|.
    k = 0: theta^(1/2) exp(-omega theta^2 / 2).
    The annihilation is asserted on construction.
    """
    k = as_curvature(k)
    kap = k.kappa
    half = Fraction(1, 2)
    if kap > 0:
        if jtwice < 0:
            raise RegimeError("jtwice must be non-negative for k > 0")
        psi = WaveFunction.term(k, half, jtwice + half, ell=0, nfreq=jtwice)
    elif kap < 0:
        if jtwice < 1:
            raise RegimeError("jtwice must be at least 1 for k < 0")
        psi = WaveFunction.term(k, half, -jtwice + half, ell=0, nfreq=-jtwice)
    else:
        if omega is None or Fraction(omega) <= 0:
            raise RegimeError("a positive omega is required at k = 0")
        psi = WaveFunction.term(k, half, 0, ell=0, gsigma=Fraction(omega))
    g = spherical_generators(k)
    if not (g["A-"](psi).vanishes() and g["B+"](psi).vanishes()):
        raise AssertionError("extremal state is not annihilated by A- and B+")
    return psi


def representation(k, jtwice: int = 0, omega=None) -> Representation:
    k = as_curvature(k)
    kap = k.kappa
    if kap == 0:
        w = Fraction(omega)
        return Representation(k, 0, w, extremal_state(k, omega=w))
    w = jtwice * abs(kap)
    return Representation(k, jtwice, w, extremal_state(k, jtwice))


_GEN_CACHE: dict = {}


def _generators(k: Curvature) -> dict:
    key = k.kappa
    if key not in _GEN_CACHE:
        _GEN_CACHE[key] = spherical_generators(k)
    return _GEN_CACHE[key]


def ladder_state(rep: Representation, label: StateLabel) -> WaveFunction:
    """``A+^q B-^p`` applied to the extremal state (unnormalized)."""
    if not rep.contains(label):
        raise LatticeError(f"label (p={label.p}, q={label.q}) is outside the lattice of 2j={rep.jtwice}")
    g = _generators(rep.kappa)
    psi = rep.extremal
    for _ in range(label.p):
        psi = g["B-"](psi)
    for _ in range(label.q):
        psi = g["A+"](psi)
    if psi.vanishes():
        raise LatticeError(f"ladder produced the zero function at (p={label.p}, q={label.q})")
    return psi


def _labels_of(state: WaveFunction) -> tuple:
    labels = state.labels()
    if len(labels) != 1:
        raise LatticeError(f"state mixes labels {sorted(labels)}")
    return next(iter(labels))


def eigenvalue_of(op, state: WaveFunction) -> Fraction | None:
    """Exact eigenvalue of ``op`` on ``state``, or None if it is not an eigenvector.

    The candidate is read off numerically at a generic point, rationalized,
    and then confirmed by exact symbolic comparison.
    """
    image = op(state)
    if image.vanishes():
        return Fraction(0)
    theta = 0.37 / math.sqrt(abs(float(state.kappa))) if state.kappa else 0.37
    num, den = complex(image.eval(theta)), complex(state.eval(theta))
    if den == 0:
        return None
    guess = (num / den).real
    cand = Fraction(guess).limit_denominator(10 ** 6)
    if (image - state.scale(cand)).vanishes():
        return cand
    return None


def eigen_check(k, state: WaveFunction, expected_energy) -> bool:
    """True iff H state = expected_energy * state exactly."""
    k = as_curvature(k)
    H = hamiltonian(k, "viaAB", _generators(k))
    return (H(state) - state.scale(Fraction(expected_energy))).vanishes()


def casimir_check(rep: Representation, labels=None) -> dict:
    """Common eigenvalue of C1 and C2 over lattice states (k != 0)."""
    k = rep.kappa
    if k.kappa == 0:
        raise RegimeError("the Casimirs are singular at zero curvature")
    c = casimirs(k, _generators(k))
    labels = list(labels) if labels is not None else (
        list(rep.labels()) if rep.bounded else [StateLabel(p, q) for p in range(3) for q in range(3)])
    values = set()
    ok = True
    for lab in labels:
        psi = ladder_state(rep, lab)
        for name in ("C1", "C1_alt", "C2", "C2_alt"):
            lam = eigenvalue_of(c[name], psi)
            if lam is None:
                ok = False
            else:
                values.add(lam)
    ok = ok and len(values) == 1
    return {"jtwice": rep.jtwice, "states": len(labels), "consistent": ok,
            "eigenvalue": next(iter(values)) if len(values) == 1 else None}


def edge_closure(rep: Representation) -> bool:
    """A- kills q = 0 states, B+ kills p = 0 states, and A+ / B- leave the k > 0 square."""
    g = _generators(rep.kappa)
    if not rep.bounded:
        raise LatticeError("edges exist only for k > 0")
    n = rep.jtwice
    for t in range(n + 1):
        if not g["A-"](ladder_state(rep, StateLabel(t, 0))).vanishes():
            return False
        if not g["B+"](ladder_state(rep, StateLabel(0, t))).vanishes():
            return False
        if not g["A+"](ladder_state(rep, StateLabel(t, n))).vanishes():
            return False
        if not g["B-"](ladder_state(rep, StateLabel(n, t))).vanishes():
            return False
    return True


def lattice_dimension(rep: Representation) -> int:
    return sum(1 for lab in rep.labels() if not ladder_state(rep, lab).vanishes())


def p_max(n0: int) -> int:
    """Largest k < 0 level index: 0 < n0 - p_max <= 1."""
    return n0 - 1


def level_energy(k, omega0, n: int) -> Fraction:
    kap = as_curvature(k).kappa
    omega0 = Fraction(omega0)
    return 2 * omega0 * (n + 1) + kap * (n + 1) ** 2


@dataclass
class StateRecord:
    label: StateLabel
    n: int
    ell: int
    rep_jtwice: int
    verified: bool
    state: WaveFunction = field(repr=False, compare=False)


@dataclass
class Level:
    n: int
    energy: Fraction
    states: list[StateRecord]

    @property
    def degeneracy(self) -> int:
        return len(self.states)


@dataclass
class Spectrum:
    kappa: Fraction
    omega0: Fraction
    n0: int | None
    levels: list[Level]
    notices: list[str] = field(default_factory=list)

    @property
    def all_verified(self) -> bool:
        return all(s.verified for lev in self.levels for s in lev.states)

    def to_json(self) -> dict:
        return {
            "kappa": str(self.kappa),
            "omega0": str(self.omega0),
            "levels": [
                {
                    "n": lev.n,
                    "energy_num": lev.energy.numerator,
                    "energy_den": lev.energy.denominator,
                    "degeneracy": lev.degeneracy,
                    "states": [
                        {"p": s.label.p, "q": s.label.q, "n": s.n, "ell": s.ell, "rep_jtwice": s.rep_jtwice}
                        for s in lev.states
                    ],
                }
                for lev in self.levels
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "energy_num", "energy_den", "energy", "degeneracy", "p", "q", "state_n", "ell", "rep_jtwice"])
        for lev in self.levels:
            for s in lev.states:
                w.writerow([lev.n, lev.energy.numerator, lev.energy.denominator, repr(float(lev.energy)),
                            lev.degeneracy, s.label.p, s.label.q, s.n, s.ell, s.rep_jtwice])
        return buf.getvalue()

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


def _level_labels(n: int) -> list[StateLabel]:
    return [StateLabel(p, n - p) for p in range(n + 1)]


def enumerate_levels(k, omega0, nmax: int, verify: bool = True) -> Spectrum:
    """Levels 0..nmax at fixed frequency omega0.

    k > 0: level n lives in rep 2j = n0 + n, states with p + q = n.
    k < 0: level p lives in rep 2j = n0 - p, states with p' + q' = p;
           truncated at p_max = n0 - 1.
    k = 0: one representation, level n has p + q = n.
    ``omega0`` is the integer n0 for k != 0 (omega0 = n0 |k|) and a positive
    rational frequency for k = 0.
    """
    k = as_curvature(k)
    kap = k.kappa
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    notices: list[str] = []
    if kap == 0:
        w = Fraction(omega0)
        if w <= 0:
            raise ValueError("omega must be positive")
        n0 = None
        reps = {n: representation(k, omega=w) for n in range(nmax + 1)}
    else:
        n0 = int(omega0)
        if n0 != Fraction(omega0) or n0 < 1:
            raise ValueError("n0 must be a positive integer for k != 0")
        w = n0 * abs(kap)
        top = nmax
        if kap < 0 and nmax > p_max(n0):
            top = p_max(n0)
            notices.append(f"levels truncated at p_max = {top} (requested nmax = {nmax})")
        reps = {n: representation(k, n0 + n if kap > 0 else n0 - n) for n in range(top + 1)}
    levels = []
    for n, rep in reps.items():
        energy = level_energy(k, w, n)
        records = []
        for lab in _level_labels(n):
            psi = ladder_state(rep, lab)
            qn, ell = rep.quantum_numbers(lab)
            ok = eigen_check(k, psi, energy) if verify else True
            records.append(StateRecord(lab, qn, ell, rep.jtwice, ok, psi))
        levels.append(Level(n, energy, records))
    return Spectrum(kap, w, n0, levels, notices)


def printed_degeneracy(k, n: int) -> int:
    """Degeneracy formula as stated for each regime: n+1 (k >= 0), 2p+1 (k < 0)."""
    return 2 * n + 1 if as_curvature(k).kappa < 0 else n + 1


def degeneracy_audit(k, omega0, nmax: int) -> list[dict]:
    """Enumerated degeneracy vs. the stated formula, level by level."""
    spec = enumerate_levels(k, omega0, nmax, verify=False)
    rows = []
    for lev in spec.levels:
        printed = printed_degeneracy(k, lev.n)
        rows.append({"n": lev.n, "energy": str(lev.energy), "enumerated": lev.degeneracy,
                     "printed": printed, "match": lev.degeneracy == printed})
    return rows
