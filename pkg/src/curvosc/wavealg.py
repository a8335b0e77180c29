"""Exact algebra of the wavefunctions the curved-oscillator operators act on.

A wavefunction is a finite sum of terms

    coeff * S_k(theta)**a * C_k(theta)**b * exp(i*ell*phi) * exp(i*omega*zeta)

with exact complex-rational ``coeff`` and rational exponents.  For k != 0 the
frequency is stored as the integer ``nfreq`` with ``omega = nfreq * k``.  For
k = 0 the term is ``theta**a * exp(-sigma*theta**2/2) * exp(i*ell*phi)``, the
rational ``sigma`` playing the role of omega; ``b`` is then always 0 since
C_0 = 1.

Rationals are held internally as ``gmpy2.mpq``, which compares and hashes
equal to the matching :class:`fractions.Fraction`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import cmath
import numbers
from typing import Callable, Iterable

import numpy as np
from gmpy2 import mpq

from curvosc.ktrig import as_curvature, c_kappa, s_kappa

__all__ = [
    "CRational",
    "I",
    "RegimeError",
    "DomainError",
    "WaveTerm",
    "WaveFunction",
]


class RegimeError(ValueError):
    """Operation mixes curvatures or is undefined in the current regime."""


class DomainError(ValueError):
    """Numerical evaluation hit a pole or a non-real power."""


_MPQ = type(mpq(0))
_ZERO = mpq(0)


def _frac(x):
    """Exact rational (mpq) from int, Fraction, mpq or a 'p/q' string."""
    if isinstance(x, _MPQ):
        return x
    if isinstance(x, float):
        raise TypeError("floats are not allowed in exact wavefunction data")
    if isinstance(x, (int, Fraction, str)):
        return mpq(x)
    if isinstance(x, numbers.Rational):
        return mpq(int(x.numerator), int(x.denominator))
    raise TypeError(f"cannot convert {x!r} to an exact rational")


def to_fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


class CRational:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _frac(re)
        self.im = _frac(im)

    @classmethod
    def _raw(cls, re, im):
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    def __reduce__(self):
        return (CRational, (to_fraction(self.re), to_fraction(self.im)))

    @classmethod
    def of(cls, x) -> "CRational":
        if isinstance(x, CRational):
            return x
        if isinstance(x, complex):
            if x.real != int(x.real) or x.imag != int(x.imag):
                raise TypeError(f"cannot represent {x!r} exactly; pass a CRational")
            return cls(int(x.real), int(x.imag))
        return cls._raw(_frac(x), _ZERO)

    def __add__(self, other):
        try:
            o = CRational.of(other)
        except TypeError:
            return NotImplemented
        return CRational._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            o = CRational.of(other)
        except TypeError:
            return NotImplemented
        return CRational._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return CRational.of(other) - self

    def __neg__(self):
        return CRational._raw(-self.re, -self.im)

    def __mul__(self, other):
        try:
            o = CRational.of(other)
        except TypeError:
            return NotImplemented
        return CRational._raw(self.re * o.re - self.im * o.im,
                         self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = CRational.of(other)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero")
        return self * CRational._raw(o.re / d, -o.im / d)

    def conjugate(self) -> "CRational":
        return CRational._raw(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            o = CRational.of(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self) -> float:
        return abs(complex(self))

    def __repr__(self):
        if not self.im:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


I = CRational(0, 1)

# term keys are (a, b, ell, label): label is nfreq (int) for k != 0, sigma (Fraction) for k == 0


@dataclass(frozen=True)
class WaveTerm:
    coeff: CRational
    a: Fraction
    b: Fraction
    ell: int
    nfreq: int | None = None
    gsigma: Fraction | None = None


class WaveFunction:
    """Immutable exact linear combination of wave terms at a fixed curvature."""

    __slots__ = ("curvature", "_kap", "_terms")

    def __init__(self, curvature, terms: dict | None = None):
        self.curvature = as_curvature(curvature)
        if not self.curvature.is_exact:
            raise TypeError("symbolic wavefunctions need a rational curvature")
        self._kap = _frac(self.curvature.kappa)
        merged: dict = {}
        for key, c in (terms or {}).items():
            key = self._norm_key(key)
            merged[key] = merged.get(key, CRational()) + CRational.of(c)
        self._terms = {k: v for k, v in merged.items() if v}

    def _norm_key(self, key):
        a, b, ell, label = key
        if self.flat:
            sig = _frac(label)
            if sig <= 0:
                raise ValueError("gsigma must be positive")
            return (_frac(a), _ZERO, int(ell), sig)
        return (_frac(a), _frac(b), int(ell), int(label))

    # construction -------------------------------------------------------
    @classmethod
    def zero(cls, curvature) -> "WaveFunction":
        return cls(curvature)

    @classmethod
    def term(cls, curvature, a, b=0, *, ell=0, nfreq=None, gsigma=None, coeff=1):
        k = as_curvature(curvature)
        if k.kappa == 0:
            if gsigma is None or nfreq is not None:
                raise RegimeError("flat terms are labelled by gsigma only")
            if _frac(gsigma) <= 0:
                raise ValueError("gsigma must be positive")
            label = gsigma
        else:
            if nfreq is None or gsigma is not None:
                raise RegimeError("curved terms are labelled by nfreq only")
            label = nfreq
        return cls(k, {(a, b, ell, label): coeff})

    def _new(self, terms: dict) -> "WaveFunction":
        """Wrap a dict whose keys are already normalized, dropping zeros."""
        obj = object.__new__(WaveFunction)
        obj.curvature = self.curvature
        obj._kap = self._kap
        obj._terms = {k: v for k, v in terms.items() if v}
        return obj

    # properties ---------------------------------------------------------
    @property
    def kappa(self) -> Fraction:
        return self.curvature.kappa

    @property
    def flat(self) -> bool:
        return self.curvature.kappa == 0

    def items(self):
        return sorted(self._terms.items())

    def terms(self) -> list[WaveTerm]:
        out = []
        for (a, b, ell, label), c in self.items():
            a, b = to_fraction(a), to_fraction(b)
            if self.flat:
                out.append(WaveTerm(c, a, b, ell, gsigma=to_fraction(label)))
            else:
                out.append(WaveTerm(c, a, b, ell, nfreq=label))
        return out

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def omega_of(self, key) -> Fraction:
        label = key[3]
        return label if self.flat else label * self._kap

    def labels(self) -> set[tuple]:
        """Distinct (ell, label) pairs present."""
        return {(k[2], k[3]) for k in self._terms}

    # linear structure ---------------------------------------------------
    def _check(self, other: "WaveFunction"):
        if not isinstance(other, WaveFunction):
            raise TypeError("expected a WaveFunction")
        if other.kappa != self.kappa:
            raise RegimeError(f"curvature mismatch: {self.kappa} vs {other.kappa}")

    def __add__(self, other):
        self._check(other)
        terms = dict(self._terms)
        for k, c in other._terms.items():
            old = terms.get(k)
            terms[k] = c if old is None else old + c
        return self._new(terms)

    def __neg__(self):
        return self._new({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "WaveFunction":
        c = CRational.of(c)
        if not c:
            return self._new({})
        return self._new({k: c * v for k, v in self._terms.items()})

    def __rmul__(self, c):
        return self.scale(c)

    def __eq__(self, other):
        if not isinstance(other, WaveFunction):
            return NotImplemented
        return self.kappa == other.kappa and self._terms == other._terms

    def __hash__(self):
        return hash((self.kappa, frozenset(self._terms.items())))

    def canonicalize(self) -> "WaveFunction":
        return self._new(dict(self._terms))

    def vanishes(self) -> bool:
        """True iff the function is identically zero.

        Distinct canonical forms can describe the same function because
        C_k**2 + k*S_k**2 = 1.  Terms sharing labels and fractional exponent
        parts are factored to a polynomial in S and C, reduced with
        C**2 -> 1 - k*S**2 to P0(S) + C*P1(S), and both parts must vanish.
        """
        if self.flat or not self._terms:
            return not self._terms
        groups: dict = {}
        for (a, b, ell, n), c in self._terms.items():
            fa = a - (a.numerator // a.denominator)
            fb = b - (b.numerator // b.denominator)
            groups.setdefault((ell, n, fa, fb), []).append((a, b, c))
        kap = self._kap
        for members in groups.values():
            a0 = min(m[0] for m in members)
            b0 = min(m[1] for m in members)
            poly: dict = {}
            for a, b, c in members:
                i, j = int(a - a0), int(b - b0)
                half, par = divmod(j, 2)
                binom = 1
                for r in range(half + 1):
                    key = (i + 2 * r, par)
                    poly[key] = poly.get(key, CRational()) + c * (binom * (-kap) ** r)
                    binom = binom * (half - r) // (r + 1)
            if any(poly.values()):
                return False
        return True

    def same_function(self, other: "WaveFunction") -> bool:
        """Equality as functions (modulo C_k**2 + k*S_k**2 = 1)."""
        self._check(other)
        return self == other or (self - other).vanishes()

    # symbolic maps ------------------------------------------------------
    def map_keys(self, fn: Callable[[tuple], Iterable[tuple[tuple, CRational]]]):
        """Apply a term-wise map; ``fn(key)`` yields (new_key, factor) pairs.

        New keys must be normalized already (exponents and flat labels mpq).
        """
        terms: dict = {}
        for key, c in self._terms.items():
            for nk, f in fn(key):
                v = c * f
                old = terms.get(nk)
                terms[nk] = v if old is None else old + v
        return self._new(terms)

    def times_label(self, fn: Callable[[int, Fraction], object]) -> "WaveFunction":
        """Multiply each term by the scalar ``fn(ell, omega)`` read from its labels."""
        return self.map_keys(lambda key: [(key, CRational.of(fn(key[2], self.omega_of(key))))])

    def d_theta(self) -> "WaveFunction":
        kap = self._kap
        if self.flat:
            def rule(key):
                a, b, ell, sig = key
                return [((a - 1, b, ell, sig), a), ((a + 1, b, ell, sig), -sig)]
        else:
            def rule(key):
                a, b, ell, n = key
                return [((a - 1, b + 1, ell, n), a), ((a + 1, b - 1, ell, n), -kap * b)]
        return self.map_keys(rule)

    def mul_monomial(self, da, db=0) -> "WaveFunction":
        """Multiply by S_k**da * C_k**db (theta**da when k = 0)."""
        da = _frac(da)
        db = _ZERO if self.flat else _frac(db)
        return self.map_keys(lambda key: [((key[0] + da, key[1] + db, key[2], key[3]), 1)])

    def mul_t(self) -> "WaveFunction":
        return self.mul_monomial(1, -1)

    def div_t(self) -> "WaveFunction":
        return self.mul_monomial(-1, 1)

    def mul_t2(self) -> "WaveFunction":
        return self.mul_monomial(2, -2)

    def shift_ell(self, d: int) -> "WaveFunction":
        return self.map_keys(lambda key: [((key[0], key[1], key[2] + d, key[3]), 1)])

    def shift_n(self, d: int) -> "WaveFunction":
        if self.flat:
            raise RegimeError("frequency shifts are undefined at zero curvature")
        return self.map_keys(lambda key: [((key[0], key[1], key[2], key[3] + d), 1)])

    # numerics -----------------------------------------------------------
    def eval(self, theta, phi=0.0, zeta=0.0):
        """Evaluate at (theta, phi, zeta); theta may be an array."""
        th = np.asarray(theta, dtype=float)
        kap = float(self.kappa)
        out = np.zeros(th.shape, dtype=complex)
        if self.flat:
            base_s, base_c = th, np.ones_like(th)
        else:
            base_s, base_c = np.asarray(s_kappa(self.curvature, th)), np.asarray(c_kappa(self.curvature, th))
        with np.errstate(all="ignore"):
            for (a, b, ell, label), c in self._terms.items():
                val = _power(base_s, a) * _power(base_c, b)
                if self.flat:
                    val = val * np.exp(-float(label) * th * th / 2)
                    omega = 0.0
                else:
                    omega = label * kap
                phase = cmath.exp(1j * (ell * phi + omega * zeta)) if np.isscalar(phi) and np.isscalar(zeta) \
                    else np.exp(1j * (ell * np.asarray(phi) + omega * np.asarray(zeta)))
                out = out + complex(c) * val * phase
        return out[()]

    # serialization ------------------------------------------------------
    def to_json(self) -> list[dict]:
        rows = []
        for (a, b, ell, label), c in self.items():
            row = {
                "re": _fstr(c.re), "im": _fstr(c.im),
                "a_num": int(a.numerator), "a_den": int(a.denominator),
                "b_num": int(b.numerator), "b_den": int(b.denominator),
                "ell": ell,
            }
            if self.flat:
                row["gsigma"] = _fstr(label)
            else:
                row["nfreq"] = label
            rows.append(row)
        return rows

    @classmethod
    def from_json(cls, curvature, rows: list[dict]) -> "WaveFunction":
        terms = {}
        for r in rows:
            label = mpq(r["gsigma"]) if "gsigma" in r else int(r["nfreq"])
            key = (mpq(r["a_num"], r["a_den"]), mpq(r["b_num"], r["b_den"]), int(r["ell"]), label)
            terms[key] = CRational(mpq(r["re"]), mpq(r["im"]))
        return cls(curvature, terms)

    def __repr__(self):
        if not self._terms:
            return f"WaveFunction(k={self.kappa}, 0)"
        parts = []
        for (a, b, ell, label), c in self.items():
            tag = f"sigma={label}" if self.flat else f"n={label}"
            parts.append(f"{c!r}*S^{a}C^{b}[l={ell},{tag}]")
        return f"WaveFunction(k={self.kappa}, " + " + ".join(parts) + ")"


def _fstr(x) -> str:
    return str(to_fraction(x))


def _power(base, exponent: Fraction):
    if exponent == 0:
        return np.ones_like(base)
    if exponent.denominator != 1 and np.any(base < 0):
        raise DomainError("non-integer power of a negative kappa-trig value")
    if exponent < 0 and np.any(base == 0):
        raise DomainError("negative power at a zero of S_k or C_k")
    if exponent.denominator == 1:
        return base ** int(exponent)
    return base ** float(exponent)
