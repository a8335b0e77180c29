"""Curvature-dependent trigonometric functions C_k, S_k, T_k and Cot_k.

All functions accept scalars or numpy arrays for the angle argument.  The
curvature is classified by its exact sign (no epsilon test), so a rational
curvature of ``Fraction(0)`` selects the flat branch and anything else the
circular or hyperbolic one.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
import math

import numpy as np

__all__ = [
    "Curvature",
    "PoleError",
    "as_curvature",
    "c_kappa",
    "s_kappa",
    "t_kappa",
    "cot_kappa",
    "d_s",
    "d_c",
]


class PoleError(ArithmeticError):
    """Raised when a kappa-tangent or cotangent is evaluated at its pole."""


@dataclass(frozen=True)
class Curvature:
    """Curvature parameter kappa with its regime (sign).

    ``kappa`` is kept as a :class:`~fractions.Fraction` whenever the input is
    rational, which is what the symbolic layer requires.  Floats are accepted
    for purely numerical work.
    """

    kappa: Fraction | float

    def __post_init__(self):
        k = self.kappa
        if isinstance(k, bool):
            raise TypeError("curvature must be a number")
        if isinstance(k, (int, Rational)) and not isinstance(k, Fraction):
            object.__setattr__(self, "kappa", Fraction(k))

    @property
    def regime(self) -> str:
        if self.kappa > 0:
            return "positive"
        if self.kappa < 0:
            return "negative"
        return "zero"

    @property
    def is_exact(self) -> bool:
        return isinstance(self.kappa, Fraction)

    def __float__(self) -> float:
        return float(self.kappa)


def as_curvature(k) -> Curvature:
    return k if isinstance(k, Curvature) else Curvature(k)


def c_kappa(k, r):
    k = as_curvature(k)
    kap = float(k.kappa)
    if k.kappa > 0:
        return np.cos(math.sqrt(kap) * np.asarray(r, dtype=float))[()]
    if k.kappa < 0:
        return np.cosh(math.sqrt(-kap) * np.asarray(r, dtype=float))[()]
    return np.ones_like(np.asarray(r, dtype=float))[()]


def s_kappa(k, r):
    k = as_curvature(k)
    kap = float(k.kappa)
    r = np.asarray(r, dtype=float)
    if k.kappa > 0:
        sk = math.sqrt(kap)
        return (np.sin(sk * r) / sk)[()]
    if k.kappa < 0:
        sk = math.sqrt(-kap)
        return (np.sinh(sk * r) / sk)[()]
    return r.copy()[()]


def _ratio(num, den):
    den_arr = np.asarray(den)
    if np.any(den_arr == 0):
        raise PoleError("kappa-trigonometric ratio evaluated at a pole")
    return (np.asarray(num) / den_arr)[()]


def t_kappa(k, r):
    return _ratio(s_kappa(k, r), c_kappa(k, r))


def cot_kappa(k, r):
    return _ratio(c_kappa(k, r), s_kappa(k, r))


def d_s(k, r):
    """Derivative of S_k: equals C_k."""
    return c_kappa(k, r)


def d_c(k, r):
    """Derivative of C_k: equals -k S_k."""
    k = as_curvature(k)
    return (-float(k.kappa) * np.asarray(s_kappa(k, r)))[()]
