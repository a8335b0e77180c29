import math
from fractions import Fraction as F

import numpy as np
import pytest

from curvosc.ktrig import c_kappa, s_kappa
from curvosc.qops import (HAMILTONIAN_MODES, algebra_suite, casimirs, commutator, hamiltonian,
                          hamiltonian_consistency, intertwine_check, j12, mu_constant,
                          operator_convergence, parallel_ops, probes, spherical_generators,
                          symmetry_checks, symmetry_suite)
from curvosc.wavealg import CRational, RegimeError, WaveFunction

CURVED = [F(1), F(-1), F(1, 2), F(-2)]


def labels_of(f):
    return {(t.ell, t.nfreq) for t in f.terms()}


@pytest.mark.parametrize("k", CURVED + [F(0)], ids=str)
def test_algebra_suite_exact(k):
    reports = algebra_suite(k, seed=7, count=20)
    bad = [r.relation for r in reports if not r.exact]
    assert not bad, bad
    assert all(r.probes == 20 and r.seed == 7 for r in reports)


@pytest.mark.parametrize("k", [F(1), F(-1), F(0)], ids=str)
def test_flipped_a3_is_detected(k):
    reports = algebra_suite(k, seed=7, count=5, mutate="flip_A3")
    assert any(not r.exact for r in reports)


@pytest.mark.parametrize("k,nfreq,ell", [(1, 2, 0), (-1, 3, 1), (F(1, 2), 4, -1), (0, 1, 0)])
def test_intertwining_exact(k, nfreq, ell):
    reports = intertwine_check(k, nfreq=nfreq, ell=ell, seed=3)
    assert reports and all(r.exact for r in reports)


@pytest.mark.parametrize("k", CURVED + [F(0)], ids=str)
def test_hamiltonian_forms_agree(k):
    assert all(r.exact for r in hamiltonian_consistency(k, seed=2, count=10))


@pytest.mark.parametrize("k", [F(1), F(-1), F(0)], ids=str)
def test_symmetries_commute_with_h(k):
    reports = symmetry_checks(k, seed=4, count=10)
    assert {r.relation for r in reports} >= {"[QAA,H] = 0", "[F11,H] = 0", "[D12,H] = 0", "[I01,H] = 0"}
    assert all(r.exact for r in reports)


def test_label_discipline():
    g = spherical_generators(1)
    f = WaveFunction.term(1, F(1, 2), F(3, 2), ell=0, nfreq=2)
    assert labels_of(g["A+"](f)) == {(1, 1)}
    assert labels_of(g["A-"](f)) == {(-1, 3)}
    assert labels_of(g["B+"](f)) == {(1, 3)}
    assert labels_of(g["B-"](f)) == {(-1, 1)}


def test_extremal_states_annihilated():
    for k, b, n in ((1, F(5, 2), 2), (-1, F(-1, 2), -1)):
        g = spherical_generators(k)
        psi = WaveFunction.term(k, F(1, 2), b, ell=0, nfreq=n)
        assert g["A-"](psi).vanishes() and g["B+"](psi).vanishes()


def test_negative_curvature_printed_exponent_is_not_extremal():
    # the exponent -n - 1/2 is not annihilated; -n + 1/2 is (see test above)
    g = spherical_generators(-1)
    psi = WaveFunction.term(-1, F(1, 2), F(-3, 2), ell=0, nfreq=-1)
    assert not (g["A-"](psi).vanishes() and g["B+"](psi).vanishes())


def test_flat_ground_state_form():
    g = spherical_generators(0)
    good = WaveFunction.term(0, F(1, 2), ell=0, gsigma=1)
    assert g["A-"](good).vanishes() and g["B+"](good).vanishes()
    H = hamiltonian(0, "flat")
    assert (H(good) - good.scale(2)).vanishes()


def test_flat_printed_ground_state_is_not_an_eigenfunction():
    # sqrt(theta) exp(-w^2 theta / 2) under -d^2 - 1/(4 theta^2) + w^2 theta^2 (ell = 0), w = 2
    w, h = 2.0, 1e-4
    th = np.linspace(0.3, 2.0, 9)
    f = lambda t: np.sqrt(t) * np.exp(-w * w * t / 2)
    hf = -(f(th + h) - 2 * f(th) + f(th - h)) / h ** 2 - f(th) / (4 * th ** 2) + w * w * th ** 2 * f(th)
    ratio = hf / f(th)
    assert np.ptp(ratio) > 1
    g = lambda t: np.sqrt(t) * np.exp(-w * t * t / 2)
    hg = -(g(th + h) - 2 * g(th) + g(th - h)) / h ** 2 - g(th) / (4 * th ** 2) + w * w * th ** 2 * g(th)
    assert np.allclose(hg / g(th), 2 * w, atol=1e-5)


def test_l3_eigenvalue():
    g = spherical_generators(1)
    for p in probes(1, seed=1, count=5, ell=2):
        assert g["L3"](p) == p.scale(2)


def test_ground_state_energy_sphere():
    psi = WaveFunction.term(1, F(1, 2), F(3, 2), ell=0, nfreq=1)
    for mode in ("viaAB", "viaShift", "viaCasimir", "differential"):
        assert (hamiltonian(1, mode)(psi) - psi.scale(3)).vanishes(), mode


def test_differential_hamiltonian_matches_numerics():
    # -psi'' + (l^2-1/4)/S^2 psi - k/4 psi + (w^2-k^2/4) T^2 psi by finite differences
    k, ell, n = F(1, 2), 1, 3
    w = float(n * k)
    psi = WaveFunction.term(k, F(3, 2), F(5, 2), ell=ell, nfreq=n, coeff=CRational(1, 1))
    th, h = np.linspace(0.3, 1.2, 7), 1e-4
    f = lambda t: psi.eval(t)
    d2 = (f(th + h) - 2 * f(th) + f(th - h)) / h ** 2
    s, c = s_kappa(k, th), c_kappa(k, th)
    kk = float(k)
    expect = -d2 + (ell ** 2 - 0.25) / s ** 2 * f(th) - kk / 4 * f(th) + (w ** 2 - kk ** 2 / 4) * (s / c) ** 2 * f(th)
    got = hamiltonian(k, "differential")(psi).eval(th)
    assert np.allclose(got, expect, rtol=1e-5, atol=1e-5)


def test_printed_viaab_differs_by_linear_term():
    k = F(-1, 2)
    H, Hp = hamiltonian(k, "viaAB"), hamiltonian(k, "viaAB_printed")
    for p in probes(k, seed=5, count=6, ell=2):
        assert (Hp(p) - H(p) - p.scale(2 * k * 2)).vanishes()


def test_mode_regime_errors():
    with pytest.raises(RegimeError):
        hamiltonian(1, "flat")
    with pytest.raises(RegimeError):
        hamiltonian(0, "viaCasimir")
    with pytest.raises(RegimeError):
        casimirs(0)
    with pytest.raises(ValueError):
        hamiltonian(1, "nope")
    with pytest.raises(RegimeError):
        mu_constant(0, 1)
    assert mu_constant(2, 1) == F(2 * 2, 2)
    assert set(HAMILTONIAN_MODES) >= {"viaAB", "viaShift", "viaCasimir", "flat"}


def test_casimir_orderings_agree_on_probes():
    c = casimirs(F(-2))
    for p in probes(F(-2), seed=9, count=10):
        assert (c["C1"](p) - c["C1_alt"](p)).vanishes()
        assert (c["C2"](p) - c["C2_alt"](p)).vanishes()


def test_parallel_commutator_scalar_is_two_omega():
    k = F(1, 2)
    a = parallel_ops(k)
    for p in probes(k, seed=11, count=5, nfreq=3):
        assert (commutator(a["a1-"], a["a1+"])(p) - p.scale(2 * 3 * k)).vanishes()
    J = j12(k)
    for p in probes(k, seed=11, count=5, ell=2):
        assert (commutator(a["a1-"], a["a2+"])(p) - p.scale(-2 * k * CRational(0, -2))).vanishes()
        assert J(p) == p.scale(CRational(0, -2))


def test_d12_measured_scalar():
    # D12 acts on an (w, ell) eigenspace as (w + k) * ell
    for k in (F(1), F(-1)):
        D = symmetry_suite(k)["D12"]
        for p in probes(k, seed=13, count=4, nfreq=2, ell=3):
            w = 2 * k
            assert (D(p) - p.scale((w + k) * 3)).vanishes()


def test_i_sum_reassembles_h():
    k = F(1)
    s = symmetry_suite(k)
    H = hamiltonian(k, "viaAB")
    for p in probes(k, seed=17, count=6):
        assert (s["I01"](p) + s["I02"](p) - s["I12"](p).scale(k) - H(p)).vanishes()


@pytest.mark.parametrize("name", ["A+", "A-", "B+", "B-"])
def test_operator_linearity(name):
    k = F(-1)
    op = spherical_generators(k)[name]
    f, g = probes(k, seed=19, count=2)
    c = CRational(2, -3)
    assert (op(f.scale(c) + g) - op(f).scale(c) - op(g)).vanishes()


@pytest.mark.parametrize("name", ["A+", "A-", "B+", "B-"])
def test_flat_limit_is_linear(name):
    pairs = operator_convergence(name, [F(1, 10), F(1, 100), F(1, 1000), F(1, 10000)])
    x = np.log10([float(k) for k, _ in pairs])
    y = np.log10([e for _, e in pairs])
    slope = np.polyfit(x, y, 1)[0]
    assert abs(slope - 1) < 0.2
    assert pairs[-1][1] < 1e-2
