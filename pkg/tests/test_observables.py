import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jcsim.dynamics import ModelParams, propagate_analytic
from jcsim.hilbert import (
    ATOM_E,
    ATOM_G,
    DensityMatrix,
    FieldState,
    JointState,
    cat_state,
    coherent_state,
    default_dim,
    fock_state,
    ladder_operators,
    tensor_joint,
)
from jcsim.observables import (
    TimeSeries,
    UndefinedObservableError,
    atomic_inversion,
    entanglement_entropy,
    inversion_series_analytic,
    mandel_q,
    mean_photon_number,
    parity_expectation,
    photon_distribution,
    quadrature_squeezing,
    reduced_atom,
    reduced_field,
    von_neumann_entropy,
)

RES = ModelParams.resonant()
BELL = JointState(np.array([1, 0, 0, 0, 1, 0]) / math.sqrt(2))  # (|g,0> + |e,1>)/sqrt2, dim 3


def random_joint(rng, dim):
    v = rng.normal(size=2 * dim) + 1j * rng.normal(size=2 * dim)
    return JointState(v / np.linalg.norm(v))


def test_inversion_basis_states():
    f = coherent_state(1.0, 20)
    assert atomic_inversion(tensor_joint(ATOM_E, f)) == pytest.approx(1, abs=1e-14)
    assert atomic_inversion(tensor_joint(ATOM_G, f)) == pytest.approx(-1, abs=1e-14)
    rho = DensityMatrix.from_state(tensor_joint(ATOM_E, f))
    assert atomic_inversion(rho) == pytest.approx(1, abs=1e-14)


def test_series_examples():
    s = inversion_series_analytic(15, 1.0, [0.0, 1.0])
    assert s.values[0] == pytest.approx(1, abs=1e-12)
    t = np.linspace(0, 10, 50)
    vac = inversion_series_analytic(0, 1.0, t)
    np.testing.assert_allclose(vac.values, np.cos(2 * t), atol=1e-14)


def test_series_matches_propagation_lambda_scaled():
    lam = 0.5
    t = np.linspace(0, 100, 800)
    series = inversion_series_analytic(15, lam, t)
    psi = tensor_joint(ATOM_E, coherent_state(math.sqrt(15), default_dim(15)))
    amps = propagate_analytic(psi, ModelParams.resonant(lam=lam), t)
    w = [atomic_inversion(JointState(a)) for a in amps]
    np.testing.assert_allclose(series.values, w, atol=1e-8)
    np.testing.assert_allclose(series.times, lam * t)


def test_quadrature_examples():
    assert quadrature_squeezing(fock_state(0, 5)) == pytest.approx((0, 0), abs=1e-14)
    s1, s2 = quadrature_squeezing(coherent_state(math.sqrt(15), 64))
    assert abs(s1) < 1e-8 and abs(s2) < 1e-8


def test_fock_one_quadrature_brute_force():
    dim = 6
    a, ad = ladder_operators(dim)
    x1 = 0.5 * (a + ad)
    x2 = 0.5j * (a - ad)
    psi = fock_state(1, dim).amplitudes
    for x, s in zip((x1, x2), quadrature_squeezing(fock_state(1, dim))):
        var = np.vdot(psi, x @ x @ psi).real - np.vdot(psi, x @ psi).real ** 2
        assert s == pytest.approx(var - 0.25, abs=1e-14)
        assert s == pytest.approx(0.5, abs=1e-14)


def test_quadrature_general_state_brute_force():
    rng = np.random.default_rng(5)
    dim = 12
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v[-2:] = 0  # keep a^2 exact under truncation
    f = FieldState(v / np.linalg.norm(v))
    a, ad = ladder_operators(dim)
    psi = f.amplitudes
    got = quadrature_squeezing(f)
    for x, s in zip((0.5 * (a + ad), 0.5j * (a - ad)), got):
        var = np.vdot(psi, x @ x @ psi).real - np.vdot(psi, x @ psi).real ** 2
        assert s == pytest.approx(var - 0.25, abs=1e-12)


def test_mandel_examples():
    assert abs(mandel_q(coherent_state(2.2, 50))) < 1e-8
    assert mandel_q(fock_state(5, 10)) == pytest.approx(-1, abs=1e-14)
    with pytest.raises(UndefinedObservableError):
        mandel_q(fock_state(0, 4))


def test_mandel_geometric_distribution():
    dim = 60
    w = [Fraction(1, 2) ** n for n in range(dim)]
    z = sum(w)
    m1 = sum(n * p for n, p in enumerate(w)) / z
    m2 = sum(n * n * p for n, p in enumerate(w)) / z
    exact = float((m2 - m1 * m1) / m1 - 1)
    rho = DensityMatrix(np.diag([float(p / z) for p in w]))
    assert mandel_q(rho) == pytest.approx(exact, abs=1e-12)
    assert exact == pytest.approx(1.0, abs=1e-12)


def test_parity_examples():
    assert parity_expectation(cat_state(2, 1, 30)) == pytest.approx(1, abs=1e-12)
    assert parity_expectation(cat_state(2, -1, 30)) == pytest.approx(-1, abs=1e-12)
    mpmath.mp.dps = 30
    for alpha in (0.5, 1.3, 2.0):
        nbar = mpmath.mpf(alpha) ** 2
        brute = mpmath.nsum(lambda n: (-1) ** int(n) * mpmath.e ** (-nbar) * nbar**n / mpmath.factorial(n), [0, mpmath.inf])
        got = parity_expectation(coherent_state(alpha, default_dim(alpha**2)))
        assert got == pytest.approx(float(brute), abs=1e-12)
        assert got == pytest.approx(math.exp(-2 * alpha**2), abs=1e-12)


def test_photon_distribution_poisson():
    dist = photon_distribution(coherent_state(math.sqrt(15), 64))
    n = np.arange(64)
    poisson = np.array([float(mpmath.e ** (-15) * mpmath.mpf(15) ** k / mpmath.factorial(k)) for k in n])
    np.testing.assert_allclose(dist, poisson, atol=1e-10)
    assert dist.sum() == pytest.approx(1, abs=1e-10)


def test_partial_traces():
    np.testing.assert_allclose(reduced_atom(tensor_joint(ATOM_E, fock_state(0, 4))).data, np.diag([0, 1]), atol=1e-15)
    np.testing.assert_allclose(reduced_field(BELL).data, np.diag([0.5, 0.5, 0]), atol=1e-15)


def test_partial_traces_against_kron_definition():
    rng = np.random.default_rng(2)
    dim = 5
    psi = random_joint(rng, dim)
    rho = np.outer(psi.amplitudes, psi.amplitudes.conj()).reshape(2, dim, 2, dim)
    np.testing.assert_allclose(reduced_atom(psi).data, np.trace(rho, axis1=1, axis2=3), atol=1e-14)
    np.testing.assert_allclose(reduced_field(psi).data, np.trace(rho, axis1=0, axis2=2), atol=1e-14)
    dm = DensityMatrix.from_state(psi)
    np.testing.assert_allclose(reduced_atom(dm).data, reduced_atom(psi).data, atol=1e-14)
    np.testing.assert_allclose(reduced_field(dm).data, reduced_field(psi).data, atol=1e-14)


def test_entropy_examples():
    assert entanglement_entropy(tensor_joint(ATOM_E, coherent_state(2, 40))) < 1e-8
    assert entanglement_entropy(BELL) == pytest.approx(math.log(2), abs=1e-12)
    assert entanglement_entropy(BELL, normalized=True) == pytest.approx(1, abs=1e-12)


def test_entropy_dip_near_half_revival():
    nbar = 15
    psi = tensor_joint(ATOM_E, coherent_state(math.sqrt(nbar), default_dim(nbar)))
    half = math.pi * math.sqrt(nbar)
    t = np.linspace(half - 4, half + 4, 161)
    s = np.array([entanglement_entropy(JointState(a)) for a in propagate_analytic(psi, RES, t)])
    k = int(np.argmin(s))
    assert 0 < k < len(t) - 1
    assert s[k] < s[0] and s[k] < s[-1]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 12))
def test_schmidt_symmetry(seed, dim):
    psi = random_joint(np.random.default_rng(seed), dim)
    s_atom = entanglement_entropy(psi)
    s_field = von_neumann_entropy(reduced_field(psi))
    assert abs(s_atom - s_field) < 1e-8
    assert -1e-12 <= s_atom <= math.log(2) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 15))
def test_density_path_agrees_with_pure_path(seed, dim):
    rng = np.random.default_rng(seed)
    psi = random_joint(rng, dim)
    rho = DensityMatrix.from_state(psi)
    assert atomic_inversion(rho) == pytest.approx(atomic_inversion(psi), abs=1e-10)
    for fn in (mean_photon_number, parity_expectation, mandel_q):
        assert fn(rho) == pytest.approx(fn(psi), abs=1e-10)
    np.testing.assert_allclose(quadrature_squeezing(rho), quadrature_squeezing(psi), atol=1e-10)
    np.testing.assert_allclose(photon_distribution(rho), photon_distribution(psi), atol=1e-10)
    f = FieldState(psi.blocks()[1] / np.linalg.norm(psi.blocks()[1]))
    frho = DensityMatrix.from_state(f)
    np.testing.assert_allclose(quadrature_squeezing(frho), quadrature_squeezing(f), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 15))
def test_squeezing_floor(seed, dim):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v[-2:] = 0
    s1, s2 = quadrature_squeezing(FieldState(v / np.linalg.norm(v)))
    assert s1 >= -0.25 - 1e-9 and s2 >= -0.25 - 1e-9


def test_parity_at_t0_of_evolved_coherent():
    nbar = 9
    psi = tensor_joint(ATOM_E, coherent_state(3, default_dim(nbar)))
    out = JointState(propagate_analytic(psi, RES, [0.0])[0])
    assert parity_expectation(out) == pytest.approx(math.exp(-2 * nbar), abs=1e-8)


def test_timeseries_validation():
    TimeSeries([0, 1], [0.5, 0.2])
    with pytest.raises(ValueError):
        TimeSeries([0, 0], [1, 2])
    with pytest.raises(ValueError):
        TimeSeries([0, 1], [1, float("nan")])
    with pytest.raises(ValueError):
        TimeSeries([0, 1, 2], [1, 2])


def test_series_term_count_guard():
    from jcsim.hilbert import TruncationError, TruncationWarning

    with pytest.raises(TruncationError):
        inversion_series_analytic(15, 1.0, [0.0], n_terms=20, strict=True)
    with pytest.warns(TruncationWarning):
        inversion_series_analytic(15, 1.0, [0.0], n_terms=20)
