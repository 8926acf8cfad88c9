import math

import numpy as np
import pytest
import scipy.linalg as sla

from jcsim.dynamics import ModelParams, propagate_analytic
from jcsim.hilbert import (
    ATOM_E,
    DensityMatrix,
    FieldState,
    JointState,
    TruncationError,
    TruncationWarning,
    cat_state,
    coherent_state,
    default_dim,
    fock_state,
    tensor_joint,
)
from jcsim.observables import parity_expectation, reduced_field
from jcsim.phase_space import (
    GridSpec,
    PhaseSpaceGrid,
    angular_separation,
    best_cat_fidelity,
    best_coherent_fidelity,
    bifurcation_track,
    cat_fidelity,
    coherent_fidelity,
    husimi_q,
    smooth_to_husimi,
    wigner,
    wigner_negativity,
    wigner_values,
)

RES = ModelParams.resonant()
SMALL = GridSpec(4.0, 41)


def displaced_parity_wigner(rho, alpha, big=90):
    """(2/pi) Tr[rho D(alpha) P D(alpha)^dag] with D from expm in a padded space."""
    dim = rho.shape[0]
    a = np.diag(np.sqrt(np.arange(1, big)), 1)
    D = sla.expm(alpha * a.T - np.conj(alpha) * a)
    block = D[:dim, :]
    parity = 1 - 2 * (np.arange(big) % 2)
    diag = np.einsum("ik,ij,jk->k", block.conj(), rho, block)
    return 2 / np.pi * float(np.real(np.sum(parity * diag)))


def random_rho(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m[:, -4:] = 0
    m[-4:, :] = 0
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def test_vacuum_wigner_origin():
    w = wigner(fock_state(0, 10), SMALL)
    assert w.value_at(0j) == pytest.approx(2 / np.pi, abs=1e-14)


def test_wigner_matches_displaced_parity_oracle():
    rng = np.random.default_rng(4)
    rho = random_rho(rng, 14)
    points = [0j, 0.4 - 0.3j, -1.2 + 0.8j, 2.1 + 0.1j]
    got = wigner_values(rho, np.array(points))
    for p, g in zip(points, got):
        assert g == pytest.approx(displaced_parity_wigner(rho, p), abs=1e-10)


def test_coherent_wigner_peak_location():
    beta = 1.5 - 2.0j
    w = wigner(coherent_state(beta, 40), GridSpec(5.0, 101))
    peak = w.argmax()
    assert abs(peak - beta) <= 0.5 * w.cell_area**0.5 * math.sqrt(2) + 1e-12


def test_wigner_normalization_and_reality():
    for st in (fock_state(3, 20), cat_state(2, 1, 40), coherent_state(2.5j, 50)):
        w = wigner(st, GridSpec(6.5, 121))
        assert w.integral() == pytest.approx(1, abs=2e-2)


def test_parity_identity():
    rng = np.random.default_rng(8)
    for _ in range(5):
        rho = DensityMatrix(random_rho(rng, 20))
        w0 = wigner_values(rho.data, np.array([0j]))[0]
        assert (np.pi / 2) * w0 == pytest.approx(parity_expectation(rho), abs=1e-8)


def test_displacement_covariance():
    grid = GridSpec(5.0, 101)  # spacing 0.1
    shift = 1.0 + 0.5j
    vac = wigner(fock_state(0, 40), grid)
    disp = wigner(coherent_state(shift, 40), grid)
    di, dj = 5, 10
    np.testing.assert_allclose(disp.values[di:, dj:], vac.values[:-di, :-dj], atol=1e-9)


def test_jcm_wigner_negativity():
    psi = tensor_joint(ATOM_E, coherent_state(3, default_dim(9)))
    st = JointState(propagate_analytic(psi, RES, [4.0])[0])
    assert wigner(st, GridSpec(6.5, 121)).values.min() < 0


def test_husimi_examples():
    assert husimi_q(fock_state(0, 10), SMALL).value_at(0j) == pytest.approx(1 / np.pi, abs=1e-14)
    assert husimi_q(fock_state(1, 10), SMALL).value_at(0j) == pytest.approx(0, abs=1e-14)


def test_husimi_cat_lobes_symmetric():
    grid = GridSpec(6.0, 121)  # 0.1 spacing puts +-3 on the grid
    q = husimi_q(cat_state(3, 1, default_dim(9)), grid)
    left, right = q.value_at(-3 + 0j), q.value_at(3 + 0j)
    assert left == pytest.approx(right, abs=1e-8)
    # brute force <alpha|psi> at alpha = 3 with the exact coherent overlap
    assert right == pytest.approx((1 + math.exp(-18)) ** 2 / (2 * (1 + math.exp(-18))) / np.pi, abs=1e-8)


def test_husimi_nonnegative_and_normalized():
    rng = np.random.default_rng(9)
    rho = DensityMatrix(random_rho(rng, 12))
    q = husimi_q(rho, GridSpec(6.5, 121))
    assert q.values.min() >= -1e-12
    assert q.integral() == pytest.approx(1, abs=2e-2)


def cat_wigner_closed_form(alpha, beta, sign):
    """Normalized cat Wigner function: two Gaussians plus interference fringes."""
    norm = 1.0 / (2.0 * (1.0 + sign * math.exp(-2 * abs(beta) ** 2)))
    g = np.exp(-2 * np.abs(alpha - beta) ** 2) + np.exp(-2 * np.abs(alpha + beta) ** 2)
    fringe = 2 * sign * np.exp(-2 * np.abs(alpha) ** 2) * np.cos(4 * np.imag(alpha * np.conj(beta)))
    return (2 / np.pi) * norm * (g + fringe)


def test_negativity_examples():
    grid = GridSpec(6.5, 121)
    assert wigner_negativity(wigner(fock_state(0, 30), grid)) < 1e-6
    assert wigner_negativity(wigner(coherent_state(1 + 1j, 30), grid)) < 1e-6
    w = wigner(cat_state(2, 1, 40), grid)
    closed = cat_wigner_closed_form(GridSpec(6.5, 121).alphas(), 2.0, 1)
    np.testing.assert_allclose(w.values, closed, atol=1e-10)
    brute = float(np.sum(np.clip(-closed, 0, None)) * grid.spacing**2)
    assert wigner_negativity(w) == pytest.approx(brute, abs=1e-9)
    assert brute > 0.05


def test_wigner_husimi_gaussian_smoothing():
    psi = tensor_joint(ATOM_E, coherent_state(3, default_dim(9)))
    st = JointState(propagate_analytic(psi, RES, [6.0])[0])
    grid = GridSpec(6.5, 121)
    w = wigner(st, grid)
    q = husimi_q(st, grid)
    assert np.max(np.abs(smooth_to_husimi(w) - q.values)) < 5e-3


def test_truncation_guard():
    with pytest.warns(TruncationWarning):
        st = coherent_state(3, 12)  # lots of weight at the top levels
    with pytest.warns(TruncationWarning):
        wigner(FieldState(st.amplitudes), SMALL)
    with pytest.raises(TruncationError):
        husimi_q(st, GridSpec(1.0, 11), strict=True)


def test_grid_validation():
    with pytest.raises(ValueError):
        PhaseSpaceGrid([0, 1, 3], [0, 1, 2], np.zeros((3, 3)))
    with pytest.raises(ValueError):
        GridSpec(1.0, 2)


def test_angular_separation_wraps():
    assert angular_separation(1j, -1j) == pytest.approx(np.pi)
    assert angular_separation(np.exp(3j), np.exp(-3j)) == pytest.approx(2 * np.pi - 6)


@pytest.fixture(scope="module")
def nbar15_track():
    nbar = 15
    psi = tensor_joint(ATOM_E, coherent_state(math.sqrt(nbar), default_dim(nbar)))
    t_r = 2 * math.pi * math.sqrt(nbar)
    times = np.array([0.0, t_r / 2, t_r])
    states = [JointState(a) for a in propagate_analytic(psi, RES, times)]
    return bifurcation_track(states, times)


def test_bifurcation_initial_single_lobe(nbar15_track):
    r = nbar15_track[0]
    assert r.single_lobe
    assert abs(np.angle(r.lobes[0][0])) < 0.05


def test_bifurcation_half_revival_opposite(nbar15_track):
    r = nbar15_track[1]
    assert not r.single_lobe
    assert abs(r.separation - np.pi) < 0.15


def test_bifurcation_revival_merged(nbar15_track):
    assert nbar15_track[2].single_lobe


def test_cat_fidelity_examples():
    even = cat_state(2, 1, 40)
    assert cat_fidelity(even, 2, 1) == pytest.approx(1, abs=1e-12)
    assert cat_fidelity(even, 2, -1) == pytest.approx(0, abs=1e-12)
    assert coherent_fidelity(coherent_state(1j, 30), 1j) == pytest.approx(1, abs=1e-12)
    rho = DensityMatrix.from_state(even)
    assert cat_fidelity(rho, 2, 1) == pytest.approx(1, abs=1e-12)


def test_best_cat_beats_coherent_at_half_revival():
    nbar = 9
    psi = tensor_joint(ATOM_E, coherent_state(3, 60))
    st = JointState(propagate_analytic(psi, RES, [math.pi * math.sqrt(nbar)])[0])
    cat = best_cat_fidelity(st)
    coh = best_coherent_fidelity(st)
    assert cat.fidelity > coh.fidelity
    # pure and mixed inputs give the same search result
    assert best_cat_fidelity(reduced_field(st)).fidelity == pytest.approx(cat.fidelity, abs=1e-10)
