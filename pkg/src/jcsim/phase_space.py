"""
Quasi-probability distributions of the cavity field on a complex-plane grid.

Conventions: the grid coordinate is the coherent amplitude ``alpha``; the
Wigner function is normalized so that the vacuum has ``W(0) = 2/pi``, which
makes ``(pi/2) W(0) = <Parity>`` exact. The Husimi function is
``Q(alpha) = <alpha|rho|alpha>/pi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .hilbert import (
    DensityMatrix,
    FieldState,
    JointState,
    TruncationError,
    TruncationWarning,
    cat_state,
    coherent_amplitudes,
    coherent_state,
)
from .observables import _field_matrix, mean_photon_number


@dataclass(frozen=True)
class GridSpec:
    """Square uniform grid ``[-extent, extent]^2`` with ``points`` per axis."""

    extent: float = 6.5
    points: int = 121

    def __post_init__(self):
        if self.extent <= 0 or self.points < 3:
            raise ValueError("grid needs extent > 0 and at least 3 points per axis")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.points)

    @property
    def spacing(self) -> float:
        return 2.0 * self.extent / (self.points - 1)

    def alphas(self) -> np.ndarray:
        """Complex grid, indexed ``[im_index, re_index]``."""
        re, im = np.meshgrid(self.axis, self.axis)
        return re + 1j * im


def default_grid(nbar: float) -> GridSpec:
    if nbar <= 9:
        return GridSpec(6.5, 121)
    return GridSpec(math.sqrt(nbar) + 4.0, 121)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    re_axis: np.ndarray
    im_axis: np.ndarray
    values: np.ndarray  # [im_index, re_index]
    kind: str = "wigner"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("re_axis", "im_axis", "values"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.values.shape != (self.im_axis.size, self.re_axis.size):
            raise ValueError("values must have shape (len(im_axis), len(re_axis))")
        for ax in (self.re_axis, self.im_axis):
            steps = np.diff(ax)
            if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * max(1.0, abs(steps[0])):
                raise ValueError("grid axes must be uniform and ascending")

    @property
    def cell_area(self) -> float:
        return float((self.re_axis[1] - self.re_axis[0]) * (self.im_axis[1] - self.im_axis[0]))

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def value_at(self, alpha: complex) -> float:
        i = int(np.argmin(np.abs(self.im_axis - alpha.imag)))
        j = int(np.argmin(np.abs(self.re_axis - alpha.real)))
        return float(self.values[i, j])

    def argmax(self) -> complex:
        i, j = np.unravel_index(np.argmax(self.values), self.values.shape)
        return complex(self.re_axis[j], self.im_axis[i])


def _check_truncation(rho: np.ndarray, grid: GridSpec, strict: bool):
    dim = rho.shape[0]
    top = float(np.real(np.trace(rho[-2:, -2:])))
    msgs = []
    if top > 1e-8:
        msgs.append(f"state has weight {top:.2e} in the top Fock levels of dim={dim}")
    nbar = float(np.real(np.diagonal(rho)) @ np.arange(dim))
    if grid.extent < math.sqrt(max(nbar, 0.0)) + 2.0:
        msgs.append(f"grid extent {grid.extent} does not cover |alpha| ~ {math.sqrt(nbar):.2f}")
    if not msgs:
        return
    msg = "; ".join(msgs)
    if strict:
        raise TruncationError(msg)
    warnings.warn(msg, TruncationWarning, stacklevel=3)


def wigner_values(rho: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Wigner function of a field density matrix at arbitrary points.

    Sums ``rho_mn W_mn(alpha)`` where the Fock-basis Wigner functions
    ``W_mn`` (associated-Laguerre polynomials) are generated column by
    column with a three-term recursion, so no factorials are formed.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    a = np.asarray(alphas, dtype=complex)
    cur = [None] * dim
    cur[0] = np.exp(-2.0 * np.abs(a) ** 2) / np.pi
    w = rho[0, 0].real * cur[0].real
    for n in range(1, dim):
        cur[n] = 2.0 * a * cur[n - 1] / math.sqrt(n)
        w += 2.0 * np.real(rho[0, n] * cur[n])
    for m in range(1, dim):
        prev_row = cur[m]
        cur[m] = (2.0 * np.conj(a) * prev_row - math.sqrt(m) * cur[m - 1]) / math.sqrt(m)
        w += np.real(rho[m, m] * cur[m])
        for n in range(m + 1, dim):
            nxt = (2.0 * a * cur[n - 1] - math.sqrt(m) * prev_row) / math.sqrt(n)
            prev_row = cur[n]
            cur[n] = nxt
            w += 2.0 * np.real(rho[m, n] * cur[n])
    return 2.0 * np.real(w)


def husimi_values(rho: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """``<alpha|rho|alpha>/pi`` using exact (untruncated) coherent columns."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    flat = np.asarray(alphas, dtype=complex).ravel()
    cols = np.empty((flat.size, dim), dtype=complex)
    cols[:, 0] = np.exp(-0.5 * np.abs(flat) ** 2)
    for n in range(dim - 1):
        cols[:, n + 1] = cols[:, n] * flat / math.sqrt(n + 1)
    q = np.real(np.sum((cols.conj() @ rho) * cols, axis=1)) / np.pi
    return q.reshape(np.shape(alphas))


def _grid_result(values, grid: GridSpec, kind: str, meta=None) -> PhaseSpaceGrid:
    return PhaseSpaceGrid(grid.axis, grid.axis, values, kind=kind, meta=dict(meta or {}))


def wigner(state, grid: GridSpec | None = None, strict: bool = False) -> PhaseSpaceGrid:
    """Wigner function of the (reduced) field on ``grid``."""
    rho = _field_matrix(state)
    grid = grid or default_grid(mean_photon_number(state))
    _check_truncation(rho, grid, strict)
    return _grid_result(wigner_values(rho, grid.alphas()), grid, "wigner")


def husimi_q(state, grid: GridSpec | None = None, strict: bool = False) -> PhaseSpaceGrid:
    """Husimi Q function of the (reduced) field on ``grid``."""
    rho = _field_matrix(state)
    grid = grid or default_grid(mean_photon_number(state))
    _check_truncation(rho, grid, strict)
    return _grid_result(husimi_values(rho, grid.alphas()), grid, "husimi")


def wigner_negativity(grid: PhaseSpaceGrid) -> float:
    """Integrated negative volume ``sum |min(W, 0)| dA``."""
    return float(np.sum(np.clip(-grid.values, 0.0, None)) * grid.cell_area)


def smooth_to_husimi(grid: PhaseSpaceGrid) -> np.ndarray:
    """Convolve a Wigner grid with ``(2/pi) exp(-2|alpha|^2)``.

    The kernel factorizes into two 1-D Gaussians of variance 1/4 in each of
    ``Re(alpha)`` and ``Im(alpha)``.
    """
    h = grid.re_axis[1] - grid.re_axis[0]
    half = int(math.ceil(4.0 / h))
    x = h * np.arange(-half, half + 1)
    kernel = math.sqrt(2.0 / math.pi) * np.exp(-2.0 * x**2) * h
    out = ndimage.convolve1d(grid.values, kernel, axis=1, mode="constant")
    return ndimage.convolve1d(out, kernel, axis=0, mode="constant")


# --- lobe tracking -------------------------------------------------------------


@dataclass(frozen=True)
class LobeReport:
    time: float
    lobes: tuple  # ((alpha, height), ...) sorted by height, at most two
    separation: float  # angular separation in [0, pi]; 0 for a single lobe
    single_lobe: bool


def find_lobes(q: PhaseSpaceGrid, rel_height: float = 0.1, max_lobes: int = 2):
    """Local maxima of a Husimi grid above ``rel_height * max``.

    Each maximum is refined to the Q-weighted centroid of its 5x5
    neighbourhood. Returns ``[(alpha, height), ...]`` by decreasing height.
    """
    v = q.values
    peak = ndimage.maximum_filter(v, size=3, mode="constant", cval=-np.inf)
    mask = (v == peak) & (v >= rel_height * v.max())
    mask[[0, -1], :] = False
    mask[:, [0, -1]] = False
    idx = np.argwhere(mask)
    found = []
    for i, j in idx:
        i0, i1 = max(i - 2, 0), min(i + 3, v.shape[0])
        j0, j1 = max(j - 2, 0), min(j + 3, v.shape[1])
        patch = v[i0:i1, j0:j1]
        re = np.sum(patch * q.re_axis[None, j0:j1]) / patch.sum()
        im = np.sum(patch * q.im_axis[i0:i1, None]) / patch.sum()
        found.append((complex(re, im), float(v[i, j])))
    found.sort(key=lambda item: -item[1])
    return found[:max_lobes]


def angular_separation(a: complex, b: complex) -> float:
    d = abs(np.angle(a) - np.angle(b)) % (2 * np.pi)
    return float(min(d, 2 * np.pi - d))


def bifurcation_track(states, times, grid: GridSpec | None = None, rel_height: float = 0.1) -> list[LobeReport]:
    """Follow the two dominant Husimi lobes of a field trajectory.

    ``states`` may be joint states, field states or density matrices;
    ``times`` are the labels attached to each report.
    """
    reports = []
    for t, st in zip(times, states):
        q = husimi_q(st, grid or default_grid(mean_photon_number(st)))
        lobes = find_lobes(q, rel_height=rel_height)
        if len(lobes) < 2:
            reports.append(LobeReport(float(t), tuple(lobes), 0.0, True))
        else:
            sep = angular_separation(lobes[0][0], lobes[1][0])
            reports.append(LobeReport(float(t), tuple(lobes), sep, False))
    return reports


# --- cat diagnostics ---------------------------------------------------------------


def _overlap(state, target: np.ndarray) -> float:
    if isinstance(state, FieldState):
        return float(abs(np.vdot(target, state.amplitudes)) ** 2)
    if isinstance(state, JointState):
        rows = state.blocks()
        return float(np.sum(np.abs(rows @ target.conj()) ** 2))
    rho = _field_matrix(state)
    return float(np.real(target.conj() @ rho @ target))


def cat_fidelity(state, beta: complex, sign: int) -> float:
    """``<psi|rho|psi>`` against the normalized cat ``|beta> + sign|-beta>``."""
    dim = state.dim_field if isinstance(state, (JointState, DensityMatrix)) else state.dim
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        target = cat_state(beta, sign, dim).amplitudes
    return _overlap(state, target)


def coherent_fidelity(state, beta: complex) -> float:
    dim = state.dim_field if isinstance(state, (JointState, DensityMatrix)) else state.dim
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        target = coherent_state(beta, dim).amplitudes
    return _overlap(state, target)


@dataclass(frozen=True)
class FidelitySearch:
    fidelity: float
    beta: complex
    sign: int = 0


def _search_points(r_max: float, n_r: int, n_phi: int, half_plane: bool):
    radii = np.linspace(0.0, r_max, n_r)
    span = np.pi if half_plane else 2 * np.pi
    phis = np.arange(n_phi) * span / n_phi
    return [r * np.exp(1j * p) for r in radii for p in (phis if r > 0 else [0.0])]


def best_cat_fidelity(state, r_max: float = 5.0, n_r: int = 101, n_phi: int = 90) -> FidelitySearch:
    """Grid search over ``beta`` (half plane, since ``beta -> -beta`` only flips
    the cat's sign convention) and ``sign``."""
    dim = state.dim_field if isinstance(state, (JointState, DensityMatrix)) else state.dim
    betas = _search_points(r_max, n_r, n_phi, half_plane=True)
    best = FidelitySearch(-1.0, 0j, 1)
    # all targets at once: amplitudes c_n(beta) (1 +/- (-1)^n)
    parity = 1 - 2 * (np.arange(dim) % 2)
    cols = np.array([coherent_amplitudes(b, dim) for b in betas])
    rho = None if isinstance(state, (FieldState, JointState)) else _field_matrix(state)
    for sign in (1, -1):
        targets = cols * (1 + sign * parity)
        norms = np.linalg.norm(targets, axis=1)
        ok = norms > 1e-12
        targets = targets[ok] / norms[ok, None]
        bs = np.asarray(betas)[ok]
        if rho is None:
            rows = state.amplitudes[None, :] if isinstance(state, FieldState) else state.blocks()
            fid = np.sum(np.abs(targets.conj() @ rows.T) ** 2, axis=1)
        else:
            fid = np.real(np.sum((targets.conj() @ rho) * targets, axis=1))
        k = int(np.argmax(fid))
        if fid[k] > best.fidelity:
            best = FidelitySearch(float(fid[k]), complex(bs[k]), sign)
    return best


def best_coherent_fidelity(state, r_max: float = 5.0, n_r: int = 101, n_phi: int = 180) -> FidelitySearch:
    dim = state.dim_field if isinstance(state, (JointState, DensityMatrix)) else state.dim
    betas = np.asarray(_search_points(r_max, n_r, n_phi, half_plane=False))
    cols = np.array([coherent_amplitudes(b, dim) for b in betas])
    cols /= np.linalg.norm(cols, axis=1)[:, None]
    if isinstance(state, (FieldState, JointState)):
        rows = state.amplitudes[None, :] if isinstance(state, FieldState) else state.blocks()
        fid = np.sum(np.abs(cols.conj() @ rows.T) ** 2, axis=1)
    else:
        rho = _field_matrix(state)
        fid = np.real(np.sum((cols.conj() @ rho) * cols, axis=1))
    k = int(np.argmax(fid))
    return FidelitySearch(float(fid[k]), complex(betas[k]))
