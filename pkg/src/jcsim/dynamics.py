"""
Jaynes-Cummings Hamiltonian and propagators.

Units: hbar = 1. Functions here take physical time ``t``; scaled time is
``lambda * t``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    DensityMatrix,
    JointState,
    is_hermitian,
    ladder_operators,
)


class Variant(str, enum.Enum):
    JC = "JC"
    ANTI_JC = "AntiJC"


class Frame(str, enum.Enum):
    LAB = "lab"
    ROTATING = "rotating"


class UnsupportedVariantError(ValueError):
    pass


class IntegratorError(RuntimeError):
    """Numerical guard failure in the master-equation integrator."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters.

    Attributes
    ----------
    omega0 : float
        Atomic transition frequency.
    omega : float
        Cavity mode frequency.
    lam : float
        Atom-field coupling ``lambda`` (>= 0; scaled-time helpers need > 0).
    variant : Variant
        ``JC`` (``sigma_+ a + sigma_- a^dag``) or ``AntiJC``
        (``sigma_- a + sigma_+ a^dag``).
    kappa : float
        Cavity energy decay rate (>= 0).
    """

    omega0: float = 1.0
    omega: float = 1.0
    lam: float = 1.0
    variant: Variant = Variant.JC
    kappa: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.lam >= 0:
            raise ValueError("coupling lambda must be >= 0")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")

    @property
    def detuning(self) -> float:
        return self.omega0 - self.omega

    @classmethod
    def resonant(cls, lam: float = 1.0, kappa: float = 0.0, variant=Variant.JC) -> "ModelParams":
        return cls(omega0=1.0, omega=1.0, lam=lam, variant=variant, kappa=kappa)


def _interaction(params: ModelParams, a: np.ndarray) -> np.ndarray:
    ad = a.conj().T
    if params.variant is Variant.JC:
        return np.kron(SIGMA_PLUS, a) + np.kron(SIGMA_MINUS, ad)
    return np.kron(SIGMA_MINUS, a) + np.kron(SIGMA_PLUS, ad)


def build_hamiltonian(params: ModelParams, dim_field: int, frame: Frame = Frame.ROTATING) -> np.ndarray:
    """Joint-space Hamiltonian.

    Lab frame: ``w0/2 sz + w a^dag a + lam*V``. Rotating frame (at the cavity
    frequency for both subsystems): ``Delta/2 sz + lam*V``. ``V`` is the JC or
    anti-JC coupling according to ``params.variant``.
    """
    frame = Frame(frame)
    if dim_field < 2:
        raise ValueError("dim_field must be >= 2")
    a, ad = ladder_operators(dim_field)
    eye = np.eye(dim_field)
    if frame is Frame.LAB:
        h0 = 0.5 * params.omega0 * np.kron(SIGMA_Z, eye) + params.omega * np.kron(np.eye(2), ad @ a)
    else:
        h0 = 0.5 * params.detuning * np.kron(SIGMA_Z, eye)
    return h0 + params.lam * _interaction(params, a)


def _block_coefficients(params: ModelParams, dim: int, t):
    """Dressed-state 2x2 propagator entries for every excitation block.

    Block ``n`` spans ``(|e,n>, |g,n+1>)`` with
    ``H_n = [[D/2, g_n], [g_n, -D/2]]``, ``g_n = lam*sqrt(n+1)``.
    ``exp(-i H_n t) = cos(W t/2) - i sin(W t/2) * H_n / (W/2)`` where
    ``W = sqrt(D^2 + 4 g_n^2)`` is the generalized Rabi frequency.
    """
    delta = params.detuning
    t = np.asarray(t, dtype=float)[..., None]
    g = params.lam * np.sqrt(np.arange(1, dim, dtype=float))
    half = 0.5 * np.sqrt(delta**2 + 4.0 * g**2)
    cos = np.cos(half * t)
    sinc = np.sin(half * t) / half
    u_ee = cos - 0.5j * delta * sinc
    u_gg = cos + 0.5j * delta * sinc
    u_eg = -1j * g * sinc
    return u_ee, u_gg, u_eg


def propagate_analytic(state: JointState, params: ModelParams, times) -> np.ndarray:
    """Exact rotating-frame JC evolution at many times.

    Returns an array of shape ``(len(times), 2*dim)``. Two states sit outside
    the coupled blocks in the truncated space: ``|g,0>`` (energy ``-D/2``)
    and ``|e,dim-1>`` (energy ``+D/2``, its partner ``|g,dim>`` is cut off).
    """
    if params.variant is not Variant.JC:
        raise UnsupportedVariantError("analytic propagator covers the JC variant only; use evolve_generic")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    dim = state.dim_field
    cg, ce = state.blocks()
    u_ee, u_gg, u_eg = _block_coefficients(params, dim, times)
    out = np.empty((times.size, 2, dim), dtype=complex)
    e_in, g_in = ce[:-1], cg[1:]
    out[:, 1, :-1] = u_ee * e_in + u_eg * g_in
    out[:, 0, 1:] = u_eg * e_in + u_gg * g_in
    half_delta = 0.5 * params.detuning
    out[:, 0, 0] = cg[0] * np.exp(1j * half_delta * times)
    out[:, 1, -1] = ce[-1] * np.exp(-1j * half_delta * times)
    return out.reshape(times.size, 2 * dim)


def evolve_analytic(state: JointState, params: ModelParams, t: float) -> JointState:
    """Evolve ``state`` for time ``t`` with the closed-form dressed-state propagator."""
    return JointState(propagate_analytic(state, params, [t])[0])


class Propagator:
    """``exp(-iHt)`` via a one-time eigendecomposition of a Hermitian ``H``."""

    def __init__(self, hamiltonian: np.ndarray):
        h = np.asarray(hamiltonian, dtype=complex)
        if not is_hermitian(h):
            raise ValueError("Hamiltonian is not Hermitian")
        self.energies, self.vectors = np.linalg.eigh(h)

    def trajectory(self, psi0, times) -> np.ndarray:
        """Amplitudes at each time, shape ``(len(times), dim)``."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        coeffs = self.vectors.conj().T @ np.asarray(psi0, dtype=complex)
        phases = np.exp(-1j * np.outer(times, self.energies))
        return (phases * coeffs) @ self.vectors.T

    def unitary(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T


def evolve_generic(state: JointState, hamiltonian, t):
    """Evolve under an arbitrary Hermitian ``H``.

    ``t`` may be a scalar (returns a :class:`JointState`) or a sequence of
    times (returns a list). The eigendecomposition is shared across times.
    """
    prop = hamiltonian if isinstance(hamiltonian, Propagator) else Propagator(hamiltonian)
    scalar = np.ndim(t) == 0
    amps = prop.trajectory(state.amplitudes, t)
    states = [JointState(row) for row in amps]
    return states[0] if scalar else states


def _need_coupling(params: ModelParams):
    if params.lam <= 0:
        raise ValueError("scaled time needs lambda > 0")


def collapse_time(params: ModelParams) -> float:
    """Collapse time ``1/(2 lambda)``."""
    _need_coupling(params)
    return 1.0 / (2.0 * params.lam)


def revival_times(params: ModelParams, nbar: float, k_max: int = 1) -> np.ndarray:
    """Revival times ``(2 pi / lambda) sqrt(nbar) k`` for ``k = 1..k_max``."""
    _need_coupling(params)
    if nbar < 4:
        warnings.warn("revival-time formula assumes nbar >> 1", RuntimeWarning, stacklevel=2)
    k = np.arange(1, k_max + 1)
    return 2.0 * math.pi / params.lam * math.sqrt(nbar) * k


# --- Lindblad ---------------------------------------------------------------


class _JointGenerator:
    """Matrix-free ``H rho`` and dissipator for the joint JC space.

    ``H`` is diagonal plus one off-diagonal coupling per excitation block, so
    ``H rho`` is computed by row shifts instead of dense matmuls.
    """

    def __init__(self, params: ModelParams, dim: int, frame: Frame = Frame.ROTATING):
        self.dim = dim
        self.kappa = params.kappa
        self.anti = params.variant is Variant.ANTI_JC
        n = np.arange(dim, dtype=float)
        if Frame(frame) is Frame.LAB:
            diag_g = -0.5 * params.omega0 + params.omega * n
            diag_e = 0.5 * params.omega0 + params.omega * n
        else:
            diag_g = np.full(dim, -0.5 * params.detuning)
            diag_e = np.full(dim, 0.5 * params.detuning)
        self.diag = np.concatenate([diag_g, diag_e])[:, None]
        self.coupling = (params.lam * np.sqrt(np.arange(1, dim, dtype=float)))[:, None]
        self.sqrt_n = np.sqrt(n[1:])[:, None]
        self.number = np.concatenate([n, n])
        self.anticomm = 0.5 * (self.number[:, None] + self.number[None, :])

    def h_times(self, rho: np.ndarray) -> np.ndarray:
        d = self.dim
        out = self.diag * rho
        c = self.coupling
        g_rows, e_rows = slice(0, d), slice(d, 2 * d)
        rg, re = rho[g_rows], rho[e_rows]
        if not self.anti:
            # lam*sqrt(n+1) (|e,n><g,n+1| + |g,n+1><e,n|)
            out[d : 2 * d - 1] += c * rg[1:]
            out[1:d] += c * re[:-1]
        else:
            # lam*sqrt(n+1) (|g,n><e,n+1| + |e,n+1><g,n|)
            out[0 : d - 1] += c * re[1:]
            out[d + 1 : 2 * d] += c * rg[:-1]
        return out

    def a_times(self, rho: np.ndarray) -> np.ndarray:
        """``(1 (x) a) rho``."""
        d = self.dim
        out = np.zeros_like(rho)
        out[0 : d - 1] = self.sqrt_n * rho[1:d]
        out[d : 2 * d - 1] = self.sqrt_n * rho[d + 1 : 2 * d]
        return out

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        hr = self.h_times(rho)
        drho = -1j * (hr - hr.conj().T)
        if self.kappa:
            ar = self.a_times(rho)
            jump = self.a_times(ar.conj().T).conj().T  # a rho a^dag
            drho += self.kappa * (jump - self.anticomm * rho)
        return drho


def lindblad_rhs(params: ModelParams, dim_field: int, frame: Frame = Frame.ROTATING):
    """Callable ``rho -> d rho/dt`` for ``-i[H,rho] + kappa D[a] rho``."""
    return _JointGenerator(params, dim_field, frame)


def evolve_lindblad(
    rho: DensityMatrix,
    params: ModelParams,
    t_grid,
    dt: float | None = None,
    frame: Frame = Frame.ROTATING,
    trace_guard: float = 1e-4,
) -> list[DensityMatrix]:
    """Fixed-step RK4 integration of the zero-temperature cavity master equation.

    Parameters
    ----------
    rho : DensityMatrix
        Joint initial state.
    t_grid : array_like
        Ascending output times starting at 0 (physical time).
    dt : float, optional
        Step size; defaults to ``1e-3 / lambda``. Each output interval is
        split into ``ceil(interval/dt)`` equal steps.
    trace_guard : float
        Maximum allowed ``|Tr rho - 1|``; exceeding it raises
        :class:`IntegratorError` naming the time.
    """
    if rho.kind != "joint":
        raise ValueError("evolve_lindblad expects a joint density matrix")
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or t_grid[0] != 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly ascending and start at 0")
    if dt is None:
        dt = 1e-3 / params.lam if params.lam > 0 else 1e-3
    rhs = _JointGenerator(params, rho.dim_field, frame)
    state = np.array(rho.data, dtype=complex)
    results = [rho]
    for t0, t1 in zip(t_grid[:-1], t_grid[1:]):
        steps = max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
        h = (t1 - t0) / steps
        for _ in range(steps):
            k1 = rhs(state)
            k2 = rhs(state + 0.5 * h * k1)
            k3 = rhs(state + 0.5 * h * k2)
            k4 = rhs(state + h * k3)
            state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        drift = abs(np.trace(state).real - 1.0)
        if not np.isfinite(drift) or drift > trace_guard:
            raise IntegratorError(f"trace drift {drift:.3e} exceeds {trace_guard:g} at t={t1:.6g}", time=float(t1))
        state = 0.5 * (state + state.conj().T)
        results.append(DensityMatrix(state.copy(), kind="joint", check=False))
    return results
