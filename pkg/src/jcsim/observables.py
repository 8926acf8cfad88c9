"""
Scalar observables of pure and mixed atom-field states.

Field observables accept a :class:`FieldState`, a field or joint
:class:`DensityMatrix`, or a :class:`JointState` (reduced implicitly).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .hilbert import DensityMatrix, FieldState, JointState, TruncationError, TruncationWarning

LN2 = math.log(2.0)


@dataclass(frozen=True)
class TimeSeries:
    """Observable sampled on scaled time ``lambda*t``."""

    times: np.ndarray
    values: np.ndarray
    label: str = "value"

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        values = np.array(self.values)
        if times.ndim != 1 or values.shape[:1] != times.shape:
            raise ValueError("times and values must have matching leading length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly ascending")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"non-finite values in series {self.label!r}")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.times.size


# --- moments ----------------------------------------------------------------


def _field_rows(state) -> np.ndarray | None:
    """Pure-state amplitude rows ``(k, dim)`` whose outer-product sum is rho_field."""
    if isinstance(state, FieldState):
        return state.amplitudes[None, :]
    if isinstance(state, JointState):
        return state.blocks()
    return None


def _field_matrix(state) -> np.ndarray:
    if isinstance(state, DensityMatrix):
        if state.kind == "field":
            return state.data
        if state.kind == "joint":
            return reduced_field(state).data
        raise ValueError("atom density matrix has no field observables")
    rows = _field_rows(state)
    if rows is None:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    return rows.T @ rows.conj()


def _moments(state):
    """Return ``<a>, <a^2>, <n>, <n^2>`` of the field."""
    rows = _field_rows(state)
    if rows is not None:
        dim = rows.shape[1]
        n = np.arange(dim)
        s1 = np.sqrt(np.arange(1, dim))
        s2 = np.sqrt(np.arange(1, dim - 1) * np.arange(2, dim))
        a = np.sum(rows[:, :-1].conj() * s1 * rows[:, 1:])
        a2 = np.sum(rows[:, :-2].conj() * s2 * rows[:, 2:])
        p = np.sum(np.abs(rows) ** 2, axis=0)
    else:
        rho = _field_matrix(state)
        dim = rho.shape[0]
        n = np.arange(dim)
        # Tr(rho a) = sum_n rho[n+1, n] sqrt(n+1)
        a = np.sum(np.diagonal(rho, -1) * np.sqrt(np.arange(1, dim)))
        a2 = np.sum(np.diagonal(rho, -2) * np.sqrt(np.arange(1, dim - 1) * np.arange(2, dim)))
        p = np.real(np.diagonal(rho))
    return complex(a), complex(a2), float(p @ n), float(p @ n**2)


def photon_distribution(state) -> np.ndarray:
    """``P(n)`` for ``n = 0 .. dim-1``."""
    rows = _field_rows(state)
    if rows is not None:
        return np.sum(np.abs(rows) ** 2, axis=0)
    return np.clip(np.real(np.diagonal(_field_matrix(state))), 0.0, None)


def mean_photon_number(state) -> float:
    return _moments(state)[2]


def quadrature_squeezing(state) -> tuple[float, float]:
    """Return ``(s1, s2)`` with ``s_i = Var(X_i) - 1/4``.

    ``X1 = (a + a^dag)/2`` and ``X2 = i(a - a^dag)/2``; vacuum noise is 1/4
    and ``s_i < 0`` signals squeezing.
    """
    a, a2, n, _ = _moments(state)
    x1_sq = (2.0 * a2.real + 2.0 * n + 1.0) / 4.0
    x2_sq = (-2.0 * a2.real + 2.0 * n + 1.0) / 4.0
    # <X1> = Re<a>, <X2> = -Im<a>
    s1 = x1_sq - a.real**2 - 0.25
    s2 = x2_sq - a.imag**2 - 0.25
    return float(s1), float(s2)


class UndefinedObservableError(ValueError):
    pass


def mandel_q(state) -> float:
    """Mandel ``Q = Var(n)/<n> - 1``; undefined for the vacuum."""
    _, _, n, n2 = _moments(state)
    if n <= 1e-14:
        raise UndefinedObservableError("Mandel Q is undefined for <n> = 0")
    return float((n2 - n * n) / n - 1.0)


def parity_expectation(state) -> float:
    p = photon_distribution(state)
    return float(np.sum(p[0::2]) - np.sum(p[1::2]))


def atomic_inversion(state) -> float:
    """``<sigma_z>``: +1 for the excited atom, -1 for the ground atom."""
    if isinstance(state, JointState):
        cg, ce = state.blocks()
        return float(np.vdot(ce, ce).real - np.vdot(cg, cg).real)
    if isinstance(state, DensityMatrix) and state.kind in ("joint", "atom"):
        rho_a = reduced_atom(state).data if state.kind == "joint" else state.data
        return float(rho_a[1, 1].real - rho_a[0, 0].real)
    raise TypeError("atomic inversion needs a joint state or an atom/joint density matrix")


def reduced_field(joint) -> DensityMatrix:
    """Partial trace over the atom."""
    if isinstance(joint, JointState):
        rows = joint.blocks()
        return DensityMatrix(rows.T @ rows.conj(), kind="field")
    if isinstance(joint, DensityMatrix) and joint.kind == "joint":
        d = joint.dim_field
        rho = joint.data
        return DensityMatrix(rho[:d, :d] + rho[d:, d:], kind="field")
    raise TypeError("reduced_field expects a joint state")


def reduced_atom(joint) -> DensityMatrix:
    """Partial trace over the field, in the ``(g, e)`` basis."""
    if isinstance(joint, JointState):
        rows = joint.blocks()
        return DensityMatrix(rows @ rows.conj().T, kind="atom")
    if isinstance(joint, DensityMatrix) and joint.kind == "joint":
        d = joint.dim_field
        blocks = joint.data.reshape(2, d, 2, d)
        return DensityMatrix(np.einsum("injn->ij", blocks), kind="atom")
    raise TypeError("reduced_atom expects a joint state")


def von_neumann_entropy(rho) -> float:
    """Entropy in nats; eigenvalues below ``-1e-10`` are a hard error."""
    data = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    w = np.linalg.eigvalsh(data)
    if w.min() < -1e-10:
        raise ValueError(f"density matrix has eigenvalue {w.min():.3e}")
    w = w[w > 1e-16]
    return float(-np.sum(w * np.log(w)))


def entanglement_entropy(joint: JointState, normalized: bool = False) -> float:
    """Atom-field entanglement entropy of a pure joint state.

    In nats (``0 <= S <= ln 2``); with ``normalized=True`` returns ``S/ln 2``.
    """
    if not isinstance(joint, JointState):
        raise TypeError("entanglement entropy is defined here for pure joint states")
    w = np.linalg.eigvalsh(reduced_atom(joint).data)
    w = np.clip(w, -1e-10, None)
    w = w[w > 1e-16]
    s = float(-np.sum(w * np.log(w)))
    return s / LN2 if normalized else s


# --- analytic series ---------------------------------------------------------


def poisson_weights(nbar: float, n_terms: int) -> np.ndarray:
    """``exp(-nbar) nbar^n / n!`` evaluated through log-gamma."""
    n = np.arange(n_terms)
    if nbar == 0:
        return (n == 0).astype(float)
    return np.exp(-nbar + n * math.log(nbar) - gammaln(n + 1))


def inversion_series_analytic(nbar: float, lam: float, t_grid, n_terms: int | None = None, strict: bool = False) -> TimeSeries:
    """Direct summation of ``W(t) = sum_n P_n cos(2 lam t sqrt(n+1))``.

    Parameters
    ----------
    nbar : float
        Mean photon number of the initial coherent field (atom excited).
    lam : float
        Coupling strength.
    t_grid : array_like
        Physical times.
    n_terms : int, optional
        Number of Poisson terms; default leaves a tail below 1e-12.
    strict : bool
        Raise if the neglected Poisson tail exceeds 1e-10.
    """
    if n_terms is None:
        n_terms = int(math.ceil(nbar + 12.0 * math.sqrt(nbar) + 20.0))
    p = poisson_weights(nbar, n_terms)
    tail = 1.0 - p.sum()
    if tail > 1e-10:
        msg = f"{n_terms} terms leave Poisson tail {tail:.3e}"
        if strict:
            raise TruncationError(msg)
        warnings.warn(msg, TruncationWarning, stacklevel=2)
    t = np.asarray(t_grid, dtype=float)
    freqs = 2.0 * lam * np.sqrt(np.arange(1, n_terms + 1))
    values = np.cos(np.outer(t, freqs)) @ p
    return TimeSeries(lam * t, values, label="inversion_analytic")
