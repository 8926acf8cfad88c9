"""
Truncated single-mode Fock space, field/joint state containers and the
standard bosonic and two-level operators.

Basis conventions
-----------------
Field: ``|0>, |1>, ..., |dim-1>``.

Joint atom-field space: atom index slowest, ``|g>`` before ``|e>``::

    |g,0>, |g,1>, ..., |g,dim-1>, |e,0>, ..., |e,dim-1>

so that ``sigma_z = diag(-1, +1)`` and ``<sigma_z> = +1`` means excited.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

NORM_TOL = 1e-10
TAIL_TOL = 1e-8

ATOM_G = np.array([1.0, 0.0], dtype=complex)
ATOM_E = np.array([0.0, 1.0], dtype=complex)

SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
# sigma_+ = |e><g| ; sigma_- = |g><e|
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
SIGMA_X = SIGMA_PLUS + SIGMA_MINUS
SIGMA_Y = -1j * (SIGMA_PLUS - SIGMA_MINUS)


class TruncationError(ValueError):
    """Raised in strict mode when the Fock cutoff drops too much weight."""


class TruncationWarning(UserWarning):
    pass


def _frozen(arr, dtype=complex):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class FieldState:
    """Pure state of the cavity mode in the truncated Fock basis.

    Parameters
    ----------
    amplitudes : array_like
        Complex probability amplitudes ``c_n``, ``n = 0 .. dim-1``.
    normalized : bool
        If True (default) the norm is checked against 1. Post-measurement
        intermediates may pass ``normalized=False``.
    """

    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size < 2:
            raise ValueError("field amplitudes must be a vector with dim >= 2")
        if self.normalized and abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ValueError(f"field state not normalized (norm={np.linalg.norm(amps):.3e})")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class JointState:
    """Pure atom-field state, amplitudes ordered with the atom index slowest."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.ndim != 1 or amps.size < 4 or amps.size % 2:
            raise ValueError("joint amplitudes must be a vector of even length >= 4")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ValueError(f"joint state not normalized (norm={np.linalg.norm(amps):.3e})")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim_field(self) -> int:
        return self.amplitudes.size // 2

    def blocks(self) -> np.ndarray:
        """View as a ``(2, dim_field)`` array: row 0 is ``g``, row 1 is ``e``."""
        return self.amplitudes.reshape(2, self.dim_field)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state on the field, atom or joint space.

    ``kind`` is one of ``"field"``, ``"atom"``, ``"joint"``; the joint
    ordering matches :class:`JointState`.
    """

    data: np.ndarray
    kind: str = "field"
    check: bool = field(default=True, compare=False)

    def __post_init__(self):
        rho = _frozen(self.data)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if self.kind not in ("field", "atom", "joint"):
            raise ValueError(f"unknown density-matrix kind {self.kind!r}")
        if self.kind == "joint" and rho.shape[0] % 2:
            raise ValueError("joint density matrix must have even dimension")
        if self.kind == "atom" and rho.shape[0] != 2:
            raise ValueError("atom density matrix must be 2x2")
        if self.check:
            if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
                raise ValueError("density matrix not Hermitian")
            if abs(np.trace(rho).real - 1.0) > 1e-8:
                raise ValueError(f"density matrix trace {np.trace(rho).real:.3e} != 1")
        object.__setattr__(self, "data", rho)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def dim_field(self) -> int:
        return self.dim // 2 if self.kind == "joint" else self.dim

    @classmethod
    def from_state(cls, state: FieldState | JointState) -> "DensityMatrix":
        psi = state.amplitudes
        kind = "joint" if isinstance(state, JointState) else "field"
        return cls(np.outer(psi, psi.conj()), kind=kind)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.data).min())


def default_dim(nbar: float) -> int:
    """Fock cutoff ``ceil(nbar + 10*sqrt(nbar) + 10)``."""
    if nbar < 0:
        raise ValueError("mean photon number must be non-negative")
    return int(math.ceil(nbar + 10.0 * math.sqrt(nbar) + 10.0))


def fock_state(n: int, dim: int) -> FieldState:
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if not 0 <= n < dim:
        raise IndexError(f"photon number {n} outside truncated basis of size {dim}")
    amps = np.zeros(dim, dtype=complex)
    amps[n] = 1.0
    return FieldState(amps)


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Unrenormalized ``<n|alpha>`` for ``n < dim``.

    Uses ``c_{n+1} = c_n * alpha / sqrt(n+1)`` so large ``|alpha|`` never
    touches a factorial.
    """
    c = np.empty(dim, dtype=complex)
    c[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(dim - 1):
        c[n + 1] = c[n] * alpha / math.sqrt(n + 1)
    return c


def tail_mass(alpha: complex, dim: int) -> float:
    """Probability weight of ``|alpha>`` above the cutoff."""
    c = coherent_amplitudes(alpha, dim)
    return max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))


def _check_tail(mass: float, dim: int, strict: bool):
    if mass <= TAIL_TOL:
        return
    msg = f"Fock cutoff dim={dim} truncates tail mass {mass:.3e} > {TAIL_TOL:g}"
    if strict:
        raise TruncationError(msg)
    warnings.warn(msg, TruncationWarning, stacklevel=3)


def coherent_state(alpha: complex, dim: int, strict: bool = False) -> FieldState:
    """Coherent state ``|alpha>`` truncated to ``dim`` levels and renormalized.

    A :class:`TruncationWarning` (or :class:`TruncationError` if ``strict``)
    is issued when more than ``1e-8`` of the Poisson weight lies above the
    cutoff.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    c = coherent_amplitudes(alpha, dim)
    _check_tail(max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2))), dim, strict)
    return FieldState(c / np.linalg.norm(c))


def cat_state(beta: complex, sign: int, dim: int, strict: bool = False) -> FieldState:
    """Normalized ``|beta> + sign*|-beta>`` with ``sign`` in ``{+1, -1}``.

    The parity selection is applied exactly: the even (``sign=+1``) cat has
    identically zero odd amplitudes and vice versa.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if sign == -1 and beta == 0:
        raise ValueError("odd cat state with beta=0 is the zero vector")
    c = coherent_amplitudes(beta, dim)
    _check_tail(max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2))), dim, strict)
    # |-beta> has amplitudes (-1)^n c_n
    parity = 1 - 2 * (np.arange(dim) % 2)
    amps = c * (1 + sign * parity)
    norm = np.linalg.norm(amps)
    if norm < 1e-300:
        raise ValueError("cat state amplitudes vanish within the truncation")
    return FieldState(amps / norm)


def annihilation(dim: int) -> np.ndarray:
    """``a`` with ``a|n> = sqrt(n)|n-1>``."""
    if dim < 2:
        raise ValueError("dim must be >= 2")
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def ladder_operators(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(a, a_dagger)``.

    The truncation makes ``a_dagger|dim-1> = 0`` so the commutator
    ``[a, a_dagger]`` equals the identity except at the bottom-right corner,
    where it is ``-(dim-1)``.
    """
    a = annihilation(dim)
    return a, a.conj().T.copy()


def number_operator(dim: int) -> np.ndarray:
    if dim < 2:
        raise ValueError("dim must be >= 2")
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def parity_operator(dim: int) -> np.ndarray:
    if dim < 2:
        raise ValueError("dim must be >= 2")
    return np.diag(1.0 - 2.0 * (np.arange(dim) % 2)).astype(complex)


def atom_state(theta: float = 0.0, phi: float = 0.0) -> np.ndarray:
    """Bloch-sphere atom ``cos(theta/2)|e> + exp(i phi) sin(theta/2)|g>``."""
    return math.cos(theta / 2) * ATOM_E + np.exp(1j * phi) * math.sin(theta / 2) * ATOM_G


def tensor_joint(atom, field_state: FieldState) -> JointState:
    """Kronecker product ``atom (x) field`` in the documented joint ordering."""
    atom = np.asarray(atom, dtype=complex)
    if atom.shape != (2,):
        raise ValueError(f"atom vector must have shape (2,), got {atom.shape}")
    if abs(np.linalg.norm(atom) - 1.0) > NORM_TOL:
        raise ValueError("atom vector not normalized")
    return JointState(np.kron(atom, field_state.amplitudes))


def joint_operator(atom_op=None, field_op=None, dim: int | None = None) -> np.ndarray:
    """Embed atom/field factors into the joint space (identity if omitted)."""
    if field_op is None and dim is None:
        raise ValueError("need a field operator or a dimension")
    if field_op is None:
        field_op = np.eye(dim, dtype=complex)
    if atom_op is None:
        atom_op = np.eye(2, dtype=complex)
    return np.kron(atom_op, field_op)


def is_hermitian(op: np.ndarray, tol: float = 1e-12) -> bool:
    op = np.asarray(op)
    return op.ndim == 2 and op.shape[0] == op.shape[1] and float(np.max(np.abs(op - op.conj().T))) < tol
