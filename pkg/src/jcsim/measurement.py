"""
Conditional preparation of the cavity field by atom detection.

An atom crosses the cavity (JC interaction for a given time), receives an
instantaneous classical pulse once outside, and is detected in ``g`` or
``e``. The field is projected onto the conditional pure state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ModelParams, Propagator, Variant, build_hamiltonian, propagate_analytic
from .hilbert import ATOM_E, SIGMA_X, SIGMA_Y, FieldState, JointState, tensor_joint
from .observables import quadrature_squeezing

MIN_PROBABILITY = 1e-12


class Outcome(str, enum.Enum):
    G = "G"
    E = "E"

    @property
    def index(self) -> int:
        return 0 if self is Outcome.G else 1


class ImpossibleOutcomeError(ValueError):
    def __init__(self, message, outcome=None, step=None):
        super().__init__(message)
        self.outcome = outcome
        self.step = step


@dataclass(frozen=True)
class MeasurementRecord:
    outcome: Outcome
    probability: float
    post_field: FieldState


def pulse_unitary(theta: float, phi: float) -> np.ndarray:
    """``cos(theta/2) - i sin(theta/2) (cos(phi) sx + sin(phi) sy)`` on the atom."""
    axis = math.cos(phi) * SIGMA_X + math.sin(phi) * SIGMA_Y
    return math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * axis


def atom_rotation(joint: JointState, theta: float, phi: float = 0.0) -> JointState:
    """Apply a classical pulse of area ``theta`` and phase ``phi`` to the atom."""
    rotated = pulse_unitary(theta, phi) @ joint.blocks()
    return JointState(rotated.reshape(-1))


def outcome_probabilities(joint: JointState) -> dict:
    rows = joint.blocks()
    return {o: float(np.vdot(rows[o.index], rows[o.index]).real) for o in Outcome}


def project_atom(joint: JointState, outcome) -> MeasurementRecord:
    """Detect the atom in ``outcome``; returns the Born weight and field state."""
    outcome = Outcome(outcome)
    branch = joint.blocks()[outcome.index]
    prob = float(np.vdot(branch, branch).real)
    if prob <= MIN_PROBABILITY:
        raise ImpossibleOutcomeError(f"outcome {outcome.value} has probability {prob:.3e}", outcome=outcome)
    return MeasurementRecord(outcome, prob, FieldState(branch / math.sqrt(prob)))


@dataclass(frozen=True)
class SequenceStep:
    """One atom: interaction time (physical), pulse, and demanded detection."""

    time: float
    outcome: Outcome
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "outcome", Outcome(self.outcome))
        if self.time < 0:
            raise ValueError("interaction time must be >= 0")


@dataclass(frozen=True)
class SequenceResult:
    field: FieldState
    probability: float
    records: tuple = ()


def interact(joint: JointState, params: ModelParams, t: float) -> JointState:
    if t == 0:
        return joint
    if params.variant is Variant.JC:
        return JointState(propagate_analytic(joint, params, [t])[0])
    prop = Propagator(build_hamiltonian(params, joint.dim_field))
    return JointState(prop.trajectory(joint.amplitudes, [t])[0])


def run_sequence(initial: FieldState, steps, params: ModelParams, atom=ATOM_E) -> SequenceResult:
    """Thread the field through a sequence of freshly injected atoms.

    Each step injects ``atom`` (excited by default), interacts, pulses and
    post-selects. The joint probability is the product of step probabilities.
    Raises :class:`ImpossibleOutcomeError` with the failing step index.
    """
    field = initial
    prob = 1.0
    records = []
    for k, step in enumerate(steps):
        if not isinstance(step, SequenceStep):
            step = SequenceStep(**step)
        joint = interact(tensor_joint(atom, field), params, step.time)
        if step.theta:
            joint = atom_rotation(joint, step.theta, step.phi)
        try:
            rec = project_atom(joint, step.outcome)
        except ImpossibleOutcomeError as exc:
            raise ImpossibleOutcomeError(f"step {k}: {exc}", outcome=step.outcome, step=k) from exc
        records.append(rec)
        field = rec.post_field
        prob *= rec.probability
    return SequenceResult(field, prob, tuple(records))


@dataclass(frozen=True)
class ConditionalSqueezing:
    s1: float
    time: float
    theta: float
    phi: float
    outcome: Outcome
    probability: float
    field: FieldState


def conditional_squeezing_search(
    initial: FieldState,
    params: ModelParams,
    t_max: float,
    n_times: int = 400,
    thetas=(math.pi / 2,),
    n_phi: int = 16,
    atom=ATOM_E,
) -> ConditionalSqueezing:
    """Single-atom grid search for the most squeezed conditional field.

    Scans interaction times ``linspace(0, t_max, n_times)``, pulse areas
    ``thetas``, phases ``2 pi k / n_phi`` and both detection outcomes.
    """
    if params.variant is not Variant.JC:
        raise ValueError("conditional search uses the analytic JC propagator")
    times = np.linspace(0.0, t_max, n_times)
    amps = propagate_analytic(tensor_joint(atom, initial), params, times)
    rows = amps.reshape(n_times, 2, initial.dim)
    best = None
    for theta in thetas:
        for k in range(n_phi):
            phi = 2.0 * math.pi * k / n_phi
            rotated = np.einsum("ij,tjn->tin", pulse_unitary(theta, phi), rows)
            for outcome in Outcome:
                branch = rotated[:, outcome.index]
                probs = np.sum(np.abs(branch) ** 2, axis=1)
                for i in np.flatnonzero(probs > MIN_PROBABILITY):
                    f = FieldState(branch[i] / math.sqrt(probs[i]))
                    s1 = quadrature_squeezing(f)[0]
                    if best is None or s1 < best.s1:
                        best = ConditionalSqueezing(s1, float(times[i]), theta, phi, outcome, float(probs[i]), f)
    return best
