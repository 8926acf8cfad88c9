"""
Declarative scenarios: parse a JSON config, run the pipeline, write outputs.

Schema (all times are scaled, ``lambda*t``)::

    {
      "name": "fig1",
      "model": {"omega0": 1, "omega": 1, "lambda": 1, "variant": "JC"},
      "initial": {
        "field": {"type": "coherent", "nbar": 15}
                 | {"type": "coherent", "alpha": 3.0 | [re, im]}
                 | {"type": "fock", "n": 2}
                 | {"type": "cat", "beta": 2.0 | [re, im], "sign": 1},
        "atom": "e" | "g" | {"theta": 1.57, "phi": 0.0}
      },
      "evolution": {"frame": "rotating", "t_max": 50, "n_samples": 2001,
                    "kappa": 0.0, "dt": 0.001},
      "outputs": ["inversion", "parity",
                  {"kind": "wigner", "times": [0, 5], "extent": 6.5, "points": 121}],
      "measurement_sequence": [{"lambda_t": 3.0, "theta": 1.57, "phi": 0.0, "outcome": "G"}],
      "truncation": null,
      "strict": false,
      "formats": ["csv"]
    }
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import Frame, ModelParams, Propagator, Variant, build_hamiltonian, evolve_lindblad, propagate_analytic
from .hilbert import (
    ATOM_E,
    ATOM_G,
    DensityMatrix,
    JointState,
    TruncationWarning,
    atom_state,
    cat_state,
    coherent_amplitudes,
    coherent_state,
    default_dim,
    fock_state,
    tensor_joint,
)
from .io import distribution_csv, emit_csv, emit_json, series_csv
from .measurement import SequenceStep, run_sequence
from .observables import (
    TimeSeries,
    atomic_inversion,
    entanglement_entropy,
    mandel_q,
    mean_photon_number,
    parity_expectation,
    photon_distribution,
    quadrature_squeezing,
    reduced_atom,
    von_neumann_entropy,
)
from .phase_space import GridSpec, default_grid, husimi_q, wigner

THREADS_ENV = "JCM_SIM_THREADS"

OBSERVABLES = {
    "inversion": ("observables", "atomic inversion <sigma_z>"),
    "s1": ("observables", "Var(X1) - 1/4"),
    "s2": ("observables", "Var(X2) - 1/4"),
    "mandel_q": ("observables", "Mandel Q parameter"),
    "parity": ("observables", "photon-number parity <(-1)^n>"),
    "entropy": ("observables", "atom-field entanglement entropy (nats)"),
    "mean_photon": ("observables", "mean photon number <n>"),
    "photon_distribution": ("observables", "P(n) at every sample, long form"),
    "wigner": ("phase_space", "Wigner function grid at requested times"),
    "husimi": ("phase_space", "Husimi Q function grid at requested times"),
}
SERIES_NAMES = tuple(k for k, (mod, _) in OBSERVABLES.items() if mod == "observables")
GRID_KINDS = ("wigner", "husimi")


def list_observables() -> dict:
    """Map every output name to ``(module, description)``."""
    return dict(OBSERVABLES)


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


# --- config dataclasses -------------------------------------------------------------


@dataclass(frozen=True)
class FieldSpec:
    type: str
    n: int = 0
    amplitude: complex = 0j  # alpha (coherent) or beta (cat)
    sign: int = 1

    @property
    def nbar(self) -> float:
        return float(self.n) if self.type == "fock" else abs(self.amplitude) ** 2


@dataclass(frozen=True)
class AtomSpec:
    label: str = "e"  # "e", "g" or "bloch"
    theta: float = 0.0
    phi: float = 0.0

    def vector(self) -> np.ndarray:
        if self.label == "e":
            return ATOM_E
        if self.label == "g":
            return ATOM_G
        return atom_state(self.theta, self.phi)


@dataclass(frozen=True)
class ModelSpec:
    omega0: float = 1.0
    omega: float = 1.0
    lam: float = 1.0
    variant: str = "JC"


@dataclass(frozen=True)
class EvolutionSpec:
    t_max: float
    n_samples: int = 1001
    frame: str = "rotating"
    kappa: float = 0.0
    dt: float = 1e-3  # scaled step lambda*dt


@dataclass(frozen=True)
class GridRequest:
    kind: str
    times: tuple
    extent: float | None = None
    points: int = 121


@dataclass(frozen=True)
class StepSpec:
    lambda_t: float
    outcome: str
    theta: float = 0.0
    phi: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    field: FieldSpec
    evolution: EvolutionSpec
    atom: AtomSpec = AtomSpec()
    model: ModelSpec = ModelSpec()
    series: tuple = ()
    grids: tuple = ()
    measurement_sequence: tuple = ()
    truncation: int | None = None
    strict: bool = False
    formats: tuple = ("csv",)
    name: str = "scenario"

    def params(self) -> ModelParams:
        m = self.model
        return ModelParams(m.omega0, m.omega, m.lam, Variant(m.variant), self.evolution.kappa)

    @property
    def dim(self) -> int:
        if self.truncation is not None:
            return self.truncation
        d = default_dim(self.field.nbar)
        return max(d, self.field.n + 2) if self.field.type == "fock" else d


# --- parsing ------------------------------------------------------------------------


def _keys(obj, allowed, path, required=()):
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    for k in obj:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}" if path else k, "unknown key")
    for k in required:
        if k not in obj:
            raise ConfigError(f"{path}.{k}" if path else k, "missing required key")


def _num(obj, key, path, default=None, lo=None, lo_open=False, integer=False):
    p = f"{path}.{key}"
    if key not in obj:
        if default is None:
            raise ConfigError(p, "missing required key")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(p, "expected a finite number")
    if integer and int(v) != v:
        raise ConfigError(p, "expected an integer")
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(p, f"must be {'>' if lo_open else '>='} {lo}")
    return int(v) if integer else float(v)


def _complex(v, path) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(float(v), 0.0)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(path, "expected a number or [re, im]")


def _parse_field(obj, path) -> FieldSpec:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError(path, "field needs a 'type'")
    kind = obj["type"]
    if kind == "fock":
        _keys(obj, {"type", "n"}, path, ("n",))
        return FieldSpec("fock", n=_num(obj, "n", path, lo=0, integer=True))
    if kind == "coherent":
        _keys(obj, {"type", "alpha", "nbar"}, path)
        if ("alpha" in obj) == ("nbar" in obj):
            raise ConfigError(path, "give exactly one of 'alpha' or 'nbar'")
        if "nbar" in obj:
            amp = complex(math.sqrt(_num(obj, "nbar", path, lo=0)), 0.0)
        else:
            amp = _complex(obj["alpha"], f"{path}.alpha")
        return FieldSpec("coherent", amplitude=amp)
    if kind == "cat":
        _keys(obj, {"type", "beta", "sign"}, path, ("beta",))
        sign = obj.get("sign", 1)
        if sign not in (1, -1) or isinstance(sign, bool):
            raise ConfigError(f"{path}.sign", "must be +1 or -1")
        beta = _complex(obj["beta"], f"{path}.beta")
        if beta == 0 and sign == -1:
            raise ConfigError(f"{path}.beta", "odd cat with beta=0 is undefined")
        return FieldSpec("cat", amplitude=beta, sign=sign)
    raise ConfigError(f"{path}.type", f"unknown field type {kind!r}")


def _parse_atom(obj, path) -> AtomSpec:
    if obj in ("e", "g"):
        return AtomSpec(obj)
    if isinstance(obj, dict):
        _keys(obj, {"theta", "phi"}, path, ("theta",))
        return AtomSpec("bloch", _num(obj, "theta", path), _num(obj, "phi", path, default=0.0))
    raise ConfigError(path, "atom must be 'e', 'g' or {theta, phi}")


def _parse_outputs(items, path):
    if not isinstance(items, list) or not items:
        raise ConfigError(path, "expected a non-empty list")
    series, grids = [], []
    for i, item in enumerate(items):
        p = f"{path}[{i}]"
        if isinstance(item, str):
            if item in GRID_KINDS:
                raise ConfigError(p, f"{item!r} needs an object with 'times'")
            if item not in SERIES_NAMES:
                raise ConfigError(p, f"unknown observable {item!r}")
            if item in series:
                raise ConfigError(p, f"duplicate observable {item!r}")
            series.append(item)
        elif isinstance(item, dict):
            _keys(item, {"kind", "times", "extent", "points"}, p, ("kind", "times"))
            if item["kind"] not in GRID_KINDS:
                raise ConfigError(f"{p}.kind", f"unknown grid kind {item['kind']!r}")
            times = item["times"]
            if not isinstance(times, list) or not times:
                raise ConfigError(f"{p}.times", "expected a non-empty list")
            for j, t in enumerate(times):
                if isinstance(t, bool) or not isinstance(t, (int, float)) or t < 0:
                    raise ConfigError(f"{p}.times[{j}]", "expected a time >= 0")
            extent = _num(item, "extent", p, lo=0, lo_open=True) if "extent" in item else None
            points = _num(item, "points", p, default=121, lo=3, integer=True)
            grids.append(GridRequest(item["kind"], tuple(float(t) for t in times), extent, points))
        else:
            raise ConfigError(p, "expected a name or a grid request object")
    return tuple(series), tuple(grids)


TOP_KEYS = {"name", "model", "initial", "evolution", "outputs", "measurement_sequence", "truncation", "strict", "formats"}


def parse_config(text: str | dict) -> ScenarioConfig:
    """Validate a JSON scenario and fill defaults.

    Raises :class:`ConfigError` whose ``path`` names the offending field.
    """
    if isinstance(text, dict):
        raw = text
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"invalid JSON: {exc}") from exc
    _keys(raw, TOP_KEYS, "", ("initial", "evolution", "outputs"))

    model_raw = raw.get("model", {})
    _keys(model_raw, {"omega0", "omega", "lambda", "variant"}, "model")
    variant = model_raw.get("variant", "JC")
    if variant not in ("JC", "AntiJC"):
        raise ConfigError("model.variant", "must be 'JC' or 'AntiJC'")
    model = ModelSpec(
        _num(model_raw, "omega0", "model", default=1.0),
        _num(model_raw, "omega", "model", default=1.0),
        _num(model_raw, "lambda", "model", default=1.0, lo=0, lo_open=True),
        variant,
    )

    init = raw["initial"]
    _keys(init, {"field", "atom"}, "initial", ("field",))
    fspec = _parse_field(init["field"], "initial.field")
    atom = _parse_atom(init.get("atom", "e"), "initial.atom")

    ev = raw["evolution"]
    _keys(ev, {"frame", "t_max", "n_samples", "kappa", "dt"}, "evolution", ("t_max",))
    frame = ev.get("frame", "rotating")
    if frame not in ("rotating", "lab"):
        raise ConfigError("evolution.frame", "must be 'rotating' or 'lab'")
    evolution = EvolutionSpec(
        t_max=_num(ev, "t_max", "evolution", lo=0, lo_open=True),
        n_samples=_num(ev, "n_samples", "evolution", default=1001, integer=True),
        frame=frame,
        kappa=_num(ev, "kappa", "evolution", default=0.0, lo=0),
        dt=_num(ev, "dt", "evolution", default=1e-3, lo=0, lo_open=True),
    )
    if evolution.n_samples < 2:
        raise ConfigError("evolution.n_samples", "must be >= 2")

    series, grids = _parse_outputs(raw["outputs"], "outputs")
    for i, g in enumerate(grids):
        if max(g.times) > evolution.t_max:
            raise ConfigError(f"outputs[{i}].times", "sample time beyond evolution.t_max")

    steps = []
    seq = raw.get("measurement_sequence", [])
    if not isinstance(seq, list):
        raise ConfigError("measurement_sequence", "expected a list")
    for i, st in enumerate(seq):
        p = f"measurement_sequence[{i}]"
        _keys(st, {"lambda_t", "theta", "phi", "outcome"}, p, ("lambda_t", "outcome"))
        if st["outcome"] not in ("G", "E"):
            raise ConfigError(f"{p}.outcome", "must be 'G' or 'E'")
        steps.append(StepSpec(_num(st, "lambda_t", p, lo=0), st["outcome"], _num(st, "theta", p, default=0.0), _num(st, "phi", p, default=0.0)))

    trunc = raw.get("truncation")
    if trunc is not None:
        trunc = _num(raw, "truncation", "", lo=2, integer=True)
    strict = raw.get("strict", False)
    if not isinstance(strict, bool):
        raise ConfigError("strict", "expected true or false")
    formats = raw.get("formats", ["csv"])
    if not isinstance(formats, list) or not formats or any(f not in ("csv", "json") for f in formats):
        raise ConfigError("formats", "expected a non-empty list drawn from 'csv', 'json'")
    name = raw.get("name", "scenario")
    if not isinstance(name, str) or not name:
        raise ConfigError("name", "expected a non-empty string")

    return ScenarioConfig(
        field=fspec,
        evolution=evolution,
        atom=atom,
        model=model,
        series=series,
        grids=grids,
        measurement_sequence=tuple(steps),
        truncation=trunc,
        strict=strict,
        formats=tuple(dict.fromkeys(formats)),
        name=name,
    )


def _amp_json(z: complex):
    return z.real if z.imag == 0 else [z.real, z.imag]


def config_to_dict(cfg: ScenarioConfig) -> dict:
    f = cfg.field
    if f.type == "fock":
        field_d = {"type": "fock", "n": f.n}
    elif f.type == "coherent":
        field_d = {"type": "coherent", "alpha": _amp_json(f.amplitude)}
    else:
        field_d = {"type": "cat", "beta": _amp_json(f.amplitude), "sign": f.sign}
    atom_d = cfg.atom.label if cfg.atom.label in ("e", "g") else {"theta": cfg.atom.theta, "phi": cfg.atom.phi}
    outputs = list(cfg.series) + [
        {"kind": g.kind, "times": list(g.times), "points": g.points, **({"extent": g.extent} if g.extent is not None else {})}
        for g in cfg.grids
    ]
    out = {
        "name": cfg.name,
        "model": {"omega0": cfg.model.omega0, "omega": cfg.model.omega, "lambda": cfg.model.lam, "variant": cfg.model.variant},
        "initial": {"field": field_d, "atom": atom_d},
        "evolution": {
            "frame": cfg.evolution.frame,
            "t_max": cfg.evolution.t_max,
            "n_samples": cfg.evolution.n_samples,
            "kappa": cfg.evolution.kappa,
            "dt": cfg.evolution.dt,
        },
        "outputs": outputs,
        "measurement_sequence": [
            {"lambda_t": s.lambda_t, "theta": s.theta, "phi": s.phi, "outcome": s.outcome} for s in cfg.measurement_sequence
        ],
        "truncation": cfg.truncation,
        "strict": cfg.strict,
        "formats": list(cfg.formats),
    }
    return out


def serialize_config(cfg: ScenarioConfig) -> str:
    """Canonical JSON text; ``parse_config(serialize_config(c)) == c``."""
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def config_hash(cfg: ScenarioConfig) -> str:
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# --- running -------------------------------------------------------------------------------


@dataclass
class RunManifest:
    config_hash: str
    dim: int
    tail_mass: float
    wall_time: float
    files: list = field(default_factory=list)
    name: str = "scenario"
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "version": self.version,
            "config_hash": self.config_hash,
            "truncation_dim": self.dim,
            "tail_mass": self.tail_mass,
            "wall_time_s": round(self.wall_time, 3),
            "files": list(self.files),
        }


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _initial_field(cfg: ScenarioConfig, dim: int, strict: bool):
    f = cfg.field
    if f.type == "fock":
        return fock_state(f.n, dim), 0.0
    c = coherent_amplitudes(f.amplitude, dim)
    tail = max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))
    if f.type == "coherent":
        return coherent_state(f.amplitude, dim, strict=strict), tail
    return cat_state(f.amplitude, f.sign, dim, strict=strict), tail


def _scalar(name: str, st) -> float:
    if name == "inversion":
        return atomic_inversion(st)
    if name == "s1":
        return quadrature_squeezing(st)[0]
    if name == "s2":
        return quadrature_squeezing(st)[1]
    if name == "mandel_q":
        return mandel_q(st)
    if name == "parity":
        return parity_expectation(st)
    if name == "mean_photon":
        return mean_photon_number(st)
    if name == "entropy":
        if isinstance(st, JointState):
            return entanglement_entropy(st)
        return von_neumann_entropy(reduced_atom(st))
    raise KeyError(name)


class Trajectory:
    """Joint states (pure or mixed) at requested scaled times."""

    def __init__(self, cfg: ScenarioConfig, joint0: JointState):
        self.cfg = cfg
        self.params = cfg.params()
        self.joint0 = joint0

    def states(self, lambda_t) -> list:
        lambda_t = np.asarray(lambda_t, dtype=float)
        t = lambda_t / self.params.lam
        frame = Frame(self.cfg.evolution.frame)
        if self.params.kappa > 0:
            uniq = np.unique(np.concatenate([[0.0], t]))
            rho0 = DensityMatrix.from_state(self.joint0)
            out = evolve_lindblad(rho0, self.params, uniq, dt=self.cfg.evolution.dt / self.params.lam, frame=frame)
            lookup = dict(zip(uniq.tolist(), out))
            return [lookup[x] for x in t.tolist()]
        if self.params.variant is Variant.JC and frame is Frame.ROTATING:
            amps = propagate_analytic(self.joint0, self.params, t)
        else:
            prop = Propagator(build_hamiltonian(self.params, self.joint0.dim_field, frame))
            amps = prop.trajectory(self.joint0.amplitudes, t)
        return [JointState(a) for a in amps]


def run_scenario(cfg: ScenarioConfig, out_dir, strict: bool | None = None, dim: int | None = None) -> RunManifest:
    """Execute a scenario and write its outputs plus ``manifest.json``.

    Outputs are byte-deterministic for a given config. The manifest is
    written last, only after every output file exists.
    """
    start = time.perf_counter()
    if strict is not None or dim is not None:
        cfg = replace(cfg, strict=cfg.strict if strict is None else strict, truncation=cfg.truncation if dim is None else dim)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    d = cfg.dim
    with warnings.catch_warnings():
        warnings.simplefilter("always", TruncationWarning)
        field0, tail = _initial_field(cfg, d, cfg.strict)
    joint0 = tensor_joint(cfg.atom.vector(), field0)
    traj = Trajectory(cfg, joint0)
    files = []

    def write(name, text):
        (out_dir / name).write_text(text, encoding="utf-8", newline="\n")
        files.append(name)

    lam_t = np.linspace(0.0, cfg.evolution.t_max, cfg.evolution.n_samples)
    if cfg.series:
        states = traj.states(lam_t)
        for name in cfg.series:
            if name == "photon_distribution":
                write(f"{name}.csv", distribution_csv(lam_t, [photon_distribution(s) for s in states]))
                continue
            ts = TimeSeries(lam_t, [_scalar(name, s) for s in states], label=name)
            if "csv" in cfg.formats:
                write(f"{name}.csv", series_csv(ts))
            if "json" in cfg.formats:
                emit_json(ts, out_dir / f"{name}.json")
                files.append(f"{name}.json")

    for req in cfg.grids:
        grid = GridSpec(req.extent, req.points) if req.extent else default_grid(cfg.field.nbar)
        snaps = traj.states(req.times)
        func = wigner if req.kind == "wigner" else husimi_q

        def one(item, func=func, grid=grid):
            return func(item, grid, strict=cfg.strict)

        with ThreadPoolExecutor(max_workers=min(thread_count(), len(snaps))) as pool:
            results = list(pool.map(one, snaps))
        for i, (t, g) in enumerate(zip(req.times, results)):
            g.meta.update({"lambda_t": t, "kind": req.kind, "index": i})
            stem = f"{req.kind}_t{i}"
            if "csv" in cfg.formats:
                emit_csv(g, out_dir / f"{stem}.csv")
                files.append(f"{stem}.csv")
            if "json" in cfg.formats:
                emit_json(g, out_dir / f"{stem}.json")
                files.append(f"{stem}.json")

    if cfg.measurement_sequence:
        steps = [SequenceStep(s.lambda_t / traj.params.lam, s.outcome, s.theta, s.phi) for s in cfg.measurement_sequence]
        res = run_sequence(field0, steps, traj.params, atom=cfg.atom.vector())
        f = res.field
        s1, s2 = quadrature_squeezing(f)
        n = mean_photon_number(f)
        report = {
            "joint_probability": res.probability,
            "step_probabilities": [r.probability for r in res.records],
            "final_field": {
                "mean_photon": n,
                "s1": s1,
                "s2": s2,
                "mandel_q": mandel_q(f) if n > 1e-14 else None,
                "parity": parity_expectation(f),
            },
        }
        write("measurement.json", json.dumps(report, indent=1, sort_keys=True) + "\n")

    manifest = RunManifest(config_hash(cfg), d, tail, time.perf_counter() - start, files, name=cfg.name)
    (out_dir / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=1) + "\n", encoding="utf-8")
    return manifest


# --- bundled scenarios ----------------------------------------------------------------------

SCENARIO_DIR = Path(__file__).parent / "scenarios"


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.json"))


def load_config(path_or_name) -> ScenarioConfig:
    p = Path(path_or_name)
    if not p.exists():
        candidate = SCENARIO_DIR / f"{path_or_name}.json"
        if not candidate.exists():
            raise ConfigError("", f"no config file or bundled scenario named {path_or_name!r}")
        p = candidate
    return parse_config(p.read_text(encoding="utf-8"))
