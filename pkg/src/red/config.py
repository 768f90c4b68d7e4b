"""Experiment configuration: strict JSON in, validated dataclasses out.

The parser is strict in both directions: unknown keys are rejected, and
every violation found is reported at once with a JSON-pointer path, so a
bad config never needs more than one round trip to fix.  Every default the
parser applies is materialized in the resolved dictionary that ends up in
the run manifest.

Conventions the schema fixes:
  - `boost` is a phase slope (momentum) per spatial axis, applied to every
    particle alike.  It must be a lattice momentum of the box (an integer
    number of windings) so the state has a single-valued wavefunction.
  - `plane_wave.k` is a momentum per configuration axis, also lattice.
  - sigma must span at least MIN_SIGMA_CELLS grid cells and momenta must
    stay below half the grid Nyquist momentum; beyond either limit the
    grid cannot represent the state faithfully.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .model import SystemSpec

MIN_SIGMA_CELLS = 4.0
NYQUIST_FRACTION = 0.5
LATTICE_TOL = 1e-9
MAX_SEED = 2 ** 64

STATE_PRESETS = ("gaussian_packet", "plane_wave", "two_packet")
POTENTIAL_PRESETS = (
    "free",
    "harmonic_relational",
    "smooth_harmonic_relational",
    "harmonic_external",
    "linear",
)
SHIFT_MODES = ("fixed", "best_match", "zero_constrained")


@dataclass(frozen=True)
class InitialStateChoice:
    preset: str = None
    file: str = None
    center: tuple = None
    sigma: tuple = None
    boost: tuple = None
    k: tuple = None


@dataclass(frozen=True)
class PotentialChoice:
    preset: str = None
    file: str = None
    k: float = None
    particles: tuple = None
    axis: int = None
    center: float = None
    coefficients: tuple = None


@dataclass(frozen=True)
class ShiftChoice:
    mode: str
    values: tuple = None


@dataclass(frozen=True)
class RunSettings:
    steps: int
    dt_pde: float
    snapshot_every: int
    ensemble_k: int
    seed: int


@dataclass(frozen=True)
class ExperimentConfig:
    spec: SystemSpec
    initial_state: InitialStateChoice
    potential: PotentialChoice
    shift_mode: ShiftChoice
    run: RunSettings
    outputs: str
    resolved: dict

    def with_overrides(self, seed: int = None, outputs: str = None) -> "ExperimentConfig":
        """Copy with the CLI-level seed/outputs overrides applied."""
        run = self.run
        resolved = json.loads(json.dumps(self.resolved))
        if seed is not None:
            run = RunSettings(run.steps, run.dt_pde, run.snapshot_every, run.ensemble_k, seed)
            resolved["run"]["seed"] = seed
        out = self.outputs if outputs is None else outputs
        resolved["outputs"] = out
        return ExperimentConfig(
            self.spec, self.initial_state, self.potential, self.shift_mode, run, out, resolved
        )


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


class _Collector:
    """Accumulates (pointer, message) pairs for one exhaustive report."""

    def __init__(self):
        self.violations = []

    def add(self, pointer: str, message: str) -> None:
        self.violations.append((pointer, message))

    def section(self, doc: dict, key: str, pointer: str, required: bool, default=None):
        if key not in doc:
            if required:
                self.add(f"{pointer}{key}", "required section is missing")
                return None
            return default
        value = doc[key]
        if not isinstance(value, dict):
            self.add(f"{pointer}{key}", "must be a JSON object")
            return None
        return value

    def reject_unknown(self, section: dict, allowed, pointer: str) -> None:
        for key in section:
            if key not in allowed:
                self.add(f"{pointer}/{key}", "unknown key")

    def number(self, section: dict, key: str, pointer: str, required=True, default=None,
               positive=False, nonnegative=False):
        if key not in section:
            if required:
                self.add(f"{pointer}/{key}", "required value is missing")
                return None
            return default
        value = section[key]
        if not _is_number(value):
            self.add(f"{pointer}/{key}", "must be a finite number")
            return None
        if positive and not value > 0:
            self.add(f"{pointer}/{key}", "must be positive")
            return None
        if nonnegative and value < 0:
            self.add(f"{pointer}/{key}", "must be non-negative")
            return None
        return float(value)

    def integer(self, section: dict, key: str, pointer: str, required=True, default=None,
                minimum=None, maximum=None):
        if key not in section:
            if required:
                self.add(f"{pointer}/{key}", "required value is missing")
                return None
            return default
        value = section[key]
        if not _is_int(value):
            self.add(f"{pointer}/{key}", "must be an integer")
            return None
        if minimum is not None and value < minimum:
            self.add(f"{pointer}/{key}", f"must be at least {minimum}")
            return None
        if maximum is not None and value >= maximum:
            self.add(f"{pointer}/{key}", f"must be below {maximum}")
            return None
        return int(value)

    def number_list(self, section: dict, key: str, pointer: str, length: int,
                    required=True, default=None, positive=False, integers=False):
        """A list of `length` numbers; a bare scalar broadcasts."""
        if key not in section:
            if required:
                self.add(f"{pointer}/{key}", "required value is missing")
                return None
            return default
        value = section[key]
        if _is_number(value) if not integers else _is_int(value):
            value = [value] * length
        if not isinstance(value, list):
            self.add(f"{pointer}/{key}", f"must be a number or a list of {length} numbers")
            return None
        if len(value) != length:
            self.add(f"{pointer}/{key}", f"must have {length} entries, got {len(value)}")
            return None
        out = []
        ok = True
        for i, entry in enumerate(value):
            valid = _is_int(entry) if integers else _is_number(entry)
            if not valid:
                self.add(f"{pointer}/{key}/{i}", "must be a finite integer" if integers else "must be a finite number")
                ok = False
            elif positive and not entry > 0:
                self.add(f"{pointer}/{key}/{i}", "must be positive")
                ok = False
            else:
                out.append(int(entry) if integers else float(entry))
        return out if ok else None


def _parse_system(collect: _Collector, doc: dict) -> dict:
    section = collect.section(doc, "system", "/", required=True)
    if section is None:
        return None
    allowed = {"n_particles", "spatial_dim", "masses", "box", "grid", "dt", "hbar"}
    collect.reject_unknown(section, allowed, "/system")
    n = collect.integer(section, "n_particles", "/system", minimum=1)
    d = collect.integer(section, "spatial_dim", "/system", minimum=1, maximum=4)
    dt = collect.number(section, "dt", "/system", positive=True)
    hbar = collect.number(section, "hbar", "/system", required=False, default=1.0, positive=True)
    if n is None or d is None:
        return None
    masses = collect.number_list(section, "masses", "/system", n,
                                 required=False, default=[1.0] * n, positive=True)
    box = collect.number_list(section, "box", "/system", d, positive=True)
    grid = collect.number_list(section, "grid", "/system", n * d, positive=True, integers=True)
    if None in (dt, masses, box, grid):
        return None
    return {
        "n_particles": n, "spatial_dim": d, "masses": masses,
        "box": box, "grid": grid, "dt": dt, "hbar": hbar,
    }


def _lattice_check(collect: _Collector, momentum: float, box: float, hbar: float, pointer: str) -> None:
    winding = momentum * box / (2.0 * math.pi * hbar)
    if abs(winding - round(winding)) > LATTICE_TOL:
        nearest = round(winding) * 2.0 * math.pi * hbar / box
        collect.add(pointer, f"momentum must wind the box an integer number of times; nearest lattice value is {nearest:.17g}")


def _nyquist_check(collect: _Collector, momentum: float, box: float, cells: int, hbar: float, pointer: str) -> None:
    limit = NYQUIST_FRACTION * math.pi * hbar * cells / box
    if abs(momentum) >= limit:
        collect.add(pointer, f"|momentum| must stay below half the grid Nyquist momentum {2 * limit:.17g}")


def _parse_initial_state(collect: _Collector, doc: dict, system: dict) -> dict:
    section = collect.section(doc, "initial_state", "/", required=True)
    if section is None:
        return None
    if "preset" in section and "file" in section:
        collect.add("/initial_state", "give either a preset or a file, not both")
        return None
    if "file" in section:
        collect.reject_unknown(section, {"file"}, "/initial_state")
        path = section["file"]
        if not isinstance(path, str):
            collect.add("/initial_state/file", "must be a path string")
            return None
        if not Path(path).is_file():
            collect.add("/initial_state/file", f"file does not exist: {path}")
            return None
        if not Path(path).with_suffix(".json").is_file():
            collect.add("/initial_state/file", "snapshot sidecar .json is missing")
            return None
        return {"file": path}
    preset = section.get("preset")
    if preset not in STATE_PRESETS:
        collect.add("/initial_state/preset", f"must be one of {', '.join(STATE_PRESETS)}")
        return None
    if system is None:
        return None
    n, d = system["n_particles"], system["spatial_dim"]
    dim = n * d
    hbar = system["hbar"]
    axis_box = [system["box"][a % d] for a in range(dim)]
    axis_cells = system["grid"]

    if preset == "plane_wave":
        collect.reject_unknown(section, {"preset", "k"}, "/initial_state")
        k = collect.number_list(section, "k", "/initial_state", dim)
        if k is None:
            return None
        for axis in range(dim):
            _lattice_check(collect, k[axis], axis_box[axis], hbar, f"/initial_state/k/{axis}")
            _nyquist_check(collect, k[axis], axis_box[axis], axis_cells[axis], hbar, f"/initial_state/k/{axis}")
        return {"preset": preset, "k": k}

    allowed = {"preset", "center", "sigma", "boost"}
    collect.reject_unknown(section, allowed, "/initial_state")
    default_center = [axis_box[a] / 2.0 for a in range(dim)]
    center = collect.number_list(section, "center", "/initial_state", dim,
                                 required=False, default=default_center)
    sigma = collect.number_list(section, "sigma", "/initial_state", dim, positive=True)
    boost_required = preset == "two_packet"
    boost = collect.number_list(section, "boost", "/initial_state", d,
                                required=boost_required, default=[0.0] * d)
    if sigma is not None:
        for axis in range(dim):
            cell = axis_box[axis] / axis_cells[axis]
            if sigma[axis] < MIN_SIGMA_CELLS * cell:
                collect.add(f"/initial_state/sigma/{axis}",
                            f"must span at least {MIN_SIGMA_CELLS:g} cells ({MIN_SIGMA_CELLS * cell:.17g})")
    if boost is not None:
        for a in range(d):
            _lattice_check(collect, boost[a], system["box"][a], hbar, f"/initial_state/boost/{a}")
            _nyquist_check(collect, boost[a], system["box"][a],
                           min(axis_cells[a::d]), hbar, f"/initial_state/boost/{a}")
        if boost_required and all(b == 0.0 for b in boost):
            collect.add("/initial_state/boost", "two_packet needs a nonzero boost to superpose")
    if None in (center, sigma, boost):
        return None
    return {"preset": preset, "center": center, "sigma": sigma, "boost": boost}


def _parse_potential(collect: _Collector, doc: dict, system: dict) -> dict:
    section = collect.section(doc, "drift_or_potential", "/", required=False,
                              default={"preset": "free"})
    if section is None:
        return None
    if "preset" in section and "file" in section:
        collect.add("/drift_or_potential", "give either a preset or a file, not both")
        return None
    if "file" in section:
        collect.reject_unknown(section, {"file"}, "/drift_or_potential")
        path = section["file"]
        if not isinstance(path, str):
            collect.add("/drift_or_potential/file", "must be a path string")
            return None
        if not Path(path).is_file():
            collect.add("/drift_or_potential/file", f"file does not exist: {path}")
            return None
        return {"file": path}
    preset = section.get("preset")
    if preset not in POTENTIAL_PRESETS:
        collect.add("/drift_or_potential/preset", f"must be one of {', '.join(POTENTIAL_PRESETS)}")
        return None
    if system is None:
        return None
    n, d = system["n_particles"], system["spatial_dim"]

    if preset == "free":
        collect.reject_unknown(section, {"preset"}, "/drift_or_potential")
        return {"preset": preset}
    if preset == "linear":
        collect.reject_unknown(section, {"preset", "coefficients"}, "/drift_or_potential")
        coefficients = collect.number_list(section, "coefficients", "/drift_or_potential", n * d)
        if coefficients is None:
            return None
        return {"preset": preset, "coefficients": coefficients}
    if preset in ("harmonic_relational", "smooth_harmonic_relational"):
        collect.reject_unknown(section, {"preset", "k", "particles"}, "/drift_or_potential")
        k = collect.number(section, "k", "/drift_or_potential", nonnegative=True)
        particles = collect.number_list(section, "particles", "/drift_or_potential", 2,
                                        required=False, default=[0, 1], integers=True)
        if n < 2:
            collect.add("/drift_or_potential/preset", "relational potentials need at least two particles")
            return None
        if particles is not None:
            for i, p in enumerate(particles):
                if not 0 <= p < n:
                    collect.add(f"/drift_or_potential/particles/{i}", f"must index a particle in [0, {n})")
                    particles = None
                    break
            if particles is not None and particles[0] == particles[1]:
                collect.add("/drift_or_potential/particles", "must name two distinct particles")
                particles = None
        if k is None or particles is None:
            return None
        return {"preset": preset, "k": k, "particles": particles}
    # harmonic_external
    collect.reject_unknown(section, {"preset", "k", "axis", "center"}, "/drift_or_potential")
    k = collect.number(section, "k", "/drift_or_potential", nonnegative=True)
    axis = collect.integer(section, "axis", "/drift_or_potential", required=False,
                           default=0, minimum=0, maximum=n * d)
    if axis is None or k is None:
        return None
    default_center = system["box"][axis % d] / 2.0
    center = collect.number(section, "center", "/drift_or_potential", required=False,
                            default=default_center)
    if center is None:
        return None
    return {"preset": preset, "k": k, "axis": axis, "center": center}


def _parse_shift_mode(collect: _Collector, doc: dict, system: dict) -> dict:
    d = None if system is None else system["spatial_dim"]
    default = None if d is None else {"mode": "fixed", "values": [0.0] * d}
    section = collect.section(doc, "shift_mode", "/", required=False, default=default)
    if section is None or section is default:
        return default
    mode = section.get("mode")
    if mode not in SHIFT_MODES:
        collect.add("/shift_mode/mode", f"must be one of {', '.join(SHIFT_MODES)}")
        return None
    if mode == "fixed":
        collect.reject_unknown(section, {"mode", "values"}, "/shift_mode")
        if d is None:
            return None
        values = collect.number_list(section, "values", "/shift_mode", d)
        if values is None:
            return None
        return {"mode": mode, "values": values}
    collect.reject_unknown(section, {"mode"}, "/shift_mode")
    if "values" in section:
        collect.add("/shift_mode/values", f"{mode} mode does not take fixed values")
        return None
    return {"mode": mode}


def _parse_run(collect: _Collector, doc: dict) -> dict:
    section = collect.section(doc, "run", "/", required=True)
    if section is None:
        return None
    allowed = {"steps", "dt_pde", "snapshot_every", "ensemble_K", "seed"}
    collect.reject_unknown(section, allowed, "/run")
    steps = collect.integer(section, "steps", "/run", minimum=0)
    dt_pde = collect.number(section, "dt_pde", "/run", positive=True)
    snapshot_every = collect.integer(section, "snapshot_every", "/run", required=False,
                                     default=1, minimum=1)
    ensemble_k = collect.integer(section, "ensemble_K", "/run", required=False,
                                 default=0, minimum=0)
    seed = collect.integer(section, "seed", "/run", required=False, default=0,
                           minimum=0, maximum=MAX_SEED)
    if None in (steps, dt_pde, snapshot_every, ensemble_k, seed):
        return None
    return {
        "steps": steps, "dt_pde": dt_pde, "snapshot_every": snapshot_every,
        "ensemble_K": ensemble_k, "seed": seed,
    }


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    Raises ConfigError carrying every violation found, each tagged with a
    JSON-pointer path.  On success the returned config's `resolved` dict
    spells out every applied default.
    """
    collect = _Collector()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("/", f"not valid JSON: {exc}")])
    if not isinstance(doc, dict):
        raise ConfigError([("/", "top level must be a JSON object")])

    known = {"system", "initial_state", "drift_or_potential", "shift_mode", "run", "outputs"}
    for key in doc:
        if key not in known:
            collect.add(f"/{key}", "unknown key")

    system = _parse_system(collect, doc)
    initial = _parse_initial_state(collect, doc, system)
    potential = _parse_potential(collect, doc, system)
    shift = _parse_shift_mode(collect, doc, system)
    run = _parse_run(collect, doc)

    outputs = doc.get("outputs", "out")
    if not isinstance(outputs, str) or not outputs:
        collect.add("/outputs", "must be a non-empty path string")
        outputs = None

    if collect.violations:
        raise ConfigError(collect.violations)

    spec = SystemSpec(
        n_particles=system["n_particles"],
        spatial_dim=system["spatial_dim"],
        masses=tuple(system["masses"]),
        box_length=tuple(system["box"]),
        grid_points=tuple(system["grid"]),
        dt=system["dt"],
        hbar=system["hbar"],
    )
    resolved = {
        "system": system,
        "initial_state": initial,
        "drift_or_potential": potential,
        "shift_mode": shift,
        "run": run,
        "outputs": outputs,
    }
    return ExperimentConfig(
        spec=spec,
        initial_state=InitialStateChoice(
            preset=initial.get("preset"),
            file=initial.get("file"),
            center=_tup(initial.get("center")),
            sigma=_tup(initial.get("sigma")),
            boost=_tup(initial.get("boost")),
            k=_tup(initial.get("k")),
        ),
        potential=PotentialChoice(
            preset=potential.get("preset"),
            file=potential.get("file"),
            k=potential.get("k"),
            particles=_tup(potential.get("particles")),
            axis=potential.get("axis"),
            center=potential.get("center"),
            coefficients=_tup(potential.get("coefficients")),
        ),
        shift_mode=ShiftChoice(mode=shift["mode"], values=_tup(shift.get("values"))),
        run=RunSettings(
            steps=run["steps"],
            dt_pde=run["dt_pde"],
            snapshot_every=run["snapshot_every"],
            ensemble_k=run["ensemble_K"],
            seed=run["seed"],
        ),
        outputs=outputs,
        resolved=resolved,
    )


def _tup(value):
    return None if value is None else tuple(value)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError([("/", f"cannot read config file: {err}")]) from err
    return parse_config(text)
