"""Maximum-entropy transition kernel and walker-ensemble evolution.

One entropic step from x is Gaussian: per configuration axis A (particle n),

    mean_A = hbar * dt * grad_A(phi)(x) / m_n  -  shift_a * dt
    var_A  = hbar * dt / m_n

Fluctuations are independent of the shift; the drift potential phi enters
only through its gradient.

Randomness is counter-based (Philox).  The noise a walker receives is a
pure function of (rng_seed, stream purpose, step index, walker index), so
chained evolutions, restarts, and any internal parallel schedule all see
identical streams.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, GridError
from .model import (
    ConfigPoint,
    Ensemble,
    ScalarField,
    ShiftVelocity,
    SystemSpec,
    gradient_arrays,
    interpolate,
    wrap_array,
)

# Purpose tags keep the Philox counter spaces of unrelated draws disjoint.
STREAM_WALK = 0
STREAM_INIT = 1
STREAM_MONTE_CARLO = 2
STREAM_CHECKS = 3


def stream(seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    """Independent generator for (seed, purpose, index), schedule-free."""
    bit_gen = np.random.Philox(key=np.uint64(seed), counter=[0, 0, purpose, index])
    return np.random.Generator(bit_gen)


class GridDrift:
    """Drift potential given on the grid; gradient is spectral, evaluation multilinear."""

    def __init__(self, field: ScalarField):
        self.field = field
        self.spec = field.spec
        self._grad = gradient_arrays(field.values, field.spec)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        out = np.empty_like(points)
        for axis in range(self.spec.dim):
            out[:, axis] = interpolate(self._grad[axis], self.spec, points)
        return out


class AnalyticDrift:
    """Drift potential with a closed-form gradient, evaluated exactly."""

    def __init__(self, gradient_fn, value_fn=None):
        self._gradient_fn = gradient_fn
        self._value_fn = value_fn

    def gradient(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        return np.asarray(self._gradient_fn(points), dtype=float).reshape(points.shape)


def linear_drift(coefficients) -> AnalyticDrift:
    """phi(x) = c . x; the gradient is the constant coefficient vector."""
    coeffs = np.asarray(coefficients, dtype=float)
    return AnalyticDrift(lambda pts: np.broadcast_to(coeffs, pts.shape).copy())


def constant_drift() -> AnalyticDrift:
    """phi constant: no drift, pure diffusion."""
    return AnalyticDrift(lambda pts: np.zeros_like(pts))


def as_drift(drift_phi):
    """Accept a ScalarField, a drift object, or None (no drift)."""
    if drift_phi is None:
        return constant_drift()
    if isinstance(drift_phi, ScalarField):
        return GridDrift(drift_phi)
    if hasattr(drift_phi, "gradient"):
        return drift_phi
    raise TypeError(f"cannot interpret {type(drift_phi).__name__} as a drift potential")


@dataclass(frozen=True)
class TransitionKernel:
    """Gaussian one-step kernel anchored at a configuration point."""

    origin: ConfigPoint
    mean_step: np.ndarray
    covariance_diag: np.ndarray
    spec: SystemSpec

    def __post_init__(self):
        mean = np.asarray(self.mean_step, dtype=float)
        cov = np.asarray(self.covariance_diag, dtype=float)
        if mean.shape != (self.spec.dim,) or cov.shape != (self.spec.dim,):
            raise GridError("kernel moments must have one entry per configuration axis")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise GridError("kernel moments must be finite")
        if np.any(cov < 0):
            raise ValueError("kernel covariance must be non-negative")
        object.__setattr__(self, "mean_step", mean)
        object.__setattr__(self, "covariance_diag", cov)


def kernel_moments(points: np.ndarray, drift, shift: ShiftVelocity, spec: SystemSpec, dt: float):
    """Vectorized kernel mean (K, D) and shared covariance diagonal (D,)."""
    if not (dt > 0 and np.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    grad = as_drift(drift).gradient(points)
    if not np.all(np.isfinite(grad)):
        raise ConsistencyError("drift gradient is not finite at a requested point")
    inv_mass = 1.0 / spec.axis_masses
    mean = spec.hbar * dt * grad * inv_mass - shift.per_axis * dt
    cov = spec.hbar * dt * inv_mass
    return mean, cov


def build_kernel(x: ConfigPoint, drift_phi, shift: ShiftVelocity, spec: SystemSpec) -> TransitionKernel:
    """Kernel of one entropic step of duration spec.dt anchored at x."""
    mean, cov = kernel_moments(x.coordinates[None, :], drift_phi, shift, spec, spec.dt)
    return TransitionKernel(x, mean[0], cov, spec)


def sample_step(kernel: TransitionKernel, rng: np.random.Generator) -> ConfigPoint:
    """Draw one successor point; advances the generator deterministically."""
    noise = rng.standard_normal(kernel.spec.dim)
    landing = kernel.origin.coordinates + kernel.mean_step + np.sqrt(kernel.covariance_diag) * noise
    return ConfigPoint(landing, kernel.spec)


def evolve_ensemble(ensemble: Ensemble, drift_phi, shift: ShiftVelocity, steps: int) -> Ensemble:
    """Advance every walker `steps` entropic instants of duration spec.dt.

    Step s consumes the Philox stream (rng_seed, STREAM_WALK, absolute step);
    walker i reads lanes [i*D, (i+1)*D) of that stream.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    spec = ensemble.spec
    drift = as_drift(drift_phi)
    positions = ensemble.positions.copy()
    dt = spec.dt
    for s in range(steps):
        mean, cov = kernel_moments(positions, drift, shift, spec, dt)
        noise = stream(ensemble.rng_seed, STREAM_WALK, ensemble.step_index + s).standard_normal(
            positions.shape
        )
        positions = wrap_array(spec, positions + mean + np.sqrt(cov) * noise)
    return Ensemble(
        positions,
        spec,
        ensemble.rng_seed,
        ensemble.time + steps * dt,
        ensemble.step_index + steps,
    )


def minimal_image(spec: SystemSpec, displacement: np.ndarray) -> np.ndarray:
    """Fold displacements into (-L/2, L/2] per configuration axis."""
    box = spec.axis_box
    return displacement - box * np.round(displacement / box)


def empirical_moments(before: Ensemble, after: Ensemble):
    """Unbiased mean and variance of per-walker displacements (minimal image)."""
    if before.size != after.size:
        raise ConsistencyError(
            f"ensembles have different sizes: {before.size} vs {after.size}"
        )
    if before.spec != after.spec:
        raise ConsistencyError("ensembles live on different systems")
    if before.size < 2:
        raise ConsistencyError("need at least two walkers for an unbiased variance")
    disp = minimal_image(before.spec, after.positions - before.positions)
    return disp.mean(axis=0), disp.var(axis=0, ddof=1)


def sample_from_density(rho: ScalarField, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points from the grid measure rho * cell_volume (support on grid nodes)."""
    spec = rho.spec
    weights = np.clip(rho.values.reshape(-1), 0.0, None) * spec.cell_volume
    weights = weights / weights.sum()
    flat = rng.choice(weights.size, size=n, p=weights)
    idx = np.unravel_index(flat, spec.grid_points)
    return np.stack([spec.axis_coords[axis][idx[axis]] for axis in range(spec.dim)], axis=1)


def walkers_to_csv(ensemble: Ensemble, path) -> None:
    """Write walker positions as CSV with header x_0,...,x_{D-1}."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"x_{a}" for a in range(ensemble.spec.dim)])
        for row in ensemble.positions:
            writer.writerow([format(v, ".17g") for v in row])


def walkers_from_csv(path, spec: SystemSpec, rng_seed: int = 0, time: float = 0.0) -> Ensemble:
    """Read walker positions written by walkers_to_csv."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        expected = [f"x_{a}" for a in range(spec.dim)]
        if header != expected:
            raise ConsistencyError(f"walker CSV header {header} does not match {expected}")
        rows = [[float(v) for v in row] for row in reader]
    return Ensemble(np.asarray(rows, dtype=float), spec, rng_seed, time)
