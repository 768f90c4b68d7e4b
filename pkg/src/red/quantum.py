"""Constrained Hamiltonian flow of the density-phase pair.

Demanding that the entropic updating preserve a Hamiltonian generates the
familiar pair of coupled equations for (rho, Phi); with the curvature term
included they are the real and imaginary parts of a linear wave equation
for psi = sqrt(rho) * exp(i Phi / hbar).  Both faces are implemented: a
split-step unitary integrator for psi, and a direct RK4 integrator for
(rho, Phi) that exposes the same flow in the epistemic variables.

The generator in a frame moving with shift velocity per spatial axis is

    sum_A (p_A - m_A shift_A)^2 / (2 m_A) + U,

so plane-wave modes pick up the symbol sum_A (hbar k_A - m_A shift_A)^2 /
(2 m_A).  Potentials that depend only on coordinate differences commute
with the total momentum per spatial axis; the split-step integrator then
conserves it up to spectral wrap-around of the product U * psi.  That
wrap-around vanishes for band-limited difference potentials, and cancels
by symmetry on the zero-momentum subspace, which is where the constraint
is imposed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalAbort, StabilityError, StateError
from .model import (
    EpistemicState,
    ScalarField,
    ShiftVelocity,
    SystemSpec,
    gradient_arrays,
)

WAVE_NORM_TOL = 1e-10
WAVE_MASK_RELATIVE = 1e-14
HAMILTON_DENSITY_RELATIVE = 1e-12
RELATIONAL_TOL = 1e-10
RK4_IMAG_STABILITY = 2.82


@dataclass(frozen=True)
class WaveField:
    """Normalized complex amplitude on the configuration grid."""

    values: np.ndarray
    spec: SystemSpec
    time: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != tuple(self.spec.grid_points):
            raise StateError(
                f"wave shape {vals.shape} does not match grid {tuple(self.spec.grid_points)}"
            )
        if not np.all(np.isfinite(vals.real)) or not np.all(np.isfinite(vals.imag)):
            raise StateError("wave values must be finite")
        norm = float(np.sum(np.abs(vals) ** 2) * self.spec.cell_volume)
        if abs(norm - 1.0) > WAVE_NORM_TOL:
            raise StateError(f"wave norm is {norm!r}, expected 1 within {WAVE_NORM_TOL}")
        object.__setattr__(self, "values", vals)

    @property
    def density(self) -> ScalarField:
        return ScalarField(np.abs(self.values) ** 2, self.spec)


@dataclass(frozen=True)
class Potential:
    """Real potential energy on the grid.

    relational_flag declares that the values depend only on relative
    particle positions; the declaration is checked, not trusted, by
    relational_check.
    """

    values: ScalarField
    relational_flag: bool = False

    def __post_init__(self):
        if not np.all(np.isfinite(self.values.values)):
            raise StateError("potential values must be finite")

    @property
    def spec(self) -> SystemSpec:
        return self.values.spec

    @classmethod
    def from_values(cls, values: np.ndarray, spec: SystemSpec, relational_flag: bool = False) -> "Potential":
        return cls(ScalarField(np.asarray(values, dtype=float), spec), relational_flag)

    @classmethod
    def free(cls, spec: SystemSpec) -> "Potential":
        return cls.from_values(np.zeros(spec.grid_points), spec, relational_flag=True)


def to_wavefunction(state: EpistemicState) -> WaveField:
    """psi = sqrt(rho) exp(i (phase + slope . x) / hbar).

    The slope part is single-valued on the box only when each component is
    a lattice momentum; anything else cannot be represented by a periodic
    wavefunction and is rejected.
    """
    spec = state.spec
    mesh = spec.mesh()
    total_phase = state.phase.values.copy()
    for axis in range(spec.dim):
        slope = state.phase_slope[axis]
        if slope != 0.0:
            winding = slope * spec.axis_box[axis] / (2.0 * np.pi * spec.hbar)
            if abs(winding - round(winding)) > 1e-9:
                raise StateError(
                    f"phase slope {slope!r} on axis {axis} is not a lattice momentum "
                    f"of the box; it winds {winding!r} times and cannot close periodically"
                )
            total_phase = total_phase + slope * mesh[axis]
    amplitude = np.sqrt(np.clip(state.rho.values, 0.0, None))
    return WaveField(amplitude * np.exp(1j * total_phase / spec.hbar), spec, state.time)


def from_wavefunction(wave: WaveField) -> EpistemicState:
    """Density and wrapped phase of a wavefunction.

    The phase is hbar * arg(psi), wrapped to (-pi hbar, pi hbar]; cells
    with relative density below WAVE_MASK_RELATIVE carry no usable phase
    information and are recorded in the state's mask rather than zeroed.
    """
    spec = wave.spec
    rho = np.abs(wave.values) ** 2
    phase = spec.hbar * np.angle(wave.values)
    mask = rho < WAVE_MASK_RELATIVE * float(np.max(rho))
    return EpistemicState(
        ScalarField(rho, spec),
        ScalarField(phase, spec),
        None,
        wave.time,
        phase_mask=mask,
        phase_wrapped=True,
    )


def kinetic_symbol(spec: SystemSpec, shift: ShiftVelocity) -> np.ndarray:
    """sum_A (hbar k_A - m_A shift_A)^2 / (2 m_A) on the full mode grid."""
    symbol = np.zeros(spec.grid_points)
    for axis in range(spec.dim):
        mass = spec.axis_masses[axis]
        offset = spec.hbar * spec.wavenumber_grid(axis) - mass * shift.per_axis[axis]
        symbol = symbol + offset ** 2 / (2.0 * mass)
    return symbol


def schrodinger_step(
    wave: WaveField, potential: Potential, shift: ShiftVelocity, dt_pde: float
) -> WaveField:
    """One Strang-split unitary step: half potential, kinetic, half potential."""
    return schrodinger_evolve(wave, potential, shift, dt_pde, dt_pde)


def schrodinger_evolve(
    wave: WaveField,
    potential: Potential,
    shift: ShiftVelocity,
    total_time: float,
    dt_pde: float,
) -> WaveField:
    """Strang split-step evolution with multipliers precomputed once."""
    steps = _step_count(total_time, dt_pde)
    spec = wave.spec
    if potential.spec != spec:
        raise StateError("potential and wave live on different grids")
    half_potential = np.exp(-0.5j * dt_pde * potential.values.values / spec.hbar)
    kinetic = np.exp(-1j * dt_pde * kinetic_symbol(spec, shift) / spec.hbar)
    values = wave.values
    for _ in range(steps):
        values = values * half_potential
        values = np.fft.ifftn(kinetic * np.fft.fftn(values))
        values = values * half_potential
    if not np.all(np.isfinite(values.real)) or not np.all(np.isfinite(values.imag)):
        raise NumericalAbort(
            f"non-finite wave values after {steps} split steps of {dt_pde!r}"
        )
    return WaveField(values, spec, wave.time + steps * dt_pde)


def expected_momentum(wave: WaveField) -> np.ndarray:
    """Total momentum expectation per spatial axis.

    Computed in mode space, where it equals the quadrature of
    Re[psi* (-i hbar) sum_n d psi / dx_n^a] exactly (both use the
    odd-derivative wavenumbers, so the empty sawtooth mode counts as 0).
    """
    spec = wave.spec
    spectrum = np.abs(np.fft.fftn(wave.values)) ** 2
    weight = float(np.sum(spectrum))
    out = np.zeros(spec.spatial_dim)
    for axis in range(spec.dim):
        k = spec.derivative_wavenumber_grid(axis)
        out[spec.spatial_of_axis(axis)] += spec.hbar * float(np.sum(k * spectrum)) / weight
    return out


def total_energy(wave: WaveField, potential: Potential, shift: ShiftVelocity) -> float:
    """Discrete ensemble Hamiltonian: flow plus curvature terms plus potential average.

    This is the conserved quantity of the coupled (rho, Phi) equations;
    the split-step integrator preserves it to second order in dt_pde.
    """
    spec = wave.spec
    rho = np.abs(wave.values) ** 2
    state = from_wavefunction(wave)
    # flow and curvature pieces, as in the mismatch decomposition
    from .geometry import ensemble_hamiltonian_h0

    h0 = ensemble_hamiltonian_h0(state, shift)
    return h0 + float(np.sum(potential.values.values * rho)) * spec.cell_volume


@dataclass(frozen=True)
class RelationalReport:
    """Outcome of sampling global translations against a potential."""

    max_deviation: float
    tolerance: float
    trials: int

    @property
    def passes(self) -> bool:
        return self.max_deviation < self.tolerance


def relational_check(potential: Potential, trials: int, rng: np.random.Generator) -> RelationalReport:
    """Sample global whole-cell translations and report max |U(x+c) - U(x)|.

    A potential built from periodic relative coordinates is bitwise
    invariant under translating every particle by the same number of
    cells, so a genuinely relational potential reports exactly zero.
    """
    spec = potential.spec
    values = potential.values.values
    worst = 0.0
    for _ in range(max(int(trials), 1)):
        rolled = values
        for spatial in range(spec.spatial_dim):
            cells = int(rng.integers(0, spec.grid_points[spatial]))
            for axis in range(spec.dim):
                if spec.spatial_of_axis(axis) == spatial:
                    rolled = np.roll(rolled, cells, axis=axis)
        worst = max(worst, float(np.max(np.abs(rolled - values))))
    return RelationalReport(worst, RELATIONAL_TOL, int(trials))


def finite_difference_gradient(values: np.ndarray, spec: SystemSpec, axis: int) -> np.ndarray:
    """Central difference along one axis; exact for quadratic potentials."""
    forward = np.roll(values, -1, axis=axis)
    backward = np.roll(values, 1, axis=axis)
    return (forward - backward) / (2.0 * spec.spacing[axis])


def ehrenfest_force(rho: ScalarField, potential: Potential) -> np.ndarray:
    """-<sum_n dU/dx_n^a> per spatial axis, via central differences.

    The finite-difference gradient is used instead of the spectral one: the
    minimal-image seam of a relational potential would ring globally under
    the Fourier derivative, while the local stencil confines the error to
    the seam cells, where the density is expected to be negligible.
    """
    spec = rho.spec
    if potential.spec != spec:
        raise StateError("potential and density live on different grids")
    out = np.zeros(spec.spatial_dim)
    for axis in range(spec.dim):
        grad = finite_difference_gradient(potential.values.values, spec, axis)
        out[spec.spatial_of_axis(axis)] -= float(np.sum(rho.values * grad)) * spec.cell_volume
    return out


@dataclass(frozen=True)
class EhrenfestSeries:
    """Momentum balance along a trajectory of uniformly spaced snapshots.

    times: interior snapshot times, shape (T-2,)
    momentum_rate: central-difference d<P>/dt per axis, shape (T-2, d)
    force: -<sum_n dU/dx_n^a> at the interior snapshots, shape (T-2, d)
    """

    times: np.ndarray
    momentum_rate: np.ndarray
    force: np.ndarray


def ehrenfest_diagnostic(trajectory, potential: Potential) -> EhrenfestSeries:
    """Compare d<P>/dt against the mean force along a snapshot sequence."""
    waves = list(trajectory)
    if len(waves) < 3:
        raise StateError("ehrenfest diagnostic needs at least 3 snapshots")
    times = np.array([w.time for w in waves])
    gaps = np.diff(times)
    if not np.allclose(gaps, gaps[0], rtol=1e-9, atol=1e-12) or gaps[0] <= 0:
        raise StateError(f"snapshots must be uniformly spaced in time, got gaps {gaps!r}")
    dt = float(gaps[0])
    momenta = np.array([expected_momentum(w) for w in waves])
    rate = (momenta[2:] - momenta[:-2]) / (2.0 * dt)
    force = np.array([ehrenfest_force(w.density, potential) for w in waves[1:-1]])
    return EhrenfestSeries(times[1:-1], rate, force)


def _step_count(total_time: float, dt_pde: float) -> int:
    if not (dt_pde > 0 and np.isfinite(dt_pde)):
        raise ValueError(f"dt_pde must be positive and finite, got {dt_pde!r}")
    steps = int(round(total_time / dt_pde))
    if abs(steps * dt_pde - total_time) > 1e-9 * max(1.0, abs(total_time)):
        raise ValueError("total_time must be an integer multiple of dt_pde")
    if steps < 0:
        raise ValueError("total_time must not be negative")
    return steps


def hamilton_step(
    state: EpistemicState, potential: Potential, shift: ShiftVelocity, dt_pde: float
) -> EpistemicState:
    """One RK4 step of the coupled (rho, Phi) equations.

    Needs the density alive everywhere: the curvature term divides by
    sqrt(rho), so states with exponentially dead regions must be evolved in
    the wavefunction representation instead (see schrodinger_evolve); an
    underflow here aborts with that advice.  The phase grid must be smooth
    (unwrapped): the right-hand side squares its gradient.
    """
    return hamilton_evolve(state, potential, shift, dt_pde, dt_pde)


def hamilton_evolve(
    state: EpistemicState,
    potential: Potential,
    shift: ShiftVelocity,
    total_time: float,
    dt_pde: float,
) -> EpistemicState:
    """RK4 integration of the density-phase pair with a fixed shift."""
    steps = _step_count(total_time, dt_pde)
    spec = state.spec
    if potential.spec != spec:
        raise StateError("potential and state live on different grids")
    if state.phase_wrapped:
        raise StateError(
            "hamilton stepping squares the phase gradient and needs an unwrapped "
            "phase grid; evolve wavefunction-derived states with schrodinger_evolve"
        )

    # dispersive stability of the curvature term at the largest wavenumber
    dispersion = sum(
        0.5 * spec.hbar / spec.axis_masses[axis] * float(np.max(spec.wavenumbers[axis] ** 2))
        for axis in range(spec.dim)
    )
    if dispersion * dt_pde > RK4_IMAG_STABILITY:
        raise StabilityError(
            f"dt_pde={dt_pde:.3e} exceeds the dispersive stability bound; "
            f"largest admissible step is {RK4_IMAG_STABILITY / dispersion:.3e}",
            admissible_dt=RK4_IMAG_STABILITY / dispersion,
        )

    u_values = potential.values.values
    inverse_masses = [1.0 / spec.axis_masses[axis] for axis in range(spec.dim)]
    curvature_weights = np.zeros(spec.grid_points)
    for axis in range(spec.dim):
        curvature_weights = curvature_weights + (
            spec.hbar ** 2 / (2.0 * spec.axis_masses[axis])
        ) * spec.wavenumber_grid(axis) ** 2
    slope = state.phase_slope

    def curvature(rho_values: np.ndarray) -> np.ndarray:
        top = float(np.max(rho_values))
        if float(np.min(rho_values)) < HAMILTON_DENSITY_RELATIVE * top:
            raise NumericalAbort(
                f"density underflow: min rho = {float(np.min(rho_values)):.3e} against "
                f"peak {top:.3e}; evolve this state as a wavefunction instead "
                "(to_wavefunction / schrodinger_evolve)"
            )
        root = np.sqrt(rho_values)
        bent = np.fft.ifftn(-curvature_weights * np.fft.fftn(root)).real
        return bent / root

    def rates(rho_values: np.ndarray, phase_values: np.ndarray):
        phase_grads = gradient_arrays(phase_values, spec)
        rho_rate = np.zeros_like(rho_values)
        # the curvature term enters the phase rate with a plus sign
        phase_rate = -u_values + curvature(rho_values)
        for axis in range(spec.dim):
            total_grad = phase_grads[axis] + slope[axis]
            relative = total_grad - spec.axis_masses[axis] * shift.per_axis[axis]
            phase_rate = phase_rate - 0.5 * inverse_masses[axis] * relative ** 2
            velocity = total_grad * inverse_masses[axis] - shift.per_axis[axis]
            flux = np.fft.fftn(rho_values * velocity)
            rho_rate = rho_rate - np.fft.ifftn(
                1j * spec.derivative_wavenumber_grid(axis) * flux
            ).real
        return rho_rate, phase_rate

    rho = state.rho.values
    phase = state.phase.values
    time = state.time
    for _ in range(steps):
        r1, p1 = rates(rho, phase)
        r2, p2 = rates(rho + 0.5 * dt_pde * r1, phase + 0.5 * dt_pde * p1)
        r3, p3 = rates(rho + 0.5 * dt_pde * r2, phase + 0.5 * dt_pde * p2)
        r4, p4 = rates(rho + dt_pde * r3, phase + dt_pde * p3)
        rho = rho + (dt_pde / 6.0) * (r1 + 2 * r2 + 2 * r3 + r4)
        phase = phase + (dt_pde / 6.0) * (p1 + 2 * p2 + 2 * p3 + p4)
        time += dt_pde
    return EpistemicState(
        ScalarField(rho, spec), ScalarField(phase, spec), slope, time
    )
