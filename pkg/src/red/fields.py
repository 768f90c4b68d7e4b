"""Density evolution and field-level functionals.

The current velocity of a state is

    V_A = grad_A(Phi) / m_n - shift_a,      Phi = hbar * (phi - log sqrt(rho)),

and the density obeys the continuity equation d_t rho = -div(rho V).

Phase gradients are computed through the unimodular field u = exp(i Phi / hbar)
plus the explicit slope, so a stored phase that winds (wrapped into one period)
still differentiates cleanly: grad Phi = hbar * Im(conj(u) grad u) + slope.

Entropy here is S = -int rho log rho.  Its exact rate along the continuity
flow is dS/dt = + int rho m^{AB} d_A d_B Phi (the shift drops out); this is
evaluated in the integrated-by-parts form -int m^{AB} d_A(rho) d_B(Phi),
which is an identity for spectral derivatives on the periodic grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import DensityFloorError, NumericalAbort, StabilityError
from .model import (
    EpistemicState,
    ScalarField,
    ShiftVelocity,
    SystemSpec,
    gradient_arrays,
    quadrature,
)

DENSITY_FLOOR = 1e-300
POSITIVITY_MONITOR = -1e-10
PHASE_DEAD_RELATIVE = 1e-15
OSMOTIC_FLOOR = 1e-14
OSMOTIC_EXACT = 1e-8


@dataclass(frozen=True)
class VelocityField:
    """One real component per configuration axis."""

    components: list
    spec: SystemSpec


def phase_from_drift(drift_phi: ScalarField, rho: ScalarField, spec: SystemSpec) -> ScalarField:
    """Phi = hbar * (phi - 0.5 * log rho); rho must stay above the log floor."""
    vals = rho.values
    if float(np.min(vals)) < DENSITY_FLOOR:
        cell = np.unravel_index(int(np.argmin(vals)), vals.shape)
        raise DensityFloorError(
            f"density at cell {tuple(int(c) for c in cell)} is {float(np.min(vals)):.3e}, "
            f"below the floor {DENSITY_FLOOR:.0e} required for the logarithm"
        )
    return ScalarField(spec.hbar * (drift_phi.values - 0.5 * np.log(vals)), spec)


def drift_from_phase(phase: ScalarField, rho: ScalarField, spec: SystemSpec) -> ScalarField:
    """Inverse map: phi = Phi / hbar + 0.5 * log rho."""
    vals = rho.values
    if float(np.min(vals)) < DENSITY_FLOOR:
        cell = np.unravel_index(int(np.argmin(vals)), vals.shape)
        raise DensityFloorError(
            f"density at cell {tuple(int(c) for c in cell)} is too small for the logarithm"
        )
    return ScalarField(phase.values / spec.hbar + 0.5 * np.log(vals), spec)


def phase_gradient_arrays(state: EpistemicState) -> list:
    """grad Phi per axis, plus the exact slope contribution.

    Smooth (unwrapped) phase grids are differentiated spectrally as they
    stand.  That path involves no division by rho, so roundoff junk in
    exponentially dead density cells can never leak into the velocity; this
    matters because the continuity stepper feeds its own output back in, and
    any rho-dependent noise in the velocity is self-amplifying there.

    Wrapped phase grids (recovered from a wavefunction, stored modulo
    2*pi*hbar) go through psi = sqrt(rho) * exp(i Phi / hbar), which is
    immune to the wraps, with hbar * Im(conj(psi) grad psi) / rho.  Cells
    with rho below PHASE_DEAD_RELATIVE * max(rho) sit under the FFT
    roundoff floor, where that division is pure noise; they get gradient 0,
    and every consumer weights by rho anyway.
    """
    spec = state.spec
    if not state.phase_wrapped:
        grads = gradient_arrays(state.phase.values, spec)
        return [g + state.phase_slope[axis] for axis, g in enumerate(grads)]
    rho = state.rho.values
    alive = rho > PHASE_DEAD_RELATIVE * float(np.max(rho))
    amplitude = np.where(alive, np.sqrt(np.clip(rho, 0.0, None)), 0.0)
    psi = amplitude * np.exp(1j * state.phase.values / spec.hbar)
    grads = gradient_arrays(psi, spec)
    safe_rho = np.where(alive, rho, 1.0)
    return [
        np.where(alive, spec.hbar * np.imag(np.conj(psi) * g) / safe_rho, 0.0)
        + state.phase_slope[axis]
        for axis, g in enumerate(grads)
    ]


def current_velocity(state: EpistemicState, shift: ShiftVelocity) -> VelocityField:
    """V_A = grad_A(Phi) / m_n - shift_a."""
    spec = state.spec
    grads = phase_gradient_arrays(state)
    comps = [
        ScalarField(grads[axis] / spec.axis_masses[axis] - shift.per_axis[axis], spec)
        for axis in range(spec.dim)
    ]
    return VelocityField(comps, spec)


def fokker_planck_step(state: EpistemicState, shift: ShiftVelocity, dt_pde: float) -> EpistemicState:
    """One conservative continuity step: flux form, spectral divergence, RK4.

    The velocity field is frozen from the state's phase for the whole step;
    the phase itself is not advanced here.  Callers integrating a prescribed
    drift potential re-derive the phase between steps (see diffuse()).
    """
    if not (dt_pde > 0 and np.isfinite(dt_pde)):
        raise ValueError(f"dt_pde must be positive and finite, got {dt_pde!r}")
    spec = state.spec
    velocity = [c.values for c in current_velocity(state, shift).components]

    courant = max(
        float(np.max(np.abs(velocity[axis]))) / spec.spacing[axis] for axis in range(spec.dim)
    )
    if courant * dt_pde > 0.5:
        admissible = 0.5 / courant
        raise StabilityError(
            f"dt_pde={dt_pde:.3e} exceeds the advective stability bound; "
            f"largest admissible step is {admissible:.3e}",
            admissible_dt=admissible,
        )

    def flux_divergence(rho_values: np.ndarray) -> np.ndarray:
        div = np.zeros_like(rho_values)
        for axis in range(spec.dim):
            spectrum = np.fft.fftn(rho_values * velocity[axis])
            div += np.fft.ifftn(1j * spec.derivative_wavenumber_grid(axis) * spectrum).real
        return div

    rho0 = state.rho.values
    k1 = -flux_divergence(rho0)
    k2 = -flux_divergence(rho0 + 0.5 * dt_pde * k1)
    k3 = -flux_divergence(rho0 + 0.5 * dt_pde * k2)
    k4 = -flux_divergence(rho0 + dt_pde * k3)
    rho1 = rho0 + (dt_pde / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    lowest = float(np.min(rho1))
    if lowest < POSITIVITY_MONITOR:
        raise NumericalAbort(
            f"density positivity monitor tripped: min rho = {lowest:.3e} after the step"
        )
    return state.replace_rho(rho1, time=state.time + dt_pde)


def _bump_sigmoid(u: np.ndarray) -> np.ndarray:
    """Monotone 0 -> 1 switch, exactly flat outside (0, 1), C-infinity inside."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", under="ignore"):
        lower = np.where(u > 0.0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        upper = np.where(u < 1.0, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    return lower / (lower + upper)


def regularized_log_density(rho: ScalarField) -> np.ndarray:
    """log rho with the exponentially dead tail frozen to a constant.

    Below OSMOTIC_FLOOR relative density the result is exactly constant, so
    integrator roundoff living in dead cells transmits nothing into any
    field derived from the logarithm; a feedback loop through the continuity
    stepper amplifies any nonzero transmission exponentially.  Above
    OSMOTIC_EXACT the true logarithm is returned unchanged.  The branches
    are joined by a C-infinity bump blend in log space: a transition of
    merely finite smoothness rings at the grid scale when differentiated
    spectrally, and the ringing undershoots the density in regions that
    hold real probability.
    """
    vals = rho.values
    top = float(np.max(vals))
    if not top > 0.0:
        raise DensityFloorError("density has no positive cells to anchor the logarithm")
    log_lo = np.log(OSMOTIC_FLOOR)
    width = np.log(OSMOTIC_EXACT) - log_lo
    rel = np.clip(vals / top, OSMOTIC_FLOOR, None)
    excess = np.log(rel) - log_lo
    blend = _bump_sigmoid(excess / width)
    return log_lo + blend * excess + np.log(top)


def osmotic_phase(drift_phi: ScalarField, rho: ScalarField, spec: SystemSpec) -> ScalarField:
    """Phi from a drift potential with the dead-tail-safe logarithm."""
    return ScalarField(
        spec.hbar * (drift_phi.values - 0.5 * regularized_log_density(rho)), spec
    )


def state_drift_potential(state: EpistemicState) -> tuple:
    """Drift potential of a state: (grid part, per-axis slope).

    phi = Phi / hbar + 0.5 * log rho, split the same way the state splits
    its phase: the grid holds the periodic part, the slope the linear part.
    Uses the dead-tail-safe logarithm so the grid part stays spectrally
    differentiable.
    """
    if state.phase_wrapped:
        raise NumericalAbort(
            "cannot build a drift potential from a wrapped phase grid; "
            "unwrap through the wavefunction route first"
        )
    spec = state.spec
    grid = ScalarField(
        state.phase.values / spec.hbar + 0.5 * regularized_log_density(state.rho),
        spec,
    )
    return grid, state.phase_slope / spec.hbar


def diffuse(state: EpistemicState, drift_phi: ScalarField, shift: ShiftVelocity,
            total_time: float, dt_pde: float) -> EpistemicState:
    """Integrate the density flow of a prescribed drift potential.

    In the (drift, density) variables the equation is linear: the osmotic
    part of the flux is -hbar/(2 m) grad rho, so the step is heat plus
    advection with no logarithm and no division by rho anywhere.  That
    linearity is essential, not cosmetic: any velocity reconstructed from
    rho couples roundoff in exponentially dead tail cells back into the
    flux, and the loop amplifies it exponentially.  Here high-wavenumber
    junk is instead damped by the diffusion term.

    The returned state carries the regularized osmotic phase of its own
    final density, so it can be handed to entropy_rate directly.
    """
    steps = int(round(total_time / dt_pde))
    if abs(steps * dt_pde - total_time) > 1e-9 * max(1.0, total_time):
        raise ValueError("total_time must be an integer multiple of dt_pde")
    if not (dt_pde > 0 and np.isfinite(dt_pde)):
        raise ValueError(f"dt_pde must be positive and finite, got {dt_pde!r}")
    spec = state.spec

    drift_grads = gradient_arrays(drift_phi.values, spec)
    drift_velocity = [
        spec.hbar * drift_grads[axis] / spec.axis_masses[axis] - shift.per_axis[axis]
        for axis in range(spec.dim)
    ]
    osmotic = [0.5 * spec.hbar / spec.axis_masses[axis] for axis in range(spec.dim)]

    # RK4 stability: the heat symbol is real, the advective one imaginary
    heat_scale = sum(
        osmotic[axis] * float(np.max(spec.wavenumbers[axis] ** 2)) for axis in range(spec.dim)
    )
    if heat_scale * dt_pde > 2.78:
        raise StabilityError(
            f"dt_pde={dt_pde:.3e} exceeds the diffusive stability bound; "
            f"largest admissible step is {2.78 / heat_scale:.3e}",
            admissible_dt=2.78 / heat_scale,
        )
    courant = max(
        float(np.max(np.abs(drift_velocity[axis]))) / spec.spacing[axis]
        for axis in range(spec.dim)
    )
    if courant * dt_pde > 0.5:
        raise StabilityError(
            f"dt_pde={dt_pde:.3e} exceeds the advective stability bound; "
            f"largest admissible step is {0.5 / courant:.3e}",
            admissible_dt=0.5 / courant,
        )

    def rate(rho_values: np.ndarray) -> np.ndarray:
        spectrum = np.fft.fftn(rho_values)
        heat_symbol = np.zeros(spec.grid_points)
        for axis in range(spec.dim):
            heat_symbol = heat_symbol + osmotic[axis] * spec.wavenumber_grid(axis) ** 2
        out = np.fft.ifftn(-heat_symbol * spectrum).real
        for axis in range(spec.dim):
            flux = np.fft.fftn(rho_values * drift_velocity[axis])
            out -= np.fft.ifftn(
                1j * spec.derivative_wavenumber_grid(axis) * flux
            ).real
        return out

    rho = state.rho.values
    time = state.time
    for _ in range(steps):
        k1 = rate(rho)
        k2 = rate(rho + 0.5 * dt_pde * k1)
        k3 = rate(rho + 0.5 * dt_pde * k2)
        k4 = rate(rho + dt_pde * k3)
        rho = rho + (dt_pde / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        time += dt_pde
        lowest = float(np.min(rho))
        if lowest < POSITIVITY_MONITOR:
            raise NumericalAbort(
                f"density positivity monitor tripped: min rho = {lowest:.3e} during diffusion"
            )
    final_rho = ScalarField(rho, spec)
    final_phase = osmotic_phase(drift_phi, final_rho, spec)
    return EpistemicState(final_rho, final_phase, None, time)


def entropy(rho: ScalarField) -> float:
    """S = -int rho log rho with 0 log 0 = 0."""
    vals = np.clip(rho.values, 0.0, None)
    return float(-np.sum(xlogy(vals, vals)) * rho.spec.cell_volume)


def entropy_rate(state: EpistemicState) -> float:
    """dS/dt along the continuity flow: + int rho m^{AB} d_A d_B Phi.

    Evaluated as -sum_A (1/m_A) int d_A(rho) d_A(Phi), exact under the
    spectral integration-by-parts identity.  Independent of the shift.
    """
    spec = state.spec
    rho_grads = gradient_arrays(state.rho.values, spec)
    phase_grads = phase_gradient_arrays(state)
    total = 0.0
    for axis in range(spec.dim):
        total -= float(np.sum(rho_grads[axis] * phase_grads[axis])) / spec.axis_masses[axis]
    return total * spec.cell_volume


def sqrt_density_gradient_arrays(state: EpistemicState) -> list:
    """grad sqrt(rho) per axis (clipping negligible negative cells)."""
    root = np.sqrt(np.clip(state.rho.values, 0.0, None))
    return gradient_arrays(root, state.spec)
