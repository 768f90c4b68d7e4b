"""Total momentum under a relational versus an external potential.

A potential that depends only on relative positions leaves the expected
total momentum alone; pinning one particle to an external well makes the
momentum oscillate, and the rate of change then follows the expected
force on the pinned coordinate.
"""

import numpy as np

from red.model import ShiftVelocity, SystemSpec
from red.presets import (
    gaussian_wave_values,
    harmonic_external_values,
    smooth_harmonic_relational_values,
)
from red.quantum import (
    Potential,
    WaveField,
    ehrenfest_diagnostic,
    expected_momentum,
    schrodinger_evolve,
)

BOX = 16.0
GRID = 64
K_SPRING = 0.3
DT_PDE = 1e-3
SNAPSHOTS = 20
SNAPSHOT_DT = 0.05


def momentum_trace(wave, potential, spec):
    rest = ShiftVelocity(np.zeros(1), spec)
    trajectory = [wave]
    for _ in range(SNAPSHOTS):
        wave = schrodinger_evolve(wave, potential, rest, SNAPSHOT_DT, DT_PDE)
        trajectory.append(wave)
    return trajectory


def main():
    spec = SystemSpec(2, 1, (1.0, 1.0), (BOX,), (GRID, GRID), dt=DT_PDE)
    start = WaveField(gaussian_wave_values(spec, (6.0, 8.0), 1.2, (2, 0)), spec)

    relational = Potential.from_values(
        smooth_harmonic_relational_values(spec, K_SPRING), spec,
        relational_flag=True)
    external = Potential.from_values(
        harmonic_external_values(spec, 0.25, 0, BOX / 2.0), spec,
        relational_flag=False)

    print("relational spring between the particles:")
    trace = momentum_trace(start, relational, spec)
    p0 = expected_momentum(trace[0])[0]
    drifts = [abs(expected_momentum(w)[0] - p0) for w in trace]
    for i in (0, 5, 10, 15, 20):
        t = i * SNAPSHOT_DT
        print(f"  t={t:5.2f}  total momentum drift {drifts[i]:.3e}")
    print(f"  worst drift over the run: {max(drifts):.3e}")

    print()
    print("external well on particle 0:")
    trace = momentum_trace(start, external, spec)
    series = ehrenfest_diagnostic(trace, external)
    worst = np.max(np.abs(series.momentum_rate - series.force)
                   / np.max(np.abs(series.force)))
    for i in (0, 4, 9, 14, 18):
        print(f"  t={series.times[i]:5.2f}  d<P>/dt {series.momentum_rate[i, 0]:+.6f}"
              f"  -<dU/dx0> {series.force[i, 0]:+.6f}")
    print(f"  worst relative gap at interior snapshots: {worst:.3e}")


if __name__ == "__main__":
    main()
