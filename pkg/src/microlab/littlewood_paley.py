"""Dyadic partition of unity and its frequency blocks.

The base profile equals 1 for ``|xi| <= 1`` and 0 for ``|xi| >= 2`` with a
C-infinity ramp in between, and the shells are the telescoping differences

    psi_j(xi) = psi_0(2^-j xi) - psi_0(2^(-j+1) xi),   j >= 1,

so ``psi_j`` lives on the annulus ``2^(j-1) <= |xi| <= 2^(j+1)`` and equals 1
at ``|xi| = 2^j``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Grid, SampledField, fourier_multiplier


def smooth_step(t, sharpness: float = 1.0):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``.

    Built from the ``exp(-k/t)`` bump; a larger ``sharpness`` ``k`` makes
    the transition steeper around ``t = 1/2``.
    """
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    inner = (t > 0.0) & (t < 1.0)
    if np.any(inner):
        ti = t[inner]
        with np.errstate(over="ignore"):  # subnormal t: z -> +-inf, tanh saturates correctly
            z = sharpness * (1.0 / ti - 1.0 / (1.0 - ti))
        out = out.astype(float)
        out[inner] = 0.5 * (1.0 - np.tanh(0.5 * z))
    return out if out.ndim else float(out)


def profile(rho, sharpness: float = 1.0):
    """Radial low-pass profile ``psi_0`` as a function of ``rho = |xi|``."""
    rho = np.abs(np.asarray(rho, dtype=float))
    return 1.0 - smooth_step(rho - 1.0, sharpness)


def shell_value(j: int, rho, sharpness: float = 1.0, top: int | None = None):
    """``psi_j`` evaluated at radii ``rho`` (continuous, not only lattice).

    ``top`` marks the absorbing top shell ``1 - psi_0(2^(-J+1) rho)``.
    """
    rho = np.abs(np.asarray(rho, dtype=float))
    if j == 0:
        return profile(rho, sharpness)
    if top is not None and j == top:
        return 1.0 - profile(rho * 2.0 ** (-j + 1), sharpness)
    return profile(rho * 2.0 ** (-j), sharpness) - profile(rho * 2.0 ** (-j + 1), sharpness)


def shell_count(max_radius: float) -> int:
    """Largest ``j`` with ``2^(j-1) < max_radius``."""
    j = 0
    while 2.0 ** j < max_radius:
        j += 1
    return j


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    grid: Grid
    sharpness: float
    J: int
    shells: np.ndarray  # (J+1, *grid.shape)

    def __post_init__(self):
        self.shells.setflags(write=False)

    def psi(self, j: int, rho):
        return shell_value(j, rho, self.sharpness, top=self.J)

    def support(self, j: int) -> tuple[float, float]:
        if j == 0:
            return 0.0, 2.0
        return 2.0 ** (j - 1), 2.0 ** (j + 1)

    def block(self, f: SampledField, j: int) -> SampledField:
        return block(f, j, self)

    def blocks(self, f: SampledField) -> list[SampledField]:
        spec = np.fft.fftn(f.values)
        out = []
        for j in range(self.J + 1):
            vals = np.fft.ifftn(self.shells[j] * spec)
            out.append(SampledField(f.grid, vals.real if f.real else vals))
        return out

    def dump_csv(self, path: str | Path, samples: int = 512) -> None:
        """Write ``(j, |xi|, psi_j)`` rows on a uniform radial sample."""
        rho = np.linspace(0.0, self.grid.max_radius(), samples)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "radius", "psi"])
            for j in range(self.J + 1):
                for r, v in zip(rho, self.psi(j, rho)):
                    w.writerow([j, f"{r:.10g}", f"{v:.17g}"])

    def check(self) -> dict:
        """Invariant diagnostics: partition error, support leakage, positivity."""
        total = np.sum(self.shells, axis=0)
        rad = self.grid.radius()
        leak = 0.0
        for j in range(1, self.J + 1):
            lo, hi = self.support(j)
            outside = (rad < lo) | (rad > hi)
            if np.any(outside):
                leak = max(leak, float(np.max(np.abs(self.shells[j][outside]))))
        return {
            "partition_error": float(np.max(np.abs(total - 1.0))),
            "support_leak": leak,
            "min_value": float(np.min(self.shells)),
            "J": self.J,
        }


def build_partition(grid: Grid, transition_sharpness: float = 1.0) -> DyadicPartition:
    if not 1.0 <= transition_sharpness <= 100.0:
        raise ValueError("transition_sharpness must lie in [1, 100]")
    rmax = grid.max_radius()
    if rmax < 2.0:
        raise ValueError("grid too coarse for a nontrivial dyadic shell")
    J = shell_count(rmax)
    rad = grid.radius()
    shells = np.empty((J + 1,) + grid.shape)
    for j in range(J + 1):
        shells[j] = shell_value(j, rad, transition_sharpness, top=J)
    return DyadicPartition(grid, float(transition_sharpness), J, shells)


def block(f: SampledField, j: int, P: DyadicPartition) -> SampledField:
    if not 0 <= j <= P.J:
        raise ValueError(f"shell index {j} outside 0..{P.J}")
    if f.grid != P.grid:
        raise ValueError("grid mismatch")
    return fourier_multiplier(P.shells[j], f)


def low_pass_weight(grid: Grid, k: int, delta: float = 1.0, sharpness: float = 1.0) -> np.ndarray:
    return profile(grid.radius() * 2.0 ** (-delta * k), sharpness)


def low_pass(f: SampledField, k: int, delta: float = 1.0, sharpness: float = 1.0) -> SampledField:
    """``psi_0(2^(-delta k) D) f``.

    Identity on ``|xi| <= 2^(delta k)``; zero on ``|xi| >= 2^(delta k + 1)``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    return fourier_multiplier(low_pass_weight(f.grid, k, delta, sharpness), f)
