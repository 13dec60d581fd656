"""Norms of the Zygmund, Sobolev, bmo and H^{r,inf} scales, plus synthesizers
of fields with a prescribed regularity."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Grid, SampledField, bessel_weight, fourier_multiplier
from .littlewood_paley import DyadicPartition, build_partition, low_pass, profile

KINDS = ("lacunary", "piecewise_polynomial", "mollified_noise")


@dataclass(frozen=True)
class RegularityBudget:
    r: float
    scale: float = 1.0
    seed: int = 0
    kind: str = "lacunary"

    def __post_init__(self):
        if not -3.0 <= self.r <= 4.0:
            raise ValueError("r must lie in [-3, 4]")
        if self.scale < 0:
            raise ValueError("scale must be non-negative")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")


def _partition(f: SampledField, P: DyadicPartition | None) -> DyadicPartition:
    if P is None:
        return build_partition(f.grid)
    if P.grid != f.grid:
        raise ValueError("grid mismatch")
    return P


def shell_maxima(f: SampledField, P: DyadicPartition | None = None) -> np.ndarray:
    """``max |psi_j(D) f|`` for every shell."""
    P = _partition(f, P)
    spec = np.fft.fftn(f.values)
    out = np.empty(P.J + 1)
    for j in range(P.J + 1):
        out[j] = np.max(np.abs(np.fft.ifftn(P.shells[j] * spec)))
    return out


def zygmund_norm(f: SampledField, r: float, P: DyadicPartition | None = None) -> float:
    """``sup_j 2^(j r) ||psi_j(D) f||_inf``."""
    m = shell_maxima(f, P)
    return float(np.max(2.0 ** (r * np.arange(len(m))) * m))


def sobolev_norm(f: SampledField, s: float) -> float:
    """L2 norm of ``<D>^s f`` (grid quadrature, via Parseval)."""
    coeff = np.fft.fftn(f.values) * f.grid.cell_volume
    w = bessel_weight(f.grid, 2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(coeff) ** 2) / (2 * np.pi) ** f.grid.dim))


def dyadic_bmo_seminorm(values: np.ndarray) -> float:
    """Max over dyadic sub-cubes of the mean absolute deviation from the cube mean."""
    shape = values.shape
    n = shape[0]
    if any(m != n for m in shape):
        # rectangular grids: cubes follow the shorter axis
        n = min(shape)
    best = 0.0
    levels = int(np.log2(n))
    for l in range(levels + 1):
        if values.ndim == 1:
            side = shape[0] >> l
            if side < 2:
                continue
            cubes = values.reshape(-1, side)
            mean = cubes.mean(axis=1, keepdims=True)
            dev = np.abs(cubes - mean).mean(axis=1)
        else:
            s0, s1 = shape[0] >> l, shape[1] >> l
            if s0 * s1 < 2:
                continue
            cubes = values.reshape(shape[0] // s0, s0, shape[1] // s1, s1)
            mean = cubes.mean(axis=(1, 3), keepdims=True)
            dev = np.abs(cubes - mean).mean(axis=(1, 3))
        best = max(best, float(np.max(dev)))
    return best


def bmo_norm(f: SampledField, P: DyadicPartition | None = None) -> float:
    """``||psi_0(D) f||_inf + ||(1 - psi_0(D)) f||_BMO`` with dyadic cubes."""
    sharp = P.sharpness if P is not None else 1.0
    w0 = profile(f.grid.radius(), sharp)
    spec = np.fft.fftn(f.values)
    low = np.fft.ifftn(w0 * spec)
    high = np.fft.ifftn((1.0 - w0) * spec)
    if f.real:
        low, high = low.real, high.real
    return float(np.max(np.abs(low))) + dyadic_bmo_seminorm(high)


def hr_infty_norm(f: SampledField, r: float, P: DyadicPartition | None = None) -> float:
    """``||<D>^r f||_bmo``."""
    return bmo_norm(fourier_multiplier(bessel_weight(f.grid, r), f), P)


# ---------------------------------------------------------------- synthesis


def lacunary_modes(grid: Grid) -> range:
    """Octaves ``j`` whose mode ``2^j`` stays strictly below the Nyquist frequency."""
    top = int(np.log2(min(grid.shape))) - 2
    return range(1, top + 1)


def lacunary_field(grid: Grid, r: float, seed: int = 0, scale: float = 1.0) -> SampledField:
    """``scale * sum_j 2^(-j r) cos(2^j omega_j . x + phi_j)``, one mode per shell.

    Phases and directions are drawn octave by octave from the seed, so a
    refined grid reproduces the coarse field and only appends higher modes.
    """
    rng = np.random.default_rng(seed)
    pts = grid.points()
    vals = np.zeros(grid.shape)
    top = int(np.log2(min(grid.shape))) - 2
    for j in range(1, 64):
        phase = rng.uniform(0.0, 2 * np.pi)
        axis = int(rng.integers(grid.dim)) if grid.dim > 1 else 0
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        if j > top:
            break
        vals += 2.0 ** (-j * r) * np.cos(sign * 2.0 ** j * pts[axis] + phase)
    return SampledField(grid, scale * vals)


class PiecewiseQuadratic:
    """Periodic C^{1,1} spline: piecewise-constant second derivative.

    Knots and curvature values come from the seed; evaluation is exact at
    any ``x`` so the same function can be sampled on different grids.
    """

    def __init__(self, seed: int = 0, n_knots: int = 8):
        rng = np.random.default_rng(seed)
        knots = np.sort(rng.uniform(0.0, 2 * np.pi, n_knots))
        knots[0] = 0.0
        self.knots = knots
        widths = np.diff(np.append(knots, 2 * np.pi))
        curv = rng.normal(size=n_knots)
        curv -= np.sum(curv * widths) / (2 * np.pi)  # periodic first derivative
        self.curv = curv
        # first derivative  g'(x) = c0 + int_0^x g''
        d1_knots = np.concatenate([[0.0], np.cumsum(curv * widths)])[:-1]
        # choose c0 so that int g' = 0 over the period
        int_d1 = np.sum(d1_knots * widths + 0.5 * curv * widths ** 2)
        c0 = -int_d1 / (2 * np.pi)
        self.d1 = d1_knots + c0
        self.d0 = np.concatenate([[0.0], np.cumsum(self.d1 * widths + 0.5 * curv * widths ** 2)])[:-1]
        ref = self._eval(np.linspace(0, 2 * np.pi, 8192, endpoint=False), 0)
        self.offset = -float(np.mean(ref))
        self.norm = float(np.max(np.abs(ref + self.offset)))

    def _eval(self, x, order):
        x = np.mod(np.asarray(x, dtype=float), 2 * np.pi)
        idx = np.searchsorted(self.knots, x, side="right") - 1
        dx = x - self.knots[idx]
        c = self.curv[idx]
        if order == 0:
            return self.d0[idx] + self.d1[idx] * dx + 0.5 * c * dx ** 2
        if order == 1:
            return self.d1[idx] + c * dx
        return c

    def __call__(self, x, order: int = 0):
        val = self._eval(x, order)
        if order == 0:
            val = val + self.offset
        return val / self.norm


def piecewise_quadratic_field(grid: Grid, seed: int = 0, scale: float = 1.0,
                              n_knots: int = 8) -> SampledField:
    # 2D fields are tensor products of independently seeded splines
    pts = grid.points()
    vals = np.ones(grid.shape)
    for axis in range(grid.dim):
        vals = vals * PiecewiseQuadratic(seed + 7919 * axis, n_knots)(pts[axis])
    return SampledField(grid, scale * vals)


def mollified_noise(grid: Grid, seed: int = 0, scale: float = 1.0, cutoff: int | None = None) -> SampledField:
    rng = np.random.default_rng(seed)
    noise = SampledField(grid, rng.normal(size=grid.shape))
    if cutoff is None:
        cutoff = max(1, int(np.log2(min(grid.shape))) // 2)
    smooth = low_pass(noise, cutoff)
    return SampledField(grid, scale * smooth.values / max(smooth.sup(), 1e-300))


def synthesize_regular(grid: Grid, budget: RegularityBudget,
                       P: DyadicPartition | None = None) -> SampledField:
    if budget.kind == "lacunary":
        if not 0.0 < budget.r <= 4.0:
            raise ValueError("lacunary synthesis requires r in (0, 4]")
        return lacunary_field(grid, budget.r, budget.seed, budget.scale)
    if budget.kind == "piecewise_polynomial":
        return piecewise_quadratic_field(grid, budget.seed, budget.scale)
    return mollified_noise(grid, budget.seed, budget.scale)


NORMS: dict[str, Callable] = {
    "zygmund": lambda f, r: zygmund_norm(f, r),
    "sobolev": lambda f, r: sobolev_norm(f, r),
    "bmo": lambda f, r: bmo_norm(f),
    "hrinf": lambda f, r: hr_infty_norm(f, r),
}
