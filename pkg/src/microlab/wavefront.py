"""Wavefront-set estimation from windowed, conically restricted dyadic energies.

A probe multiplies ``u`` by a smooth window of width ``h`` cells around
``x0``, keeps the part of the spectrum inside a cone around ``omega`` (a
half-line in 1D) and measures the L2 energy of every dyadic shell. A
least-squares slope of ``log2 E_j`` against ``j`` estimates the microlocal
Sobolev order: shell energies of a field with ``|u^| ~ |xi|^-sigma`` in
the cone scale like ``2^(j (dim/2 - sigma))``, so ``s* = -slope``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .grid import Grid, SampledField
from .littlewood_paley import DyadicPartition, build_partition, profile

NOISE_FLOOR = 1e-13
MIN_SHELLS = 4


@dataclass(frozen=True)
class MicrolocalProbe:
    center: tuple
    h: float
    direction: tuple
    j_min: int
    j_max: int
    aperture_deg: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        d = np.atleast_1d(np.asarray(self.direction, float))
        n = np.linalg.norm(d)
        if n == 0:
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "direction", tuple(float(v) for v in d / n))
        if self.h < 8:
            raise ValueError("window width must be at least 8 cells")
        if self.j_min < 3:
            raise ValueError("j_min must be at least 3")
        if self.j_max < self.j_min:
            raise ValueError("empty shell range")

    def validate(self, P: DyadicPartition) -> None:
        if self.j_max > P.J - 1:
            raise ValueError(f"j_max must be at most J-1 = {P.J - 1}")
        if len(self.center) != P.grid.dim:
            raise ValueError("probe dimension does not match the grid")


def window(grid: Grid, center, h: float) -> np.ndarray:
    """Smooth bump: 1 within ``h/4`` cells of ``center``, 0 beyond ``h/2``."""
    dist2 = np.zeros(grid.shape)
    for axis, (pts, c) in enumerate(zip(grid.points(), center)):
        d = np.mod(pts - c + np.pi, 2 * np.pi) - np.pi
        dist2 = dist2 + (d / grid.spacing[axis]) ** 2
    return profile(np.sqrt(dist2) / (h / 4.0))


def cone_mask(grid: Grid, direction, aperture_deg: float = 20.0) -> np.ndarray:
    freqs = grid.frequencies()
    if grid.dim == 1:
        return (np.sign(direction[0]) * freqs[0] > 0).astype(float)
    k = np.stack(freqs, axis=-1).astype(float)
    rho = np.linalg.norm(k, axis=-1)
    cosang = np.divide(k @ np.asarray(direction), rho, out=np.zeros_like(rho), where=rho > 0)
    return (cosang >= np.cos(np.radians(aperture_deg))).astype(float)


def _shell_energies(spec: np.ndarray, masks: np.ndarray, grid: Grid) -> np.ndarray:
    """``spec``: (..., *grid.shape) quadrature-scaled coefficients; masks: (J+1, *shape)."""
    lead = spec.shape[: spec.ndim - grid.dim]
    power = (np.abs(spec) ** 2).reshape(lead + (grid.size,))
    weights = (masks ** 2).reshape(len(masks), grid.size)
    return np.sqrt(np.maximum(power @ weights.T, 0.0) / (2 * np.pi) ** grid.dim)


def microlocal_energies(u: SampledField, probe: MicrolocalProbe,
                        P: DyadicPartition | None = None) -> np.ndarray:
    """Per-shell energies ``E_j`` for ``j = 0..J``."""
    P = P or build_partition(u.grid)
    probe.validate(P)
    chi = window(u.grid, probe.center, probe.h)
    spec = np.fft.fftn(chi * u.values) * u.grid.cell_volume
    masks = P.shells * cone_mask(u.grid, probe.direction, probe.aperture_deg)
    return _shell_energies(spec, masks, u.grid)


@dataclass
class ProbeVerdict:
    classification: str  # regular | singular | indeterminate
    s_star: float
    sigma_star: float
    energies: list

    def __iter__(self):
        yield self.classification
        yield self.s_star


def fit_order(energies: np.ndarray, j_min: int, j_max: int, floor: float, dim: int):
    """Slope fit over the shell range; ``None`` when too few shells clear the floor."""
    js = np.arange(j_min, j_max + 1)
    e = np.asarray(energies)[js]
    keep = e > floor
    if keep.sum() < MIN_SHELLS:
        return None
    slope = np.polyfit(js[keep], np.log2(e[keep]), 1)[0]
    s_star = -float(slope)
    return s_star, s_star + dim / 2.0


def classify_energies(energies, s: float, probe: MicrolocalProbe, norm_u: float, dim: int,
                      margin: float = 0.1) -> ProbeVerdict:
    fit = fit_order(energies, probe.j_min, probe.j_max, NOISE_FLOOR * norm_u, dim)
    if fit is None:
        return ProbeVerdict("indeterminate", float("nan"), float("nan"), list(map(float, energies)))
    s_star, sigma_star = fit
    label = "singular" if s_star < s - margin else "regular"
    return ProbeVerdict(label, s_star, sigma_star, list(map(float, energies)))


def wf_classify(u: SampledField, s: float, probe: MicrolocalProbe,
                P: DyadicPartition | None = None, margin: float = 0.1) -> ProbeVerdict:
    P = P or build_partition(u.grid)
    e = microlocal_energies(u, probe, P)
    return classify_energies(e, s, probe, u.l2(), u.grid.dim, margin)


# --------------------------------------------------------------- scanning


@dataclass(frozen=True)
class ProbeLattice:
    """Centers every ``stride`` cells along each axis, all lattice directions."""

    h: float
    stride: int
    j_min: int
    j_max: int
    margin: float = 0.1
    aperture_deg: float = 20.0
    n_directions: int = 8

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be positive")
        if self.stride > self.h / 2:
            raise ValueError("stride must not exceed h/2 so probes cover the torus")

    def directions(self, dim: int) -> list[tuple]:
        if dim == 1:
            return [(1.0,), (-1.0,)]
        th = 2 * np.pi * np.arange(self.n_directions) / self.n_directions
        return [(float(np.cos(t)), float(np.sin(t))) for t in th]

    def centers(self, grid: Grid) -> list[tuple]:
        idx = [np.arange(0, n, self.stride) for n in grid.shape]
        mesh = np.meshgrid(*idx, indexing="ij")
        return [tuple(float(m[i] * grid.spacing[a]) for a, m in enumerate(mesh))
                for i in np.ndindex(mesh[0].shape)]

    def probe(self, center, direction) -> MicrolocalProbe:
        return MicrolocalProbe(center, self.h, direction, self.j_min, self.j_max, self.aperture_deg)


@dataclass
class WavefrontEntry:
    x0: tuple
    omega: tuple
    s_star: float
    sigma_star: float
    classified: str
    shells: list


@dataclass
class WavefrontEstimate:
    s: float
    lattice: ProbeLattice
    entries: list = field(default_factory=list)

    def singular(self) -> list[WavefrontEntry]:
        return [e for e in self.entries if e.classified == "singular"]

    def indeterminate_rate(self) -> float:
        if not self.entries:
            return 0.0
        return sum(e.classified == "indeterminate" for e in self.entries) / len(self.entries)

    def to_dict(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and not np.isfinite(v) else v
        return {"s": self.s, "thresholds": {"margin": self.lattice.margin,
                                            "noise_floor": NOISE_FLOOR},
                "lattice": asdict(self.lattice),
                "entries": [{"x0": list(e.x0), "omega": list(e.omega), "s_star": clean(e.s_star),
                             "sigma_star": clean(e.sigma_star), "classified": e.classified,
                             "shells": e.shells} for e in self.entries]}

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    def write_svg(self, path, width: int = 640, height: int = 160) -> None:
        """Heat strip of ``s*`` per (center, direction); 1D lattices only."""
        rows = self.lattice.directions(1)
        xs = sorted({e.x0[0] for e in self.entries})
        cell_w = width / max(len(xs), 1)
        cell_h = height / len(rows)
        finite = [e.s_star for e in self.entries if np.isfinite(e.s_star)]
        lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">']
        col = {x: i for i, x in enumerate(xs)}
        for e in self.entries:
            r = rows.index(tuple(e.omega)) if tuple(e.omega) in rows else 0
            if np.isfinite(e.s_star):
                g = int(255 * (e.s_star - lo) / (hi - lo or 1.0))
                fill = f"rgb({255 - g},{g},128)"
            else:
                fill = "rgb(200,200,200)"
            parts.append(f'<rect x="{col[e.x0[0]] * cell_w:.2f}" y="{r * cell_h:.2f}" '
                         f'width="{cell_w:.2f}" height="{cell_h:.2f}" fill="{fill}"/>')
        parts.append("</svg>")
        Path(path).write_text("\n".join(parts) + "\n")


def wf_scan(u: SampledField, s: float, lattice: ProbeLattice,
            P: DyadicPartition | None = None, batch: int = 64) -> WavefrontEstimate:
    """Classify every (center, direction) pair of ``lattice``."""
    P = P or build_partition(u.grid)
    grid = u.grid
    est = WavefrontEstimate(s, lattice)
    centers = lattice.centers(grid)
    directions = lattice.directions(grid.dim)
    probes0 = lattice.probe(centers[0], directions[0])
    probes0.validate(P)
    norm_u = u.l2()
    masks = {d: P.shells * cone_mask(grid, d, lattice.aperture_deg) for d in directions}
    axes = tuple(range(1, grid.dim + 1))
    for start in range(0, len(centers), batch):
        chunk = centers[start:start + batch]
        windows = np.stack([window(grid, c, lattice.h) for c in chunk])
        spec = np.fft.fftn(windows * u.values[None], axes=axes) * grid.cell_volume
        for d in directions:
            energies = _shell_energies(spec, masks[d], grid)
            for c, e in zip(chunk, energies):
                probe = lattice.probe(c, d)
                v = classify_energies(e, s, probe, norm_u, grid.dim, lattice.margin)
                est.entries.append(WavefrontEntry(c, d, v.s_star, v.sigma_star,
                                                  v.classification, v.energies))
    return est


def singular_clusters(est: WavefrontEstimate, grid: Grid, gap: float | None = None) -> list[dict]:
    """Group singular centers (any direction) of a 1D scan into periodic runs.

    Neighbouring centers no more than ``gap`` cells apart join a cluster;
    centroids are circular means in grid cells.
    """
    if grid.dim != 1:
        raise ValueError("clustering is implemented for 1D scans")
    n = grid.shape[0]
    stride = est.lattice.stride
    gap = stride if gap is None else gap
    cells = sorted({int(round(e.x0[0] / grid.spacing[0])) for e in est.singular()})
    if not cells:
        return []
    groups = [[cells[0]]]
    for c in cells[1:]:
        if c - groups[-1][-1] <= gap:
            groups[-1].append(c)
        else:
            groups.append([c])
    if len(groups) > 1 and (groups[0][0] + n) - groups[-1][-1] <= gap:
        groups[0] = groups[-1] + [c + n for c in groups[0]]
        groups.pop()
    out = []
    for g in groups:
        centroid = float(np.mean(g)) % n
        out.append({"centroid_cell": centroid, "centroid_x": centroid * grid.spacing[0],
                    "size": len(g), "cells": [c % n for c in g]})
    return sorted(out, key=lambda d: d["centroid_cell"])
