"""Bony smoothing ``p = p_sharp + p_flat``, quantization ``p(x, D)`` and
empirical Sobolev mapping bounds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .function_spaces import hr_infty_norm, sobolev_norm, zygmund_norm
from .grid import Grid, SampledField, bessel_weight
from .littlewood_paley import DyadicPartition, build_partition, low_pass_weight, shell_value
from .symbols import CoefficientSymbol, MultiIndex, _monomial

DENSE_LIMITS = {1: 256, 2: 64}


@dataclass(frozen=True, eq=False)
class SplitSymbol:
    """``sum_k sum_alpha c_{k,alpha}(x) xi^alpha psi_k(xi)`` for one half of the split."""

    parent: CoefficientSymbol
    partition: DyadicPartition
    delta: float
    shells: tuple  # per k: dict alpha -> SampledField
    kind: str

    @property
    def grid(self) -> Grid:
        return self.parent.grid

    @property
    def order(self) -> int:
        return self.parent.order

    def field_at(self, xi) -> SampledField:
        """x-field ``p(., xi)`` at a (not necessarily lattice) frequency."""
        xi = np.asarray(xi, float)
        rho = float(np.linalg.norm(xi))
        vals = np.zeros(self.grid.shape, dtype=complex)
        P = self.partition
        for k, coeffs in enumerate(self.shells):
            w = float(shell_value(k, rho, P.sharpness, top=P.J))
            if w == 0.0:
                continue
            for alpha, c in coeffs.items():
                vals = vals + w * _monomial(xi, alpha) * c.values
        real = all(c.real for coeffs in self.shells for c in coeffs.values())
        return SampledField(self.grid, vals.real if real else vals)

    def table(self) -> np.ndarray:
        """Values on grid x lattice (lattice in FFT order)."""
        pad = (None,) * self.grid.dim
        freqs = self.grid.frequencies()
        out = np.zeros(self.grid.shape * 2, dtype=complex)
        for k, coeffs in enumerate(self.shells):
            for alpha, c in coeffs.items():
                w = _monomial(freqs, alpha) * self.partition.shells[k]
                out += c.values[(...,) + pad] * np.broadcast_to(w, self.grid.shape)[pad + (...,)]
        return out

    def real_part(self) -> "SplitSymbol":
        shells = tuple({a: c.real_part() for a, c in coeffs.items()} for coeffs in self.shells)
        return SplitSymbol(self.parent, self.partition, self.delta, shells, self.kind)


SharpSymbol = SplitSymbol
FlatSymbol = SplitSymbol


def decompose(p: CoefficientSymbol, delta: float = 1.0,
              P: DyadicPartition | None = None) -> tuple[SplitSymbol, SplitSymbol]:
    """Split each coefficient at the shell-dependent cutoff ``2^(delta k)``."""
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    P = P or build_partition(p.grid)
    if P.grid != p.grid:
        raise ValueError("partition and symbol grids differ")
    spectra = {a: np.fft.fftn(c.values) for a, c in p.terms.items()}
    sharp, flat = [], []
    for k in range(P.J + 1):
        w = low_pass_weight(p.grid, k, delta, P.sharpness)
        s_k, f_k = {}, {}
        for alpha, c in p.terms.items():
            lo = np.fft.ifftn(w * spectra[alpha])
            if c.real:
                lo = lo.real
            s_k[alpha] = SampledField(p.grid, lo)
            f_k[alpha] = c - s_k[alpha]
        sharp.append(s_k)
        flat.append(f_k)
    return (SplitSymbol(p, P, delta, tuple(sharp), "sharp"),
            SplitSymbol(p, P, delta, tuple(flat), "flat"))


def _xi_power(grid: Grid, alpha: MultiIndex) -> np.ndarray:
    """Raw lattice monomial ``xi^alpha`` (Nyquist kept, matching the dense sum)."""
    return np.broadcast_to(_monomial(grid.frequencies(), alpha), grid.shape)


def _finish(vals: np.ndarray, grid: Grid, real_hint: bool) -> SampledField:
    if real_hint:
        scale = float(np.max(np.abs(vals))) if vals.size else 0.0
        if float(np.max(np.abs(vals.imag))) <= 1e-13 * max(scale, 1e-300):
            return SampledField(grid, vals.real)
    return SampledField(grid, vals)


def quantize(p, f: SampledField) -> SampledField:
    """Apply ``p(x, D)`` to ``f``; dispatch on the symbol representation."""
    if p.grid != f.grid:
        raise ValueError("grid mismatch")
    spec = np.fft.fftn(f.values)
    out = np.zeros(f.grid.shape, dtype=complex)
    if isinstance(p, CoefficientSymbol):
        for alpha, c in p.terms.items():
            out += c.values * np.fft.ifftn(_xi_power(f.grid, alpha) * spec)
        coeffs_real = all(c.real for c in p.terms.values())
    elif isinstance(p, SplitSymbol):
        alphas = sorted({a for coeffs in p.shells for a in coeffs})
        powers = {a: _xi_power(f.grid, a) for a in alphas}
        coeffs_real = True
        for k, coeffs in enumerate(p.shells):
            shell_spec = p.partition.shells[k] * spec
            for alpha, c in coeffs.items():
                coeffs_real &= c.real
                out += c.values * np.fft.ifftn(powers[alpha] * shell_spec)
    else:
        raise TypeError(f"cannot quantize {type(p).__name__}")
    return _finish(out, f.grid, f.real and coeffs_real)


def quantize_dense(table: np.ndarray, f: SampledField) -> SampledField:
    """Literal ``(2 pi)^-d sum_xi e^{i x.xi} p(x, xi) F(xi)``.

    ``table`` has shape ``grid.shape + grid.shape`` with frequencies in FFT
    order. Cost is ``O(N^(2 dim))`` so grids are capped.
    """
    grid = f.grid
    if any(n > DENSE_LIMITS[grid.dim] for n in grid.shape):
        raise ValueError(f"dense quantization is limited to {DENSE_LIMITS[grid.dim]} points per axis")
    table = np.asarray(table)
    if table.shape != grid.shape * 2:
        raise ValueError("symbol table must have shape grid.shape + grid.shape")
    coeff = (np.fft.fftn(f.values) * grid.cell_volume).ravel()
    pts = np.stack([p.ravel() for p in grid.points()], axis=1)
    ks = np.stack([k.ravel() for k in grid.frequencies()], axis=1)
    tab = table.reshape(grid.size, grid.size)
    out = np.empty(grid.size, dtype=complex)
    chunk = 256
    for start in range(0, grid.size, chunk):
        stop = min(start + chunk, grid.size)
        phase = np.exp(1j * pts[start:stop] @ ks.T)
        out[start:stop] = np.sum(phase * tab[start:stop] * coeff[None, :], axis=1)
    out /= (2 * np.pi) ** grid.dim
    return SampledField(grid, out.reshape(grid.shape))


# --------------------------------------------------------------- probes


def nested_draws(grid: Grid, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Uniform amplitudes and phases assigned in a grid-independent frequency order.

    Lattice points are visited ring by ring (``max |k_i|``), so a refined grid
    gives every coarse-grid frequency the same draw and a refinement study
    compares the same probe functions.
    """
    ks = np.stack([k.ravel() for k in grid.frequencies()], axis=1).astype(int)
    ring = np.max(np.abs(ks), axis=1)
    order = np.lexsort(tuple(ks[:, i] for i in reversed(range(grid.dim))) + (ring,))
    draws = rng.uniform(0.0, 1.0, (grid.size, 2))
    amp = np.empty(grid.size)
    phase = np.empty(grid.size)
    amp[order] = draws[:, 0]
    phase[order] = 2 * np.pi * draws[:, 1]
    return amp.reshape(grid.shape), phase.reshape(grid.shape)


def sobolev_probe(grid: Grid, order: float, rng: np.random.Generator,
                  shell: int | None = None, P: DyadicPartition | None = None) -> SampledField:
    """Real random field with ``sobolev_norm(f, order) = 1``.

    The spectrum is ``<xi>^-order * u(xi)`` with uniform amplitudes and
    phases; ``shell`` concentrates ``u`` on one dyadic shell, ``None`` keeps
    it white.
    """
    amp, phase = nested_draws(grid, rng)
    if shell is not None:
        P = P or build_partition(grid)
        amp = amp * P.shells[shell]
    spec = bessel_weight(grid, -order) * amp * np.exp(1j * phase)
    vals = np.fft.ifftn(spec).real
    f = SampledField(grid, vals)
    norm = sobolev_norm(f, order)
    if norm == 0:
        return sobolev_probe(grid, order, rng, None, P)
    return f * (1.0 / norm)


def probe_schedule(P: DyadicPartition, trials: int) -> list[int | None]:
    """Shell targets cycled per trial: every shell once, then a white probe."""
    cycle = list(range(P.J + 1)) + [None]
    return [cycle[t % len(cycle)] for t in range(trials)]


@dataclass
class ProbeResult:
    max_ratio: float
    ratios: list[float]

    def quantiles(self) -> dict[str, float]:
        r = np.asarray(self.ratios)
        return {q: float(np.quantile(r, float(q))) for q in ("0.1", "0.5", "0.9")}

    def __iter__(self):
        yield self.max_ratio
        yield self.ratios


def mapping_norm_probe(p, m: float, s: float, trials: int = 20, seed: int = 0,
                       P: DyadicPartition | None = None) -> ProbeResult:
    """Empirical ``H^{s+m} -> H^s`` norm of ``p(x, D)`` over seeded probes."""
    if trials < 10:
        raise ValueError("need at least 10 trials")
    grid = p.grid
    P = P or build_partition(grid)
    rng = np.random.default_rng(seed)
    ratios = []
    for shell in probe_schedule(P, trials):
        f = sobolev_probe(grid, s + m, rng, shell, P)
        ratios.append(sobolev_norm(quantize(p, f), s))
    return ProbeResult(float(max(ratios)), ratios)


@dataclass
class FlatBoundReport:
    r: float
    s: float
    q_norm: float
    norm_kind: str
    ratios: list[float] = field(default_factory=list)

    @property
    def constant(self) -> float:
        return max(self.ratios, default=0.0)

    def to_dict(self) -> dict:
        return {"r": self.r, "s": self.s, "q_norm": self.q_norm, "norm_kind": self.norm_kind,
                "constant": self.constant, "ratios": self.ratios}


def flat_endpoint_check(q: SampledField, r: float, s: float, trials: int = 12, seed: int = 0,
                        norm_kind: str = "hrinf", norm_order: float | None = None,
                        P: DyadicPartition | None = None) -> FlatBoundReport:
    """Empirical ``C`` in ``|q_flat(x,D) f|_{H^s} <= C |q|_X |f|_{H^{s-r}}``.

    ``X`` is ``H^{r,inf}`` by default; ``norm_kind='zygmund'`` with a
    ``norm_order`` normalizes by a Zygmund norm instead, which keeps a
    rougher control field's normalization finite.
    """
    if not 0.0 <= s <= r:
        raise ValueError("s must lie in [0, r]")
    grid = q.grid
    P = P or build_partition(grid)
    order = r if norm_order is None else norm_order
    if norm_kind == "hrinf":
        q_norm = hr_infty_norm(q, order, P)
    elif norm_kind == "zygmund":
        q_norm = zygmund_norm(q, order, P)
    else:
        raise ValueError("norm_kind must be 'hrinf' or 'zygmund'")
    sym = CoefficientSymbol(grid, {(0,) * grid.dim: q})
    _, flat = decompose(sym, 1.0, P)
    rng = np.random.default_rng(seed)
    report = FlatBoundReport(r, s, q_norm, norm_kind)
    for shell in probe_schedule(P, trials):
        f = sobolev_probe(grid, s - r, rng, shell, P)
        out = sobolev_norm(quantize(flat, f), s)
        report.ratios.append(0.0 if q_norm == 0 else float(out / q_norm))
    return report
