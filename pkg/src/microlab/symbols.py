"""Rough symbols: coefficient form, principal (homogeneous) parts, class
seminorms, characteristic sets and Hamilton fields."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .function_spaces import hr_infty_norm, zygmund_norm
from .grid import Grid, SampledField, TrigInterpolant, load_field, save_field
from .littlewood_paley import DyadicPartition, build_partition

MultiIndex = tuple[int, ...]


def _monomial(xi: Sequence[np.ndarray] | np.ndarray, alpha: MultiIndex):
    out = 1.0
    for k, a in zip(xi, alpha):
        if a:
            out = out * np.asarray(k, dtype=float) ** a
    return out


def _monomial_derivative(alpha: MultiIndex, beta: MultiIndex) -> tuple[float, MultiIndex] | None:
    """``d^beta xi^alpha = c * xi^(alpha-beta)``; ``None`` when it vanishes."""
    c = 1.0
    for a, b in zip(alpha, beta):
        if b > a:
            return None
        for i in range(b):
            c *= a - i
    return c, tuple(a - b for a, b in zip(alpha, beta))


def multi_indices(dim: int, max_order: int) -> list[MultiIndex]:
    out = []
    for total in range(max_order + 1):
        if dim == 1:
            out.append((total,))
        else:
            out.extend((i, total - i) for i in range(total, -1, -1))
    return out


# --------------------------------------------------------------- coefficients


@dataclass(frozen=True, eq=False)
class CoefficientSymbol:
    """``p(x, xi) = sum_alpha a_alpha(x) xi^alpha`` on a common grid."""

    grid: Grid
    terms: Mapping[MultiIndex, SampledField]
    complex_terms: frozenset = frozenset()
    principally_real: bool = True

    def __post_init__(self):
        terms = {}
        for alpha, a in self.terms.items():
            alpha = tuple(int(v) for v in alpha)
            if len(alpha) != self.grid.dim or min(alpha) < 0:
                raise ValueError(f"bad multi-index {alpha}")
            if a.grid != self.grid:
                raise ValueError("all coefficients must share the symbol grid")
            terms[alpha] = a
        if not terms:
            raise ValueError("symbol needs at least one term")
        object.__setattr__(self, "terms", dict(sorted(terms.items())))
        object.__setattr__(self, "complex_terms", frozenset(tuple(a) for a in self.complex_terms))
        if self.principally_real:
            for alpha, a in terms.items():
                if sum(alpha) == self.order and not a.real:
                    raise ValueError("leading coefficients of a principally real symbol must be real")

    @property
    def order(self) -> int:
        return max(sum(a) for a in self.terms)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def leading_terms(self) -> dict[MultiIndex, SampledField]:
        return {a: c for a, c in self.terms.items() if sum(a) == self.order}

    def is_x_independent(self) -> bool:
        return all(np.ptp(c.values.real) == 0 and np.ptp(np.asarray(c.values).imag) == 0
                   for c in self.terms.values())

    def evaluate(self, xi: Sequence[float]) -> SampledField:
        """The x-field ``p(., xi)`` for one frequency vector."""
        vals = sum(c.values * _monomial(xi, a) for a, c in self.terms.items())
        return SampledField(self.grid, vals)

    def xi_derivative(self, beta: MultiIndex) -> CoefficientSymbol | None:
        terms: dict[MultiIndex, SampledField] = {}
        for alpha, c in self.terms.items():
            d = _monomial_derivative(alpha, beta)
            if d is None:
                continue
            coef, rest = d
            terms[rest] = terms[rest] + c * coef if rest in terms else c * coef
        if not terms:
            return None
        return CoefficientSymbol(self.grid, terms, principally_real=False)

    def table(self) -> np.ndarray:
        """``p(x, xi)`` on grid x lattice, shape ``grid.shape + grid.shape``.

        Frequencies are in FFT order, the layout expected by the dense
        quantizer.
        """
        freqs = self.grid.frequencies()
        pad = (None,) * self.dim
        out = 0.0
        for alpha, c in self.terms.items():
            mono = _monomial(freqs, alpha)
            out = out + c.values[(...,) + pad] * np.broadcast_to(mono, self.grid.shape)[pad + (...,)]
        return np.broadcast_to(out, self.grid.shape * 2)

    def map_coefficients(self, fn: Callable[[SampledField], SampledField]) -> CoefficientSymbol:
        return CoefficientSymbol(self.grid, {a: fn(c) for a, c in self.terms.items()},
                                 self.complex_terms, self.principally_real)

    # ------------------------------------------------------------ manifest

    def save(self, path: str | Path) -> None:
        """Write a JSON manifest plus one field file per coefficient."""
        path = Path(path)
        stem = path.with_suffix("")
        entries = []
        for alpha, c in self.terms.items():
            tag = "_".join(str(v) for v in alpha)
            fpath = stem.parent / f"{stem.name}.a{tag}.field"
            save_field(fpath, c)
            entries.append({"alpha": list(alpha), "field": fpath.name,
                            "complex": alpha in self.complex_terms})
        manifest = {"m": self.order, "dim": self.dim,
                    "principally_real": self.principally_real, "terms": entries}
        path.write_text(json.dumps(manifest, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> CoefficientSymbol:
        path = Path(path)
        manifest = json.loads(path.read_text())
        terms = {}
        complex_terms = set()
        grid = None
        for entry in manifest["terms"]:
            fpath = Path(entry["field"])
            if not fpath.is_absolute():
                fpath = path.parent / fpath
            f = load_field(fpath)
            grid = grid or f.grid
            alpha = tuple(entry["alpha"])
            terms[alpha] = f
            if entry.get("complex", False):
                complex_terms.add(alpha)
        sym = cls(grid, terms, frozenset(complex_terms), bool(manifest.get("principally_real", True)))
        if "m" in manifest and int(manifest["m"]) != sym.order:
            raise ValueError("manifest order disagrees with its terms")
        return sym


def constant_field(grid: Grid, value: float) -> SampledField:
    return SampledField(grid, np.full(grid.shape, float(value)))


# --------------------------------------------------------------- homogeneous


def cosphere(base_dim: int, n_angles: int = 512) -> np.ndarray:
    """Unit covectors sampled uniformly: ``{+1, -1}`` in 1D, a circle in 2D."""
    if base_dim == 1:
        return np.array([[1.0], [-1.0]])
    if base_dim != 2:
        raise ValueError("cosphere sampling supports base dimension 1 or 2")
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    return np.stack([np.cos(theta), np.sin(theta)], axis=1)


class HomogeneousSymbol:
    """Degree-``m`` positively homogeneous symbol ``p(x, xi)``.

    Coefficient-backed symbols evaluate analytically through trigonometric
    interpolation of their coefficients; every symbol also carries a lazily
    built table on ``table_grid x cosphere`` that drives the tabulated path.
    """

    def __init__(self, degree: float, base_dim: int, table_grid: Grid,
                 terms: Sequence[tuple[MultiIndex, TrigInterpolant]] | None = None,
                 table: np.ndarray | None = None, n_angles: int = 512,
                 provenance: str = "leading_part_of"):
        self.degree = float(degree)
        self.base_dim = int(base_dim)
        self.table_grid = table_grid
        self.terms = list(terms) if terms is not None else None
        self.n_angles = n_angles if base_dim == 2 else 2
        self.omegas = cosphere(base_dim, n_angles)
        self.provenance = provenance
        if table_grid.dim != base_dim:
            raise ValueError("table grid must span the base space")
        if self.terms is None and table is None:
            raise ValueError("need coefficient terms or a table")
        self._table = None
        if table is not None:
            table = np.asarray(table, dtype=float)
            if table.shape != table_grid.shape + (len(self.omegas),):
                raise ValueError("table shape must be grid.shape + (n_cosphere,)")
            self._table = table

    @classmethod
    def from_table(cls, grid: Grid, degree: float, values: np.ndarray,
                   n_angles: int | None = None) -> "HomogeneousSymbol":
        n = values.shape[-1] if n_angles is None else n_angles
        return cls(degree, grid.dim, grid, table=values, n_angles=n, provenance="user_supplied")

    @property
    def has_analytic(self) -> bool:
        return self.terms is not None

    # ------------------------------------------------------------ analytic

    def _analytic_value(self, x, xi):
        return sum(float(np.real(c(x))) * _monomial(xi, a) for a, c in self.terms)

    def _analytic_gradient(self, x, xi):
        gx = np.zeros(self.base_dim)
        gxi = np.zeros(self.base_dim)
        for alpha, c in self.terms:
            mono = _monomial(xi, alpha)
            cval = float(np.real(c(x)))
            gx += np.real(c.gradient(x)) * mono
            for i in range(self.base_dim):
                d = _monomial_derivative(alpha, tuple(int(j == i) for j in range(self.base_dim)))
                if d is not None:
                    gxi[i] += cval * d[0] * _monomial(xi, d[1])
        return gx, gxi

    # ------------------------------------------------------------ tabulated

    def table(self) -> np.ndarray:
        if self._table is None:
            pts = np.stack([p.ravel() for p in self.table_grid.points()], axis=1)
            vals = np.zeros((len(pts), len(self.omegas)))
            for alpha, c in self.terms:
                cv = np.real(c(pts))
                vals += cv[:, None] * _monomial(self.omegas.T, alpha)[None, :]
            self._table = vals.reshape(self.table_grid.shape + (len(self.omegas),))
        return self._table

    def _direction_weights(self, xi):
        """Indices and weights interpolating the cosphere at ``xi/|xi|``."""
        if self.base_dim == 1:
            return [(0 if xi[0] > 0 else 1, 1.0)]
        theta = np.mod(np.arctan2(xi[1], xi[0]), 2 * np.pi) * self.n_angles / (2 * np.pi)
        i0 = int(np.floor(theta)) % self.n_angles
        w = theta - np.floor(theta)
        return [(i0, 1.0 - w), ((i0 + 1) % self.n_angles, w)]

    def _angular_profile(self, x, angle_index):
        """Multilinear interpolation of one cosphere column at base point ``x``."""
        tab = self.table()
        g = self.table_grid
        idx = []
        for axis in range(self.base_dim):
            u = np.mod(x[axis], 2 * np.pi) / g.spacing[axis]
            i0 = int(np.floor(u)) % g.shape[axis]
            idx.append((i0, (i0 + 1) % g.shape[axis], u - np.floor(u)))
        if self.base_dim == 1:
            i0, i1, w = idx[0]
            return (1 - w) * tab[i0, angle_index] + w * tab[i1, angle_index]
        (a0, a1, wa), (b0, b1, wb) = idx
        return ((1 - wa) * (1 - wb) * tab[a0, b0, angle_index] + wa * (1 - wb) * tab[a1, b0, angle_index]
                + (1 - wa) * wb * tab[a0, b1, angle_index] + wa * wb * tab[a1, b1, angle_index])

    def _unit_value(self, x, xi) -> float:
        return sum(w * self._angular_profile(x, i) for i, w in self._direction_weights(xi))

    def _tabulated_value(self, x, xi):
        rho = float(np.linalg.norm(xi))
        return rho ** self.degree * self._unit_value(x, xi)

    def _tabulated_gradient(self, x, xi, h):
        rho = float(np.linalg.norm(xi))
        gx = np.zeros(self.base_dim)
        for axis in range(self.base_dim):
            e = np.zeros(self.base_dim)
            e[axis] = h
            gx[axis] = (self._tabulated_value(x + e, xi) - self._tabulated_value(x - e, xi)) / (2 * h)
        unit = self._unit_value(x, xi)
        omega = np.asarray(xi, float) / rho
        gxi = self.degree * rho ** (self.degree - 1) * unit * omega
        if self.base_dim == 2:
            # angular derivative by a central difference of one cosphere cell
            dth = 2 * np.pi / self.n_angles
            th = np.arctan2(xi[1], xi[0])
            plus = self._unit_value(x, (np.cos(th + dth), np.sin(th + dth)))
            minus = self._unit_value(x, (np.cos(th - dth), np.sin(th - dth)))
            perp = np.array([-omega[1], omega[0]])
            gxi = gxi + rho ** (self.degree - 1) * (plus - minus) / (2 * dth) * perp
        return gx, gxi

    # ------------------------------------------------------------ public

    def _default_method(self, method):
        if method is None:
            return "analytic" if self.has_analytic else "tabulated"
        if method == "analytic" and not self.has_analytic:
            raise ValueError("symbol has no analytic representation")
        return method

    def value(self, x, xi, method: str | None = None) -> float:
        x = np.asarray(x, float)
        xi = np.asarray(xi, float)
        if self._default_method(method) == "analytic":
            return float(self._analytic_value(x, xi))
        return float(self._tabulated_value(x, xi))

    def gradient(self, x, xi, method: str | None = None, h: float | None = None):
        """``(d_x p, d_xi p)`` at one phase-space point."""
        x = np.asarray(x, float)
        xi = np.asarray(xi, float)
        if self._default_method(method) == "analytic":
            return self._analytic_gradient(x, xi)
        if h is None:
            h = min(self.table_grid.spacing)
        return self._tabulated_gradient(x, xi, h)


class FunctionSymbol:
    """General C^1 symbol given by callables, for non-homogeneous Hamiltonians."""

    def __init__(self, value: Callable, gradient: Callable, base_dim: int = 1,
                 degree: float | None = None, mollify: Callable[[int], "FunctionSymbol"] | None = None,
                 name: str = "function"):
        self._value = value
        self._gradient = gradient
        self.base_dim = base_dim
        self.degree = degree
        self._mollify = mollify
        self.name = name

    def value(self, x, xi, method=None) -> float:
        return float(self._value(np.asarray(x, float), np.asarray(xi, float)))

    def gradient(self, x, xi, method=None, h=None):
        gx, gxi = self._gradient(np.asarray(x, float), np.asarray(xi, float))
        return np.atleast_1d(np.asarray(gx, float)), np.atleast_1d(np.asarray(gxi, float))

    def mollified(self, level: int) -> "FunctionSymbol":
        if self._mollify is None:
            raise ValueError("symbol has no mollification ladder")
        return self._mollify(level)


def principal_symbol(p: CoefficientSymbol, n_angles: int = 512) -> HomogeneousSymbol:
    lead = p.leading_terms()
    if all(np.max(np.abs(c.values)) == 0 for c in lead.values()):
        raise ValueError("all leading coefficients vanish: degenerate order")
    terms = [(alpha, TrigInterpolant(c)) for alpha, c in lead.items()]
    return HomogeneousSymbol(p.order, p.dim, p.grid, terms=terms, n_angles=n_angles)


def wave_symbol(a: SampledField, n_time: int = 16, n_angles: int = 512) -> HomogeneousSymbol:
    """``tau^2 - a(x) xi^2`` on the ``(t, x)`` base, ``a`` time-independent."""
    if a.grid.dim != 1:
        raise ValueError("wave symbol expects a 1D coefficient")
    ones = SampledField(Grid((16,)), np.ones(16))
    terms = [((2, 0), TrigInterpolant(ones, base_dim=2, axes=(0,))),
             ((0, 2), TrigInterpolant(-a, base_dim=2, axes=(1,)))]
    return HomogeneousSymbol(2, 2, Grid((n_time, a.grid.shape[0])), terms=terms, n_angles=n_angles)


def characteristic_points(ph: HomogeneousSymbol, tol: float) -> list[tuple[tuple[float, ...], tuple[float, ...]]]:
    if tol <= 0:
        raise ValueError("tol must be positive")
    tab = ph.table()
    scale = float(np.max(np.abs(tab)))
    hits = np.argwhere(np.abs(tab) <= tol * scale)
    pts = ph.table_grid.points()
    out = []
    for idx in hits:
        xi = tuple(idx[:-1])
        out.append((tuple(float(p[xi]) for p in pts), tuple(float(v) for v in ph.omegas[idx[-1]])))
    return out


def hamilton_field(ph, x, xi, h: float | None = None, method: str | None = None) -> np.ndarray:
    """``(d_xi p, -d_x p)`` stacked as (position rates, fiber rates)."""
    xi = np.atleast_1d(np.asarray(xi, float))
    if not np.any(xi) and getattr(ph, "degree", None) is not None:
        raise ValueError("Hamilton field is undefined on the zero section")
    gx, gxi = ph.gradient(np.atleast_1d(np.asarray(x, float)), xi, method=method, h=h)
    return np.concatenate([gxi, -gx])


# --------------------------------------------------------------- seminorms


@dataclass(frozen=True)
class SymbolClass:
    m: float
    delta: float
    r: float
    space: str = "zygmund"

    def __post_init__(self):
        if self.space not in ("zygmund", "hrinf"):
            raise ValueError("space must be 'zygmund' or 'hrinf'")


@dataclass
class SymbolClassReport:
    claimed: SymbolClass
    rows: list[dict] = field(default_factory=list)

    @property
    def verdict(self) -> float:
        return max((r["value"] for r in self.rows), default=0.0)

    def to_dict(self) -> dict:
        return {"class": {"m": self.claimed.m, "delta": self.claimed.delta, "r": self.claimed.r,
                          "space": self.claimed.space},
                "verdict": self.verdict, "rows": self.rows}


def frequency_samples(grid: Grid) -> list[np.ndarray]:
    """``0`` and ``+-2^k e_i`` up to the lattice radius, one bucket per shell."""
    out = [np.zeros(grid.dim)]
    for axis in range(grid.dim):
        k = 0
        while 2.0 ** k <= grid.max_radius():
            for sign in (1.0, -1.0):
                v = np.zeros(grid.dim)
                v[axis] = sign * 2.0 ** k
                out.append(v)
            k += 1
    return out


def _x_norm(f: SampledField, cls: SymbolClass, P: DyadicPartition) -> float:
    if cls.space == "zygmund":
        return zygmund_norm(f, cls.r, P)
    return hr_infty_norm(f, cls.r, P)


def finite_difference(g: Callable[[np.ndarray], object], xi: np.ndarray, beta: MultiIndex, step: float):
    """Centered ``d^beta g`` by tensor binomial stencils."""
    if sum(beta) == 0:
        return g(xi)
    total = 0.0
    offsets = [[(b / 2 - i, (-1) ** i * comb(b, i)) for i in range(b + 1)] for b in beta]
    grids = np.meshgrid(*[range(len(o)) for o in offsets], indexing="ij")
    for combo in zip(*[gr.ravel() for gr in grids]):
        shift = np.array([offsets[a][c][0] for a, c in enumerate(combo)]) * step
        weight = np.prod([offsets[a][c][1] for a, c in enumerate(combo)])
        total = total + weight * g(xi + shift)
    return total / step ** sum(beta)


def symbol_seminorm(p, cls: SymbolClass, alpha_max: int = 2,
                    P: DyadicPartition | None = None, fd_step: float = 1e-2) -> SymbolClassReport:
    """Weighted symbol seminorms of ``p`` over ``|alpha| <= alpha_max``.

    ``p`` is a :class:`CoefficientSymbol` (analytic monomial derivatives) or
    anything exposing ``field_at(xi)`` (split symbols; fiber derivatives by
    finite differences with relative step ``fd_step``).
    """
    if alpha_max > 4:
        raise ValueError("alpha_max must be <= 4")
    grid = p.grid
    P = P or build_partition(grid)
    report = SymbolClassReport(cls)
    for alpha in multi_indices(grid.dim, alpha_max):
        order = sum(alpha)
        if isinstance(p, CoefficientSymbol):
            dp = p.xi_derivative(alpha)
            field_at = (lambda xi: dp.evaluate(xi)) if dp is not None else None
        else:
            def field_at(xi, alpha=alpha):
                step = fd_step * max(1.0, float(np.linalg.norm(xi)))
                vals = finite_difference(lambda z: p.field_at(z).values, xi, alpha, step)
                return SampledField(grid, vals)
        for xi in frequency_samples(grid):
            bracket = float(np.sqrt(1.0 + np.dot(xi, xi)))
            f = field_at(xi) if field_at is not None else SampledField.zeros(grid)
            pointwise = bracket ** (-cls.m + order) * f.sup()
            xnorm = bracket ** (-cls.m + order - cls.r * cls.delta) * _x_norm(f, cls, P)
            key = {"alpha": list(alpha), "xi": [float(v) for v in xi]}
            report.rows.append({**key, "item": "pointwise", "value": float(pointwise)})
            report.rows.append({**key, "item": "x_norm", "value": float(xnorm)})
    return report
