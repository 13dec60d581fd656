"""Periodic grids, sampled fields and Fourier multipliers on the torus.

The torus is ``[0, 2*pi)^dim`` with the integer frequency lattice.  The
forward transform carries the quadrature weight, so that

    coefficient(xi) = spacing**dim * sum_x exp(-i x.xi) f(x)

approximates the continuum integral ``int exp(-i x.xi) f(x) dx`` and the
inverse carries the ``(2*pi)**-dim`` factor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

TWO_PI = 2.0 * np.pi
REAL_TOL = 1e-13


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, 2*pi)^dim``.

    ``shape`` holds the number of points per axis; every entry must be a
    power of two and at least 16.
    """

    shape: tuple[int, ...]

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        object.__setattr__(self, "shape", shape)
        if len(shape) not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {len(shape)}")
        for n in shape:
            if n < 16 or not _is_pow2(n):
                raise ValueError(f"n_points must be a power of two >= 16, got {n}")

    @classmethod
    def regular(cls, n: int, dim: int = 1) -> "Grid":
        return cls((n,) * dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def n_points(self) -> int:
        return self.shape[0]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(TWO_PI / n for n in self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [np.arange(n) * (TWO_PI / n) for n in self.shape]

    def points(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape ``self.shape`` (``indexing='ij'``)."""
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def frequency_axes(self) -> list[np.ndarray]:
        # integer lattice in [-n/2, n/2), FFT ordering
        return [np.fft.fftfreq(n, 1.0 / n) for n in self.shape]

    def frequencies(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.frequency_axes(), indexing="ij"))

    def radius(self) -> np.ndarray:
        """Euclidean length ``|xi|`` of every lattice frequency."""
        return np.sqrt(sum(k.astype(float) ** 2 for k in self.frequencies()))

    def max_radius(self) -> float:
        return float(np.sqrt(sum((n / 2) ** 2 for n in self.shape)))

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(tuple(n * factor for n in self.shape))


ArrayLike = Union[np.ndarray, Sequence[float], float]


@dataclass(frozen=True, eq=False)
class SampledField:
    """Values of a function at the nodes of a :class:`Grid`.

    Real-valued fields store a float array.  Arrays are made read-only so a
    field can be shared between threads.
    """

    grid: Grid
    values: np.ndarray
    real: bool = field(default=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != self.grid.shape:
            vals = vals.reshape(self.grid.shape)
        if np.iscomplexobj(vals):
            if self.real:
                scale = float(np.max(np.abs(vals))) if vals.size else 0.0
                if float(np.max(np.abs(vals.imag))) > REAL_TOL * max(scale, 1e-300):
                    raise ValueError("field flagged real-valued has non-negligible imaginary part")
                vals = vals.real.astype(float)
            else:
                vals = vals.astype(complex)
        else:
            vals = vals.astype(float)
            object.__setattr__(self, "real", True)
        vals = np.array(vals, copy=True)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[..., np.ndarray]) -> "SampledField":
        return cls(grid, np.asarray(func(*grid.points())))

    @classmethod
    def zeros(cls, grid: Grid) -> "SampledField":
        return cls(grid, np.zeros(grid.shape))

    def _coerce(self, other):
        if isinstance(other, SampledField):
            if other.grid != self.grid:
                raise ValueError("grid mismatch")
            return other.values
        return other

    def __add__(self, other):
        return SampledField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SampledField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return SampledField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return SampledField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return SampledField(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return SampledField(self.grid, -self.values)

    def conj(self) -> "SampledField":
        return SampledField(self.grid, np.conj(self.values))

    def real_part(self) -> "SampledField":
        return SampledField(self.grid, np.real(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2(self) -> float:
        """Quadrature L2 norm ``(sum |f|^2 * cell_volume)^(1/2)``."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))

    def refined(self, factor: int = 2) -> "SampledField":
        """Trigonometric (zero-padded spectral) resampling onto a finer grid."""
        fine = self.grid.refined(factor)
        coeff = np.fft.fftn(self.values)
        padded = np.zeros(fine.shape, dtype=complex)
        for idx in np.ndindex(*[2] * self.grid.dim):
            src = []
            dst = []
            for axis, side in enumerate(idx):
                n, nf = self.grid.shape[axis], fine.shape[axis]
                if side == 0:
                    src.append(slice(0, n // 2))
                    dst.append(slice(0, n // 2))
                else:
                    src.append(slice(n // 2, n))
                    dst.append(slice(nf - n // 2, nf))
            padded[tuple(dst)] = coeff[tuple(src)]
        # split the Nyquist mode symmetrically so real fields stay real
        for axis, n in enumerate(self.grid.shape):
            nf = fine.shape[axis]
            lo = [slice(None)] * self.grid.dim
            hi = [slice(None)] * self.grid.dim
            lo[axis] = nf - n // 2
            hi[axis] = n // 2
            half = padded[tuple(lo)] / 2
            padded[tuple(lo)] = half
            padded[tuple(hi)] = half
        vals = np.fft.ifftn(padded) * (fine.size / self.grid.size)
        return SampledField(fine, vals.real if self.real else vals, self.real)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients indexed by lattice frequency (FFT ordering)."""

    grid: Grid
    coefficients: np.ndarray

    def at(self, *xi: int) -> complex:
        idx = tuple(int(k) % n for k, n in zip(xi, self.grid.shape))
        return complex(self.coefficients[idx])


def forward_transform(f: SampledField) -> Spectrum:
    return Spectrum(f.grid, np.fft.fftn(f.values) * f.grid.cell_volume)


def inverse_transform(F: Spectrum, real: bool | None = None) -> SampledField:
    vals = np.fft.ifftn(F.coefficients) / F.grid.cell_volume
    if real is None:
        scale = float(np.max(np.abs(vals))) if vals.size else 0.0
        real = float(np.max(np.abs(vals.imag))) <= REAL_TOL * max(scale, 1e-300)
    return SampledField(F.grid, vals.real if real else vals)


def parseval_sum(F: Spectrum) -> float:
    """``(2*pi)^-dim * sum |coeff|^2`` (unit lattice weight)."""
    return float(np.sum(np.abs(F.coefficients) ** 2) / TWO_PI ** F.grid.dim)


Weight = Union[np.ndarray, Callable[..., np.ndarray]]


def _weight_array(w: Weight, grid: Grid) -> np.ndarray:
    if callable(w):
        arr = np.asarray(w(*grid.frequencies()))
        return np.broadcast_to(arr, grid.shape)
    arr = np.asarray(w)
    if arr.shape != grid.shape:
        arr = np.broadcast_to(arr, grid.shape)
    return arr


def fourier_multiplier(w: Weight, f: SampledField) -> SampledField:
    """Apply the multiplier ``w(D)``: the output spectrum is ``w(xi) * coeff(xi)``.

    ``w`` is either an array over the lattice (FFT ordering) or a callable
    receiving the frequency arrays.  A real input stays flagged real when
    the result has negligible imaginary part (Hermitian weights).
    """
    wa = _weight_array(w, f.grid)
    if not np.all(np.isfinite(wa)):
        raise ValueError("multiplier weight must be finite on the lattice")
    vals = np.fft.ifftn(wa * np.fft.fftn(f.values))
    if f.real:
        scale = float(np.max(np.abs(vals))) if vals.size else 0.0
        if float(np.max(np.abs(vals.imag))) <= REAL_TOL * max(scale, 1e-300):
            return SampledField(f.grid, vals.real)
    return SampledField(f.grid, vals)


def bessel_weight(grid: Grid, s: float) -> np.ndarray:
    """``<xi>^s = (1 + |xi|^2)^(s/2)`` on the lattice."""
    return (1.0 + grid.radius() ** 2) ** (s / 2.0)


def derivative_weight(grid: Grid, beta: Sequence[int]) -> np.ndarray:
    """``(i xi)^beta`` with the Nyquist mode dropped for odd orders.

    The Nyquist frequency ``-n/2`` has no partner ``+n/2`` on the lattice, so
    an odd power would break Hermitian symmetry.
    """
    beta = tuple(int(b) for b in beta)
    if len(beta) != grid.dim:
        raise ValueError("multi-index length must equal grid dimension")
    if sum(beta) > 8:
        raise ValueError("|beta| must be <= 8")
    w = np.ones(grid.shape, dtype=complex)
    for axis, (k, b) in enumerate(zip(grid.frequencies(), beta)):
        if b == 0:
            continue
        term = (1j * k) ** b
        if b % 2 == 1:
            term = np.where(k == -grid.shape[axis] // 2, 0.0, term)
        w = w * term
    return w


def spectral_derivative(f: SampledField, beta: Sequence[int] | int) -> SampledField:
    if np.isscalar(beta):
        beta = (int(beta),)
    return fourier_multiplier(derivative_weight(f.grid, beta), f)


class TrigInterpolant:
    """Evaluate the trigonometric interpolant of a field at arbitrary points.

    ``axes`` maps field axes onto coordinates of a larger base space, e.g. a
    1D coefficient ``a(x)`` viewed on the ``(t, x)`` plane uses
    ``base_dim=2, axes=(1,)``.  Negligible modes are pruned so lacunary or
    axis-constant fields evaluate cheaply.
    """

    def __init__(self, f: SampledField, base_dim: int | None = None,
                 axes: Sequence[int] | None = None, prune: float = 1e-16):
        self.field = f
        self.grid = f.grid
        self.base_dim = base_dim or f.grid.dim
        self.axes = tuple(axes) if axes is not None else tuple(range(f.grid.dim))
        self.real = f.real
        coeff = np.fft.fftn(f.values) / f.grid.size
        ks = [k.ravel() for k in f.grid.frequencies()]
        c = coeff.ravel()
        pieces_k = []
        pieces_c = []
        nyq_mask = np.zeros(c.shape, bool)
        for axis, n in enumerate(f.grid.shape):
            nyq_mask |= ks[axis] == -n // 2
        # split Nyquist modes into +-n/2 halves (per axis) to keep the interpolant real
        base_k = np.stack(ks, axis=1).astype(float)
        pieces_k.append(base_k[~nyq_mask])
        pieces_c.append(c[~nyq_mask])
        nk = base_k[nyq_mask]
        nc = c[nyq_mask]
        for axis, n in enumerate(f.grid.shape):
            on = nk[:, axis] == -n // 2
            flipped = nk.copy()
            flipped[on, axis] = n // 2
            # each Nyquist axis doubles the copies; weight halves accordingly
            nk = np.concatenate([nk, flipped[on]])
            nc = np.concatenate([np.where(on, nc / 2, nc), nc[on] / 2])
        pieces_k.append(nk)
        pieces_c.append(nc)
        k_all = np.concatenate(pieces_k)
        c_all = np.concatenate(pieces_c)
        cmax = np.max(np.abs(c_all)) if c_all.size else 0.0
        keep = np.abs(c_all) > prune * max(cmax, 1e-300)
        if not np.any(keep):
            keep[:1] = True
        self._k = k_all[keep]
        self._c = c_all[keep]

    @property
    def n_modes(self) -> int:
        return len(self._c)

    def _phase(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xs = x[:, list(self.axes)]
        return np.exp(1j * xs @ self._k.T)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        val = self._phase(x) @ self._c
        if self.real:
            val = val.real
        return val[0] if single else val

    def gradient(self, x):
        """Gradient with respect to the base coordinates, shape ``(base_dim,)``."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        ph = self._phase(x)
        grad = np.zeros((ph.shape[0], self.base_dim), dtype=complex)
        for j, axis in enumerate(self.axes):
            grad[:, axis] = ph @ (1j * self._k[:, j] * self._c)
        if self.real:
            grad = grad.real
        return grad[0] if single else grad


# ---------------------------------------------------------------- field files

_DTYPES = {"f64": "<f8", "c128": "<c16"}


def save_field(path: str | Path, f: SampledField) -> None:
    """JSON header line followed by a raw little-endian row-major payload."""
    dtype = "f64" if f.real else "c128"
    header = {"dim": f.grid.dim, "shape": list(f.grid.shape), "dtype": dtype,
              "layout": "row-major"}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(np.ascontiguousarray(f.values, dtype=_DTYPES[dtype]).tobytes())


def load_field(path: str | Path) -> SampledField:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        payload = fh.read()
    if header.get("layout", "row-major") != "row-major":
        raise ValueError("only row-major layout is supported")
    shape = tuple(header["shape"])
    if len(shape) != header["dim"]:
        raise ValueError("header dim does not match shape")
    vals = np.frombuffer(payload, dtype=_DTYPES[header["dtype"]]).reshape(shape)
    return SampledField(Grid(shape), vals.copy())


def export_csv(path: str | Path, f: SampledField) -> None:
    """Plain CSV for 1D fields: ``index,x,value`` or ``index,x,re,im``."""
    if f.grid.dim != 1:
        raise ValueError("CSV export is defined for 1D fields")
    x = f.grid.axes()[0]
    with open(path, "w") as fh:
        if f.real:
            fh.write("index,x,value\n")
            for i, (xi, v) in enumerate(zip(x, f.values)):
                fh.write(f"{i},{xi:.17g},{v:.17g}\n")
        else:
            fh.write("index,x,re,im\n")
            for i, (xi, v) in enumerate(zip(x, f.values)):
                fh.write(f"{i},{xi:.17g},{v.real:.17g},{v.imag:.17g}\n")
