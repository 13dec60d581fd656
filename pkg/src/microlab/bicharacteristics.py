"""Hamilton flows of symbols: adaptive integration, null projection, Peano
funnels and projected null rays of the 1+1D wave symbol."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import SampledField, TrigInterpolant
from .symbols import FunctionSymbol, hamilton_field

# Dormand-Prince 5(4) tableau
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


@dataclass(frozen=True)
class PhasePoint:
    x: tuple
    xi: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        xi = tuple(float(v) for v in np.atleast_1d(self.xi))
        if len(x) != len(xi):
            raise ValueError("position and covector dimensions differ")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    def state(self) -> np.ndarray:
        return np.array(self.x + self.xi)


@dataclass
class StepConfig:
    abs_tol: float = 1e-8
    initial_step: float = 1e-3
    min_step: float = 1e-6
    max_step: float = 1e-1
    max_steps: int = 200_000


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_samples, 2 * dim)
    symbol_values: np.ndarray
    accepted_steps: list = field(default_factory=list)
    rejected_steps: list = field(default_factory=list)
    status: str = "ok"

    @property
    def dim(self) -> int:
        return self.states.shape[1] // 2

    @property
    def x(self) -> np.ndarray:
        return self.states[:, : self.dim]

    @property
    def xi(self) -> np.ndarray:
        return self.states[:, self.dim:]

    def end(self) -> PhasePoint:
        return PhasePoint(self.x[-1], self.xi[-1])

    def drift(self) -> float:
        return float(np.max(np.abs(self.symbol_values - self.symbol_values[0])))

    def to_csv(self, path) -> None:
        d = self.dim
        cols = ["t"] + [f"x{i}" for i in range(d)] + [f"xi{i}" for i in range(d)] + ["p_hat_value"]
        with open(path, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for t, s, v in zip(self.times, self.states, self.symbol_values):
                fh.write(",".join(f"{u:.17g}" for u in (t, *s, v)) + "\n")


def _dopri(rhs, y0: np.ndarray, t0: float, t1: float, cfg: StepConfig, t_eval=None,
           guard=None):
    """Adaptive Dormand-Prince 5(4) from ``t0`` to ``t1`` (either direction).

    ``guard(y)`` may return a status string to stop early. Steps are clipped to
    land on every requested output time in ``t_eval``.
    """
    direction = 1.0 if t1 >= t0 else -1.0
    targets = sorted(set([t1] + list(t_eval or [])), key=lambda t: direction * t)
    targets = [t for t in targets if direction * (t - t0) > 0]
    times, states = [t0], [y0.copy()]
    accepted, rejected = [], []
    t, y = t0, y0.copy()
    h = cfg.initial_step
    k1 = rhs(y)
    status = "ok"
    steps = 0
    for target in targets:
        while direction * (target - t) > 1e-14 * max(1.0, abs(target)):
            steps += 1
            if steps > cfg.max_steps:
                return times, states, accepted, rejected, "max_steps"
            h_try = min(h, abs(target - t))
            ks = [k1]
            for i in range(1, 7):
                yi = y + direction * h_try * sum(a * k for a, k in zip(_A[i], ks))
                ks.append(rhs(yi))
            y5 = y + direction * h_try * sum(b * k for b, k in zip(_B5, ks))
            err = h_try * float(np.max(np.abs(sum((b5 - b4) * k for b5, b4, k in zip(_B5, _B4, ks)))))
            if not np.all(np.isfinite(y5)):
                err = np.inf
            if err <= cfg.abs_tol or h_try <= cfg.min_step:
                t = target if h_try == abs(target - t) else t + direction * h_try
                y = y5
                k1 = ks[6]
                accepted.append(h_try)
                times.append(t)
                states.append(y.copy())
                if guard is not None:
                    flag = guard(y)
                    if flag:
                        return times, states, accepted, rejected, flag
            else:
                rejected.append(h_try)
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * (cfg.abs_tol / err) ** 0.2))
            h = float(np.clip(h_try * factor, cfg.min_step, cfg.max_step))
    return times, states, accepted, rejected, status


def integrate(ph, start: PhasePoint, t_span, abs_tol: float = 1e-8,
              t_eval=None, config: StepConfig | None = None) -> Trajectory:
    """Integrate ``gamma' = H_p(gamma)`` from ``start`` over ``t_span``."""
    if not 1e-12 <= abs_tol <= 1e-4:
        raise ValueError("abs_tol must lie in [1e-12, 1e-4]")
    xi0 = np.asarray(start.xi)
    if not np.any(xi0) and getattr(ph, "degree", None) is not None:
        raise ValueError("start lies on the zero section")
    cfg = config or StepConfig()
    cfg = StepConfig(abs_tol, cfg.initial_step, cfg.min_step, cfg.max_step, cfg.max_steps)
    d = len(start.x)
    t0, t1 = (0.0, float(t_span)) if np.isscalar(t_span) else map(float, t_span)

    def rhs(y):
        return hamilton_field(ph, y[:d], y[d:])

    norm0 = float(np.linalg.norm(xi0))

    def guard(y):
        if getattr(ph, "degree", None) is None:
            return None  # the zero section is only special for homogeneous symbols
        n = float(np.linalg.norm(y[d:]))
        if n < 1e-6 * norm0:
            return "zero_section"
        if n > 1e6 * norm0:
            return "blowup"
        return None

    times, states, acc, rej, status = _dopri(rhs, start.state(), t0, t1, cfg, t_eval, guard)
    states = np.array(states)
    values = np.array([ph.value(s[:d], s[d:]) for s in states])
    return Trajectory(np.array(times), states, values, acc, rej, status)


def null_project(ph, point: PhasePoint, window: float = np.pi / 4, tol: float = 1e-10) -> PhasePoint:
    """Rotate the fiber to the nearest zero of ``p(x, .)`` on its cosphere, keeping ``|xi|``.

    Only 2D bases have an angular degree of freedom (e.g. ``(t, x)`` for the
    wave symbol).
    """
    x = np.asarray(point.x)
    xi = np.asarray(point.xi)
    if len(xi) != 2:
        raise ValueError("null projection needs a two-dimensional fiber")
    rho = float(np.linalg.norm(xi))
    if rho == 0:
        raise ValueError("zero section")
    th0 = float(np.arctan2(xi[1], xi[0]))

    def g(th):
        return ph.value(x, rho * np.array([np.cos(th), np.sin(th)]))

    scale = rho ** getattr(ph, "degree", 2.0) or 1.0
    if abs(g(th0)) <= tol * scale:
        return point
    # scan outward from the current angle for the closest bracketing sign change
    n_scan = 512
    offsets = np.linspace(0.0, window, n_scan + 1)
    best = None
    for side in (1.0, -1.0):
        prev_th, prev_v = th0, g(th0)
        for off in offsets[1:]:
            th = th0 + side * off
            v = g(th)
            if np.sign(v) != np.sign(prev_v) or v == 0:
                if best is None or off < best[0]:
                    best = (off, prev_th, th)
                break
            prev_th, prev_v = th, v
    if best is None:
        raise ValueError("no characteristic direction in the angular search window")
    lo, hi = sorted(best[1:])
    glo = g(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) <= 1e-14 * scale or hi - lo < 1e-16:
            break
        if np.sign(gm) == np.sign(glo):
            lo, glo = mid, gm
        else:
            hi = mid
    th = 0.5 * (lo + hi)
    return PhasePoint(x, rho * np.array([np.cos(th), np.sin(th)]))


# --------------------------------------------------------------- funnels


def mechanical_symbol(alpha: float, eta: float = 0.0) -> FunctionSymbol:
    """``xi^2/2 - |x|^(1+alpha)/(1+alpha)``; ``x'' = |x|^alpha sign(x)``.

    ``eta > 0`` mollifies the potential to ``(x^2+eta^2)^((1+alpha)/2)``,
    which is smooth; the mollification ladder uses ``eta = 2^-level``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    e = 1.0 + alpha

    def value(x, xi):
        if eta:
            pot = ((x[0] ** 2 + eta ** 2) ** (e / 2) - eta ** e) / e
        else:
            pot = abs(x[0]) ** e / e
        return 0.5 * xi[0] ** 2 - pot

    def gradient(x, xi):
        if eta:
            force = x[0] * (x[0] ** 2 + eta ** 2) ** ((e - 2) / 2)
        else:
            force = np.sign(x[0]) * abs(x[0]) ** alpha
        return np.array([-force]), np.array([xi[0]])

    return FunctionSymbol(value, gradient, 1, None,
                          mollify=lambda level: mechanical_symbol(alpha, 2.0 ** (-level)),
                          name=f"mechanical(alpha={alpha}, eta={eta})")


def power_solution_constant(alpha: float) -> float:
    """``K`` in the maximal solution ``x = K t^(2/(1-alpha))`` of ``x'' = x^alpha``."""
    if not 0 < alpha < 1:
        raise ValueError("power solution exists for 0 < alpha < 1")
    p = 2.0 / (1.0 - alpha)
    return (p * (p - 1.0)) ** (-1.0 / (1.0 - alpha))


@dataclass
class Funnel:
    times: np.ndarray
    members: list
    width: np.ndarray
    envelope: np.ndarray  # max |x - x_start| over members
    jitter: float
    mollification_levels: tuple
    ladder_widths: dict
    failures: int = 0

    def growth_exponent(self, t_min: float = 0.5) -> float:
        """Slope of ``log width`` against ``log t`` over ``t >= t_min``."""
        mask = (self.times >= t_min) & (self.width > 0)
        if mask.sum() < 2:
            return float("nan")
        return float(np.polyfit(np.log(self.times[mask]), np.log(self.width[mask]), 1)[0])

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "width": self.width.tolist(),
                "envelope": self.envelope.tolist(), "jitter": self.jitter,
                "mollification_levels": list(self.mollification_levels),
                "ladder_width_at_end": {str(k): float(v[-1]) for k, v in self.ladder_widths.items()},
                "growth_exponent": self.growth_exponent(), "failures": self.failures}


def _ensemble_starts(start: PhasePoint, size: int, jitter: float, seed: int, jitter_in):
    rng = np.random.default_rng(seed)
    x0 = np.asarray(start.x)
    xi0 = np.asarray(start.xi)
    out = []
    for _ in range(size):
        dx = jitter * rng.uniform(-1.0, 1.0, x0.shape)
        dxi = jitter * rng.uniform(-1.0, 1.0, xi0.shape)
        out.append(PhasePoint(x0 + dx * ("x" in jitter_in), xi0 + dxi * ("xi" in jitter_in)))
    return out


def _run_ensemble(sym, starts, times, abs_tol):
    xs, failures = [], 0
    for s in starts:
        try:
            tr = integrate(sym, s, (times[0], times[-1]), abs_tol, t_eval=list(times))
        except ValueError:
            failures += 1
            continue
        if tr.status != "ok":
            failures += 1
        idx = np.searchsorted(tr.times, times)
        idx = np.clip(idx, 0, len(tr.times) - 1)
        xs.append(tr.x[idx])
    return xs, failures


def _width(xs):
    arr = np.array(xs)  # (members, times, dim)
    lo = arr.min(axis=0)
    hi = arr.max(axis=0)
    return np.linalg.norm(hi - lo, axis=-1)


def funnel(sym, start: PhasePoint, t_span=1.0, ensemble_size: int = 64, jitter: float = 1e-6,
           mollification_levels=(), n_times: int = 65, abs_tol: float = 1e-10,
           seed: int = 0, jitter_in=("x", "xi")) -> Funnel:
    """Ensemble of flows from jittered starts, plus flows of mollified symbols."""
    if ensemble_size < 16:
        raise ValueError("ensemble_size must be at least 16")
    if jitter <= 0:
        raise ValueError("jitter must be positive")
    t1 = float(t_span) if np.isscalar(t_span) else float(t_span[1])
    times = np.linspace(0.0, t1, n_times)
    starts = _ensemble_starts(start, ensemble_size, jitter, seed, jitter_in)
    xs, failures = _run_ensemble(sym, starts, times, abs_tol)
    width = _width(xs)
    x0 = np.asarray(start.x)
    envelope = np.max(np.linalg.norm(np.array(xs) - x0, axis=-1), axis=0)
    ladder = {}
    for level in mollification_levels:
        lx, lf = _run_ensemble(sym.mollified(level), starts, times, abs_tol)
        failures += lf
        ladder[level] = _width(lx)
    return Funnel(times, xs, width, envelope, jitter, tuple(mollification_levels), ladder, failures)


# --------------------------------------------------------------- wave rays


def ray_trace_wave(a: SampledField, x0: float, sign: int, t_span=1.0, abs_tol: float = 1e-10,
                   t_eval=None) -> list[tuple[float, float]]:
    """Projected null ray ``dx/dt = sign * sqrt(a(x))`` with interpolated ``a``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if np.min(a.values) <= 0:
        raise ValueError("coefficient must be positive (hyperbolicity)")
    interp = TrigInterpolant(a)
    t0, t1 = (0.0, float(t_span)) if np.isscalar(t_span) else map(float, t_span)

    def rhs(y):
        val = float(np.real(interp(y[:1])))
        if val <= 0:
            raise ValueError("interpolated coefficient lost positivity")
        return np.array([sign * np.sqrt(val)])

    cfg = StepConfig(abs_tol=abs_tol)
    times, states, *_ = _dopri(rhs, np.array([float(x0)]), t0, t1, cfg, t_eval)
    return [(float(t), float(s[0])) for t, s in zip(times, states)]


def wave_null_start(a: SampledField, x0: float, sign: int) -> PhasePoint:
    """Null covector ``(tau, xi)`` at ``(t=0, x0)`` whose ray moves with ``sign``.

    ``tau`` is conserved, so with ``tau = 1/2`` the parameter reaches ``t = 1``
    at ``s = 1`` (``dt/ds = 2 tau``).
    """
    val = float(np.real(TrigInterpolant(a)(np.array([x0]))))
    tau = 0.5
    # dx/ds = -2 a xi must have the sign of the ray
    xi = -sign * tau / np.sqrt(val)
    return PhasePoint((0.0, x0), (tau, xi))


__all__ = [
    "PhasePoint", "Trajectory", "StepConfig", "integrate", "null_project", "mechanical_symbol",
    "power_solution_constant", "Funnel", "funnel", "ray_trace_wave", "wave_null_start",
]
