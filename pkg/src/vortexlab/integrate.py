"""Trajectories of the profile ODE from the singular origin.

A trajectory starts from a truncated series at a small radius r0 and is
advanced by an adaptive embedded Runge-Kutta pair. Step points are recorded
together with h'' and h''' so that the profile can be interpolated by quintic
Hermite polynomials.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import DOP853

from .model import ModelParams, rhs_function

__all__ = [
    "SolverConfig",
    "StartState",
    "TerminalKind",
    "TerminalEvent",
    "RadialProfile",
    "series_coefficients",
    "series_start",
    "integrate",
    "detect_terminal",
    "hermite",
    "hermite5",
    "third_derivative",
]


@dataclass(frozen=True)
class SolverConfig:
    r_max: float = 200.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    conv_tol: float = 1e-8
    series_tol: float = 1e-12
    shoot_tol: float = 1e-6
    window: int = 32
    n_osc: int = 8
    k_div: int = 3
    stop_on_oscillation: bool = True
    max_steps: int = 2_000_000
    per_decade: int = 64
    max_bisect: int = 200
    # interior samples per step taken from the stepper's continuous
    # extension; that interpolant is not error controlled, so the default
    # records error-controlled step points only
    n_dense: int = 0
    # the stepper's local tolerances are (rel_tol, abs_tol) * local_margin, so
    # that rel_tol / abs_tol bound the *global* error even where the profile
    # equation amplifies perturbations (instanton tails grow like r^m)
    local_margin: float = 1e-3
    # factor (0, 1] applied to the automatically chosen series hand-off radius
    r0_scale: float = 1.0

    def validate(self) -> None:
        for name in ("r_max", "rel_tol", "abs_tol", "conv_tol", "series_tol", "shoot_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        for name in ("window", "n_osc", "max_steps", "per_decade", "max_bisect"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 < self.local_margin <= 1.0:
            raise ValueError("local_margin must lie in (0, 1]")
        if not 0.0 < self.r0_scale <= 1.0:
            raise ValueError("r0_scale must lie in (0, 1]")
        if self.k_div < 0 or self.n_dense < 0:
            raise ValueError("k_div and n_dense must be >= 0")


@dataclass(frozen=True)
class StartState:
    r0: float
    h: float
    dh: float
    truncation_estimate: float
    coefficients: tuple[float, float]  # (c_m, c_{m+2})


class TerminalKind(str, enum.Enum):
    CONVERGED = "ConvergedTo"
    OSCILLATING = "Oscillating"
    DIVERGED = "Diverged"
    EXHAUSTED = "Exhausted"
    # halted by a caller-supplied monitor (used by the shooting search)
    STOPPED = "Stopped"


@dataclass(frozen=True)
class TerminalEvent:
    kind: TerminalKind
    r_final: float
    k: Optional[int] = None
    diagnostic: str = ""

    def __str__(self) -> str:
        if self.k is None:
            return f"{self.kind.value}@{self.r_final:.6g}"
        return f"{self.kind.value}({self.k})@{self.r_final:.6g}"


def hermite(r0, r1, y0, y1, d0, d1, x):
    """Cubic Hermite interpolant on [r0, r1] (vectorised over any argument)."""
    dr = r1 - r0
    t = (x - r0) / dr
    t2 = t * t
    t3 = t2 * t
    return (
        (2 * t3 - 3 * t2 + 1) * y0
        + (t3 - 2 * t2 + t) * dr * d0
        + (-2 * t3 + 3 * t2) * y1
        + (t3 - t2) * dr * d1
    )


def hermite5(r0, r1, y0, y1, d0, d1, s0, s1, x):
    """Quintic Hermite interpolant matching values, slopes and curvatures."""
    dr = r1 - r0
    t = (x - r0) / dr
    t2 = t * t
    t3 = t2 * t
    t4 = t3 * t
    t5 = t4 * t
    return (
        (1 - 10 * t3 + 15 * t4 - 6 * t5) * y0
        + (t - 6 * t3 + 8 * t4 - 3 * t5) * dr * d0
        + 0.5 * (t2 - 3 * t3 + 3 * t4 - t5) * dr * dr * s0
        + 0.5 * (t3 - 2 * t4 + t5) * dr * dr * s1
        + (-4 * t3 + 7 * t4 - 3 * t5) * dr * d1
        + (10 * t3 - 15 * t4 + 6 * t5) * y1
    )


@dataclass(frozen=True)
class RadialProfile:
    """Sampled trajectory (r_i, h_i, h'_i) with its terminal event.

    ``d2h`` and ``d3h`` hold h'' and h''' at the samples when known. With
    them h and h' are interpolated by quintic Hermite polynomials, without
    them by cubic ones (h'' then comes from finite differences). ``start`` is None for synthetic profiles, in which
    case nothing is attributed to [0, r[0]].
    """

    r: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    terminal: TerminalEvent
    params: Optional[ModelParams] = None
    a: float = float("nan")
    d2h: Optional[np.ndarray] = None
    d3h: Optional[np.ndarray] = None
    start: Optional[StartState] = None
    # running integrals over [r[0], r] of the energy density and of G(h, 0) r
    cum_energy: Optional[np.ndarray] = None
    cum_potential: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.r, self.h, self.dh])

    def __len__(self) -> int:
        return len(self.r)

    def second_derivative(self) -> np.ndarray:
        if self.d2h is not None:
            return self.d2h
        return np.gradient(self.dh, self.r)

    def interpolate(self, x):
        """Return (h, h') at radii ``x`` inside [r[0], r[-1]]."""
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(self.r, x, side="right") - 1, 0, len(self.r) - 2)
        r0, r1 = self.r[i], self.r[i + 1]
        j = i + 1
        if self.d2h is None:
            d2 = self.second_derivative()
            h = hermite(r0, r1, self.h[i], self.h[j], self.dh[i], self.dh[j], x)
            return h, hermite(r0, r1, self.dh[i], self.dh[j], d2[i], d2[j], x)
        d2 = self.d2h
        h = hermite5(r0, r1, self.h[i], self.h[j], self.dh[i], self.dh[j], d2[i], d2[j], x)
        if self.d3h is None:
            dh = hermite(r0, r1, self.dh[i], self.dh[j], d2[i], d2[j], x)
        else:
            d3 = self.d3h
            dh = hermite5(r0, r1, self.dh[i], self.dh[j], d2[i], d2[j], d3[i], d3[j], x)
        return h, dh

    def truncated(self, n: int, terminal: TerminalEvent) -> "RadialProfile":
        """First ``n`` samples with a new terminal event."""
        return RadialProfile(
            r=self.r[:n],
            h=self.h[:n],
            dh=self.dh[:n],
            terminal=terminal,
            params=self.params,
            a=self.a,
            d2h=None if self.d2h is None else self.d2h[:n],
            d3h=None if self.d3h is None else self.d3h[:n],
            start=self.start,
            cum_energy=None if self.cum_energy is None else self.cum_energy[:n],
            cum_potential=None if self.cum_potential is None else self.cum_potential[:n],
            meta=dict(self.meta),
        )


def third_derivative(p: ModelParams, r, h, dh, d2h):
    """h''' from differentiating the profile equation along a trajectory."""
    r, h, dh, d2h = (np.asarray(v, dtype=float) for v in (r, h, dh, d2h))
    c2 = np.cos(2 * h)
    sc = 0.5 * np.sin(2 * h)
    m2 = float(p.m * p.m)
    return (-d2h / r + dh / (r * r) + m2 * (c2 * dh / (r * r) - 2 * sc / r**3)
            + p.lam * c2 * dh + p.omega * np.cos(h) * dh)


# --------------------------------------------------------------------------
# series start


def _sin_cos_series(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # power series of sin(h), cos(h) for h with zero constant term
    n = len(c)
    s = np.zeros(n)
    co = np.zeros(n)
    co[0] = 1.0
    k = np.arange(n)
    for j in range(1, n):
        kk = k[1 : j + 1]
        s[j] = np.dot(kk * c[1 : j + 1], co[j - kk]) / j
        co[j] = -np.dot(kk * c[1 : j + 1], s[j - kk]) / j
    return s, co


def series_coefficients(p: ModelParams, a: float, order: int) -> np.ndarray:
    """Taylor coefficients c_0..c_order of the solution with h^(m)(0) = a.

    Coefficients above c_m follow from matching powers of r:
    (n^2 - m^2) c_n = [g(h)]_{n-2} + m^2 [sin h cos h - h]_n.
    """
    m = p.m
    c = np.zeros(order + 1)
    if m > order:
        return c
    c[m] = a / math.factorial(m)
    for n in range(m + 1, order + 1):
        s, co = _sin_cos_series(c)
        sc = np.convolve(s, co)[: order + 1]
        g_coef = p.lam * sc[n - 2] + p.omega * s[n - 2]
        c[n] = (g_coef + m * m * (sc[n] - c[n])) / (n * n - m * m)
    return c


def series_start(p: ModelParams, a: float, series_tol: float = 1e-12, r0_scale: float = 1.0) -> StartState:
    """Two-term series start h = c_m r^m + c_{m+2} r^{m+2} at the hand-off radius.

    r0 is the largest radius at which the discarded tail of the series,
    weighted so that it bounds both the value and r times the slope error,
    stays below ``series_tol``; ``r0_scale`` shrinks it further.
    """
    if not math.isfinite(a):
        raise ValueError("a must be finite")
    if not series_tol > 0.0:
        raise ValueError("series_tol must be positive")
    m = p.m
    if a == 0.0:
        return StartState(1e-3, 0.0, 0.0, 0.0, (0.0, 0.0))
    order = 3 * m + 6
    c = series_coefficients(p, a, order)
    cm, cm2 = c[m], c[m + 2]
    tail_n = np.arange(m + 3, order + 1)
    tail_c = np.abs(c[m + 3 :]) * tail_n

    def estimate(r0: float) -> float:
        # relative to the leading term: a start error acts as an error in a
        return float(np.sum(tail_c * r0 ** (tail_n - m))) / abs(cm)

    # keep well inside the radius of convergence and the g length scale
    cap = 0.1 * min(1.0, (2.0 / abs(cm)) ** (1.0 / m))
    scale = abs(p.lam) + abs(p.omega)
    if scale > 0:
        cap = min(cap, 0.1 / math.sqrt(scale))
    if estimate(cap) <= series_tol:
        r0 = cap
    else:
        lo, hi = 1e-14, cap
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if estimate(mid) <= series_tol:
                lo = mid
            else:
                hi = mid
            if hi / lo < 1 + 1e-6:
                break
        r0 = lo
    r0 *= r0_scale
    h0 = cm * r0**m + cm2 * r0 ** (m + 2)
    dh0 = m * cm * r0 ** (m - 1) + (m + 2) * cm2 * r0 ** (m + 1)
    return StartState(r0, h0, dh0, estimate(r0), (float(cm), float(cm2)))


# --------------------------------------------------------------------------
# terminal detection


def _extrema_indices(dh: np.ndarray) -> np.ndarray:
    # index i such that h' changes sign strictly between samples i and i+1
    s = np.sign(dh)
    return np.nonzero(s[:-1] * s[1:] < 0)[0]


def detect_terminal(
    r,
    h,
    dh,
    conv_tol: float = 1e-8,
    window: int = 32,
    n_osc: int = 8,
    k_div: int = 3,
    h_start: float = 0.0,
) -> Optional[TerminalEvent]:
    """Classify the trailing part of a trajectory, or return None to continue.

    Precedence is Diverged > ConvergedTo > Oscillating.
    """
    r = np.asarray(r, dtype=float)
    h = np.asarray(h, dtype=float)
    dh = np.asarray(dh, dtype=float)
    if len(r) == 0:
        return None
    r_final = float(r[-1])

    limit = (math.ceil(abs(h_start) / math.pi) + k_div) * math.pi
    tail = slice(max(0, len(r) - window), len(r))
    if not (np.all(np.isfinite(h[tail])) and np.all(np.isfinite(dh[tail]))):
        return TerminalEvent(TerminalKind.DIVERGED, r_final, diagnostic="non-finite state")
    if np.any(np.abs(h[tail]) > limit):
        return TerminalEvent(TerminalKind.DIVERGED, r_final, diagnostic=f"|h| exceeded {limit:.6g}")

    if len(r) >= window:
        k = int(round(h[-1] / math.pi))
        hw, dw, rw = h[-window:], dh[-window:], r[-window:]
        if np.all(np.abs(hw - k * math.pi) < conv_tol) and np.all(np.abs(rw * dw) < conv_tol):
            return TerminalEvent(TerminalKind.CONVERGED, r_final, k=k)

    ext = _extrema_indices(dh)
    if len(ext) >= n_osc + 2:
        ext = ext[-(n_osc + 2) :]
        # extremum value: the larger |h - mean| of the two bracketing samples
        vals = np.where(
            np.abs(h[ext] - h[ext].mean()) >= np.abs(h[ext + 1] - h[ext].mean()), h[ext], h[ext + 1]
        )
        k = int(round(vals.mean() / math.pi))
        dev = vals - k * math.pi
        seg = h[ext[0] :] - k * math.pi
        sg = np.sign(seg)
        sg = sg[sg != 0]
        changes = int(np.count_nonzero(sg[:-1] != sg[1:]))
        alternating = np.all(np.sign(dev[:-1]) * np.sign(dev[1:]) < 0)
        amp = np.abs(dev)
        decreasing = np.all(np.diff(amp[0::2]) < 0) and np.all(np.diff(amp[1::2]) < 0)
        if changes >= n_osc and alternating and decreasing:
            return TerminalEvent(TerminalKind.OSCILLATING, r_final, k=k)
    return None




# --------------------------------------------------------------------------
# stepping

Monitor = Callable[[float, float, float], Optional[str]]

# smallest rtol the stepper accepts without complaint
_RTOL_FLOOR = 100 * np.finfo(float).eps


class _CompensatedSum:
    """Neumaier running sum."""

    def __init__(self):
        self.total = 0.0
        self.comp = 0.0

    def peek(self, x: float) -> float:
        t = self.total + x
        if abs(self.total) >= abs(x):
            c = self.comp + ((self.total - t) + x)
        else:
            c = self.comp + ((x - t) + self.total)
        return t + c

    def add(self, x: float) -> float:
        t = self.total + x
        if abs(self.total) >= abs(x):
            self.comp += (self.total - t) + x
        else:
            self.comp += (x - t) + self.total
        self.total = t
        return t + self.comp


def _augmented_rhs(p: ModelParams):
    # state: h, h', running energy, running int G(h, 0) t dt over [r0, r]
    m2, lam, omega = float(p.m * p.m), p.lam, p.omega
    sin, cos = math.sin, math.cos

    def fun(r, y):
        h, dh = y[0], y[1]
        s = sin(h)
        c = cos(h)
        sc = s * c
        acc = -dh / r + m2 * sc / (r * r) + lam * sc + omega * s
        dens = (dh * dh + m2 * s * s / (r * r)) * r
        half = sin(0.5 * h)
        pot = (0.5 * lam * s * s + 2.0 * omega * half * half) * r
        return np.array([dh, acc, dens, pot])

    return fun


def integrate(
    p: ModelParams,
    a: float,
    cfg: SolverConfig = SolverConfig(),
    monitor: Optional[Monitor] = None,
) -> RadialProfile:
    """Integrate from the series start until a terminal event or ``cfg.r_max``.

    Steps are taken by an explicit Dormand-Prince 8(5,3) pair and every
    accepted step point is recorded; ``cfg.n_dense`` optionally adds interior
    points from the continuous extension of each step. The running energy and the
    running integral of G(h, 0) r are integrated alongside h but left out
    of the error control.

    ``monitor(r, h, h')`` is called after every accepted step; a non-None
    return value halts the run with a ``Stopped`` terminal whose diagnostic
    is that value.
    """
    cfg.validate()
    start = series_start(p, a, cfg.series_tol, cfg.r0_scale)
    if cfg.r_max <= start.r0:
        raise ValueError("r_max must exceed the series hand-off radius")
    fun = _augmented_rhs(p)

    if a == 0.0:
        r = np.array([start.r0, cfg.r_max])
        z = np.zeros(2)
        return RadialProfile(
            r, z, z.copy(), TerminalEvent(TerminalKind.EXHAUSTED, cfg.r_max, k=0),
            params=p, a=a, d2h=z.copy(), d3h=z.copy(), start=start,
            cum_energy=z.copy(), cum_potential=z.copy(),
        )

    solver = DOP853(
        fun,
        start.r0,
        np.array([start.h, start.dh, 0.0, 0.0]),
        cfg.r_max,
        rtol=max(cfg.rel_tol * cfg.local_margin, _RTOL_FLOOR),
        atol=np.array([cfg.abs_tol * cfg.local_margin] * 2 + [np.inf, np.inf]),
        first_step=0.1 * start.r0,
    )
    cols: list[list[float]] = [[start.r0], [start.h], [start.dh], [0.0], [0.0]]
    fractions = np.arange(1, cfg.n_dense + 1) / (cfg.n_dense + 1)
    per_step = cfg.n_dense + 1
    window = cfg.window * per_step
    conv_run = 0
    ext_idx: list[int] = []
    div_limit = (math.ceil(abs(start.h) / math.pi) + cfg.k_div) * math.pi
    terminal: Optional[TerminalEvent] = None
    n_steps = 0
    sums = (_CompensatedSum(), _CompensatedSum())

    def trailing(i0: int):
        return np.array(cols[0][i0:]), np.array(cols[1][i0:]), np.array(cols[2][i0:])

    def check(i0: int) -> Optional[TerminalEvent]:
        return detect_terminal(*trailing(max(0, i0)), cfg.conv_tol, window, cfg.n_osc,
                               cfg.k_div, start.h)

    while terminal is None:
        if n_steps >= cfg.max_steps:
            terminal = TerminalEvent(TerminalKind.EXHAUSTED, solver.t, diagnostic="max_steps reached")
            break
        t_old = solver.t
        with np.errstate(all="ignore"):
            msg = solver.step()
        n_steps += 1
        if solver.status == "failed":
            terminal = TerminalEvent(TerminalKind.DIVERGED, t_old, diagnostic=f"integrator failure: {msg}")
            break
        y = solver.y
        if not np.all(np.isfinite(y[:2])):
            terminal = TerminalEvent(TerminalKind.DIVERGED, t_old, diagnostic="non-finite state")
            break
        if cfg.n_dense:
            rr = t_old + fractions * (solver.t - t_old)
            yy = solver.dense_output()(rr)
            for j in range(cfg.n_dense):
                cols[0].append(float(rr[j]))
                cols[1].append(float(yy[0, j]))
                cols[2].append(float(yy[1, j]))
                for c in range(2):
                    cols[c + 3].append(sums[c].peek(float(yy[c + 2, j])))
        cols[0].append(solver.t)
        cols[1].append(float(y[0]))
        cols[2].append(float(y[1]))
        for c in range(2):
            cols[c + 3].append(sums[c].add(float(y[c + 2])))
        # the running integrals restart from zero on every step, so their
        # rounding error stays at the size of one increment
        y[2:] = 0.0
        t, h, dh = solver.t, float(y[0]), float(y[1])
        n = len(cols[0])

        if abs(h) > div_limit:
            terminal = check(n - window)
            if terminal is not None:
                break

        kq = round(h / math.pi)
        if abs(h - kq * math.pi) < cfg.conv_tol and abs(t * dh) < cfg.conv_tol:
            conv_run += 1
            if conv_run >= cfg.window:
                terminal = check(n - window)
                if terminal is not None:
                    break
        else:
            conv_run = 0

        new_ext = [i for i in range(n - per_step - 1, n - 1) if cols[2][i] * cols[2][i + 1] < 0]
        if new_ext:
            ext_idx.extend(new_ext)
            if cfg.stop_on_oscillation and len(ext_idx) >= cfg.n_osc + 2:
                terminal = check(ext_idx[-(cfg.n_osc + 2)])
                if terminal is not None:
                    break

        if monitor is not None:
            verdict = monitor(t, h, dh)
            if verdict is not None:
                terminal = TerminalEvent(TerminalKind.STOPPED, t, diagnostic=verdict)
                break

        if solver.status == "finished":
            i0 = ext_idx[-(cfg.n_osc + 2)] if len(ext_idx) >= cfg.n_osc + 2 else n - window
            found = check(i0)
            if found is not None and found.kind is TerminalKind.OSCILLATING:
                terminal = found
            else:
                terminal = TerminalEvent(TerminalKind.EXHAUSTED, t)

    r, h, dh, energy, pot = (np.array(c) for c in cols)
    f = rhs_function(p)
    d2h = np.array([f(ri, hi, vi)[1] for ri, hi, vi in zip(r, h, dh)])
    d3h = third_derivative(p, r, h, dh, d2h)
    return RadialProfile(
        r=r, h=h, dh=dh, terminal=terminal, params=p, a=float(a), d2h=d2h, d3h=d3h, start=start,
        cum_energy=energy, cum_potential=pot, meta={"steps": n_steps},
    )
