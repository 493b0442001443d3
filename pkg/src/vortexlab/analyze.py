"""Diagnostics on computed profiles.

Energy, the Pohozaev identity, exponential-tail fits for monotone limits and
zero/extremum statistics for oscillating ones. All functions are pure.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate as sci_integrate
from scipy import optimize, stats

from .integrate import RadialProfile, TerminalKind
from .model import ModelParams, eval_g_prime

__all__ = [
    "NotConverged",
    "TooFewZeros",
    "Direction",
    "TailReport",
    "OscillationReport",
    "PohozaevLedger",
    "cumulative_energy",
    "energy",
    "pohozaev_residual",
    "tail_report",
    "oscillation_report",
    "partial_energies",
    "partial_energy_growth",
    "interleaved",
]

log = logging.getLogger(__name__)

# distances to k*pi below this multiple of eps*max(1, |k pi|) carry no slope
_RESOLUTION = 1e3 * np.finfo(float).eps


class NotConverged(ValueError):
    """The profile does not end in ConvergedTo(k)."""


class TooFewZeros(ValueError):
    """Fewer than four zeros of h - k*pi after the start radius."""


class Direction(str, enum.Enum):
    DECREASES_TO = "DecreasesTo"
    INCREASES_TO = "IncreasesTo"


@dataclass(frozen=True)
class TailReport:
    k: int
    monotone_from: Optional[float]
    direction: Direction
    fitted_rate: float
    # guaranteed lower bound sqrt(g'(k pi) / 2) on the decay rate
    rate_bound: float
    linearized_rate: float
    fit_window: tuple[float, float] = (float("nan"), float("nan"))
    n_fit: int = 0
    # set when the monotone window holds fewer than 10 samples
    non_monotone: bool = False


@dataclass(frozen=True)
class OscillationReport:
    k: int
    zeros: np.ndarray
    maxima: np.ndarray
    minima: np.ndarray
    alpha: float
    mean_late_spacing: float
    phase_samples: np.ndarray  # columns r, theta
    partial_energies: np.ndarray  # columns R, J over [R0, R]
    start: float = float("nan")


@dataclass(frozen=True)
class PohozaevLedger:
    r: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray
    sup_relative_residual: float

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.r, self.lhs, self.rhs, self.residual])


# --------------------------------------------------------------------------
# energy


def _density(profile: RadialProfile, m: int) -> np.ndarray:
    r, h, dh = profile.r, profile.h, profile.dh
    return (dh * dh + (m * m) * np.sin(h) ** 2 / (r * r)) * r


def _degree(profile: RadialProfile) -> int:
    if profile.params is None:
        raise ValueError("profile carries no parameters; the degree m is unknown")
    return profile.params.m


def _energy_head(profile: RadialProfile, m: int) -> float:
    # closed-form integral over [0, r0] of the density of the series start
    st = profile.start
    if st is None:
        return 0.0
    c, c2 = st.coefficients
    r0 = st.r0
    return (m * c * c * r0 ** (2 * m) + 2 * m * c * c2 * r0 ** (2 * m + 2)
            - m * c**4 * r0 ** (4 * m) / 12.0)


def cumulative_energy(profile: RadialProfile) -> np.ndarray:
    """Energy over [0, r_i] at every sample."""
    m = _degree(profile)
    head = _energy_head(profile, m)
    if profile.cum_energy is not None:
        return head + profile.cum_energy
    if len(profile.r) < 2:
        return np.full(len(profile.r), head)
    cum = sci_integrate.cumulative_simpson(_density(profile, m), x=profile.r, initial=0.0)
    return head + cum


def energy(profile: RadialProfile) -> float:
    """J = int (h'^2 + m^2 sin^2 h / r^2) r dr over [0, r_final]."""
    if len(profile.r) == 0:
        raise ValueError("empty profile")
    return float(cumulative_energy(profile)[-1])


# --------------------------------------------------------------------------
# Pohozaev identity


def _level_zero_potential(p: ModelParams, h):
    # G(h, 0), with 1 - cos h written as 2 sin^2(h/2) to keep precision near 0
    return 0.5 * p.lam * np.sin(h) ** 2 + 2.0 * p.omega * np.sin(0.5 * h) ** 2


def _cum_potential(p: ModelParams, profile: RadialProfile) -> np.ndarray:
    # int_0^r G(h(t), 0) t dt at every sample
    r, h = profile.r, profile.h
    st = profile.start
    if st is not None:
        c = st.coefficients[0]
        head = 0.5 * (p.lam + p.omega) * c * c * float(r[0]) ** (2 * p.m + 2) / (2 * p.m + 2)
    else:
        head = 0.0
    if profile.cum_potential is not None:
        base = profile.cum_potential
    else:
        base = sci_integrate.cumulative_simpson(_level_zero_potential(p, h) * r, x=r, initial=0.0)
    return head + base


def pohozaev_residual(p: ModelParams, profile: RadialProfile, k: int) -> PohozaevLedger:
    """Both sides of (r h')^2 = m^2 sin^2 h + 2 G r^2 - 4 int_0^r G t dt.

    G(x, k) and G(x, 0) differ by a constant, which drops out of the
    identity, so both sides are evaluated with G(x, 0) for every ``k``.
    Carrying the constant along would only add rounding of size omega r^2.
    """
    r, h, dh = profile.r, profile.h, profile.dh
    lhs = (r * dh) ** 2
    rhs = p.m**2 * np.sin(h) ** 2 + 2 * _level_zero_potential(p, h) * r * r - 4 * _cum_potential(p, profile)
    res = lhs - rhs
    sup = float(np.max(np.abs(res) / (1.0 + lhs))) if len(r) else 0.0
    return PohozaevLedger(r, lhs, rhs, res, sup)


# --------------------------------------------------------------------------
# monotone tails


def _trailing_constant_sign(*arrays: np.ndarray) -> int:
    # first index of the longest trailing run on which every array keeps
    # a constant nonzero sign
    n = len(arrays[0])
    start = n
    signs = [np.sign(a) for a in arrays]
    last = [s[-1] for s in signs]
    if any(v == 0 for v in last):
        return n
    for i in range(n - 1, -1, -1):
        if any(s[i] != v for s, v in zip(signs, last)):
            break
        start = i
    return start


def tail_report(p: ModelParams, profile: RadialProfile, k: int) -> TailReport:
    """Log-linear fit of |h - k*pi| on the trailing half of the monotone tail."""
    term = profile.terminal
    if term.kind is not TerminalKind.CONVERGED or term.k != k:
        raise NotConverged(f"terminal is {term}, not ConvergedTo({k})")
    gp = eval_g_prime(p, k * math.pi)
    if not gp > 0:
        raise ValueError(f"g'(k pi) = {gp!r} is not positive; the tail is not exponential")
    r, h, dh = profile.r, profile.h, profile.dh
    d = h - k * math.pi
    # drop trailing samples whose distance to k*pi is at rounding level
    floor = _RESOLUTION * max(1.0, abs(k) * math.pi)
    resolved = np.nonzero(np.abs(d) > floor)[0]
    if len(resolved) == 0:
        raise NotConverged("profile never departs from k*pi by more than rounding")
    n = resolved[-1] + 1
    r, h, dh, d = r[:n], h[:n], dh[:n], d[:n]
    i0 = _trailing_constant_sign(d, dh)
    n_mono = len(r) - i0
    monotone_from = float(r[i0]) if n_mono >= 2 else None
    non_monotone = n_mono < 10
    if non_monotone:
        log.warning("monotone tail window has only %d samples", n_mono)
        i0 = max(0, len(r) - 10)

    r_mid = 0.5 * (r[i0] + r[-1])
    sel = np.nonzero(r >= r_mid)[0]
    if len(sel) > 10:
        sel = sel[:-5]
    x = r[sel]
    y = np.log(np.abs(d[sel]))
    slope = np.polyfit(x, y, 1)[0]
    direction = Direction.INCREASES_TO if d[-1] < 0 else Direction.DECREASES_TO
    return TailReport(
        k=k,
        monotone_from=monotone_from,
        direction=direction,
        fitted_rate=float(-slope),
        rate_bound=math.sqrt(gp / 2),
        linearized_rate=math.sqrt(gp),
        fit_window=(float(x[0]), float(x[-1])),
        n_fit=len(sel),
        non_monotone=non_monotone,
    )


# --------------------------------------------------------------------------
# oscillating tails


def _interp_roots(profile: RadialProfile, values: np.ndarray, which: int, idx, xtol: float):
    # roots of the interpolated h - level (which=0) or h' (which=1) inside the
    # sample intervals idx, across which ``values`` changes sign
    offset = values[0] - (profile.h[0] if which == 0 else profile.dh[0])
    r = profile.r

    def f(x):
        return float(profile.interpolate(x)[which]) + offset

    return np.array([optimize.brentq(f, r[i], r[i + 1], xtol=xtol) for i in idx])


def _sign_changes(y: np.ndarray) -> np.ndarray:
    return np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]


def partial_energies(profile: RadialProfile, start: float) -> np.ndarray:
    """Rows (R, J over [start, R]) for R = start * 2^j inside the profile."""
    if not start > 0:
        raise ValueError("start radius must be positive")
    cum = cumulative_energy(profile)
    r = profile.r
    base = np.interp(start, r, cum)
    rows = []
    R = 2.0 * start
    while R <= r[-1]:
        rows.append((R, float(np.interp(R, r, cum) - base)))
        R *= 2.0
    return np.array(rows).reshape(-1, 2)


def oscillation_report(p: ModelParams, profile: RadialProfile, k: int,
                       start: Optional[float] = None, xtol: float = 1e-10) -> OscillationReport:
    """Zeros, extrema, phase and octave energies of h - k*pi after ``start``.

    ``start`` defaults to the first zero of h - k*pi.
    """
    gp = eval_g_prime(p, k * math.pi)
    if not gp < 0:
        raise ValueError(f"g'(k pi) = {gp!r} is not negative; the level is not oscillatory")
    alpha = math.sqrt(-gp)
    r, dh = profile.r, profile.dh
    d = profile.h - k * math.pi

    zeros = _interp_roots(profile, d, 0, _sign_changes(d), xtol)
    if start is None:
        start = float(zeros[0]) if len(zeros) else float(r[0])
    zeros = zeros[zeros >= start]
    if len(zeros) < 4:
        raise TooFewZeros(f"{len(zeros)} zeros of h - {k}*pi after r={start:.6g}")

    ext = _interp_roots(profile, dh, 1, _sign_changes(dh), xtol)
    ext = ext[(ext > zeros[0]) & (ext < zeros[-1])]
    ext_h, _ = profile.interpolate(ext)
    ext_d = ext_h - k * math.pi
    maxima = ext[ext_d > 0]
    minima = ext[ext_d < 0]

    gaps = np.diff(zeros)
    late = gaps[-min(8, len(gaps)):]
    keep = (r >= start) & (d != 0)
    theta = np.arctan(dh[keep] / (alpha * d[keep]))
    return OscillationReport(
        k=k,
        zeros=zeros,
        maxima=maxima,
        minima=minima,
        alpha=alpha,
        # consecutive zeros are half a period apart
        mean_late_spacing=float(np.mean(late)),
        phase_samples=np.column_stack([r[keep], theta]),
        partial_energies=partial_energies(profile, start),
        start=float(start),
    )


def interleaved(report: OscillationReport) -> bool:
    """Exactly one extremum between consecutive zeros, maxima and minima alternating."""
    z = report.zeros
    events = sorted([(x, "M") for x in report.maxima] + [(x, "L") for x in report.minima])
    if len(events) != len(z) - 1:
        return False
    for i, (x, kind) in enumerate(events):
        if not z[i] < x < z[i + 1]:
            return False
        if i and kind == events[i - 1][1]:
            return False
    return True


def partial_energy_growth(report, rel_floor: float = 0.01) -> dict:
    """Least-squares growth of J([R0, R]) per doubling of R.

    ``report`` is an OscillationReport or an array of (R, J) rows. The fit
    uses the trailing half of the samples. Growth counts as divergence when
    the slope's lower two-sigma bound exceeds ``rel_floor`` times the last
    partial energy, so that a convergent energy whose octave increments are
    still shrinking is not mistaken for a divergent one.
    """
    rows = report.partial_energies if isinstance(report, OscillationReport) else np.asarray(report)
    rows = np.asarray(rows, dtype=float).reshape(-1, 2)
    if len(rows) < 4:
        raise ValueError("at least four partial-energy samples are needed")
    tail = rows[-max(3, len(rows) // 2):]
    x = np.log2(tail[:, 0])
    y = tail[:, 1]
    if np.ptp(y) == 0.0:
        return {"slope_per_log2": 0.0, "diverging": False}
    fit = stats.linregress(x, y)
    lower = fit.slope - 2.0 * fit.stderr
    diverging = bool(lower > 0 and lower > rel_floor * abs(y[-1]))
    return {"slope_per_log2": float(fit.slope), "diverging": diverging}

