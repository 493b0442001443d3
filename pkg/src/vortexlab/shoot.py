"""Shooting on the initial slope a for profiles with h -> k*pi.

A single shot integrates until its fate relative to the target level is
decided: it crosses k*pi (overshoot), turns away from k*pi before reaching
it (undershoot), converges onto it (hit), or none of these (indeterminate).
``find_a`` brackets an undershoot/overshoot transition on a grid of a values
and bisects it.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .integrate import (
    RadialProfile,
    SolverConfig,
    TerminalEvent,
    TerminalKind,
    integrate,
)
from .model import ModelParams, classify_params, Parity

__all__ = [
    "ShotClass",
    "ShotOutcome",
    "BracketResult",
    "NoBracketFound",
    "bp_exact",
    "shoot",
    "a_grid",
    "scan",
    "find_a",
    "find_all_a",
]

log = logging.getLogger(__name__)


class NoBracketFound(RuntimeError):
    """No usable undershoot/overshoot transition over the scanned a values.

    ``reason`` is ``"no bracket"`` when the shot classification never
    changes, or ``"spurious bracket"`` when every transition found bisects
    onto a trajectory that does not approach the target level.
    """

    def __init__(self, reason: str, detail: str = "", outcomes=()):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason
        self.detail = detail
        self.outcomes = tuple(outcomes)


class ShotClass(str, enum.Enum):
    UNDERSHOOT = "Undershoot"
    OVERSHOOT = "Overshoot"
    HIT = "Hit"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class ShotOutcome:
    a: float
    classification: ShotClass
    terminal: TerminalEvent
    crossing_count: int
    profile: RadialProfile = field(repr=False)
    limit_estimate: float = float("nan")

    @property
    def decisive(self) -> bool:
        return self.classification in (ShotClass.UNDERSHOOT, ShotClass.OVERSHOOT)


@dataclass(frozen=True)
class BracketResult:
    a_lo: float
    a_hi: float
    a_star: float
    residual: float
    iterations: int
    k: int
    profile: Optional[RadialProfile] = field(default=None, repr=False)
    r_final: float = float("nan")
    slope_residual: float = float("nan")


def bp_exact(m: int, a: float, r):
    """Closed-form instanton profile h = 2 arctan(a r^|m| / (2 |m|!))."""
    m = abs(int(m))
    return 2.0 * np.arctan(a * np.asarray(r, dtype=float) ** m / (2.0 * math.factorial(m)))


class _Monitor:
    """Decides a shot from the accepted steps, relative to target ``level``."""

    def __init__(self, level: float, margin: float):
        self.level = level
        self.margin = margin
        self.side = 0
        self.approaching = False
        self.crossings = 0

    def __call__(self, r: float, h: float, dh: float) -> Optional[str]:
        d = self.level - h
        if abs(d) > self.margin:
            s = 1 if d > 0 else -1
            if self.side and s != self.side:
                self.crossings += 1
                return ShotClass.OVERSHOOT.value
            self.side = s
        if abs(d) <= self.margin:
            return None
        v = dh * d
        if v > 0:
            self.approaching = True
        elif v < 0 and self.approaching:
            return ShotClass.UNDERSHOOT.value
        return None


def _algebraic_limit(profile: RadialProfile, m: int) -> float:
    # least-squares fit of h = L + c1 r^-m + c3 r^-3m + c5 r^-5m on the
    # trailing quarter of the run: the instanton tail is an odd series in
    # r^-m, so this is only used when lambda = omega = 0
    r_end = profile.r[-1]
    xs = r_end * np.array([0.25, 1 / 3, 0.5, 0.75, 1.0])
    if xs[0] <= profile.r[0]:
        return float("nan")
    hs, _ = profile.interpolate(xs)
    A = np.column_stack([np.ones(len(xs)), xs ** (-m), xs ** (-3 * m), xs ** (-5 * m)])
    return float(np.linalg.lstsq(A, hs, rcond=None)[0][0])


def shoot(p: ModelParams, a: float, k: int, cfg: SolverConfig = SolverConfig()) -> ShotOutcome:
    """Integrate one trajectory and classify it against the level k*pi."""
    level = k * math.pi
    a = float(a)
    if a == 0.0:
        profile = integrate(p, a, cfg)
        cls = ShotClass.HIT if k == 0 else ShotClass.INDETERMINATE
        return ShotOutcome(a, cls, profile.terminal, 0, profile, 0.0)

    mon = _Monitor(level, cfg.conv_tol)
    profile = integrate(p, a, cfg, monitor=mon)
    term = profile.terminal
    limit = float("nan")
    if term.kind is TerminalKind.STOPPED:
        cls = ShotClass(term.diagnostic)
    elif term.kind is TerminalKind.CONVERGED and term.k == k:
        cls = ShotClass.HIT
        limit = float(profile.h[-1])
    elif p.lam == 0.0 and p.omega == 0.0 and term.kind is TerminalKind.EXHAUSTED:
        limit = _algebraic_limit(profile, p.m)
        hit = abs(limit - level) < cfg.shoot_tol
        cls = ShotClass.HIT if hit else ShotClass.INDETERMINATE
    else:
        cls = ShotClass.INDETERMINATE
    return ShotOutcome(a, cls, term, mon.crossings, profile, limit)


def a_grid(a_range: tuple[float, float], per_decade: int = 64) -> np.ndarray:
    """Scan grid: log-spaced in |a| when the range has one sign, else linear."""
    lo, hi = float(a_range[0]), float(a_range[1])
    if lo == hi:
        return np.array([lo])
    if lo > hi:
        lo, hi = hi, lo
    if lo > 0 or hi < 0:
        sign = 1.0 if lo > 0 else -1.0
        u, v = sorted((abs(lo), abs(hi)))
        n = max(2, int(math.ceil(per_decade * math.log10(v / u))) + 1)
        return sign * np.geomspace(u, v, n)
    return np.linspace(lo, hi, 2 * per_decade + 1)


def scan(p: ModelParams, k: int, a_range, cfg: SolverConfig = SolverConfig()) -> list[ShotOutcome]:
    return [shoot(p, a, k, cfg) for a in a_grid(a_range, cfg.per_decade)]


def _closest_approach(out: ShotOutcome, level: float):
    # sample index minimising max(|h - level|, |r h'|), the two quantities
    # the convergence test bounds
    prof = out.profile
    d = np.abs(prof.h - level)
    s = np.abs(prof.r * prof.dh)
    i = int(np.argmin(np.maximum(d, s)))
    return i, float(d[i]), float(s[i])


def _bisect(p, k, lo: ShotOutcome, hi: ShotOutcome, cfg: SolverConfig) -> BracketResult:
    level = k * math.pi
    it = 0
    while it < cfg.max_bisect:
        width = abs(hi.a - lo.a)
        if width < 1e-14 * max(abs(lo.a), abs(hi.a)):
            break
        mid_a = 0.5 * (lo.a + hi.a)
        if mid_a in (lo.a, hi.a):
            break
        mid = shoot(p, mid_a, k, cfg)
        it += 1
        if mid.classification is ShotClass.HIT:
            lo = hi = mid
            break
        if mid.classification is lo.classification:
            lo = mid
        elif mid.classification is hi.classification:
            hi = mid
        else:
            log.warning("indeterminate shot at a=%r inside bracket; stopping bisection", mid_a)
            break

    best = min((lo, hi), key=lambda o: max(_closest_approach(o, level)[1:]))
    i, resid, slope = _closest_approach(best, level)
    a_lo, a_hi = sorted((lo.a, hi.a))
    r_close = float(best.profile.r[i])
    prof = best.profile
    if resid < cfg.shoot_tol:
        prof = prof.truncated(i + 1, TerminalEvent(TerminalKind.CONVERGED, r_close, k=k,
                                                   diagnostic="shooting hit"))
    return BracketResult(a_lo, a_hi, best.a, float(resid), it, k, prof, r_close, float(slope))


def _brackets(outcomes: list[ShotOutcome]):
    for left, right in zip(outcomes[:-1], outcomes[1:]):
        if left.decisive and right.decisive and left.classification is not right.classification:
            yield left, right


def find_all_a(p: ModelParams, k: int, a_range=(0.1, 10.0), cfg: SolverConfig = SolverConfig(),
               outcomes: Optional[list[ShotOutcome]] = None) -> list[BracketResult]:
    """Bisect every undershoot/overshoot transition on the scan grid.

    Results are returned in grid order; spurious brackets (those whose
    bisection does not approach k*pi within ``cfg.shoot_tol``) are included
    so that the caller can inspect them.
    """
    if outcomes is None:
        outcomes = scan(p, k, a_range, cfg)
    return [_bisect(p, k, lo, hi, cfg) for lo, hi in _brackets(outcomes)]


def find_a(p: ModelParams, k: int, a_range=(0.1, 10.0), cfg: SolverConfig = SolverConfig()) -> BracketResult:
    """First a in ``a_range`` whose trajectory converges to k*pi.

    Raises NoBracketFound when the scan shows no transition, or when every
    transition bisects onto a separatrix of some other equilibrium.
    """
    label = classify_params(p.lam, p.omega)
    parity = Parity.EVEN if k % 2 == 0 else Parity.ODD
    if label.admissible_limit_parity not in (parity, Parity.ANY):
        log.warning("(lambda, omega)=(%g, %g) is %s; limit %d*pi is not admissible",
                    p.lam, p.omega, label.tag.value, k)

    outcomes = scan(p, k, a_range, cfg)
    for out in outcomes:
        if out.classification is ShotClass.HIT:
            level = k * math.pi
            resid = abs(out.limit_estimate - level)
            return BracketResult(out.a, out.a, out.a, resid, 0, k, out.profile,
                                 float(out.profile.r[-1]))
    if not any(True for _ in _brackets(outcomes)):
        kinds = sorted({o.classification.value for o in outcomes})
        raise NoBracketFound("no bracket", f"shot classes seen: {', '.join(kinds)}", outcomes)
    results = find_all_a(p, k, a_range, cfg, outcomes)
    for res in results:
        if res.residual < cfg.shoot_tol:
            return res
    worst = min(r.residual for r in results)
    raise NoBracketFound(
        "spurious bracket",
        f"{len(results)} bracket(s) bisected, closest approach to k*pi was {worst:.3g}",
        outcomes,
    )


def with_defaults(cfg: Optional[SolverConfig] = None, **overrides) -> SolverConfig:
    return replace(cfg or SolverConfig(), **overrides)
