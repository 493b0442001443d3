"""Profile ODE for equivariant easy-axis Landau-Lifshitz vortices.

The radial profile h(r) of a vortex of degree m rotating at angular
velocity omega in a medium with anisotropy lambda satisfies

    h'' + h'/r - (m^2/r^2) sin h cos h = g(h),
    g(h) = lambda sin h cos h + omega sin h,

with h(0) = 0 and h^(|m|)(0) = a. A vortex is a solution with h -> k*pi.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

__all__ = [
    "ModelParams",
    "CaseTag",
    "Parity",
    "CaseLabel",
    "eval_g",
    "eval_g_prime",
    "eval_G",
    "rhs",
    "rhs_function",
    "energy_density",
    "classify_params",
]


@dataclass(frozen=True)
class ModelParams:
    """The triple (lambda, omega, m). ``m`` is stored as |m|."""

    lam: float
    omega: float
    m: int
    m_input: int = field(default=0, compare=False, repr=False)

    def __init__(self, lam: float, omega: float, m: int):
        lam = float(lam)
        omega = float(omega)
        if not (math.isfinite(lam) and math.isfinite(omega)):
            raise ValueError("lambda and omega must be finite")
        if int(m) != m:
            raise ValueError("m must be an integer")
        if m == 0:
            raise ValueError("m must be nonzero")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "m", abs(int(m)))
        object.__setattr__(self, "m_input", int(m))


class CaseTag(str, enum.Enum):
    CASE_I = "CaseI"
    CASE_II = "CaseII"
    CASE_III = "CaseIII"
    CASE_IV = "CaseIV"
    CASE_V = "CaseV"
    NONE = "NoFiniteEnergyVortex"


class Parity(str, enum.Enum):
    EVEN = "Even"
    ODD = "Odd"
    ANY = "Any"
    NONE = "None"


@dataclass(frozen=True)
class CaseLabel:
    """Which vortex case a (lambda, omega) pair falls into.

    The label is a necessary condition only: an admitted case says a
    finite-energy vortex *may* exist with a limit of the given parity.
    """

    tag: CaseTag
    admissible_limit_parity: Parity
    exponential_tail_guaranteed: bool

    @property
    def admits_vortex(self) -> bool:
        return self.tag is not CaseTag.NONE


def eval_g(p: ModelParams, h: float) -> float:
    s = math.sin(h)
    return p.lam * s * math.cos(h) + p.omega * s


def eval_g_prime(p: ModelParams, h: float) -> float:
    return p.lam * math.cos(2.0 * h) + p.omega * math.cos(h)


def eval_G(p: ModelParams, x: float, k: int) -> float:
    """Potential G(x, k) = -int_x^{k pi} g, in closed form."""
    sign = -1.0 if k % 2 else 1.0
    return 0.5 * p.lam * math.sin(x) ** 2 + p.omega * (sign - math.cos(x))


def rhs_function(p: ModelParams):
    """Return a fast closure ``f(r, h, dh) -> (dh, d2h)`` for the integrator.

    No check on ``r``; the caller guarantees r > 0.
    """
    m2, lam, omega = float(p.m * p.m), p.lam, p.omega
    sin, cos = math.sin, math.cos

    def f(r: float, h: float, dh: float) -> tuple[float, float]:
        s = sin(h)
        sc = s * cos(h)
        return dh, -dh / r + m2 * sc / (r * r) + lam * sc + omega * s

    return f


def rhs(p: ModelParams, r: float, state: tuple[float, float]) -> tuple[float, float]:
    """First-order form of the profile equation, solved for h''."""
    if not r > 0.0:
        raise ValueError(f"rhs is singular at r={r!r}; start from series_start instead")
    h, dh = state
    return rhs_function(p)(r, h, dh)


def energy_density(m: int, r: float, h: float, dh: float) -> float:
    """Integrand of J(h) including the measure factor r."""
    return (dh * dh + (m * m) / (r * r) * math.sin(h) ** 2) * r


def _on_line(x: float, y: float, tol: float) -> bool:
    return abs(x - y) <= tol


def classify_params(lam: float, omega: float, line_tol: float = 0.0) -> CaseLabel:
    """Map (lambda, omega) onto the case decision table.

    ``line_tol`` widens the exact matching used on the measure-zero lines
    lambda = +-omega and at the origin; it is meant for scanned grids.
    """
    lam = float(lam)
    omega = float(omega)
    if abs(lam) <= line_tol and abs(omega) <= line_tol:
        # both +-pi limits of the explicit instanton are odd multiples
        return CaseLabel(CaseTag.CASE_I, Parity.ODD, False)
    if _on_line(lam, omega, line_tol):
        return CaseLabel(CaseTag.CASE_II, Parity.ODD, False)
    if _on_line(lam, -omega, line_tol):
        return CaseLabel(CaseTag.CASE_III, Parity.EVEN, False)
    if 0.0 < omega < lam:
        return CaseLabel(CaseTag.CASE_IV, Parity.ODD, True)
    if -lam < omega < 0.0:
        return CaseLabel(CaseTag.CASE_V, Parity.EVEN, True)
    return CaseLabel(CaseTag.NONE, Parity.NONE, False)
