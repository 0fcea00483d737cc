"""Step-size transforms bounded by a property-preservation threshold.

Each transform maps a raw step size x >= 0 to an effective step phi(x) with
phi(0) = 0, 0 < phi(x) <= bound for x > 0, and phi(x) = x + O(x^(q+1)) near
zero.  Here q is the transform's *enabled order*: a method of design order
p <= q keeps its order when x is replaced by phi(x), while every effective
Euler substep stays below the preservation threshold for arbitrarily large x.

The catalog, by enabled order:

    q = 1:  phi1 = B(1 - exp(-x/B)),  phi2 = x exp(-x/(Be)),  phi3 = Bx/(B+x)
    q = 2:  phi4 = (2B/pi) atan(pi x / 2B),  phi5 = B tanh(x/B),
            phi6 = Bx/sqrt(B^2+x^2)
    q = 3:  phi7 = Bx/(B^3+x^3)^(1/3)
    q = 4:  phi8 = Bx/(B^4+x^4)^(1/4)
    q = p:  general family Bx/(B^p+x^p)^(1/p) for p >= 5

``identity`` (phi(x) = x) is included so that standard methods run through
the exact same stepping code path as the transformed ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from mpmath import mp

from .errors import UnsupportedError
from .methods import Method, effective_ssp_coefficient

_FLOAT_MAX = float(np.finfo(float).max)


class PhiKind(Enum):
    PHI1 = "phi1"
    PHI2 = "phi2"
    PHI3 = "phi3"
    PHI4 = "phi4"
    PHI5 = "phi5"
    PHI6 = "phi6"
    PHI7 = "phi7"
    PHI8 = "phi8"
    GENERAL_P = "phi-general"
    IDENTITY = "identity"


#: the eight cataloged kinds, in order
CATALOG_KINDS = (
    PhiKind.PHI1, PhiKind.PHI2, PhiKind.PHI3, PhiKind.PHI4,
    PhiKind.PHI5, PhiKind.PHI6, PhiKind.PHI7, PhiKind.PHI8,
)

_ENABLED_ORDER = {
    PhiKind.PHI1: 1, PhiKind.PHI2: 1, PhiKind.PHI3: 1,
    PhiKind.PHI4: 2, PhiKind.PHI5: 2, PhiKind.PHI6: 2,
    PhiKind.PHI7: 3, PhiKind.PHI8: 4,
}


@dataclass(frozen=True)
class DenominatorSpec:
    """A concrete transform: kind, threshold ``bound`` and, for the general
    family, the power ``p``."""

    kind: PhiKind
    bound: float | None = None
    p: int | None = None

    def __post_init__(self):
        if self.kind is PhiKind.IDENTITY:
            return
        if self.bound is None or not self.bound > 0 or not math.isfinite(self.bound):
            raise ValueError(f"{self.kind.value} requires a positive finite bound")
        if self.kind is PhiKind.GENERAL_P:
            if self.p is None or self.p < 5:
                raise ValueError("general family requires integer p >= 5")
        elif self.p is not None:
            raise ValueError("p is only meaningful for the general family")

    @property
    def enabled_order(self) -> float:
        """Largest method order the transform leaves intact (inf for identity)."""
        if self.kind is PhiKind.IDENTITY:
            return math.inf
        if self.kind is PhiKind.GENERAL_P:
            return self.p
        return _ENABLED_ORDER[self.kind]

    def label(self) -> str:
        if self.kind is PhiKind.GENERAL_P:
            return f"phi-general:{self.p}"
        return self.kind.value


def phi_value(kind: PhiKind, bound, x, p: int | None = None):
    """Evaluate a transform elementwise; broadcasts over ``bound`` and ``x``.

    The power-family formulas are written in the scaled form
    x * (1 + (x/B)^p)^(-1/p) so that very large bounds (the unconditional
    sentinel) degrade gracefully to phi(x) = x instead of overflowing.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("step size must be nonnegative")
    if kind is PhiKind.IDENTITY:
        return x if x.shape else float(x)
    B = np.asarray(bound, dtype=float)
    if np.any(B <= 0):
        raise ValueError("bound must be positive")
    if kind is PhiKind.PHI1:
        out = B * (-np.expm1(-x / B))
    elif kind is PhiKind.PHI2:
        out = x * np.exp(-(x / B) / np.e)
    elif kind is PhiKind.PHI3:
        out = x / (1.0 + x / B)
    elif kind is PhiKind.PHI4:
        s = (x * (np.pi / 2.0)) / B
        out = x * np.arctan(s) / np.where(s == 0.0, 1.0, s)
    elif kind is PhiKind.PHI5:
        out = B * np.tanh(x / B)
    elif kind is PhiKind.PHI6:
        r = x / B
        out = x / np.sqrt(1.0 + r * r)
    elif kind is PhiKind.PHI7:
        r = x / B
        out = x / np.cbrt(1.0 + r * r * r)
    elif kind is PhiKind.PHI8:
        r2 = (x / B) ** 2
        out = x / (1.0 + r2 * r2) ** 0.25
    elif kind is PhiKind.GENERAL_P:
        if p is None:
            raise ValueError("general family requires p")
        out = x / (1.0 + (x / B) ** p) ** (1.0 / p)
    else:  # pragma: no cover
        raise ValueError(f"unknown kind {kind}")
    return out if out.shape else float(out)


def eval_phi(spec: DenominatorSpec, x):
    """Evaluate ``spec`` at ``x`` (scalar or array, nonnegative)."""
    return phi_value(spec.kind, spec.bound, x, spec.p)


def phi_bound(spec: DenominatorSpec) -> float:
    """The global threshold sup phi; the identity transform has none."""
    if spec.kind is PhiKind.IDENTITY:
        raise UnsupportedError("identity transform is unbounded")
    return spec.bound


def make_phi_for_method(method: Method, b_fe: float, kind: PhiKind,
                        p: int | None = None) -> DenominatorSpec:
    """Build the transform matched to a method and an Euler property bound.

    The threshold is C * b_fe with C the method's effective SSP coefficient,
    so every Euler substep of the stepped scheme stays within b_fe.
    """
    if kind is PhiKind.IDENTITY:
        return DenominatorSpec(PhiKind.IDENTITY)
    if not b_fe > 0:
        raise ValueError("b_fe must be positive")
    bound = min(effective_ssp_coefficient(method) * b_fe, _FLOAT_MAX)
    return DenominatorSpec(kind, bound=bound, p=p)


# ---------------------------------------------------------------------------
# numerical certification of the order and boundedness conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplingPlan:
    """Grid for certification: x = bound * 2^-k for k_min..k_max plus a
    log-spaced sweep up to ``span`` * bound for the threshold checks."""

    k_min: int = 4
    k_max: int = 18
    span: float = 100.0
    span_points: int = 128

    def dyadic_points(self, bound: float) -> np.ndarray:
        if self.k_max < self.k_min:
            raise ValueError("empty dyadic grid")
        ks = np.arange(self.k_min, self.k_max + 1)
        return bound * 2.0 ** (-ks.astype(float))

    def span_grid(self, bound: float) -> np.ndarray:
        if self.span_points < 1:
            raise ValueError("empty span grid")
        return np.geomspace(bound * 2.0 ** (-self.k_max),
                            self.span * bound, self.span_points)


@dataclass(frozen=True)
class CertificationReport:
    spec_label: str
    order_tested: int
    slope: float | None
    slope_ok: bool
    bound_ok: bool
    positive_ok: bool
    max_phi: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "phi": self.spec_label,
            "order_tested": self.order_tested,
            "slope": self.slope,
            "slope_ok": self.slope_ok,
            "bound_ok": self.bound_ok,
            "positive_ok": self.positive_ok,
            "max_phi": self.max_phi,
            "passed": self.passed,
        }


def _mp_phi(kind: PhiKind, bound, x, p: int | None):
    """Transform formulas in arbitrary precision, for the residual phi(x)-x.

    In double precision the subtraction cancels completely on the fine end of
    the dyadic grid for the high-order kinds, so the residual is formed at
    60 significant digits instead.
    """
    B = mp.mpf(repr(float(bound)))
    xm = mp.mpf(repr(float(x)))
    if kind is PhiKind.PHI1:
        return B * (1 - mp.e ** (-xm / B))
    if kind is PhiKind.PHI2:
        return xm * mp.e ** (-xm / (B * mp.e))
    if kind is PhiKind.PHI3:
        return B * xm / (B + xm)
    if kind is PhiKind.PHI4:
        return (2 * B / mp.pi) * mp.atan(xm * mp.pi / (2 * B))
    if kind is PhiKind.PHI5:
        return B * mp.tanh(xm / B)
    if kind is PhiKind.PHI6:
        return B * xm / mp.sqrt(B ** 2 + xm ** 2)
    if kind is PhiKind.PHI7:
        return B * xm / (B ** 3 + xm ** 3) ** (mp.mpf(1) / 3)
    if kind is PhiKind.PHI8:
        return B * xm / (B ** 4 + xm ** 4) ** (mp.mpf(1) / 4)
    if kind is PhiKind.GENERAL_P:
        return B * xm / (B ** p + xm ** p) ** (mp.mpf(1) / p)
    raise ValueError(f"no closed form for {kind}")


#: slope must reach p + 1 minus this margin for the order condition to pass
SLOPE_MARGIN = 0.1

#: relative slack allowed on the threshold check
BOUND_SLACK = 1e-12


def verify_phi_conditions(spec: DenominatorSpec, p: int,
                          plan: SamplingPlan | None = None) -> CertificationReport:
    """Certify empirically that ``spec`` enables order ``p``.

    Three checks: (i) the log-log slope of |phi(x) - x| against x on the
    dyadic grid reaches p + 1 (within ``SLOPE_MARGIN``); (ii) phi stays below
    its threshold on the span grid; (iii) phi is strictly positive there.
    The identity transform passes the slope check by convention (its residual
    is identically zero) and has no threshold to violate.
    """
    if p < 1:
        raise ValueError("order p must be >= 1")
    plan = plan or SamplingPlan()

    if spec.kind is PhiKind.IDENTITY:
        grid = plan.dyadic_points(1.0)
        vals = np.asarray(eval_phi(spec, grid))
        return CertificationReport(
            spec_label=spec.label(), order_tested=p, slope=None,
            slope_ok=True, bound_ok=True,
            positive_ok=bool(np.all(vals > 0)),
            max_phi=float(vals.max()),
            passed=bool(np.all(vals > 0)),
        )

    xs = plan.dyadic_points(spec.bound)
    if xs.size < 2:
        raise ValueError("need at least two dyadic points for the slope fit")
    with mp.workdps(60):
        logs = [(float(mp.log(mp.mpf(repr(float(x))))),
                 float(mp.log(abs(_mp_phi(spec.kind, spec.bound, x, spec.p)
                                  - mp.mpf(repr(float(x)))))))
                for x in xs]
    lx = np.array([a for a, _ in logs])
    ly = np.array([b for _, b in logs])
    slope = float(np.polyfit(lx, ly, 1)[0])
    slope_ok = slope >= p + 1 - SLOPE_MARGIN

    span = plan.span_grid(spec.bound)
    vals = np.asarray(eval_phi(spec, span))
    bound_ok = bool(vals.max() <= spec.bound * (1.0 + BOUND_SLACK))
    positive_ok = bool(np.all(vals > 0))

    return CertificationReport(
        spec_label=spec.label(), order_tested=p, slope=slope,
        slope_ok=slope_ok, bound_ok=bound_ok, positive_ok=positive_ok,
        max_phi=float(vals.max()),
        passed=bool(slope_ok and bound_ok and positive_ok),
    )


def parse_phi_label(label: str) -> tuple[PhiKind, int | None]:
    """Map a command-line name (phi1..phi8, phi-general:<p>, identity) to a
    kind and optional power."""
    if label == "identity":
        return PhiKind.IDENTITY, None
    if label.startswith("phi-general:"):
        try:
            p = int(label.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad general-family label {label!r}") from None
        return PhiKind.GENERAL_P, p
    for kind in CATALOG_KINDS:
        if kind.value == label:
            return kind, None
    raise ValueError(f"unknown transform {label!r}")
