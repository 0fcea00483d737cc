"""Autonomous ODE model problems with known qualitative structure.

Two built-in problems:

* ``logistic`` -- y' = y (c - y).  Closed-form solution, monotone, bounded;
  a single forward-Euler step preserves both properties for
  dt <= min(1/c, 1/y0) when y0 >= 0 and unconditionally when y0 < 0.
* ``seir`` -- a four-compartment epidemic model with hard-coded contact
  rate 5 and unit transition rates, optionally with a constant influx of
  susceptibles.  Euler preserves nonnegativity and (for zero influx) the
  component sum for dt <= min(1/(5 M), 1), M the initial component sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping

import numpy as np

from .errors import UnsupportedError

#: sentinel for "preserved for every step size" (kept finite so that bound
#: arithmetic stays in ordinary floats)
UNCONDITIONAL_BOUND = float(np.finfo(float).max)

SEIR_CONTACT_RATE = 5.0


class PropertyKind(Enum):
    BOUND_ABOVE = "bound-above"
    BOUND_BELOW = "bound-below"
    WEAK_MONOTONE_INCREASE = "weakmon-increase"
    WEAK_MONOTONE_DECREASE = "weakmon-decrease"
    LINEAR_INVARIANT = "linear-invariant"


@dataclass(frozen=True)
class QualitativeProperty:
    """One preserved feature of a solution component or combination.

    ``component`` is the state index the property concerns (None = all
    components).  For linear invariants, ``weights`` holds the combination
    and ``level`` its conserved value at t0; ``drift`` is the linear growth
    rate of the invariant (the influx for the epidemic model).
    """

    kind: PropertyKind
    component: int | None = None
    level: float = 0.0
    weights: tuple[float, ...] | None = None
    drift: float = 0.0


@dataclass(frozen=True)
class OdeProblem:
    """An autonomous system u' = f(u) plus the metadata the toolkit needs.

    ``rhs`` must be vectorized over leading axes (input shape (..., m) ->
    output (..., m)) and deterministic.  ``exact``, when present, maps an
    elapsed time t (scalar or array) and an initial state to the solution
    state; ``exact(0, y0) == y0``.  ``bound_rule`` maps an initial state to
    the Euler property bound B_FE.  ``bound_proven`` records whether that
    bound is backed by a proof for the given parameters.
    """

    name: str
    dimension: int
    params: Mapping[str, float]
    rhs: Callable
    exact: Callable | None = None
    bound_rule: Callable | None = None
    bound_proven: bool = True


def eval_rhs(problem: OdeProblem, u) -> np.ndarray:
    """Evaluate f(u) for a single state vector of length m."""
    u = np.asarray(u, dtype=float)
    if u.shape != (problem.dimension,):
        raise ValueError(
            f"state has shape {u.shape}, expected ({problem.dimension},)")
    return problem.rhs(u)


def exact_solution(problem: OdeProblem, t, y0) -> np.ndarray:
    """Closed-form solution state after elapsed time t >= 0."""
    if problem.exact is None:
        raise UnsupportedError(f"{problem.name} has no closed-form solution")
    y0 = np.asarray(y0, dtype=float)
    return problem.exact(t, y0)


def fe_property_bound(problem: OdeProblem, y0) -> float:
    """Largest Euler step provably preserving the problem's properties."""
    if problem.bound_rule is None:
        raise UnsupportedError(f"{problem.name} has no Euler property bound")
    y0 = np.asarray(y0, dtype=float)
    return problem.bound_rule(y0)


def forward_euler_step(problem: OdeProblem, u, dt: float) -> np.ndarray:
    """One explicit Euler step u + dt f(u); the substep oracle."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != problem.dimension:
        raise ValueError(
            f"state has trailing length {u.shape[-1]}, expected {problem.dimension}")
    return u + dt * problem.rhs(u)


# ---------------------------------------------------------------------------
# logistic growth
# ---------------------------------------------------------------------------

def logistic_problem(c: float) -> OdeProblem:
    if not c > 0:
        raise ValueError("c must be positive")
    c = float(c)

    def rhs(u):
        return u * (c - u)

    def exact(t, y0):
        # stable rearrangement of c e^{ct} y0 / (y0 (e^{ct} - 1) + c):
        # dividing through by e^{ct} avoids overflow for large c*t
        t = np.asarray(t, dtype=float)
        y = np.asarray(y0, dtype=float)[..., 0]
        out = c * y / (y + (c - y) * np.exp(-c * t))
        return np.stack([out + np.zeros_like(t)], axis=-1)

    def bound_rule(y0):
        y = float(np.asarray(y0, dtype=float)[..., 0])
        if y < 0:
            return UNCONDITIONAL_BOUND
        if y == 0:
            return 1.0 / c
        return min(1.0 / c, 1.0 / y)

    return OdeProblem(
        name="logistic",
        dimension=1,
        params={"c": c},
        rhs=rhs,
        exact=exact,
        bound_rule=bound_rule,
    )


def logistic_fe_bounds(c: float, y0s: np.ndarray) -> np.ndarray:
    """Vectorized Euler bound min(1/c, 1/y0) for batches of initial values."""
    y = np.asarray(y0s, dtype=float)
    with np.errstate(divide="ignore"):
        inv = np.where(y > 0, 1.0 / np.where(y > 0, y, 1.0), np.inf)
    b = np.minimum(1.0 / c, inv)
    return np.where(y < 0, UNCONDITIONAL_BOUND, b)


# ---------------------------------------------------------------------------
# SEIR epidemic model
# ---------------------------------------------------------------------------

def seir_problem(influx: float = 0.0) -> OdeProblem:
    if influx < 0:
        raise ValueError("influx must be nonnegative")
    pi = float(influx)

    def rhs(u):
        s = u[..., 0]
        e = u[..., 1]
        i = u[..., 2]
        infection = SEIR_CONTACT_RATE * s * i
        return np.stack(
            [pi - infection, infection - e, e - i, i], axis=-1)

    def bound_rule(y0):
        y = np.asarray(y0, dtype=float)
        if np.any(y < 0):
            raise ValueError("SEIR state components must be nonnegative")
        total = float(y.sum(axis=-1))
        if total == 0:
            return 1.0
        return min(1.0 / (SEIR_CONTACT_RATE * total), 1.0)

    return OdeProblem(
        name="seir",
        dimension=4,
        params={"influx": pi},
        rhs=rhs,
        exact=None,
        bound_rule=bound_rule,
        # the Euler bound is proven for zero influx; with influx > 0 the same
        # formula (with M the sum at the supplied state) is reused unproven
        bound_proven=(pi == 0.0),
    )


# ---------------------------------------------------------------------------
# registry and default property sets
# ---------------------------------------------------------------------------

def make_problem(name: str, params: Mapping[str, float] | None = None) -> OdeProblem:
    params = dict(params or {})
    if name == "logistic":
        return logistic_problem(params.pop("c", 2.0))
    if name == "seir":
        prob = seir_problem(params.pop("influx", params.pop("pi", 0.0)))
        if params:
            raise ValueError(f"unknown seir parameters: {sorted(params)}")
        return prob
    raise ValueError(f"unknown problem {name!r} (known: logistic, seir)")


def default_properties(problem: OdeProblem, y0) -> list[QualitativeProperty]:
    """The provably preserved property set for a problem and initial state."""
    y0 = np.asarray(y0, dtype=float)
    props: list[QualitativeProperty] = []
    if problem.name == "logistic":
        c = problem.params["c"]
        y = y0[0]
        if 0 <= y <= c:
            props.append(QualitativeProperty(PropertyKind.BOUND_BELOW, 0, 0.0))
            props.append(QualitativeProperty(PropertyKind.BOUND_ABOVE, 0, c))
            props.append(QualitativeProperty(PropertyKind.WEAK_MONOTONE_INCREASE, 0))
        elif y > c:
            props.append(QualitativeProperty(PropertyKind.BOUND_BELOW, 0, c))
            props.append(QualitativeProperty(PropertyKind.BOUND_ABOVE, 0, y))
            props.append(QualitativeProperty(PropertyKind.WEAK_MONOTONE_DECREASE, 0))
        else:
            props.append(QualitativeProperty(PropertyKind.BOUND_ABOVE, 0, y))
            props.append(QualitativeProperty(PropertyKind.WEAK_MONOTONE_DECREASE, 0))
    elif problem.name == "seir":
        for k in range(problem.dimension):
            props.append(QualitativeProperty(PropertyKind.BOUND_BELOW, k, 0.0))
        props.append(QualitativeProperty(
            PropertyKind.LINEAR_INVARIANT,
            component=None,
            level=float(y0.sum()),
            weights=(1.0,) * problem.dimension,
            drift=problem.params["influx"],
        ))
    return props
