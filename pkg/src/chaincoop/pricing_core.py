"""Monopoly pricing kernel and the utility evaluators for every partition."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInputError
from .model import (
    CHAIN_ALONE,
    CHAIN_GRAND,
    PA,
    PG,
    PH,
    Action,
    ActionProfile,
    Coalition,
    M,
    MarketParams,
    Partition,
    S,
    customer_facing,
    demand_profile,
    manufacturer,
    other,
    vertical,
)

#: Relative width of the band in which a zero margin counts as exactly zero.
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class QuadraticSolution:
    """Optimal action for ``max_p (dbar - alpha p)(p - c) - oc`` against staying out.

    ``delta`` is the operating margin ``dbar - alpha c - 2 sqrt(alpha oc)``:
    positive means operating strictly beats staying out, negative means the
    agent stays out, and zero (``degenerate``) makes both optimal, in which
    case the agent operates.
    """

    action: Action
    value: float
    delta: float
    degenerate: bool

    @property
    def operates(self) -> bool:
        return self.action is not None


def operating_margin(dbar: float, alpha: float, c: float, oc: float) -> float:
    return dbar - alpha * c - 2.0 * math.sqrt(alpha * oc)


def is_degenerate(delta: float, dbar: float) -> bool:
    return abs(delta) <= DEGENERATE_TOL * max(1.0, abs(dbar))


def solve_quadratic_pricing(dbar: float, alpha: float, c: float, oc: float) -> QuadraticSolution:
    """Maximise ``(dbar - alpha p)(p - c) - oc`` over prices, or stay out for zero.

    >>> solve_quadratic_pricing(10, 2, 1, 3).action
    3.0
    """
    if not alpha > 0:
        raise InvalidInputError(f"alpha must be positive, got {alpha!r}")
    if oc < 0:
        raise InvalidInputError(f"fixed cost must be nonnegative, got {oc!r}")
    delta = operating_margin(dbar, alpha, c, oc)
    degenerate = is_degenerate(delta, dbar)
    if delta < 0 and not degenerate:
        return QuadraticSolution(None, 0.0, delta, False)
    price = (dbar + c * alpha) / (2.0 * alpha)
    value = (dbar - alpha * c) ** 2 / (4.0 * alpha) - oc
    if degenerate:
        value = 0.0
    return QuadraticSolution(max(price, 0.0), value, delta, degenerate)


def evaluate_utilities(
    params: MarketParams, partition: Partition, actions: ActionProfile
) -> dict[Coalition, float]:
    """Utility of each coalition of ``partition`` when ``actions`` are played.

    Revenue terms that depend on a trading partner switch off when that partner
    does not operate, and a non-operating coalition earns exactly zero.
    """
    demand = demand_profile(params, partition, actions)
    if partition == PG:
        return _grand_utilities(params, actions, demand)
    if partition == PA or partition == CHAIN_ALONE:
        return _alone_utilities(params, partition, actions, demand)
    if partition == CHAIN_GRAND:
        return _chain_grand_utilities(params, actions, demand)
    if partition == PH:
        return _horizontal_utilities(params, actions, demand)
    for i in (1, 2):
        if vertical(i) in partition and manufacturer(other(i)) in partition:
            return _vertical_utilities(params, i, actions, demand)
    raise InvalidInputError(f"no utility model for partition {partition.name}")


def _grand_utilities(params, actions, demand):
    (g,) = customer_facing(PG)
    p = actions.price(g)
    if p is None:
        return {g: 0.0}
    return {g: demand[g] * (p - params.cG) - params.oG}


def _chain_grand_utilities(params, actions, demand):
    (g,) = customer_facing(CHAIN_GRAND)
    p = actions.price(g)
    if p is None:
        return {g: 0.0}
    return {g: demand[g] * (p - params.cS - params.cM1) - params.oS - params.oM1}


def _alone_utilities(params, partition, actions, demand):
    q = actions.quote
    out: dict[Coalition, float] = {}
    sales = 0.0
    for i in (1, 2):
        mi = manufacturer(i)
        if mi not in partition:
            continue
        p = actions.price(mi)
        if p is None:
            out[mi] = 0.0
            continue
        sales += demand[mi]
        margin = demand[mi] * (p - params.cM(i) - q) if q is not None else 0.0
        out[mi] = margin - params.oM(i)
    out[S] = 0.0 if q is None else sales * (q - params.cS) - params.oS
    return out


def _horizontal_utilities(params, actions, demand):
    q = actions.quote
    p = actions.price(M)
    if p is None:
        u_m = 0.0
        sales = 0.0
    else:
        sales = demand[M]
        u_m = (demand[M] * (p - params.cM_min - q) if q is not None else 0.0) - params.oM_min
    u_s = 0.0 if q is None else sales * (q - params.cS) - params.oS
    return {S: u_s, M: u_m}


def _vertical_utilities(params, i, actions, demand):
    leader, follower = vertical(i), manufacturer(other(i))
    j = other(i)
    q = actions.quote
    p_lead = actions.price(leader)
    p_follow = actions.price(follower)
    if p_lead is not None and p_follow is not None and q is None:
        raise InvalidInputError(
            f"{leader.name} must post a wholesale quote while {follower.name} operates"
        )
    if p_lead is None:
        u_lead = 0.0
    else:
        u_lead = demand[leader] * (p_lead - params.cM(i) - params.cS)
        if p_follow is not None:
            u_lead += demand[follower] * (q - params.cS)
        u_lead -= params.oS + params.oM(i)
    if p_follow is None:
        u_follow = 0.0
    elif p_lead is None:
        u_follow = -params.oM(j)
    else:
        u_follow = demand[follower] * (p_follow - q - params.cM(j)) - params.oM(j)
    return {leader: u_lead, follower: u_follow}
