"""Brute-force verifiers: grid searches over prices and quotes.

These routines share no algebra with the closed-form solvers beyond the
utility definitions themselves, which they re-implement in vectorised form.
Grids are deterministic and every argmax breaks ties toward the smaller
price, so any disagreement with a closed form is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np

from .errors import InvalidInputError, OracleConvergenceError
from .model import Action, ActionProfile, MarketParams, manufacturer, other

DEFAULT_POINTS = 2000


@dataclass(frozen=True)
class GridSpec:
    """Uniform price grid ``0, step, 2 step, ..., p_max``."""

    p_max: float
    step: float

    def __post_init__(self) -> None:
        if not (self.step > 0 and math.isfinite(self.step)):
            raise InvalidInputError(f"grid step must be positive, got {self.step!r}")
        if not (self.p_max > 0 and math.isfinite(self.p_max)):
            raise InvalidInputError(f"grid bound must be positive, got {self.p_max!r}")

    @classmethod
    def for_params(cls, params: MarketParams, points: int = DEFAULT_POINTS) -> "GridSpec":
        p_max = params.dbarM / params.alphaM + params.cG + 1.0
        return cls(p_max, p_max / points)

    @classmethod
    def for_market(cls, dbar: float, alpha: float, c: float, points: int = DEFAULT_POINTS) -> "GridSpec":
        p_max = dbar / alpha + c + 1.0
        return cls(p_max, p_max / points)

    @classmethod
    def for_vertical(cls, params: MarketParams, i: int, points: int = DEFAULT_POINTS) -> "GridSpec":
        """Leader price grid wide enough for any price with nonnegative sales.

        Cross-linking lets both prices rise together; requiring both demands
        to stay nonnegative caps the leader at ``(d_i + eps d_j) / (alpha_i (1 - eps^2))``.
        """
        j = other(i)
        eps = min(params.eps, 1.0 - 1e-6)
        top = (params.dbar(i) + eps * params.dbar(j)) / (params.alpha(i) * (1.0 - eps * eps))
        p_max = top + params.cS + params.cM(i) + 1.0
        return cls(p_max, p_max / points)

    def points(self) -> np.ndarray:
        n = int(round(self.p_max / self.step))
        return np.arange(n + 1, dtype=float) * self.step

    def refined(self, factor: int) -> "GridSpec":
        return GridSpec(self.p_max, self.step / factor)


def lipschitz_bound(dbar: float, alpha: float, c: float, spec: GridSpec) -> float:
    """Slope bound of the unclipped profit ``(dbar - alpha p)(p - c)`` on the grid."""
    return dbar + alpha * (spec.p_max + c)


def _argmax_first(values: np.ndarray) -> int:
    # np.argmax returns the first maximiser, i.e. the smallest grid price.
    return int(np.argmax(values))


def grid_monopoly(
    dbar: float, alpha: float, c: float, oc: float, spec: Optional[GridSpec] = None
) -> tuple[Action, float]:
    """Best of staying out and every grid price for a single seller."""
    spec = spec or GridSpec.for_market(dbar, alpha, c)
    p = spec.points()
    values = _sales_profit(dbar - alpha * p, p - c) - oc
    k = _argmax_first(values)
    if values[k] >= 0.0:
        return float(p[k]), float(values[k])
    return None, 0.0


def _sales_profit(demand: np.ndarray, margin: np.ndarray) -> np.ndarray:
    # An operating seller never posts a price nobody buys at: such prices are
    # excluded rather than scored as zero sales, which would tie with staying out.
    return np.where(demand >= 0.0, demand * margin, -np.inf)


def _manufacturer_profit(params: MarketParams, i: int, p: np.ndarray, p_other: Action, q: float):
    j = other(i)
    cross = 0.0 if p_other is None else params.eps * params.alpha(j) * p_other
    demand = params.dbar(i) - params.alpha(i) * p + cross
    return _sales_profit(demand, p - params.cM(i) - q) - params.oM(i)


def grid_best_response(
    i: int, p_other: Action, q: float, params: MarketParams, spec: Optional[GridSpec] = None
) -> tuple[Action, float]:
    """Grid best response of manufacturer ``i`` in the all-alone arrangement."""
    spec = spec or GridSpec.for_params(params)
    p = spec.points()
    values = _manufacturer_profit(params, i, p, p_other, q)
    k = _argmax_first(values)
    if values[k] >= 0.0:
        return float(p[k]), float(values[k])
    return None, 0.0


def grid_inner_ne(
    q: float, params: MarketParams, spec: Optional[GridSpec] = None, max_rounds: int = 1000
) -> ActionProfile:
    """Fixed point of alternating grid best responses between the manufacturers.

    Both start at the top of the grid.  Best responses rise with the rival's
    price, so descending from above lands on the largest equilibrium, the one
    with the most operating manufacturers.  The loop stops once a full round
    changes nothing.
    """
    spec = spec or GridSpec.for_params(params)
    top = float(spec.points()[-1])
    prices: dict[int, Action] = {1: top, 2: top}
    for _ in range(max_rounds):
        changed = False
        for i in (1, 2):
            best, _ = grid_best_response(i, prices[other(i)], q, params, spec)
            if best != prices[i]:
                prices[i] = best
                changed = True
        if not changed:
            return ActionProfile({manufacturer(i): prices[i] for i in (1, 2)}, quote=q)
    raise OracleConvergenceError(
        f"grid best responses did not settle within {max_rounds} rounds at q={q!r}"
    )


def exact_best_response(i: int, p_other: Action, q: float, params: MarketParams) -> Action:
    """Manufacturer ``i``'s optimal price against a fixed rival price.

    Kept separate from the equilibrium module so the oracle follows its own
    derivation: the profit is a concave quadratic, so the optimum is the
    vertex whenever the vertex profit covers the fixed cost.
    """
    j = other(i)
    a = params.alpha(i)
    d = params.dbar(i) + (0.0 if p_other is None else params.eps * params.alpha(j) * p_other)
    c = params.cM(i) + q
    p = (d + a * c) / (2.0 * a)
    demand = d - a * p
    profit = demand * (p - c) - params.oM(i)
    return p if demand >= 0.0 and profit >= 0.0 else None


def iterated_inner_ne(
    q: float, params: MarketParams, max_rounds: int = 1000, rtol: float = 1e-13
) -> ActionProfile:
    """Fixed point of alternating exact best responses, descending from high prices."""
    start = q + sum(params.dbar(i) / params.alpha(i) + params.cM(i) for i in (1, 2))
    start /= 1.0 - min(params.eps, 1.0 - 1e-6) ** 2
    prices: dict[int, Action] = {i: start for i in (1, 2)}
    for _ in range(max_rounds):
        moved = 0.0
        scale = 1.0
        for i in (1, 2):
            new = exact_best_response(i, prices[other(i)], q, params)
            old = prices[i]
            if (new is None) != (old is None):
                moved = math.inf
            elif new is not None:
                moved = max(moved, abs(new - old))
                scale = max(scale, abs(new))
            prices[i] = new
        if moved <= rtol * scale:
            return ActionProfile({manufacturer(i): prices[i] for i in (1, 2)}, quote=q)
    raise OracleConvergenceError(
        f"exact best responses did not settle within {max_rounds} rounds at q={q!r}"
    )


def alone_supplier_utility(q: float, params: MarketParams, inner: ActionProfile) -> float:
    """Supplier profit at quote ``q`` given the manufacturers' prices."""
    sales = 0.0
    for i in (1, 2):
        p = inner.price(manufacturer(i))
        if p is None:
            continue
        rival = inner.price(manufacturer(other(i)))
        cross = 0.0 if rival is None else params.eps * params.alpha(other(i)) * rival
        sales += max(0.0, params.dbar(i) - params.alpha(i) * p + cross)
    return sales * (q - params.cS) - params.oS


def grid_stackelberg(
    objective: Callable[[float], float],
    spec: GridSpec,
    allow_no_operate: bool = True,
) -> tuple[Action, float]:
    """Leader's best grid quote given a follower-aware objective.

    Returns ``(None, 0.0)`` when staying out beats every grid quote.
    """
    q = spec.points()
    values = np.array([objective(float(x)) for x in q])
    k = _argmax_first(values)
    if allow_no_operate and values[k] < 0.0:
        return None, 0.0
    return float(q[k]), float(values[k])


def single_chain_objective(
    dbar: float, alpha: float, cS: float, cM: float, oS: float, oM: float
) -> Callable[[float], float]:
    """Supplier profit at quote ``q`` when the lone manufacturer best-responds."""

    def objective(q: float) -> float:
        c = cM + q
        p = (dbar + alpha * c) / (2.0 * alpha)
        demand = max(0.0, dbar - alpha * p)
        if demand * (p - c) - oM < 0.0:
            return -oS
        return demand * (q - cS) - oS

    return objective


def alone_objective(
    params: MarketParams,
    follower: Literal["iterate", "grid"] = "iterate",
    spec: Optional[GridSpec] = None,
) -> Callable[[float], float]:
    """Supplier profit at quote ``q`` with the manufacturers at a Nash equilibrium."""

    def objective(q: float) -> float:
        if follower == "grid":
            inner = grid_inner_ne(q, params, spec)
        else:
            inner = iterated_inner_ne(q, params)
        return alone_supplier_utility(q, params, inner)

    return objective


def _vertical_surface(params: MarketParams, i: int, p_lead: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Leader utility on a mesh, follower playing its exact best response."""
    j = other(i)
    a_i, a_j, eps = params.alpha(i), params.alpha(j), params.eps
    d_eff = params.dbar(j) + eps * a_i * p_lead
    c_f = params.cM(j) + q
    p_f = (d_eff + a_j * c_f) / (2.0 * a_j)
    demand_f = d_eff - a_j * p_f
    follows = (demand_f >= 0.0) & (demand_f * (p_f - c_f) - params.oM(j) >= 0.0)
    demand_lead = params.dbar(i) - a_i * p_lead + eps * a_j * np.where(follows, p_f, 0.0)
    value = _sales_profit(demand_lead, p_lead - params.cM(i) - params.cS) - params.oS - params.oM(i)
    return value + np.where(follows, demand_f * (q - params.cS), 0.0)


@dataclass(frozen=True)
class LeaderGridResult:
    price: Action
    quote: Action
    value: float
    follower_operates: bool
    step: float
    p_max: float
    q_max: float


def grid_vertical_leader(
    params: MarketParams,
    i: int,
    spec: Optional[GridSpec] = None,
    coarse: int = 300,
    refine: int = 10,
) -> LeaderGridResult:
    """Two-dimensional grid search over the vertical leader's (price, quote).

    A coarse ``coarse x coarse`` mesh is followed by one pass at ``refine``
    times the resolution around the incumbent.  The branch in which the quote
    shuts the follower out is searched on a one-dimensional price grid.
    """
    spec = spec or GridSpec.for_vertical(params, i)
    j = other(i)
    p_top = spec.p_max
    # The follower buys only while its own price, which exceeds the quote, sells.
    q_top = (params.dbar(j) + params.eps * params.alpha(i) * p_top) / params.alpha(j) + 1.0
    p_axis = np.linspace(0.0, p_top, coarse + 1)
    q_axis = np.linspace(0.0, q_top, coarse + 1)
    best = _mesh_argmax(params, i, p_axis, q_axis)
    hp, hq = p_axis[1] - p_axis[0], q_axis[1] - q_axis[0]
    fine_p = np.linspace(max(0.0, best[0] - hp), min(p_top, best[0] + hp), 2 * refine + 1)
    fine_q = np.linspace(max(0.0, best[1] - hq), min(q_top, best[1] + hq), 2 * refine + 1)
    fine = _mesh_argmax(params, i, fine_p, fine_q)
    if fine[2] > best[2]:
        best = fine
    # Follower shut out: the leader is a plain monopolist in its own market.
    alone = GridSpec(p_top, p_top / (coarse * refine)).points()
    mono = _sales_profit(
        params.dbar(i) - params.alpha(i) * alone, alone - params.cM(i) - params.cS
    ) - params.oS - params.oM(i)
    k = _argmax_first(mono)
    step = max(hp, hq) / refine
    if mono[k] > best[2]:
        if mono[k] < 0.0:
            return LeaderGridResult(None, None, 0.0, False, step, p_top, q_top)
        return LeaderGridResult(float(alone[k]), None, float(mono[k]), False, step, p_top, q_top)
    if best[2] < 0.0:
        return LeaderGridResult(None, None, 0.0, False, step, p_top, q_top)
    return LeaderGridResult(float(best[0]), float(best[1]), float(best[2]), True, step, p_top, q_top)


def _mesh_argmax(params, i, p_axis, q_axis):
    pp, qq = np.meshgrid(p_axis, q_axis, indexing="ij")
    values = _vertical_surface(params, i, pp, qq)
    flat = _argmax_first(values.ravel())
    a, b = np.unravel_index(flat, values.shape)
    return float(pp[a, b]), float(qq[a, b]), float(values[a, b])


def vertical_leader_value(params: MarketParams, i: int, p_lead: float, q: float) -> float:
    """Leader utility at one point, follower at its exact best response."""
    return float(_vertical_surface(params, i, np.array(p_lead), np.array(q)))


__all__ = [
    "GridSpec",
    "LeaderGridResult",
    "alone_objective",
    "alone_supplier_utility",
    "exact_best_response",
    "grid_best_response",
    "grid_inner_ne",
    "grid_monopoly",
    "grid_stackelberg",
    "grid_vertical_leader",
    "iterated_inner_ne",
    "lipschitz_bound",
    "single_chain_objective",
    "vertical_leader_value",
]
