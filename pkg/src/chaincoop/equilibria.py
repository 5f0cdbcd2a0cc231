"""Equilibrium solvers for every operating arrangement.

The grand coalition is a plain monopolist.  Every other arrangement is a
Stackelberg game: the coalition holding the supplier posts its quote first
(and, when vertically integrated, its own retail price), then the
manufacturer-side coalitions price against it.  With two independent
manufacturers the followers play a simultaneous price game of their own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .errors import InvalidInputError, SolverError
from .model import (
    CHAIN_ALONE,
    CHAIN_GRAND,
    PA,
    PG,
    PH,
    Action,
    ActionProfile,
    Coalition,
    G,
    M,
    M1,
    MarketParams,
    Partition,
    S,
    V1,
    demand_profile,
    manufacturer,
    other,
    vertical,
    vertical_partition,
)
from .oracle import GridSpec, grid_vertical_leader
from .pricing_core import evaluate_utilities, is_degenerate, solve_quadratic_pricing

#: Solvers never let eps come closer to one than this.
EPS_CAP = 1.0 - 1e-6

FULLY_OPERATING = "FullyOperating"
NONE_OPERATING = "NoneOperating"
ORACLE_FALLBACK = "OracleFallback"


def partial_operating(*names: str) -> str:
    return f"PartialOperating({','.join(names)})"


@dataclass(frozen=True)
class EquilibriumOutcome:
    """Equilibrium actions and payoffs of one arrangement.

    ``diagnostics`` carries the intermediate quantities of the solver
    (thresholds, candidate optimisers, margins) for inspection.
    """

    partition: Partition
    actions: ActionProfile
    demands: dict[Coalition, float]
    utilities: dict[Coalition, float]
    regime: str
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def utility(self, coalition: Coalition) -> float:
        return self.utilities[coalition]


def _regime_from_actions(partition: Partition, actions: ActionProfile) -> str:
    running = [c.name for c in partition if actions.operates(c)]
    if len(running) == len(partition):
        return FULLY_OPERATING
    if not running:
        return NONE_OPERATING
    return partial_operating(*running)


def _outcome(
    params: MarketParams,
    partition: Partition,
    actions: ActionProfile,
    diagnostics: dict[str, Any],
    regime: Optional[str] = None,
) -> EquilibriumOutcome:
    return EquilibriumOutcome(
        partition=partition,
        actions=actions,
        demands=demand_profile(params, partition, actions),
        utilities=evaluate_utilities(params, partition, actions),
        regime=regime or _regime_from_actions(partition, actions),
        diagnostics=diagnostics,
    )


def capped_params(params: MarketParams) -> MarketParams:
    if params.eps > EPS_CAP:
        return params.with_(eps=EPS_CAP)
    return params


# ---------------------------------------------------------------------------
# Grand coalition and single chains


def gc_optimum(params: MarketParams) -> EquilibriumOutcome:
    """Monopoly optimum of the grand coalition over the merged market."""
    sol = solve_quadratic_pricing(params.dbarM, params.alphaM, params.cG, params.oG)
    actions = ActionProfile({G: sol.action})
    return _outcome(params, PG, actions, {"delta": sol.delta, "degenerate": sol.degenerate})


def single_chain_phi(dbar: float, alpha: float, cS: float, cM: float) -> float:
    return (dbar - alpha * (cS + cM)) ** 2 / (16.0 * alpha)


def single_chain_sbe(
    dbar: float, alpha: float, cS: float, cM: float, oS: float, oM: float
) -> EquilibriumOutcome:
    """Stackelberg equilibrium of a supplier selling to one manufacturer.

    The unconstrained optimum is used when both parties clear their fixed
    costs there.  Otherwise the supplier picks the best quote among those at
    which the manufacturer still operates, or stays out when that is negative.
    The outcome lives on the two-agent partition ``CHAIN_ALONE`` with the
    manufacturer labelled ``M1``.
    """
    if not alpha > 0:
        raise InvalidInputError(f"alpha must be positive, got {alpha!r}")
    params = MarketParams.single_chain(dbar, alpha, cS, cM, oS, oM)
    phi = single_chain_phi(dbar, alpha, cS, cM)
    q_star = (dbar + alpha * (cS - cM)) / (2.0 * alpha)
    # The manufacturer operates at quote q iff q <= theta.
    theta = (dbar - alpha * cM - 2.0 * math.sqrt(alpha * oM)) / alpha
    diag: dict[str, Any] = {"phi": phi, "q_unconstrained": q_star, "theta": theta}
    if theta < 0 and not is_degenerate(alpha * theta, dbar):
        return _outcome(params, CHAIN_ALONE, ActionProfile({M1: None}), diag)
    q = min(max(q_star, 0.0), max(theta, 0.0))
    supplier_value = (dbar - alpha * (cM + q)) / 2.0 * (q - cS) - oS
    diag["quote_on_boundary"] = q != q_star
    if supplier_value < 0 and not is_degenerate(supplier_value, dbar * dbar / alpha):
        return _outcome(params, CHAIN_ALONE, ActionProfile({M1: None}), diag)
    p = (dbar + alpha * (cM + q)) / (2.0 * alpha)
    return _outcome(params, CHAIN_ALONE, ActionProfile({M1: p}, quote=q), diag)


def single_chain_gc(
    dbar: float, alpha: float, cS: float, cM: float, oS: float, oM: float
) -> EquilibriumOutcome:
    """Supplier and lone manufacturer merged into one monopolist."""
    params = MarketParams.single_chain(dbar, alpha, cS, cM, oS, oM)
    sol = solve_quadratic_pricing(dbar, alpha, cS + cM, oS + oM)
    actions = ActionProfile({V1: sol.action})
    return _outcome(params, CHAIN_GRAND, actions, {"delta": sol.delta})


def hc_sbe(params: MarketParams) -> EquilibriumOutcome:
    """Supplier leading the merged manufacturer block."""
    chain = single_chain_sbe(
        params.dbarM, params.alphaM, params.cS, params.cM_min, params.oS, params.oM_min
    )
    actions = ActionProfile({M: chain.actions.price(M1)}, quote=chain.actions.quote)
    return _outcome(params, PH, actions, dict(chain.diagnostics))


# ---------------------------------------------------------------------------
# The manufacturers' simultaneous game


def manufacturer_best_response(
    i: int, p_other: Action, q: float, params: MarketParams
) -> tuple[Action, ...]:
    """Best responses of manufacturer ``i`` in the all-alone arrangement.

    Returns one action, or two (a price and ``None``) when operating and
    staying out tie exactly.
    """
    if q < 0:
        raise InvalidInputError(f"quote must be nonnegative, got {q!r}")
    j = other(i)
    d_eff = params.dbar(i) + (0.0 if p_other is None else params.eps * params.alpha(j) * p_other)
    sol = solve_quadratic_pricing(d_eff, params.alpha(i), params.cM(i) + q, params.oM(i))
    if sol.degenerate:
        return (sol.action, None)
    return (sol.action,)


def _margin(params: MarketParams, i: int, p_other: float, q: float) -> float:
    """Operating margin of manufacturer ``i`` against rival price ``p_other``."""
    j = other(i)
    a = params.alpha(i)
    return (
        params.dbar(i)
        + params.eps * params.alpha(j) * p_other
        - a * (params.cM(i) + q)
        - 2.0 * math.sqrt(a * params.oM(i))
    )


def _nonnegative(delta: float, params: MarketParams, i: int) -> bool:
    return delta >= 0 or is_degenerate(delta, params.dbar(i))


def _joint_prices(q: float, params: MarketParams) -> dict[int, float]:
    """Prices at which both manufacturers best-respond to each other."""
    eps = params.eps
    b = {i: params.dbar(i) + (params.cM(i) + q) * params.alpha(i) for i in (1, 2)}
    return {
        i: (eps * b[other(i)] + 2.0 * b[i]) / ((4.0 - eps * eps) * params.alpha(i))
        for i in (1, 2)
    }


@dataclass(frozen=True)
class InnerGameResult:
    """Nash equilibrium of the manufacturers' price game at a fixed quote.

    ``case`` is ``"i"`` (both operate), ``"ii"`` (only ``strong`` operates) or
    ``"iii"`` (neither).  ``strong`` is the manufacturer whose margin against
    the rival's joint price is larger.
    """

    actions: ActionProfile
    case: str
    strong: int
    margin_weak: float
    margin_strong_alone: float


def inner_game_ne(q: float, params: MarketParams) -> InnerGameResult:
    if q < 0:
        raise InvalidInputError(f"quote must be nonnegative, got {q!r}")
    joint = _joint_prices(q, params)
    m2 = _margin(params, 2, joint[1], q)
    m1 = _margin(params, 1, joint[2], q)
    strong, weak = (1, 2) if m2 <= m1 else (2, 1)
    margin_weak = min(m1, m2)
    margin_strong_alone = _margin(params, strong, 0.0, q)
    if _nonnegative(margin_weak, params, weak):
        prices = {manufacturer(i): joint[i] for i in (1, 2)}
        case = "i"
    elif _nonnegative(margin_strong_alone, params, strong):
        a = params.alpha(strong)
        alone = (params.dbar(strong) + (params.cM(strong) + q) * a) / (2.0 * a)
        prices = {manufacturer(strong): alone, manufacturer(weak): None}
        case = "ii"
    else:
        prices = {manufacturer(1): None, manufacturer(2): None}
        case = "iii"
    return InnerGameResult(ActionProfile(prices, quote=q), case, strong, margin_weak, margin_strong_alone)


# ---------------------------------------------------------------------------
# All alone: supplier leads two competing manufacturers


def alc_thresholds(params: MarketParams) -> dict[str, float]:
    """Quotes at which the inner game changes regime.

    ``sigma{i}a`` is the largest quote at which manufacturer ``i`` operates as
    a monopolist; ``sigma{i}b`` the largest at which it still operates against
    the rival's joint price.  ``swap`` is where the two joint-price margins
    cross.  Each margin is affine in the quote, so the roots are exact.
    """
    eps = params.eps
    a = {i: params.alpha(i) for i in (1, 2)}
    slope_joint = {i: (eps * a[other(i)] + 2.0 * a[i]) / ((4.0 - eps * eps) * a[i]) for i in (1, 2)}
    joint0 = _joint_prices(0.0, params)
    out: dict[str, float] = {}
    lines = {}
    for i in (1, 2):
        j = other(i)
        lines[f"sigma{i}a"] = (_margin(params, i, 0.0, 0.0), -a[i])
        lines[f"sigma{i}b"] = (
            _margin(params, i, joint0[j], 0.0),
            eps * a[j] * slope_joint[j] - a[i],
        )
    lines["swap"] = (
        lines["sigma1b"][0] - lines["sigma2b"][0],
        lines["sigma1b"][1] - lines["sigma2b"][1],
    )
    for name, (value0, slope) in lines.items():
        out[name] = -value0 / slope if slope != 0 else (math.inf if value0 >= 0 else -math.inf)
    return out


def alc_supplier_value(q: float, params: MarketParams) -> float:
    """Supplier utility at quote ``q`` with the manufacturers in equilibrium."""
    inner = inner_game_ne(q, params)
    return evaluate_utilities(params, PA, inner.actions)[S]


def _alc_sales(q: float, params: MarketParams) -> float:
    inner = inner_game_ne(q, params)
    demand = demand_profile(params, PA, inner.actions)
    return sum(demand[manufacturer(i)] for i in (1, 2) if inner.actions.operates(manufacturer(i)))


def alc_esm_quote(params: MarketParams) -> float:
    """Optimal quote when both manufacturers operate and share one sensitivity."""
    a, eps = params.alpha1, params.eps
    return (params.dbarM + (eps - 1.0) * a * (params.cM1 + params.cM2)) / (
        4.0 * a * (1.0 - eps)
    ) + params.cS / 2.0


def alc_sbe(params: MarketParams) -> EquilibriumOutcome:
    """Stackelberg equilibrium of the all-alone arrangement.

    Between consecutive regime thresholds the manufacturers' total sales are
    affine in the quote, so the supplier's utility is a concave or linear
    quadratic there.  Each piece contributes its clipped vertex and its
    endpoints as candidates; the best candidate wins, with remaining ties
    going to the smaller quote.
    """
    params = capped_params(params)
    sigma = alc_thresholds(params)
    cuts = sorted({0.0} | {v for v in sigma.values() if math.isfinite(v) and v > 0})
    scale = max(1.0, cuts[-1], params.dbarM / params.alphaM)
    pieces = [(cuts[k], cuts[k + 1]) for k in range(len(cuts) - 1)]
    pieces.append((cuts[-1], None))
    candidates: set[float] = set(cuts)
    for lo, hi in pieces:
        span = (hi - lo) if hi is not None else scale
        x1, x2 = lo + span / 3.0, lo + 2.0 * span / 3.0
        s1, s2 = _alc_sales(x1, params), _alc_sales(x2, params)
        slope = (s2 - s1) / (x2 - x1)
        intercept = s1 - slope * x1
        if slope < 0:
            vertex = (slope * params.cS - intercept) / (2.0 * slope)
            top = hi if hi is not None else max(vertex, lo)
            candidates.add(min(max(vertex, lo), top))
        elif hi is None and s2 > 0:
            raise SolverError("supplier utility is unbounded in the quote")
        if hi is not None and hi > lo:
            # Thresholds belong to one side only; the other side's supremum is
            # approached from just inside the piece.
            nudge = 1e-12 * max(hi - lo, abs(lo), 1.0)
            candidates.update({lo + nudge, hi - nudge})
    ordered = sorted(q for q in candidates if q >= 0)
    values = [alc_supplier_value(q, params) for q in ordered]
    best = max(values)
    tol = 1e-12 * max(1.0, abs(best))
    k = next(n for n, v in enumerate(values) if v >= best - tol)
    q_best, v_best = ordered[k], values[k]
    diag: dict[str, Any] = dict(sigma)
    diag["candidates"] = [(q, v) for q, v in zip(ordered, values)]
    if params.equal_alpha and params.eps < 1:
        diag["q_esm"] = alc_esm_quote(params)
    if v_best < 0 and not is_degenerate(v_best, params.dbarM ** 2 / params.alphaM):
        actions = ActionProfile({M1: None, manufacturer(2): None})
        return _outcome(params, PA, actions, diag)
    inner = inner_game_ne(q_best, params)
    diag["inner_case"] = inner.case
    return _outcome(params, PA, inner.actions, diag)


# ---------------------------------------------------------------------------
# Vertical cooperation: supplier and manufacturer i lead the other manufacturer


def vc_coefficients(i: int, params: MarketParams) -> dict[str, float]:
    """Coefficients of the leader's first-order conditions (equal sensitivities)."""
    j = other(i)
    a, eps, cS = params.alpha(i), params.eps, params.cS
    c_lead, c_follow = params.cM(i), params.cM(j)
    d_lead, d_follow = params.dbar(i), params.dbar(j)
    e1 = d_follow / (2.0 * a) + c_follow / 2.0
    e2 = a * (1.0 - eps * eps / 2.0) * (c_lead + cS) + d_lead + eps * a * e1 - cS * eps * a / 2.0
    e3 = d_follow / 2.0 - a * c_follow / 2.0 - (c_lead + cS) * eps * a / 2.0 + cS * a / 2.0
    return {"e1": e1, "e2": e2, "e3": e3}


def vc_follower_threshold(i: int, params: MarketParams, p_lead: float) -> float:
    """Largest quote at which the follower still operates, given the leader's price."""
    j = other(i)
    a = params.alpha(j)
    return (
        params.dbar(j)
        + params.eps * params.alpha(i) * p_lead
        - a * params.cM(j)
        - 2.0 * math.sqrt(a * params.oM(j))
    ) / a


def _vc_profile(i: int, params: MarketParams, p_lead: Action, q: Action) -> ActionProfile:
    leader, follower = vertical(i), manufacturer(other(i))
    if p_lead is None:
        return ActionProfile({leader: None, follower: None})
    responses = manufacturer_best_response(other(i), p_lead, q, params) if q is not None else (None,)
    return ActionProfile({leader: p_lead, follower: responses[0]}, quote=q)


def _shut_out_quote(i: int, params: MarketParams, p_lead: float) -> float:
    theta = vc_follower_threshold(i, params, p_lead)
    j = other(i)
    reach = (params.dbar(j) + params.eps * params.alpha(i) * p_lead) / params.alpha(j)
    return max(theta, 0.0) + 1e-6 * max(1.0, abs(theta), reach)


def vc_sbe(i: int, params: MarketParams) -> EquilibriumOutcome:
    """Stackelberg equilibrium with the supplier and manufacturer ``i`` merged.

    With equal price sensitivities the leader's utility, while the follower
    operates, is a concave quadratic in (retail price, quote) and its
    stationary point is available in closed form.  If that point leaves the
    follower unable to cover its fixed cost, the leader compares the best
    point on the follower's break-even line with monopoly in its own market.
    Unequal sensitivities are solved on a grid.
    """
    if params.eps == 1.0:
        raise InvalidInputError("eps = 1 makes the vertical leader's problem singular")
    params = capped_params(params)
    partition = vertical_partition(i)
    if not params.equal_alpha:
        return _vc_fallback(i, params, partition)
    a, eps = params.alpha(i), params.eps
    coef = vc_coefficients(i, params)
    e2, e3 = coef["e2"], coef["e3"]
    p_star = (e2 + e3 * eps) / (a * (2.0 - 2.0 * eps * eps))
    q_star = (e3 + a * eps * p_star) / a
    theta = vc_follower_threshold(i, params, p_star)
    diag: dict[str, Any] = dict(coef)
    diag.update({"p_stationary": p_star, "q_stationary": q_star, "theta2": theta})

    options: list[tuple[str, Action, Action]] = [("stay_out", None, None)]
    if p_star >= 0 and 0 <= q_star <= theta:
        options.append(("interior", p_star, q_star))
    elif p_star >= 0 and theta >= 0 and q_star > theta:
        options.append(("break_even_line", p_star, theta))
    if q_star < 0:
        p_zero = e2 / (a * (2.0 - eps * eps))
        if p_zero >= 0 and vc_follower_threshold(i, params, p_zero) >= 0:
            options.append(("zero_quote", p_zero, 0.0))
    mono = solve_quadratic_pricing(
        params.dbar(i), a, params.cM(i) + params.cS, params.oS + params.oM(i)
    )
    if mono.operates:
        options.append(("monopoly", mono.action, _shut_out_quote(i, params, mono.action)))

    scored = []
    for label, p, q in options:
        profile = _vc_profile(i, params, p, q)
        value = evaluate_utilities(params, partition, profile)[vertical(i)]
        scored.append((label, p, q, profile, value))
    diag["candidates"] = [(label, p, q, v) for label, p, q, _, v in scored]
    best = max(v for *_, v in scored)
    tol = 1e-12 * max(1.0, abs(best))
    # Operating options come before staying out; among them the smaller quote wins.
    ranked = sorted(
        (s for s in scored if s[4] >= best - tol),
        key=lambda s: (s[1] is None, math.inf if s[2] is None else s[2]),
    )
    label, _, _, profile, _ = ranked[0]
    diag["branch"] = label
    return _outcome(params, partition, profile, diag)


def _vc_fallback(i: int, params: MarketParams, partition: Partition) -> EquilibriumOutcome:
    result = grid_vertical_leader(params, i, GridSpec.for_vertical(params, i))
    if result.price is None:
        profile = _vc_profile(i, params, None, None)
    elif result.quote is None:
        profile = _vc_profile(i, params, result.price, _shut_out_quote(i, params, result.price))
    else:
        profile = _vc_profile(i, params, result.price, result.quote)
    diag = {"grid_value": result.value, "grid_step": result.step}
    return _outcome(params, partition, profile, diag, regime=ORACLE_FALLBACK)


# ---------------------------------------------------------------------------
# Simultaneous moves


def simultaneous_ne(params: MarketParams, spec: Optional[GridSpec] = None) -> ActionProfile:
    """Equilibrium when supplier and manufacturers all move at once.

    Nobody operating is an equilibrium: a lone manufacturer has no supply and
    a lone supplier has no buyer.  The claim is certified by checking every
    unilateral deviation to a grid price.
    """
    spec = spec or GridSpec.for_params(params)
    profile = ActionProfile({M1: None, manufacturer(2): None})
    grid = spec.points()
    tol = 1e-12 * max(1.0, params.oS, params.oM1, params.oM2)
    for i in (1, 2):
        mi = manufacturer(i)
        for p in grid:
            trial = ActionProfile({mi: float(p), manufacturer(other(i)): None})
            if evaluate_utilities(params, PA, trial)[mi] > tol:
                raise SolverError(f"{mi.name} profits from deviating to price {p}")
    for q in grid:
        trial = ActionProfile({M1: None, manufacturer(2): None}, quote=float(q))
        if evaluate_utilities(params, PA, trial)[S] > tol:
            raise SolverError(f"supplier profits from deviating to quote {q}")
    return profile


def solve_partition(params: MarketParams, partition: Partition) -> EquilibriumOutcome:
    """Dispatch to the solver of ``partition``."""
    if partition == PG:
        return gc_optimum(params)
    if partition == PA:
        return alc_sbe(params)
    if partition == PH:
        return hc_sbe(params)
    for i in (1, 2):
        if partition == vertical_partition(i):
            return vc_sbe(i, params)
    raise InvalidInputError(f"no solver for partition {partition.name}")


__all__ = [
    "EPS_CAP",
    "EquilibriumOutcome",
    "FULLY_OPERATING",
    "InnerGameResult",
    "NONE_OPERATING",
    "ORACLE_FALLBACK",
    "alc_esm_quote",
    "alc_sbe",
    "alc_supplier_value",
    "alc_thresholds",
    "gc_optimum",
    "hc_sbe",
    "inner_game_ne",
    "manufacturer_best_response",
    "partial_operating",
    "simultaneous_ne",
    "single_chain_gc",
    "single_chain_phi",
    "single_chain_sbe",
    "solve_partition",
    "vc_coefficients",
    "vc_follower_threshold",
    "vc_sbe",
]
