"""Coalition worths, pessimal anticipation and their limits in the essential regime.

The worth of a coalition in a partition is its equilibrium utility there.  A
coalition contemplating a deviation assumes the worst arrangement of the
outsiders, so its pessimal worth is the minimum over every partition that
contains it.

As ``eps`` and ``gamma`` both approach one (essential and substitutable
manufacturers) worths grow like ``1 / ((1 - eps)(1 - gamma))``.  The scaled
worths ``(1 - eps)(1 - gamma) nu`` converge; so does the eps-derivative of the
partially scaled worth ``(1 - eps) lim_gamma (1 - gamma) nu``.  Both limits
are available in closed form and as numerical estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from .equilibria import (
    EquilibriumOutcome,
    single_chain_gc,
    single_chain_sbe,
    solve_partition,
)
from .errors import InvalidInputError
from .model import (
    CHAIN_ALONE,
    CHAIN_GRAND,
    PA,
    PARTITIONS,
    PH,
    Agent,
    Coalition,
    G,
    M,
    M1,
    MarketParams,
    Partition,
    S,
    V1,
    manufacturer,
    other,
    vertical,
    vertical_partition,
)

#: Stand-in for "the pessimal anticipation" wherever a partition is expected.
PESSIMAL = "pa"

PartitionOrPessimal = Union[Partition, str]


@dataclass(frozen=True)
class WorthTable:
    """Worth of every coalition in every partition of a game."""

    entries: Mapping[tuple[Partition, Coalition], float]
    partitions: tuple[Partition, ...]
    params: Optional[MarketParams] = None
    outcomes: Mapping[Partition, EquilibriumOutcome] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        expected = {(p, c) for p in self.partitions for c in p}
        if set(self.entries) != expected:
            raise InvalidInputError("worth entries must match the partitions' coalitions exactly")

    @property
    def agents(self) -> frozenset[Agent]:
        return frozenset().union(*(p.agents for p in self.partitions))

    def worth(self, partition: Partition, coalition: Coalition) -> float:
        try:
            return self.entries[(partition, coalition)]
        except KeyError:
            raise InvalidInputError(
                f"no worth for {coalition.name} in {partition.name}"
            ) from None

    def pessimal(self, coalition: Coalition) -> float:
        return pessimal_worth(coalition, self)

    def scale(self) -> float:
        return max(abs(v) for v in self.entries.values())

    def records(self) -> list[dict[str, object]]:
        """JSON-ready rows ``{partition, coalition, worth}``."""
        return [
            {"partition": p.name, "coalition": c.name, "worth": self.entries[(p, c)]}
            for p in self.partitions
            for c in p
        ]


def compute_worth_table(params: MarketParams) -> WorthTable:
    """Solve every partition and record each coalition's equilibrium utility."""
    outcomes = {p: solve_partition(params, p) for p in PARTITIONS}
    entries = {(p, c): outcomes[p].utilities[c] for p in PARTITIONS for c in p}
    return WorthTable(entries, PARTITIONS, params, outcomes)


def single_chain_worth_table(
    dbar: float, alpha: float, cS: float, cM: float, oS: float, oM: float
) -> WorthTable:
    """Two-agent game of a supplier and one manufacturer (labelled ``M1``)."""
    grand = single_chain_gc(dbar, alpha, cS, cM, oS, oM)
    alone = single_chain_sbe(dbar, alpha, cS, cM, oS, oM)
    entries = {
        (CHAIN_GRAND, V1): grand.utilities[V1],
        (CHAIN_ALONE, S): alone.utilities[S],
        (CHAIN_ALONE, M1): alone.utilities[M1],
    }
    return WorthTable(
        entries, (CHAIN_GRAND, CHAIN_ALONE), None, {CHAIN_GRAND: grand, CHAIN_ALONE: alone}
    )


def pessimal_worth(coalition: Coalition, table: WorthTable) -> float:
    """Smallest worth of ``coalition`` over the partitions that contain it."""
    values = [table.worth(p, coalition) for p in table.partitions if coalition in p]
    if not values:
        raise InvalidInputError(f"{coalition.name} belongs to no partition of the table")
    return min(values)


def scaled_worth(params: MarketParams, coalition: Coalition, partition: Partition) -> float:
    """``(1 - gamma)(1 - eps)`` times the worth of ``coalition`` in ``partition``."""
    outcome = solve_partition(params, partition)
    return _scale_factor(params) * outcome.utilities[coalition]


def _scale_factor(params: MarketParams) -> float:
    return (1.0 - params.gamma) * (1.0 - params.eps)


# ---------------------------------------------------------------------------
# Closed forms


def _alpha_tilde(params: MarketParams) -> float:
    if not params.equal_alpha:
        raise InvalidInputError("closed-form limits assume equal raw price sensitivities")
    return params.alphaTilde1


def _vertical_index(partition: Partition) -> Optional[int]:
    for i in (1, 2):
        if partition == vertical_partition(i):
            return i
    return None


def worth_limit_closed_form(
    coalition: Coalition, partition: PartitionOrPessimal, params: MarketParams
) -> float:
    """Limit of the scaled worth as ``gamma`` then ``eps`` approach one.

    Only the vertical leader and the all-alone supplier keep a nonzero share,
    ``dbarM**2 / (8 alphaTilde)``; every other scaled worth vanishes.  Under
    pessimal anticipation only the vertical coalitions keep it.
    """
    at = _alpha_tilde(params)
    big = params.dbarM ** 2 / (8.0 * at)
    if partition == PESSIMAL:
        if coalition not in (S, M1, manufacturer(2), M, vertical(1), vertical(2), G):
            raise InvalidInputError(f"unknown coalition {coalition!r}")
        return big if coalition in (vertical(1), vertical(2)) else 0.0
    if not isinstance(partition, Partition) or coalition not in partition:
        raise InvalidInputError(f"{coalition.name} is not a member of {partition}")
    if partition == PA and coalition == S:
        return big
    i = _vertical_index(partition)
    if i is not None and coalition == vertical(i):
        return big
    return 0.0


def derivative_limit_closed_form(
    coalition: Coalition, partition: Partition, params: MarketParams
) -> float:
    """Limit of ``d/d eps`` of ``(1 - eps) lim_gamma (1 - gamma) nu`` as ``eps`` approaches one."""
    at = _alpha_tilde(params)
    d = {1: params.dbar1, 2: params.dbar2}
    dM = params.dbarM
    if coalition not in partition:
        raise InvalidInputError(f"{coalition.name} is not a member of {partition.name}")
    i = _vertical_index(partition)
    if i is not None:
        j = other(i)
        if coalition == vertical(i):
            return (2.0 * d[i] * d[j] + d[j] ** 2 - d[i] ** 2) / (16.0 * at)
        return -d[j] ** 2 / (16.0 * at)
    if partition == PA:
        if coalition == S:
            return dM ** 2 / (8.0 * at)
        (k,) = coalition.manufacturers
        return -(5.0 * d[k] + d[other(k)]) ** 2 / (144.0 * at)
    if partition == PH and coalition == M:
        return -dM ** 2 / (16.0 * at)
    raise InvalidInputError(f"no derivative limit is tabulated for {coalition.name} in {partition.name}")


#: Entries that carry a derivative limit.
DERIVATIVE_ENTRIES: tuple[tuple[Partition, Coalition], ...] = (
    (vertical_partition(1), vertical(1)),
    (vertical_partition(1), manufacturer(2)),
    (vertical_partition(2), vertical(2)),
    (vertical_partition(2), manufacturer(1)),
    (PA, S),
    (PA, M1),
    (PA, manufacturer(2)),
    (PH, M),
)

#: Coalitions that have a pessimal limit.
PESSIMAL_COALITIONS: tuple[Coalition, ...] = (S, M1, manufacturer(2), M, vertical(1), vertical(2), G)


@dataclass(frozen=True)
class LimitTable:
    """Closed-form worth, pessimal and derivative limits for one market."""

    worth_limits: dict[tuple[Partition, Coalition], float]
    pessimal_limits: dict[Coalition, float]
    derivative_limits: dict[tuple[Partition, Coalition], float]

    @property
    def beta_note(self) -> str:
        return "worth limits are in units of currency times (1 - eps)(1 - gamma)"


def limit_table(params: MarketParams) -> LimitTable:
    return LimitTable(
        worth_limits={(p, c): worth_limit_closed_form(c, p, params) for p in PARTITIONS for c in p},
        pessimal_limits={c: worth_limit_closed_form(c, PESSIMAL, params) for c in PESSIMAL_COALITIONS},
        derivative_limits={
            (p, c): derivative_limit_closed_form(c, p, params) for p, c in DERIVATIVE_ENTRIES
        },
    )


# ---------------------------------------------------------------------------
# Numerical estimates

DEFAULT_GAMMAS: tuple[float, ...] = tuple(1.0 - 10.0 ** -k for k in range(4, 9))
DEFAULT_EPSILONS: tuple[float, ...] = tuple(1.0 - 10.0 ** -k for k in range(2, 6))


@dataclass(frozen=True)
class LimitSchedule:
    """Points at which iterated limits are sampled, each tending to one."""

    gammas: tuple[float, ...] = DEFAULT_GAMMAS
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS

    def __post_init__(self) -> None:
        for name, seq in (("gammas", self.gammas), ("epsilons", self.epsilons)):
            if not seq:
                raise InvalidInputError(f"{name} schedule is empty")
            if any(b <= a for a, b in zip(seq, seq[1:])):
                raise InvalidInputError(f"{name} schedule must increase toward one")


@dataclass(frozen=True)
class LimitEstimate:
    """Tail value of an iterated limit with its convergence evidence.

    ``inner`` holds, per eps, the scaled worths along the gamma schedule;
    ``outer`` the per-eps tail values.  ``differences`` are the successive
    differences of ``outer``.  ``converged`` is false when any tail difference
    grew in magnitude.
    """

    value: float
    inner: tuple[tuple[float, tuple[float, ...]], ...]
    outer: tuple[float, ...]
    differences: tuple[float, ...]
    converged: bool


def _monotone_tail(seq: Sequence[float], floor: float) -> bool:
    diffs = [abs(b - a) for a, b in zip(seq, seq[1:])]
    if len(diffs) < 2:
        return True
    return diffs[-1] <= diffs[-2] * (1.0 + 1e-9) + floor


def _entry_value(
    table: WorthTable, coalition: Coalition, partition: PartitionOrPessimal
) -> float:
    if partition == PESSIMAL:
        return pessimal_worth(coalition, table)
    return table.worth(partition, coalition)  # type: ignore[arg-type]


def scaled_surface(
    base: MarketParams, schedule: LimitSchedule = LimitSchedule()
) -> dict[tuple[float, float], WorthTable]:
    """Worth tables at every (eps, gamma) point of the schedule."""
    return {
        (e, g): compute_worth_table(base.with_(eps=e, gamma=g))
        for e in schedule.epsilons
        for g in schedule.gammas
    }


def worth_limit_estimate(
    coalition: Coalition,
    partition: PartitionOrPessimal,
    base: MarketParams,
    schedule: LimitSchedule = LimitSchedule(),
    surface: Optional[Mapping[tuple[float, float], WorthTable]] = None,
) -> LimitEstimate:
    """Estimate the iterated limit, gamma first, by the last sampled value."""
    surface = surface if surface is not None else scaled_surface(base, schedule)
    inner_rows = []
    outer = []
    converged = True
    floor = 1e-9 * max(1.0, base.dbarM ** 2 / min(base.alphaTilde1, base.alphaTilde2))
    for e in schedule.epsilons:
        row = tuple(
            (1.0 - e) * (1.0 - g) * _entry_value(surface[(e, g)], coalition, partition)
            for g in schedule.gammas
        )
        inner_rows.append((e, row))
        outer.append(row[-1])
        converged &= _monotone_tail(row, floor)
    converged &= _monotone_tail(outer, floor)
    diffs = tuple(b - a for a, b in zip(outer, outer[1:]))
    return LimitEstimate(outer[-1], tuple(inner_rows), tuple(outer), diffs, converged)


@dataclass(frozen=True)
class DerivativeEstimate:
    value: float
    eps: float
    step: float
    gamma: float
    samples: tuple[float, float]


def partially_scaled_worth(
    coalition: Coalition, partition: PartitionOrPessimal, params: MarketParams
) -> float:
    """``(1 - eps)(1 - gamma) nu`` at the given point, pessimal when asked."""
    table = compute_worth_table(params)
    return _scale_factor(params) * _entry_value(table, coalition, partition)


def derivative_limit_estimate(
    coalition: Coalition,
    partition: PartitionOrPessimal,
    base: MarketParams,
    eps: float = 1.0 - 1e-3,
    step: float = 5e-4,
    gamma: float = 1.0 - 1e-8,
) -> DerivativeEstimate:
    """Central difference in eps of the partially scaled worth near the essential corner."""
    lo = partially_scaled_worth(coalition, partition, base.with_(eps=eps - step, gamma=gamma))
    hi = partially_scaled_worth(coalition, partition, base.with_(eps=eps + step, gamma=gamma))
    return DerivativeEstimate((hi - lo) / (2.0 * step), eps, step, gamma, (lo, hi))


def merger_gap(params: MarketParams) -> float:
    """Room left in the first vertical partition after buying off the manufacturer block.

    Returns ``(nu~_V1 - nu~_V2 + 2 nu~_M2 - nu~_M^pa) / (1 - eps)`` with
    ``nu~ = (1 - eps)(1 - gamma) nu`` and ``nu~_M2`` taken in the first
    vertical partition.  Its sign decides whether a payoff band survives.
    """
    table = compute_worth_table(params)
    f = (1.0 - params.gamma)
    return f * (
        table.worth(vertical_partition(1), vertical(1))
        - table.worth(vertical_partition(2), vertical(2))
        + 2.0 * table.worth(vertical_partition(1), manufacturer(2))
        - pessimal_worth(M, table)
    )


def merger_gap_limit(params: MarketParams) -> float:
    at = _alpha_tilde(params)
    d1, d2 = params.dbar1, params.dbar2
    return (d1 * d1 - d2 * d2 - 2.0 * d1 * d2) / (16.0 * at)


__all__ = [
    "DERIVATIVE_ENTRIES",
    "DerivativeEstimate",
    "LimitEstimate",
    "LimitSchedule",
    "LimitTable",
    "PESSIMAL",
    "PESSIMAL_COALITIONS",
    "WorthTable",
    "compute_worth_table",
    "derivative_limit_closed_form",
    "derivative_limit_estimate",
    "limit_table",
    "merger_gap",
    "merger_gap_limit",
    "partially_scaled_worth",
    "pessimal_worth",
    "scaled_surface",
    "scaled_worth",
    "single_chain_worth_table",
    "worth_limit_closed_form",
    "worth_limit_estimate",
]
