"""Blocking, stable payoff regions and stability classification.

A configuration pairs a partition with a payoff vector that pays every
coalition of the partition exactly its worth.  An outside coalition blocks
it when its pessimal worth exceeds what its members currently receive.  A
partition is stable when some configuration on it is blocked by nobody.

With three agents the consistent payoffs of a partition form an affine set of
dimension at most two, so the stable region is a polygon, a segment or a
point.  Emptiness is decided by maximising the smallest blocking surplus over
that set.  The optimum sits at a vertex of a small arrangement of lines, and
every vertex is enumerated exactly.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidInputError
from .model import (
    AGENTS,
    PARTITIONS,
    Agent,
    BlockerPolicy,
    G,
    M,
    S,
    Coalition,
    Configuration,
    MarketParams,
    Partition,
    PayoffVector,
    admissible_blockers,
    is_consistent,
    manufacturer,
    other,
    vertical,
    vertical_partition,
)
from .worths import WorthTable, compute_worth_table, pessimal_worth

#: Relative tolerance applied to every blocking comparison.
BLOCKING_TOL = 1e-9


def blocking_tolerance(table: WorthTable) -> float:
    return BLOCKING_TOL * max(1.0, table.scale())


@dataclass(frozen=True)
class BlockCheck:
    coalition: Coalition
    blocked: bool
    deficit: float


def blocks(
    coalition: Coalition, config: Configuration, table: WorthTable, strict: bool = False
) -> BlockCheck:
    """Does ``coalition`` block ``config``?

    ``deficit`` is the pessimal worth minus the members' current total.  By
    default only a positive deficit blocks; in strict mode a zero deficit
    blocks as well, so surviving payoffs beat every blocker strictly.
    """
    if coalition in config.partition:
        raise InvalidInputError(f"{coalition.name} is a member of {config.partition.name}")
    deficit = pessimal_worth(coalition, table) - config.payoff.total(coalition)
    tol = blocking_tolerance(table)
    blocked = deficit > -tol if strict else deficit > tol
    return BlockCheck(coalition, blocked, deficit)


@dataclass(frozen=True)
class PayoffInterval:
    """Range of one agent's payoff along a one-dimensional consistent set."""

    agent: Agent
    lower: float
    upper: float

    @property
    def nonempty(self) -> bool:
        return self.lower <= self.upper


@dataclass(frozen=True)
class Region:
    """Stable payoffs of one partition under a blocker policy.

    ``slack`` is the largest achievable minimum surplus over all admissible
    blockers; the region is nonempty when it is nonnegative (positive in
    strict mode).  ``witness`` is a payoff attaining that slack, so it sits as
    deep inside the region as possible.  ``interval`` is reported whenever the
    consistent payoffs form a line.
    """

    partition: Partition
    feasible: bool
    slack: float
    witness: Optional[PayoffVector]
    closest: PayoffVector
    dimension: int
    blockers: tuple[Coalition, ...]
    strict: bool
    policy: BlockerPolicy
    interval: Optional[PayoffInterval] = None

    def describe(self) -> str:
        names = ", ".join(c.name for c in self.blockers) or "none"
        state = "nonempty" if self.feasible else "empty"
        return (
            f"{self.partition.name}: {state} ({self.dimension}-dimensional consistent set, "
            f"blockers {names}, best slack {self.slack:.6g})"
        )


@dataclass(frozen=True)
class _Param:
    """Consistent payoffs as ``x = base + basis @ y`` over the free coordinates ``y``."""

    agents: tuple[Agent, ...]
    base: np.ndarray
    basis: np.ndarray
    free: tuple[Agent, ...]


def _parametrise(partition: Partition, table: WorthTable) -> _Param:
    agents = tuple(a for a in AGENTS if a in table.agents)
    index = {a: k for k, a in enumerate(agents)}
    base = np.zeros(len(agents))
    free: list[Agent] = []
    columns: list[np.ndarray] = []
    for c in partition:
        members = c.ordered_members()
        anchor = Agent.SUPPLIER if Agent.SUPPLIER in c else members[-1]
        base[index[anchor]] = table.worth(partition, c)
        for a in members:
            if a == anchor:
                continue
            col = np.zeros(len(agents))
            col[index[a]] = 1.0
            col[index[anchor]] = -1.0
            free.append(a)
            columns.append(col)
    basis = np.column_stack(columns) if columns else np.zeros((len(agents), 0))
    return _Param(agents, base, basis, tuple(free))


def _payoff(param: _Param, y: np.ndarray) -> PayoffVector:
    x = param.base + param.basis @ y
    return PayoffVector.from_mapping({a: float(v) for a, v in zip(param.agents, x)})


def _max_slack(rows: np.ndarray, rhs: np.ndarray, dim: int, bound: float) -> tuple[float, np.ndarray]:
    """Maximise ``t`` subject to ``rows @ y - t >= rhs`` inside a large box.

    Solves by enumerating every vertex of the constraint arrangement in
    ``(y, t)`` space; the box and the cap on ``t`` keep the polytope bounded.
    """
    a_rows = [np.append(r, -1.0) for r in rows]
    b_rows = list(rhs)
    for k in range(dim):
        e = np.zeros(dim + 1)
        e[k] = 1.0
        a_rows += [e, -e]
        b_rows += [-bound, -bound]
    cap = np.zeros(dim + 1)
    cap[-1] = -1.0
    a_rows.append(cap)
    b_rows.append(-bound)
    A = np.array(a_rows)
    b = np.array(b_rows)
    check_tol = 1e-9 * max(1.0, bound)
    best_t, best_z = -math.inf, None
    for subset in itertools.combinations(range(len(A)), dim + 1):
        sub = A[list(subset)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        z = np.linalg.solve(sub, b[list(subset)])
        if np.all(A @ z >= b - check_tol) and z[-1] > best_t + check_tol * 1e-3:
            best_t, best_z = z[-1], z
    if best_z is None:
        raise InvalidInputError("blocking system has no vertex; this indicates corrupt worths")
    return float(best_t), best_z[:-1]


def stable_payoff_region(
    partition: Partition,
    table: WorthTable,
    strict: bool = False,
    policy: BlockerPolicy = BlockerPolicy.FULL,
) -> Region:
    """Consistent payoffs of ``partition`` that no admissible coalition blocks."""
    param = _parametrise(partition, table)
    blockers = tuple(admissible_blockers(partition, policy))
    index = {a: k for k, a in enumerate(param.agents)}
    dim = param.basis.shape[1]
    rows = np.zeros((len(blockers), dim))
    rhs = np.zeros(len(blockers))
    for n, c in enumerate(blockers):
        member_idx = [index[a] for a in c]
        rows[n] = param.basis[member_idx].sum(axis=0)
        rhs[n] = pessimal_worth(c, table) - param.base[member_idx].sum()
    tol = blocking_tolerance(table)
    if not blockers:
        slack, y = math.inf, np.zeros(dim)
    elif dim == 0:
        slack, y = float(np.min(-rhs)), np.zeros(0)
    else:
        bound = 10.0 * (1.0 + table.scale())
        slack, y = _max_slack(rows, rhs, dim, bound)
    feasible = slack > tol if strict else slack >= -tol
    closest = _payoff(param, y)
    interval = None
    if dim == 1:
        lower, upper = -math.inf, math.inf
        for r, b in zip(rows[:, 0], rhs):
            if r > 0:
                lower = max(lower, b / r)
            elif r < 0:
                upper = min(upper, b / r)
        offset = param.base[index[param.free[0]]]
        interval = PayoffInterval(param.free[0], float(lower + offset), float(upper + offset))
    return Region(
        partition=partition,
        feasible=feasible,
        slack=slack + 0.0,
        witness=closest if feasible else None,
        closest=closest,
        dimension=dim,
        blockers=blockers,
        strict=strict,
        policy=policy,
        interval=interval,
    )


def restricted_stable_region(
    partition: Partition,
    table: WorthTable,
    policy: BlockerPolicy = BlockerPolicy.RESTRICTED,
    strict: bool = False,
) -> Region:
    """Stable region when only mergers, splits (and by default {M1, M2}) may block."""
    return stable_payoff_region(partition, table, strict=strict, policy=policy)


@dataclass(frozen=True)
class Verdict:
    partition: Partition
    stable: bool
    region: Region
    certificates: tuple[BlockCheck, ...] = ()


@dataclass(frozen=True)
class StabilityReport:
    """Verdict for every partition, plus the worths they rest on.

    For an unstable partition the certificates list the coalitions that block
    the consistent payoff closest to stability (the one maximising the
    smallest surplus), with their deficits.
    """

    verdicts: dict[Partition, Verdict]
    strict: bool
    policy: BlockerPolicy
    table: WorthTable = field(compare=False)

    @property
    def stable_partitions(self) -> list[Partition]:
        return [p for p, v in self.verdicts.items() if v.stable]


def partition_classification(
    source: Union[MarketParams, WorthTable],
    strict: bool = False,
    policy: BlockerPolicy = BlockerPolicy.FULL,
    partitions: Optional[Sequence[Partition]] = None,
) -> StabilityReport:
    table = source if isinstance(source, WorthTable) else compute_worth_table(source)
    verdicts: dict[Partition, Verdict] = {}
    for p in partitions or table.partitions:
        region = stable_payoff_region(p, table, strict=strict, policy=policy)
        certs: tuple[BlockCheck, ...] = ()
        if not region.feasible:
            config = Configuration(p, region.closest)
            checks = (blocks(c, config, table, strict) for c in region.blockers)
            certs = tuple(sorted((c for c in checks if c.blocked), key=lambda c: -c.deficit))
        verdicts[p] = Verdict(p, region.feasible, region, certs)
    return StabilityReport(verdicts, strict, policy, table)


def witness_survives(region: Region, table: WorthTable) -> bool:
    """Exhaustive check that the witness is consistent and unblocked."""
    if region.witness is None:
        return False
    config = Configuration(region.partition, region.witness)
    if not is_consistent(config, table, tol=1e-9):
        return False
    return not any(blocks(c, config, table, region.strict).blocked for c in region.blockers)


# ---------------------------------------------------------------------------
# Sweeps

SWEEP_PARTITIONS: tuple[Partition, ...] = PARTITIONS


@dataclass(frozen=True)
class SweepRow:
    ratio: float
    eps: float
    gamma: float
    stable: dict[str, bool]
    witness: Optional[PayoffVector]


@dataclass(frozen=True)
class SweepResult:
    rows: list[SweepRow]
    transitions: dict[tuple[float, float], Optional[float]]


def _sweep_cell(args: tuple) -> SweepRow:
    base, ratio, eps, gamma, strict, policy = args
    params = base.with_(dbar1=ratio * base.dbar2, eps=eps, gamma=gamma)
    report = partition_classification(params, strict=strict, policy=policy)
    stable = {p.name: report.verdicts[p].stable for p in SWEEP_PARTITIONS}
    witness = next(
        (report.verdicts[p].region.witness for p in SWEEP_PARTITIONS if report.verdicts[p].stable),
        None,
    )
    return SweepRow(ratio, eps, gamma, stable, witness)


def transition_ratio(rows: Sequence[SweepRow], partition_name: str = "PV1") -> Optional[float]:
    """Midpoint between the last ratio without stability and the first with it for good.

    Returns ``None`` when the partition is never stable at the top of the grid
    or is already stable at its bottom.
    """
    ordered = sorted(rows, key=lambda r: r.ratio)
    flags = [r.stable[partition_name] for r in ordered]
    if not flags or not flags[-1]:
        return None
    k = len(flags) - 1
    while k > 0 and flags[k - 1]:
        k -= 1
    if k == 0:
        return None
    return 0.5 * (ordered[k - 1].ratio + ordered[k].ratio)


def ratio_grid(lo: float, hi: float, step: float) -> list[float]:
    """Inclusive grid from ``lo`` to ``hi``, rounded so 0.05 steps print cleanly."""
    if not step > 0:
        raise InvalidInputError(f"ratio step must be positive, got {step}")
    if lo > hi:
        raise InvalidInputError(f"ratio range is empty: {lo} > {hi}")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + k * step, 12) for k in range(n + 1)]


def sweep_classification(
    base: MarketParams,
    ratios: Sequence[float],
    eps_list: Sequence[float],
    gamma_list: Sequence[float],
    strict: bool = False,
    policy: BlockerPolicy = BlockerPolicy.FULL,
    jobs: int = 1,
) -> SweepResult:
    """Classify every (ratio, eps, gamma) cell, with ``dbar1 = ratio * dbar2``.

    Rows come out ordered by eps, then gamma, then ratio, whatever ``jobs`` is.
    """
    if base.dbar2 <= 0:
        raise InvalidInputError("sweeps scale dbar1 off dbar2, which must be positive")
    cells = [
        (base, float(r), float(e), float(g), strict, policy)
        for e in eps_list
        for g in gamma_list
        for r in ratios
    ]
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells, chunksize=max(1, len(cells) // (4 * jobs))))
    else:
        rows = [_sweep_cell(c) for c in cells]
    transitions = {}
    for e in eps_list:
        for g in gamma_list:
            group = [r for r in rows if r.eps == float(e) and r.gamma == float(g)]
            transitions[(float(e), float(g))] = transition_ratio(group)
    return SweepResult(rows, transitions)


def vertical_interval_bounds(table: WorthTable, i: int = 1) -> tuple[float, float, float]:
    """Closed-form payoff band of manufacturer ``i`` in its vertical partition.

    Returns ``(lower, upper, gate)``: the band is ``[lower, upper]`` and the
    grand coalition does not block as long as ``gate >= 0``.
    """
    j = other(i)
    p = vertical_partition(i)
    nu_v = table.worth(p, vertical(i))
    nu_f = table.worth(p, manufacturer(j))
    lower = max(pessimal_worth(manufacturer(i), table), pessimal_worth(M, table) - nu_f)
    upper = nu_v - max(
        pessimal_worth(S, table),
        pessimal_worth(vertical(j), table) - nu_f,
    )
    gate = nu_v + nu_f - pessimal_worth(G, table)
    return lower, upper, gate


__all__ = [
    "BLOCKING_TOL",
    "BlockCheck",
    "PayoffInterval",
    "Region",
    "StabilityReport",
    "SweepResult",
    "SweepRow",
    "Verdict",
    "blocking_tolerance",
    "blocks",
    "partition_classification",
    "ratio_grid",
    "restricted_stable_region",
    "stable_payoff_region",
    "sweep_classification",
    "transition_ratio",
    "vertical_interval_bounds",
    "witness_survives",
]
