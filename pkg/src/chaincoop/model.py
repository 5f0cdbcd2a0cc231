"""Domain types for the supplier / two-manufacturer chain and its demand functions.

Three agents exist: the supplier ``S`` and the manufacturers ``M1`` and ``M2``.
A coalition is a nonempty set of agents and a partition is a disjoint cover of
the agents by coalitions.  The module also holds the exogenous market
parameters, the action bundle a partition plays, and the linear demand model.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Iterable, Iterator, Mapping, Optional

from .errors import InvalidInputError


class Agent(enum.Enum):
    SUPPLIER = "S"
    MANUFACTURER1 = "M1"
    MANUFACTURER2 = "M2"

    @property
    def label(self) -> str:
        return self.value


AGENTS: tuple[Agent, ...] = (Agent.SUPPLIER, Agent.MANUFACTURER1, Agent.MANUFACTURER2)

_AGENT_ORDER = {agent: k for k, agent in enumerate(AGENTS)}


@dataclass(frozen=True)
class Coalition:
    """A nonempty set of agents acting as one unit."""

    members: frozenset[Agent]

    def __post_init__(self) -> None:
        members = frozenset(self.members)
        if not members:
            raise InvalidInputError("a coalition needs at least one member")
        if not all(isinstance(m, Agent) for m in members):
            raise InvalidInputError("coalition members must be Agent values")
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, *agents: Agent) -> "Coalition":
        return cls(frozenset(agents))

    @classmethod
    def from_name(cls, name: str) -> "Coalition":
        try:
            return _COALITIONS_BY_NAME[name.strip()]
        except KeyError:
            raise InvalidInputError(f"unknown coalition name {name!r}") from None

    @property
    def name(self) -> str:
        return _COALITION_NAMES.get(self.members) or "{" + ",".join(
            a.label for a in self.ordered_members()
        ) + "}"

    def ordered_members(self) -> tuple[Agent, ...]:
        return tuple(sorted(self.members, key=_AGENT_ORDER.__getitem__))

    @property
    def has_supplier(self) -> bool:
        return Agent.SUPPLIER in self.members

    @property
    def manufacturers(self) -> tuple[int, ...]:
        """Indices (1 and/or 2) of the manufacturers in the coalition."""
        out = []
        if Agent.MANUFACTURER1 in self.members:
            out.append(1)
        if Agent.MANUFACTURER2 in self.members:
            out.append(2)
        return tuple(out)

    def __contains__(self, agent: object) -> bool:
        return agent in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Agent]:
        return iter(self.ordered_members())

    def __repr__(self) -> str:
        return f"Coalition({self.name})"

    def __lt__(self, other: "Coalition") -> bool:
        return _coalition_sort_key(self) < _coalition_sort_key(other)


def _coalition_sort_key(c: Coalition) -> tuple:
    return (len(c), tuple(_AGENT_ORDER[a] for a in c.ordered_members()))


S = Coalition.of(Agent.SUPPLIER)
M1 = Coalition.of(Agent.MANUFACTURER1)
M2 = Coalition.of(Agent.MANUFACTURER2)
M = Coalition.of(Agent.MANUFACTURER1, Agent.MANUFACTURER2)
V1 = Coalition.of(Agent.SUPPLIER, Agent.MANUFACTURER1)
V2 = Coalition.of(Agent.SUPPLIER, Agent.MANUFACTURER2)
G = Coalition.of(*AGENTS)

ALL_COALITIONS: tuple[Coalition, ...] = (S, M1, M2, M, V1, V2, G)

_COALITION_NAMES = {
    S.members: "S",
    M1.members: "M1",
    M2.members: "M2",
    M.members: "M",
    V1.members: "V1",
    V2.members: "V2",
    G.members: "G",
}
_COALITIONS_BY_NAME = {name: Coalition(members) for members, name in _COALITION_NAMES.items()}


def manufacturer(i: int) -> Coalition:
    """Singleton coalition of manufacturer ``i`` (1 or 2)."""
    return {1: M1, 2: M2}[_check_index(i)]


def vertical(i: int) -> Coalition:
    """Supplier plus manufacturer ``i``."""
    return {1: V1, 2: V2}[_check_index(i)]


def _check_index(i: int) -> int:
    if i not in (1, 2):
        raise InvalidInputError(f"manufacturer index must be 1 or 2, got {i!r}")
    return i


def other(i: int) -> int:
    return 3 - _check_index(i)


def nonempty_coalitions(agents: Iterable[Agent]) -> list[Coalition]:
    """Every nonempty subset of ``agents``, smallest first."""
    pool = sorted(set(agents), key=_AGENT_ORDER.__getitem__)
    out = [
        Coalition(frozenset(combo))
        for size in range(1, len(pool) + 1)
        for combo in itertools.combinations(pool, size)
    ]
    return sorted(out)


@dataclass(frozen=True, eq=False)
class Partition:
    """A disjoint cover of a set of agents by coalitions.

    Equality and hashing depend only on the coalition set, so the display name
    never distinguishes two partitions.
    """

    coalitions: tuple[Coalition, ...]
    label: Optional[str] = None

    def __post_init__(self) -> None:
        coalitions = tuple(sorted(set(self.coalitions)))
        if not coalitions:
            raise InvalidInputError("a partition needs at least one coalition")
        seen: set[Agent] = set()
        for c in coalitions:
            if seen & c.members:
                raise InvalidInputError("partition coalitions must be pairwise disjoint")
            seen |= c.members
        object.__setattr__(self, "coalitions", coalitions)

    @classmethod
    def from_name(cls, name: str) -> "Partition":
        key = name.strip().upper()
        try:
            return _PARTITIONS_BY_NAME[key]
        except KeyError:
            raise InvalidInputError(
                f"unknown partition {name!r}; expected one of "
                + ", ".join(sorted(_PARTITIONS_BY_NAME))
            ) from None

    @property
    def agents(self) -> frozenset[Agent]:
        return frozenset().union(*(c.members for c in self.coalitions))

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        return _PARTITION_NAMES.get(self._key()) or "|".join(c.name for c in self.coalitions)

    @property
    def alias(self) -> str:
        """Arrangement name: GC, ALC, HC, VC1 or VC2."""
        return _ALIASES.get(self._key(), self.name)

    def _key(self) -> frozenset[Coalition]:
        return frozenset(self.coalitions)

    def coalition_of(self, agent: Agent) -> Coalition:
        for c in self.coalitions:
            if agent in c:
                return c
        raise InvalidInputError(f"agent {agent.label} is not covered by {self.name}")

    def __contains__(self, coalition: object) -> bool:
        return coalition in self.coalitions

    def __iter__(self) -> Iterator[Coalition]:
        return iter(self.coalitions)

    def __len__(self) -> int:
        return len(self.coalitions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __repr__(self) -> str:
        return f"Partition({self.name})"


PG = Partition((G,))
PA = Partition((S, M1, M2))
PH = Partition((S, M))
PV1 = Partition((V1, M2))
PV2 = Partition((V2, M1))

PARTITIONS: tuple[Partition, ...] = (PG, PA, PH, PV1, PV2)

_PARTITION_NAMES = {
    frozenset(PG.coalitions): "PG",
    frozenset(PA.coalitions): "PA",
    frozenset(PH.coalitions): "PH",
    frozenset(PV1.coalitions): "PV1",
    frozenset(PV2.coalitions): "PV2",
}
_ALIASES = {
    frozenset(PG.coalitions): "GC",
    frozenset(PA.coalitions): "ALC",
    frozenset(PH.coalitions): "HC",
    frozenset(PV1.coalitions): "VC1",
    frozenset(PV2.coalitions): "VC2",
}
_PARTITIONS_BY_NAME = {}
for _p in PARTITIONS:
    _PARTITIONS_BY_NAME[_p.name] = _p
    _PARTITIONS_BY_NAME[_p.alias] = _p


#: The single-manufacturer chain is the two-agent world {S, M1}.
CHAIN_ALONE = Partition((S, M1), label="chain-ALC")
CHAIN_GRAND = Partition((V1,), label="chain-GC")


def vertical_partition(i: int) -> Partition:
    return {1: PV1, 2: PV2}[_check_index(i)]


def enumerate_partitions() -> list[Partition]:
    """The five partitions of {S, M1, M2}: PG, PA, PH, PV1, PV2."""
    return list(PARTITIONS)


def customer_facing(partition: Partition) -> tuple[Coalition, ...]:
    """Coalitions of ``partition`` that sell to end customers (those holding a manufacturer)."""
    return tuple(c for c in partition.coalitions if c.manufacturers)


class BlockerPolicy(enum.Enum):
    """Which coalitions may block a configuration.

    ``FULL`` admits every coalition outside the partition.  ``MERGERS_SPLITS``
    admits unions of whole members and proper subsets of a single member.
    ``RESTRICTED`` adds the manufacturer block {M1, M2} to the mergers and
    splits, which is the admissible set under which both vertical partitions
    are stable for symmetric markets near the essential regime.
    """

    FULL = "full"
    MERGERS_SPLITS = "mergers-splits"
    RESTRICTED = "restricted"

    @classmethod
    def parse(cls, text: str) -> "BlockerPolicy":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise InvalidInputError(
                f"unknown blocker policy {text!r}; expected one of "
                + ", ".join(p.value for p in cls)
            ) from None


def admissible_blockers(
    partition: Partition, policy: BlockerPolicy = BlockerPolicy.FULL
) -> list[Coalition]:
    """Coalitions allowed to block a configuration on ``partition``."""
    members = set(partition.coalitions)
    if policy is BlockerPolicy.FULL:
        return [c for c in nonempty_coalitions(partition.agents) if c not in members]
    found: set[Coalition] = set()
    for size in range(2, len(partition.coalitions) + 1):
        for combo in itertools.combinations(partition.coalitions, size):
            found.add(Coalition(frozenset().union(*(c.members for c in combo))))
    for c in partition.coalitions:
        for sub in nonempty_coalitions(c.members):
            if sub != c:
                found.add(sub)
    if policy is BlockerPolicy.RESTRICTED and M.members <= partition.agents:
        found.add(M)
    return sorted(found - members)


@dataclass(frozen=True)
class MarketParams:
    """Exogenous parameters of the chain.

    ``dbar*`` are dedicated market sizes, ``alphaTilde*`` the raw price
    sensitivities, ``eps`` the share of price-repelled customers that switch to
    the rival, ``gamma`` the essentialness of the product, ``c*`` unit costs and
    ``o*`` fixed operating costs.  Field names follow the JSON schema.
    """

    dbar1: float
    dbar2: float
    alphaTilde1: float = 1.0
    alphaTilde2: float = 1.0
    eps: float = 0.0
    gamma: float = 0.0
    cS: float = 0.0
    cM1: float = 0.0
    cM2: float = 0.0
    oS: float = 0.0
    oM1: float = 0.0
    oM2: float = 0.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise InvalidInputError(f"{f.name} must be numeric, got {value!r}")
            if not math.isfinite(value):
                raise InvalidInputError(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, float(value))
        for name in ("dbar1", "dbar2", "cS", "cM1", "cM2", "oS", "oM1", "oM2"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be nonnegative")
        if self.alphaTilde1 <= 0 or self.alphaTilde2 <= 0:
            raise InvalidInputError("alphaTilde1 and alphaTilde2 must be positive")
        if not 0.0 <= self.eps <= 1.0:
            raise InvalidInputError("eps must lie in [0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidInputError("gamma must lie in [0, 1)")

    # Per-manufacturer accessors keep index arithmetic out of the solvers.
    def dbar(self, i: int) -> float:
        return self.dbar1 if _check_index(i) == 1 else self.dbar2

    def alpha_tilde(self, i: int) -> float:
        return self.alphaTilde1 if _check_index(i) == 1 else self.alphaTilde2

    def alpha(self, i: int) -> float:
        return self.alpha_tilde(i) * (1.0 - self.gamma)

    def cM(self, i: int) -> float:
        return self.cM1 if _check_index(i) == 1 else self.cM2

    def oM(self, i: int) -> float:
        return self.oM1 if _check_index(i) == 1 else self.oM2

    @property
    def alpha1(self) -> float:
        return self.alpha(1)

    @property
    def alpha2(self) -> float:
        return self.alpha(2)

    @property
    def dbarM(self) -> float:
        return self.dbar1 + self.dbar2

    @property
    def alphaM(self) -> float:
        return min(self.alpha1, self.alpha2)

    @property
    def cM_min(self) -> float:
        return min(self.cM1, self.cM2)

    @property
    def oM_min(self) -> float:
        return min(self.oM1, self.oM2)

    @property
    def cG(self) -> float:
        return self.cS + self.cM_min

    @property
    def oG(self) -> float:
        return self.oS + self.oM_min

    @property
    def equal_alpha(self) -> bool:
        return self.alphaTilde1 == self.alphaTilde2

    def satisfies_a2(self) -> bool:
        """Total market size clears every coalition's unit and fixed cost hurdle."""
        hurdle = max(2.0 * self.oS, self.oG, 4.0 * self.oM_min)
        return self.dbarM > self.alphaM * self.cG + 2.0 * math.sqrt(self.alphaM * hurdle)

    def swapped(self) -> "MarketParams":
        """Same market with the manufacturer labels exchanged."""
        return replace(
            self,
            dbar1=self.dbar2,
            dbar2=self.dbar1,
            alphaTilde1=self.alphaTilde2,
            alphaTilde2=self.alphaTilde1,
            cM1=self.cM2,
            cM2=self.cM1,
            oM1=self.oM2,
            oM2=self.oM1,
        )

    def with_(self, **changes: float) -> "MarketParams":
        return replace(self, **changes)

    @classmethod
    def single_chain(
        cls, dbar: float, alpha: float, cS: float, cM: float, oS: float, oM: float
    ) -> "MarketParams":
        """Parameters of a chain with one manufacturer, stored in the market-1 slots.

        The second market is empty and the essentialness is zero, so
        ``alpha`` is used as the price sensitivity directly.
        """
        return cls(
            dbar1=dbar, dbar2=0.0, alphaTilde1=alpha, alphaTilde2=alpha,
            eps=0.0, gamma=0.0, cS=cS, cM1=cM, cM2=cM, oS=oS, oM1=oM, oM2=oM,
        )

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "MarketParams":
        if not isinstance(data, Mapping):
            raise InvalidInputError("market parameters must be a JSON object")
        expected = {f.name for f in fields(cls)}
        missing = expected - set(data)
        extra = set(data) - expected
        if missing or extra:
            parts = []
            if missing:
                parts.append("missing " + ", ".join(sorted(missing)))
            if extra:
                parts.append("unexpected " + ", ".join(sorted(extra)))
            raise InvalidInputError("bad parameter keys: " + "; ".join(parts))
        return cls(**{k: data[k] for k in expected})  # type: ignore[arg-type]

    @classmethod
    def from_json(cls, text: str) -> "MarketParams":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


#: A retail price or wholesale quote; ``None`` stands for the non-operating action.
Action = Optional[float]


@dataclass(frozen=True)
class ActionProfile:
    """Actions of every coalition in one partition.

    ``quote`` is the wholesale price charged by the supplier-side coalition
    (``None`` when no quote is posted).  ``prices`` maps each customer-facing
    coalition to its retail price, with ``None`` meaning it does not operate.
    The supplier operates in ALC and HC exactly when a quote is present.
    """

    prices: Mapping[Coalition, Action] = field(default_factory=dict)
    quote: Action = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "prices", dict(self.prices))
        for c, p in self.prices.items():
            _check_price(p, c.name)
        _check_price(self.quote, "quote")

    def price(self, coalition: Coalition) -> Action:
        return self.prices.get(coalition)

    def operates(self, coalition: Coalition) -> bool:
        if coalition == S:
            return self.quote is not None
        return self.prices.get(coalition) is not None


def _check_price(p: Action, what: str) -> None:
    if p is None:
        return
    if not math.isfinite(p):
        raise InvalidInputError(f"{what} price must be finite, got {p!r}")
    if p < 0:
        raise InvalidInputError(f"{what} price must be nonnegative, got {p!r}")


@dataclass(frozen=True)
class PayoffVector:
    xS: float
    xM1: float
    xM2: float = 0.0

    def of(self, agent: Agent) -> float:
        return {
            Agent.SUPPLIER: self.xS,
            Agent.MANUFACTURER1: self.xM1,
            Agent.MANUFACTURER2: self.xM2,
        }[agent]

    def total(self, coalition: Coalition) -> float:
        return math.fsum(self.of(a) for a in coalition)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.xS, self.xM1, self.xM2)

    @classmethod
    def from_mapping(cls, values: Mapping[Agent, float]) -> "PayoffVector":
        return cls(
            values.get(Agent.SUPPLIER, 0.0),
            values.get(Agent.MANUFACTURER1, 0.0),
            values.get(Agent.MANUFACTURER2, 0.0),
        )


@dataclass(frozen=True)
class Configuration:
    partition: Partition
    payoff: PayoffVector


def is_consistent(config: Configuration, worths, tol: float = 1e-9) -> bool:
    """True when every coalition of the partition receives exactly its worth.

    ``worths`` is any object exposing ``worth(partition, coalition)``, for
    instance a :class:`chaincoop.worths.WorthTable`.
    """
    for c in config.partition:
        nu = worths.worth(config.partition, c)
        if abs(config.payoff.total(c) - nu) > tol * max(1.0, abs(nu)):
            return False
    return True


def _market_demand(params: MarketParams, i: int, p: float, p_other: float) -> float:
    j = other(i)
    raw = params.dbar(i) - params.alpha(i) * p + params.eps * params.alpha(j) * p_other
    return max(0.0, raw)


def demand_profile(
    params: MarketParams, partition: Partition, actions: ActionProfile
) -> dict[Coalition, float]:
    """Demand seen by each customer-facing coalition of ``partition``.

    Separate sellers in the two markets face cross-linked linear demand, with a
    non-operating rival counting as price zero.  A coalition holding both
    manufacturers sells in one merged market with no cross term.  Coalitions
    that do not operate sell nothing.
    """
    facing = customer_facing(partition)
    _check_price_keys(partition, actions, facing)
    out: dict[Coalition, float] = {}
    if len(facing) == 1:
        (c,) = facing
        p = actions.price(c)
        if len(c.manufacturers) == 2:
            out[c] = 0.0 if p is None else max(0.0, params.dbarM - params.alphaM * p)
        else:
            (i,) = c.manufacturers
            out[c] = 0.0 if p is None else _market_demand(params, i, p, 0.0)
        return out
    by_market = {c.manufacturers[0]: c for c in facing}
    for i, c in by_market.items():
        p = actions.price(c)
        if p is None:
            out[c] = 0.0
            continue
        p_other = actions.price(by_market[other(i)])
        out[c] = _market_demand(params, i, p, 0.0 if p_other is None else p_other)
    return out


def _check_price_keys(
    partition: Partition, actions: ActionProfile, facing: tuple[Coalition, ...]
) -> None:
    stray = [c.name for c in actions.prices if c not in facing]
    if stray:
        raise InvalidInputError(
            f"prices given for {', '.join(stray)}, which do not sell to customers in {partition.name}"
        )
