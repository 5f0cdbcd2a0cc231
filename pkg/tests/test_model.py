import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from chaincoop.errors import InvalidInputError
from chaincoop.model import (
    ALL_COALITIONS,
    PA,
    PARTITIONS,
    PG,
    PH,
    PV1,
    PV2,
    ActionProfile,
    Agent,
    BlockerPolicy,
    Coalition,
    G,
    M,
    M1,
    M2,
    MarketParams,
    Partition,
    PayoffVector,
    S,
    V1,
    V2,
    admissible_blockers,
    demand_profile,
    enumerate_partitions,
)

PARAM_KEYS = {
    "dbar1", "dbar2", "alphaTilde1", "alphaTilde2", "eps", "gamma",
    "cS", "cM1", "cM2", "oS", "oM1", "oM2",
}


def test_five_partitions_cover_three_agents():
    assert set(enumerate_partitions()) == set(PARTITIONS)
    for p in PARTITIONS:
        assert p.agents == frozenset(Agent)
        members = [a for c in p for a in c]
        assert len(members) == 3


@pytest.mark.parametrize(
    "name,expected",
    [("PG", PG), ("gc", PG), ("ALC", PA), ("HC", PH), ("VC1", PV1), ("pv2", PV2)],
)
def test_partition_names_and_aliases(name, expected):
    assert Partition.from_name(name) == expected


def test_unknown_partition_name():
    with pytest.raises(InvalidInputError):
        Partition.from_name("VC3")


def test_coalition_names_round_trip():
    for c in ALL_COALITIONS:
        assert Coalition.from_name(c.name) == c
    assert G.name == "G" and M.name == "M"


def test_partition_must_be_disjoint():
    with pytest.raises(InvalidInputError):
        Partition((V1, M1, M2))


def test_full_blockers_are_complement():
    assert set(admissible_blockers(PG)) == set(ALL_COALITIONS) - {G}
    assert len(admissible_blockers(PA)) == 4


def test_restricted_policy_adds_manufacturer_block():
    splits = set(admissible_blockers(PV1, BlockerPolicy.MERGERS_SPLITS))
    assert splits == {G, S, M1}
    restricted = set(admissible_blockers(PV1, BlockerPolicy.RESTRICTED))
    assert restricted == splits | {M}
    assert BlockerPolicy.parse("Restricted") is BlockerPolicy.RESTRICTED


@pytest.mark.parametrize("policy", list(BlockerPolicy))
@pytest.mark.parametrize("partition", PARTITIONS)
def test_policies_are_nested(policy, partition):
    assert set(admissible_blockers(partition, policy)) <= set(admissible_blockers(partition))


def test_params_json_round_trip():
    params = MarketParams(dbar1=3, dbar2=2, eps=0.25, gamma=0.5, cS=1, oM2=0.5)
    data = json.loads(params.to_json())
    assert set(data) == PARAM_KEYS
    assert MarketParams.from_json(params.to_json()) == params


@pytest.mark.parametrize(
    "text",
    ['{"dbar1": 1}', "[1, 2]", "not json", json.dumps({k: 1 for k in PARAM_KEYS} | {"extra": 0})],
)
def test_params_json_rejects_bad_documents(text):
    with pytest.raises(InvalidInputError):
        MarketParams.from_json(text)


@pytest.mark.parametrize(
    "changes",
    [{"dbar1": -1}, {"alphaTilde1": 0}, {"eps": 1.5}, {"gamma": 1.0}, {"cS": float("nan")}],
)
def test_params_validation(changes):
    with pytest.raises(InvalidInputError):
        MarketParams(**({"dbar1": 1, "dbar2": 1} | changes))


def test_derived_quantities():
    p = MarketParams(dbar1=4, dbar2=6, alphaTilde1=2, alphaTilde2=3, gamma=0.5, cS=1, cM1=2, cM2=1.5, oS=1, oM1=3, oM2=2)
    assert p.alpha1 == 1.0 and p.alpha2 == 1.5
    assert p.dbarM == 10 and p.alphaM == 1.0
    assert p.cG == 2.5 and p.oG == 3.0
    assert p.swapped().swapped() == p


def test_action_profile_rejects_negative_prices():
    with pytest.raises(InvalidInputError):
        ActionProfile({M1: -1.0})


def test_demand_cross_linking():
    p = MarketParams(dbar1=10, dbar2=10, eps=0.5)
    d = demand_profile(p, PA, ActionProfile({M1: 8.0, M2: 6.0}, quote=1.0))
    assert d[M1] == pytest.approx(10 - 8 + 0.5 * 6)
    assert d[M2] == pytest.approx(10 - 6 + 0.5 * 8)
    # A rival that stays out counts as price zero.
    d = demand_profile(p, PA, ActionProfile({M1: 8.0, M2: None}, quote=1.0))
    assert d[M1] == pytest.approx(2.0) and d[M2] == 0.0


def test_demand_merged_block_has_no_cross_term():
    p = MarketParams(dbar1=10, dbar2=6, alphaTilde1=1, alphaTilde2=2, eps=0.9)
    d = demand_profile(p, PH, ActionProfile({M: 4.0}, quote=1.0))
    assert d[M] == pytest.approx(16 - 1.0 * 4)


def test_demand_rejects_prices_for_non_facing_coalitions():
    p = MarketParams(dbar1=1, dbar2=1)
    with pytest.raises(InvalidInputError):
        demand_profile(p, PV1, ActionProfile({V2: 1.0}))


@given(
    xs=st.floats(-100, 100), x1=st.floats(-100, 100), x2=st.floats(-100, 100)
)
def test_payoff_totals_are_additive(xs, x1, x2):
    x = PayoffVector(xs, x1, x2)
    assert x.total(G) == pytest.approx(x.total(S) + x.total(M))
    assert x.total(V1) + x.total(V2) == pytest.approx(x.total(G) + x.total(S))
