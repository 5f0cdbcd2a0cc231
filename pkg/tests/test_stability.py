import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaincoop.errors import InvalidInputError
from chaincoop.model import (
    CHAIN_ALONE,
    CHAIN_GRAND,
    PA,
    PARTITIONS,
    PG,
    PH,
    PV1,
    PV2,
    Agent,
    BlockerPolicy,
    Configuration,
    G,
    M,
    M1,
    M2,
    MarketParams,
    PayoffVector,
    S,
    V1,
    V2,
)
from chaincoop.stability import (
    blocks,
    partition_classification,
    ratio_grid,
    restricted_stable_region,
    stable_payoff_region,
    sweep_classification,
    transition_ratio,
    vertical_interval_bounds,
    witness_survives,
)
from chaincoop.worths import compute_worth_table, single_chain_worth_table


def test_blocks_rejects_members(symmetric_table):
    with pytest.raises(InvalidInputError):
        blocks(S, Configuration(PA, PayoffVector(54, 9, 9)), symmetric_table)


def test_ties_block_only_in_strict_mode(symmetric_table):
    config = Configuration(PG, PayoffVector(60.75, 10.125, 10.125))
    loose = blocks(V1, config, symmetric_table)
    strict = blocks(V1, config, symmetric_table, strict=True)
    assert loose.deficit == pytest.approx(0.0, abs=1e-9)
    assert not loose.blocked and strict.blocked


def test_single_chain_core():
    table = single_chain_worth_table(10, 1, 1, 1, 0, 0)
    region = stable_payoff_region(CHAIN_GRAND, table)
    assert region.feasible
    assert region.witness.as_tuple()[:2] == pytest.approx((10.0, 6.0))
    assert region.interval.agent is Agent.MANUFACTURER1
    assert (region.interval.lower, region.interval.upper) == pytest.approx((4.0, 8.0))
    assert not stable_payoff_region(CHAIN_ALONE, table).feasible


def test_symmetric_classification(symmetric_table):
    report = partition_classification(symmetric_table)
    assert report.stable_partitions == [PG]
    pa = report.verdicts[PA]
    assert {c.coalition for c in pa.certificates} == {G, V1, V2, M}
    config = Configuration(PA, pa.region.closest)
    for cert in pa.certificates:
        assert blocks(cert.coalition, config, symmetric_table).blocked


def test_strict_mode_empties_boundary_core(symmetric_table):
    report = partition_classification(symmetric_table, strict=True)
    assert report.stable_partitions == []
    assert report.strict


def test_eps_zero_column_keeps_grand_coalition():
    for ratio in (1.0, 3.0):
        p = MarketParams(dbar1=10 * ratio, dbar2=10, gamma=0.5, cS=1, cM1=1, cM2=1)
        assert PG in partition_classification(p).stable_partitions


def test_vertical_interval_matches_closed_expressions(near_esm):
    table = compute_worth_table(near_esm(5))
    region = stable_payoff_region(PV1, table)
    lower, upper, gate = vertical_interval_bounds(table, 1)
    assert region.interval.lower == pytest.approx(lower, rel=1e-9)
    assert region.interval.upper == pytest.approx(upper, rel=1e-9)
    assert gate >= 0
    assert region.feasible
    assert lower <= region.witness.xM1 <= upper


def test_restricted_region_bound_near_symmetric_corner(near_esm):
    table = compute_worth_table(near_esm(1))
    region = restricted_stable_region(PV1, table)
    floor = table.worth(PH, M) - table.worth(PV1, M2)
    assert region.feasible
    assert region.interval.lower == pytest.approx(max(floor, table.pessimal(M1)), rel=1e-9)
    config = Configuration(PV1, PayoffVector(table.worth(PV1, V1) - floor - 1.0, floor + 1.0, table.worth(PV1, M2)))
    for c in region.blockers:
        assert not blocks(c, config, table).blocked


@pytest.mark.parametrize("partition", PARTITIONS)
@pytest.mark.parametrize("ratio", [1.0, 2.0, 5.0])
def test_more_blockers_never_help(near_esm, partition, ratio):
    table = compute_worth_table(near_esm(ratio))
    slacks = [
        stable_payoff_region(partition, table, policy=policy).slack
        for policy in (BlockerPolicy.MERGERS_SPLITS, BlockerPolicy.RESTRICTED, BlockerPolicy.FULL)
    ]
    assert slacks[0] >= slacks[1] >= slacks[2]


@settings(max_examples=40, deadline=None)
@given(
    d1=st.floats(1, 20), d2=st.floats(1, 20), eps=st.floats(0, 0.95),
    gamma=st.floats(0, 0.9), c=st.floats(0, 1),
)
def test_witnesses_survive_exhaustive_scan(d1, d2, eps, gamma, c):
    p = MarketParams(dbar1=d1, dbar2=d2, eps=eps, gamma=gamma, cS=c, cM1=c, cM2=c)
    for strict in (False, True):
        report = partition_classification(p, strict=strict)
        for verdict in report.verdicts.values():
            if verdict.stable:
                assert witness_survives(verdict.region, report.table)
            else:
                assert verdict.certificates
        if strict:
            assert set(report.stable_partitions) <= set(loose)
        else:
            loose = report.stable_partitions


def test_ratio_grid():
    grid = ratio_grid(1.0, 6.0, 0.05)
    assert len(grid) == 101 and grid[0] == 1.0 and grid[-1] == 6.0
    assert grid[28] == 2.4
    with pytest.raises(InvalidInputError):
        ratio_grid(2.0, 1.0, 0.1)
    with pytest.raises(InvalidInputError):
        ratio_grid(1.0, 2.0, 0.0)


def test_sweep_rows_are_ordered_and_parallel_safe():
    base = MarketParams(dbar1=1, dbar2=10, cS=1, cM1=1, cM2=1)
    ratios = [1.0, 2.0, 2.4, 2.45, 3.0]
    serial = sweep_classification(base, ratios, [0.999, 0.9], [0.9999])
    parallel = sweep_classification(base, ratios, [0.999, 0.9], [0.9999], jobs=3)
    assert serial == parallel
    assert [(r.eps, r.ratio) for r in serial.rows] == [(e, r) for e in (0.999, 0.9) for r in ratios]
    assert serial.transitions[(0.999, 0.9999)] == pytest.approx(2.425)


def test_transition_needs_stable_tail():
    base = MarketParams(dbar1=1, dbar2=10, cS=1, cM1=1, cM2=1)
    result = sweep_classification(base, [1.0, 1.5], [0.999], [0.9999])
    assert transition_ratio(result.rows) is None


def test_sweep_requires_positive_base_market():
    with pytest.raises(InvalidInputError):
        sweep_classification(MarketParams(dbar1=1, dbar2=0), [1.0], [0.5], [0.5])


def test_near_esm_ratio_five_only_first_vertical(near_esm):
    report = partition_classification(near_esm(5))
    assert report.stable_partitions == [PV1]
    for p in (PG, PA, PH, PV2):
        assert not report.verdicts[p].region.feasible
    assert math.isfinite(report.verdicts[PV1].region.interval.upper)
