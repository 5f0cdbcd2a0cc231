import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from chaincoop.errors import InvalidInputError
from chaincoop.model import PA, PH, PV1, ActionProfile, M, M1, M2, MarketParams, S, V1
from chaincoop.oracle import GridSpec, grid_monopoly, lipschitz_bound
from chaincoop.pricing_core import evaluate_utilities, solve_quadratic_pricing


def test_reference_instance():
    sol = solve_quadratic_pricing(10, 2, 1, 3)
    assert sol.action == pytest.approx(3.0)
    assert sol.value == pytest.approx(5.0)
    assert sol.delta > 0 and not sol.degenerate


def test_large_fixed_cost_stays_out():
    sol = solve_quadratic_pricing(10, 2, 1, 1e6)
    assert sol.action is None and sol.value == 0.0


def test_zero_margin_operates_with_zero_value():
    # delta = 10 - 2 * 1 - 2 sqrt(2 * 8) = 0
    sol = solve_quadratic_pricing(10, 2, 1, 8)
    assert sol.degenerate and sol.operates and sol.value == 0.0


def test_rejects_bad_inputs():
    with pytest.raises(InvalidInputError):
        solve_quadratic_pricing(10, 0, 1, 0)
    with pytest.raises(InvalidInputError):
        solve_quadratic_pricing(10, 1, 1, -1)


@given(
    dbar=st.floats(0.5, 100),
    alpha=st.floats(0.1, 5),
    c=st.floats(0, 10),
    oc=st.floats(0, 50),
)
def test_closed_form_sandwiches_grid(dbar, alpha, c, oc):
    sol = solve_quadratic_pricing(dbar, alpha, c, oc)
    assume(not sol.degenerate)
    spec = GridSpec.for_market(dbar, alpha, c, points=500)
    action, value = grid_monopoly(dbar, alpha, c, oc, spec)
    bound = lipschitz_bound(dbar, alpha, c, spec) * spec.step
    assert value <= sol.value + 1e-9 * max(1.0, sol.value)
    assert sol.value - value <= bound
    if sol.operates and sol.delta > 1e-3 * dbar:
        assert action is not None and abs(action - sol.action) <= 2 * spec.step
    if not sol.operates:
        assert action is None


@given(dbar=st.floats(0.5, 100), alpha=st.floats(0.1, 5), c=st.floats(0, 10))
def test_value_never_negative(dbar, alpha, c):
    oc = dbar * dbar / (4 * alpha)
    sol = solve_quadratic_pricing(dbar, alpha, c, oc)
    assert sol.value >= 0.0
    assert math.isfinite(sol.delta)


def test_alone_utilities():
    p = MarketParams(dbar1=10, dbar2=10, eps=0.5, cS=1, cM1=1, cM2=1)
    u = evaluate_utilities(p, PA, ActionProfile({M1: 14.0, M2: 14.0}, quote=10.0))
    assert u[S] == pytest.approx(54.0)
    assert u[M1] == pytest.approx(9.0) and u[M2] == pytest.approx(9.0)


def test_supplier_without_quote_earns_nothing_and_buyers_lose_fixed_cost():
    p = MarketParams(dbar1=10, dbar2=10, oS=2, oM1=1, oM2=1)
    u = evaluate_utilities(p, PH, ActionProfile({M: 5.0}))
    assert u[S] == 0.0 and u[M] == -1.0


def test_vertical_requires_quote_when_follower_operates():
    p = MarketParams(dbar1=10, dbar2=10, eps=0.5)
    with pytest.raises(InvalidInputError):
        evaluate_utilities(p, PV1, ActionProfile({V1: 5.0, M2: 5.0}))


def test_vertical_instance():
    p = MarketParams(dbar1=10, dbar2=10, eps=0.5, cS=1, cM1=1, cM2=1)
    u = evaluate_utilities(p, PV1, ActionProfile({V1: 11.0, M2: 13.25}, quote=10.0))
    assert u[V1] == pytest.approx(70.875)
    assert u[M2] == pytest.approx(5.0625)
