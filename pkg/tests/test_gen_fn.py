import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbpopt import (
    CRITICAL,
    SUBCRITICAL,
    SUPERCRITICAL,
    NoConvergence,
    criticality,
    eval_gen_fn,
    rho,
    rho_star,
    validate_cbp_model,
    validate_mechanism,
)
from conftest import bisect_min_root, mechanism_st, supercritical_mechanism_st


class TestEvalGenFn:
    def test_at_one_vanishes(self):
        mech = validate_mechanism({0: 1.0, 2: 2.0})
        assert abs(eval_gen_fn(mech, 1.0)) <= 1e-15

    def test_at_zero_equals_b0(self):
        mech = validate_mechanism({0: 1.0, 2: 2.0})
        assert eval_gen_fn(mech, 0.0) == 1.0

    def test_factored_root(self):
        # 1 - 3v + 2v^2 = (1 - v)(1 - 2v) vanishes at one half.
        mech = validate_mechanism({0: 1.0, 2: 2.0})
        assert abs(eval_gen_fn(mech, 0.5)) <= 1e-15

    @given(mechanism_st())
    def test_vanishes_at_one_generally(self, mech):
        assert abs(eval_gen_fn(mech, 1.0)) <= 1e-12 * mech.abs_b1


class TestRho:
    def test_supercritical_example(self):
        result = rho(validate_mechanism({0: 1.0, 2: 2.0}))
        assert result.criticality == SUPERCRITICAL
        assert abs(result.rho - 0.5) <= 1e-12

    def test_subcritical_returns_exactly_one(self):
        result = rho(validate_mechanism({0: 2.0, 2: 1.0}))
        assert result.rho == 1.0
        assert result.criticality == SUBCRITICAL

    def test_critical_returns_exactly_one(self):
        result = rho(validate_mechanism({0: 1.0, 2: 1.0}))
        assert result.rho == 1.0
        assert result.criticality == CRITICAL

    def test_no_death_root_zero(self):
        result = rho(validate_mechanism({0: 0.0, 2: 1.0}))
        assert result.rho == 0.0

    def test_max_iter_exhausted(self):
        with pytest.raises(NoConvergence):
            rho(validate_mechanism({0: 1.0, 2: 2.0}), tol=1e-13, max_iter=3)

    @given(supercritical_mechanism_st())
    @settings(max_examples=60, deadline=None)
    def test_iterates_monotone_and_bounded(self, mech):
        trace: list[float] = []
        result = rho(mech, trace=trace)
        assert all(b >= a for a, b in zip(trace, trace[1:]))
        assert all(0.0 <= v <= 1.0 for v in trace)
        assert 0.0 <= result.rho <= 1.0

    @given(mechanism_st())
    @settings(max_examples=60, deadline=None)
    def test_residual_scaled_bound(self, mech):
        tol = 1e-13
        result = rho(mech, tol=tol)
        assert result.residual <= 10.0 * tol * mech.abs_b1

    @given(mechanism_st())
    @settings(max_examples=60, deadline=None)
    def test_root_is_one_iff_not_supercritical(self, mech):
        result = rho(mech)
        assert (result.rho == 1.0) == (result.criticality in (SUBCRITICAL, CRITICAL))

    @given(mechanism_st(), st.sampled_from([0.5, 3.0]))
    @settings(max_examples=40, deadline=None)
    def test_rate_scaling_leaves_root_alone(self, mech, factor):
        scaled = validate_mechanism({k: factor * r for k, r in mech.support.items()})
        assert abs(rho(scaled).rho - rho(mech).rho) <= 1e-12

    @given(
        st.floats(min_value=0.1, max_value=10.0),
        st.floats(min_value=0.1, max_value=10.0),
    )
    @settings(max_examples=80, deadline=None)
    def test_quadratic_closed_form(self, d, b):
        result = rho(validate_mechanism({0: d, 2: b}))
        assert abs(result.rho - min(1.0, d / b)) <= 1e-10

    @given(supercritical_mechanism_st())
    @settings(max_examples=40, deadline=None)
    def test_against_bisection_oracle(self, mech):
        assert abs(rho(mech).rho - bisect_min_root(mech)) <= 1e-10


class TestCriticality:
    def test_drift_sign(self):
        assert criticality(validate_mechanism({0: 1.0, 2: 2.0})) == SUPERCRITICAL
        assert criticality(validate_mechanism({0: 2.0, 2: 1.0})) == SUBCRITICAL
        assert criticality(validate_mechanism({0: 1.0, 2: 1.0})) == CRITICAL


class TestRhoStar:
    def test_two_actions(self, two_action_model):
        roots = rho_star(two_action_model)
        assert roots.a_star == "a1"
        assert abs(roots.rho_star - 0.5) <= 1e-12
        assert roots.tied == ("a1",)

    def test_singleton(self):
        model = validate_cbp_model(1, {1: ["a1"]}, ["a1"], {"a1": {0: 1.0, 2: 2.0}})
        roots = rho_star(model)
        assert roots.a_star == "a1"
        assert roots.rho_star == roots.per_action["a1"].rho

    def test_tie_detection(self):
        # 2 - 6v + 4v^2 = 2 (1 - v)(1 - 2v): same root as the unscaled action.
        model = validate_cbp_model(
            1,
            {1: ["a1"]},
            ["a1", "a3"],
            {"a1": {0: 1.0, 2: 2.0}, "a3": {0: 2.0, 2: 4.0}},
        )
        assert abs(bisect_min_root(model.mechanism("a3")) - 0.5) <= 1e-9
        roots = rho_star(model)
        assert roots.tied == ("a1", "a3")
        assert roots.a_star == "a1"

    def test_no_convergence_names_action(self):
        model = validate_cbp_model(1, {1: ["a1"]}, ["a1"], {"a1": {0: 1.0, 2: 2.0}})
        with pytest.raises(NoConvergence, match="a1"):
            rho_star(model, max_iter=2)
