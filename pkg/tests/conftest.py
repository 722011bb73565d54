"""Shared fixtures, strategies, and independent oracles."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from cbpopt import (
    BranchingMechanism,
    CbpModel,
    eval_gen_fn,
    validate_cbp_model,
    validate_mechanism,
)


@pytest.fixture
def two_action_model() -> CbpModel:
    """m=1 model with a cheap-death and an eager-death action, tail pinned."""
    return validate_cbp_model(
        1,
        {1: ["a1", "a2"]},
        ["a1"],
        {"a1": {0: 1.0, 2: 2.0}, "a2": {0: 3.0, 2: 1.0}},
    )


@pytest.fixture
def zero_death_model() -> CbpModel:
    """m=2 model whose state 2 admits a no-death action."""
    return validate_cbp_model(
        2,
        {1: ["a1"], 2: ["z"]},
        ["a1"],
        {"a1": {0: 1.0, 2: 2.0}, "z": {2: 1.0}},
    )


def bisect_min_root(mech: BranchingMechanism, tol: float = 1e-12) -> float:
    """Independent root oracle: bisection on the generating function.

    The function is convex with value b0 >= 0 at zero and a zero at one; for
    supercritical mechanisms it is negative just left of one, so bisection on
    [0, 1 - 1e-9] brackets the smallest root.  Mechanisms without a sign
    change on that interval have smallest root 0 (b0 == 0) or 1.
    """
    if mech.b0 == 0.0:
        return 0.0
    lo, hi = 0.0, 1.0 - 1e-9
    if eval_gen_fn(mech, hi) >= 0.0:
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if eval_gen_fn(mech, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_mechanism_entries(
    rng: np.random.Generator,
    ks=(0, 2, 3),
    zero_death: bool = False,
    min_drift: float = 0.05,
) -> dict[int, float]:
    """Sparse rate entries with drift bounded away from zero.

    ``zero_death`` forces b0 = 0 (automatically supercritical); otherwise
    entries are redrawn until |drift| exceeds ``min_drift`` times the total
    rate, keeping root iterations fast.
    """
    birth_ks = [k for k in ks if k >= 2]
    for _ in range(200):
        entries = {k: float(rng.uniform(0.2, 3.0)) for k in birth_ks if rng.random() < 0.8}
        if not entries:
            entries = {birth_ks[0]: float(rng.uniform(0.2, 3.0))}
        if not zero_death and 0 in ks:
            entries[0] = float(rng.uniform(0.2, 3.0))
        total = sum(entries.values())
        drift = sum(k * r for k, r in entries.items()) - total
        if abs(drift) >= min_drift * total:
            return entries
    raise AssertionError("could not draw a mechanism away from criticality")


def random_cbp_model(
    rng: np.random.Generator,
    max_m: int = 4,
    max_actions: int = 3,
    ks=(0, 2, 3),
    zero_death_prob: float = 0.0,
) -> CbpModel:
    """Random small model; every action id is defined once and shared sets
    are drawn from the same pool."""
    m = int(rng.integers(1, max_m + 1))
    pool_size = int(rng.integers(2, 6))
    mechanisms = {}
    for idx in range(pool_size):
        zero_death = rng.random() < zero_death_prob
        mechanisms[f"a{idx}"] = random_mechanism_entries(rng, ks=ks, zero_death=zero_death)
    ids = sorted(mechanisms)

    def pick(k: int) -> list[str]:
        k = min(k, len(ids))
        chosen = rng.choice(len(ids), size=k, replace=False)
        return [ids[c] for c in chosen]

    admissible = {i: pick(int(rng.integers(1, max_actions + 1))) for i in range(1, m + 1)}
    tail = pick(int(rng.integers(1, max_actions + 1)))
    return validate_cbp_model(m, admissible, tail, mechanisms)


# Hypothesis strategies ------------------------------------------------------

rate_st = st.floats(min_value=0.05, max_value=20.0, allow_nan=False, allow_infinity=False)


@st.composite
def mechanism_st(draw, ks=(0, 2, 3, 4, 5), allow_zero_death: bool = True):
    birth_ks = [k for k in ks if k >= 2]
    chosen = draw(
        st.lists(st.sampled_from(birth_ks), min_size=1, max_size=len(birth_ks), unique=True)
    )
    entries = {k: draw(rate_st) for k in chosen}
    if 0 in ks and (not allow_zero_death or draw(st.booleans())):
        entries[0] = draw(rate_st)
    return validate_mechanism(entries)


@st.composite
def supercritical_mechanism_st(draw, ks=(0, 2, 3, 4, 5)):
    mech = draw(mechanism_st(ks=ks))
    total = sum(mech.support.values())
    if mech.drift() < 0.05 * total:
        bump = {k: r for k, r in mech.support.items()}
        top = max(k for k in bump if k >= 2)
        bump[top] = bump.get(top, 0.0) + 2.0 * total
        mech = validate_mechanism(bump)
    return mech
