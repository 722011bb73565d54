"""Embedded jump-chain rows and the discounted tail weight.

A branching jump from population i lands on i - 1 + k with probability
b_k / |b1|, independent of i after the shift; the self-transition is zero by
convention.  The tail weight folds the geometric continuation of values above
the head threshold back into the head system, closing it at finite size.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import InadmissibleAction
from .model import BranchingMechanism, GeneralModel, State


@dataclass(frozen=True)
class EmbeddedRow:
    state: int
    action: str | None
    entries: Mapping[int, float]


def embedded_row(mech: BranchingMechanism, i: int, action: str | None = None) -> EmbeddedRow:
    """One-jump distribution out of population i >= 1."""
    pmf = mech.offspring_pmf()
    return EmbeddedRow(
        state=i,
        action=action,
        entries=MappingProxyType({i - 1 + k: p for k, p in pmf.items()}),
    )


def tail_weight(mech: BranchingMechanism, i: int, m: int, rho_star: float) -> float:
    """sum over j >= m of p(j|i) * rho_star**(j - m).

    The j = m term carries weight one even at rho_star = 0; the self
    transition (j = i) never appears because k = 1 is not in the support.
    Terms are accumulated in ascending j with Kahan compensation.
    """
    scale = mech.abs_b1
    total = 0.0
    comp = 0.0
    for k, rate in mech.support.items():  # stored in ascending k, hence ascending j
        j = i - 1 + k
        if j < m:
            continue
        term = (rate / scale) * rho_star ** (j - m)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def embedded_general(model: GeneralModel, policy: Mapping[State, str]) -> np.ndarray:
    """Dense one-jump transition matrix under a fixed action per state.

    Rows follow ``model.states`` order; target and cemetery states get
    identity rows.
    """
    index = {s: pos for pos, s in enumerate(model.states)}
    n = len(model.states)
    matrix = np.zeros((n, n))
    for s in model.states:
        r = index[s]
        if s in model.target or s == model.cemetery:
            matrix[r, r] = 1.0
            continue
        action = policy.get(s)
        if action is None or action not in model.actions_at(s):
            raise InadmissibleAction(
                f"state {s!r}: action {action!r} is not admissible", state=s
            )
        exit_rate = model.exit_rates[(s, action)]
        for j, rate in model.rows[(s, action)].items():
            matrix[r, index[j]] = rate / exit_rate
    return matrix
