"""Minimal hitting probabilities for general finite rate models.

Value iteration from zero converges upward to the smallest nonnegative
solution of the optimality equation, which is the minimal hitting probability;
the equation can have larger solutions, and starting anywhere else risks
landing on one of those.  Branching models are bridged in by truncating the
population to a finite window: jumps past the window are routed into the
cemetery (value zero), so truncated values are lower bounds that grow with
the window size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .errors import NoConvergence
from .model import CbpModel, GeneralModel, State, validate_general_model
from .solver import Policy, validate_policy

CEMETERY = "cemetery"

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10**7


@dataclass(frozen=True)
class HittingSolution:
    """Converged values (targets at 1, cemetery at 0), the greedy policy on
    interior states, and how the iteration stopped."""

    values: Mapping[State, float]
    policy: Mapping[State, str]
    iterations: int
    delta: float


class _Compiled(NamedTuple):
    interior: tuple
    index: dict
    row_const: np.ndarray
    row_action: tuple
    state_ptr: np.ndarray
    ent_row: np.ndarray
    ent_col: np.ndarray
    ent_weight: np.ndarray
    n_rows: int


def _compile(model: GeneralModel) -> _Compiled:
    """Flatten the update into bincount/reduceat-friendly arrays.

    One row per (state, action), grouped by state with actions in sorted
    order; entries carry normalized rates into interior states, target mass
    goes into the row constant, cemetery mass is dropped (value zero).
    """
    interior = model.interior_states()
    index = {s: pos for pos, s in enumerate(interior)}
    row_const: list[float] = []
    row_action: list[str] = []
    state_ptr: list[int] = []
    ent_row: list[int] = []
    ent_col: list[int] = []
    ent_weight: list[float] = []
    for s in interior:
        state_ptr.append(len(row_const))
        for a in model.actions_at(s):
            exit_rate = model.exit_rates[(s, a)]
            const = 0.0
            rid = len(row_const)
            for j, rate in model.rows[(s, a)].items():
                if j in model.target:
                    const += rate / exit_rate
                elif j == model.cemetery:
                    continue
                else:
                    ent_row.append(rid)
                    ent_col.append(index[j])
                    ent_weight.append(rate / exit_rate)
            row_const.append(const)
            row_action.append(a)
    return _Compiled(
        interior=interior,
        index=index,
        row_const=np.asarray(row_const, dtype=float),
        row_action=tuple(row_action),
        state_ptr=np.asarray(state_ptr, dtype=np.int64),
        ent_row=np.asarray(ent_row, dtype=np.int64),
        ent_col=np.asarray(ent_col, dtype=np.int64),
        ent_weight=np.asarray(ent_weight, dtype=float),
        n_rows=len(row_const),
    )


def _candidates(comp: _Compiled, x: np.ndarray) -> np.ndarray:
    flowin = np.bincount(
        comp.ent_row, weights=comp.ent_weight * x[comp.ent_col], minlength=comp.n_rows
    )
    return comp.row_const + flowin


def _greedy(comp: _Compiled, x: np.ndarray) -> dict:
    cand = _candidates(comp, x)
    policy = {}
    boundaries = list(comp.state_ptr) + [comp.n_rows]
    for pos, s in enumerate(comp.interior):
        lo, hi = boundaries[pos], boundaries[pos + 1]
        best = lo
        for r in range(lo + 1, hi):
            if cand[r] < cand[best]:
                best = r
        policy[s] = comp.row_action[best]
    return policy


def value_iterate(
    model: GeneralModel,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    trace: list | None = None,
) -> HittingSolution:
    """Monotone value iteration from zero with Jacobi sweeps.

    Stops when the sup-norm change of one sweep drops below ``tol``.
    ``trace``, when a list is given, collects a copy of every iterate.
    """
    comp = _compile(model)
    fixed = {s: (1.0 if s in model.target else 0.0) for s in model.states if s not in comp.index}
    if not comp.interior:
        return HittingSolution(values=fixed, policy={}, iterations=0, delta=0.0)
    x = np.zeros(len(comp.interior))
    if trace is not None:
        trace.append(x.copy())
    for sweep in range(1, max_iter + 1):
        xn = np.minimum.reduceat(_candidates(comp, x), comp.state_ptr)
        delta = float(np.max(np.abs(xn - x)))
        x = xn
        if trace is not None:
            trace.append(x.copy())
        if delta < tol:
            values = {
                s: (fixed[s] if s in fixed else float(x[comp.index[s]])) for s in model.states
            }
            return HittingSolution(
                values=values, policy=_greedy(comp, x), iterations=sweep, delta=delta
            )
    raise NoConvergence(f"value iteration still moving after {max_iter} sweeps")


def extract_policy(model: GeneralModel, values: Mapping[State, float]) -> dict:
    """Greedy argmin of the optimality equation at the given values,
    smallest action id on ties."""
    comp = _compile(model)
    x = np.asarray([values[s] for s in comp.interior], dtype=float)
    return _greedy(comp, x)


def cbp_truncate(model: CbpModel, policy: Policy | None, level: int) -> GeneralModel:
    """Window 0..level of a branching model, cemetery beyond.

    With a policy, each state keeps only the action the policy plays there;
    with ``None`` the full admissible sets survive.  Jumps past the window are
    redirected into the cemetery, making the truncated hitting values lower
    bounds on the untruncated ones, nondecreasing in ``level``.
    """
    if policy is not None:
        validate_policy(model, policy)
        used = {policy.action_at(i) for i in range(1, level + 1)}
    else:
        used = {a for choices in model.admissible for a in choices}
        used.update(model.tail_actions)
    reach = max(model.mechanism(a).max_k for a in used)
    if level <= model.m + reach:
        raise ValueError(
            f"truncation level {level} must exceed m + max offspring reach = {model.m + reach}"
        )
    states: list[State] = list(range(level + 1))
    states.append(CEMETERY)
    rows: dict[tuple[State, str], dict[State, float]] = {}
    for i in range(1, level + 1):
        if policy is not None:
            actions: tuple[str, ...] = (policy.action_at(i),)
        else:
            actions = model.actions_at(i)
        for a in actions:
            row: dict[State, float] = {}
            for k, rate in model.mechanism(a).support.items():
                j = i - 1 + k
                key: State = CEMETERY if j > level else j
                row[key] = row.get(key, 0.0) + i * rate
            rows[(i, a)] = row
    return validate_general_model(states, (0,), CEMETERY, rows)
