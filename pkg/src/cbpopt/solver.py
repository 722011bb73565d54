"""Exact policy iteration for the minimal extinction probability of a
controlled branching model.

Head states 1..m carry free action choices; every state above m plays one
pinned tail action whose generating-function root is smallest over the shared
tail set.  Each policy is evaluated by one small linear solve: either the
m-dimensional system closed by the geometric tail weight, or, when the policy
plays a no-death action somewhere in the head, the smaller system in front of
the first such state with exact zeros behind it.  Improvement replaces an
action only where its one-jump value strictly beats the current value, so the
extinction profile decreases monotonically and the iteration visits each head
policy at most once.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import gen_fn
from .embedded import embedded_row, tail_weight
from .errors import (
    IterationBound,
    InadmissibleAction,
    NumericalError,
    SingularSystem,
    TooManyPolicies,
)
from .linsys import UnitSystem, solve_unit
from .model import CbpModel

GEOMETRIC = "geometric"
ZERO = "zero"

DEFAULT_BRUTE_CAP = 100_000
# Attainment slack when matching the componentwise minimum to one policy.
_ATTAIN_TOL = 1e-12
# Profiles solved under tied tail actions must agree this closely.
_TIE_PROFILE_TOL = 1e-8


@dataclass(frozen=True)
class Policy:
    """Stationary policy: explicit head choices for 1..m, one pinned tail action."""

    head: tuple[str, ...]
    tail: str

    @property
    def m(self) -> int:
        return len(self.head)

    def action_at(self, i: int) -> str:
        if i < 1:
            raise ValueError("population states start at 1")
        return self.head[i - 1] if i <= len(self.head) else self.tail


@dataclass(frozen=True)
class ExtinctionProfile:
    """Extinction probabilities with a closed-form tail.

    ``head_values`` covers states 1..m.  A geometric tail continues above m
    with ratio ``rho_star``; a zero tail is identically zero from ``i0`` on
    (``i0 <= m``, so the zeros already show in the head).  ``residual`` is the
    sup-norm defect of the linear system behind the head values.
    """

    head_values: tuple[float, ...]
    tail_kind: str
    rho_star: float | None = None
    i0: int | None = None
    residual: float = 0.0

    @property
    def m(self) -> int:
        return len(self.head_values)

    def ep(self, i: int) -> float:
        if i < 1:
            raise ValueError("population states start at 1")
        if i <= self.m:
            return self.head_values[i - 1]
        if self.tail_kind == ZERO:
            return 0.0
        return self.rho_star ** (i - self.m) * self.head_values[-1]


@dataclass(frozen=True)
class IterationRecord:
    policy: Policy
    profile: ExtinctionProfile
    improved_states: tuple[int, ...]


@dataclass(frozen=True)
class SolveReport:
    optimal_policy: Policy
    optimal_profile: ExtinctionProfile
    zero_death_cutoff: int
    rho_star: float
    a_star: str
    tied: tuple[str, ...]
    iterations: tuple[IterationRecord, ...]
    oe_residual: float
    dont_care_states: tuple[int, ...]


def zero_death_cutoff(model: CbpModel) -> int:
    """Smallest head state where a no-death action is admissible, m+1 if none.

    Only the head action sets are consulted; the shared tail set plays no
    role here.
    """
    for i in range(1, model.m + 1):
        if min(model.mechanism(a).b0 for a in model.admissible[i - 1]) == 0.0:
            return i
    return model.m + 1


def default_policy(model: CbpModel, tail: str) -> Policy:
    """Smallest-id head choice at every state, with the given tail action."""
    return Policy(head=tuple(choices[0] for choices in model.admissible), tail=tail)


def validate_policy(model: CbpModel, f: Policy) -> None:
    if len(f.head) != model.m:
        raise InadmissibleAction(
            f"policy head covers {len(f.head)} states but the model has m={model.m}"
        )
    for i in range(1, model.m + 1):
        if f.head[i - 1] not in model.admissible[i - 1]:
            raise InadmissibleAction(
                f"action {f.head[i - 1]!r} is not admissible at state {i}", state=i
            )
    if f.tail not in model.tail_actions:
        raise InadmissibleAction(f"tail action {f.tail!r} is not in the shared tail set")


def _head_system(model, f, rho_star_value):
    """Linear system whose solution is the policy's head extinction values."""
    m = model.m
    b0s = [model.mechanism(f.head[i - 1]).b0 for i in range(1, m + 1)]
    if min(b0s) > 0.0:
        size = m
        kind, i0 = GEOMETRIC, None
    else:
        i0 = next(i for i in range(1, m + 1) if b0s[i - 1] == 0.0)
        size = i0 - 1
        kind = ZERO
    U = np.zeros((size, size))
    c = np.zeros(size)
    for i in range(1, size + 1):
        mech = model.mechanism(f.head[i - 1])
        row = embedded_row(mech, i).entries
        c[i - 1] = row.get(0, 0.0)
        span = m - 1 if kind == GEOMETRIC else size
        for j, p in row.items():
            if 1 <= j <= span:
                U[i - 1, j - 1] = p
        if kind == GEOMETRIC:
            U[i - 1, m - 1] = tail_weight(mech, i, m, rho_star_value)
    return UnitSystem(U, c), kind, i0


def evaluate_policy(model: CbpModel, f: Policy, rho_star: float) -> ExtinctionProfile:
    """Extinction probabilities of one policy whose tail root equals ``rho_star``.

    With no-death actions absent from the policy's head, the head system is
    m-dimensional and the tail continues geometrically; otherwise states from
    the first no-death choice on are exactly zero and only the states in front
    of it need a solve.
    """
    validate_policy(model, f)
    system, kind, i0 = _head_system(model, f, rho_star)
    try:
        x = solve_unit(system)
    except SingularSystem as exc:
        label = "geometric-tail" if kind == GEOMETRIC else "zero-tail"
        raise SingularSystem(
            f"policy evaluation ({label} case, {system.n}-state system): {exc}"
        ) from exc
    residual = float(np.abs(x - system.U @ x - system.c).max()) if system.n else 0.0
    head = [min(1.0, max(0.0, float(v))) for v in x]
    if kind == GEOMETRIC:
        return ExtinctionProfile(
            head_values=tuple(head),
            tail_kind=GEOMETRIC,
            rho_star=float(rho_star),
            residual=residual,
        )
    head.extend([0.0] * (model.m - len(head)))
    return ExtinctionProfile(
        head_values=tuple(head), tail_kind=ZERO, i0=i0, residual=residual
    )


def _one_jump_value(model, i, action, values, rho_star_value):
    """One-jump value at state i with the geometric tail folded in."""
    m = model.m
    mech = model.mechanism(action)
    row = embedded_row(mech, i).entries
    total = row.get(0, 0.0)
    for j, p in row.items():
        if 1 <= j <= m - 1:
            total += p * values[j - 1]
    return total + tail_weight(mech, i, m, rho_star_value) * values[m - 1]


def _one_jump_value_truncated(model, i, action, values, cutoff):
    """One-jump value at state i counting only states below ``cutoff``."""
    row = embedded_row(model.mechanism(action), i).entries
    total = row.get(0, 0.0)
    for j, p in row.items():
        if 1 <= j <= cutoff - 1:
            total += p * values[j - 1]
    return total


def improve_policy(model: CbpModel, f: Policy, profile: ExtinctionProfile) -> Policy:
    """One improvement sweep; returns f unchanged at its fixed point.

    An action enters the improvement set only when its one-jump value is
    strictly below the current value, and the replacement is the smallest-id
    action among those attaining the minimum.  When a no-death action exists
    at some head state, only states up to the first such state are improved
    (with values truncated there); later head states are never touched.
    """
    validate_policy(model, f)
    m = model.m
    cutoff = zero_death_cutoff(model)
    values = [profile.ep(i) for i in range(1, m + 1)]
    head = list(f.head)
    if cutoff == m + 1:
        if profile.rho_star is None:
            raise ValueError("geometric-tail improvement needs the profile's tail ratio")
        for i in range(1, m + 1):
            current = values[i - 1]
            best_action, best_value = None, math.inf
            for a in model.admissible[i - 1]:
                v = _one_jump_value(model, i, a, values, profile.rho_star)
                if v < current and v < best_value:
                    best_action, best_value = a, v
            if best_action is not None:
                head[i - 1] = best_action
    else:
        for i in range(1, cutoff + 1):
            current = values[i - 1]
            best_action, best_value = None, math.inf
            for a in model.admissible[i - 1]:
                v = _one_jump_value_truncated(model, i, a, values, cutoff)
                if v < current and v < best_value:
                    best_action, best_value = a, v
            if best_action is not None:
                head[i - 1] = best_action
    return Policy(head=tuple(head), tail=f.tail)


def _policy_iteration(model, rho_star_value, tail, start_head=None):
    if start_head is None:
        f = default_policy(model, tail)
    else:
        head = list(default_policy(model, tail).head)
        for i, a in start_head.items():
            if not isinstance(i, int) or not 1 <= i <= model.m:
                raise InadmissibleAction(
                    f"start policy assigns state {i!r} outside 1..{model.m}", state=i
                )
            head[i - 1] = a
        f = Policy(head=tuple(head), tail=tail)
    records = []
    bound = model.head_policy_count()
    for _ in range(bound):
        profile = evaluate_policy(model, f, rho_star_value)
        improved = improve_policy(model, f, profile)
        changed = tuple(
            i for i in range(1, model.m + 1) if improved.head[i - 1] != f.head[i - 1]
        )
        records.append(IterationRecord(policy=f, profile=profile, improved_states=changed))
        if not changed:
            return records
        f = improved
    raise IterationBound(
        f"no fixed point within the {bound} distinct head policies; this is a defect"
    )


def solve(
    model: CbpModel,
    tol: float = gen_fn.DEFAULT_ROOT_TOL,
    max_iter: int = gen_fn.DEFAULT_MAX_ITER,
    start_head: Mapping[int, str] | None = None,
    exhaustive_ties: bool = False,
) -> SolveReport:
    """Optimal stationary policy and minimal extinction probabilities.

    Runs root finding over the tail set, pins the smallest-id tied action as
    the tail, iterates evaluate/improve from the smallest-id head policy (or
    ``start_head`` overrides), and certifies the result by the optimality
    equation residual.  ``exhaustive_ties`` re-solves with every tied tail
    action and demands matching profiles.
    """
    cutoff = zero_death_cutoff(model)
    roots = gen_fn.rho_star(model, tol=tol, max_iter=max_iter)
    records = _policy_iteration(model, roots.rho_star, roots.a_star, start_head)
    final = records[-1]
    residual = verify_oe(model, final.profile, rho_star_value=roots.rho_star)
    if exhaustive_ties:
        for alt in roots.tied[1:]:
            alt_final = _policy_iteration(model, roots.rho_star, alt, start_head)[-1]
            for i in range(1, model.m + 1):
                gap = abs(alt_final.profile.ep(i) - final.profile.ep(i))
                if gap > _TIE_PROFILE_TOL:
                    raise NumericalError(
                        f"tied tail actions {roots.a_star!r} and {alt!r} disagree at"
                        f" state {i} by {gap:.3e}"
                    )
    dont_care = tuple(range(cutoff + 1, model.m + 1))
    return SolveReport(
        optimal_policy=final.policy,
        optimal_profile=final.profile,
        zero_death_cutoff=cutoff,
        rho_star=roots.rho_star,
        a_star=roots.a_star,
        tied=roots.tied,
        iterations=tuple(records),
        oe_residual=residual,
        dont_care_states=dont_care,
    )


def verify_oe(
    model: CbpModel, profile: ExtinctionProfile, rho_star_value: float | None = None
) -> float:
    """Sup-norm residual of the optimality equation at the given profile.

    Without no-death actions the equation runs over all head states with the
    geometric tail weight; otherwise it runs over the states in front of the
    cutoff, and the residual additionally includes any nonzero value at or
    beyond the cutoff (those states must be exactly zero at the optimum).
    """
    m = model.m
    cutoff = zero_death_cutoff(model)
    values = [profile.ep(i) for i in range(1, m + 1)]
    worst = 0.0
    if cutoff == m + 1:
        if rho_star_value is None:
            rho_star_value = (
                profile.rho_star
                if profile.rho_star is not None
                else gen_fn.rho_star(model).rho_star
            )
        for i in range(1, m + 1):
            best = min(
                _one_jump_value(model, i, a, values, rho_star_value)
                for a in model.admissible[i - 1]
            )
            worst = max(worst, abs(values[i - 1] - best))
    else:
        for i in range(1, cutoff):
            best = min(
                _one_jump_value_truncated(model, i, a, values, cutoff)
                for a in model.admissible[i - 1]
            )
            worst = max(worst, abs(values[i - 1] - best))
        for i in range(cutoff, m + 1):
            worst = max(worst, abs(values[i - 1]))
    return worst


def brute_force_table(
    model: CbpModel, cap: int = DEFAULT_BRUTE_CAP
) -> tuple[ExtinctionProfile, list[tuple[Policy, ExtinctionProfile]]]:
    """Evaluate every head policy; return the componentwise minimum and the table."""
    count = model.head_policy_count()
    if count > cap:
        raise TooManyPolicies(f"{count} head policies exceed the cap of {cap}")
    roots = gen_fn.rho_star(model)
    table = []
    for combo in itertools.product(*model.admissible):
        f = Policy(head=tuple(combo), tail=roots.a_star)
        table.append((f, evaluate_policy(model, f, roots.rho_star)))
    m = model.m
    floor = [min(p.head_values[i] for _, p in table) for i in range(m)]
    for _, p in table:
        if all(p.head_values[i] <= floor[i] + _ATTAIN_TOL for i in range(m)):
            return p, table
    # No single policy matched the floor within tolerance; fall back to the
    # componentwise minimum with the tail kind the model dictates.
    worst_residual = max(p.residual for _, p in table)
    cutoff = zero_death_cutoff(model)
    if cutoff <= m:
        profile = ExtinctionProfile(
            head_values=tuple(floor), tail_kind=ZERO, i0=cutoff, residual=worst_residual
        )
    else:
        profile = ExtinctionProfile(
            head_values=tuple(floor),
            tail_kind=GEOMETRIC,
            rho_star=roots.rho_star,
            residual=worst_residual,
        )
    return profile, table


def brute_force(model: CbpModel, cap: int = DEFAULT_BRUTE_CAP) -> ExtinctionProfile:
    """Componentwise minimum over all head policies (oracle for ``solve``)."""
    return brute_force_table(model, cap)[0]
