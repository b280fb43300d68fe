"""
Program Generator
Seeded random acyclic programs for property suites and oracle sweeps
"""
from typing import List, Optional, Sequence

import numpy as np

from wcet.ir import Assign, Assume, Condition, CostAnnotation, Transition, TransitionSystem
from wcet.linear import LinExpr, Rel

# Blocks 0/4 and 1/5 collide for 4 cache sets
DEFAULT_BLOCKS = (0, 1, 4, 5)

_GUARD_RELATIONS = (Rel.GE, Rel.LE, Rel.LT, Rel.GT)


def _guard(rng: np.random.Generator, variables: Sequence[str]) -> Condition:
    rel = Rel.EQ if rng.random() < 0.1 else _GUARD_RELATIONS[rng.integers(len(_GUARD_RELATIONS))]
    k = int(rng.integers(-3, 4))
    x = variables[rng.integers(len(variables))]
    if len(variables) > 1 and rng.random() < 0.4:
        y = variables[rng.integers(len(variables))]
        if y != x:
            return Condition(LinExpr.var(x) - LinExpr.var(y), rel, LinExpr.constant(k))
    return Condition(LinExpr.var(x), rel, LinExpr.constant(k))


def _update(rng: np.random.Generator, variables: Sequence[str]) -> Assign:
    x = variables[rng.integers(len(variables))]
    source = variables[rng.integers(len(variables))]
    return Assign(x, LinExpr.var(source) + LinExpr.constant(int(rng.integers(-2, 3))))


def _cost(rng: np.random.Generator, max_cost: int, blocks: Sequence[int]) -> CostAnnotation:
    count = int(rng.integers(0, 3))
    accesses = tuple(int(b) for b in rng.choice(blocks, size=count)) if blocks else ()
    return CostAnnotation(int(rng.integers(0, max_cost + 1)), accesses)


def random_program(seed: int, branches: Optional[int] = None, max_branches: int = 12,
                   max_vars: int = 4, max_cost: int = 5,
                   blocks: Sequence[int] = DEFAULT_BLOCKS) -> TransitionSystem:
    """
    A chain of diamonds with complementary guards on each pair of arms.

    Every feasible state keeps a feasible continuation, and all guards use
    unit coefficients so the constraint systems stay integral.

    Args:
        seed: generator seed
        branches: exact number of diamonds (random in 1..max_branches if None)
    """
    rng = np.random.default_rng(seed)
    n = branches if branches is not None else int(rng.integers(1, max_branches + 1))
    variables = [f"v{i}" for i in range(int(rng.integers(1, max_vars + 1)))]

    points: List[str] = []
    transitions: List[Transition] = []

    def emit(src: str, dst: str, op, cost: CostAnnotation) -> None:
        transitions.append(Transition(len(transitions), src, dst, op, cost))

    for i in range(n):
        join, then_arm, else_arm, after = f"j{i}", f"t{i}", f"e{i}", f"j{i + 1}"
        points.extend([join, then_arm, else_arm])
        guard = _guard(rng, variables)
        emit(join, then_arm, Assume(guard), _cost(rng, max_cost, blocks))
        emit(join, else_arm, Assume(guard.negate()), _cost(rng, max_cost, blocks))
        emit(then_arm, after, _update(rng, variables), _cost(rng, max_cost, blocks))
        emit(else_arm, after, _update(rng, variables), _cost(rng, max_cost, blocks))
    points.append(f"j{n}")

    return TransitionSystem(
        vars=tuple(variables),
        points=tuple(points),
        start="j0",
        transitions=tuple(transitions),
        terminals=frozenset({f"j{n}"}),
    )


def chain_program(n: int) -> TransitionSystem:
    """n tautological diamonds: 2**n feasible paths."""
    points = [f"j{i}" for i in range(n + 1)]
    always = Assume(Condition(LinExpr.constant(0), Rel.LE, LinExpr.constant(0)))
    transitions = []
    for i in range(n):
        for cost in (1, 2):
            transitions.append(Transition(len(transitions), f"j{i}", f"j{i + 1}", always, CostAnnotation(cost)))
    return TransitionSystem((), tuple(points), "j0", tuple(transitions), frozenset({f"j{n}"}))
