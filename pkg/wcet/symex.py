"""
Symbolic Execution
Symbolic states, the symbolic step over one transition, projection onto
program variables and exact path costing
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple, Union

from wcet import config
from wcet.cache import CacheConfig, ConcreteCacheState, cache_state_after, path_cost, transition_cost
from wcet.errors import PreconditionError, WcetError
from wcet.ir import Assign, Transition, TransitionSystem
from wcet.lattice import Value
from wcet.linear import Conjunction, Constraint, LinExpr, Rel
from wcet.solver import LinearSolver, Result, default_solver

logger = logging.getLogger(__name__)


class ProjectionIncomplete(WcetError):
    """Variable elimination exceeded its cap; `fallback` is a sound weaker result."""

    def __init__(self, message: str, fallback: Conjunction):
        super().__init__(message)
        self.fallback = fallback


def input_symbol(var: str) -> str:
    """Name of the symbolic input standing for var's initial value."""
    return f"${var}"


def is_input_symbol(name: str) -> bool:
    return name.startswith('$')


@dataclass(frozen=True)
class SymbolicState:
    point: str
    store: Tuple[Tuple[str, LinExpr], ...]
    path_condition: Conjunction
    trail: Tuple[Transition, ...]
    cache: ConcreteCacheState
    prefix_cost: int

    @property
    def store_map(self) -> Dict[str, LinExpr]:
        return dict(self.store)

    def lookup(self, var: str) -> LinExpr:
        return self.store_map[var]


@dataclass(frozen=True)
class Infeasible:
    """Result of stepping an assume whose guard contradicts the path condition."""
    parent: SymbolicState
    transition: Transition
    refuted: Constraint


StepResult = Union[SymbolicState, Infeasible]


def initial_state(ts: TransitionSystem, cfg: CacheConfig) -> SymbolicState:
    store = tuple((v, LinExpr.var(input_symbol(v))) for v in sorted(ts.vars))
    return SymbolicState(ts.start, store, Conjunction.true(), (), ConcreteCacheState.empty(cfg), 0)


def symstep(v: SymbolicState, t: Transition, cfg: CacheConfig,
            solver: Optional[LinearSolver] = None) -> StepResult:
    """
    Symbolically execute one transition.

    Assumes extend the path condition and are refuted only on a proven
    Unsat; Unknown counts as feasible. Assignments update the store.
    """
    if t.src != v.point:
        raise PreconditionError(f"transition {t.src} -> {t.dst} does not leave {v.point}")
    solver = solver or default_solver()
    store = v.store_map
    path_condition = v.path_condition

    if isinstance(t.op, Assign):
        store[t.op.var] = t.op.expr.substitute(v.store_map)
    else:
        guard = t.op.cond.normalize().substitute(store)
        if guard.is_false:
            return Infeasible(v, t, guard)
        if not guard.is_true:
            path_condition = path_condition.conjoin([guard])
            if solver.check(path_condition) == Result.UNSAT:
                logger.debug(f"Refuted {t.op} at {v.point}")
                return Infeasible(v, t, guard)

    cache, cost = transition_cost(v.cache, t, cfg)
    return SymbolicState(
        point=t.dst,
        store=tuple(sorted(store.items())),
        path_condition=path_condition,
        trail=v.trail + (t,),
        cache=cache,
        prefix_cost=v.prefix_cost + cost,
    )


def replay(v: SymbolicState, path: Iterable[Transition], cfg: CacheConfig,
           solver: Optional[LinearSolver] = None) -> StepResult:
    """Step a whole transition sequence; stops at the first infeasible step."""
    for t in path:
        result = symstep(v, t, cfg, solver)
        if isinstance(result, Infeasible):
            return result
        v = result
    return v


def theta(v: SymbolicState, ts: TransitionSystem) -> Value:
    """Exact cost of the complete path that reached a terminal state."""
    if not ts.is_terminal(v.point):
        raise PreconditionError(f"theta needs a terminal state, {v.point} is not terminal")
    return v.prefix_cost


def check_state(v: SymbolicState, cfg: CacheConfig) -> bool:
    """Derived fields agree with a from-scratch simulation of the trail."""
    return (path_cost(v.trail, cfg) == v.prefix_cost
            and cache_state_after(v.trail, cfg) == v.cache)


# ============================================================================
# Projection
# ============================================================================

def _combine(c: Constraint, eq: Constraint, symbol: str) -> Constraint:
    """Eliminate symbol from c using the equality eq."""
    a = eq.coeff(symbol)
    d = c.coeff(symbol)
    scale, sign = abs(a), (1 if a > 0 else -1)
    coeffs: Dict[str, int] = {}
    for var, k in c.terms:
        coeffs[var] = coeffs.get(var, 0) + scale * k
    for var, k in eq.terms:
        coeffs[var] = coeffs.get(var, 0) - sign * d * k
    return Constraint.make(coeffs, c.rel, scale * c.bound - sign * d * eq.bound)


def _resolve(upper: Constraint, lower: Constraint, symbol: str) -> Constraint:
    """Fourier–Motzkin resolvent of a positive and a negative occurrence."""
    p, n = upper.coeff(symbol), -lower.coeff(symbol)
    coeffs: Dict[str, int] = {}
    for var, k in upper.terms:
        coeffs[var] = coeffs.get(var, 0) + n * k
    for var, k in lower.terms:
        coeffs[var] = coeffs.get(var, 0) + p * k
    return Constraint.make(coeffs, Rel.LE, n * upper.bound + p * lower.bound)


def _dedupe(constraints: Iterable[Constraint]) -> List[Constraint]:
    seen: List[Constraint] = []
    for c in constraints:
        if c.is_true or c in seen:
            continue
        seen.append(c)
    return seen


def eliminate(constraints: List[Constraint], symbols: Iterable[str],
              cap: int = config.PROJECTION_CAP) -> Conjunction:
    """
    Existentially eliminate symbols (substitution first, then Fourier–Motzkin).

    Raises:
        ProjectionIncomplete: when the working set exceeds cap constraints
    """
    work = _dedupe(constraints)
    for symbol in sorted(symbols):
        if any(c.is_false for c in work):
            return Conjunction.false()
        mentioning = [c for c in work if c.coeff(symbol) != 0]
        if not mentioning:
            continue
        rest = [c for c in work if c.coeff(symbol) == 0]
        equalities = [c for c in mentioning if c.rel == Rel.EQ]
        if equalities:
            pivot = min(equalities, key=lambda c: (abs(c.coeff(symbol)), len(c.terms)))
            work = rest + [_combine(c, pivot, symbol) for c in mentioning if c is not pivot]
        else:
            positive = [c for c in mentioning if c.rel == Rel.LE and c.coeff(symbol) > 0]
            negative = [c for c in mentioning if c.rel == Rel.LE and c.coeff(symbol) < 0]
            # Disequalities over an eliminated symbol are dropped (weaker, still sound)
            work = rest + [_resolve(p, n, symbol) for p in positive for n in negative]
        work = _dedupe(work)
        if len(work) > cap:
            remaining = set(symbols)
            fallback = [c for c in work if not (c.variables() & remaining)]
            raise ProjectionIncomplete(
                f"elimination of {symbol} produced {len(work)} constraints (cap {cap})",
                Conjunction.true().conjoin(fallback))
    if any(c.is_false for c in work):
        return Conjunction.false()
    return Conjunction.true().conjoin(work)


def project(v: SymbolicState, strict: bool = False, cap: int = config.PROJECTION_CAP) -> Conjunction:
    """
    ⟦v⟧ as a conjunction over program variables: one equality per store
    entry conjoined with the path condition, inputs eliminated.

    Args:
        strict: raise ProjectionIncomplete instead of returning the fallback
    """
    constraints = []
    for var, term in v.store:
        coeffs = {var: 1}
        for symbol, k in term.terms:
            coeffs[symbol] = coeffs.get(symbol, 0) - k
        constraints.append(Constraint.make(coeffs, Rel.EQ, term.const))
    constraints.extend(v.path_condition.constraints)

    symbols = set()
    for c in constraints:
        symbols |= {s for s in c.variables() if is_input_symbol(s)}
    try:
        return eliminate(constraints, symbols, cap)
    except ProjectionIncomplete as e:
        if strict:
            raise
        logger.warning(f"Projection at {v.point} incomplete, using weaker result: {e}")
        return e.fallback
