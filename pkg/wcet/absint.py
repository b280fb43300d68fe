"""
Abstract Interpretation
Interval environments plus must-cache propagated forward over the unrolled
DAG, backward worst-case costing and witness path extraction
"""
import logging
import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, List, Mapping, Optional, Tuple

import networkx as nx

from wcet.cache import (AbstractCacheState, CacheConfig, abstract_join,
                        abstract_transition_cost)
from wcet.errors import PreconditionError, WcetError
from wcet.ir import Assign, Transition, TransitionSystem
from wcet.lattice import WCET, Value
from wcet.linear import Constraint, LinExpr, Rel
from wcet.solver import LinearSolver, default_solver
from wcet.symex import ProjectionIncomplete, SymbolicState, eliminate, project

logger = logging.getLogger(__name__)

INF = math.inf


class CyclicGraphError(WcetError):
    """Abstract interpretation only runs on acyclic (unrolled) systems."""


@dataclass(frozen=True)
class Interval:
    """Integer interval; infinite ends are ±math.inf."""
    lo: float = -INF
    hi: float = INF

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"Invalid interval: [{self.lo}, {self.hi}]")

    @property
    def is_top(self) -> bool:
        return self.lo == -INF and self.hi == INF

    def contains(self, other: 'Interval') -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def hull(self, other: 'Interval') -> 'Interval':
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


TOP = Interval()


@dataclass(frozen=True)
class AbstractContext:
    """
    Interval per variable plus the must-cache.

    Variables without an entry are unconstrained. Hashable, so it serves as
    the memo key of the interpreter.
    """
    intervals: Tuple[Tuple[str, Interval], ...]
    cache: AbstractCacheState

    @classmethod
    def top(cls, cfg: CacheConfig) -> 'AbstractContext':
        return cls((), AbstractCacheState.unknown(cfg))

    @classmethod
    def build(cls, intervals: Mapping[str, Interval], cache: AbstractCacheState) -> 'AbstractContext':
        return cls(tuple(sorted((v, iv) for v, iv in intervals.items() if not iv.is_top)), cache)

    def interval(self, var: str) -> Interval:
        return dict(self.intervals).get(var, TOP)

    def as_dict(self) -> Dict[str, Interval]:
        return dict(self.intervals)

    def leq(self, other: 'AbstractContext') -> bool:
        """Pointwise containment in other plus the must-cache order."""
        if not all(iv.contains(self.interval(var)) for var, iv in other.intervals):
            return False
        return self.cache.leq(other.cache)

    def join(self, other: 'AbstractContext') -> 'AbstractContext':
        mine, theirs = self.as_dict(), other.as_dict()
        hull = {v: mine[v].hull(theirs[v]) for v in mine.keys() & theirs.keys()}
        return AbstractContext.build(hull, abstract_join(self.cache, other.cache))


@dataclass(frozen=True)
class AiResult:
    lower: Value
    upper: Value
    witness: Tuple[Tuple[Transition, ...], ...]
    per_point_upper: Mapping[str, Value] = field(default_factory=dict)
    contexts: Mapping[str, AbstractContext] = field(default_factory=dict)
    feasible: bool = True


# ============================================================================
# Interval arithmetic
# ============================================================================

def _range(terms, const: int, env: Mapping[str, Interval]) -> Interval:
    lo, hi = const, const
    for var, c in terms:
        iv = env.get(var, TOP)
        if c > 0:
            lo, hi = lo + c * iv.lo, hi + c * iv.hi
        else:
            lo, hi = lo + c * iv.hi, hi + c * iv.lo
    return Interval(lo, hi)


def evaluate(expr: LinExpr, env: Mapping[str, Interval]) -> Interval:
    return _range(expr.terms, expr.const, env)


def definitely_false(c: Constraint, env: Mapping[str, Interval]) -> bool:
    if c.is_false:
        return True
    r = _range(c.terms, 0, env)
    if c.rel == Rel.LE:
        return r.lo > c.bound
    if c.rel == Rel.EQ:
        return not (r.lo <= c.bound <= r.hi)
    return r.lo == r.hi == c.bound


def _tighten_le(terms, bound: int, env: Dict[str, Interval]) -> None:
    for j, (var, cj) in enumerate(terms):
        rest = _range(terms[:j] + terms[j + 1:], 0, env).lo
        if rest == -INF:
            continue
        slack = bound - rest
        iv = env.get(var, TOP)
        if cj > 0:
            env[var] = Interval(iv.lo, min(iv.hi, slack // cj)) if slack // cj >= iv.lo else None
        else:
            limit = -((-slack) // cj)
            env[var] = Interval(max(iv.lo, limit), iv.hi) if limit <= iv.hi else None
        if env[var] is None:
            return


def refine(c: Constraint, env: Mapping[str, Interval]) -> Optional[Dict[str, Interval]]:
    """
    Filter intervals by a guard, one propagation pass per variable.

    Returns:
        the narrowed environment, or None when the guard cannot hold
    """
    if definitely_false(c, env):
        return None
    narrowed = dict(env)
    if c.rel == Rel.LE:
        _tighten_le(c.terms, c.bound, narrowed)
    elif c.rel == Rel.EQ:
        _tighten_le(c.terms, c.bound, narrowed)
        if None not in narrowed.values():
            _tighten_le(tuple((v, -k) for v, k in c.terms), -c.bound, narrowed)
    elif len(c.terms) == 1:
        (var, k), = c.terms
        excluded = c.bound // k
        iv = narrowed.get(var, TOP)
        if iv.lo == excluded and iv.hi > excluded:
            narrowed[var] = Interval(iv.lo + 1, iv.hi)
        elif iv.hi == excluded and iv.lo < excluded:
            narrowed[var] = Interval(iv.lo, iv.hi - 1)
    if any(iv is None for iv in narrowed.values()):
        return None
    return narrowed


def transfer(ctx: AbstractContext, t: Transition, cfg: CacheConfig) -> Tuple[Optional[AbstractContext], int]:
    """
    Abstract effect and worst-case cost of one transition.

    Returns:
        (context after t or None when the guard is definitely false, cost)
    """
    cache, cost = abstract_transition_cost(ctx.cache, t, cfg)
    env = ctx.as_dict()
    if isinstance(t.op, Assign):
        env[t.op.var] = evaluate(t.op.expr, env)
    else:
        env = refine(t.op.cond.normalize(), env)
        if env is None:
            return None, cost
    return AbstractContext.build(env, cache), cost


# ============================================================================
# Abstraction of symbolic states
# ============================================================================

def _bounds_by_elimination(constraints, var: str, others) -> Optional[Tuple[float, float]]:
    conj = eliminate(list(constraints), others)
    if conj.is_false:
        return None
    lo, hi = -INF, INF
    for c in conj:
        if c.rel == Rel.LE:
            k = c.coeff(var)
            if k > 0:
                hi = min(hi, c.bound)
            elif k < 0:
                lo = max(lo, -c.bound)
        elif c.rel == Rel.EQ:
            lo, hi = max(lo, c.bound), min(hi, c.bound)
    return (lo, hi) if lo <= hi else None


def alpha(v: SymbolicState, ts: TransitionSystem, solver: Optional[LinearSolver] = None) -> AbstractContext:
    """
    Abstract a symbolic state: implied integer bounds per variable and
    every resident block of the concrete cache as Known.
    """
    solver = solver or default_solver()
    conj = project(v)
    intervals: Dict[str, Interval] = {}
    for var in ts.vars:
        if var not in conj.variables():
            continue
        others = conj.variables() - {var}
        try:
            bounds = _bounds_by_elimination(conj.constraints, var, others)
        except ProjectionIncomplete:
            bounds = solver.bounds(conj, var)
        if bounds is None:
            # Only reachable when the solver let an infeasible prefix through
            logger.warning(f"Abstracting infeasible state at {v.point}, using top")
            intervals = {}
            break
        intervals[var] = Interval(*bounds)
    return AbstractContext.build(intervals, AbstractCacheState.from_concrete(v.cache))


# ============================================================================
# Interpreter
# ============================================================================

def _tie_key(t: Transition):
    return (t.dst, t.index)


class AbstractInterpreter:
    """
    Forward context propagation then backward worst-case costing over an
    acyclic system, memoized per (context, point).
    """

    def __init__(self, ts: TransitionSystem, cfg: CacheConfig):
        self.ts = ts
        self.cfg = cfg
        self.hits = 0
        self.misses = 0
        self._memo: Dict[Tuple[AbstractContext, str], AiResult] = {}
        self._graph = ts.graph()
        self._acyclic = nx.is_directed_acyclic_graph(self._graph)

    @property
    def calls(self) -> int:
        return self.hits + self.misses

    def analyze(self, ctx: AbstractContext, at: str) -> AiResult:
        if not self._acyclic:
            raise CyclicGraphError("abstract interpretation needs an unrolled (acyclic) system")
        if at not in self.ts.point_index:
            raise PreconditionError(f"unknown program point {at}")
        key = (ctx, at)
        cached = self._memo.get(key)
        if cached is not None:
            self.hits += 1
            return cached
        self.misses += 1
        result = self._run(ctx, at)
        self._memo[key] = result
        return result

    def _forward(self, ctx: AbstractContext, at: str):
        reachable = nx.descendants(self._graph, at) | {at}
        pending: Dict[str, List[AbstractContext]] = {at: [ctx]}
        contexts: Dict[str, AbstractContext] = {}
        kept: Dict[str, List[Tuple[Transition, int]]] = {}
        order = [p for p in self.ts.topological_order() if p in reachable]
        for p in order:
            incoming = pending.get(p)
            if not incoming:
                continue
            here = reduce(AbstractContext.join, incoming)
            contexts[p] = here
            kept[p] = []
            for t in self.ts.outgoing(p):
                out, cost = transfer(here, t, self.cfg)
                if out is None:
                    logger.debug(f"Pruned {t} under {here.intervals}")
                    continue
                kept[p].append((t, cost))
                pending.setdefault(t.dst, []).append(out)
        return order, contexts, kept

    def _run(self, ctx: AbstractContext, at: str) -> AiResult:
        order, contexts, kept = self._forward(ctx, at)

        upper: Dict[str, Value] = {}
        choice: Dict[str, Transition] = {}
        for p in reversed(order):
            if p not in contexts:
                continue
            if self.ts.is_terminal(p):
                upper[p] = WCET.bottom
                continue
            best = None
            for t, cost in sorted(kept[p], key=lambda e: _tie_key(e[0])):
                if t.dst not in upper:
                    continue
                value = WCET.accumulate(cost, upper[t.dst])
                if best is None or value > best:
                    best, choice[p] = value, t
            if best is not None:
                upper[p] = best

        if at not in upper:
            logger.debug(f"No abstract path from {at} survives pruning")
            return AiResult(WCET.bottom, WCET.bottom, (), upper, contexts, feasible=False)

        path = []
        p = at
        while not self.ts.is_terminal(p):
            t = choice[p]
            path.append(t)
            p = t.dst
        return AiResult(WCET.bottom, upper[at], (tuple(path),), upper, contexts)


def abstract_interpretation(ctx: AbstractContext, at: str, ts: TransitionSystem, cfg: CacheConfig) -> AiResult:
    """One-shot analysis without a shared memo table."""
    return AbstractInterpreter(ts, cfg).analyze(ctx, at)


def witness_consistent(result: AiResult, at: str, ts: TransitionSystem, cfg: CacheConfig) -> bool:
    """
    Re-cost every witness path under the forward contexts of `result` and
    check each step against per_point_upper.
    """
    if not result.feasible:
        return not result.witness
    bounds = result.per_point_upper
    if bounds.get(at) != result.upper:
        return False
    for path in result.witness:
        p = at
        for t in path:
            ctx = result.contexts.get(p)
            if t.src != p or ctx is None or t.dst not in bounds:
                return False
            out, cost = transfer(ctx, t, cfg)
            if out is None or bounds.get(p) != WCET.accumulate(cost, bounds[t.dst]):
                return False
            p = t.dst
        if not ts.is_terminal(p) or bounds.get(p) != WCET.bottom:
            return False
    return True
