"""
Hybrid Symbolic Execution Tree
Anytime incremental analysis: AI leaves refined along their witness paths,
annotations combined bottom-up, domination pruning and reuse of exact
subtrees through interpolants
"""
import itertools
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Tuple

from wcet.absint import AbstractInterpreter, alpha, witness_consistent
from wcet.cache import CacheConfig
from wcet.errors import PreconditionError, WcetError
from wcet.ir import Assign, Op, Transition, TransitionSystem
from wcet.lattice import WCET, Value
from wcet.linear import Conjunction
from wcet.solver import Entailment, LinearSolver, Result, default_solver
from wcet.symex import (Infeasible, SymbolicState, check_state, initial_state,
                        project, replay, symstep)

logger = logging.getLogger(__name__)

Path = Tuple[Transition, ...]


class RevisitError(WcetError):
    """A (node, transition) pair was symbolically stepped a second time."""


class NodeKind(Enum):
    AI_LEAF = 'ai-leaf'
    EXPANDED = 'expanded'
    TERMINAL = 'terminal'
    INFEASIBLE = 'infeasible'
    SUBSUMED = 'subsumed'


@dataclass(frozen=True)
class RunOptions:
    mode: str = 'exact'
    epsilon: float = 0.05
    budget_ms: Optional[float] = None
    max_iterations: Optional[int] = None
    domination: bool = True
    subsumption: bool = True
    check_consistency: bool = False

    def __post_init__(self):
        if self.mode not in ('exact', 'epsilon'):
            raise ValueError(f"mode must be 'exact' or 'epsilon', got {self.mode!r}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")


@dataclass(frozen=True)
class Annotation:
    """
    Suffix analysis ⟨L, U, ω, Ψ⟩ of a node.

    `lower_path` is a feasible suffix attaining `lower`; without one the
    lower bound is the trivial bottom. `vacuous` marks subtrees without
    feasible paths, which combine ignores.
    """
    lower: Value
    upper: Value
    witnesses: Tuple[Path, ...] = ()
    interpolant: Conjunction = Conjunction.false()
    lower_path: Optional[Path] = None
    vacuous: bool = False

    @property
    def exact(self) -> bool:
        return self.lower_path is not None and self.lower == self.upper

    @classmethod
    def infeasible(cls) -> 'Annotation':
        return cls(WCET.bottom, WCET.bottom, vacuous=True)

    @classmethod
    def terminal(cls) -> 'Annotation':
        return cls(WCET.bottom, WCET.bottom, (), Conjunction.true(), ())


_idents = itertools.count()


@dataclass(eq=False)
class HsetNode:
    state: Optional[SymbolicState]
    kind: NodeKind = NodeKind.AI_LEAF
    annotation: Annotation = field(default_factory=Annotation.infeasible)
    parent: Optional['HsetNode'] = None
    edge: Optional[Transition] = None
    children: List[Tuple[Transition, 'HsetNode']] = field(default_factory=list)
    subsumed_by: Optional['HsetNode'] = None
    complete: bool = False
    ident: int = field(default_factory=lambda: next(_idents))

    @property
    def point(self) -> str:
        return self.state.point if self.state is not None else self.edge.dst

    @property
    def prefix_cost(self) -> Value:
        return self.state.prefix_cost if self.state is not None else WCET.bottom

    @property
    def trail_length(self) -> int:
        return len(self.state.trail) if self.state is not None else 0

    @property
    def through_lower(self) -> Value:
        if self.annotation.lower_path is None:
            return WCET.bottom
        return WCET.accumulate(self.prefix_cost, self.annotation.lower)

    @property
    def through_upper(self) -> Value:
        if self.annotation.vacuous:
            return WCET.bottom
        return WCET.accumulate(self.prefix_cost, self.annotation.upper)

    def walk(self) -> Iterable['HsetNode']:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(child for _, child in reversed(node.children))

    def __repr__(self) -> str:
        return (f"HsetNode({self.kind.value} @{self.point}, "
                f"L={self.annotation.lower}, U={self.annotation.upper})")


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    elapsed_ms: float
    lower: Value
    upper: Value
    ai_leaves: int
    dominated: int


@dataclass
class Report:
    final_lower: Value
    final_upper: Value
    exact: bool
    converged: bool
    iterations: int
    trace: List[IterationRecord]
    ai_upper: Value
    refinements: List[Tuple[int, str, Value]] = field(default_factory=list)
    steps: int = 0
    subsumption_hits: int = 0
    ai_calls: int = 0
    root: Optional[HsetNode] = None


# ============================================================================
# Pure operations
# ============================================================================

def combine(t1: Annotation, t2: Annotation) -> Annotation:
    """Join of two suffix analyses; ω follows the U1 ⊑ U2, U2 ⊑ U1 case split."""
    if t1.vacuous:
        return t2
    if t2.vacuous:
        return t1
    lower = WCET.join(t1.lower, t2.lower)
    upper = WCET.join(t1.upper, t2.upper)
    if WCET.leq(t1.upper, t2.upper):
        witnesses = t2.witnesses
    elif WCET.leq(t2.upper, t1.upper):
        witnesses = t1.witnesses
    else:
        witnesses = t1.witnesses + tuple(w for w in t2.witnesses if w not in t1.witnesses)

    candidates = [t for t in (t1, t2) if t.lower_path is not None and t.lower == lower]
    lower_path = candidates[-1].lower_path if candidates else None
    return Annotation(lower, upper, witnesses, Conjunction.false(), lower_path)


def across_edge(child: Annotation, t: Transition, edge_cost: Value) -> Annotation:
    """Re-express a child suffix annotation relative to its parent."""
    if child.vacuous:
        return child
    if child.lower_path is None:
        lower, lower_path = WCET.bottom, None
    else:
        lower, lower_path = WCET.accumulate(edge_cost, child.lower), (t,) + child.lower_path
    return Annotation(
        lower=lower,
        upper=WCET.accumulate(edge_cost, child.upper),
        witnesses=tuple((t,) + w for w in child.witnesses),
        interpolant=child.interpolant,
        lower_path=lower_path,
    )


def dominates(a: HsetNode, b: HsetNode) -> bool:
    return WCET.leq(b.through_upper, a.through_lower)


def refinement_heuristic(candidates: List[HsetNode]) -> HsetNode:
    """Maximal through-upper, then shortest trail, then smallest point id."""
    if not candidates:
        raise PreconditionError("refinement_heuristic needs at least one AI leaf")
    return min(candidates, key=lambda n: (-n.through_upper, n.trail_length, n.point))


def bounds_heuristic(root: HsetNode, opts: RunOptions, leaves: List[HsetNode],
                     lower: Optional[Value] = None, upper: Optional[Value] = None) -> bool:
    """
    Stop test checked after every iteration.

    Exact mode holds once every AI leaf is dominated by the root's witnessed
    lower bound; epsilon mode once (U - L)/U <= epsilon.
    """
    lower = root.through_lower if lower is None else lower
    upper = root.through_upper if upper is None else upper
    if opts.mode == 'epsilon':
        if upper == 0:
            return True
        return WCET.distance(lower, upper) / upper <= opts.epsilon
    if not opts.domination:
        return not leaves
    return all(dominates(root, leaf) for leaf in leaves)


def wlp_approx(psi: Conjunction, op: Op, context: Conjunction,
               solver: Optional[LinearSolver] = None) -> Conjunction:
    """
    A precondition at least as strong as the weakest liberal precondition
    of psi over op that the explored context still satisfies.

    Args:
        psi: interpolant after op (false for refuted or imprecise children)
        op: the transition's operation
        context: projected constraints of the state before op
    """
    solver = solver or default_solver()
    if isinstance(op, Assign):
        if psi.is_false:
            return psi
        return psi.substitute({op.var: op.expr})

    guard = op.cond.normalize()
    if psi.is_false:
        query = context.conjoin([guard])
        if solver.check(query) != Result.UNSAT:
            return Conjunction.false()
        core = solver.unsat_core(query)
        return Conjunction.true().conjoin(c for c in core if c != guard)

    guarded = Conjunction.of(guard)
    kept = [c for c in psi if solver.entails(guarded, Conjunction.of(c)) != Entailment.YES]
    return Conjunction.true().conjoin(kept)


# ============================================================================
# Analysis
# ============================================================================

class _Refinement:
    """Per-call state of one refine_unfold."""

    def __init__(self):
        self.spine_done = False


class IncrementalAnalysis:
    """
    Owner of one hybrid symbolic execution tree.

    Single-threaded: the tree, the subsumption index and the AI memo are
    mutated only from the refinement loop.
    """

    def __init__(self, ts: TransitionSystem, cfg: CacheConfig, opts: Optional[RunOptions] = None,
                 solver: Optional[LinearSolver] = None):
        self.ts = ts
        self.cfg = cfg
        self.opts = opts or RunOptions()
        if solver is None:
            # The shared instance starts empty for every analysis
            solver = default_solver()
            solver.clear()
        self.solver = solver
        self.interpreter = AbstractInterpreter(ts, cfg)
        self.leaves: List[HsetNode] = []
        self.index: Dict[str, List[HsetNode]] = {}
        self.steps = 0
        self.subsumption_hits = 0
        self._stepped = set()
        self._contexts: Dict[int, Conjunction] = {}
        self.root: Optional[HsetNode] = None

    # ------------------------------------------------------------------
    # Node construction
    # ------------------------------------------------------------------

    def _context(self, node: HsetNode) -> Conjunction:
        if node.ident not in self._contexts:
            self._contexts[node.ident] = project(node.state)
        return self._contexts[node.ident]

    def _step(self, node: HsetNode, t: Transition):
        key = (node.ident, t.index)
        if key in self._stepped:
            raise RevisitError(f"transition {t} stepped twice from node {node.ident}")
        self._stepped.add(key)
        self.steps += 1
        result = symstep(node.state, t, self.cfg, self.solver)
        if self.opts.check_consistency and not isinstance(result, Infeasible):
            if not check_state(result, self.cfg):
                raise WcetError(f"inconsistent prefix cost after {t}")
        return result

    def _make_leaf(self, node: HsetNode) -> None:
        result = self.interpreter.analyze(alpha(node.state, self.ts, self.solver), node.point)
        if self.opts.check_consistency and not witness_consistent(result, node.point, self.ts, self.cfg):
            raise WcetError(f"abstract witness from {node.point} disagrees with its per-point bounds")
        if not result.feasible:
            node.kind = NodeKind.INFEASIBLE
            node.annotation = Annotation.infeasible()
            return
        node.kind = NodeKind.AI_LEAF
        node.annotation = Annotation(WCET.bottom, result.upper, result.witness)
        self.leaves.append(node)

    def _make_terminal(self, node: HsetNode) -> None:
        node.kind = NodeKind.TERMINAL
        node.annotation = Annotation.terminal()
        node.complete = True

    def subsumes(self, done: HsetNode, candidate: SymbolicState) -> bool:
        if done.point != candidate.point:
            raise PreconditionError(f"subsumption across points {done.point} and {candidate.point}")
        psi = done.annotation.interpolant
        if psi.is_false or not done.annotation.exact:
            return False
        if not psi.is_true and self.solver.entails(project(candidate), psi) != Entailment.YES:
            return False
        if not alpha(candidate, self.ts, self.solver).leq(alpha(done.state, self.ts, self.solver)):
            return False
        replayed = replay(candidate, done.annotation.lower_path, self.cfg, self.solver)
        if isinstance(replayed, Infeasible):
            return False
        return replayed.prefix_cost - candidate.prefix_cost == done.annotation.lower

    def _find_subsumer(self, state: SymbolicState) -> Optional[HsetNode]:
        for done in self.index.get(state.point, ()):
            if self.subsumes(done, state):
                return done
        return None

    # ------------------------------------------------------------------
    # Refinement
    # ------------------------------------------------------------------

    def refine_unfold(self, node: HsetNode, sigma: Path) -> HsetNode:
        """Unfold node along sigma; siblings off the spine become AI leaves."""
        if sigma and sigma[0].src != node.point:
            raise PreconditionError(f"witness starts at {sigma[0].src}, node is at {node.point}")
        if node in self.leaves:
            self.leaves.remove(node)
        self._unfold(node, sigma, _Refinement())
        return node

    def _unfold(self, node: HsetNode, sigma: Path, run: _Refinement) -> None:
        if self.ts.is_terminal(node.point):
            self._make_terminal(node)
            run.spine_done = True
            return
        if self.opts.subsumption and node.parent is not None:
            done = self._find_subsumer(node.state)
            if done is not None:
                node.kind = NodeKind.SUBSUMED
                node.subsumed_by = done
                node.annotation = done.annotation
                node.complete = True
                self.subsumption_hits += 1
                run.spine_done = True
                logger.debug(f"Node at {node.point} subsumed by node {done.ident}")
                return
        if run.spine_done:
            self._make_leaf(node)
            return

        spine = sigma[0]
        outgoing = self.ts.outgoing(node.point)
        order = [spine] + [t for t in outgoing if t != spine]
        node.kind = NodeKind.EXPANDED
        for t in order:
            result = self._step(node, t)
            if isinstance(result, Infeasible):
                child = HsetNode(None, NodeKind.INFEASIBLE, Annotation.infeasible(), node, t, complete=True)
                if t == spine:
                    run.spine_done = True
            else:
                child = HsetNode(result, parent=node, edge=t)
                self._unfold(child, sigma[1:] if t == spine else (), run)
            node.children.append((t, child))
        node.children.sort(key=lambda pair: pair[0].index)
        self._annotate(node)

    def _annotate(self, node: HsetNode) -> None:
        combined = Annotation.infeasible()
        psi = Conjunction.true()
        for t, child in node.children:
            edge_cost = child.prefix_cost - node.prefix_cost if child.state is not None else 0
            combined = combine(combined, across_edge(child.annotation, t, edge_cost))
            if not psi.is_false:
                psi = psi & wlp_approx(child.annotation.interpolant, t.op, self._context(node), self.solver)

        node.complete = all(child.complete for _, child in node.children)
        if combined.exact:
            combined = Annotation(combined.lower, combined.upper, (), psi, combined.lower_path)
        node.annotation = combined
        if (self.opts.subsumption and node.complete and combined.exact
                and not psi.is_false and node.state is not None):
            indexed = self.index.setdefault(node.point, [])
            if node not in indexed:
                indexed.append(node)

    def propagate_back(self, node: HsetNode) -> None:
        parent = node.parent
        while parent is not None:
            self._annotate(parent)
            parent = parent.parent

    # ------------------------------------------------------------------
    # Driver
    # ------------------------------------------------------------------

    def candidates(self) -> Tuple[List[HsetNode], int]:
        """Non-dominated AI leaves and the number of dominated ones."""
        if not self.opts.domination:
            return list(self.leaves), 0
        open_leaves = [leaf for leaf in self.leaves if not dominates(self.root, leaf)]
        return open_leaves, len(self.leaves) - len(open_leaves)

    def run(self) -> Report:
        started = time.perf_counter()
        self.root = HsetNode(initial_state(self.ts, self.cfg))
        if self.ts.is_terminal(self.ts.start):
            self._make_terminal(self.root)
        else:
            self._make_leaf(self.root)
        ai_upper = self.root.through_upper

        trace: List[IterationRecord] = []
        refinements: List[Tuple[int, str, Value]] = []
        lower, upper = self.root.through_lower, self.root.through_upper

        def record(iteration: int, dominated: int) -> None:
            elapsed = (time.perf_counter() - started) * 1000.0
            trace.append(IterationRecord(iteration, elapsed, lower, upper, len(self.leaves), dominated))

        iteration = 0
        open_leaves, dominated = self.candidates()
        record(iteration, dominated)
        converged = False
        while True:
            if not open_leaves or bounds_heuristic(self.root, self.opts, open_leaves, lower, upper):
                converged = True
                break
            if self.opts.max_iterations is not None and iteration >= self.opts.max_iterations:
                break
            if self.opts.budget_ms is not None and (time.perf_counter() - started) * 1000.0 >= self.opts.budget_ms:
                break

            leaf = refinement_heuristic(open_leaves)
            iteration += 1
            refinements.append((iteration, leaf.point, leaf.through_upper))
            logger.info(f"Iteration {iteration}: refining {leaf.point} (through upper {leaf.through_upper})")
            self.refine_unfold(leaf, leaf.annotation.witnesses[0])
            self.propagate_back(leaf)

            lower = WCET.join(lower, self.root.through_lower)
            upper = WCET.meet(upper, self.root.through_upper)
            open_leaves, dominated = self.candidates()
            record(iteration, dominated)

        logger.info(f"Analysis finished after {iteration} iterations: [{lower}, {upper}]")
        return Report(
            final_lower=lower,
            final_upper=upper,
            exact=lower == upper,
            converged=converged,
            iterations=iteration,
            trace=trace,
            ai_upper=ai_upper,
            refinements=refinements,
            steps=self.steps,
            subsumption_hits=self.subsumption_hits,
            ai_calls=self.interpreter.calls,
            root=self.root,
        )


def incremental_analysis(ts: TransitionSystem, cfg: CacheConfig, opts: Optional[RunOptions] = None,
                         solver: Optional[LinearSolver] = None) -> Report:
    """
    Run the anytime analysis on an acyclic, validated system.

    Returns:
        Report: best bounds found; valid even when the budget ran out
    """
    return IncrementalAnalysis(ts, cfg, opts, solver).run()
