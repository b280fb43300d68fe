"""
Program Representation
Transition systems with per-edge cost annotations: parsing, printing,
validation and static loop unrolling into a DAG
"""
import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Tuple, Union

import networkx as nx

from wcet.errors import WcetError
from wcet.linear import Constraint, LinExpr, Rel

logger = logging.getLogger(__name__)

IDENT = r"[A-Za-z_][A-Za-z0-9_#']*"


class ParseError(WcetError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class SemanticError(WcetError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line
        self.message = message


class UnboundedLoopError(WcetError):
    def __init__(self, cycle: List[str], message: str = "cycle has no loop bound"):
        super().__init__(f"{message}: {' -> '.join(cycle)}")
        self.cycle = cycle


# ============================================================================
# Domain types
# ============================================================================

@dataclass(frozen=True)
class Condition:
    """Guard `lhs rel rhs` as written in the program."""
    lhs: LinExpr
    rel: Rel
    rhs: LinExpr

    def normalize(self) -> Constraint:
        return Constraint.from_relation(self.lhs, self.rel, self.rhs)

    def negate(self) -> 'Condition':
        return Condition(self.lhs, self.rel.negate(), self.rhs)

    def variables(self) -> frozenset:
        return self.lhs.variables() | self.rhs.variables()

    def __str__(self) -> str:
        return f"{self.lhs} {self.rel.value} {self.rhs}"


@dataclass(frozen=True)
class Assign:
    var: str
    expr: LinExpr

    def variables(self) -> frozenset:
        return self.expr.variables() | {self.var}

    def __str__(self) -> str:
        return f"assign {self.var} := {self.expr}"


@dataclass(frozen=True)
class Assume:
    cond: Condition

    def variables(self) -> frozenset:
        return self.cond.variables()

    def __str__(self) -> str:
        return f"assume {self.cond}"


Op = Union[Assign, Assume]


@dataclass(frozen=True)
class CostAnnotation:
    static_cycles: int = 0
    accesses: Tuple[int, ...] = ()

    def __str__(self) -> str:
        return f"cost {self.static_cycles} access [{' '.join(str(b) for b in self.accesses)}]"


@dataclass(frozen=True)
class Transition:
    index: int
    src: str
    dst: str
    op: Op
    cost: CostAnnotation = CostAnnotation()

    def __str__(self) -> str:
        return f"trans {self.src} -> {self.dst} {self.op} {self.cost}"


@dataclass(frozen=True)
class TransitionSystem:
    vars: Tuple[str, ...]
    points: Tuple[str, ...]
    start: str
    transitions: Tuple[Transition, ...]
    terminals: frozenset
    loop_bounds: Mapping[str, int] = field(default_factory=dict)

    @cached_property
    def point_index(self) -> Dict[str, int]:
        """Dense integer index of every point label."""
        return {p: i for i, p in enumerate(self.points)}

    @cached_property
    def _outgoing(self) -> Dict[str, Tuple[Transition, ...]]:
        table: Dict[str, list] = {p: [] for p in self.points}
        for t in self.transitions:
            table.setdefault(t.src, []).append(t)
        return {p: tuple(ts) for p, ts in table.items()}

    def outgoing(self, point: str) -> Tuple[Transition, ...]:
        return self._outgoing.get(point, ())

    def is_terminal(self, point: str) -> bool:
        return point in self.terminals

    def graph(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.points)
        for t in self.transitions:
            g.add_edge(t.src, t.dst, key=t.index)
        return g

    def is_acyclic(self) -> bool:
        return nx.is_directed_acyclic_graph(self.graph())

    @cached_property
    def _topological(self) -> Tuple[str, ...]:
        # Ties broken by declaration order so the result is deterministic
        return tuple(nx.lexicographical_topological_sort(self.graph(), key=self.point_index.get))

    def topological_order(self) -> Tuple[str, ...]:
        """Points in topological order; raises networkx.NetworkXUnfeasible on cycles."""
        return self._topological


# ============================================================================
# Parsing
# ============================================================================

_COMMENT = re.compile(r"(^|\s)#.*$")
_VARS = re.compile(r"^vars(\s+.*)?$")
_POINT = re.compile(rf"^point\s+({IDENT})(\s+terminal)?$")
_START = re.compile(rf"^start\s+({IDENT})$")
_LOOPBOUND = re.compile(rf"^loopbound\s+({IDENT})\s+(-?\d+)$")
_TRANS = re.compile(
    rf"^trans\s+({IDENT})\s*->\s*({IDENT})\s+"
    rf"(?:assume\s+(?P<cond>.+?)|assign\s+(?P<var>{IDENT})\s*:=\s*(?P<expr>.+?))"
    rf"(?:\s+cost\s+(?P<cost>\d+))?"
    rf"(?:\s+access\s+\[(?P<access>[^\]]*)\])?$"
)
_TOKEN = re.compile(rf"\s*(\d+|{IDENT}|[+\-*])")
_RELATION = re.compile(r"(<=|>=|!=|<|>|=)")


def parse_expr(text: str, line: int = 0) -> LinExpr:
    """Parse `3*x - y + 2` style linear expressions."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(line, f"unexpected character in expression: {text[pos:]!r}")
        tokens.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    if not tokens:
        raise ParseError(line, "empty expression")

    coeffs: Dict[str, int] = {}
    const = 0
    i = 0
    expect_term = True
    sign = 1
    while i < len(tokens):
        tok = tokens[i]
        if expect_term:
            if tok in '+-':
                sign = sign * (-1 if tok == '-' else 1)
                i += 1
                continue
            if tok.isdigit():
                value = int(tok)
                if i + 2 < len(tokens) and tokens[i + 1] == '*':
                    name = tokens[i + 2]
                    if not re.fullmatch(IDENT, name):
                        raise ParseError(line, f"expected variable after '*', got {name!r}")
                    coeffs[name] = coeffs.get(name, 0) + sign * value
                    i += 3
                else:
                    const += sign * value
                    i += 1
            elif tok == '*':
                raise ParseError(line, "unexpected '*'")
            else:
                coeffs[tok] = coeffs.get(tok, 0) + sign
                i += 1
            expect_term = False
            sign = 1
        else:
            if tok not in '+-':
                raise ParseError(line, f"expected '+' or '-', got {tok!r}")
            sign = -1 if tok == '-' else 1
            expect_term = True
            i += 1
    if expect_term:
        raise ParseError(line, "expression ends with an operator")
    return LinExpr.build(coeffs, const)


def parse_condition(text: str, line: int = 0) -> Condition:
    parts = _RELATION.split(text)
    if len(parts) != 3:
        raise ParseError(line, f"expected exactly one relation in {text.strip()!r}")
    lhs, rel, rhs = parts
    return Condition(parse_expr(lhs, line), Rel.parse(rel), parse_expr(rhs, line))


def parse_program(text: str) -> TransitionSystem:
    """
    Parse the line-oriented program format into a TransitionSystem.

    Raises:
        ParseError: on syntax violations
        SemanticError: on undeclared variables, duplicate points, dangling
            transitions, missing start or an empty terminal set
    """
    variables: List[str] = []
    points: List[str] = []
    terminals: List[str] = []
    start: Optional[str] = None
    start_line = 0
    raw_transitions = []
    loop_bounds: Dict[str, int] = {}
    bound_lines: Dict[str, int] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = _COMMENT.sub('', raw).strip()
        if not line:
            continue

        m = _VARS.match(line)
        if m:
            for name in (m.group(1) or '').split():
                if not re.fullmatch(IDENT, name):
                    raise ParseError(number, f"invalid variable name {name!r}")
                if name in variables:
                    raise SemanticError(f"duplicate variable {name}", number)
                variables.append(name)
            continue

        m = _POINT.match(line)
        if m:
            name = m.group(1)
            if name in points:
                raise SemanticError(f"duplicate point {name}", number)
            points.append(name)
            if m.group(2):
                terminals.append(name)
            continue

        m = _START.match(line)
        if m:
            if start is not None:
                raise SemanticError("start declared twice", number)
            start, start_line = m.group(1), number
            continue

        m = _LOOPBOUND.match(line)
        if m:
            loop_bounds[m.group(1)] = int(m.group(2))
            bound_lines[m.group(1)] = number
            continue

        m = _TRANS.match(line)
        if m:
            if m.group('cond') is not None:
                op: Op = Assume(parse_condition(m.group('cond'), number))
            else:
                op = Assign(m.group('var'), parse_expr(m.group('expr'), number))
            accesses = ()
            if m.group('access'):
                blocks = m.group('access').split()
                if not all(b.isdigit() for b in blocks):
                    raise ParseError(number, f"block ids must be non-negative integers: {m.group('access')!r}")
                accesses = tuple(int(b) for b in blocks)
            cost = CostAnnotation(int(m.group('cost') or 0), accesses)
            raw_transitions.append((number, m.group(1), m.group(2), op, cost))
            continue

        raise ParseError(number, f"unrecognized directive: {line!r}")

    declared = set(points)
    if start is None:
        raise SemanticError("missing start declaration")
    if start not in declared:
        raise SemanticError(f"start point {start} is not declared", start_line)
    if not terminals:
        raise SemanticError("program has no terminal points")

    transitions = []
    for number, src, dst, op, cost in raw_transitions:
        for end in (src, dst):
            if end not in declared:
                raise SemanticError(f"dangling transition: unknown point {end}", number)
        for name in sorted(op.variables()):
            if name not in variables:
                raise SemanticError(f"undeclared variable {name}", number)
        transitions.append(Transition(len(transitions), src, dst, op, cost))

    for header, bound in loop_bounds.items():
        if header not in declared:
            raise SemanticError(f"loop bound on unknown point {header}", bound_lines[header])
        if bound < 1:
            raise SemanticError(f"loop bound must be positive, got {bound}", bound_lines[header])

    ts = TransitionSystem(
        vars=tuple(variables),
        points=tuple(points),
        start=start,
        transitions=tuple(transitions),
        terminals=frozenset(terminals),
        loop_bounds=loop_bounds,
    )
    logger.debug(f"Parsed program: {len(points)} points, {len(transitions)} transitions")
    return ts


def print_program(ts: TransitionSystem) -> str:
    """Canonical text of a system; parse_program(print_program(ts)) == ts."""
    lines = []
    if ts.vars:
        lines.append(f"vars {' '.join(ts.vars)}")
    for p in ts.points:
        lines.append(f"point {p} terminal" if p in ts.terminals else f"point {p}")
    lines.append(f"start {ts.start}")
    lines.extend(str(t) for t in ts.transitions)
    for header in sorted(ts.loop_bounds, key=lambda p: ts.point_index.get(p, len(ts.points))):
        lines.append(f"loopbound {header} {ts.loop_bounds[header]}")
    return '\n'.join(lines) + '\n'


# ============================================================================
# Validation
# ============================================================================

def _nontrivial_sccs(g: nx.MultiDiGraph) -> List[set]:
    return [s for s in nx.strongly_connected_components(g)
            if len(s) > 1 or g.has_edge(next(iter(s)), next(iter(s)))]


def validate(ts: TransitionSystem) -> List[str]:
    """Return one diagnostic per violated invariant (empty when well-formed)."""
    diagnostics = []
    declared = set(ts.points)

    if ts.start not in declared:
        diagnostics.append(f"missing start: {ts.start}")
    if not ts.terminals:
        diagnostics.append("no terminal points")
    for p in sorted(ts.terminals - declared):
        diagnostics.append(f"terminal outside points: {p}")
    for t in ts.transitions:
        if t.src not in declared or t.dst not in declared:
            diagnostics.append(f"dangling transition: {t.src} -> {t.dst}")
        for name in sorted(t.op.variables()):
            if name not in ts.vars:
                diagnostics.append(f"undeclared variable {name} in {t.src} -> {t.dst}")
    for header in ts.loop_bounds:
        if header not in declared:
            diagnostics.append(f"loop bound on unknown point: {header}")
    if diagnostics:
        return diagnostics

    g = ts.graph()
    reachable = nx.descendants(g, ts.start) | {ts.start}
    reaches_terminal = set(ts.terminals)
    for t in ts.terminals:
        reaches_terminal |= nx.ancestors(g, t)

    for p in ts.points:
        if p not in reachable:
            diagnostics.append(f"unreachable point: {p}")
        elif p not in reaches_terminal:
            diagnostics.append(f"dead-end point: {p}")
    for p in ts.points:
        if p in ts.terminals and ts.outgoing(p):
            diagnostics.append(f"terminal point has outgoing transitions: {p}")
    for scc in _nontrivial_sccs(g):
        if not scc & set(ts.loop_bounds):
            cycle = sorted(scc, key=ts.point_index.get)
            diagnostics.append(f"cycle through unbounded point: {' -> '.join(cycle)}")
    return diagnostics


# ============================================================================
# Loop unrolling
# ============================================================================

def _copy_name(point: str, iteration: int) -> str:
    return f"{point}#{iteration}"


def _unroll_scc(ts: TransitionSystem, g: nx.MultiDiGraph, scc: set) -> TransitionSystem:
    ordered = sorted(scc, key=ts.point_index.get)
    entries = [p for p in ordered
               if p == ts.start or any(u not in scc for u in g.predecessors(p))]
    if len(entries) != 1:
        raise UnboundedLoopError(ordered, "irreducible cycle")
    header = entries[0]
    if header not in ts.loop_bounds:
        cycle = [u for u, _, _ in nx.find_cycle(g.subgraph(scc))]
        raise UnboundedLoopError(cycle)
    n = ts.loop_bounds[header]

    points = []
    for p in ts.points:
        if p not in scc:
            points.append(p)
            continue
        points.extend(_copy_name(p, i) for i in range(n))
        if p == header:
            points.append(_copy_name(header, n))

    terminals = {p for p in ts.terminals if p not in scc}
    for p in ts.terminals & scc:
        terminals.update(_copy_name(p, i) for i in range(n))
        if p == header:
            terminals.add(_copy_name(header, n))

    transitions: List[Transition] = []

    def emit(src: str, dst: str, t: Transition) -> None:
        transitions.append(Transition(len(transitions), src, dst, t.op, t.cost))

    for t in ts.transitions:
        inside_src, inside_dst = t.src in scc, t.dst in scc
        if not inside_src and not inside_dst:
            emit(t.src, t.dst, t)
        elif not inside_src:
            emit(t.src, _copy_name(header, 0), t)
        elif not inside_dst:
            for i in range(n):
                emit(_copy_name(t.src, i), t.dst, t)
            if t.src == header:
                emit(_copy_name(header, n), t.dst, t)
        elif t.dst == header:
            for i in range(n):
                emit(_copy_name(t.src, i), _copy_name(header, i + 1), t)
        else:
            for i in range(n):
                emit(_copy_name(t.src, i), _copy_name(t.dst, i), t)

    loop_bounds = {}
    for p, bound in ts.loop_bounds.items():
        if p == header:
            continue
        if p in scc:
            for i in range(n):
                loop_bounds[_copy_name(p, i)] = bound
        else:
            loop_bounds[p] = bound

    start = _copy_name(header, 0) if ts.start == header else ts.start

    # A loop that exits from its body strands the copies past the bound
    copies = set(points) - set(ts.points)
    g = nx.MultiDiGraph()
    g.add_nodes_from(points)
    g.add_edges_from((t.src, t.dst) for t in transitions)
    alive = set(terminals)
    for p in terminals:
        alive |= nx.ancestors(g, p)
    dead = copies - alive
    if dead:
        logger.debug(f"Dropped {len(dead)} copies of the loop at {header} that reach no terminal")
        points = [p for p in points if p not in dead]
        terminals -= dead
        kept = [t for t in transitions if t.src not in dead and t.dst not in dead]
        transitions = [Transition(i, t.src, t.dst, t.op, t.cost) for i, t in enumerate(kept)]
        loop_bounds = {p: b for p, b in loop_bounds.items() if p not in dead}

    logger.debug(f"Unrolled loop at {header} {n} times ({len(scc)} points in body)")
    return TransitionSystem(ts.vars, tuple(points), start, tuple(transitions),
                            frozenset(terminals), loop_bounds)


def unroll_loops(ts: TransitionSystem) -> TransitionSystem:
    """
    Replicate every bounded loop body bound-many times, outermost first.

    Returns:
        TransitionSystem: an acyclic system; `ts` itself when already acyclic

    Raises:
        UnboundedLoopError: when a cycle has no bounded single entry point
    """
    current = ts
    while True:
        g = current.graph()
        sccs = _nontrivial_sccs(g)
        if not sccs:
            return current
        scc = min(sccs, key=lambda s: min(current.point_index[p] for p in s))
        current = _unroll_scc(current, g, scc)


def count_paths(ts: TransitionSystem) -> int:
    """Number of start-to-terminal paths of an acyclic system."""
    counts: Dict[str, int] = {}
    for p in reversed(ts.topological_order()):
        if ts.is_terminal(p):
            counts[p] = 1
        else:
            counts[p] = sum(counts[t.dst] for t in ts.outgoing(p))
    return counts[ts.start]
