"""
Linear Integer Terms
Canonical linear expressions, normalized constraints and conjunctions
shared by the program representation, the solver and the analyses
"""
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from math import gcd
from typing import Dict, Iterable, Mapping, Tuple


class Rel(Enum):
    """Relational operators accepted in program text."""
    LT = '<'
    LE = '<='
    EQ = '='
    NE = '!='
    GE = '>='
    GT = '>'

    @classmethod
    def parse(cls, token: str) -> 'Rel':
        for rel in cls:
            if rel.value == token:
                return rel
        raise ValueError(f"Unknown relation: {token}")

    def negate(self) -> 'Rel':
        return _NEGATED[self]


_NEGATED = {
    Rel.LT: Rel.GE,
    Rel.LE: Rel.GT,
    Rel.EQ: Rel.NE,
    Rel.NE: Rel.EQ,
    Rel.GE: Rel.LT,
    Rel.GT: Rel.LE,
}


def _canonical(coeffs: Mapping[str, int]) -> Tuple[Tuple[str, int], ...]:
    return tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))


@dataclass(frozen=True)
class LinExpr:
    """Sum of integer-weighted variables plus an integer constant."""
    terms: Tuple[Tuple[str, int], ...] = ()
    const: int = 0

    @classmethod
    def build(cls, coeffs: Mapping[str, int], const: int = 0) -> 'LinExpr':
        return cls(_canonical(coeffs), const)

    @classmethod
    def var(cls, name: str, coeff: int = 1) -> 'LinExpr':
        return cls.build({name: coeff})

    @classmethod
    def constant(cls, value: int) -> 'LinExpr':
        return cls((), value)

    def as_dict(self) -> Dict[str, int]:
        return dict(self.terms)

    def coeff(self, name: str) -> int:
        for v, c in self.terms:
            if v == name:
                return c
        return 0

    def variables(self) -> frozenset:
        return frozenset(v for v, _ in self.terms)

    def __add__(self, other: 'LinExpr') -> 'LinExpr':
        merged = self.as_dict()
        for v, c in other.terms:
            merged[v] = merged.get(v, 0) + c
        return LinExpr.build(merged, self.const + other.const)

    def __neg__(self) -> 'LinExpr':
        return self.scale(-1)

    def __sub__(self, other: 'LinExpr') -> 'LinExpr':
        return self + (-other)

    def scale(self, k: int) -> 'LinExpr':
        return LinExpr.build({v: c * k for v, c in self.terms}, self.const * k)

    def substitute(self, mapping: Mapping[str, 'LinExpr']) -> 'LinExpr':
        """Replace variables by expressions; unmapped variables stay."""
        result = LinExpr.constant(self.const)
        for v, c in self.terms:
            replacement = mapping.get(v)
            if replacement is None:
                result = result + LinExpr.var(v, c)
            else:
                result = result + replacement.scale(c)
        return result

    def evaluate(self, env: Mapping[str, int]) -> int:
        return self.const + sum(c * env[v] for v, c in self.terms)

    def __str__(self) -> str:
        parts = []
        for v, c in self.terms:
            magnitude = abs(c)
            text = v if magnitude == 1 else f"{magnitude}*{v}"
            if not parts:
                parts.append(text if c > 0 else f"-{text}")
            else:
                parts.append(f"+ {text}" if c > 0 else f"- {text}")
        if not parts:
            return str(self.const)
        if self.const > 0:
            parts.append(f"+ {self.const}")
        elif self.const < 0:
            parts.append(f"- {-self.const}")
        return ' '.join(parts)


@dataclass(frozen=True)
class Constraint:
    """
    Normalized constraint `sum(c_i * x_i) rel bound` with rel in {<=, =, !=}.

    Coefficients are gcd-reduced; strict and >= forms are tightened to <=
    over the integers. A constraint without terms is either TRUE or FALSE.
    """
    terms: Tuple[Tuple[str, int], ...]
    rel: Rel
    bound: int

    @classmethod
    def make(cls, coeffs: Mapping[str, int], rel: Rel, bound: int) -> 'Constraint':
        terms = _canonical(coeffs)
        if rel in (Rel.LT, Rel.GE, Rel.GT):
            if rel == Rel.LT:
                return cls.make(dict(terms), Rel.LE, bound - 1)
            negated = {v: -c for v, c in terms}
            return cls.make(negated, Rel.LE, -bound if rel == Rel.GE else -bound - 1)

        if not terms:
            truth = {Rel.LE: 0 <= bound, Rel.EQ: bound == 0, Rel.NE: bound != 0}[rel]
            return TRUE if truth else FALSE

        g = reduce(gcd, (abs(c) for _, c in terms))
        if rel == Rel.LE:
            return cls(tuple((v, c // g) for v, c in terms), Rel.LE, bound // g)
        if bound % g:
            return FALSE if rel == Rel.EQ else TRUE
        sign = -1 if terms[0][1] < 0 else 1
        return cls(tuple((v, sign * c // g) for v, c in terms), rel, sign * bound // g)

    @classmethod
    def from_relation(cls, lhs: LinExpr, rel: Rel, rhs: LinExpr) -> 'Constraint':
        diff = lhs - rhs
        return cls.make(diff.as_dict(), rel, -diff.const)

    @property
    def is_constant(self) -> bool:
        return not self.terms

    @property
    def is_false(self) -> bool:
        return self == FALSE

    @property
    def is_true(self) -> bool:
        return self == TRUE

    def as_expr(self) -> LinExpr:
        return LinExpr(self.terms, 0)

    def variables(self) -> frozenset:
        return frozenset(v for v, _ in self.terms)

    def coeff(self, name: str) -> int:
        for v, c in self.terms:
            if v == name:
                return c
        return 0

    def negate(self) -> 'Constraint':
        if self.rel == Rel.LE:
            return Constraint.make({v: -c for v, c in self.terms}, Rel.LE, -self.bound - 1)
        flipped = Rel.NE if self.rel == Rel.EQ else Rel.EQ
        return Constraint.make(dict(self.terms), flipped, self.bound)

    def substitute(self, mapping: Mapping[str, LinExpr]) -> 'Constraint':
        expr = self.as_expr().substitute(mapping)
        return Constraint.make(expr.as_dict(), self.rel, self.bound - expr.const)

    def holds(self, env: Mapping[str, int]) -> bool:
        value = self.as_expr().evaluate(env)
        if self.rel == Rel.LE:
            return value <= self.bound
        if self.rel == Rel.EQ:
            return value == self.bound
        return value != self.bound

    def __str__(self) -> str:
        return f"{self.as_expr()} {self.rel.value} {self.bound}"


TRUE = Constraint((), Rel.LE, 0)
FALSE = Constraint((), Rel.LE, -1)


@dataclass(frozen=True)
class Conjunction:
    """Ordered conjunction of normalized constraints."""
    constraints: Tuple[Constraint, ...] = ()

    @classmethod
    def of(cls, *constraints: Constraint) -> 'Conjunction':
        return cls(tuple(constraints))

    @classmethod
    def true(cls) -> 'Conjunction':
        return cls(())

    @classmethod
    def false(cls) -> 'Conjunction':
        return cls((FALSE,))

    @property
    def is_false(self) -> bool:
        return any(c.is_false for c in self.constraints)

    @property
    def is_true(self) -> bool:
        return all(c.is_true for c in self.constraints)

    def conjoin(self, others: Iterable[Constraint]) -> 'Conjunction':
        """Append constraints, skipping TRUE and duplicates."""
        if self.is_false:
            return self
        result = list(self.constraints)
        for c in others:
            if c.is_false:
                return Conjunction.false()
            if c.is_true or c in result:
                continue
            result.append(c)
        return Conjunction(tuple(result))

    def __and__(self, other: 'Conjunction') -> 'Conjunction':
        return self.conjoin(other.constraints)

    def without(self, index: int) -> 'Conjunction':
        return Conjunction(self.constraints[:index] + self.constraints[index + 1:])

    def substitute(self, mapping: Mapping[str, LinExpr]) -> 'Conjunction':
        if self.is_false:
            return self
        return Conjunction.true().conjoin(c.substitute(mapping) for c in self.constraints)

    def variables(self) -> frozenset:
        return frozenset().union(*(c.variables() for c in self.constraints))

    def holds(self, env: Mapping[str, int]) -> bool:
        return all(c.holds(env) for c in self.constraints)

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self) -> int:
        return len(self.constraints)

    def __str__(self) -> str:
        if self.is_false:
            return 'false'
        if not self.constraints:
            return 'true'
        return ' && '.join(str(c) for c in self.constraints)
