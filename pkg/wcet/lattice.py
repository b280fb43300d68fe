"""
Analysis Value Lattice
Generic quantitative lattice interface and its WCET instance (naturals
with infinity under max)
"""
import math
from abc import ABC, abstractmethod
from typing import Union

from wcet.errors import WcetError

Value = Union[int, float]

INFINITY = math.inf


class InstanceError(WcetError):
    """The lattice instance does not support the requested operation."""


class Lattice(ABC):
    """Analysis values ordered by precision of the quantitative answer."""

    @property
    @abstractmethod
    def bottom(self):
        ...

    @property
    @abstractmethod
    def top(self):
        ...

    @abstractmethod
    def leq(self, a, b) -> bool:
        ...

    @abstractmethod
    def join(self, a, b):
        ...

    @abstractmethod
    def meet(self, a, b):
        ...

    def accumulate(self, prefix, suffix):
        raise InstanceError(f"{type(self).__name__} has no accumulation")

    def distance(self, a, b):
        """Difference metric used by heuristics on non-total orders."""
        raise InstanceError(f"{type(self).__name__} has no difference metric")


class WcetLattice(Lattice):
    """ℕ ∪ {∞}: leq is <=, join is max, meet is min, bottom 0, top ∞."""

    @property
    def bottom(self) -> Value:
        return 0

    @property
    def top(self) -> Value:
        return INFINITY

    def leq(self, a: Value, b: Value) -> bool:
        return a <= b

    def join(self, a: Value, b: Value) -> Value:
        return max(a, b)

    def meet(self, a: Value, b: Value) -> Value:
        return min(a, b)

    def accumulate(self, prefix: Value, suffix: Value) -> Value:
        """Saturating addition; ∞ absorbs."""
        if prefix == INFINITY or suffix == INFINITY:
            return INFINITY
        return prefix + suffix

    def distance(self, a: Value, b: Value) -> Value:
        return abs(b - a) if INFINITY not in (a, b) else INFINITY


WCET = WcetLattice()


def join(a: Value, b: Value) -> Value:
    return WCET.join(a, b)


def meet(a: Value, b: Value) -> Value:
    return WCET.meet(a, b)


def leq(a: Value, b: Value) -> bool:
    return WCET.leq(a, b)


def accumulate(prefix: Value, suffix: Value) -> Value:
    return WCET.accumulate(prefix, suffix)
