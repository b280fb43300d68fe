"""
Instruction Cache Model
Direct-mapped concrete cache simulation for exact path costs and the
must-analysis abstract cache for safe upper bounds
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

from wcet import config
from wcet.errors import WcetError

logger = logging.getLogger(__name__)


class DimensionMismatch(WcetError):
    """Two cache states disagree on the number of sets."""


@dataclass(frozen=True)
class CacheConfig:
    num_sets: int = config.CACHE_SETS
    hit_cost: int = config.HIT_COST
    miss_penalty: int = config.MISS_PENALTY

    def __post_init__(self):
        if self.num_sets < 1:
            raise ValueError(f"num_sets must be positive, got {self.num_sets}")
        if self.hit_cost < 0 or self.miss_penalty < 0:
            raise ValueError("cache costs must be non-negative")

    def map(self, block: int) -> int:
        return block % self.num_sets


@dataclass(frozen=True)
class ConcreteCacheState:
    """Resident block per set; sets absent from `lines` are Empty."""
    num_sets: int
    lines: Tuple[Tuple[int, int], ...] = ()

    @classmethod
    def empty(cls, cfg: CacheConfig) -> 'ConcreteCacheState':
        return cls(cfg.num_sets)

    def resident(self, set_index: int) -> Optional[int]:
        return dict(self.lines).get(set_index)

    def with_line(self, set_index: int, block: int) -> 'ConcreteCacheState':
        lines = dict(self.lines)
        lines[set_index] = block
        return ConcreteCacheState(self.num_sets, tuple(sorted(lines.items())))


@dataclass(frozen=True)
class AbstractCacheState:
    """
    Must-cache: per set, the block known to be resident on every path.

    Sets absent from `known` are Unknown. More knowledge is lower in the
    order (more precise).
    """
    num_sets: int
    known: frozenset = frozenset()

    @classmethod
    def unknown(cls, cfg: CacheConfig) -> 'AbstractCacheState':
        return cls(cfg.num_sets)

    @classmethod
    def from_concrete(cls, state: ConcreteCacheState) -> 'AbstractCacheState':
        return cls(state.num_sets, frozenset(state.lines))

    def lookup(self, set_index: int) -> Optional[int]:
        for s, block in self.known:
            if s == set_index:
                return block
        return None

    def with_line(self, set_index: int, block: int) -> 'AbstractCacheState':
        kept = {(s, b) for s, b in self.known if s != set_index}
        kept.add((set_index, block))
        return AbstractCacheState(self.num_sets, frozenset(kept))

    def leq(self, other: 'AbstractCacheState') -> bool:
        """self ⊑ other iff every Known entry of other is Known in self."""
        if self.num_sets != other.num_sets:
            raise DimensionMismatch(f"{self.num_sets} sets vs {other.num_sets} sets")
        return other.known <= self.known


def concrete_access(state: ConcreteCacheState, block: int, cfg: CacheConfig) -> Tuple[ConcreteCacheState, int]:
    set_index = cfg.map(block)
    if state.resident(set_index) == block:
        return state, cfg.hit_cost
    return state.with_line(set_index, block), cfg.miss_penalty


def abstract_access(state: AbstractCacheState, block: int, cfg: CacheConfig) -> Tuple[AbstractCacheState, int]:
    set_index = cfg.map(block)
    if state.lookup(set_index) == block:
        return state, cfg.hit_cost
    return state.with_line(set_index, block), cfg.miss_penalty


def abstract_join(a1: AbstractCacheState, a2: AbstractCacheState) -> AbstractCacheState:
    """Per-set intersection of the must information."""
    if a1.num_sets != a2.num_sets:
        raise DimensionMismatch(f"cannot join caches with {a1.num_sets} and {a2.num_sets} sets")
    return AbstractCacheState(a1.num_sets, a1.known & a2.known)


def transition_cost(state: ConcreteCacheState, transition, cfg: CacheConfig) -> Tuple[ConcreteCacheState, int]:
    """Static cycles plus concrete access costs of one transition."""
    total = transition.cost.static_cycles
    for block in transition.cost.accesses:
        state, cost = concrete_access(state, block, cfg)
        total += cost
    return state, total


def abstract_transition_cost(state: AbstractCacheState, transition, cfg: CacheConfig) -> Tuple[AbstractCacheState, int]:
    """Static cycles plus worst-case abstract access costs of one transition."""
    total = transition.cost.static_cycles
    for block in transition.cost.accesses:
        state, cost = abstract_access(state, block, cfg)
        total += cost
    return state, total


def path_cost(path: Iterable, cfg: CacheConfig, initial: Optional[ConcreteCacheState] = None) -> int:
    """
    Exact cost of a transition sequence.

    Args:
        path: connected transition sequence
        cfg: cache geometry and timings
        initial: cache state before the first transition (Empty by default)

    Returns:
        int: static cycles plus concrete hit/miss costs along the path
    """
    state = initial if initial is not None else ConcreteCacheState.empty(cfg)
    total = 0
    for transition in path:
        state, cost = transition_cost(state, transition, cfg)
        total += cost
    return total


def cache_state_after(path: Iterable, cfg: CacheConfig,
                      initial: Optional[ConcreteCacheState] = None) -> ConcreteCacheState:
    state = initial if initial is not None else ConcreteCacheState.empty(cfg)
    for transition in path:
        state, _ = transition_cost(state, transition, cfg)
    return state
