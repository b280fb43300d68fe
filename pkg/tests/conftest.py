"""
Shared fixtures: sample programs from programs/ and cache geometries
"""
from pathlib import Path

import pytest

from wcet.cache import CacheConfig
from wcet.ir import parse_program, unroll_loops
from wcet.solver import LinearSolver

PROGRAMS = Path(__file__).resolve().parent.parent / 'programs'


def load(name: str):
    return unroll_loops(parse_program((PROGRAMS / name).read_text(encoding='utf-8')))


@pytest.fixture
def programs_dir() -> Path:
    return PROGRAMS


@pytest.fixture
def increments():
    return load('increments.prog')


@pytest.fixture
def two_diamond():
    return load('two_diamond.prog')


@pytest.fixture
def diamonds():
    return load('diamonds.prog')


@pytest.fixture
def single():
    return load('single.prog')


@pytest.fixture
def plain_cfg() -> CacheConfig:
    """Default timings; programs without accesses ignore them."""
    return CacheConfig()


@pytest.fixture
def small_cfg() -> CacheConfig:
    """4 sets, hit 0, miss 10: blocks 1 and 5 collide."""
    return CacheConfig(num_sets=4, hit_cost=0, miss_penalty=10)


@pytest.fixture
def solver() -> LinearSolver:
    return LinearSolver()
