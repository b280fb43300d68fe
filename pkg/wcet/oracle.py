"""
Exhaustive Oracle
Depth-first symbolic execution of every feasible path, costed with the
concrete cache; ground truth for desk-scale programs
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

from wcet import config
from wcet.cache import CacheConfig
from wcet.errors import PreconditionError, WcetError
from wcet.ir import Transition, TransitionSystem
from wcet.lattice import WCET, Value
from wcet.solver import LinearSolver, default_solver
from wcet.symex import Infeasible, initial_state, symstep, theta

logger = logging.getLogger(__name__)


class PathExplosion(WcetError):
    def __init__(self, cap: int):
        super().__init__(f"more than {cap} feasible paths")
        self.cap = cap


@dataclass(frozen=True)
class OracleResult:
    wcet: Value
    path: Tuple[Transition, ...]
    paths_explored: int


def exhaustive_wcet(ts: TransitionSystem, cfg: CacheConfig, path_cap: int = config.ORACLE_PATH_CAP,
                    solver: Optional[LinearSolver] = None) -> OracleResult:
    """
    Enumerate every solver-feasible start-to-terminal path.

    Returns:
        OracleResult: max θ over terminal states, the first argmax path in
        DFS order and the number of feasible paths

    Raises:
        PathExplosion: once more than path_cap feasible paths are found
    """
    if not ts.is_acyclic():
        raise PreconditionError("the oracle needs an unrolled (acyclic) system")
    solver = solver or default_solver()

    best: Optional[Value] = None
    best_path: Tuple[Transition, ...] = ()
    explored = 0
    stack: List = [initial_state(ts, cfg)]
    while stack:
        v = stack.pop()
        if ts.is_terminal(v.point):
            explored += 1
            if explored > path_cap:
                raise PathExplosion(path_cap)
            value = theta(v, ts)
            if best is None or value > best:
                best, best_path = value, v.trail
            continue
        # Reversed so that children pop in declaration order
        for t in reversed(ts.outgoing(v.point)):
            result = symstep(v, t, cfg, solver)
            if not isinstance(result, Infeasible):
                stack.append(result)

    if best is None:
        logger.warning("No feasible path reaches a terminal point, WCET is bottom")
        return OracleResult(WCET.bottom, (), 0)
    logger.debug(f"Oracle explored {explored} paths, WCET {best}")
    return OracleResult(best, best_path, explored)
