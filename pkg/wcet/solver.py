"""
Linear Constraint Solver
Sound satisfiability, entailment and deletion-based unsat cores for
conjunctions of linear integer constraints, backed by HiGHS through scipy
"""
import logging
import math
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from wcet import config
from wcet.errors import PreconditionError, WcetError
from wcet.linear import Conjunction, Constraint, Rel

logger = logging.getLogger(__name__)

# Tolerance when reading integer bounds back from floating point LP results
ROUNDING_EPS = 1e-7


class Result(Enum):
    SAT = 'sat'
    UNSAT = 'unsat'
    UNKNOWN = 'unknown'


class Entailment(Enum):
    YES = 'yes'
    UNKNOWN = 'unknown'


class ResourceLimit(WcetError):
    """The conjunction exceeds the configured constraint or variable cap."""


class LinearSolver:
    """
    Decision procedure for conjunctions of normalized constraints.

    Unsat is only reported when the rational relaxation is infeasible or
    the integral search proves infeasibility, so it is always sound.
    """

    def __init__(self, split_cap: int = config.SPLIT_CAP,
                 max_constraints: int = config.MAX_CONSTRAINTS,
                 max_variables: int = config.MAX_VARIABLES,
                 milp_time_limit: float = config.MILP_TIME_LIMIT,
                 memo_cap: int = config.MEMO_CAP):
        self.split_cap = split_cap
        self.max_constraints = max_constraints
        self.max_variables = max_variables
        self.milp_time_limit = milp_time_limit
        self.memo_cap = memo_cap
        self.queries = 0
        self._memo: Dict[Tuple[Constraint, ...], Result] = {}

    # ------------------------------------------------------------------
    # Public surface
    # ------------------------------------------------------------------

    def is_satisfiable(self, conj: Conjunction) -> Result:
        """
        Decide a conjunction.

        Raises:
            ResourceLimit: when the constraint or variable cap is exceeded
        """
        if conj.is_false:
            return Result.UNSAT
        constraints = tuple(c for c in conj if not c.is_true)
        if not constraints:
            return Result.SAT

        variables = sorted(set().union(*(c.variables() for c in constraints)))
        if len(constraints) > self.max_constraints or len(variables) > self.max_variables:
            raise ResourceLimit(
                f"{len(constraints)} constraints over {len(variables)} variables exceeds "
                f"caps ({self.max_constraints}, {self.max_variables})")

        cached = self._memo.get(constraints)
        if cached is not None:
            return cached

        self.queries += 1
        if all(len(c.terms) <= 1 for c in constraints):
            result = self._decide_boxes(constraints)
        else:
            le = [c for c in constraints if c.rel == Rel.LE]
            eq = [c for c in constraints if c.rel == Rel.EQ]
            ne = [c for c in constraints if c.rel == Rel.NE]
            result = self._branch(le, eq, ne, variables, [self.split_cap])
        if len(self._memo) >= self.memo_cap:
            logger.debug(f"Solver memo reached {self.memo_cap} entries, clearing")
            self._memo.clear()
        self._memo[constraints] = result
        return result

    def check(self, conj: Conjunction) -> Result:
        """is_satisfiable with resource limits reported as Unknown."""
        try:
            return self.is_satisfiable(conj)
        except ResourceLimit as e:
            logger.warning(f"Solver cap reached, answering unknown: {e}")
            return Result.UNKNOWN

    def entails(self, a: Conjunction, b: Conjunction) -> Entailment:
        """Yes only if a ∧ ¬β is Unsat for every constraint β of b."""
        for beta in b:
            if beta.is_true:
                continue
            query = Conjunction(a.constraints + (beta.negate(),))
            if self.check(query) != Result.UNSAT:
                return Entailment.UNKNOWN
        return Entailment.YES

    def unsat_core(self, conj: Conjunction) -> Conjunction:
        """
        Deletion-minimal unsatisfiable subset, scanning in constraint order.

        Raises:
            PreconditionError: if conj is not Unsat
        """
        if self.check(conj) != Result.UNSAT:
            raise PreconditionError(f"unsat_core called on a conjunction that is not unsat: {conj}")
        core = list(conj.constraints)
        i = 0
        while i < len(core):
            trial = Conjunction(tuple(core[:i] + core[i + 1:]))
            if self.check(trial) == Result.UNSAT:
                core = list(trial.constraints)
            else:
                i += 1
        return Conjunction(tuple(core))

    def bounds(self, conj: Conjunction, var: str) -> Optional[Tuple[float, float]]:
        """
        Integer bounds of a variable under a conjunction.

        Returns:
            (lo, hi) with ±inf for unbounded sides, or None when the
            conjunction is infeasible
        """
        if conj.is_false:
            return None
        constraints = [c for c in conj if not c.is_true]
        mentioned = set().union(*(c.variables() for c in constraints))
        if all(len(c.terms) <= 1 for c in constraints):
            box = self._boxes(constraints)
            if box is None:
                return None
            lo, hi, _ = box.get(var, (-math.inf, math.inf, set()))
            return (lo, hi)
        if var not in mentioned:
            # Still need feasibility of the rest
            if self.check(Conjunction(tuple(constraints))) == Result.UNSAT:
                return None
            return (-math.inf, math.inf)

        variables = sorted(mentioned)
        if len(constraints) > self.max_constraints or len(variables) > self.max_variables:
            logger.warning(f"Bounds query for {var} exceeds solver caps, using top")
            return (-math.inf, math.inf)
        le = [c for c in constraints if c.rel == Rel.LE]
        eq = [c for c in constraints if c.rel == Rel.EQ]
        objective = np.zeros(len(variables))
        objective[variables.index(var)] = 1.0

        low = self._lp(le, eq, variables, objective)
        if low is None:
            return (-math.inf, math.inf)
        if low.status == 2:
            return None
        high = self._lp(le, eq, variables, -objective)
        lo = math.ceil(low.fun - ROUNDING_EPS) if low.status == 0 else -math.inf
        hi = math.floor(-high.fun + ROUNDING_EPS) if high is not None and high.status == 0 else math.inf
        return (lo, hi)

    # ------------------------------------------------------------------
    # Single-variable fast path
    # ------------------------------------------------------------------

    @staticmethod
    def _boxes(constraints: Sequence[Constraint]) -> Optional[Dict[str, Tuple[float, float, set]]]:
        box: Dict[str, list] = {}
        for c in constraints:
            if c.is_constant:
                if c.is_false:
                    return None
                continue
            (var, a), = c.terms
            lo, hi, excluded = box.setdefault(var, [-math.inf, math.inf, set()])
            if c.rel == Rel.LE:
                # gcd normalization leaves a = ±1
                if a > 0:
                    hi = min(hi, c.bound)
                else:
                    lo = max(lo, -c.bound)
            elif c.rel == Rel.EQ:
                lo, hi = max(lo, c.bound), min(hi, c.bound)
            else:
                excluded.add(c.bound)
            box[var] = [lo, hi, excluded]

        result = {}
        for var, (lo, hi, excluded) in box.items():
            while lo in excluded:
                lo += 1
            while hi in excluded:
                hi -= 1
            if lo > hi:
                return None
            result[var] = (lo, hi, excluded)
        return result

    def _decide_boxes(self, constraints: Sequence[Constraint]) -> Result:
        return Result.UNSAT if self._boxes(constraints) is None else Result.SAT

    # ------------------------------------------------------------------
    # LP / MILP path
    # ------------------------------------------------------------------

    @staticmethod
    def _matrix(rows: Sequence[Constraint], variables: List[str]):
        if not rows:
            return None, None
        index = {v: i for i, v in enumerate(variables)}
        a = np.zeros((len(rows), len(variables)))
        b = np.zeros(len(rows))
        for r, c in enumerate(rows):
            for var, coeff in c.terms:
                a[r, index[var]] = coeff
            b[r] = c.bound
        return a, b

    def _lp(self, le, eq, variables, objective=None, integral=False):
        a_ub, b_ub = self._matrix(le, variables)
        a_eq, b_eq = self._matrix(eq, variables)
        if objective is None:
            objective = np.zeros(len(variables))
        kwargs = {}
        if integral:
            kwargs['integrality'] = np.ones(len(variables))
            kwargs['options'] = {'time_limit': self.milp_time_limit}
        try:
            return linprog(objective, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                           bounds=(None, None), method="highs", **kwargs)
        except ValueError as e:
            logger.error(f"Failed to run linprog on {len(le) + len(eq)} constraints: {e}")
            return None

    @staticmethod
    def _rounded(x, variables: List[str]) -> Dict[str, int]:
        return {v: int(round(float(value))) for v, value in zip(variables, x)}

    def _integral_model(self, le, eq, variables, relaxed) -> Tuple[Result, Optional[Dict[str, int]]]:
        model = self._rounded(relaxed.x, variables)
        if all(c.holds(model) for c in le) and all(c.holds(model) for c in eq):
            return Result.SAT, model

        res = self._lp(le, eq, variables, integral=True)
        if res is None:
            return Result.UNKNOWN, None
        if res.status == 2:
            return Result.UNSAT, None
        if res.status == 0 and res.x is not None:
            model = self._rounded(res.x, variables)
            if all(c.holds(model) for c in le) and all(c.holds(model) for c in eq):
                return Result.SAT, model
        logger.warning(f"Integral model search inconclusive (status {res.status}: {res.message})")
        return Result.UNKNOWN, None

    def _branch(self, le, eq, ne, variables, budget) -> Result:
        budget[0] -= 1
        if budget[0] < 0:
            logger.warning(f"Disequality split cap {self.split_cap} reached, answering unknown")
            return Result.UNKNOWN

        relaxed = self._lp(le, eq, variables)
        if relaxed is None:
            return Result.UNKNOWN
        if relaxed.status == 2:
            return Result.UNSAT
        if relaxed.status != 0:
            logger.warning(f"LP relaxation inconclusive (status {relaxed.status}: {relaxed.message})")
            return Result.UNKNOWN

        verdict, model = self._integral_model(le, eq, variables, relaxed)
        if verdict == Result.UNSAT:
            return Result.UNSAT
        if model is not None:
            violated = [c for c in ne if not c.holds(model)]
            if not violated:
                return Result.SAT
            pivot = violated[0]
        elif ne:
            pivot = ne[0]
        else:
            return Result.UNKNOWN

        rest = [c for c in ne if c is not pivot]
        below = Constraint.make(dict(pivot.terms), Rel.LE, pivot.bound - 1)
        above = Constraint.make(dict(pivot.terms), Rel.GE, pivot.bound + 1)
        outcomes = []
        for side in (below, above):
            outcome = self._branch(le + [side], eq, rest, variables, budget)
            if outcome == Result.SAT:
                return Result.SAT
            outcomes.append(outcome)
        if all(o == Result.UNSAT for o in outcomes):
            return Result.UNSAT
        return Result.UNKNOWN

    def clear(self) -> None:
        self._memo.clear()

    @property
    def memo_size(self) -> int:
        return len(self._memo)


_default_solver: Optional[LinearSolver] = None


def default_solver() -> LinearSolver:
    global _default_solver
    if _default_solver is None:
        _default_solver = LinearSolver()
    return _default_solver


def is_satisfiable(conj: Conjunction) -> Result:
    return default_solver().is_satisfiable(conj)


def entails(a: Conjunction, b: Conjunction) -> Entailment:
    return default_solver().entails(a, b)


def unsat_core(conj: Conjunction) -> Conjunction:
    return default_solver().unsat_core(conj)
