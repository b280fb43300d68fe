"""
Tests for the hybrid symbolic execution tree and the anytime driver
"""
import pytest

from wcet.cache import CacheConfig
from wcet.errors import PreconditionError
from wcet.hset import (Annotation, HsetNode, IncrementalAnalysis, NodeKind, RunOptions, bounds_heuristic,
                       combine, dominates, incremental_analysis, refinement_heuristic, wlp_approx)
from wcet.ir import Assign, Assume, Condition, parse_program
from wcet.linear import Conjunction, Constraint, LinExpr, Rel
from wcet.oracle import exhaustive_wcet
from wcet.solver import default_solver
from wcet.symex import initial_state


def c(coeffs, rel, bound):
    return Constraint.make(coeffs, rel, bound)


def leaf(point, prefix_cost, upper, trail=0):
    """A detached AI leaf with a fake state carrying point, trail and prefix cost."""
    ts = parse_program(f"point {point} terminal\nstart {point}\n")
    state = initial_state(ts, CacheConfig())
    state = type(state)(point, state.store, state.path_condition, (None,) * trail, state.cache, prefix_cost)
    return HsetNode(state, NodeKind.AI_LEAF, Annotation(0, upper, ((),)))


def exact_node(point, prefix_cost, value):
    node = leaf(point, prefix_cost, value)
    node.annotation = Annotation(value, value, (), Conjunction.true(), ())
    return node


class TestCombine:
    def test_larger_upper_wins_witness(self):
        got = combine(Annotation(0, 3, (('p',),)), Annotation(0, 4, (('q',),)))
        assert (got.lower, got.upper, got.witnesses) == (0, 4, (('q',),))

    def test_infeasible_is_identity(self):
        x = Annotation(1, 5, (('p',),), lower_path=('p',))
        assert combine(x, Annotation.infeasible()) == x
        assert combine(Annotation.infeasible(), x) == x

    def test_equal_uppers_take_second(self):
        """With a total order both tests hold; the first branch picks the second witness."""
        got = combine(Annotation(2, 5, (('p',),)), Annotation(3, 5, (('q',),)))
        assert (got.lower, got.upper, got.witnesses) == (3, 5, (('q',),))

    def test_lower_path_follows_lower(self):
        got = combine(Annotation(2, 2, (), lower_path=('a',)), Annotation(0, 5, (('q',),)))
        assert got.lower == 2
        assert got.lower_path == ('a',)
        assert not got.exact


class TestDomination:
    def test_exact_dominates_equal_upper(self):
        assert dominates(exact_node('a', 0, 3), leaf('b', 0, 3))

    def test_trivial_lower_dominates_nothing(self):
        assert not dominates(leaf('a', 0, 9), leaf('b', 0, 1))

    def test_exact_dominates_itself(self):
        node = exact_node('a', 2, 3)
        assert dominates(node, node)


class TestRefinementHeuristic:
    def test_highest_upper(self):
        low, high = leaf('l2', 0, 3), leaf('l3', 3, 1)
        assert refinement_heuristic([low, high]) is high

    def test_singleton(self):
        only = leaf('a', 0, 1)
        assert refinement_heuristic([only]) is only

    def test_shorter_trail_breaks_tie(self):
        short, long_ = leaf('b', 0, 5, trail=2), leaf('a', 0, 5, trail=3)
        assert refinement_heuristic([long_, short]) is short

    def test_empty(self):
        with pytest.raises(PreconditionError):
            refinement_heuristic([])


class TestBoundsHeuristic:
    def test_epsilon_met(self):
        assert bounds_heuristic(None, RunOptions(mode='epsilon', epsilon=0.05), [], 95, 100)

    def test_epsilon_not_met(self):
        assert not bounds_heuristic(None, RunOptions(mode='epsilon', epsilon=0.05), [], 0, 100)

    def test_zero_upper_is_exact(self):
        assert bounds_heuristic(None, RunOptions(mode='epsilon'), [], 0, 0)

    def test_exact_mode_needs_domination(self):
        root = exact_node('r', 0, 3)
        assert bounds_heuristic(root, RunOptions(), [leaf('a', 0, 3)])
        assert not bounds_heuristic(root, RunOptions(), [leaf('a', 0, 4)])


class TestWlp:
    def test_assignment_substitutes(self):
        psi = Conjunction.of(c({'x': 1}, Rel.GE, 1))
        op = Assign('x', LinExpr.var('x') + LinExpr.constant(1))
        assert wlp_approx(psi, op, Conjunction.true()) == Conjunction.of(c({'x': 1}, Rel.GE, 0))

    def test_refuted_guard_keeps_core(self):
        """The context x >= 5 explains why x < 5 is refuted."""
        context = Conjunction.of(c({'y': 1}, Rel.LE, 2), c({'x': 1}, Rel.GE, 5))
        op = Assume(Condition(LinExpr.var('x'), Rel.LT, LinExpr.constant(5)))
        assert wlp_approx(Conjunction.false(), op, context) == Conjunction.of(c({'x': 1}, Rel.GE, 5))

    def test_true_stays_true(self):
        op = Assume(Condition(LinExpr.var('x'), Rel.LT, LinExpr.constant(5)))
        assert wlp_approx(Conjunction.true(), op, Conjunction.true()).is_true
        assert wlp_approx(Conjunction.true(), Assign('x', LinExpr.constant(0)), Conjunction.true()).is_true

    def test_guard_implied_conjuncts_dropped(self):
        psi = Conjunction.of(c({'x': 1}, Rel.GE, 3), c({'y': 1}, Rel.GE, 0))
        op = Assume(Condition(LinExpr.var('x'), Rel.GE, LinExpr.constant(5)))
        assert wlp_approx(psi, op, Conjunction.true()) == Conjunction.of(c({'y': 1}, Rel.GE, 0))

    def test_imprecise_feasible_child(self):
        op = Assume(Condition(LinExpr.var('x'), Rel.LT, LinExpr.constant(5)))
        assert wlp_approx(Conjunction.false(), op, Conjunction.true()).is_false


class TestIncrementsWalkthrough:
    def test_upper_sequence(self, increments, plain_cfg):
        """Bounds go 6, 4, then exact 3."""
        report = incremental_analysis(increments, plain_cfg, RunOptions())
        assert [rec.upper for rec in report.trace] == [6, 4, 3]
        assert (report.final_lower, report.final_upper) == (3, 3)
        assert report.exact and report.converged

    def test_second_refinement_targets_upper_four(self, increments, plain_cfg):
        report = incremental_analysis(increments, plain_cfg, RunOptions())
        assert len(report.refinements) == 2
        _, point, through_upper = report.refinements[1]
        assert (point, through_upper) == ('l3', 4)

    def test_first_refinement_leaves(self, increments, plain_cfg):
        """After one refinement the open leaves sit at l3 (upper 4) and l2 (upper 3)."""
        analysis = IncrementalAnalysis(increments, plain_cfg, RunOptions(max_iterations=1))
        report = analysis.run()
        assert report.final_upper == 4
        uppers = sorted((n.point, n.through_upper) for n in analysis.leaves)
        assert uppers == [('l2', 3), ('l3', 4)]

    def test_remaining_leaf_is_dominated(self, increments, plain_cfg):
        analysis = IncrementalAnalysis(increments, plain_cfg, RunOptions())
        analysis.run()
        assert [n.point for n in analysis.leaves] == ['l2']
        assert all(dominates(analysis.root, n) for n in analysis.leaves)

    def test_ai_upper(self, increments, plain_cfg):
        assert incremental_analysis(increments, plain_cfg).ai_upper == 6


class TestRefineUnfold:
    def test_single_path(self, single, plain_cfg):
        """Cost 7 on the only path: exact after one refinement."""
        report = incremental_analysis(single, plain_cfg)
        assert (report.final_lower, report.final_upper, report.iterations) == (7, 7, 1)

    def test_refined_node_exact(self, increments, plain_cfg):
        analysis = IncrementalAnalysis(increments, plain_cfg)
        analysis.run()
        l3 = [n for n in analysis.root.walk() if n.point == 'l3' and n.kind == NodeKind.EXPANDED]
        assert len(l3) == 1
        kinds = sorted(child.kind.value for _, child in l3[0].children)
        assert kinds == ['infeasible', 'terminal']
        assert l3[0].through_lower == l3[0].through_upper == 3

    def test_witness_must_start_at_node(self, increments, plain_cfg):
        analysis = IncrementalAnalysis(increments, plain_cfg)
        analysis.run()
        wrong = increments.outgoing('l2')[:1]
        with pytest.raises(PreconditionError):
            analysis.refine_unfold(analysis.root, wrong)

    def test_interpolant_only_on_exact(self, two_diamond, small_cfg):
        analysis = IncrementalAnalysis(two_diamond, small_cfg)
        analysis.run()
        for node in analysis.root.walk():
            if not node.annotation.interpolant.is_false:
                assert node.annotation.exact
            if node.annotation.exact:
                assert node.annotation.witnesses == ()


class TestPropagateBack:
    def test_exact_and_open_children(self, plain_cfg):
        """Children exact 2 and [0, 5] over zero-cost edges give [2, 5]."""
        ts = parse_program("vars x\npoint a\npoint b\npoint c\npoint t terminal\nstart a\n"
                           "trans a -> b assume x >= 0\ntrans a -> c assume x < 0\n"
                           "trans b -> t assign x := x cost 2\ntrans c -> t assign x := x cost 5\n")
        analysis = IncrementalAnalysis(ts, plain_cfg)
        analysis.root = HsetNode(initial_state(ts, plain_cfg))
        analysis._make_leaf(analysis.root)
        analysis.refine_unfold(analysis.root, ts.outgoing('a')[:1] + ts.outgoing('b'))
        analysis.propagate_back(analysis.root)
        annotation = analysis.root.annotation
        assert (annotation.lower, annotation.upper) == (2, 5)


class TestTwoDiamond:
    def test_exact_matches_oracle_below_ai(self, two_diamond, small_cfg):
        report = incremental_analysis(two_diamond, small_cfg)
        oracle = exhaustive_wcet(two_diamond, small_cfg)
        assert report.exact
        assert report.final_upper == oracle.wcet == 25
        assert report.ai_upper > report.final_upper


class TestSubsumption:
    def test_diamonds_reuse(self, diamonds, plain_cfg):
        report = incremental_analysis(diamonds, plain_cfg)
        assert report.final_lower == report.final_upper == 9
        assert report.subsumption_hits >= 1

    def test_disabled(self, diamonds, plain_cfg):
        report = incremental_analysis(diamonds, plain_cfg, RunOptions(subsumption=False))
        assert report.final_upper == 9
        assert report.subsumption_hits == 0

    def test_imprecise_never_subsumes(self, diamonds, plain_cfg):
        analysis = IncrementalAnalysis(diamonds, plain_cfg)
        analysis.run()
        done = exact_node('a', 0, 3)
        done.annotation = Annotation(0, 3, ((),))
        assert not analysis.subsumes(done, initial_state(diamonds, plain_cfg))

    def test_violated_interpolant(self, increments, plain_cfg):
        """A node whose interpolant says x - y >= 5 cannot absorb a state with x - y < 5."""
        analysis = IncrementalAnalysis(increments, plain_cfg)
        analysis.run()
        (done,) = analysis.index['l2']
        assert not done.annotation.interpolant.is_true
        l2_leaf = analysis.leaves[0]
        assert not analysis.subsumes(done, l2_leaf.state)


class TestDriver:
    def test_budget_zero(self, increments, plain_cfg):
        report = incremental_analysis(increments, plain_cfg, RunOptions(budget_ms=0))
        assert report.iterations == 0
        assert not report.converged
        assert report.final_lower <= 3 <= report.final_upper

    def test_iteration_cap(self, increments, plain_cfg):
        report = incremental_analysis(increments, plain_cfg, RunOptions(max_iterations=1))
        assert (report.iterations, report.final_upper, report.converged) == (1, 4, False)

    def test_domination_saves_steps(self, increments, plain_cfg):
        on = incremental_analysis(increments, plain_cfg, RunOptions())
        off = incremental_analysis(increments, plain_cfg, RunOptions(domination=False))
        assert on.final_upper == off.final_upper == 3
        assert on.steps < off.steps

    def test_consistency_checks(self, two_diamond, small_cfg):
        report = incremental_analysis(two_diamond, small_cfg, RunOptions(check_consistency=True))
        assert report.final_upper == 25

    def test_shared_solver_starts_empty(self, increments, two_diamond, plain_cfg, small_cfg):
        incremental_analysis(two_diamond, small_cfg)
        shared = default_solver()
        assert shared.memo_size > 0
        IncrementalAnalysis(increments, plain_cfg)
        assert shared.memo_size == 0

    def test_terminal_start(self, plain_cfg):
        ts = parse_program("point p terminal\nstart p\n")
        report = incremental_analysis(ts, plain_cfg)
        assert (report.final_lower, report.final_upper, report.exact) == (0, 0, True)

    def test_rejects_bad_mode(self):
        with pytest.raises(ValueError):
            RunOptions(mode='fast')
