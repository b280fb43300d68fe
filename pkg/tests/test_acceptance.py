"""
Oracle sweeps over generated programs: exactness, anytime bracketing and
the effect of the pruning switches
"""
import pytest

from wcet.generator import random_program
from wcet.hset import IncrementalAnalysis, RunOptions, incremental_analysis
from wcet.oracle import exhaustive_wcet
from wcet.symex import initial_state, replay

SWEEP = range(100)


def is_sorted(values, reverse=False):
    values = list(values)
    return values == sorted(values, reverse=reverse)


@pytest.mark.slow
class TestOracleSweep:
    @pytest.mark.parametrize('seed', SWEEP)
    def test_exact_matches_oracle(self, seed, small_cfg):
        ts = random_program(seed, max_branches=6)
        report = incremental_analysis(ts, small_cfg)
        oracle = exhaustive_wcet(ts, small_cfg)
        assert report.converged and report.exact
        assert report.final_upper == oracle.wcet

    def test_eight_branches(self, small_cfg):
        ts = random_program(2024, branches=8)
        report = incremental_analysis(ts, small_cfg)
        assert report.final_lower == report.final_upper == exhaustive_wcet(ts, small_cfg).wcet


class TestAnytimeBracketing:
    @pytest.mark.parametrize('seed', range(30))
    def test_every_iteration_brackets(self, seed, small_cfg):
        ts = random_program(seed, max_branches=5)
        wcet = exhaustive_wcet(ts, small_cfg).wcet
        report = incremental_analysis(ts, small_cfg)
        for rec in report.trace:
            assert rec.lower <= wcet <= rec.upper
        assert is_sorted(rec.lower for rec in report.trace)
        assert is_sorted((rec.upper for rec in report.trace), reverse=True)

    @pytest.mark.parametrize('seed', range(10))
    def test_iteration_caps_still_bracket(self, seed, small_cfg):
        ts = random_program(seed, max_branches=5)
        wcet = exhaustive_wcet(ts, small_cfg).wcet
        for cap in (0, 1, 2):
            report = incremental_analysis(ts, small_cfg, RunOptions(max_iterations=cap))
            assert report.final_lower <= wcet <= report.final_upper

    @pytest.mark.parametrize('seed', range(20))
    def test_lower_bound_is_witnessed(self, seed, small_cfg, solver):
        """The root's lower path replays to the reported lower bound."""
        ts = random_program(seed, max_branches=5)
        analysis = IncrementalAnalysis(ts, small_cfg, solver=solver)
        report = analysis.run()
        path = report.root.annotation.lower_path
        if path is None:
            assert report.final_lower == 0
            return
        end = replay(initial_state(ts, small_cfg), path, small_cfg, solver)
        assert end.prefix_cost == report.root.through_lower == report.final_lower


class TestEpsilonMode:
    @pytest.mark.parametrize('seed', range(20))
    def test_gap_within_epsilon(self, seed, small_cfg):
        ts = random_program(seed, max_branches=6)
        report = incremental_analysis(ts, small_cfg, RunOptions(mode='epsilon', epsilon=0.2))
        wcet = exhaustive_wcet(ts, small_cfg).wcet
        assert report.converged
        assert report.final_lower <= wcet <= report.final_upper
        if report.final_upper:
            assert (report.final_upper - report.final_lower) / report.final_upper <= 0.2

    @pytest.mark.parametrize('seed', range(20))
    def test_stops_at_first_iteration_within_gap(self, seed, small_cfg):
        """Every record before the last is still wider than epsilon."""
        ts = random_program(seed, max_branches=6)
        report = incremental_analysis(ts, small_cfg, RunOptions(mode='epsilon', epsilon=0.05))
        assert report.converged
        for rec in report.trace[:-1]:
            assert rec.upper > 0
            assert (rec.upper - rec.lower) / rec.upper > 0.05
        last = report.trace[-1]
        assert last.upper == 0 or (last.upper - last.lower) / last.upper <= 0.05

    @pytest.mark.parametrize('seed', range(10))
    def test_never_slower_than_exact(self, seed, small_cfg):
        ts = random_program(seed, max_branches=6)
        exact = incremental_analysis(ts, small_cfg)
        loose = incremental_analysis(ts, small_cfg, RunOptions(mode='epsilon', epsilon=0.2))
        assert loose.iterations <= exact.iterations


class TestPruningSwitches:
    @pytest.mark.parametrize('seed', range(15))
    def test_domination_off_same_result(self, seed, small_cfg):
        ts = random_program(seed, max_branches=5)
        on = incremental_analysis(ts, small_cfg)
        off = incremental_analysis(ts, small_cfg, RunOptions(domination=False))
        assert off.final_upper == on.final_upper
        assert off.steps >= on.steps

    @pytest.mark.parametrize('seed', range(15))
    def test_subsumption_off_same_result(self, seed, small_cfg):
        ts = random_program(seed, max_branches=5)
        on = incremental_analysis(ts, small_cfg)
        off = incremental_analysis(ts, small_cfg, RunOptions(subsumption=False))
        assert off.final_upper == on.final_upper
        assert off.subsumption_hits == 0

    @pytest.mark.parametrize('seed', range(15))
    def test_consistency_checks_hold(self, seed, small_cfg):
        """No transition is stepped twice from one node and prefix costs stay consistent."""
        ts = random_program(seed, max_branches=5)
        report = incremental_analysis(ts, small_cfg, RunOptions(check_consistency=True))
        assert report.exact
