"""
Tests for canonical linear terms and constraint normalization
"""
from wcet.linear import FALSE, TRUE, Conjunction, Constraint, LinExpr, Rel


def c(coeffs, rel, bound):
    return Constraint.make(coeffs, rel, bound)


class TestLinExpr:
    def test_zero_coefficients_vanish(self):
        """x - x + 2 is the constant 2."""
        e = LinExpr.var('x') - LinExpr.var('x') + LinExpr.constant(2)
        assert e.terms == ()
        assert e.const == 2

    def test_substitute(self):
        """Substituting x := y + 1 into 2x + 3 gives 2y + 5."""
        e = LinExpr.build({'x': 2}, 3).substitute({'x': LinExpr.var('y') + LinExpr.constant(1)})
        assert e == LinExpr.build({'y': 2}, 5)

    def test_evaluate(self):
        assert LinExpr.build({'x': 3, 'y': -1}, -4).evaluate({'x': 2, 'y': 1}) == 1
        assert LinExpr.constant(7).evaluate({}) == 7

    def test_printing(self):
        assert str(LinExpr.build({'x': 3, 'y': -1}, -4)) == '3*x - y - 4'
        assert str(LinExpr.build({'x': -1})) == '-x'
        assert str(LinExpr.constant(0)) == '0'


class TestConstraint:
    def test_strict_is_tightened(self):
        """x < 5 becomes x <= 4 over the integers."""
        assert c({'x': 1}, Rel.LT, 5) == Constraint((('x', 1),), Rel.LE, 4)

    def test_ge_is_negated(self):
        """x >= 5 becomes -x <= -5."""
        assert c({'x': 1}, Rel.GE, 5) == Constraint((('x', -1),), Rel.LE, -5)

    def test_gcd_floors_inequalities(self):
        """2x + 4y <= 7 becomes x + 2y <= 3."""
        assert c({'x': 2, 'y': 4}, Rel.LE, 7) == Constraint((('x', 1), ('y', 2)), Rel.LE, 3)

    def test_non_divisible_equality_is_false(self):
        assert c({'x': 2}, Rel.EQ, 3) == FALSE
        assert c({'x': 2}, Rel.NE, 3) == TRUE

    def test_constants_decide(self):
        assert c({}, Rel.LE, 0).is_true
        assert c({}, Rel.LE, -1).is_false
        assert c({}, Rel.GE, 1).is_false

    def test_negate_inequality(self):
        """not (x <= 4) is x >= 5."""
        assert c({'x': 1}, Rel.LE, 4).negate() == c({'x': 1}, Rel.GE, 5)

    def test_negate_equality(self):
        assert c({'x': 1}, Rel.EQ, 4).negate() == c({'x': 1}, Rel.NE, 4)

    def test_from_relation_moves_constants(self):
        """x + 2 <= y is x - y <= -2."""
        got = Constraint.from_relation(LinExpr.build({'x': 1}, 2), Rel.LE, LinExpr.var('y'))
        assert got == c({'x': 1, 'y': -1}, Rel.LE, -2)

    def test_holds(self):
        assert c({'x': 1, 'y': -1}, Rel.GE, 5).holds({'x': 7, 'y': 1})
        assert not c({'x': 1}, Rel.NE, 3).holds({'x': 3})


class TestConjunction:
    def test_conjoin_skips_true_and_duplicates(self):
        x5 = c({'x': 1}, Rel.GE, 5)
        conj = Conjunction.true().conjoin([x5, TRUE, x5])
        assert conj.constraints == (x5,)

    def test_false_absorbs(self):
        conj = Conjunction.of(c({'x': 1}, Rel.GE, 5)).conjoin([FALSE])
        assert conj.is_false
        assert str(conj) == 'false'

    def test_substitute(self):
        conj = Conjunction.of(c({'x': 1}, Rel.GE, 1))
        got = conj.substitute({'x': LinExpr.var('x') + LinExpr.constant(1)})
        assert got == Conjunction.of(c({'x': 1}, Rel.GE, 0))
