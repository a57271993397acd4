"""
Test bound expressions.

Tests ensure that symexpr.py correctly:
- Simplifies through its smart constructors
- Evaluates exactly over extended integers
- Renders compactly
- Keeps values through the sympy bridge
"""

import unittest
from fractions import Fraction
from pathlib import Path

# Add parent to path
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.sizedcost.symexpr import (
    INF,
    INFINITY,
    ONE,
    ZERO,
    Add,
    Const,
    Max,
    Min,
    RecurrenceError,
    Sub,
    Var,
    add,
    call,
    calls,
    evaluate,
    fib,
    fibonacci,
    map_calls,
    mul,
    power,
    render,
    simplify,
    smax,
    smin,
    sub,
    substitute,
    unclamp,
    variables,
)

N = Var('n', 'U')
M = Var('m', 'U')


class TestConstructors(unittest.TestCase):
    """Test smart constructor simplification"""

    def test_add_folds_constants(self):
        """Test constants fold and move last"""
        self.assertEqual(add(1, N, 2), Add((N, Const(3))))
        self.assertEqual(add(N, 0), N)
        self.assertEqual(add(N, INFINITY), INFINITY)

    def test_mul_folds_constants(self):
        """Test coefficients fold and zero absorbs"""
        self.assertEqual(mul(2, N, 3).factors[0], Const(6))
        self.assertEqual(mul(N, 0), ZERO)
        self.assertEqual(mul(N, 1), N)

    def test_sub_is_clamped(self):
        """Test differences clamp at zero"""
        self.assertEqual(sub(3, 5), ZERO)
        self.assertEqual(sub(N, N), ZERO)
        self.assertEqual(sub(N, 0), N)
        self.assertIsInstance(sub(N, 1), Sub)

    def test_lattice(self):
        """Test min/max flattening, identities and absorption"""
        self.assertEqual(smin(N, N), N)
        self.assertEqual(smin(N, INFINITY), N)
        self.assertEqual(smax(N, Const(-INF)), N)
        self.assertEqual(smax(N, INFINITY), INFINITY)
        self.assertEqual(smin(smin(N, M), 2), Min((M, N, Const(2))))
        self.assertEqual(smin(smax(N, M), M), M)
        self.assertEqual(smax(2, 5), Const(5))

    def test_lattice_is_canonical(self):
        """Test argument order does not change the result"""
        self.assertEqual(smin(N, M), smin(M, N))
        self.assertEqual(smax(add(N, 1), M), smax(M, add(N, 1)))

    def test_lattice_offsets(self):
        """Test x and x+c collapse to the larger or smaller one"""
        self.assertEqual(smax(N, add(N, 1)), add(N, 1))
        self.assertEqual(smin(N, add(N, 1)), N)
        self.assertEqual(smin(add(N, 2), add(N, 1), M), Min((M, add(N, 1))))

    def test_lattice_sizes_are_naturals(self):
        """Test zero is dropped or absorbing next to non-negative sizes"""
        self.assertEqual(smax(N, 0), N)
        self.assertEqual(smax(sub(N, 1), 0), sub(N, 1))
        self.assertEqual(smin(mul(N, M), 0), ZERO)
        self.assertEqual(smax(add(N, -1), 0), Max((add(N, -1), ZERO)))

    def test_unclamp(self):
        """Test clamped differences become plain where the variable is large enough"""
        expr = add(sub(N, 1), 3)
        self.assertEqual(render(expr), "n-1+3")
        self.assertEqual(unclamp(expr, {'n': 1}), add(N, 2))
        self.assertEqual(render(unclamp(expr, {'n': 1})), "n+2")
        self.assertEqual(unclamp(expr, {'n': 0}), expr)
        self.assertEqual(unclamp(sub(M, 2), {'n': 5}), sub(M, 2))

    def test_power_and_fib_of_constants(self):
        """Test constant folding of exponentials"""
        self.assertEqual(power(2, 10), Const(1024))
        self.assertEqual(fib(10), Const(55))
        self.assertEqual(power(2, INFINITY), INFINITY)

    def test_operators(self):
        """Test Python operators build expressions"""
        self.assertEqual(N + 1, add(N, 1))
        self.assertEqual(2 * N, mul(2, N))


class TestEvaluation(unittest.TestCase):
    """Test exact evaluation"""

    def test_polynomial(self):
        """Test a polynomial with a clamped difference"""
        expr = add(mul(N, M), sub(N, 3), 1)
        self.assertEqual(evaluate(expr, {'n': 5, 'm': 2}), 13)
        self.assertEqual(evaluate(expr, {'n': 2, 'm': 2}), 5)

    def test_infinity(self):
        """Test ∞ arithmetic and 0·∞ = 0"""
        self.assertEqual(evaluate(add(N, 1), {'n': INF}), INF)
        self.assertEqual(evaluate(mul(N, M), {'n': 0, 'm': INF}), 0)
        self.assertEqual(evaluate(sub(5, N), {'n': INF}), 0)

    def test_fractions_stay_exact(self):
        """Test rationals never become floats"""
        expr = mul(Const(Fraction(1, 2)), N)
        self.assertEqual(evaluate(expr, {'n': 3}), Fraction(3, 2))
        self.assertEqual(evaluate(expr, {'n': 4}), 2)

    def test_exponentials(self):
        """Test powers and Fibonacci terms"""
        self.assertEqual(evaluate(power(2, N), {'n': 5}), 32)
        self.assertEqual(evaluate(fib(add(N, 1)), {'n': 5}), 8)
        self.assertEqual(fibonacci(-3), 2)

    def test_unassigned_variable(self):
        """Test missing variables raise"""
        with self.assertRaises(RecurrenceError):
            evaluate(N, {})

    def test_calls_need_handler(self):
        """Test calls evaluate through the handler"""
        expr = add(call('f', [N]), 1)
        with self.assertRaises(RecurrenceError):
            evaluate(expr, {'n': 1})
        self.assertEqual(evaluate(expr, {'n': 4}, lambda fn, args: args[0] * 10), 41)


class TestTraversals(unittest.TestCase):
    """Test substitution and call rewriting"""

    def test_substitute(self):
        """Test substitution resimplifies"""
        self.assertEqual(substitute(add(N, M), {'m': Const(2)}), add(N, 2))
        self.assertEqual(substitute(sub(N, 1), {'n': ONE}), ZERO)

    def test_calls_and_variables(self):
        """Test call collection and replacement"""
        expr = add(call('f', [sub(N, 1)]), M)
        self.assertEqual([c.fn for c in calls(expr)], ['f'])
        self.assertEqual(variables(expr), frozenset({'n', 'm'}))
        replaced = map_calls(expr, lambda c: c.args[0])
        self.assertEqual(replaced, add(sub(N, 1), M))


class TestRendering(unittest.TestCase):
    """Test compact rendering"""

    def test_render(self):
        """Test sums, products, differences and lattices"""
        self.assertEqual(render(add(N, 1)), "n+1")
        self.assertEqual(render(add(N, -1)), "n-1")
        self.assertEqual(render(mul(2, N, M)), "2·n·m")
        self.assertEqual(render(sub(N, add(M, 1))), "n-(m+1)")
        self.assertEqual(render(smin(N, M)), "min(m,n)")
        self.assertEqual(render(power(2, add(N, 1))), "2^(n+1)")
        self.assertEqual(render(INFINITY), "∞")
        self.assertEqual(str(Max((N, M))), "max(n,m)")


class TestSympyBridge(unittest.TestCase):
    """Test simplification through sympy"""

    def test_simplify_keeps_values(self):
        """Test expansion preserves values at sample points"""
        expr = mul(add(N, 1), add(N, 2))
        simple = simplify(expr)
        for n in range(6):
            self.assertEqual(evaluate(simple, {'n': n}), evaluate(expr, {'n': n}))

    def test_simplify_keeps_infinite_forms(self):
        """Test forms with ∞ or clamped differences are left alone"""
        self.assertEqual(simplify(sub(N, 1)), sub(N, 1))
        expr = smax(N, INFINITY)
        self.assertEqual(simplify(expr), expr)

    def test_sides_survive(self):
        """Test variables keep their side through the bridge"""
        self.assertEqual(simplify(mul(add(N, 1), 2)), add(mul(2, N), 2))


if __name__ == '__main__':
    unittest.main()
