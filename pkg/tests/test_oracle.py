"""
Test the concrete cost semantics.

Tests ensure that oracle.py correctly:
- Counts solutions and resources over the whole search
- Stops runs at the step and depth limits
- Raises on instantiation errors
- Generates reproducible typed inputs
- Finds no bound violations on the corpus programs
"""

import unittest
from pathlib import Path

# Add parent to path
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.sizedcost.fixpoint import analyze
from tools.sizedcost.frontend import format_term, parse_program, parse_term
from tools.sizedcost.oracle import (
    ConcreteMeasure,
    OracleError,
    OracleLimits,
    check_bounds,
    check_entry,
    generate_inputs,
    input_sizes,
    run,
)
from tools.sizedcost.recurrence import LOWER, UPPER
from tools.sizedcost.regtypes import grammar_from_program
from tools.sizedcost.resdomain import SOLUTIONS, ResourceDef
from tools.sizedcost.utils import read_text

CORPUS = Path(__file__).parent.parent / 'corpus'
STEPS = (ResourceDef('steps'),)

MEMBER = """
:- regtype listnum := [] | [num|listnum].
member(X, [X|_]).
member(X, [_|T]) :- member(X, T).
loop(X) :- loop(X).
inc(X, Y) :- Y is X + Z.
"""


def corpus_program(name):
    return parse_program(read_text(CORPUS / f"{name}.pl"), f"{name}.pl")


def goal(text):
    return parse_term(text)


class TestRun(unittest.TestCase):
    """Test the interpreter"""

    def test_append(self):
        """Test one solution with one step per clause entered"""
        measure = run(corpus_program('append'), goal("append([1,2], [3], Zs)"), STEPS)
        self.assertEqual(measure.solutions, 1)
        self.assertEqual(measure.resources['steps'], 3)
        self.assertEqual(format_term(measure.answers[0]), "append([1,2],[3],[1,2,3])")
        self.assertTrue(measure.valid)

    def test_every_solution(self):
        """Test backtracking counts every solution and every clause entered"""
        measure = run(parse_program(MEMBER), goal("member(X, [1,2,3])"), STEPS)
        self.assertEqual(measure.solutions, 3)
        self.assertEqual(measure.resources['steps'], 6)
        self.assertEqual(measure.observed(SOLUTIONS), 3)

    def test_failure(self):
        """Test a goal without solutions"""
        measure = run(corpus_program('append'), goal("append([1], [], [2])"), STEPS)
        self.assertEqual(measure.solutions, 0)

    def test_literal_cost(self):
        """Test calls are charged the literal cost"""
        calls = (ResourceDef('calls', headcost=0, litcost=1),)
        measure = run(corpus_program('append'), goal("append([1,2,3], [], Zs)"), calls)
        self.assertEqual(measure.resources['calls'], 3)

    def test_step_limit(self):
        """Test an endless run is marked diverged"""
        measure = run(parse_program(MEMBER), goal("loop(1)"), STEPS, OracleLimits(step_limit=100))
        self.assertTrue(measure.diverged)
        self.assertFalse(measure.valid)
        self.assertIn("limit", measure.reason)

    def test_depth_limit(self):
        """Test the depth limit applies before the step limit"""
        measure = run(parse_program(MEMBER), goal("loop(1)"), STEPS, OracleLimits(depth_limit=50))
        self.assertTrue(measure.diverged)
        self.assertIn("depth", measure.reason)

    def test_instantiation_error(self):
        """Test arithmetic on an unbound variable raises"""
        with self.assertRaises(OracleError):
            run(parse_program(MEMBER), goal("inc(1, Y)"), STEPS)


class TestInputs(unittest.TestCase):
    """Test random inputs"""

    def setUp(self):
        self.grammar = grammar_from_program(parse_program(MEMBER))

    def test_reproducible(self):
        """Test the same seed gives the same inputs"""
        first = generate_inputs('listnum', self.grammar, 5, seed=3)
        second = generate_inputs('listnum', self.grammar, 5, seed=3)
        self.assertEqual([next(first) for _ in range(10)], [next(second) for _ in range(10)])

    def test_within_budget(self):
        """Test numbers and lengths stay within the budget"""
        stream = generate_inputs('listnum', self.grammar, 4, seed=1)
        for _ in range(50):
            term = format_term(next(stream))
            items = [int(x) for x in term.strip('[]').split(',') if x]
            self.assertLessEqual(len(items), 4)
            self.assertTrue(all(0 <= x <= 4 for x in items))

    def test_numbers(self):
        """Test num draws integers"""
        stream = generate_inputs('num', self.grammar, 3)
        self.assertTrue(all(0 <= next(stream).value <= 3 for _ in range(20)))


class TestChecking(unittest.TestCase):
    """Test bound checking"""

    @classmethod
    def setUpClass(cls):
        cls.program = corpus_program('append')
        cls.result = analyze(cls.program)
        cls.entry = cls.result.entry_points()[0]

    def test_input_sizes(self):
        """Test bound variables take the sizes of concrete inputs"""
        sizes = input_sizes(self.entry, [parse_term("[1,2]"), parse_term("[5]"), None], self.result.grammar)
        self.assertEqual(sizes['α1'], 2)
        self.assertEqual(sizes['β1'], 2)
        self.assertEqual(sizes['α2'], 1)
        self.assertEqual(sizes['γ1'], 1)
        self.assertEqual(sizes['δ1'], 2)

    def test_input_outside_pattern(self):
        """Test an input of the wrong type is rejected"""
        with self.assertRaises(OracleError):
            input_sizes(self.entry, [parse_term("f(1)"), parse_term("[]"), None], self.result.grammar)

    def test_violation(self):
        """Test an observed count above the upper bound is reported"""
        measure = ConcreteMeasure(goal("append([], [], Zs)"), solutions=1, resources={'steps': 100})
        sizes = input_sizes(self.entry, [parse_term("[]"), parse_term("[]"), None], self.result.grammar)
        verdict = check_bounds(measure, self.entry, sizes)
        self.assertFalse(verdict.passed)
        self.assertEqual([(v.quantity, v.side) for v in verdict.violations], [('steps', UPPER)])
        self.assertIn("observed 100", str(verdict.violations[0]))

    def test_lower_violation(self):
        """Test a run with fewer answers than the lower bound is reported"""
        measure = ConcreteMeasure(goal("append([1], [], Zs)"), solutions=0, resources={'steps': 2})
        sizes = input_sizes(self.entry, [parse_term("[1]"), parse_term("[]"), None], self.result.grammar)
        verdict = check_bounds(measure, self.entry, sizes)
        self.assertEqual([(v.quantity, v.side) for v in verdict.violations], [('solutions', LOWER)])

    def test_bounds_hold(self):
        """Test an exact measure passes both comparisons"""
        measure = ConcreteMeasure(goal("append([1,2], [3], Zs)"), solutions=1, resources={'steps': 3})
        sizes = input_sizes(self.entry, [parse_term("[1,2]"), parse_term("[3]"), None], self.result.grammar)
        self.assertTrue(check_bounds(measure, self.entry, sizes).passed)

    def test_diverged_measure(self):
        """Test a diverged run cannot be checked"""
        measure = ConcreteMeasure(goal("append([], [], Zs)"), diverged=True, reason="step limit")
        with self.assertRaises(OracleError):
            check_bounds(measure, self.entry, {})

    def test_append_sound(self):
        """Test append's bounds hold on random inputs"""
        summary = check_entry(self.program, self.result, self.entry, budget=6, samples=40, seed=0)
        self.assertEqual(summary.failed, 0)
        self.assertEqual(summary.passed, 40)


class TestCorpusSoundness(unittest.TestCase):
    """Test the corpus bounds hold on random inputs"""

    BUDGETS = {'fib': 8, 'hanoi': 5, 'erathos': 5, 'isortlist': 4, 'nub': 4, 'appendAll2': 4}

    def test_corpus(self):
        """Test no benchmark violates its bounds"""
        for path in sorted(CORPUS.glob('*.pl')):
            with self.subTest(benchmark=path.stem):
                program = parse_program(read_text(path), path.name)
                result = analyze(program)
                budget = self.BUDGETS.get(path.stem, 6)
                for entry in result.entry_points():
                    summary = check_entry(program, result, entry, budget, samples=25, seed=1)
                    self.assertEqual(summary.failed, 0,
                                     [str(v) for verdict in summary.failures for v in verdict.violations])


if __name__ == '__main__':
    unittest.main()
