"""
Test the fixpoint engine.

Tests ensure that fixpoint.py correctly:
- Analyses entry declarations into solved versions
- Shares versions between calls with the same call pattern
- Infers non-failure and determinacy
- Reports undefined calls, unsolved bounds and trusted properties as diagnostics
- Rejects programs it cannot analyse
"""

import unittest
from pathlib import Path

# Add parent to path
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.sizedcost.auxdomains import FAILS, IS_DET, NON_DET, NOT_FAILS
from tools.sizedcost.fixpoint import (FALLBACK, TRUST, UNDEFINED_CALL, AnalysisError, AnalysisSettings,
                                      analyze, describe_pattern)
from tools.sizedcost.frontend import parse_program
from tools.sizedcost.recurrence import order_of
from tools.sizedcost.resdomain import SOLUTIONS, ResourceDef
from tools.sizedcost.utils import read_text

CORPUS = Path(__file__).parent.parent / 'corpus'

APPEND = """
:- regtype listnum := [] | [num|listnum].
append([], Ys, Ys).
append([X|Xs], Ys, [X|Zs]) :- append(Xs, Ys, Zs).
"""

GROW = """
:- regtype listnum := [] | [num|listnum].
:- entry grow(listnum).
grow(L) :- grow([0|L]).
"""


def corpus_program(name):
    return parse_program(read_text(CORPUS / f"{name}.pl"), f"{name}.pl")


class TestAppend(unittest.TestCase):
    """Test analysis of list concatenation"""

    @classmethod
    def setUpClass(cls):
        cls.result = analyze(corpus_program('append'))
        cls.entry = cls.result.entry_points()[0]

    def test_single_version(self):
        """Test the entry yields one version"""
        self.assertEqual([e.version for e in self.result.entries], ['append/3#1'])
        self.assertTrue(self.entry.entry)
        self.assertEqual(describe_pattern(self.entry.pattern).split('(')[0], 'append')

    def test_properties(self):
        """Test append neither fails nor has several solutions"""
        self.assertEqual(self.entry.nf, NOT_FAILS)
        self.assertEqual(self.entry.det, IS_DET)
        self.assertEqual(self.result.properties['append/3#1'], (NOT_FAILS, IS_DET))

    def test_solutions(self):
        """Test exactly one solution"""
        lower, upper = self.entry.bounds(SOLUTIONS)
        self.assertEqual(lower.render(), "1")
        self.assertEqual(upper.render(), "1")

    def test_steps(self):
        """Test steps are one more than the first list's length"""
        lower, upper = self.entry.bounds('steps')
        self.assertEqual(lower.render(), "α1+1")
        self.assertEqual(upper.render(), "β1+1")
        self.assertEqual(order_of(upper).text, "β1")
        self.assertEqual(upper.evaluate({'β1': 4}), 5)

    def test_no_diagnostics(self):
        """Test a clean analysis"""
        self.assertEqual(self.result.diagnostics, [])


class TestVersions(unittest.TestCase):
    """Test versions and memoisation"""

    def test_shared_version(self):
        """Test two calls with the same pattern share one version"""
        program = parse_program(APPEND + """
:- entry twice(listnum, out).
twice(X, Z) :- append(X, X, Y), append(Y, Y, Z).
""")
        result = analyze(program)
        self.assertEqual(len(result.versions_of(('append', 3))), 1)
        entry = result.entry_points()[0]
        self.assertEqual(entry.indicator, ('twice', 2))
        _, upper = entry.bounds('steps')
        self.assertEqual(order_of(upper).text, "β")
        self.assertEqual(upper.evaluate({'β': 2}), 9)

    def test_entries_argument(self):
        """Test explicit entry declarations override the program's"""
        program = parse_program(APPEND + """
:- entry twice(listnum, out).
:- entry append(listnum, listnum, out).
twice(X, Z) :- append(X, X, Y), append(Y, Y, Z).
""")
        result = analyze(program, entries=program.entries[1:])
        self.assertEqual([e.indicator for e in result.entry_points()], [('append', 3)])
        self.assertEqual(len(result.entries), 1)

    def test_resources_argument(self):
        """Test resources passed in replace the default steps"""
        result = analyze(corpus_program('append'), resources=[ResourceDef('calls', headcost=0, litcost=1)])
        entry = result.entry_points()[0]
        _, upper = entry.bounds('calls')
        self.assertEqual(upper.render(), "β1")
        with self.assertRaises(KeyError):
            entry.bounds('steps')


class TestProperties(unittest.TestCase):
    """Test failure handling and lower bounds"""

    def test_failing_test_freezes_lower_bound(self):
        """Test a test after the guard keeps the lower bound at one step"""
        result = analyze(corpus_program('hanoi'))
        entry = result.entry_points()[0]
        self.assertEqual(entry.nf, FAILS)
        lower, upper = entry.bounds('steps')
        self.assertEqual(lower.render(), "1")
        self.assertEqual(order_of(upper).text, "2^ν1")
        sol_lower, sol_upper = entry.bounds(SOLUTIONS)
        self.assertEqual(sol_lower.render(), "0")
        self.assertEqual(sol_upper.render(), "1")

    def test_fibonacci(self):
        """Test doubly recursive clauses give Fibonacci growth both ways"""
        entry = analyze(corpus_program('fib')).entry_points()[0]
        lower, upper = entry.bounds('steps')
        self.assertEqual(order_of(lower).text, "φ^μ")
        self.assertEqual(order_of(upper).text, "φ^ν")
        self.assertEqual(entry.det, IS_DET)
        sol_lower, sol_upper = entry.bounds(SOLUTIONS)
        self.assertEqual((sol_lower.render(), sol_upper.render()), ("1", "1"))

    def test_unsolved_recurrence_diagnosed(self):
        """Test a bound without a closed form is reported as a fallback"""
        result = analyze(parse_program(GROW))
        fallbacks = [d for d in result.diagnostics if d.kind == FALLBACK]
        self.assertTrue(fallbacks)
        self.assertTrue(any("steps" in d.message for d in fallbacks))
        _, upper = result.entry_points()[0].bounds('steps')
        self.assertTrue(upper.imprecise)

    def test_undefined_call(self):
        """Test a call to an undefined predicate is diagnosed"""
        program = parse_program(":- entry p(num, out).\np(X, Y) :- q(X, Y).\n")
        result = analyze(program)
        kinds = [d.kind for d in result.diagnostics]
        self.assertIn(UNDEFINED_CALL, kinds)
        entry = result.entry_points()[0]
        self.assertEqual(entry.nf, FAILS)
        self.assertEqual(entry.det, NON_DET)

    def test_trust(self):
        """Test trusted properties override inference and are noted"""
        program = parse_program(":- entry p(num, out).\n:- trust p(_, _) + not_fails.\n"
                                "p(X, Y) :- X > 3, Y is X.\n")
        result = analyze(program)
        entry = result.entry_points()[0]
        self.assertEqual(entry.nf, NOT_FAILS)
        self.assertIn(TRUST, [d.kind for d in result.diagnostics])


class TestErrors(unittest.TestCase):
    """Test programs that cannot be analysed"""

    def test_no_entries(self):
        """Test a program without entries is rejected"""
        with self.assertRaises(AnalysisError):
            analyze(parse_program(APPEND))

    def test_unbound_arithmetic(self):
        """Test a mode error names the clause"""
        program = parse_program(":- entry p(num, out).\np(X, Y) :- Y is Z + X.\n")
        with self.assertRaises(AnalysisError) as ctx:
            analyze(program)
        self.assertIn("line 2", str(ctx.exception))

    def test_version_cap(self):
        """Test the version cap bounds the number of call patterns"""
        program = parse_program(APPEND + ":- entry append(listnum, listnum, out).\n")
        with self.assertRaises(AnalysisError):
            analyze(program, settings=AnalysisSettings(version_cap=0))


if __name__ == '__main__':
    unittest.main()
