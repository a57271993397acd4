"""
Test program parsing, printing and normalization.

Tests ensure that frontend.py correctly:
- Groups clauses by predicate and separates declarations
- Rejects unsupported constructs with a source position
- Prints programs that parse back to the same AST
- Normalizes heads to distinct variables
"""

import unittest
from pathlib import Path

# Add parent to path
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.sizedcost.frontend import (
    Clause,
    Compound,
    FrontendError,
    Integer,
    Variable,
    NIL,
    cons,
    format_program,
    format_term,
    list_items,
    normalize_clause,
    normalize_program,
    parse_program,
    parse_term,
)

APPEND = """
:- regtype listnum := [] | [num|listnum].
:- entry append(listnum, listnum, out).

append([], Ys, Ys).
append([X|Xs], Ys, [X|Zs]) :-
    append(Xs, Ys, Zs).
"""


class TestParsing(unittest.TestCase):
    """Test clause and declaration parsing"""

    def test_clauses_grouped_by_predicate(self):
        """Test both append clauses land under append/3"""
        program = parse_program(APPEND, 'append.pl')
        self.assertEqual(list(program.predicates), [('append', 3)])
        self.assertEqual(len(program.clauses(('append', 3))), 2)
        self.assertEqual(program.name, 'append.pl')

    def test_declarations(self):
        """Test regtype and entry declarations are kept apart from clauses"""
        program = parse_program(APPEND)
        self.assertEqual([t.name for t in program.types], ['listnum'])
        self.assertEqual(len(program.types[0].alternatives), 2)
        self.assertEqual(program.entries[0].indicator, ('append', 3))
        self.assertEqual(program.entries[0].argspecs[2], Compound('out'))

    def test_resource_and_trust(self):
        """Test resource options and trust assertions"""
        source = """
        :- resource steps(headcost=1, litcost=0).
        :- trust ext(_, _) + not_fails.
        p(X, Y) :- ext(X, Y).
        """
        program = parse_program(source)
        self.assertEqual(program.resources[0].name, 'steps')
        self.assertEqual(program.resources[0].option('headcost'), 1)
        self.assertEqual(program.resources[0].option('missing', 7), 7)
        self.assertEqual(program.trusts[0].indicator, ('ext', 2))
        self.assertEqual(program.trusts[0].prop, 'not_fails')

    def test_list_syntax(self):
        """Test list terms become cons cells"""
        term = parse_term("[1,2|T]")
        self.assertEqual(term, cons(Integer(1), cons(Integer(2), Variable('T'))))
        self.assertEqual(list_items(parse_term("[a,b]")), [Compound('a'), Compound('b')])
        self.assertIsNone(list_items(term))

    def test_arithmetic(self):
        """Test is/2 with operator precedence"""
        program = parse_program("p(X, Y) :- Y is X + 2 * X - 1.")
        literal = program.all_clauses()[0].body[0]
        self.assertEqual(literal.functor, 'is')
        expr = literal.args[1]
        self.assertEqual(expr.functor, '-')
        self.assertEqual(expr.args[0].functor, '+')
        self.assertEqual(expr.args[0].args[1].functor, '*')

    def test_comparisons(self):
        """Test every comparison operator parses to its functor"""
        for op in ('<', '=<', '>', '>=', '=:=', '=\\='):
            program = parse_program(f"p(X, Y) :- X {op} Y.")
            self.assertEqual(program.all_clauses()[0].body[0].functor, op)

    def test_anonymous_variables_are_distinct(self):
        """Test each _ becomes its own variable"""
        program = parse_program("p(_, _).")
        head = program.all_clauses()[0].head
        self.assertNotEqual(head.args[0], head.args[1])

    def test_comments_ignored(self):
        """Test % comments are skipped"""
        program = parse_program("% leading\np(a). % trailing\n")
        self.assertEqual(len(program.all_clauses()), 1)


class TestParseErrors(unittest.TestCase):
    """Test diagnostics for rejected input"""

    def test_syntax_error_has_position(self):
        """Test a missing period reports a line"""
        with self.assertRaises(FrontendError) as ctx:
            parse_program("p(a).\nq(b)\n")
        self.assertIsNotNone(ctx.exception.line)
        self.assertIn('syntax error', str(ctx.exception))

    def test_cut_rejected(self):
        """Test cut is rejected with its line"""
        with self.assertRaises(FrontendError) as ctx:
            parse_program("p(X) :- q(X).\nq(X) :- !, r(X).\nr(a).")
        self.assertIn('cut', str(ctx.exception))
        self.assertEqual(ctx.exception.line, 2)

    def test_negation_and_disjunction_rejected(self):
        """Test negation and disjunction are rejected"""
        for body in ("\\+ q(X)", "(q(X) ; r(X))", "(q(X) -> r(X))"):
            with self.subTest(body=body):
                with self.assertRaises(FrontendError):
                    parse_program(f"p(X) :- {body}.\nq(a).\nr(a).")

    def test_unknown_declaration(self):
        """Test unknown :- kinds are rejected"""
        with self.assertRaises(FrontendError) as ctx:
            parse_program(":- dynamic(p).\np(a).")
        self.assertIn('unknown declaration kind', str(ctx.exception))

    def test_entry_for_undefined_predicate(self):
        """Test an entry must name a defined predicate"""
        with self.assertRaises(FrontendError) as ctx:
            parse_program(":- entry q(num).\np(a).")
        self.assertIn('undefined predicate', str(ctx.exception))

    def test_duplicate_entry(self):
        """Test repeated entry declarations are rejected"""
        with self.assertRaises(FrontendError):
            parse_program(":- entry p(num).\n:- entry p(num).\np(1).")

    def test_unknown_trust_property(self):
        """Test trust only accepts the known properties"""
        with self.assertRaises(FrontendError) as ctx:
            parse_program(":- trust p(_) + fast.\np(1).")
        self.assertIn('unknown trusted property', str(ctx.exception))

    def test_fixture_file(self):
        """Test the broken fixture fails on its cut"""
        source = (Path(__file__).parent / 'fixtures' / 'broken.pl').read_text(encoding='utf-8')
        with self.assertRaises(FrontendError) as ctx:
            parse_program(source, 'broken.pl')
        self.assertIn('cut', str(ctx.exception))


class TestPrinting(unittest.TestCase):
    """Test programs print back to parseable text"""

    def test_format_term(self):
        """Test list and compound printing"""
        self.assertEqual(format_term(parse_term("[X|Xs]")), "[X|Xs]")
        self.assertEqual(format_term(parse_term("[1,2]")), "[1,2]")
        self.assertEqual(format_term(NIL), "[]")
        self.assertEqual(format_term(parse_term("t(a,B)")), "t(a,B)")

    def test_print_parses_back(self):
        """Test format_program output parses to an equal program"""
        source = APPEND + """
        :- resource steps(headcost=1).
        :- trust len(_, _) + is_det.
        len([], 0).
        len([_|T], N) :- len(T, M), N is M + 1, N > 0.
        """
        program = parse_program(source)
        again = parse_program(format_program(program))
        self.assertEqual(again.types, program.types)
        self.assertEqual(again.entries, program.entries)
        self.assertEqual(again.resources, program.resources)
        self.assertEqual(again.trusts, program.trusts)
        self.assertEqual(set(again.predicates), set(program.predicates))
        self.assertEqual(again.clauses(('append', 3))[1].body, program.clauses(('append', 3))[1].body)


class TestNormalization(unittest.TestCase):
    """Test head normalization"""

    def test_head_arguments_become_variables(self):
        """Test constructor head arguments move into leading unifications"""
        program = normalize_program(parse_program(APPEND))
        clause = program.clauses(('append', 3))[1]
        self.assertTrue(all(isinstance(a, Variable) for a in clause.head.args))
        self.assertEqual(len(set(clause.head.args)), 3)
        self.assertEqual(clause.body[0].functor, '=')
        self.assertEqual(clause.guard_prefix_length(), 2)
        self.assertEqual(clause.body[-1].functor, 'append')

    def test_repeated_head_variable(self):
        """Test a repeated head variable gets a fresh name and an equation"""
        clause = normalize_program(parse_program(APPEND)).clauses(('append', 3))[0]
        first, second, third = clause.head.args
        self.assertNotEqual(second, third)
        self.assertIn(Compound('=', (third, second)), clause.body)

    def test_already_normal_clause_unchanged(self):
        """Test normalization is the identity on normalized clauses"""
        clause = Clause(Compound('p', (Variable('X'),)), (Compound('q', (Variable('X'),)),))
        self.assertIs(normalize_clause(clause), clause)

    def test_normalization_idempotent(self):
        """Test normalizing twice changes nothing"""
        once = normalize_program(parse_program(APPEND))
        twice = normalize_program(once)
        self.assertEqual(once.predicates, twice.predicates)

    def test_fresh_names_avoid_clashes(self):
        """Test fresh head variables never reuse clause variables"""
        clause = normalize_clause(parse_program("p(H1, H1, a).").all_clauses()[0])
        names = [a.name for a in clause.head.args]
        self.assertEqual(len(set(names)), 3)
        self.assertEqual(names[0], 'H1')


if __name__ == '__main__':
    unittest.main()
