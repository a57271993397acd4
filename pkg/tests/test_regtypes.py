"""
Test regular term grammars.

Tests ensure that regtypes.py correctly:
- Builds grammars from :- regtype declarations
- Reports ill-formed grammars
- Decides membership of ground terms
- Joins and infers types of terms
"""

import unittest
from pathlib import Path

# Add parent to path
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.sizedcost.frontend import Compound, Integer, parse_program, parse_term
from tools.sizedcost.regtypes import (
    ANY_TYPE,
    FunctorType,
    NIL_TYPE,
    NUM_TYPE,
    SymbolType,
    TypeGrammar,
    TypeGrammarError,
    grammar_from_program,
    join_types,
    membership,
    render_type,
    type_of_term,
    well_formed,
)

DECLS = """
:- regtype listnum := [] | [num|listnum].
:- regtype llistnum := [] | [listnum|llistnum].
:- regtype color := red | green.
:- regtype tree := leaf | node(tree, num, tree).
p(a).
"""


def grammar_of(source: str) -> TypeGrammar:
    return grammar_from_program(parse_program(source))


class TestGrammarBuilding(unittest.TestCase):
    """Test grammars built from declarations"""

    def test_rules_from_declarations(self):
        """Test every declared symbol becomes a rule"""
        grammar = grammar_of(DECLS)
        self.assertEqual(set(grammar.symbols()), {'listnum', 'llistnum', 'color', 'tree'})
        self.assertEqual(grammar.alternatives('color'), (FunctorType('red'), FunctorType('green')))
        self.assertTrue(grammar.is_recursive('tree'))
        self.assertFalse(grammar.is_recursive('color'))

    def test_list_symbols(self):
        """Test declared list rules are recognised and reused"""
        grammar = grammar_of(DECLS)
        self.assertEqual(grammar.list_element('listnum'), NUM_TYPE)
        self.assertEqual(grammar.list_element('llistnum'), SymbolType('listnum'))
        self.assertIsNone(grammar.list_element('tree'))
        self.assertEqual(grammar.list_symbol_for(NUM_TYPE), 'listnum')

    def test_generated_list_rule(self):
        """Test list(T) generates a rule when none is declared"""
        grammar = grammar_of(":- regtype colors := [] | [color|colors].\n"
                             ":- regtype color := red | green.\n"
                             ":- regtype bag := b(list(color)).\np(a).")
        self.assertEqual(grammar.list_symbol_for(SymbolType('color'), create=False), 'colors')
        grammar = grammar_of(":- regtype bag := b(list(num)).\np(a).")
        self.assertIn('list(num)', grammar.symbols())
        self.assertTrue(well_formed(grammar))

    def test_duplicate_symbol(self):
        """Test a symbol defined twice is an error"""
        with self.assertRaises(TypeGrammarError):
            grammar_of(":- regtype t := a.\n:- regtype t := b.\np(a).")

    def test_undefined_symbol_lookup(self):
        """Test alternatives of an unknown symbol raise"""
        with self.assertRaises(TypeGrammarError):
            TypeGrammar().alternatives('nope')

    def test_render_type(self):
        """Test type terms print in declaration syntax"""
        grammar = grammar_of(DECLS)
        self.assertEqual(render_type(grammar.alternatives('listnum')[1]), "[num|listnum]")
        self.assertEqual(render_type(grammar.alternatives('tree')[1]), "node(tree,num,tree)")


class TestWellFormedness(unittest.TestCase):
    """Test the grammar checks"""

    def test_well_formed_grammar(self):
        """Test the sample declarations pass"""
        result = well_formed(grammar_of(DECLS))
        self.assertTrue(result.ok)
        self.assertEqual(result.errors, [])

    def test_undefined_reference(self):
        """Test an alternative referring to an undefined symbol"""
        result = well_formed(grammar_of(":- regtype t := f(u).\np(a)."))
        self.assertFalse(result)
        self.assertTrue(any('undefined type symbol u' in e for e in result.errors))

    def test_nondeterministic_rule(self):
        """Test two alternatives with the same top functor"""
        result = well_formed(grammar_of(":- regtype t := f(num) | f(t).\np(a)."))
        self.assertTrue(any('nondeterministic' in e for e in result.errors))

    def test_unproductive_rule(self):
        """Test a rule that generates no finite term"""
        result = well_formed(grammar_of(":- regtype t := f(t).\np(a)."))
        self.assertTrue(any('no finite term' in e for e in result.errors))

    def test_mutual_recursion(self):
        """Test mutually recursive symbols are rejected"""
        result = well_formed(grammar_of(":- regtype s := a | f(t).\n:- regtype t := b | g(s).\np(a)."))
        self.assertTrue(any('mutually recursive' in e for e in result.errors))


class TestMembership(unittest.TestCase):
    """Test membership of ground terms"""

    def setUp(self):
        self.grammar = grammar_of(DECLS)

    def test_lists(self):
        """Test list membership, including a long list"""
        self.assertTrue(membership(parse_term("[1,2,3]"), 'listnum', self.grammar))
        self.assertTrue(membership(parse_term("[]"), 'listnum', self.grammar))
        self.assertFalse(membership(parse_term("[1,a]"), 'listnum', self.grammar))
        long_list = "[" + ",".join(["7"] * 2000) + "]"
        self.assertTrue(membership(parse_term(long_list), 'listnum', self.grammar))

    def test_nested_and_constants(self):
        """Test nested lists, constants and trees"""
        self.assertTrue(membership(parse_term("[[1],[],[2,3]]"), 'llistnum', self.grammar))
        self.assertFalse(membership(parse_term("[1]"), 'llistnum', self.grammar))
        self.assertTrue(membership(parse_term("red"), 'color', self.grammar))
        self.assertFalse(membership(parse_term("blue"), 'color', self.grammar))
        self.assertTrue(membership(parse_term("node(leaf,1,node(leaf,2,leaf))"), 'tree', self.grammar))

    def test_num(self):
        """Test the base type"""
        self.assertTrue(membership(parse_term("42"), 'num', self.grammar))
        self.assertFalse(membership(parse_term("x"), 'num', self.grammar))

    def test_negative_numbers(self):
        """Test num holds only the naturals, at any depth"""
        self.assertTrue(membership(Integer(0), 'num', self.grammar))
        self.assertFalse(membership(Integer(-3), 'num', self.grammar))
        self.assertFalse(membership(Integer(-1), NUM_TYPE, self.grammar))
        items = Compound('.', (Integer(-1), parse_term("[]")))
        self.assertFalse(membership(items, 'listnum', self.grammar))

    def test_non_ground_term(self):
        """Test membership refuses non-ground terms"""
        with self.assertRaises(TypeGrammarError):
            membership(parse_term("[X]"), 'listnum', self.grammar)


class TestTypeInference(unittest.TestCase):
    """Test joins and term typing"""

    def setUp(self):
        self.grammar = grammar_of(DECLS)

    def test_join(self):
        """Test joins of unknown, equal, list and unrelated types"""
        listnum = SymbolType('listnum')
        self.assertEqual(join_types(None, listnum, self.grammar), listnum)
        self.assertEqual(join_types(listnum, listnum, self.grammar), listnum)
        self.assertEqual(join_types(NIL_TYPE, listnum, self.grammar), listnum)
        self.assertEqual(join_types(listnum, SymbolType('color'), self.grammar), ANY_TYPE)

    def test_type_of_term(self):
        """Test typing of lists, constants and unknown functors"""
        env = {'X': NUM_TYPE, 'Xs': SymbolType('listnum')}
        self.assertEqual(type_of_term(parse_term("[X|Xs]"), env, self.grammar), SymbolType('listnum'))
        self.assertEqual(type_of_term(parse_term("red"), env, self.grammar), SymbolType('color'))
        self.assertEqual(type_of_term(parse_term("t(X,X)"), env, self.grammar),
                         FunctorType('t', (NUM_TYPE, NUM_TYPE)))
        self.assertIsNone(type_of_term(parse_term("[Y]"), env, self.grammar))


if __name__ == '__main__':
    unittest.main()
