"""
Test sized type schemas.

Tests ensure that sizedtypes.py correctly:
- Builds schemas with a bound pair per recursive symbol and num leaf
- Measures concrete terms
- Turns head patterns into domain constraints
- Names the bound variables of call patterns conventionally
- Classifies clause variables and checks the scope of sized elements
"""

import unittest
from pathlib import Path

# Add parent to path
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.sizedcost.frontend import parse_program, parse_term
from tools.sizedcost.regtypes import grammar_from_program, sized_schema
from tools.sizedcost.sizedtypes import (
    CLAUSAL,
    IRRELEVANT,
    OUTPUT,
    RELEVANT,
    DomainConstraint,
    FreshNames,
    NumNode,
    PlainNode,
    RecNode,
    SizedElement,
    SizedTypeError,
    classify_variables,
    conventional_names,
    head_pattern_constraints,
    instantiate,
    join_schemas,
    relate,
    rename_schema,
    render_schema,
    schema_slots,
    size_of_term,
)
from tools.sizedcost.symexpr import INF, Const, Var

DECLS = """
:- regtype listnum := [] | [num|listnum].
:- regtype llistnum := [] | [listnum|llistnum].
:- regtype pair := p(num, num).
q(a).
"""


class SchemaTestCase(unittest.TestCase):

    def setUp(self):
        self.grammar = grammar_from_program(parse_program(DECLS))
        self.fresh = FreshNames()

    def named(self, *symbols):
        """Schemas of the symbols renamed the way call patterns are"""
        schemas = [sized_schema(s, self.grammar, self.fresh) for s in symbols]
        mapping = conventional_names(schemas)
        return [rename_schema(s, mapping) for s in schemas]


class TestBuilding(SchemaTestCase):
    """Test schema construction"""

    def test_list_schema(self):
        """Test a list carries its length and element bounds"""
        schema = sized_schema('listnum', self.grammar, self.fresh)
        self.assertIsInstance(schema, RecNode)
        self.assertEqual(len(schema_slots(schema)), 2)
        self.assertIsInstance(schema.children[0][1], NumNode)

    def test_nested_and_plain(self):
        """Test nested lists and non-recursive symbols"""
        nested = sized_schema('llistnum', self.grammar, self.fresh)
        self.assertEqual(len(schema_slots(nested)), 3)
        pair = sized_schema('pair', self.grammar, self.fresh)
        self.assertIsInstance(pair, PlainNode)
        self.assertEqual(len(schema_slots(pair)), 2)


class TestMeasuring(SchemaTestCase):
    """Test sizes of concrete terms"""

    def test_list_sizes(self):
        """Test length and element interval"""
        sizes = size_of_term(parse_term("[1,5,3]"), 'listnum', self.grammar)
        self.assertEqual(render_schema(sizes), "listnum^(3,3)(num^(1,5))")

    def test_empty_list(self):
        """Test empty lists have no element bounds"""
        sizes = size_of_term(parse_term("[]"), 'listnum', self.grammar)
        self.assertEqual(render_schema(sizes), "listnum^(0,0)(num^(nob,nob))")

    def test_nested_sizes(self):
        """Test inner lengths join over the outer list"""
        sizes = size_of_term(parse_term("[[1],[],[2,7]]"), 'llistnum', self.grammar)
        self.assertEqual(render_schema(sizes), "llistnum^(3,3)(listnum^(0,2)(num^(1,7)))")

    def test_not_a_member(self):
        """Test measuring outside the type raises"""
        with self.assertRaises(SizedTypeError):
            size_of_term(parse_term("[a]"), 'listnum', self.grammar)

    def test_instantiate(self):
        """Test schema variables take the concrete sizes"""
        (schema,) = self.named('listnum')
        values = instantiate(schema, size_of_term(parse_term("[4,2]"), 'listnum', self.grammar))
        self.assertEqual(values, {'α': 2, 'β': 2, 'γ': 2, 'δ': 4})

    def test_instantiate_empty(self):
        """Test empty element slots read as no bound"""
        (schema,) = self.named('listnum')
        values = instantiate(schema, size_of_term(parse_term("[]"), 'listnum', self.grammar))
        self.assertEqual(values['γ'], 0)
        self.assertEqual(values['δ'], INF)

    def test_join_and_relate(self):
        """Test pointwise joins and size relations"""
        a = size_of_term(parse_term("[2]"), 'listnum', self.grammar)
        b = size_of_term(parse_term("[3,4,5]"), 'listnum', self.grammar)
        self.assertEqual(render_schema(join_schemas(a, b)), "listnum^(1,3)(num^(2,5))")
        self.assertEqual(len(relate(a, b)), 4)
        with self.assertRaises(SizedTypeError):
            relate(a, size_of_term(parse_term("7"), 'num', self.grammar))


class TestHeadPatterns(SchemaTestCase):
    """Test domain constraints from head patterns"""

    def test_empty_list_pattern(self):
        """Test [] fixes both length bounds at zero"""
        (schema,) = self.named('listnum')
        match = head_pattern_constraints(parse_term("[]"), schema)
        self.assertEqual(sorted(str(c) for c in match.constraints), ["α=0", "β=0"])

    def test_cons_pattern(self):
        """Test cons requires a positive length and binds head and tail"""
        (schema,) = self.named('listnum')
        match = head_pattern_constraints(parse_term("[X|Xs]"), schema)
        self.assertEqual(sorted(str(c) for c in match.constraints), ["α>0", "β>0"])
        self.assertEqual(match.bindings['X'], NumNode(Var('γ', 'L'), Var('δ', 'U')))
        self.assertEqual(render_schema(match.bindings['Xs']), "listnum^(α-1,β-1)(num^(γ,δ))")

    def test_two_element_pattern(self):
        """Test a deeper pattern shifts the constraint"""
        (schema,) = self.named('listnum')
        match = head_pattern_constraints(parse_term("[X,Y|T]"), schema)
        self.assertIn("α>1", [str(c) for c in match.constraints])

    def test_integer_pattern(self):
        """Test an integer pattern pins a number"""
        (schema,) = self.named('num')
        match = head_pattern_constraints(parse_term("0"), schema)
        self.assertEqual(sorted(str(c) for c in match.constraints), ["μ=0", "ν=0"])

    def test_constant_interval(self):
        """Test integer patterns against constant intervals"""
        inside = head_pattern_constraints(parse_term("3"), NumNode(Const(1), Const(5)))
        self.assertTrue(inside.satisfiable)
        outside = head_pattern_constraints(parse_term("9"), NumNode(Const(1), Const(5)))
        self.assertFalse(outside.satisfiable)

    def test_wrong_constructor(self):
        """Test a pattern outside the type raises"""
        (schema,) = self.named('listnum')
        with self.assertRaises(SizedTypeError):
            head_pattern_constraints(parse_term("f(X)"), schema)


class TestConventionalNames(SchemaTestCase):
    """Test conventional bound-variable names"""

    def names(self, *symbols):
        return [render_schema(s) for s in self.named(*symbols)]

    def test_single_list(self):
        """Test α/β for the length and γ/δ for the elements"""
        self.assertEqual(self.names('listnum'), ["listnum^(α,β)(num^(γ,δ))"])

    def test_number(self):
        """Test μ/ν for a number"""
        self.assertEqual(self.names('num'), ["num^(μ,ν)"])

    def test_several_arguments(self):
        """Test argument positions become subscripts"""
        self.assertEqual(self.names('listnum', 'num'),
                         ["listnum^(α1,β1)(num^(γ1,δ1))", "num^(μ2,ν2)"])

    def test_nested(self):
        """Test nested types get level names"""
        self.assertEqual(self.names('llistnum'), ["llistnum^(a1,b1)(listnum^(a2,b2)(num^(a3,b3)))"])

    def test_outputs_skipped(self):
        """Test output positions do not count as carrying bounds"""
        schemas = [sized_schema('listnum', self.grammar, self.fresh), None]
        mapping = conventional_names(schemas)
        self.assertEqual(sorted(v.name for v in mapping.values()), ['α', 'β', 'γ', 'δ'])


class TestElements(unittest.TestCase):
    """Test variable classification and sized elements"""

    def test_classification(self):
        """Test head outputs, used inputs, unused inputs and body-only variables"""
        head = [parse_term("X"), parse_term("Y"), parse_term("W")]
        classes = classify_variables(head, [parse_term("foo(X, Z)")], [True, False, True])
        self.assertEqual(classes, {'X': RELEVANT, 'Y': OUTPUT, 'W': IRRELEVANT, 'Z': CLAUSAL})

    def test_scope(self):
        """Test constraints may only mention bound variables of some schema"""
        schema = NumNode(Var('μ', 'L'), Var('ν', 'U'))
        element = SizedElement({'X': (schema, RELEVANT)}, (DomainConstraint(Var('μ', 'L'), '>', 5),))
        self.assertEqual(element.bound_variables(), frozenset({'μ', 'ν'}))
        self.assertEqual(element.unscoped(), frozenset())
        self.assertEqual(element.classification('X'), RELEVANT)
        self.assertIsNone(element.schema('Y'))
        stray = SizedElement(element.t, (DomainConstraint(Var('κ', 'L'), '>', 0),))
        self.assertEqual(stray.unscoped(), frozenset({'κ'}))


if __name__ == '__main__':
    unittest.main()
