"""
Sized types for sizedcost

A sized schema mirrors a regular type and carries a (lower, upper) pair of
bound expressions at every recursive symbol (counting applications of its
recursive alternatives, the length for lists) and at every `num` leaf (the
value interval). Non-recursive symbols carry no bounds of their own.

Empty collections have no element values. Their element slots hold the
empty marker (lower ∞, upper -∞), which is neutral for min/max joins and
reads as the no-bound interval (0, ∞) when instantiated.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple, Union

from . import SizedCostError
from .frontend import Compound, Integer, Term, Variable, term_variables
from .regtypes import (ANY_TYPE, NUM, NUM_TYPE, BaseType, FunctorType, SymbolType, TypeGrammar, TypeTerm,
                       alternative_key, membership, render_type, sized_schema)
from .symexpr import (INF, INFINITY, ONE, ZERO, Add, Const, Number, Sub, SymExpr, Var,
                      add, const, evaluate, render, smax, smin, sub, substitute, variables)


class SizedTypeError(SizedCostError):
    """Schema shape mismatch or pattern outside its type"""
    pass


Position = Tuple[str, int]

EMPTY_LOWER = Const(INF)
EMPTY_UPPER = Const(-INF)


@dataclass(frozen=True)
class RecNode:
    """Recursive symbol: bounds count applications of recursive alternatives"""
    symbol: str
    lower: SymExpr
    upper: SymExpr
    children: Tuple[Tuple[Position, 'SizedSchema'], ...] = ()
    self_positions: Tuple[Position, ...] = ()
    constructors: Tuple[Tuple[str, int], ...] = ()


@dataclass(frozen=True)
class NumNode:
    lower: SymExpr
    upper: SymExpr


@dataclass(frozen=True)
class PlainNode:
    """Non-recursive symbol or anonymous constructor type"""
    symbol: str
    children: Tuple[Tuple[Position, 'SizedSchema'], ...] = ()
    constructors: Tuple[Tuple[str, int], ...] = ()


@dataclass(frozen=True)
class OpaqueNode:
    """Value of unknown shape; carries no bounds"""
    symbol: str = 'any'


SizedSchema = Union[RecNode, NumNode, PlainNode, OpaqueNode]


class FreshNames:
    """Source of fresh (lower, upper) bound-variable pairs"""

    def __init__(self, prefix: str = 'v'):
        self.prefix = prefix
        self.counter = 0

    def pair(self) -> Tuple[Var, Var]:
        self.counter += 1
        name = f"{self.prefix}{self.counter}"
        return Var(f"{name}_L", 'L'), Var(f"{name}_U", 'U')


# ---------------------------------------------------------------------------
# Building
# ---------------------------------------------------------------------------

def build_schema(tt: TypeTerm, grammar: TypeGrammar, fresh: FreshNames) -> SizedSchema:
    """Schema of a type term with fresh bound variables at every slot"""
    if isinstance(tt, BaseType) or (isinstance(tt, SymbolType) and tt.name == NUM):
        lower, upper = fresh.pair()
        return NumNode(lower, upper)
    if isinstance(tt, SymbolType):
        alts = grammar.alternatives(tt.name)
        constructors = tuple(alternative_key(a) for a in alts)
        if grammar.is_recursive(tt.name):
            lower, upper = fresh.pair()
            self_positions, child_types = _positions(tt.name, alts)
            children = tuple((pos, build_schema(ct, grammar, fresh)) for pos, ct in child_types)
            return RecNode(tt.name, lower, upper, children, self_positions, constructors)
        _, child_types = _positions(tt.name, alts)
        children = tuple((pos, build_schema(ct, grammar, fresh)) for pos, ct in child_types)
        return PlainNode(tt.name, children, constructors)
    children = tuple(((tt.functor, i + 1), build_schema(a, grammar, fresh))
                     for i, a in enumerate(tt.args))
    return PlainNode(render_type(tt), children, ((tt.functor, len(tt.args)),))


def _positions(symbol: str, alts: Sequence[TypeTerm]):
    self_positions: List[Position] = []
    child_types: List[Tuple[Position, TypeTerm]] = []
    for alt in alts:
        if not isinstance(alt, FunctorType):
            continue
        for i, arg in enumerate(alt.args):
            pos = (alt.functor, i + 1)
            if arg == SymbolType(symbol):
                self_positions.append(pos)
            else:
                child_types.append((pos, arg))
    return tuple(self_positions), child_types


def opaque_like(schema: SizedSchema) -> SizedSchema:
    """Same shape with the no-information bounds (0, ∞) everywhere"""
    return map_bounds(schema, lambda _: ZERO, lambda _: INFINITY)


def schema_for_type(tt: Optional[TypeTerm], grammar: TypeGrammar,
                    fresh: Optional[FreshNames] = None) -> SizedSchema:
    if tt is None or tt == ANY_TYPE:
        return OpaqueNode()
    return build_schema(tt, grammar, fresh or FreshNames())


def type_of_schema(schema: SizedSchema, grammar: TypeGrammar) -> TypeTerm:
    """The type a schema was built from"""
    if isinstance(schema, NumNode):
        return NUM_TYPE
    if isinstance(schema, OpaqueNode):
        return ANY_TYPE
    if isinstance(schema, RecNode) or schema.symbol in grammar.rules:
        return SymbolType(schema.symbol)
    functor, _ = schema.constructors[0]
    return FunctorType(functor, tuple(type_of_schema(child, grammar) for _, child in schema.children))


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------

def schema_slots(schema: SizedSchema) -> List[Tuple[SymExpr, SymExpr]]:
    """(lower, upper) pairs in depth-first order"""
    slots: List[Tuple[SymExpr, SymExpr]] = []
    if isinstance(schema, (RecNode, NumNode)):
        slots.append((schema.lower, schema.upper))
    if isinstance(schema, (RecNode, PlainNode)):
        for _, child in schema.children:
            slots.extend(schema_slots(child))
    return slots


def with_slots(schema: SizedSchema, slots: Sequence[Tuple[SymExpr, SymExpr]]) -> SizedSchema:
    """Rebuild a schema with new slot bounds given in depth-first order"""
    remaining = list(slots)

    def rebuild(node: SizedSchema) -> SizedSchema:
        if isinstance(node, NumNode):
            lower, upper = remaining.pop(0)
            return NumNode(lower, upper)
        if isinstance(node, RecNode):
            lower, upper = remaining.pop(0)
            children = tuple((pos, rebuild(child)) for pos, child in node.children)
            return RecNode(node.symbol, lower, upper, children, node.self_positions, node.constructors)
        if isinstance(node, PlainNode):
            children = tuple((pos, rebuild(child)) for pos, child in node.children)
            return PlainNode(node.symbol, children, node.constructors)
        return node

    result = rebuild(schema)
    if remaining:
        raise SizedTypeError("too many slot values for schema")
    return result


def map_bounds(schema: SizedSchema, on_lower, on_upper) -> SizedSchema:
    slots = [(on_lower(lo), on_upper(up)) for lo, up in schema_slots(schema)]
    return with_slots(schema, slots)


def schema_variables(schema: SizedSchema) -> List[Var]:
    found: List[Var] = []
    for lower, upper in schema_slots(schema):
        for bound in (lower, upper):
            if isinstance(bound, Var) and bound not in found:
                found.append(bound)
    return found


def same_shape(a: SizedSchema, b: SizedSchema) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, NumNode):
        return True
    if isinstance(a, OpaqueNode):
        return True
    if a.symbol != b.symbol or len(a.children) != len(b.children):
        return False
    return all(pa == pb and same_shape(ca, cb)
               for (pa, ca), (pb, cb) in zip(a.children, b.children))


def child_schema(schema: SizedSchema, position: Position) -> Optional[SizedSchema]:
    if isinstance(schema, (RecNode, PlainNode)):
        for pos, child in schema.children:
            if pos == position:
                return child
    return None


def render_schema(schema: SizedSchema) -> str:
    """Schema in `τ^(l,u)(…)` notation"""
    if isinstance(schema, NumNode):
        return f"num^({render_bound(schema.lower)},{render_bound(schema.upper)})"
    if isinstance(schema, OpaqueNode):
        return schema.symbol
    inner = ",".join(render_schema(child) for _, child in schema.children)
    if isinstance(schema, RecNode):
        head = f"{schema.symbol}^({render_bound(schema.lower)},{render_bound(schema.upper)})"
    else:
        head = schema.symbol
    return f"{head}({inner})" if inner else head


def render_bound(bound: SymExpr) -> str:
    if bound == EMPTY_LOWER or bound == EMPTY_UPPER:
        return "nob"
    return render(bound)


# ---------------------------------------------------------------------------
# Constraints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SizeConstraint:
    """`subject ≥ bound` for lower slots, `subject ≤ bound` for upper slots"""
    subject: SymExpr
    direction: str
    bound: SymExpr

    def __str__(self):
        return f"{render(self.subject)}{self.direction}{render(self.bound)}"


GE = '≥'
LE = '≤'

_OPS = {
    '=': lambda a, b: a == b,
    '>': lambda a, b: a > b,
    '>=': lambda a, b: a >= b,
    '<': lambda a, b: a < b,
    '=<': lambda a, b: a <= b,
}
_OP_TEXT = {'=': '=', '>': '>', '>=': '≥', '<': '<', '=<': '≤'}


@dataclass(frozen=True)
class DomainConstraint:
    """Guard `subject op bound` with an integer bound"""
    subject: SymExpr
    op: str
    bound: int

    def holds(self, env: Dict[str, Number]) -> bool:
        return _OPS[self.op](evaluate(self.subject, env), self.bound)

    def holds_at(self, value: Number) -> bool:
        return _OPS[self.op](value, self.bound)

    def __str__(self):
        return f"{render(self.subject)}{_OP_TEXT[self.op]}{self.bound}"


def constraint(subject: SymExpr, op: str, bound: int) -> Union[DomainConstraint, bool]:
    """
    Normalize `subject op bound` onto a single variable where possible.

    Returns True or False when the subject is constant.
    """
    if isinstance(subject, Const):
        return _OPS[op](subject.value, bound)
    if isinstance(subject, Sub) and isinstance(subject.right, Const) and not isinstance(subject.left, Const):
        offset = subject.right.value
        # clamped: left - offset = 0  <=>  left =< offset
        if op == '=' and bound == 0:
            return constraint(subject.left, '=<', int(offset))
        if op in ('>', '>=') or (op == '=' and bound > 0):
            return constraint(subject.left, op, int(bound + offset))
        return DomainConstraint(subject, op, bound)
    if isinstance(subject, Add):
        consts = [t for t in subject.terms if isinstance(t, Const)]
        rest = [t for t in subject.terms if not isinstance(t, Const)]
        if len(consts) == 1 and len(rest) == 1:
            return constraint(rest[0], op, int(bound - consts[0].value))
    return DomainConstraint(subject, op, bound)


def add_constraint(acc: List[DomainConstraint], item: Union[DomainConstraint, bool]) -> bool:
    """Append a normalized constraint; returns False if it is unsatisfiable"""
    if item is True:
        return True
    if item is False:
        return False
    if item not in acc:
        acc.append(item)
    return True


def relate(a: SizedSchema, b: SizedSchema) -> FrozenSet[SizeConstraint]:
    """
    Pointwise size constraints `a ≶ b`.

    Raises:
        SizedTypeError: If the schemas have different shapes
    """
    if not same_shape(a, b):
        raise SizedTypeError(f"cannot relate {render_schema(a)} and {render_schema(b)}")
    found: Set[SizeConstraint] = set()
    for (la, ua), (lb, ub) in zip(schema_slots(a), schema_slots(b)):
        found.add(SizeConstraint(la, GE, lb))
        found.add(SizeConstraint(ua, LE, ub))
    return frozenset(found)


# ---------------------------------------------------------------------------
# Head patterns
# ---------------------------------------------------------------------------

@dataclass
class PatternMatch:
    """Domain constraints of a head pattern plus schemas of its variables"""
    constraints: List[DomainConstraint] = field(default_factory=list)
    bindings: Dict[str, SizedSchema] = field(default_factory=dict)
    satisfiable: bool = True


def head_pattern_constraints(pattern: Term, schema: SizedSchema) -> PatternMatch:
    """
    Domain constraints and variable schemas for a head argument pattern.

    Raises:
        SizedTypeError: If the pattern is not a member of the schema's type
    """
    result = PatternMatch()
    _match(pattern, schema, result)
    return result


def _match(pattern: Term, schema: SizedSchema, result: PatternMatch):
    while True:
        if isinstance(pattern, Variable):
            result.bindings.setdefault(pattern.name, schema)
            return
        if isinstance(schema, OpaqueNode):
            for name in _pattern_variables(pattern):
                result.bindings.setdefault(name, OpaqueNode())
            return
        if isinstance(schema, NumNode):
            if not isinstance(pattern, Integer):
                raise SizedTypeError(f"pattern {pattern} is not a number")
            if isinstance(schema.lower, Const) and isinstance(schema.upper, Const):
                # constant interval: only membership matters
                if not schema.lower.value <= pattern.value <= schema.upper.value:
                    result.satisfiable = False
                return
            for bound in (schema.lower, schema.upper):
                if not add_constraint(result.constraints, constraint(bound, '=', pattern.value)):
                    result.satisfiable = False
            return
        if not isinstance(pattern, Compound):
            raise SizedTypeError(f"pattern {pattern} does not match type {schema.symbol}")
        key = (pattern.functor, len(pattern.args))
        if key not in schema.constructors:
            raise SizedTypeError(f"pattern {pattern.functor}/{len(pattern.args)} "
                                 f"is not a constructor of {schema.symbol}")
        if isinstance(schema, PlainNode):
            for i, arg in enumerate(pattern.args):
                child = child_schema(schema, (pattern.functor, i + 1))
                _match(arg, child if child is not None else OpaqueNode(), result)
            return

        recursive_alt = any(pos[0] == pattern.functor for pos in schema.self_positions)
        if not recursive_alt:
            for bound in (schema.lower, schema.upper):
                if not add_constraint(result.constraints, constraint(bound, '=', 0)):
                    result.satisfiable = False
            for i, arg in enumerate(pattern.args):
                child = child_schema(schema, (pattern.functor, i + 1))
                _match(arg, child if child is not None else OpaqueNode(), result)
            return

        for bound in (schema.lower, schema.upper):
            if not add_constraint(result.constraints, constraint(bound, '>', 0)):
                result.satisfiable = False
        tail = RecNode(schema.symbol, sub(schema.lower, 1), sub(schema.upper, 1), schema.children,
                       schema.self_positions, schema.constructors)
        next_pattern = None
        for i, arg in enumerate(pattern.args):
            pos = (pattern.functor, i + 1)
            if pos in schema.self_positions:
                if next_pattern is None:
                    next_pattern = arg
                else:
                    _match(arg, tail, result)
            else:
                child = child_schema(schema, pos)
                _match(arg, child if child is not None else OpaqueNode(), result)
        if next_pattern is None:
            return
        pattern, schema = next_pattern, tail


def _pattern_variables(term: Term) -> List[str]:
    if isinstance(term, Variable):
        return [term.name]
    if isinstance(term, Compound):
        found: List[str] = []
        for arg in term.args:
            found.extend(_pattern_variables(arg))
        return found
    return []


# ---------------------------------------------------------------------------
# Sizes of terms
# ---------------------------------------------------------------------------

def measure_term(term: Term, shape: SizedSchema, env: Dict[str, SizedSchema]) -> SizedSchema:
    """
    Sizes of a (possibly non-ground) term against a schema shape.

    Variables take their schemas from env; a variable whose schema does not
    fit the shape contributes the no-information bounds. Lower slots join
    with min and upper slots with max.
    """
    if isinstance(term, Variable):
        known = env.get(term.name)
        if known is not None and same_shape(known, shape):
            return known
        return opaque_like(shape)
    if isinstance(shape, OpaqueNode):
        return shape
    if isinstance(shape, NumNode):
        if isinstance(term, Integer):
            return NumNode(const(term.value), const(term.value))
        return opaque_like(shape)
    if not isinstance(term, Compound) or (term.functor, len(term.args)) not in shape.constructors:
        return opaque_like(shape)
    if isinstance(shape, PlainNode):
        children = []
        for pos, child_shape in shape.children:
            if pos[0] == term.functor:
                children.append((pos, measure_term(term.args[pos[1] - 1], child_shape, env)))
            else:
                children.append((pos, _empty(child_shape)))
        return PlainNode(shape.symbol, tuple(children), shape.constructors)

    # recursive symbol: walk the spine through the first self position
    count_lower: SymExpr = ZERO
    count_upper: SymExpr = ZERO
    joined: Dict[Position, SizedSchema] = {pos: _empty(child) for pos, child in shape.children}
    current: Term = term
    while True:
        if isinstance(current, Variable) or not isinstance(current, Compound) or \
                (current.functor, len(current.args)) not in shape.constructors:
            tail = measure_term(current, shape, env) if isinstance(current, Variable) else opaque_like(shape)
            count_lower = add(count_lower, tail.lower)
            count_upper = add(count_upper, tail.upper)
            for pos, child in tail.children:
                joined[pos] = join_schemas(joined[pos], child)
            break
        self_args = [current.args[p[1] - 1] for p in shape.self_positions if p[0] == current.functor]
        for pos, child_shape in shape.children:
            if pos[0] == current.functor:
                part = measure_term(current.args[pos[1] - 1], child_shape, env)
                joined[pos] = join_schemas(joined[pos], part)
        if not self_args:
            break
        count_lower = add(count_lower, ONE)
        count_upper = add(count_upper, ONE)
        for extra in self_args[1:]:
            branch = measure_term(extra, shape, env)
            count_lower = add(count_lower, branch.lower)
            count_upper = add(count_upper, branch.upper)
            for pos, child in branch.children:
                joined[pos] = join_schemas(joined[pos], child)
        current = self_args[0]
    children = tuple((pos, joined[pos]) for pos, _ in shape.children)
    return RecNode(shape.symbol, count_lower, count_upper, children, shape.self_positions, shape.constructors)


def _empty(shape: SizedSchema) -> SizedSchema:
    """Element slots of an empty collection"""
    if isinstance(shape, NumNode):
        return NumNode(EMPTY_LOWER, EMPTY_UPPER)
    if isinstance(shape, RecNode):
        return map_bounds(shape, lambda _: EMPTY_LOWER, lambda _: EMPTY_UPPER)
    if isinstance(shape, PlainNode):
        return map_bounds(shape, lambda _: EMPTY_LOWER, lambda _: EMPTY_UPPER)
    return shape


def join_schemas(a: SizedSchema, b: SizedSchema) -> SizedSchema:
    """Pointwise join: min of lower slots, max of upper slots"""
    if isinstance(a, OpaqueNode) or isinstance(b, OpaqueNode):
        return a if isinstance(b, OpaqueNode) else b
    if not same_shape(a, b):
        raise SizedTypeError(f"cannot join {render_schema(a)} and {render_schema(b)}")
    slots = [(smin(la, lb), smax(ua, ub))
             for (la, ua), (lb, ub) in zip(schema_slots(a), schema_slots(b))]
    return with_slots(a, slots)


def size_of_term(term: Term, symbol: Union[str, TypeTerm], grammar: TypeGrammar) -> SizedSchema:
    """
    Concrete sizes of a ground member of a type, as a schema with constant bounds.

    Raises:
        SizedTypeError: If the term is not a member of the type
    """
    if not membership(term, symbol, grammar):
        raise SizedTypeError(f"term is not a member of {symbol if isinstance(symbol, str) else render_type(symbol)}")
    shape = sized_schema(symbol, grammar)
    return measure_term(term, shape, {})


def instantiate(schema: SizedSchema, concrete: SizedSchema) -> Dict[str, Number]:
    """
    Values of a schema's bound variables from concrete sizes.

    Empty element slots read as the no-bound interval (0, ∞).
    """
    values: Dict[str, Number] = {}
    for (lower, upper), (c_lower, c_upper) in zip(schema_slots(schema), schema_slots(concrete)):
        lo = c_lower.value if isinstance(c_lower, Const) else 0
        hi = c_upper.value if isinstance(c_upper, Const) else INF
        if c_lower == EMPTY_LOWER or c_upper == EMPTY_UPPER:
            lo, hi = 0, INF
        if isinstance(lower, Var):
            values[lower.name] = lo
        if isinstance(upper, Var):
            values[upper.name] = hi
    return values


# ---------------------------------------------------------------------------
# Classification and elements
# ---------------------------------------------------------------------------

OUTPUT = 'output'
RELEVANT = 'relevant'
IRRELEVANT = 'irrelevant'
CLAUSAL = 'clausal'


def classify_variables(head_args: Sequence[Term], body: Sequence[Term],
                       inputs: Sequence[bool]) -> Dict[str, str]:
    """
    Classify clause variables: head output, relevant input (used in the body),
    irrelevant input, or clausal (body only).
    """
    body_vars: List[str] = []
    for literal in body:
        term_variables(literal, body_vars)
    classes: Dict[str, str] = {}
    for arg, is_input in zip(head_args, inputs):
        for name in term_variables(arg):
            if not is_input:
                classes[name] = OUTPUT
            elif name not in classes:
                classes[name] = RELEVANT if name in body_vars else IRRELEVANT
    for name in body_vars:
        classes.setdefault(name, CLAUSAL)
    return classes


@dataclass
class SizedElement:
    """Sized-types abstract element ⟨t, d, r⟩"""
    t: Dict[str, Tuple[SizedSchema, str]] = field(default_factory=dict)
    d: Tuple[DomainConstraint, ...] = ()
    r: FrozenSet[SizeConstraint] = frozenset()

    def schema(self, name: str) -> Optional[SizedSchema]:
        entry = self.t.get(name)
        return entry[0] if entry else None

    def classification(self, name: str) -> Optional[str]:
        entry = self.t.get(name)
        return entry[1] if entry else None

    def bound_variables(self) -> FrozenSet[str]:
        return frozenset(v for schema, _ in self.t.values()
                         for pair in schema_slots(schema) for bound in pair for v in variables(bound))

    def unscoped(self) -> FrozenSet[str]:
        """Bound variables of d and r that no schema in t carries"""
        used: Set[str] = set()
        for c in self.d:
            used |= variables(c.subject)
        for c in self.r:
            used |= variables(c.subject) | variables(c.bound)
        return frozenset(used) - self.bound_variables()


# ---------------------------------------------------------------------------
# Conventional names
# ---------------------------------------------------------------------------

def _single_level(schema: SizedSchema) -> bool:
    if not isinstance(schema, RecNode):
        return False
    return not any(_contains_rec(child) for _, child in schema.children)


def _contains_rec(schema: SizedSchema) -> bool:
    if isinstance(schema, RecNode):
        return True
    if isinstance(schema, PlainNode):
        return any(_contains_rec(child) for _, child in schema.children)
    return False


def conventional_names(schemas: Sequence[Optional[SizedSchema]]) -> Dict[str, Var]:
    """
    Rename map for the input schemas of a call pattern.

    A numeric argument gets μ/ν, a single-level list α/β with γ/δ for its
    numeric leaves, anything nested level names a1/b1, a2/b2, … numbered
    across arguments. When more than one argument carries bounds, names get
    the argument position as subscript.
    """
    carrying = [i for i, s in enumerate(schemas)
                if s is not None and any(isinstance(b, Var) for slot in schema_slots(s) for b in slot)]
    several = len(carrying) > 1
    mapping: Dict[str, Var] = {}
    level = 0

    def assign(bound: SymExpr, name: str, side: str):
        if isinstance(bound, Var) and bound.name not in mapping:
            mapping[bound.name] = Var(name, side)

    for i in carrying:
        schema = schemas[i]
        subscript = str(i + 1) if several else ''
        slots = schema_slots(schema)
        if isinstance(schema, NumNode):
            assign(schema.lower, f"μ{subscript}", 'L')
            assign(schema.upper, f"ν{subscript}", 'U')
        elif _single_level(schema):
            assign(slots[0][0], f"α{subscript}", 'L')
            assign(slots[0][1], f"β{subscript}", 'U')
            for k, (lower, upper) in enumerate(slots[1:]):
                prime = "′" * k
                assign(lower, f"γ{subscript}{prime}", 'L')
                assign(upper, f"δ{subscript}{prime}", 'U')
        else:
            for lower, upper in slots:
                if not (isinstance(lower, Var) or isinstance(upper, Var)):
                    continue
                level += 1
                assign(lower, f"a{level}", 'L')
                assign(upper, f"b{level}", 'U')
    return mapping


def rename_schema(schema: SizedSchema, mapping: Dict[str, SymExpr]) -> SizedSchema:
    return map_bounds(schema, lambda b: substitute(b, mapping), lambda b: substitute(b, mapping))
