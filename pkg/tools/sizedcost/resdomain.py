"""
Resources abstract domain for sizedcost

An element tracks, for one clause or one predicate version, the number of
solutions (lower, upper), the consumption of every resource (lower, upper),
whether some literal so far may have failed, the domain constraints of the
clause and the inequations relating all of these to the sizes of the input
arguments.

Walking a clause goes call-to-entry (head and guard prefix), extend (one
body literal at a time) and exit-to-prime (eliminate the intermediate
variables). Widening turns the primes of all clauses of a version into one
bound function per quantity and world, ready for the recurrence solver.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from . import SizedCostError
from .auxdomains import (FAILS, IS_DET, NON_DET, NOT_FAILS, SAFE, TEST, ClauseTests,
                         certain_clauses, covering_sets, exclusive_pairs)
from .frontend import (ARITH_OPS, IS, Clause, Compound, Integer, ResourceDecl, Term, Variable,
                       is_builtin, is_comparison, rename_term, term_variables)
from .recurrence import COUNT, LOWER, SIZE, UPPER, BoundFunction, Case, EqSystem, Inequation, normalize
from .regtypes import TypeGrammar, type_of_term
from .sizedtypes import (EMPTY_LOWER, EMPTY_UPPER, GE, LE, DomainConstraint, NumNode, OpaqueNode,
                         PlainNode, SizedElement, SizedSchema, SizedTypeError, add_constraint,
                         classify_variables, constraint, head_pattern_constraints, measure_term,
                         opaque_like, same_shape, schema_for_type, schema_slots, type_of_schema,
                         with_slots)
from .symexpr import (INF, INFINITY, ONE, ZERO, Call, Const, Number, SymExpr, Var, add, const,
                      lift, mul, sides_of, smax, smin, sub, substitute, variables)


class DomainError(SizedCostError):
    """Resource declaration, mode or schema error while walking a clause"""
    pass


SOLUTIONS = 'sol'
AGG_UPPER = ('sum', 'max')
AGG_LOWER = ('sum', 'min')
_OPTIONS = ('headcost', 'litcost', 'agg_ub', 'agg_lb', 'default', 'builtin', 'ops')


# ---------------------------------------------------------------------------
# Resources
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResourceDef:
    """
    A countable resource.

    headcost is charged when a clause is entered (its guard prefix
    succeeded), litcost before every call to a user predicate. `=`, `is`
    and comparisons cost `builtin` each plus one per occurrence of an
    operator of `ops` on the right-hand side of `is`.
    """
    name: str
    headcost: int = 1
    litcost: int = 0
    agg_ub: str = 'sum'
    agg_lb: str = 'min'
    default: Tuple[Number, Number] = (0, 0)
    builtin: int = 0
    ops: Tuple[str, ...] = ()

    @classmethod
    def from_decl(cls, decl: ResourceDecl) -> 'ResourceDef':
        """
        Raises:
            DomainError: On unknown options or out-of-range values
        """
        where = f"line {decl.line}: resource {decl.name}"
        if decl.name == SOLUTIONS:
            raise DomainError(f"{where}: the name {SOLUTIONS} is reserved for solutions")
        for key, _ in decl.options:
            if key not in _OPTIONS:
                raise DomainError(f"{where}: unknown option {key}")

        def count(key: str, default: int) -> int:
            value = decl.option(key, default)
            if not isinstance(value, int) or value < 0:
                raise DomainError(f"{where}: {key} must be a non-negative integer")
            return value

        agg_ub = decl.option('agg_ub', 'sum')
        if agg_ub not in AGG_UPPER:
            raise DomainError(f"{where}: agg_ub must be one of {', '.join(AGG_UPPER)}")
        agg_lb = decl.option('agg_lb', 'min')
        if agg_lb not in AGG_LOWER:
            raise DomainError(f"{where}: agg_lb must be one of {', '.join(AGG_LOWER)}")

        default = decl.option('default', (0, 0))
        if not isinstance(default, tuple) or len(default) != 2:
            raise DomainError(f"{where}: default must be a pair (lower, upper)")
        bounds = []
        for value in default:
            if value == 'inf':
                value = INF
            if not (value == INF or (isinstance(value, int) and value >= 0)):
                raise DomainError(f"{where}: default bounds must be non-negative integers or inf")
            bounds.append(value)
        if bounds[0] > bounds[1]:
            raise DomainError(f"{where}: default lower bound exceeds the upper bound")

        ops = decl.option('ops', ())
        if isinstance(ops, str):
            ops = (ops,)
        for op in ops:
            if op not in ARITH_OPS:
                raise DomainError(f"{where}: unknown arithmetic operator {op}")

        return cls(decl.name, count('headcost', 1), count('litcost', 0), agg_ub, agg_lb,
                   (bounds[0], bounds[1]), count('builtin', 0), tuple(ops))

    def builtin_cost(self, literal: Compound) -> int:
        cost = self.builtin
        if literal.functor == IS:
            cost += _count_ops(literal.args[1], self.ops)
        return cost

    @property
    def names(self) -> Tuple[str, str]:
        return (f"{self.name}_L", f"{self.name}_U")


def _count_ops(expr: Term, ops: Sequence[str]) -> int:
    if not isinstance(expr, Compound):
        return 0
    own = 1 if expr.functor in ops and len(expr.args) == 2 else 0
    return own + sum(_count_ops(a, ops) for a in expr.args)


def default_resources() -> Tuple[ResourceDef, ...]:
    return (ResourceDef('steps'),)


def resources_of(decls: Iterable[ResourceDecl]) -> Tuple[ResourceDef, ...]:
    """Resource definitions of a program, steps when it declares none"""
    defs = tuple(ResourceDef.from_decl(d) for d in decls)
    names = [d.name for d in defs]
    if len(set(names)) != len(names):
        raise DomainError("resource declared twice")
    return defs or default_resources()


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------

SOL_NAMES = (f"{SOLUTIONS}_L", f"{SOLUTIONS}_U")

_NF_RANK = {FAILS: 0, NOT_FAILS: 1}
_DET_RANK = {NON_DET: 0, IS_DET: 1}


@dataclass(frozen=True)
class AbstractElement:
    """
    ⟨(s_L, s_U), resources, failed?, d, r, nf, det⟩ plus the version it
    belongs to.

    `sol` and `resources` name the bound variables whose relations in `r`
    give the current bounds. `t` holds the sized schemas of the output
    arguments (keyed by argument position) once a clause has exited.
    """
    sol: Tuple[str, str]
    resources: Tuple[Tuple[str, Tuple[str, str]], ...]
    failed: bool
    d: Tuple[DomainConstraint, ...]
    r: FrozenSet[Inequation]
    nf: str = FAILS
    det: str = NON_DET
    version: Optional[str] = None
    t: Mapping[str, SizedSchema] = field(default_factory=dict, compare=False)
    bottom: bool = False

    def resource(self, name: str) -> Tuple[str, str]:
        for resource, names in self.resources:
            if resource == name:
                return names
        raise DomainError(f"element has no resource {name}")

    def bound(self, lhs: str) -> SymExpr:
        """Right-hand side of the unguarded relations defining lhs"""
        found = [i for i in self.r if i.lhs == lhs and not i.guard]
        if not found:
            raise DomainError(f"no relation defines {lhs}")
        if found[0].direction == LE:
            return smin(*(i.rhs for i in found))
        return smax(*(i.rhs for i in found))

    def variables(self) -> Set[str]:
        names: Set[str] = set()
        for ineq in self.r:
            names.add(ineq.lhs)
            names |= variables(ineq.rhs)
        return names


def _canonical_resources(defs: Sequence[ResourceDef]) -> Tuple[Tuple[str, Tuple[str, str]], ...]:
    return tuple((d.name, d.names) for d in defs)


def bottom(defs: Sequence[ResourceDef]) -> AbstractElement:
    """Least element: any number of solutions, default resource bounds, may fail"""
    relations = {Inequation(SOL_NAMES[0], GE, ZERO), Inequation(SOL_NAMES[1], LE, INFINITY)}
    for rdef in defs:
        lower, upper = rdef.names
        relations.add(Inequation(lower, GE, lift(rdef.default[0])))
        relations.add(Inequation(upper, LE, lift(rdef.default[1])))
    return AbstractElement(SOL_NAMES, _canonical_resources(defs), True, (), frozenset(relations),
                           FAILS, NON_DET, bottom=True)


def canonical(element: AbstractElement) -> AbstractElement:
    """Rename the solution and resource variables to their canonical names"""
    mapping = {element.sol[0]: SOL_NAMES[0], element.sol[1]: SOL_NAMES[1]}
    for name, (lower, upper) in element.resources:
        mapping[lower] = f"{name}_L"
        mapping[upper] = f"{name}_U"
    if all(k == v for k, v in mapping.items()):
        return element
    as_vars = {k: Var(v, LOWER if v.endswith('_L') else UPPER) for k, v in mapping.items()}
    relations = frozenset(Inequation(mapping.get(i.lhs, i.lhs), i.direction, substitute(i.rhs, as_vars), i.guard)
                          for i in element.r)
    resources = tuple((name, (f"{name}_L", f"{name}_U")) for name, _ in element.resources)
    return replace(element, sol=SOL_NAMES, resources=resources, r=relations)


def _signature(element: AbstractElement) -> Tuple[str, ...]:
    return tuple(name for name, _ in element.resources)


def leq(a: AbstractElement, b: AbstractElement) -> bool:
    """
    a ⊑ b: a's relations are a subset of b's up to renaming, a's domain
    constraints include b's, and nf/det are ordered fails ⊑ not_fails,
    non_det ⊑ is_det. Bottom is below everything.

    Raises:
        DomainError: If the elements track different resources
    """
    if _signature(a) != _signature(b):
        raise DomainError("cannot compare elements over different resources")
    if a.bottom:
        return True
    if b.bottom:
        return False
    a, b = canonical(a), canonical(b)
    return (a.r <= b.r and set(a.d) >= set(b.d)
            and _NF_RANK[a.nf] <= _NF_RANK[b.nf] and _DET_RANK[a.det] <= _DET_RANK[b.det])


def lub(a: AbstractElement, b: AbstractElement) -> AbstractElement:
    """
    Syntactic union of the relations. When the domain constraints differ,
    each side's relations are guarded by its own constraints.

    Raises:
        DomainError: If the elements track different resources
    """
    if _signature(a) != _signature(b):
        raise DomainError("cannot join elements over different resources")
    a, b = canonical(a), canonical(b)
    ra, rb = a.r, b.r
    if set(a.d) != set(b.d):
        ra = frozenset(_guarded(i, a.d) for i in ra)
        rb = frozenset(_guarded(i, b.d) for i in rb)
    nf = a.nf if _NF_RANK[a.nf] >= _NF_RANK[b.nf] else b.nf
    det = a.det if _DET_RANK[a.det] >= _DET_RANK[b.det] else b.det
    t = dict(b.t)
    t.update(a.t)
    return AbstractElement(SOL_NAMES, a.resources, a.failed and b.failed,
                           tuple(c for c in a.d if c in b.d), ra | rb, nf, det,
                           a.version or b.version, t, a.bottom and b.bottom)


def _guarded(ineq: Inequation, d: Sequence[DomainConstraint]) -> Inequation:
    extra = tuple(c for c in d if c not in ineq.guard)
    return replace(ineq, guard=ineq.guard + extra) if extra else ineq


def check_scope(element: AbstractElement, allowed: Iterable[str]):
    """
    Raises:
        DomainError: If a relation mentions a variable outside allowed
    """
    allowed = set(allowed)
    for ineq in element.r:
        stray = variables(ineq.rhs) - allowed
        if stray:
            raise DomainError(f"{ineq.lhs}: out-of-scope bound variables {', '.join(sorted(stray))}")


# ---------------------------------------------------------------------------
# Call patterns
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CallPattern:
    """
    Input schemas of a version (None at output positions) in conventional
    bound-variable names, plus the shapes of its outputs (None at input
    positions).
    """
    indicator: Tuple[str, int]
    inputs: Tuple[Optional[SizedSchema], ...]
    outputs: Tuple[Optional[SizedSchema], ...]
    d: Tuple[DomainConstraint, ...] = ()

    def params(self, side: str) -> Tuple[str, ...]:
        found: List[str] = []
        for schema in self.inputs:
            if schema is None:
                continue
            for lower, upper in schema_slots(schema):
                for bound in (lower, upper):
                    if isinstance(bound, Var) and bound.side == side and bound.name not in found:
                        found.append(bound.name)
        return tuple(found)

    def output_slots(self) -> List[Tuple[int, int]]:
        """(argument position, slot number) of every output bound, 1-based"""
        slots: List[Tuple[int, int]] = []
        for i, shape in enumerate(self.outputs, start=1):
            if shape is not None:
                slots.extend((i, k) for k in range(1, len(schema_slots(shape)) + 1))
        return slots

    def quantities(self, defs: Sequence[ResourceDef]) -> List[Tuple[str, str, str, str]]:
        """(quantity, kind, upper combine, lower combine) in report order"""
        found = [(SOLUTIONS, COUNT, 'sum', 'min')]
        found.extend((d.name, COUNT, d.agg_ub, d.agg_lb) for d in defs)
        found.extend((output_quantity(i, k), SIZE, 'max', 'min') for i, k in self.output_slots())
        return found


def output_quantity(position: int, slot: int) -> str:
    return f"out{position}.{slot}"


def function_name(version: str, quantity: str, side: str) -> str:
    return f"{version}.{quantity}_{side}"


def _neutral(bound: SymExpr) -> SymExpr:
    # element bounds of an empty collection: any values are valid, 0 is tightest
    if bound == EMPTY_LOWER or bound == EMPTY_UPPER:
        return ZERO
    return bound


def call_success(version: str, pattern: CallPattern, actuals: Sequence[Optional[SizedSchema]],
                 defs: Sequence[ResourceDef], nf: str, det: str,
                 forms: Optional[Mapping] = None) -> AbstractElement:
    """
    Success of a call to a version, projected onto the caller's arguments.

    Bounds are calls to the version's bound functions at the caller's
    input sizes, or the instantiated closed forms once the version is
    solved. Output schemas are keyed by argument position.
    """
    mapping: Dict[str, SymExpr] = {}
    for schema, actual in zip(pattern.inputs, actuals):
        if schema is None:
            continue
        if actual is None or not same_shape(schema, actual):
            actual = opaque_like(schema)
        for (pl, pu), (al, au) in zip(schema_slots(schema), schema_slots(actual)):
            for param, value in ((pl, al), (pu, au)):
                if isinstance(param, Var):
                    mapping[param.name] = _neutral(value)
    args = {side: tuple(mapping[p] for p in pattern.params(side)) for side in (LOWER, UPPER)}

    def value(quantity: str, side: str) -> SymExpr:
        name = function_name(version, quantity, side)
        form = forms.get(name) if forms else None
        if form is not None:
            return form.instantiate(args[side])
        return Call(name, args[side])

    relations = {Inequation(SOL_NAMES[0], GE, value(SOLUTIONS, LOWER)),
                 Inequation(SOL_NAMES[1], LE, value(SOLUTIONS, UPPER))}
    for rdef in defs:
        lower, upper = rdef.names
        relations.add(Inequation(lower, GE, value(rdef.name, LOWER)))
        relations.add(Inequation(upper, LE, value(rdef.name, UPPER)))
    t: Dict[str, SizedSchema] = {}
    for i, shape in enumerate(pattern.outputs, start=1):
        if shape is None:
            continue
        slots = [(value(output_quantity(i, k), LOWER), value(output_quantity(i, k), UPPER))
                 for k in range(1, len(schema_slots(shape)) + 1)]
        t[str(i)] = with_slots(shape, slots)
    return AbstractElement(SOL_NAMES, _canonical_resources(defs), nf == FAILS, (), frozenset(relations),
                           nf, det, version, t)


def builtin_success(literal: Compound, defs: Sequence[ResourceDef], kind: str) -> AbstractElement:
    """Success of `=`, `is` or a comparison: a binding, a test or a certain failure"""
    if kind == SAFE:
        sols, nf = (ONE, ONE), NOT_FAILS
    elif kind == TEST:
        sols, nf = (ZERO, ONE), FAILS
    else:
        sols, nf = (ZERO, ZERO), FAILS
    relations = {Inequation(SOL_NAMES[0], GE, sols[0]), Inequation(SOL_NAMES[1], LE, sols[1])}
    for rdef in defs:
        lower, upper = rdef.names
        cost = const(rdef.builtin_cost(literal))
        relations.add(Inequation(lower, GE, cost))
        relations.add(Inequation(upper, LE, cost))
    return AbstractElement(SOL_NAMES, _canonical_resources(defs), nf == FAILS, (), frozenset(relations),
                           nf, IS_DET)


# ---------------------------------------------------------------------------
# Clause walking
# ---------------------------------------------------------------------------

ALWAYS_FAILS = 'fails'

Resolver = Callable[[Compound, Sequence[Optional[SizedSchema]]], Tuple[str, Optional[str], AbstractElement]]


@dataclass
class ClauseState:
    """Element of a clause being walked plus the schemas of its variables"""
    element: Optional[AbstractElement]
    t: Dict[str, SizedSchema] = field(default_factory=dict)
    aliases: Dict[str, Term] = field(default_factory=dict)
    shapes: Dict[str, SizedSchema] = field(default_factory=dict)
    step: int = 0
    dead: bool = False
    sized: Optional[SizedElement] = None

    def is_bound(self, term: Term) -> bool:
        return all(name in self.t for name in term_variables(term))

    def resolve(self, term: Term) -> Term:
        for _ in range(len(self.aliases) + 1):
            names = term_variables(term)
            if not any(name in self.aliases for name in names):
                break
            term = rename_term(term, self.aliases)
        return term


def _shape_of(state: ClauseState, term: Term, grammar: TypeGrammar) -> SizedSchema:
    env = {name: type_of_schema(schema, grammar) for name, schema in state.t.items()}
    return schema_for_type(type_of_term(term, env, grammar), grammar)


def _schema_of(state: ClauseState, term: Term, grammar: TypeGrammar,
               shape: Optional[SizedSchema] = None) -> SizedSchema:
    if isinstance(term, Variable) and term.name in state.t:
        return state.t[term.name]
    term = state.resolve(term)
    if shape is None:
        shape = _shape_of(state, term, grammar)
    return measure_term(term, shape, state.t)


def _settle(state: ClauseState, grammar: TypeGrammar):
    """Bind aliased variables whose terms have become ground in sizes"""
    changed = True
    while changed:
        changed = False
        for name, term in list(state.aliases.items()):
            resolved = state.resolve(term)
            if state.is_bound(resolved):
                del state.aliases[name]
                state.t[name] = _schema_of(state, resolved, grammar, state.shapes.get(name))
                changed = True


def _match(state: ClauseState, var: str, pattern: Term, d: Optional[List[DomainConstraint]]) -> Optional[str]:
    schema = state.t[var]
    if isinstance(schema, PlainNode) and schema.symbol == '[]' and isinstance(pattern, Compound) \
            and (pattern.functor, len(pattern.args)) != ('[]', 0):
        # an argument known to be the empty list
        return None
    try:
        result = head_pattern_constraints(pattern, schema)
    except SizedTypeError as exc:
        raise DomainError(str(exc)) from exc
    if not result.satisfiable:
        return None
    if d is not None:
        for item in result.constraints:
            if not add_constraint(d, item):
                return None
    for name, bound in result.bindings.items():
        if name not in state.t and name not in state.aliases:
            state.t[name] = bound
    return TEST


def _unify(state: ClauseState, left: Term, right: Term, grammar: TypeGrammar,
           d: Optional[List[DomainConstraint]] = None) -> Optional[str]:
    """Kind of a unification (SAFE binding or TEST), None if it cannot succeed"""
    left, right = state.resolve(left), state.resolve(right)
    if isinstance(right, Variable) and right.name in state.t and not (
            isinstance(left, Variable) and left.name in state.t):
        left, right = right, left
    if isinstance(left, Variable) and left.name in state.t:
        if isinstance(right, Variable):
            if right.name in state.t:
                return TEST
            state.t[right.name] = state.t[left.name]
            return SAFE
        return _match(state, left.name, right, d)
    if isinstance(right, Variable) and not isinstance(left, Variable):
        left, right = right, left
    if isinstance(left, Variable):
        if left == right:
            return SAFE
        if state.is_bound(right):
            state.t[left.name] = _schema_of(state, right, grammar, state.shapes.get(left.name))
            return SAFE
        if left.name in term_variables(right):
            raise DomainError(f"cyclic unification of {left.name}")
        state.aliases[left.name] = right
        return SAFE
    if isinstance(left, Integer) or isinstance(right, Integer):
        return SAFE if left == right else None
    if left.functor != right.functor or len(left.args) != len(right.args):
        return None
    kind = SAFE
    for a, b in zip(left.args, right.args):
        part = _unify(state, a, b, grammar, d)
        if part is None:
            return None
        if part == TEST:
            kind = TEST
    return kind


def _arith(state: ClauseState, expr: Term) -> Tuple[SymExpr, SymExpr]:
    """Lower and upper bound of an arithmetic expression over non-negative numbers"""
    if isinstance(expr, Integer):
        return const(expr.value), const(expr.value)
    if isinstance(expr, Variable):
        schema = state.t.get(expr.name)
        if schema is None:
            raise DomainError(f"unbound variable {expr.name} in arithmetic")
        if not isinstance(schema, NumNode):
            return ZERO, INFINITY
        lower = ZERO if schema.lower == EMPTY_LOWER else schema.lower
        upper = INFINITY if schema.upper == EMPTY_UPPER else schema.upper
        return lower, upper
    if not isinstance(expr, Compound) or len(expr.args) != 2 or expr.functor not in ARITH_OPS:
        raise DomainError(f"unsupported arithmetic expression {expr}")
    (l1, u1), (l2, u2) = _arith(state, expr.args[0]), _arith(state, expr.args[1])
    if expr.functor == '+':
        return add(l1, l2), add(u1, u2)
    if expr.functor == '*':
        return mul(l1, l2), mul(u1, u2)
    if isinstance(expr.args[1], Integer):
        return sub(l1, expr.args[1].value), sub(u1, expr.args[1].value)
    # lower minus upper would mix the worlds
    return ZERO, u1


def _interval_admits(op: str, k: int, lo: Number, hi: Number) -> bool:
    return {'<': lambda: lo < k, '=<': lambda: lo <= k, '>': lambda: hi > k,
            '>=': lambda: hi >= k, '=': lambda: lo <= k <= hi}[op]()


_MIRROR = {'<': '>', '>': '<', '=<': '>=', '>=': '=<', '=:=': '=:=', '=\\=': '=\\='}


def _guard_comparison(state: ClauseState, literal: Compound, d: List[DomainConstraint]) -> bool:
    """Domain constraints of a guard comparison; False if it cannot hold"""
    if not state.is_bound(literal):
        raise DomainError(f"comparison on unbound variables: {literal.functor}")
    op = literal.functor
    left, right = literal.args
    if isinstance(left, Integer) and isinstance(right, Variable):
        left, right, op = right, left, _MIRROR[op]
    if op == '=\\=' or not (isinstance(left, Variable) and isinstance(right, Integer)):
        return True
    schema = state.t[left.name]
    if not isinstance(schema, NumNode):
        return True
    op = '=' if op == '=:=' else op
    k = right.value
    if isinstance(schema.lower, Const) and isinstance(schema.upper, Const):
        return _interval_admits(op, k, schema.lower.value, schema.upper.value)
    for bound in (schema.lower, schema.upper):
        if isinstance(bound, Const):
            continue
        if not add_constraint(d, constraint(bound, op, k)):
            return False
    return True


def call_to_entry(clause: Clause, pattern: CallPattern, grammar: TypeGrammar,
                  defs: Sequence[ResourceDef], version: Optional[str] = None) -> Optional[ClauseState]:
    """
    Enter a normalized clause under a call pattern.

    The guard prefix (head unifications and leading comparisons) yields the
    domain constraints d and the schemas of the variables it binds. Returns
    None when the guard cannot succeed under the pattern. The clause starts
    with one solution and the head cost.

    Raises:
        DomainError: If a head pattern does not fit the input type
    """
    state = ClauseState(None)
    for arg, schema, shape in zip(clause.head.args, pattern.inputs, pattern.outputs):
        if not isinstance(arg, Variable):
            raise DomainError(f"clause of {clause.indicator[0]} is not normalized")
        if schema is not None:
            state.t[arg.name] = schema
        elif shape is not None:
            state.shapes[arg.name] = shape
    d: List[DomainConstraint] = list(pattern.d)
    guard = clause.body[:clause.guard_prefix_length()]
    for literal in guard:
        if is_comparison(literal):
            if not _guard_comparison(state, literal, d):
                return None
        elif _unify(state, literal.args[0], literal.args[1], grammar, d) is None:
            return None
        _settle(state, grammar)

    relations = {Inequation('s0_L', GE, ONE), Inequation('s0_U', LE, ONE)}
    resources = []
    for rdef in defs:
        cost = const(rdef.headcost + sum(rdef.builtin_cost(lit) for lit in guard))
        lower, upper = f"{rdef.name}@0_L", f"{rdef.name}@0_U"
        relations.add(Inequation(lower, GE, cost))
        relations.add(Inequation(upper, LE, cost))
        resources.append((rdef.name, (lower, upper)))
    state.element = AbstractElement(('s0_L', 's0_U'), tuple(resources), False, tuple(d),
                                    frozenset(relations), NOT_FAILS, IS_DET, version)
    classes = classify_variables(clause.head.args, clause.body, [s is not None for s in pattern.inputs])
    state.sized = SizedElement({name: (schema, classes[name]) for name, schema in state.t.items()
                                if name in classes}, tuple(d))
    if state.sized.unscoped():
        raise DomainError(f"clause of {clause.indicator[0]}: guard constrains unknown sizes "
                          f"{', '.join(sorted(state.sized.unscoped()))}")
    return state


def extend(current: AbstractElement, literal: Compound, success: AbstractElement,
           defs: Sequence[ResourceDef], step: Optional[int] = None) -> AbstractElement:
    """
    Add one body literal to a clause element.

    With p the element so far and λ the literal's success:
    s_U ≤ s_U,p·s_U,λ and r_U ≤ r_U,p + s_U,p·(litcost + r_U,λ). Lower bounds
    follow the same shape until some literal may fail; from then on
    s_L ≥ 0 and every r_L keeps its previous value.
    """
    if step is None:
        step = len(current.r)
    failed = current.failed or success.nf == FAILS
    prev_lower, prev_upper = Var(current.sol[0], LOWER), Var(current.sol[1], UPPER)
    sol = (f"s{step}_L", f"s{step}_U")
    relations = set(current.r)
    relations.add(Inequation(sol[1], LE, mul(prev_upper, success.bound(success.sol[1]))))
    relations.add(Inequation(sol[0], GE, ZERO if failed else mul(prev_lower, success.bound(success.sol[0]))))
    resources = []
    for rdef in defs:
        cur_lower, cur_upper = current.resource(rdef.name)
        lam_lower, lam_upper = success.resource(rdef.name)
        cost = 0 if is_builtin(literal) else rdef.litcost
        names = (f"{rdef.name}@{step}_L", f"{rdef.name}@{step}_U")
        relations.add(Inequation(names[1], LE, add(Var(cur_upper, UPPER),
                                                   mul(prev_upper, add(cost, success.bound(lam_upper))))))
        if failed:
            lower = Var(cur_lower, LOWER)
        else:
            lower = add(Var(cur_lower, LOWER), mul(prev_lower, add(cost, success.bound(lam_lower))))
        relations.add(Inequation(names[0], GE, lower))
        resources.append((rdef.name, names))
    return replace(current, sol=sol, resources=tuple(resources), failed=failed, r=frozenset(relations))


def _literal_success(state: ClauseState, literal: Compound, grammar: TypeGrammar,
                     defs: Sequence[ResourceDef], resolver: Resolver) -> Tuple[str, Optional[str], AbstractElement]:
    if literal.functor == '=' and len(literal.args) == 2:
        kind = _unify(state, literal.args[0], literal.args[1], grammar)
        kind = kind or ALWAYS_FAILS
        return (TEST if kind == ALWAYS_FAILS else kind), None, builtin_success(literal, defs, kind)
    if literal.functor == IS and len(literal.args) == 2:
        target, expr = literal.args
        if not state.is_bound(expr):
            raise DomainError("unbound variable on the right-hand side of is")
        lower, upper = _arith(state, expr)
        if isinstance(target, Variable) and target.name not in state.t and target.name not in state.aliases:
            state.t[target.name] = NumNode(lower, upper)
            return SAFE, None, builtin_success(literal, defs, SAFE)
        return TEST, None, builtin_success(literal, defs, TEST)
    if is_comparison(literal):
        if not state.is_bound(literal):
            raise DomainError(f"comparison on unbound variables: {literal.functor}")
        return TEST, None, builtin_success(literal, defs, TEST)

    inputs: List[Optional[SizedSchema]] = []
    outputs: Dict[int, str] = {}
    for i, arg in enumerate(literal.args, start=1):
        if state.is_bound(arg):
            schema = _schema_of(state, arg, grammar)
            inputs.append(schema)
        elif isinstance(arg, Variable) and arg.name not in state.aliases:
            inputs.append(None)
            outputs[i] = arg.name
        else:
            raise DomainError(f"argument {i} of {literal.functor}/{len(literal.args)} "
                              f"is neither bound nor a fresh variable")
    kind, callee, success = resolver(literal, inputs)
    for i, name in outputs.items():
        if name not in state.t:
            state.t[name] = success.t.get(str(i), OpaqueNode())
    return kind, callee, success


@dataclass
class ClauseWalk:
    """Prime of a clause (None if its guard cannot succeed) and its literal kinds"""
    prime: Optional[AbstractElement]
    literals: Tuple[Tuple[str, Optional[str]], ...] = ()
    entry: Optional[SizedElement] = None


def walk_clause(clause: Clause, pattern: CallPattern, grammar: TypeGrammar,
                defs: Sequence[ResourceDef], resolver: Resolver,
                version: Optional[str] = None) -> ClauseWalk:
    """
    call-to-entry, extend over every literal after the guard prefix, then
    exit-to-prime. The resolver supplies the success of each user call.

    Raises:
        DomainError: On mode errors and type mismatches
    """
    state = call_to_entry(clause, pattern, grammar, defs, version)
    if state is None:
        return ClauseWalk(None)
    kinds: List[Tuple[str, Optional[str]]] = []
    for literal in clause.body[clause.guard_prefix_length():]:
        kind, callee, success = _literal_success(state, literal, grammar, defs, resolver)
        kinds.append((kind, callee))
        state.step += 1
        state.element = extend(state.element, literal, success, defs, state.step)
        _settle(state, grammar)
        if success.bound(success.sol[1]) == ZERO:
            state.dead = True
            break
    return ClauseWalk(exit_to_prime(state, clause, pattern, grammar, defs), tuple(kinds), state.sized)


def exit_to_prime(state: ClauseState, clause: Clause, pattern: CallPattern, grammar: TypeGrammar,
                  defs: Sequence[ResourceDef]) -> AbstractElement:
    """
    Express a clause's final bounds over the version's input bound
    variables: intermediate solution and resource variables are eliminated
    and every output slot gets its own relation.

    Raises:
        RecurrenceError: If intermediate definitions are cyclic
    """
    element = state.element
    ineqs = list(element.r)
    keep = list(SOL_NAMES)
    ineqs.append(Inequation(SOL_NAMES[0], GE, Var(element.sol[0], LOWER)))
    ineqs.append(Inequation(SOL_NAMES[1], LE, Var(element.sol[1], UPPER)))
    for rdef in defs:
        lower, upper = element.resource(rdef.name)
        ineqs.append(Inequation(rdef.names[0], GE, Var(lower, LOWER)))
        ineqs.append(Inequation(rdef.names[1], LE, Var(upper, UPPER)))
        keep.extend(rdef.names)

    t: Dict[str, SizedSchema] = {}
    for i, (arg, shape) in enumerate(zip(clause.head.args, pattern.outputs), start=1):
        if shape is None:
            continue
        if state.dead:
            schema = map_empty(shape)
        elif arg.name in state.t:
            schema = measure_term(arg, shape, state.t)
        else:
            schema = measure_term(state.resolve(arg), shape, state.t)
        t[str(i)] = schema
        for k, (lower, upper) in enumerate(schema_slots(schema), start=1):
            quantity = output_quantity(i, k)
            ineqs.append(Inequation(f"{quantity}_L", GE, lower))
            ineqs.append(Inequation(f"{quantity}_U", LE, upper))
            keep.extend((f"{quantity}_L", f"{quantity}_U"))

    system = normalize(EqSystem(tuple(ineqs)), keep=keep)
    relations = frozenset(i for i in system.inequations if i.lhs in keep)
    prime = AbstractElement(SOL_NAMES, _canonical_resources(defs), element.failed, element.d, relations,
                            element.nf, element.det, element.version, t)
    check_scope(prime, pattern.params(LOWER) + pattern.params(UPPER))
    return prime


def map_empty(shape: SizedSchema) -> SizedSchema:
    """Output sizes of a clause that never succeeds"""
    if isinstance(shape, OpaqueNode):
        return shape
    return with_slots(shape, [(EMPTY_LOWER, EMPTY_UPPER)] * len(schema_slots(shape)))


# ---------------------------------------------------------------------------
# Widening
# ---------------------------------------------------------------------------

def _world(c: DomainConstraint) -> Optional[str]:
    sides = set(sides_of(c.subject).values())
    return sides.pop() if len(sides) == 1 else None


def widen(primes: Sequence[Optional[AbstractElement]], tests: Sequence[ClauseTests], pattern: CallPattern,
          defs: Sequence[ResourceDef], nf: str, det: str,
          version: str) -> Tuple[AbstractElement, EqSystem]:
    """
    Group the clause primes of a version into bound functions.

    Every quantity gets one function per world over that world's input
    bound variables; each satisfiable clause contributes a case guarded by
    its domain constraints of the same world. Clause exclusivity and
    coverage from the tests decide how cases aggregate. A version that
    may fail has lower solution bound 0; a determinate one at most one
    solution.
    """
    exclusive = exclusive_pairs(tests)
    covering = covering_sets(tests)
    certain = certain_clauses(tests)
    functions: List[BoundFunction] = []
    for quantity, kind, combine_upper, combine_lower in pattern.quantities(defs):
        for side in (LOWER, UPPER):
            lhs = f"{quantity}_{side}"
            cases = []
            for index, prime in enumerate(primes):
                if prime is None:
                    continue
                guard = tuple(c for c in prime.d if _world(c) == side)
                cases.append(Case(index, guard, prime.bound(lhs)))
            functions.append(BoundFunction(
                name=function_name(version, quantity, side),
                params=pattern.params(side),
                side=side,
                cases=tuple(cases),
                kind=kind,
                combine=combine_upper if side == UPPER else combine_lower,
                exclusive=exclusive,
                covering=covering,
                certain=certain,
                clamp_one=quantity == SOLUTIONS and det == IS_DET,
                floor_one=quantity == SOLUTIONS and nf == NOT_FAILS,
                zero=quantity == SOLUTIONS and side == LOWER and nf == FAILS,
            ))
    system = EqSystem(functions=tuple(functions), inputs=pattern.params(LOWER) + pattern.params(UPPER))
    relations = frozenset(i for fn in functions for i in fn.inequations())
    element = AbstractElement(SOL_NAMES, _canonical_resources(defs), nf == FAILS, pattern.d, relations,
                              nf, det, version)
    return element, system
