"""
Guarded recurrence systems for sizedcost

The analysis turns every clause of a predicate version into inequations over
the version's input bound variables. Widening groups them into bound
functions, one per (version, quantity, world), whose cases are the clauses
with their domain guards. This module normalizes inequation chains,
evaluates systems by unrolling, solves bound functions into closed forms
and reads complexity orders off the results.
"""

import itertools
import random
from dataclasses import dataclass, replace
from functools import reduce
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx
import sympy as sp
from sympy.polys.polyerrors import GeneratorsNeeded, PolynomialError

from .sizedtypes import EMPTY_LOWER, EMPTY_UPPER, GE, LE, DomainConstraint
from .symexpr import (
    INF, INFINITY, ONE, ZERO, Add, Call, Const, Fib, Max, Min, Mul, Number, Pow, RecurrenceError,
    Sub, SymExpr, Var, add, calls, contains_infinity, evaluate, ext_add, from_sympy,
    lift, map_calls, render, sides_of, smax, smin, sub, substitute, sympy_symbol, to_sympy,
    unclamp, variables,
)


class DivergenceError(RecurrenceError):
    """Unrolling did not reach a base case within the depth limit"""
    pass


UPPER = 'U'
LOWER = 'L'
SIZE = 'size'
COUNT = 'count'


def direction_of(side: str) -> str:
    return LE if side == UPPER else GE


# ---------------------------------------------------------------------------
# Inequations and systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Inequation:
    """`lhs ≤ rhs` (upper) or `lhs ≥ rhs` (lower), optionally guarded"""
    lhs: str
    direction: str
    rhs: SymExpr
    guard: Tuple[DomainConstraint, ...] = ()

    def __str__(self):
        text = f"{self.lhs} {self.direction} {render(self.rhs)}"
        if self.guard:
            text += "   if " + ", ".join(str(g) for g in self.guard)
        return text


@dataclass(frozen=True)
class Case:
    """One clause's contribution to a bound function"""
    index: int
    guard: Tuple[DomainConstraint, ...]
    rhs: SymExpr


@dataclass(frozen=True)
class BoundFunction:
    """
    Bound function of a version for one quantity in one world.

    At a point, the applicable cases are those whose guard holds. Sizes
    aggregate with max (upper) or min (lower). Counts (solutions and
    resources) aggregate upper bounds by sum, or max when the applicable
    cases are pairwise exclusive, and lower bounds by min; a lower bound is
    0 when no case applies or the applicable cases are not known to cover
    the inputs. `clamp_one` caps a determinate solution count at 1;
    `floor_one` marks a count of a version that cannot fail, so at least 1.
    """
    name: str
    params: Tuple[str, ...]
    side: str
    cases: Tuple[Case, ...]
    kind: str = COUNT
    combine: str = 'sum'
    exclusive: FrozenSet[FrozenSet[int]] = frozenset()
    covering: FrozenSet[FrozenSet[int]] = frozenset()
    certain: FrozenSet[int] = frozenset()
    clamp_one: bool = False
    floor_one: bool = False
    zero: bool = False

    @property
    def direction(self) -> str:
        return direction_of(self.side)

    def inequations(self) -> Tuple[Inequation, ...]:
        return tuple(Inequation(self.name, self.direction, c.rhs, c.guard) for c in self.cases)

    def callees(self) -> Set[str]:
        return {c.fn for case in self.cases for c in calls(case.rhs)}

    def with_cases(self, cases: Iterable[Case]) -> 'BoundFunction':
        return replace(self, cases=tuple(cases))


@dataclass(frozen=True)
class EqSystem:
    """
    Inequations plus the bound functions they were grouped into.

    Chains produced while a clause is walked live in `inequations`; widened
    systems carry `functions`.
    """
    inequations: Tuple[Inequation, ...] = ()
    inputs: Tuple[str, ...] = ()
    functions: Tuple[BoundFunction, ...] = ()

    def all_inequations(self) -> List[Inequation]:
        found = list(self.inequations)
        for fn in self.functions:
            found.extend(fn.inequations())
        return found

    def groups(self) -> Dict[Tuple[str, str], List[Inequation]]:
        grouped: Dict[Tuple[str, str], List[Inequation]] = {}
        for ineq in self.all_inequations():
            grouped.setdefault((ineq.lhs, ineq.direction), []).append(ineq)
        return grouped

    def function(self, name: str) -> BoundFunction:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise RecurrenceError(f"No bound function named {name}")

    def dump(self) -> str:
        lines = []
        for ineq in self.inequations:
            lines.append(str(ineq))
        for fn in self.functions:
            args = ",".join(fn.params)
            lines.append(f"{fn.name}({args}):")
            for case in fn.cases:
                guard = ", ".join(str(g) for g in case.guard) or "true"
                lines.append(f"  [{case.index}] {fn.direction} {render(case.rhs)}   if {guard}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def normalize(system: EqSystem, keep: Optional[Iterable[str]] = None) -> EqSystem:
    """
    Eliminate intermediate variables by substitution.

    A variable defined by an unguarded inequation and used on the right-hand
    side of another inequation of the same direction is intermediate; its
    definitions are substituted in dependency order (several definitions
    combine with min for upper, max for lower bounds). Names in `keep` are
    never eliminated.

    Raises:
        RecurrenceError: If the definitions are cyclic
    """
    keep = set(keep or ())
    result: List[Inequation] = []
    for direction in (LE, GE):
        ineqs = [i for i in system.inequations if i.direction == direction]
        defined: Dict[str, List[Inequation]] = {}
        for ineq in ineqs:
            defined.setdefault(ineq.lhs, []).append(ineq)
        used: Set[str] = set()
        for ineq in ineqs:
            used |= variables(ineq.rhs)
        intermediate = {name for name in defined
                        if name in used and name not in keep
                        and all(not i.guard for i in defined[name])}

        graph = nx.DiGraph()
        graph.add_nodes_from(defined)
        for ineq in ineqs:
            for name in variables(ineq.rhs):
                if name in intermediate:
                    graph.add_edge(ineq.lhs, name)
        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph)
            raise RecurrenceError(f"cyclic definitions: {' -> '.join(a for a, _ in cycle)}")

        resolved: Dict[str, SymExpr] = {}
        for name in reversed(list(nx.topological_sort(graph))):
            if name not in intermediate:
                continue
            rhss = [substitute(i.rhs, resolved) for i in defined[name]]
            resolved[name] = smin(*rhss) if direction == LE else smax(*rhss)

        for ineq in ineqs:
            if ineq.lhs in intermediate:
                continue
            result.append(Inequation(ineq.lhs, direction, substitute(ineq.rhs, resolved), ineq.guard))
    return EqSystem(tuple(result), system.inputs, system.functions)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def _pairwise_exclusive(indices: Sequence[int], exclusive: FrozenSet[FrozenSet[int]]) -> bool:
    return all(frozenset((i, j)) in exclusive for i, j in itertools.combinations(indices, 2))


class _Numeric:
    zero = 0
    empty_lower = INF
    empty_upper = -INF

    @staticmethod
    def total(values):
        return reduce(ext_add, values, 0)

    largest = staticmethod(max)
    smallest = staticmethod(min)


class _Symbolic:
    zero = ZERO
    empty_lower = EMPTY_LOWER
    empty_upper = EMPTY_UPPER

    @staticmethod
    def total(values):
        return add(*values)

    @staticmethod
    def largest(values):
        return smax(*values)

    @staticmethod
    def smallest(values):
        return smin(*values)


def aggregate(fn: BoundFunction, indices: Sequence[int], values: Sequence, numeric: bool = False):
    """Value of fn at a point whose applicable cases are `indices`"""
    ops = _Numeric if numeric else _Symbolic
    values = list(values)
    if fn.zero:
        return ops.zero
    if fn.kind == SIZE:
        if not values:
            return ops.empty_upper if fn.side == UPPER else ops.empty_lower
        return ops.largest(values) if fn.side == UPPER else ops.smallest(values)
    if fn.side == UPPER:
        if not values:
            result = ops.zero
        elif fn.combine == 'max' or _pairwise_exclusive(indices, fn.exclusive):
            result = ops.largest(values)
        else:
            result = ops.total(values)
    else:
        if not values or frozenset(indices) not in fn.covering:
            result = ops.zero
        elif fn.combine == 'sum':
            sure = [v for i, v in zip(indices, values) if i in fn.certain]
            result = ops.total(sure) if sure else ops.smallest(values)
        else:
            result = ops.smallest(values)
    if fn.clamp_one:
        result = ops.smallest([result, 1 if numeric else ONE])
    return result


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------

Guard = Tuple[DomainConstraint, ...]


@dataclass(frozen=True)
class ClosedForm:
    """
    Solution of a bound function.

    `pieces` hold guarded special cases (typically the base points), tried in
    order before `general`. Non-exact forms are sound bounds only; the
    `fallback` method marks the trivial ∞ / 0 answer.
    """
    general: SymExpr
    pieces: Tuple[Tuple[Guard, SymExpr], ...] = ()
    side: str = UPPER
    exact: bool = True
    method: str = 'direct'
    params: Tuple[str, ...] = ()

    @property
    def imprecise(self) -> bool:
        return self.method == 'fallback'

    def evaluate(self, env: Mapping[str, Number]) -> Number:
        for guard, expr in self.pieces:
            if all(c.holds(env) for c in guard):
                return evaluate(expr, env)
        return evaluate(self.general, env)

    def collapsed(self) -> SymExpr:
        """Single expression bounding every piece"""
        result = self.general
        for guard, expr in self.pieces:
            at = _at_point(self.general, guard)
            if self.side == UPPER:
                if not dominates(at, expr):
                    result = smax(result, expr)
            elif not dominates(expr, at):
                result = smin(result, expr)
        return result

    def instantiate(self, args: Sequence[SymExpr]) -> SymExpr:
        return substitute(self.collapsed(), dict(zip(self.params, args)))

    def render(self) -> str:
        """Pieces that agree with the general expression at their point are left out"""
        pieces = [(guard, expr) for guard, expr in self.pieces if _at_point(self.general, guard) != expr]
        if not pieces:
            return render(self.general)
        parts = [f"{', '.join(str(c) for c in guard)}: {render(expr)}" for guard, expr in pieces]
        parts.append(f"otherwise: {render(self.general)}")
        return "{" + "; ".join(parts) + "}"


def _at_point(expr: SymExpr, guard: Guard) -> SymExpr:
    mapping = {c.subject.name: Const(c.bound) for c in guard
               if c.op == '=' and isinstance(c.subject, Var)}
    return substitute(expr, mapping)


def dominates(a: SymExpr, b: SymExpr) -> bool:
    """True if a ≥ b is provable for all non-negative variable values"""
    if a == b:
        return True
    if isinstance(a, Const) and isinstance(b, Const):
        return a.value >= b.value
    if (isinstance(a, Const) and a.value == INF) or (isinstance(b, Const) and b.value == -INF):
        return True
    if contains_infinity(a) or contains_infinity(b):
        return False
    try:
        difference = sp.expand(to_sympy(a) - to_sympy(b))
        if difference.is_number:
            return bool(difference >= 0)
        # generators (symbols, min/max, powers, fib) are all non-negative here
        poly = sp.Poly(difference)
    except (PolynomialError, GeneratorsNeeded, RecurrenceError, TypeError):
        return False
    if any(_may_be_negative(g) for g in poly.gens):
        return False
    return all(c >= 0 for c in poly.coeffs())


def _may_be_negative(gen: sp.Expr) -> bool:
    if isinstance(gen, sp.fibonacci):
        return not bool(gen.args[0].is_nonnegative)
    return gen.is_nonnegative is False


def constant_closed_form(value: SymExpr, side: str, params: Sequence[str] = (),
                         method: str = 'direct') -> ClosedForm:
    return ClosedForm(general=value, side=side, method=method, params=tuple(params))


def fallback_form(fn: BoundFunction) -> ClosedForm:
    value = INFINITY if fn.side == UPPER else ZERO
    return ClosedForm(general=value, side=fn.side, exact=False, method='fallback', params=fn.params)


# ---------------------------------------------------------------------------
# Unrolling
# ---------------------------------------------------------------------------

class _Unroller:
    def __init__(self, system: EqSystem, solved: Mapping[str, ClosedForm], depth_limit: int):
        self.functions = {fn.name: fn for fn in system.functions}
        self.definitions: Dict[str, List[Inequation]] = {}
        for ineq in system.inequations:
            self.definitions.setdefault(ineq.lhs, []).append(ineq)
        self.solved = solved
        self.depth_limit = depth_limit
        self.depth = 0
        self.memo: Dict[Tuple[str, Tuple], Number] = {}

    def value(self, name: str, env: Mapping[str, Number]) -> Number:
        if name in self.functions:
            fn = self.functions[name]
            missing = [p for p in fn.params if p not in env]
            if missing:
                raise RecurrenceError(f"{name}: no value for {', '.join(missing)}")
            return self.call(name, tuple(env[p] for p in fn.params))
        if name in self.solved:
            return self.solved[name].evaluate(env)
        if name in self.definitions:
            values = []
            direction = self.definitions[name][0].direction
            for ineq in self.definitions[name]:
                if all(c.holds(env) for c in ineq.guard):
                    values.append(self.expr(ineq.rhs, env))
            if not values:
                raise RecurrenceError(f"no applicable definition of {name}")
            return min(values) if direction == LE else max(values)
        if name in env:
            return env[name]
        raise RecurrenceError(f"Unknown bound variable: {name}")

    def expr(self, expr: SymExpr, env: Mapping[str, Number]) -> Number:
        local = dict(env)
        for name in variables(expr):
            if name not in local:
                local[name] = self.value(name, env)
        return evaluate(expr, local, self.on_call)

    def on_call(self, name: str, args: Tuple[Number, ...]) -> Number:
        if name in self.solved and name not in self.functions:
            form = self.solved[name]
            return form.evaluate(dict(zip(form.params, args)))
        if name not in self.functions:
            raise RecurrenceError(f"Call to unknown bound function {name}")
        return self.call(name, args)

    def call(self, name: str, args: Tuple[Number, ...]) -> Number:
        key = (name, args)
        if key in self.memo:
            return self.memo[key]
        fn = self.functions[name]
        self.depth += 1
        try:
            if self.depth > self.depth_limit:
                raise DivergenceError(f"{name}: unrolling exceeded depth {self.depth_limit}")
            env = dict(zip(fn.params, args))
            indices, values = [], []
            for case in fn.cases:
                if all(c.holds(env) for c in case.guard):
                    indices.append(case.index)
                    values.append(evaluate(case.rhs, env, self.on_call))
            result = aggregate(fn, indices, values, numeric=True)
        except RecursionError as exc:
            raise DivergenceError(f"{name}: unrolling exceeded the interpreter stack") from exc
        finally:
            self.depth -= 1
        self.memo[key] = result
        return result


def unroll(system: EqSystem, name: str, assignment: Mapping[str, Number],
           solved: Optional[Mapping[str, ClosedForm]] = None, depth_limit: int = 10000) -> Number:
    """
    Evaluate a bound function or bound variable of a system at concrete inputs.

    Raises:
        DivergenceError: If the depth limit is exceeded
        RecurrenceError: On unknown names or missing inputs
    """
    return _Unroller(system, solved or {}, depth_limit).value(name, assignment)


# ---------------------------------------------------------------------------
# Complexity orders
# ---------------------------------------------------------------------------

_SUPERSCRIPTS = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")


@dataclass(frozen=True)
class ComplexityOrder:
    """Asymptotic order of a bound: a sum of incomparable monomials"""
    expr: SymExpr
    text: str

    def __str__(self):
        return self.text


def order_of(form) -> ComplexityOrder:
    """
    Order of a closed form (its general piece) or of an expression.

    Constant factors and lower-order terms are dropped; exponentials are
    shown by their base (`2^ν`, `φ^ν` for Fibonacci growth).
    """
    expr = form.general if isinstance(form, ClosedForm) else lift(form)
    reduced = _order_expr(expr)
    return ComplexityOrder(reduced, _render_order(reduced))


def _order_expr(expr: SymExpr) -> SymExpr:
    if isinstance(expr, Const):
        if expr.value == INF:
            return INFINITY
        return ONE if expr.value > 0 else ZERO
    if contains_infinity(expr):
        return INFINITY
    if isinstance(expr, (Min, Max)):
        parts = [_order_expr(a) for a in expr.args]
        if isinstance(expr, Max):
            # constants never dominate a growing argument
            growing = [p for p in parts if not isinstance(p, Const)]
            parts = growing or parts
            return smax(*parts)
        return smin(*parts)
    sides = sides_of(expr)
    try:
        value = sp.expand(to_sympy(expr))
    except RecurrenceError:
        return expr
    value = value.replace(lambda e: isinstance(e, sp.Pow) and e.base.is_Integer and not e.exp.is_number,
                          lambda e: e.base ** _leading_symbol(e.exp))
    value = value.replace(lambda e: isinstance(e, sp.fibonacci), lambda e: sp.fibonacci(_leading_symbol(e.args[0])))
    monomials = []
    constant = False
    for term in sp.Add.make_args(sp.expand(value)):
        coefficient, rest = term.as_coeff_Mul()
        if coefficient <= 0:
            continue
        if rest == 1:
            constant = True
        elif rest not in monomials:
            monomials.append(rest)
    kept = [m for m in monomials if not any(o is not m and _monomial_le(m, o) for o in monomials)]
    if not kept:
        return ONE if constant else ZERO
    return add(*[from_sympy(m, sides) for m in sorted(kept, key=sp.default_sort_key)])


def _leading_symbol(exponent: sp.Expr) -> sp.Expr:
    symbols = sorted(exponent.free_symbols, key=lambda s: s.name)
    return symbols[0] if len(symbols) == 1 else exponent


def _exponential_in(monomial: sp.Expr) -> Set[sp.Symbol]:
    found: Set[sp.Symbol] = set()
    for factor in sp.Mul.make_args(monomial):
        base = factor.base if isinstance(factor, sp.Pow) and factor.exp.is_Integer else factor
        if isinstance(base, sp.Pow) and not base.exp.is_number:
            found |= base.exp.free_symbols
        if isinstance(base, sp.fibonacci):
            found |= base.args[0].free_symbols
    return found


def _monomial_le(small: sp.Expr, large: sp.Expr) -> bool:
    if small == large:
        return False
    small_powers = small.as_powers_dict()
    large_powers = large.as_powers_dict()
    exponential = _exponential_in(large)
    for base, exp in small_powers.items():
        if base.is_Symbol and base in exponential:
            continue
        if large_powers.get(base, 0) < exp:
            return False
    return True


def _render_order(expr: SymExpr) -> str:
    if isinstance(expr, Const):
        return "∞" if expr.value == INF else str(expr.value)
    if isinstance(expr, Add):
        return "+".join(_render_order(t) for t in expr.terms)
    if isinstance(expr, (Min, Max)):
        name = "min" if isinstance(expr, Min) else "max"
        args = sorted(_render_order(a) for a in expr.args)
        return f"{name}({','.join(args)})"
    factors = expr.factors if isinstance(expr, Mul) else (expr,)
    counts: Dict[str, int] = {}
    exponentials: List[str] = []
    others: List[str] = []
    for factor in factors:
        if isinstance(factor, Var):
            counts[factor.name] = counts.get(factor.name, 0) + 1
        elif isinstance(factor, Pow):
            exponentials.append(f"{factor.base}^{_render_order(factor.exponent)}")
        elif isinstance(factor, Fib):
            exponentials.append(f"φ^{_render_order(factor.arg)}")
        elif isinstance(factor, Const):
            continue
        else:
            others.append(_render_order(factor))
    monomial = "".join(name + (str(n).translate(_SUPERSCRIPTS) if n > 1 else "")
                       for name, n in sorted(counts.items()))
    parts = sorted(exponentials) + ([monomial] if monomial else []) + sorted(others)
    return "·".join(parts) if (exponentials or others) and len(parts) > 1 else "".join(parts) or "1"


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------

SAMPLE_VALUES = (0, 1, 2, 3, 5)
MAX_REGIONS = 64


class _Unsolvable(Exception):
    pass


@dataclass
class SolverSettings:
    depth_limit: int = 10000
    samples: int = 40
    tail_points: int = 6
    seed: int = 0


def _dec_amount(param: str, arg: SymExpr) -> Optional[int]:
    """k if arg is `param - k`, plain or clamped at 0, else None"""
    if isinstance(arg, Sub) and isinstance(arg.left, Var) and arg.left.name == param \
            and isinstance(arg.right, Const):
        return int(arg.right.value)
    if isinstance(arg, Max) and len(arg.args) == 2 and ZERO in arg.args:
        # max(param - k, 0) equals param - k wherever the recursion applies
        inner = arg.args[0] if arg.args[1] == ZERO else arg.args[1]
        return _dec_amount(param, inner)
    if isinstance(arg, Add) and len(arg.terms) == 2:
        var = [t for t in arg.terms if isinstance(t, Var) and t.name == param]
        offset = [t for t in arg.terms if isinstance(t, Const) and t.value < 0]
        if var and offset:
            return int(-offset[0].value)
    return None


def _arg_kind(param: str, arg: SymExpr, side: str):
    if isinstance(arg, Var) and arg.name == param:
        return 'same', None
    k = _dec_amount(param, arg)
    if k is not None and k > 0:
        return 'dec', k
    if isinstance(arg, Const):
        return 'const', arg.value
    lattice = Max if side == UPPER else Min
    if isinstance(arg, lattice) and any(isinstance(a, Var) and a.name == param for a in arg.args):
        return 'widen', [a for a in arg.args if not (isinstance(a, Var) and a.name == param)]
    return 'other', None


def _threshold(c: DomainConstraint) -> int:
    return {'=': c.bound, '>': c.bound, '>=': c.bound - 1, '<': c.bound - 1, '=<': c.bound}[c.op]


def _decide(op: str, k: int, lo: Number, hi: Number) -> Optional[bool]:
    """Truth of `x op k` for every x in [lo, hi], None when it varies"""
    if op == '=':
        if lo == hi == k:
            return True
        return False if k < lo or k > hi else None
    if op == '>':
        return True if lo > k else (False if hi <= k else None)
    if op == '>=':
        return True if lo >= k else (False if hi < k else None)
    if op == '<':
        return True if hi < k else (False if lo >= k else None)
    if op == '=<':
        return True if hi <= k else (False if lo > k else None)
    return None


def _flatten(values: Sequence[SymExpr], lattice) -> List[SymExpr]:
    found: List[SymExpr] = []
    for value in values:
        for item in (value.args if isinstance(value, lattice) else (value,)):
            if item not in found:
                found.append(item)
    return found


Interval = Tuple[Number, Number]
Entry = Tuple[int, SymExpr, bool]


class Solver:
    """
    Solves bound functions into closed forms, callees before callers.

    Each strongly connected group of functions is solved on its own after
    the closed forms of everything it calls have been substituted. A
    single recursive function is split into its base points and a tail
    recurrence; tails are matched against summation, geometric and
    Fibonacci shapes, and max/min-shaped tails against lattice candidates.
    Every result is checked against unrolling on sample inputs; forms that
    fail the check fall back to ∞ (upper) or 0 (lower).
    """

    def __init__(self, functions: Iterable[BoundFunction],
                 solved: Optional[Mapping[str, ClosedForm]] = None,
                 settings: Optional[SolverSettings] = None):
        self.functions: Dict[str, BoundFunction] = {fn.name: fn for fn in functions}
        self.solved: Dict[str, ClosedForm] = dict(solved or {})
        self.settings = settings or SolverSettings()
        self.random = random.Random(self.settings.seed)
        self.notes: Dict[str, str] = {}

    def solve_all(self) -> Dict[str, ClosedForm]:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.functions)
        for fn in self.functions.values():
            for callee in fn.callees():
                if callee in self.functions:
                    graph.add_edge(fn.name, callee)
        condensed = nx.condensation(graph)
        result: Dict[str, ClosedForm] = {}
        for component in reversed(list(nx.topological_sort(condensed))):
            members = sorted(condensed.nodes[component]['members'])
            forms = self._solve_component(members)
            self.solved.update(forms)
            result.update(forms)
        return result

    # -- components ---------------------------------------------------------

    def _solve_component(self, members: List[str]) -> Dict[str, ClosedForm]:
        fns = [self._resolved(self.functions[name]) for name in members]
        if len(fns) == 2:
            return self._solve_pair(*fns)
        if len(fns) > 2:
            reason = "mutual recursion between more than two functions"
            return {fn.name: self._fallback(fn, reason) for fn in fns}
        fn = fns[0]
        return {fn.name: self._guarded_solve(fn)}

    def _guarded_solve(self, fn: BoundFunction) -> ClosedForm:
        try:
            return self._solve_function(fn)
        except (_Unsolvable, RecurrenceError, PolynomialError, NotImplementedError,
                ValueError, TypeError, ZeroDivisionError) as exc:
            return self._fallback(fn, str(exc) or type(exc).__name__)

    def _fallback(self, fn: BoundFunction, reason: str) -> ClosedForm:
        if (fn.side == UPPER and fn.clamp_one) or (fn.side == LOWER and fn.floor_one):
            return ClosedForm(ONE, (), fn.side, False, 'refined', fn.params)
        self.notes[fn.name] = reason
        return fallback_form(fn)

    def _solve_pair(self, first: BoundFunction, second: BoundFunction) -> Dict[str, ClosedForm]:
        names = {first.name, second.name}

        def merged(fn: BoundFunction) -> BoundFunction:
            rename = lambda c: Call(first.name, c.args) if c.fn in names else None
            return replace(fn, name=first.name,
                           cases=tuple(Case(c.index, c.guard, map_calls(c.rhs, rename)) for c in fn.cases))

        a, b = merged(first), merged(second)
        if a == b:
            form = self._guarded_solve(a)
            return {first.name: form, second.name: replace(form, params=second.params)}
        reason = "mutual recursion with different equations"
        return {first.name: self._fallback(first, reason), second.name: self._fallback(second, reason)}

    def _resolved(self, fn: BoundFunction) -> BoundFunction:
        def replace_call(call: Call) -> Optional[SymExpr]:
            form = self.solved.get(call.fn)
            return form.instantiate(call.args) if form is not None else None

        return fn.with_cases(Case(c.index, c.guard, map_calls(c.rhs, replace_call)) for c in fn.cases)

    # -- single functions ---------------------------------------------------

    def _self_calls(self, fn: BoundFunction) -> List[Call]:
        found: List[Call] = []
        for case in fn.cases:
            for call in calls(case.rhs):
                if call.fn == fn.name and call not in found:
                    found.append(call)
        return found

    def _foreign_calls(self, fn: BoundFunction) -> List[str]:
        return sorted({c.fn for case in fn.cases for c in calls(case.rhs) if c.fn != fn.name})

    def _solve_function(self, fn: BoundFunction) -> ClosedForm:
        foreign = self._foreign_calls(fn)
        if foreign:
            raise _Unsolvable(f"calls to unsolved functions: {', '.join(foreign)}")
        if fn.zero:
            return constant_closed_form(ZERO, fn.side, fn.params)
        if fn.clamp_one and fn.floor_one:
            # determinate and cannot fail: exactly one solution
            return constant_closed_form(ONE, fn.side, fn.params, 'refined')
        if not self._self_calls(fn):
            return self._solve_nonrecursive(fn)
        return self._solve_recursive(fn)

    def _sides(self, fn: BoundFunction) -> Dict[str, str]:
        return {p: fn.side for p in fn.params}

    def _status(self, c: DomainConstraint, intervals: Mapping[str, Interval]) -> Optional[bool]:
        if isinstance(c.subject, Var) and c.subject.name in intervals:
            lo, hi = intervals[c.subject.name]
            return _decide(c.op, c.bound, lo, hi)
        points = {name: Const(lo) for name, (lo, hi) in intervals.items() if lo == hi}
        value = substitute(c.subject, points)
        if isinstance(value, Const):
            return c.holds_at(value.value)
        return None

    def _entries(self, fn: BoundFunction, intervals: Mapping[str, Interval]) -> List[Entry]:
        points = {name: Const(lo) for name, (lo, hi) in intervals.items() if lo == hi}
        entries: List[Entry] = []
        for case in fn.cases:
            statuses = [self._status(c, intervals) for c in case.guard]
            if any(s is False for s in statuses):
                continue
            entries.append((case.index, substitute(case.rhs, points), all(s is True for s in statuses)))
        return entries

    def _aggregate_entries(self, fn: BoundFunction, entries: Sequence[Entry]) -> SymExpr:
        indices = [i for i, _, _ in entries]
        values = [v for _, v, _ in entries]
        if all(d for _, _, d in entries) or fn.side == UPPER or fn.kind == SIZE:
            return aggregate(fn, indices, values)
        definite = frozenset(i for i, _, d in entries if d)
        if fn.zero or not definite or definite not in fn.covering:
            return ZERO
        result = smin(*values)
        return smin(result, ONE) if fn.clamp_one else result

    def _solve_nonrecursive(self, fn: BoundFunction) -> ClosedForm:
        guard_vars = sorted({c.subject.name for case in fn.cases for c in case.guard
                             if isinstance(c.subject, Var)})
        per_var = []
        for name in guard_vars:
            top = max([0] + [_threshold(c) for case in fn.cases for c in case.guard
                             if isinstance(c.subject, Var) and c.subject.name == name])
            per_var.append([(j, j) for j in range(top + 1)] + [(top + 1, INF)])
        regions = list(itertools.product(*per_var))
        if len(regions) > MAX_REGIONS:
            guard_vars, regions = [], [()]
        pieces: List[Tuple[Guard, SymExpr]] = []
        general: SymExpr = ZERO
        exact = True
        for region in regions:
            intervals = dict(zip(guard_vars, region))
            entries = self._entries(fn, intervals)
            exact = exact and all(d for _, _, d in entries)
            value = self._aggregate_entries(fn, entries)
            if all(hi == INF for _, hi in region):
                general = unclamp(value, {name: lo for name, (lo, _) in intervals.items()})
                continue
            guard = tuple(DomainConstraint(Var(name, fn.side), '=', lo) if lo == hi
                          else DomainConstraint(Var(name, fn.side), '>', int(lo) - 1)
                          for name, (lo, hi) in intervals.items())
            pieces.append((guard, value))
        return ClosedForm(general, tuple(pieces), fn.side, exact,
                          'cases' if pieces else 'direct', fn.params)

    def _relevant(self, fn: BoundFunction) -> Set[str]:
        marker = lambda c: Var('__call') if c.fn == fn.name else None
        relevant: Set[str] = set()
        for case in fn.cases:
            for c in case.guard:
                relevant |= variables(c.subject)
            relevant |= variables(map_calls(case.rhs, marker))
        self_calls = self._self_calls(fn)
        changed = True
        while changed:
            changed = False
            for call in self_calls:
                for param, arg in zip(fn.params, call.args):
                    if param in relevant:
                        new = variables(arg) - relevant
                        if new:
                            relevant |= new
                            changed = True
        return relevant & set(fn.params)

    def _rewrite_self_calls(self, fn: BoundFunction, rewrite: Callable[[Call], SymExpr]) -> BoundFunction:
        own = lambda c: rewrite(c) if c.fn == fn.name else None
        return fn.with_cases(Case(c.index, c.guard, map_calls(c.rhs, own)) for c in fn.cases)

    def _solve_recursive(self, fn: BoundFunction) -> ClosedForm:
        relevant = self._relevant(fn)
        fn = self._rewrite_self_calls(fn, lambda c: Call(c.fn, tuple(
            a if p in relevant else Var(p, fn.side) for p, a in zip(fn.params, c.args))))

        decreasing: Set[str] = set()
        constant: Set[str] = set()
        widened: Dict[str, SymExpr] = {}
        join = smax if fn.side == UPPER else smin
        for call in self._self_calls(fn):
            for param, arg in zip(fn.params, call.args):
                kind, info = _arg_kind(param, arg, fn.side)
                if kind == 'dec':
                    decreasing.add(param)
                elif kind == 'const':
                    constant.add(param)
                elif kind == 'widen':
                    bound = join(*info)
                    widened[param] = join(widened[param], bound) if param in widened else bound
                elif kind == 'other':
                    raise _Unsolvable(f"{fn.name}: argument {render(arg)} for {param} has no recognized shape")
        if not decreasing and len(constant) == 1:
            # recursive calls only at constant arguments
            decreasing = constant
        if not decreasing:
            raise _Unsolvable(f"{fn.name}: recursion without a decreasing argument")
        if widened:
            return self._solve_widened(fn, widened, decreasing)
        if len(decreasing) == 1:
            return self._solve_single_variable(fn, next(iter(decreasing)))
        return self._solve_simultaneous(fn, sorted(decreasing))

    def _solve_widened(self, fn: BoundFunction, widened: Dict[str, SymExpr],
                       decreasing: Set[str]) -> ClosedForm:
        """
        Replace an argument that only grows along the recursion (upper) or
        only shrinks (lower) by its limit, then solve with it fixed.
        """
        guard_vars = {v for case in fn.cases for c in case.guard for v in variables(c.subject)}
        for param, bound in widened.items():
            if param in guard_vars or variables(bound) & (decreasing | {param} | set(widened)):
                raise _Unsolvable(f"{fn.name}: cannot fix the changing argument {param}")
        fixed = {p: f"{p}~" for p in widened}
        rename = {p: Var(name, fn.side) for p, name in fixed.items()}

        def rewrite(call: Call) -> SymExpr:
            return Call(call.fn, tuple(rename[p] if p in fixed else substitute(a, rename)
                                       for p, a in zip(fn.params, call.args)))

        renamed = self._rewrite_self_calls(fn, rewrite)
        renamed = replace(renamed,
                          params=tuple(fixed.get(p, p) for p in fn.params),
                          cases=tuple(Case(c.index, c.guard, substitute(c.rhs, rename))
                                      for c in renamed.cases))
        form = self._solve_recursive(renamed)
        join = smax if fn.side == UPPER else smin
        limits = {fixed[p]: join(Var(p, fn.side), bound) for p, bound in widened.items()}
        pieces = tuple((guard, substitute(expr, limits)) for guard, expr in form.pieces)
        return ClosedForm(substitute(form.general, limits), pieces, fn.side, False,
                          form.method + '+widened', fn.params)

    def _point(self, fn: BoundFunction, n: str, j: int, table: Dict[int, SymExpr],
               visiting: Optional[Set[int]] = None) -> SymExpr:
        if j in table:
            return table[j]
        visiting = visiting if visiting is not None else set()
        if j in visiting:
            raise _Unsolvable(f"{fn.name}: value at {n}={j} depends on itself")
        visiting.add(j)
        position = fn.params.index(n)

        def at_point(call: Call) -> Optional[SymExpr]:
            if call.fn != fn.name:
                return None
            arg = call.args[position]
            if not isinstance(arg, Const):
                raise _Unsolvable(f"{fn.name}: recursive argument {render(arg)} at {n}={j}")
            return self._point(fn, n, int(arg.value), table, visiting)

        entries = [(i, map_calls(v, at_point), d) for i, v, d in self._entries(fn, {n: (j, j)})]
        visiting.discard(j)
        table[j] = self._aggregate_entries(fn, entries)
        return table[j]

    def _tail_branches(self, fn: BoundFunction, entries: Sequence[Entry]) -> List[SymExpr]:
        indices = [i for i, _, _ in entries]
        values = [v for _, v, _ in entries]
        if not entries:
            return [aggregate(fn, [], [])]
        if fn.kind == SIZE:
            return _flatten(values, Max if fn.side == UPPER else Min)
        if fn.side == UPPER:
            if fn.combine == 'max' or _pairwise_exclusive(indices, fn.exclusive):
                return _flatten(values, Max)
            return [add(*values)]
        definite = frozenset(i for i, _, d in entries if d)
        if not definite or definite not in fn.covering:
            return [ZERO]
        if fn.combine == 'sum':
            sure = [v for i, v, _ in entries if i in fn.certain]
            if sure:
                return [add(*sure)]
        return _flatten(values, Min)

    def _solve_single_variable(self, fn: BoundFunction, n: str) -> ClosedForm:
        position = fn.params.index(n)
        steps = set()
        for call in self._self_calls(fn):
            for param, arg in zip(fn.params, call.args):
                kind, info = _arg_kind(param, arg, fn.side)
                if param == n and kind == 'dec':
                    steps.add(info)
                elif param != n and kind != 'same':
                    raise _Unsolvable(f"{fn.name}: argument {param} changes along the recursion on {n}")
        thresholds = [_threshold(c) for case in fn.cases for c in case.guard
                      if isinstance(c.subject, Var) and c.subject.name == n]
        top = max([0] + thresholds + [max(steps, default=1) - 1])
        table: Dict[int, SymExpr] = {}
        points = [self._point(fn, n, j, table) for j in range(top + 1)]

        def constant_calls(call: Call) -> Optional[SymExpr]:
            arg = call.args[position]
            if call.fn == fn.name and isinstance(arg, Const):
                return self._point(fn, n, int(arg.value), table)
            return None

        entries = [(i, map_calls(v, constant_calls), d)
                   for i, v, d in self._entries(fn, {n: (top + 1, INF)})]
        branches = self._tail_branches(fn, entries)
        pieces = tuple(((DomainConstraint(Var(n, fn.side), '=', j),), value) for j, value in enumerate(points))

        if len(branches) == 1:
            solved = self._solve_branch(fn, n, top, table, branches[0])
            if solved is not None:
                general, method = solved
                general = unclamp(general, {n: top + 1})
                if fn.clamp_one:
                    general = smin(general, ONE)
                form = ClosedForm(general, pieces, fn.side, True, method, fn.params)
                verdict, _ = self._check(fn, form, n, top)
                if verdict != 'wrong':
                    return replace(form, exact=verdict == 'exact')
            # unknown shape: the base points may still bound every unrolling
        return self._best_candidate(fn, n, top, table, branches, pieces)

    def _solve_branch(self, fn: BoundFunction, n: str, top: int, table: Dict[int, SymExpr],
                      branch: SymExpr) -> Optional[Tuple[SymExpr, str]]:
        position = fn.params.index(n)
        placeholders: Dict[int, sp.Symbol] = {}

        def mark(call: Call) -> SymExpr:
            k = _dec_amount(n, call.args[position])
            if call.fn != fn.name or k is None:
                raise _Unsolvable(f"{fn.name}: unexpected call {render(call)}")
            placeholders.setdefault(k, sympy_symbol(f"__F{k}"))
            return Var(f"__F{k}")

        body = map_calls(branch, mark)
        if not placeholders:
            return body, 'direct'
        if contains_infinity(body):
            return None
        sides = self._sides(fn)
        nsym = sympy_symbol(n)
        expr = sp.expand(to_sympy(body))
        fsyms = set(placeholders.values())
        g = sp.expand(expr.subs({s: 0 for s in fsyms}))
        coeffs = {k: sp.expand(sp.diff(expr, s)) for k, s in placeholders.items()}
        if any(c.free_symbols & fsyms for c in coeffs.values()):
            return None
        if sp.expand(expr - g - sum(coeffs[k] * placeholders[k] for k in coeffs)) != 0:
            return None
        active = sorted(k for k, c in coeffs.items() if c != 0)
        base = to_sympy(table[top])
        if not active:
            return from_sympy(g, sides), 'direct'
        if active == [1] and coeffs[1] == 1:
            i = sp.Symbol('i_', integer=True, nonnegative=True)
            total = sp.summation(g.subs(nsym, i), (i, top + 1, nsym))
            if total.has(sp.Sum):
                return None
            return from_sympy(sp.expand(base + total), sides), 'summation'
        if len(active) == 1 and coeffs[active[0]] == 1:
            return self._interpolate(fn, n, top, table, g, active[0])
        if nsym in g.free_symbols:
            return None
        if active == [1] and coeffs[1].is_Integer and coeffs[1] > 1:
            shift = g / (coeffs[1] - 1)
            closed = coeffs[1] ** (nsym - top) * (base + shift) - shift
            return from_sympy(sp.expand(closed), sides), 'geometric'
        if active == [1, 2] and coeffs[1] == 1 and coeffs[2] == 1 and top >= 1:
            previous = to_sympy(table[top - 1])
            closed = ((previous + g) * sp.fibonacci(nsym - top + 2)
                      + (base - previous) * sp.fibonacci(nsym - top + 1) - g)
            return from_sympy(sp.expand(closed), sides), 'fibonacci'
        return None

    def _interpolate(self, fn: BoundFunction, n: str, top: int, table: Dict[int, SymExpr],
                     g: sp.Expr, k: int) -> Optional[Tuple[SymExpr, str]]:
        nsym = sympy_symbol(n)
        if not g.is_polynomial(nsym):
            return None
        degree = sp.Poly(g, nsym).degree() if g != 0 else 0
        data = [(j, to_sympy(self._point(fn, n, j, table)))
                for j in range(top + 1, top + degree + k + 3)]
        if any(value.has(sp.oo) for _, value in data):
            return None
        poly = sp.expand(sp.interpolate(data, nsym))
        if sp.expand(poly - poly.subs(nsym, nsym - k) - g) != 0:
            return None
        return from_sympy(poly, self._sides(fn)), 'interpolation'

    def _best_candidate(self, fn: BoundFunction, n: str, top: int, table: Dict[int, SymExpr],
                        branches: List[SymExpr], pieces: Tuple[Tuple[Guard, SymExpr], ...]) -> ClosedForm:
        join = smax if fn.side == UPPER else smin
        candidates: List[Tuple[SymExpr, str]] = []
        for branch in branches:
            try:
                solved = self._solve_branch(fn, n, top, table, branch)
            except _Unsolvable:
                solved = None
            if solved is not None:
                candidates.append(solved)
        own = lambda c: c.fn == fn.name
        atoms = [b for b in branches if not any(own(c) for c in calls(b))]
        atoms += [table[j] for j in range(top + 1)]
        candidates.append((join(*atoms), 'lattice'))
        for expr, _ in list(candidates[:-1]):
            candidates.append((join(expr, *atoms), 'lattice'))

        best: Optional[Tuple[Tuple, ClosedForm]] = None
        for expr, method in candidates:
            expr = unclamp(expr, {n: top + 1})
            general = smin(expr, ONE) if fn.clamp_one else expr
            form = ClosedForm(general, pieces, fn.side, True, method, fn.params)
            verdict, score = self._check(fn, form, n, top)
            if verdict == 'wrong':
                continue
            rank = (verdict != 'exact', score if fn.side == UPPER else -score)
            if best is None or rank < best[0]:
                best = (rank, replace(form, exact=verdict == 'exact'))
        if best is None:
            raise _Unsolvable(f"{fn.name}: no candidate bound survived checking")
        return best[1]

    def _solve_simultaneous(self, fn: BoundFunction, decreasing: List[str]) -> ClosedForm:
        """Arguments that all shrink by one per call: solve over their minimum"""
        for call in self._self_calls(fn):
            for param, arg in zip(fn.params, call.args):
                if param in decreasing and _dec_amount(param, arg) != 1:
                    raise _Unsolvable(f"{fn.name}: arguments do not decrease together")
        lead = decreasing[0]
        lead_var = Var(lead, fn.side)
        marker = lambda c: Var('__call') if c.fn == fn.name else None
        cases = []
        for case in fn.cases:
            on_decreasing = [c for c in case.guard
                             if isinstance(c.subject, Var) and c.subject.name in decreasing]
            rest = tuple(c for c in case.guard if c not in on_decreasing)
            if variables(map_calls(case.rhs, marker)) & set(decreasing):
                raise _Unsolvable(f"{fn.name}: bound depends on a decreasing argument directly")
            if not on_decreasing:
                raise _Unsolvable(f"{fn.name}: clause {case.index} has no guard on the decreasing arguments")
            zero = any((c.op == '=' and c.bound == 0) or (c.op == '=<' and c.bound == 0)
                       or (c.op == '<' and c.bound == 1) for c in on_decreasing)
            positive = all((c.op == '>' and c.bound == 0) or (c.op == '>=' and c.bound == 1)
                           for c in on_decreasing)
            if zero:
                if any(c.fn == fn.name for c in calls(case.rhs)):
                    raise _Unsolvable(f"{fn.name}: recursive clause {case.index} at an empty argument")
                guard = (DomainConstraint(lead_var, '=', 0),) + rest
            elif positive:
                guard = (DomainConstraint(lead_var, '>', 0),) + rest
            else:
                raise _Unsolvable(f"{fn.name}: unsupported guard in clause {case.index}")
            cases.append(Case(case.index, guard, case.rhs))

        def shrink(call: Call) -> SymExpr:
            return Call(call.fn, tuple(
                (sub(lead_var, 1) if p == lead else Var(p, fn.side)) if p in decreasing else a
                for p, a in zip(fn.params, call.args)))

        reduced = self._rewrite_self_calls(fn.with_cases(cases), shrink)
        form = self._solve_single_variable(reduced, lead)
        least = smin(*[Var(p, fn.side) for p in decreasing])
        to_min = {lead: least}

        def lift_guard(c: DomainConstraint) -> DomainConstraint:
            if isinstance(c.subject, Var) and c.subject.name == lead:
                return DomainConstraint(least, c.op, c.bound)
            return c

        lifted = ClosedForm(substitute(form.general, to_min),
                            tuple((tuple(lift_guard(c) for c in guard), substitute(expr, to_min))
                                  for guard, expr in form.pieces),
                            fn.side, form.exact, 'min-decrement', fn.params)
        verdict, _ = self._check(fn, lifted)
        if verdict == 'wrong':
            raise _Unsolvable(f"{fn.name}: minimum-based bound disagrees with unrolling")
        return replace(lifted, exact=form.exact and verdict == 'exact')

    # -- checking -----------------------------------------------------------

    def _samples(self, fn: BoundFunction, n: Optional[str] = None, top: int = 0) -> List[Dict[str, int]]:
        ranges = [range(top + self.settings.tail_points + 1) if p == n else SAMPLE_VALUES
                  for p in fn.params]
        grid = list(itertools.product(*ranges))
        if len(grid) > self.settings.samples:
            grid = self.random.sample(grid, self.settings.samples)
        return [dict(zip(fn.params, values)) for values in grid]

    def _check(self, fn: BoundFunction, form: ClosedForm, n: Optional[str] = None,
               top: int = 0) -> Tuple[str, float]:
        """'exact', 'sound' or 'wrong' against unrolling, plus a size score"""
        system = EqSystem(functions=(fn,))
        unroller = _Unroller(system, self.solved, self.settings.depth_limit)
        exact = True
        score = 0.0
        for env in self._samples(fn, n, top):
            truth = unroller.value(fn.name, env)
            value = form.evaluate(env)
            score += float(value)
            if value == truth:
                continue
            exact = False
            if (fn.side == UPPER and value < truth) or (fn.side == LOWER and value > truth):
                return 'wrong', score
        return ('exact' if exact else 'sound'), score


def solve(system: EqSystem, solved: Optional[Mapping[str, ClosedForm]] = None,
          settings: Optional[SolverSettings] = None) -> Dict[str, ClosedForm]:
    """
    Closed forms for every bound function of a system.

    Functions that cannot be solved get the fallback ∞ / 0 form; never raises
    for unsolvable shapes.
    """
    return Solver(system.functions, solved, settings).solve_all()
