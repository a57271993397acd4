"""
Symbolic bound expressions for sizedcost

Immutable IR for bound expressions over extended integers: constants
(integers, rationals and ∞), bound variables, sums, clamped differences,
products, min/max, integer powers, Fibonacci terms and calls to the bound
functions of predicate versions.

Evaluation is exact (int and Fraction, never floating point apart from ∞).
sympy is only used at the boundary, through to_sympy/from_sympy, for the
algebra the solver and the order extraction need.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Set, Tuple, Union

import sympy as sp

from . import SizedCostError

INF = math.inf
Number = Union[int, Fraction, float]


class RecurrenceError(SizedCostError):
    """Error in symbolic expressions, equation systems or their solving"""
    pass


class SymExpr:
    """Base class of all expression nodes"""

    __slots__ = ()

    def __add__(self, other):
        return add(self, lift(other))

    def __radd__(self, other):
        return add(lift(other), self)

    def __mul__(self, other):
        return mul(self, lift(other))

    def __rmul__(self, other):
        return mul(lift(other), self)

    def __sub__(self, other):
        return sub(self, lift(other))

    def __rsub__(self, other):
        return sub(lift(other), self)

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Const(SymExpr):
    value: Number


@dataclass(frozen=True)
class Var(SymExpr):
    name: str
    side: str = ''


@dataclass(frozen=True)
class Add(SymExpr):
    terms: Tuple[SymExpr, ...]


@dataclass(frozen=True)
class Sub(SymExpr):
    """Difference clamped at 0"""
    left: SymExpr
    right: SymExpr


@dataclass(frozen=True)
class Mul(SymExpr):
    factors: Tuple[SymExpr, ...]


@dataclass(frozen=True)
class Min(SymExpr):
    args: Tuple[SymExpr, ...]


@dataclass(frozen=True)
class Max(SymExpr):
    args: Tuple[SymExpr, ...]


@dataclass(frozen=True)
class Pow(SymExpr):
    base: int
    exponent: SymExpr


@dataclass(frozen=True)
class Fib(SymExpr):
    arg: SymExpr


@dataclass(frozen=True)
class Call(SymExpr):
    fn: str
    args: Tuple[SymExpr, ...]


ZERO = Const(0)
ONE = Const(1)
INFINITY = Const(INF)


def normalize_number(value: Number) -> Number:
    """Collapse integral Fractions and floats to int, keep ∞"""
    if isinstance(value, float):
        if math.isinf(value):
            return INF if value > 0 else -INF
        if value.is_integer():
            return int(value)
        return Fraction(value).limit_denominator()
    if isinstance(value, Fraction) and value.denominator == 1:
        return int(value.numerator)
    return value


def lift(value) -> SymExpr:
    if isinstance(value, SymExpr):
        return value
    if isinstance(value, (int, Fraction, float)):
        return Const(normalize_number(value))
    raise RecurrenceError(f"Cannot lift {value!r} to an expression")


def const(value: Number) -> Const:
    return Const(normalize_number(value))


def is_const(expr: SymExpr, value: Optional[Number] = None) -> bool:
    if not isinstance(expr, Const):
        return False
    return value is None or expr.value == value


def is_infinite(expr: SymExpr) -> bool:
    return isinstance(expr, Const) and expr.value == INF


# ---------------------------------------------------------------------------
# Extended-integer arithmetic
# ---------------------------------------------------------------------------

def ext_add(a: Number, b: Number) -> Number:
    if a == INF or b == INF:
        return INF
    if a == -INF or b == -INF:
        return -INF
    return normalize_number(a + b)


def ext_mul(a: Number, b: Number) -> Number:
    # 0·∞ = 0
    if a == 0 or b == 0:
        return 0
    if math.isinf(a) or math.isinf(b):
        return INF if (a > 0) == (b > 0) else -INF
    return normalize_number(a * b)


def ext_sub_clamped(a: Number, b: Number) -> Number:
    if b == INF:
        return 0
    if a == INF:
        return INF
    return normalize_number(max(0, a - b))


def fibonacci(n: int) -> int:
    """Exact Fibonacci number F(n), F(0)=0, F(1)=1, extended to negative n"""
    if n < 0:
        value = fibonacci(-n)
        return value if (-n) % 2 == 1 else -value
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


# ---------------------------------------------------------------------------
# Smart constructors
# ---------------------------------------------------------------------------

def add(*items) -> SymExpr:
    terms: List[SymExpr] = []
    total: Number = 0
    for item in items:
        item = lift(item)
        for term in (item.terms if isinstance(item, Add) else (item,)):
            if isinstance(term, Const):
                total = ext_add(total, term.value)
            else:
                terms.append(term)
    if total == INF:
        return INFINITY
    if total != 0 or not terms:
        terms.append(Const(total))
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def mul(*items) -> SymExpr:
    factors: List[SymExpr] = []
    coefficient: Number = 1
    for item in items:
        item = lift(item)
        for factor in (item.factors if isinstance(item, Mul) else (item,)):
            if isinstance(factor, Const):
                coefficient = ext_mul(coefficient, factor.value)
            else:
                factors.append(factor)
    if coefficient == 0:
        return ZERO
    if not factors:
        return Const(coefficient)
    if coefficient != 1:
        factors.insert(0, Const(coefficient))
    if len(factors) == 1:
        return factors[0]
    return Mul(tuple(factors))


def sub(left, right) -> SymExpr:
    left, right = lift(left), lift(right)
    if is_const(right, 0):
        return left
    if isinstance(left, Const) and isinstance(right, Const):
        return Const(ext_sub_clamped(left.value, right.value))
    if is_infinite(left):
        return INFINITY
    if is_infinite(right) or left == right:
        return ZERO
    return Sub(left, right)


def _lattice(items, cls, pick, absorbing: Number, identity: Number) -> SymExpr:
    args: List[SymExpr] = []
    best: Optional[Number] = None
    for item in items:
        item = lift(item)
        for arg in (item.args if isinstance(item, cls) else (item,)):
            if isinstance(arg, Const):
                if arg.value == absorbing:
                    return Const(absorbing)
                if arg.value == identity:
                    continue
                best = arg.value if best is None else pick(best, arg.value)
            elif arg not in args:
                args.append(arg)
    dual = Max if cls is Min else Min
    # absorption: min(max(x, y), y) = y
    args = [a for a in args if not (isinstance(a, dual) and any(b in a.args for b in args if b is not a))]
    args = _drop_offsets(args, keep_largest=cls is Max)
    if best is not None and best <= 0 and args:
        # variables are sizes, so x >= 0 >= best
        if cls is Max and any(_nonnegative(a) for a in args):
            best = None
        elif cls is Min and all(_nonnegative(a) for a in args):
            return Const(best)
    args.sort(key=render)
    if best is not None:
        args.append(Const(best))
    if not args:
        return Const(identity)
    if len(args) == 1:
        return args[0]
    return cls(tuple(args))


def _split_offset(expr: SymExpr) -> Tuple[SymExpr, Number]:
    if isinstance(expr, Add) and isinstance(expr.terms[-1], Const):
        return add(*expr.terms[:-1]), expr.terms[-1].value
    return expr, 0


def _drop_offsets(args: List[SymExpr], keep_largest: bool) -> List[SymExpr]:
    """Of x+c and x+d keep only the larger (max) or smaller (min) offset"""
    chosen: Dict[SymExpr, Tuple[Number, SymExpr]] = {}
    order: List[SymExpr] = []
    for arg in args:
        core, offset = _split_offset(arg)
        if core not in chosen:
            chosen[core] = (offset, arg)
            order.append(core)
        elif (offset > chosen[core][0]) == keep_largest and offset != chosen[core][0]:
            chosen[core] = (offset, arg)
    return [chosen[core][1] for core in order]


def _nonnegative(expr: SymExpr) -> bool:
    if isinstance(expr, Const):
        return expr.value >= 0
    if isinstance(expr, (Var, Sub, Pow)):
        return True
    if isinstance(expr, (Add, Mul)):
        return all(_nonnegative(c) for c in children(expr))
    if isinstance(expr, Fib):
        return _nonnegative(expr.arg)
    if isinstance(expr, Min):
        return all(_nonnegative(a) for a in expr.args)
    if isinstance(expr, Max):
        return any(_nonnegative(a) for a in expr.args)
    return False


def smin(*items) -> SymExpr:
    return _lattice(items, Min, min, -INF, INF)


def smax(*items) -> SymExpr:
    return _lattice(items, Max, max, INF, -INF)


def power(base: int, exponent) -> SymExpr:
    exponent = lift(exponent)
    if isinstance(exponent, Const):
        if exponent.value == INF:
            return INFINITY if base > 1 else ONE
        return Const(normalize_number(Fraction(base) ** int(exponent.value)))
    return Pow(base, exponent)


def fib(arg) -> SymExpr:
    arg = lift(arg)
    if isinstance(arg, Const):
        if arg.value == INF:
            return INFINITY
        return Const(fibonacci(int(arg.value)))
    return Fib(arg)


def call(fn: str, args) -> Call:
    return Call(fn, tuple(lift(a) for a in args))


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------

def children(expr: SymExpr) -> Tuple[SymExpr, ...]:
    if isinstance(expr, Add):
        return expr.terms
    if isinstance(expr, Mul):
        return expr.factors
    if isinstance(expr, (Min, Max, Call)):
        return expr.args
    if isinstance(expr, Sub):
        return (expr.left, expr.right)
    if isinstance(expr, Pow):
        return (expr.exponent,)
    if isinstance(expr, Fib):
        return (expr.arg,)
    return ()


def rebuild(expr: SymExpr, parts: List[SymExpr]) -> SymExpr:
    """Rebuild a node of the same kind from new children via smart constructors"""
    if isinstance(expr, Add):
        return add(*parts)
    if isinstance(expr, Mul):
        return mul(*parts)
    if isinstance(expr, Min):
        return smin(*parts)
    if isinstance(expr, Max):
        return smax(*parts)
    if isinstance(expr, Sub):
        return sub(parts[0], parts[1])
    if isinstance(expr, Pow):
        return power(expr.base, parts[0])
    if isinstance(expr, Fib):
        return fib(parts[0])
    if isinstance(expr, Call):
        return Call(expr.fn, tuple(parts))
    return expr


def transform(expr: SymExpr, leaf: Callable[[SymExpr], Optional[SymExpr]]) -> SymExpr:
    """
    Bottom-up rewrite. `leaf` is tried on every node after its children were
    rewritten; returning None keeps the rebuilt node.
    """
    kids = children(expr)
    node = rebuild(expr, [transform(k, leaf) for k in kids]) if kids else expr
    replaced = leaf(node)
    return node if replaced is None else replaced


def substitute(expr: SymExpr, mapping: Mapping[str, SymExpr]) -> SymExpr:
    if not mapping:
        return expr

    def replace(node: SymExpr) -> Optional[SymExpr]:
        if isinstance(node, Var) and node.name in mapping:
            return lift(mapping[node.name])
        return None

    return transform(expr, replace)


def unclamp(expr: SymExpr, lows: Mapping[str, Number]) -> SymExpr:
    """Plain `x-k` for a clamped difference wherever x is known to be at least k"""
    def plain(node: SymExpr) -> Optional[SymExpr]:
        if isinstance(node, Sub) and isinstance(node.left, Var) and isinstance(node.right, Const) \
                and lows.get(node.left.name, -1) >= node.right.value:
            return add(node.left, -node.right.value)
        return None

    return transform(expr, plain)


def map_calls(expr: SymExpr, fn: Callable[[Call], Optional[SymExpr]]) -> SymExpr:
    def replace(node: SymExpr) -> Optional[SymExpr]:
        if isinstance(node, Call):
            return fn(node)
        return None

    return transform(expr, replace)


def variables(expr: SymExpr) -> FrozenSet[str]:
    found: Set[str] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            found.add(node.name)
        stack.extend(children(node))
    return frozenset(found)


def calls(expr: SymExpr) -> List[Call]:
    found: List[Call] = []
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Call) and node not in found:
            found.append(node)
        stack.extend(children(node))
    return found


def contains_infinity(expr: SymExpr) -> bool:
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Const) and node.value in (INF, -INF):
            return True
        stack.extend(children(node))
    return False


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

CallHandler = Callable[[str, Tuple[Number, ...]], Number]


def evaluate(expr: SymExpr, env: Mapping[str, Number],
             on_call: Optional[CallHandler] = None) -> Number:
    """
    Evaluate an expression to an extended integer.

    Args:
        expr: Expression to evaluate
        env: Values of bound variables (∞ allowed)
        on_call: Handler for bound-function calls, required if expr has calls

    Returns:
        int, Fraction or ∞

    Raises:
        RecurrenceError: On unassigned variables or unhandled calls
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        if expr.name not in env:
            raise RecurrenceError(f"Unassigned variable: {expr.name}")
        return normalize_number(env[expr.name])
    if isinstance(expr, Add):
        total: Number = 0
        for term in expr.terms:
            total = ext_add(total, evaluate(term, env, on_call))
        return total
    if isinstance(expr, Sub):
        return ext_sub_clamped(evaluate(expr.left, env, on_call),
                               evaluate(expr.right, env, on_call))
    if isinstance(expr, Mul):
        values = [evaluate(f, env, on_call) for f in expr.factors]
        product: Number = 1
        for value in values:
            product = ext_mul(product, value)
        return product
    if isinstance(expr, Min):
        return min(evaluate(a, env, on_call) for a in expr.args)
    if isinstance(expr, Max):
        return max(evaluate(a, env, on_call) for a in expr.args)
    if isinstance(expr, Pow):
        exponent = evaluate(expr.exponent, env, on_call)
        if exponent == INF:
            return INF if expr.base > 1 else 1
        return normalize_number(Fraction(expr.base) ** int(exponent))
    if isinstance(expr, Fib):
        arg = evaluate(expr.arg, env, on_call)
        if arg == INF:
            return INF
        return fibonacci(int(arg))
    if isinstance(expr, Call):
        if on_call is None:
            raise RecurrenceError(f"Cannot evaluate call to {expr.fn} without a handler")
        args = tuple(evaluate(a, env, on_call) for a in expr.args)
        return on_call(expr.fn, args)
    raise RecurrenceError(f"Unknown expression node: {expr!r}")


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def render_number(value: Number) -> str:
    if value == INF:
        return "∞"
    if value == -INF:
        return "-∞"
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return str(value)


def _is_negative_term(term: SymExpr) -> bool:
    if isinstance(term, Const):
        return term.value < 0
    return isinstance(term, Mul) and isinstance(term.factors[0], Const) and term.factors[0].value < 0


def _atomic(expr: SymExpr) -> bool:
    return isinstance(expr, (Var, Min, Max, Call, Fib)) or (
        isinstance(expr, Const) and not isinstance(expr.value, Fraction) and expr.value >= 0)


def render(expr: SymExpr) -> str:
    if isinstance(expr, Const):
        return render_number(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Add):
        out = render(expr.terms[0])
        for term in expr.terms[1:]:
            if _is_negative_term(term):
                out += "-" + render(mul(-1, term))
            else:
                out += "+" + render(term)
        return out
    if isinstance(expr, Sub):
        right = render(expr.right)
        if isinstance(expr.right, (Add, Sub)):
            right = f"({right})"
        return f"{render(expr.left)}-{right}"
    if isinstance(expr, Mul):
        parts = []
        for factor in expr.factors:
            text = render(factor)
            if isinstance(factor, (Add, Sub)) or (
                    isinstance(factor, Const) and isinstance(factor.value, Fraction)):
                text = f"({text})"
            parts.append(text)
        if parts[0] == "-1" and len(parts) > 1:
            return "-" + "·".join(parts[1:])
        return "·".join(parts)
    if isinstance(expr, Min):
        return "min(" + ",".join(render(a) for a in expr.args) + ")"
    if isinstance(expr, Max):
        return "max(" + ",".join(render(a) for a in expr.args) + ")"
    if isinstance(expr, Pow):
        exponent = render(expr.exponent)
        if not _atomic(expr.exponent):
            exponent = f"({exponent})"
        return f"{expr.base}^{exponent}"
    if isinstance(expr, Fib):
        return f"fib({render(expr.arg)})"
    if isinstance(expr, Call):
        return f"{expr.fn}(" + ",".join(render(a) for a in expr.args) + ")"
    return repr(expr)


# ---------------------------------------------------------------------------
# sympy bridge
# ---------------------------------------------------------------------------

def sympy_symbol(name: str) -> sp.Symbol:
    return sp.Symbol(name, integer=True, nonnegative=True)


def to_sympy(expr: SymExpr) -> sp.Expr:
    """Convert to sympy. Clamped differences become plain differences."""
    if isinstance(expr, Const):
        if expr.value == INF:
            return sp.oo
        if expr.value == -INF:
            return -sp.oo
        if isinstance(expr.value, Fraction):
            return sp.Rational(expr.value.numerator, expr.value.denominator)
        return sp.Integer(int(expr.value))
    if isinstance(expr, Var):
        return sympy_symbol(expr.name)
    if isinstance(expr, Add):
        return sp.Add(*[to_sympy(t) for t in expr.terms])
    if isinstance(expr, Sub):
        return to_sympy(expr.left) - to_sympy(expr.right)
    if isinstance(expr, Mul):
        return sp.Mul(*[to_sympy(f) for f in expr.factors])
    if isinstance(expr, Min):
        return sp.Min(*[to_sympy(a) for a in expr.args])
    if isinstance(expr, Max):
        return sp.Max(*[to_sympy(a) for a in expr.args])
    if isinstance(expr, Pow):
        return sp.Integer(expr.base) ** to_sympy(expr.exponent)
    if isinstance(expr, Fib):
        return sp.fibonacci(to_sympy(expr.arg))
    if isinstance(expr, Call):
        return sp.Function(expr.fn)(*[to_sympy(a) for a in expr.args])
    raise RecurrenceError(f"Cannot convert {expr!r} to sympy")


def from_sympy(value: sp.Expr, sides: Optional[Mapping[str, str]] = None) -> SymExpr:
    """Convert a sympy expression built by to_sympy (or the solver) back"""
    sides = sides or {}
    value = sp.sympify(value)
    if value is sp.oo or value is sp.zoo:
        return INFINITY
    if value is -sp.oo:
        return Const(-INF)
    if value.is_Integer:
        return Const(int(value))
    if value.is_Rational:
        return const(Fraction(int(value.p), int(value.q)))
    if value.is_Symbol:
        return Var(value.name, sides.get(value.name, ''))
    if value.is_Add:
        return add(*[from_sympy(a, sides) for a in value.args])
    if value.is_Mul:
        return mul(*[from_sympy(a, sides) for a in value.args])
    if value.is_Pow:
        base, exponent = value.args
        if exponent.is_Integer and int(exponent) > 0:
            factor = from_sympy(base, sides)
            return mul(*([factor] * int(exponent)))
        if base.is_Integer and int(base) > 1:
            return power(int(base), from_sympy(exponent, sides))
        raise RecurrenceError(f"Unsupported power in closed form: {value}")
    if isinstance(value, sp.Min):
        return smin(*[from_sympy(a, sides) for a in value.args])
    if isinstance(value, sp.Max):
        return smax(*[from_sympy(a, sides) for a in value.args])
    if isinstance(value, sp.fibonacci):
        return fib(from_sympy(value.args[0], sides))
    if isinstance(type(value), sp.core.function.UndefinedFunction):
        return Call(type(value).__name__, tuple(from_sympy(a, sides) for a in value.args))
    raise RecurrenceError(f"Unsupported sympy expression: {value}")


def simplify(expr: SymExpr, sides: Optional[Mapping[str, str]] = None) -> SymExpr:
    """Expand through sympy; forms containing ∞ or clamped differences are kept"""
    if contains_infinity(expr) or _has_sub(expr):
        return expr
    try:
        return from_sympy(sp.expand(to_sympy(expr)), sides or sides_of(expr))
    except RecurrenceError:
        return expr


def _has_sub(expr: SymExpr) -> bool:
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Sub):
            return True
        stack.extend(children(node))
    return False


def sides_of(expr: SymExpr) -> Dict[str, str]:
    found: Dict[str, str] = {}
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            found[node.name] = node.side
        stack.extend(children(node))
    return found
