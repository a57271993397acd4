"""
Concrete cost semantics for sizedcost

An exhaustive depth-first SLD interpreter over normalized clauses that
counts solutions and resource usage exactly, a seeded generator of typed
ground inputs, and the checker that compares observed measures with the
closed forms of an analysis.

Costs follow the analysis: a clause is charged its head cost (plus the
builtin cost of its guard prefix) once the guard prefix succeeds, each
call to a user predicate is charged the literal cost, and each body
builtin its builtin cost. The interpreter keeps its own goal and choice
point stacks, so deep recursion does not use the Python stack.
"""

import itertools
import random
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from . import SizedCostError
from .fixpoint import AnalysisEntry, AnalysisResult
from .frontend import (IS, NIL, Clause, Compound, Integer, Program, Term, Variable, is_builtin,
                       normalize_program, rename_term)
from .recurrence import LOWER, UPPER
from .regtypes import BaseType, FunctorType, SymbolType, TypeGrammar, TypeTerm
from .resdomain import SOLUTIONS, ResourceDef
from .sizedtypes import SizedTypeError, instantiate, size_of_term, type_of_schema
from .symexpr import INF, Number, RecurrenceError, render_number


class OracleError(SizedCostError):
    """Instantiation or type errors while running a goal, unevaluable bounds"""
    pass


class LimitExceeded(OracleError):
    """Step or depth limit reached"""
    pass


@dataclass(frozen=True)
class OracleLimits:
    step_limit: int = 1000000
    depth_limit: int = 5000


@dataclass
class ConcreteMeasure:
    """Exact solution count and resource totals of one goal over its whole search"""
    goal: Compound
    solutions: int = 0
    resources: Dict[str, int] = field(default_factory=dict)
    answers: List[Compound] = field(default_factory=list)
    steps: int = 0
    diverged: bool = False
    reason: str = ''

    @property
    def valid(self) -> bool:
        return not self.diverged

    def observed(self, quantity: str) -> int:
        if quantity == SOLUTIONS:
            return self.solutions
        return self.resources[quantity]


# ---------------------------------------------------------------------------
# Interpreter
# ---------------------------------------------------------------------------

Goals = Optional[Tuple[Term, int, 'Goals']]


@dataclass
class _Prepared:
    clause: Clause
    variables: Tuple[str, ...]
    guard: int
    entry_cost: Dict[str, int]


@dataclass
class _ChoicePoint:
    literal: Compound
    depth: int
    rest: Goals
    clauses: List[_Prepared]
    next: int
    mark: int


class _Machine:

    def __init__(self, program: Program, defs: Sequence[ResourceDef], limits: OracleLimits):
        self.defs = tuple(defs)
        self.limits = limits
        self.bindings: Dict[str, Term] = {}
        self.trail: List[str] = []
        self.choices: List[_ChoicePoint] = []
        self.goals: Goals = None
        self.counter = itertools.count(1)
        self.prepared: Dict[Tuple[str, int], List[_Prepared]] = {}
        for indicator, clauses in program.predicates.items():
            self.prepared[indicator] = [self._prepare(c) for c in clauses]

    def _prepare(self, clause: Clause) -> _Prepared:
        guard = clause.guard_prefix_length()
        costs = {d.name: d.headcost + sum(d.builtin_cost(lit) for lit in clause.body[:guard]) for d in self.defs}
        return _Prepared(clause, tuple(clause.variables()), guard, costs)

    # -- terms --------------------------------------------------------------

    def deref(self, term: Term) -> Term:
        while isinstance(term, Variable) and term.name in self.bindings:
            term = self.bindings[term.name]
        return term

    def resolve(self, term: Term) -> Term:
        term = self.deref(term)
        if isinstance(term, Compound) and term.args:
            return Compound(term.functor, tuple(self.resolve(a) for a in term.args))
        return term

    def bind(self, name: str, value: Term):
        self.bindings[name] = value
        self.trail.append(name)

    def undo(self, mark: int):
        while len(self.trail) > mark:
            del self.bindings[self.trail.pop()]

    def unify(self, a: Term, b: Term) -> bool:
        # no occurs check
        stack = [(a, b)]
        while stack:
            x, y = stack.pop()
            x, y = self.deref(x), self.deref(y)
            if x == y and not isinstance(x, Compound):
                continue
            if isinstance(x, Variable):
                self.bind(x.name, y)
            elif isinstance(y, Variable):
                self.bind(y.name, x)
            elif isinstance(x, Integer) or isinstance(y, Integer):
                if x != y:
                    return False
            elif x.functor != y.functor or len(x.args) != len(y.args):
                return False
            else:
                stack.extend(zip(x.args, y.args))
        return True

    def evaluate(self, expr: Term) -> int:
        expr = self.deref(expr)
        if isinstance(expr, Integer):
            return expr.value
        if isinstance(expr, Variable):
            raise OracleError(f"instantiation error: {expr.name} is unbound in arithmetic")
        if len(expr.args) == 2:
            left, right = self.evaluate(expr.args[0]), self.evaluate(expr.args[1])
            if expr.functor == '+':
                return left + right
            if expr.functor == '-':
                return left - right
            if expr.functor == '*':
                return left * right
        raise OracleError(f"type error: {expr.functor}/{len(expr.args)} is not an arithmetic operator")

    def builtin(self, literal: Compound) -> bool:
        left, right = literal.args
        if literal.functor == '=':
            return self.unify(left, right)
        if literal.functor == IS:
            return self.unify(left, Integer(self.evaluate(right)))
        a, b = self.evaluate(left), self.evaluate(right)
        return {'<': a < b, '=<': a <= b, '>': a > b, '>=': a >= b,
                '=:=': a == b, '=\\=': a != b}[literal.functor]

    # -- search -------------------------------------------------------------

    def charge(self, totals: Dict[str, int], costs: Dict[str, int]):
        for name, cost in costs.items():
            totals[name] += cost

    def try_clauses(self, measure: ConcreteMeasure, literal: Compound, depth: int, rest: Goals,
                    clauses: List[_Prepared], start: int) -> bool:
        if depth >= self.limits.depth_limit:
            raise LimitExceeded(f"depth limit {self.limits.depth_limit} reached")
        for k in range(start, len(clauses)):
            measure.steps += 1
            if measure.steps > self.limits.step_limit:
                raise LimitExceeded(f"step limit {self.limits.step_limit} reached")
            prepared = clauses[k]
            mark = len(self.trail)
            n = next(self.counter)
            mapping = {name: Variable(f"{name}_{n}") for name in prepared.variables}
            head = rename_term(prepared.clause.head, mapping)
            body = [rename_term(lit, mapping) for lit in prepared.clause.body]
            if self.unify(head, literal) and all(self.builtin(lit) for lit in body[:prepared.guard]):
                if k + 1 < len(clauses):
                    self.choices.append(_ChoicePoint(literal, depth, rest, clauses, k + 1, mark))
                self.charge(measure.resources, prepared.entry_cost)
                goals = rest
                for lit in reversed(body[prepared.guard:]):
                    goals = (lit, depth + 1, goals)
                self.goals = goals
                return True
            self.undo(mark)
        return False

    def backtrack(self, measure: ConcreteMeasure) -> bool:
        while self.choices:
            cp = self.choices.pop()
            self.undo(cp.mark)
            if self.try_clauses(measure, cp.literal, cp.depth, cp.rest, cp.clauses, cp.next):
                return True
        return False

    def solve(self, goal: Compound) -> ConcreteMeasure:
        measure = ConcreteMeasure(goal, resources={d.name: 0 for d in self.defs})
        self.goals = (goal, 0, None)
        while True:
            if self.goals is None:
                measure.solutions += 1
                measure.answers.append(self.resolve(goal))
                if not self.backtrack(measure):
                    return measure
                continue
            literal, depth, rest = self.goals
            literal = self.deref(literal)
            if not isinstance(literal, Compound):
                raise OracleError(f"cannot call {literal}")
            if is_builtin(literal):
                self.charge(measure.resources, {d.name: d.builtin_cost(literal) for d in self.defs})
                if self.builtin(literal):
                    self.goals = rest
                    continue
            else:
                # the entry goal itself is not a body literal
                if depth > 0:
                    self.charge(measure.resources, {d.name: d.litcost for d in self.defs})
                clauses = self.prepared.get((literal.functor, len(literal.args)), [])
                if self.try_clauses(measure, literal, depth, rest, clauses, 0):
                    continue
            if not self.backtrack(measure):
                return measure


def run(program: Program, goal: Compound, defs: Sequence[ResourceDef],
        limits: Optional[OracleLimits] = None) -> ConcreteMeasure:
    """
    Run a goal to exhaustion and measure it.

    A run that hits the step or depth limit is returned with
    `diverged` set and must not be used for checking.

    Raises:
        OracleError: On instantiation or arithmetic type errors
    """
    machine = _Machine(normalize_program(program), defs, limits or OracleLimits())
    try:
        return machine.solve(goal)
    except LimitExceeded as exc:
        return ConcreteMeasure(goal, diverged=True, reason=str(exc))


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

def _recursive_alternative(alt: TypeTerm, symbol: str) -> bool:
    return isinstance(alt, FunctorType) and SymbolType(symbol) in alt.args


def _generate(tt: TypeTerm, grammar: TypeGrammar, budget: int, rng: random.Random) -> Term:
    if isinstance(tt, BaseType) or (isinstance(tt, SymbolType) and tt.name == 'num'):
        return Integer(rng.randint(0, budget))
    if isinstance(tt, FunctorType):
        return Compound(tt.functor, tuple(_generate(a, grammar, budget, rng) for a in tt.args))
    alts = grammar.alternatives(tt.name)
    if not grammar.is_recursive(tt.name):
        return _generate(rng.choice(alts), grammar, budget, rng)
    base = [a for a in alts if not _recursive_alternative(a, tt.name)]
    steps = [a for a in alts if _recursive_alternative(a, tt.name)]
    if not base:
        raise OracleError(f"type {tt.name} has no finite member")
    return _unfold(tt.name, base, steps, grammar, rng.randint(0, budget), budget, rng)


def _unfold(symbol: str, base: List[TypeTerm], steps: List[TypeTerm], grammar: TypeGrammar,
            size: int, budget: int, rng: random.Random) -> Term:
    # spine of `size` recursive constructors; other self positions get smaller subterms
    if size == 0:
        return _generate(rng.choice(base), grammar, budget, rng)
    alt = rng.choice(steps)
    args: List[Term] = []
    spine = None
    for i, arg in enumerate(alt.args):
        if arg == SymbolType(symbol):
            if spine is None:
                spine = i
                args.append(NIL)
            else:
                args.append(_unfold(symbol, base, steps, grammar, rng.randint(0, size - 1), budget, rng))
        else:
            args.append(_generate(arg, grammar, budget, rng))
    args[spine] = _unfold(symbol, base, steps, grammar, size - 1, budget, rng)
    return Compound(alt.functor, tuple(args))


def generate_inputs(tt: Union[str, TypeTerm], grammar: TypeGrammar, budget: int,
                    seed: int = 0) -> Iterator[Term]:
    """
    Endless stream of random ground members of a type.

    Numbers and collection sizes are drawn uniformly from 0..budget; the
    stream is the same for the same seed.

    Raises:
        OracleError: If the type has no finite member
    """
    if isinstance(tt, str):
        tt = BaseType('num') if tt == 'num' else SymbolType(tt)
    rng = random.Random(seed)
    while True:
        yield _generate(tt, grammar, budget, rng)


# ---------------------------------------------------------------------------
# Checking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    quantity: str
    side: str
    bound: Number
    observed: int

    def __str__(self):
        relation = "<" if self.side == LOWER else ">"
        return (f"{self.quantity}: observed {self.observed} {relation} "
                f"{'lower' if self.side == LOWER else 'upper'} bound {render_number(self.bound)}")


@dataclass
class Verdict:
    goal: Compound
    sizes: Dict[str, Number]
    violations: List[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def input_sizes(entry: AnalysisEntry, args: Sequence[Optional[Term]], grammar: TypeGrammar) -> Dict[str, Number]:
    """Values of a version's input bound variables at concrete arguments"""
    sizes: Dict[str, Number] = {}
    for schema, arg in zip(entry.pattern.inputs, args):
        if schema is None:
            continue
        try:
            concrete = size_of_term(arg, type_of_schema(schema, grammar), grammar)
        except SizedTypeError as exc:
            raise OracleError(f"input {arg} does not fit the call pattern: {exc}") from exc
        sizes.update(instantiate(schema, concrete))
    return sizes


def check_bounds(measure: ConcreteMeasure, entry: AnalysisEntry, sizes: Dict[str, Number],
                 quantities: Optional[Sequence[str]] = None) -> Verdict:
    """
    Compare a measure with the closed forms of a version at the measured sizes.

    Raises:
        OracleError: If the measure diverged or a bound cannot be evaluated
    """
    if not measure.valid:
        raise OracleError(f"cannot check a diverged run: {measure.reason}")
    if quantities is None:
        quantities = [SOLUTIONS] + list(measure.resources)
    verdict = Verdict(measure.goal, sizes)
    for quantity in quantities:
        observed = measure.observed(quantity)
        try:
            lower = entry.form(quantity, LOWER).evaluate(sizes)
            upper = entry.form(quantity, UPPER).evaluate(sizes)
        except RecurrenceError as exc:
            raise OracleError(f"{entry.version}: cannot evaluate bounds of {quantity}: {exc}") from exc
        if lower == INF:
            raise OracleError(f"{entry.version}: lower bound of {quantity} is infinite")
        if observed < lower:
            verdict.violations.append(Violation(quantity, LOWER, lower, observed))
        if observed > upper:
            verdict.violations.append(Violation(quantity, UPPER, upper, observed))
    return verdict


@dataclass
class CheckSummary:
    """Per-version outcome of a check run"""
    version: str
    passed: int = 0
    failed: int = 0
    diverged: int = 0
    failures: List[Verdict] = field(default_factory=list)

    @property
    def runs(self) -> int:
        return self.passed + self.failed + self.diverged


def check_entry(program: Program, result: AnalysisResult, entry: AnalysisEntry, budget: int,
                samples: int, seed: int = 0, limits: Optional[OracleLimits] = None,
                quantities: Optional[Sequence[str]] = None) -> CheckSummary:
    """
    Run a version on random typed inputs and check every bound.

    Diverged runs are counted apart from violations.
    """
    grammar = result.grammar
    streams = []
    for i, schema in enumerate(entry.pattern.inputs):
        if schema is None:
            streams.append(None)
        else:
            streams.append(generate_inputs(type_of_schema(schema, grammar), grammar, budget, seed * 1009 + i))
    summary = CheckSummary(entry.version)
    name = entry.indicator[0]
    for sample in range(samples):
        args: List[Term] = []
        for i, stream in enumerate(streams):
            args.append(next(stream) if stream is not None else Variable(f"Out{i + 1}"))
        goal = Compound(name, tuple(args))
        measure = run(program, goal, result.resources, limits)
        if not measure.valid:
            summary.diverged += 1
            continue
        sizes = input_sizes(entry, [a if s is not None else None for a, s in zip(args, entry.pattern.inputs)],
                            grammar)
        verdict = check_bounds(measure, entry, sizes, quantities)
        if verdict.passed:
            summary.passed += 1
        else:
            summary.failed += 1
            summary.failures.append(verdict)
    return summary


