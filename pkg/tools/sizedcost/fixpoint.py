"""
Goal-dependent fixpoint engine for sizedcost

Analysis starts from the program's entry declarations. Every call to a
user predicate is keyed by its canonical call pattern; each distinct
pattern is a version with its own memo entry. Versions are discovered
depth first. Strongly connected groups of versions (recursion) are
iterated until their widened elements are stable, with non-failure and
determinacy solved first on each round. Each group's bound functions are
then solved into closed forms that its callers instantiate.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from . import SizedCostError
from .auxdomains import (CALL, FAILS, IS_DET, NON_DET, NOT_FAILS, UNDEFINED, ClauseInfo, ClauseTests,
                         clause_tests, solve_properties)
from .frontend import (IS, Clause, Compound, EntryDecl, Integer, Program, Term, Variable,
                       is_comparison, normalize_program, term_variables)
from .recurrence import LOWER, UPPER, ClosedForm, EqSystem, RecurrenceError, Solver, SolverSettings, fallback_form
from .regtypes import (ANY_TYPE, NUM_TYPE, FunctorType, SymbolType, TypeGrammar, TypeGrammarError, TypeTerm,
                       entry_type, grammar_from_program, join_types, select_alternative,
                       type_of_term, well_formed)
from .resdomain import (AbstractElement, CallPattern, ClauseWalk, DomainError, ResourceDef, bottom,
                        call_success, leq, resources_of, walk_clause, widen)
from .sizedtypes import (DomainConstraint, FreshNames, NumNode, OpaqueNode, SizedSchema, SizedTypeError,
                         conventional_names, render_schema, rename_schema, schema_for_type, type_of_schema)
from .symexpr import substitute


class AnalysisError(SizedCostError):
    """Program cannot be analysed: bad entry, mode or schema error, cyclic definitions"""
    pass


@dataclass
class AnalysisSettings:
    iteration_cap: int = 50
    version_cap: int = 16
    solver: SolverSettings = field(default_factory=SolverSettings)


# diagnostic kinds
FALLBACK = 'fallback'
ITERATION_CAP = 'iteration_cap'
UNDEFINED_CALL = 'undefined'
TRUST = 'trust'


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    version: str
    message: str

    def __str__(self):
        return f"{self.version}: {self.message}"


# ---------------------------------------------------------------------------
# Output types
# ---------------------------------------------------------------------------

TypeKey = Tuple[Tuple[str, int], Tuple[Optional[TypeTerm], ...]]


class OutputTypes:
    """
    Regular types of the output arguments of a predicate under given input
    types.

    Clauses are typed left to right: head unifications destructure the
    input types, `is` binds numbers and calls take the output types of the
    callee under the types of their bound arguments. Results are joined
    across clauses and iterated over recursive calls until stable. An
    output that never gets a type is `any`.
    """

    def __init__(self, program: Program, grammar: TypeGrammar, iteration_cap: int = 50):
        self.program = program
        self.grammar = grammar
        self.iteration_cap = iteration_cap
        self.memo: Dict[TypeKey, Tuple[Optional[TypeTerm], ...]] = {}
        self.final: Set[TypeKey] = set()
        self._dirty = False
        self._visited: Set[TypeKey] = set()

    def outputs(self, indicator: Tuple[str, int],
                inputs: Sequence[Optional[TypeTerm]]) -> Tuple[Optional[TypeTerm], ...]:
        """Output type per argument position, None at input positions"""
        key = (indicator, tuple(inputs))
        if key not in self.final:
            for _ in range(self.iteration_cap):
                self._dirty = False
                self._visited = set()
                self._evaluate(key)
                if not self._dirty:
                    break
            for reached in self._visited:
                self.memo[reached] = tuple(
                    ANY_TYPE if t is None and reached[1][i] is None else t
                    for i, t in enumerate(self.memo[reached]))
                self.final.add(reached)
        return tuple(t if key[1][i] is None else None for i, t in enumerate(self.memo[key]))

    def _evaluate(self, key: TypeKey) -> Tuple[Optional[TypeTerm], ...]:
        if key in self._visited or key in self.final:
            return self.memo[key]
        self._visited.add(key)
        indicator, inputs = key
        current = self.memo.setdefault(key, (None,) * len(inputs))
        joined = list(current)
        for clause in self.program.clauses(indicator):
            found = self._clause_outputs(clause, inputs)
            joined = [join_types(a, b, self.grammar) for a, b in zip(joined, found)]
        joined = tuple(joined)
        if joined != current:
            self.memo[key] = joined
            self._dirty = True
        return joined

    def _clause_outputs(self, clause: Clause, inputs: Sequence[Optional[TypeTerm]]) -> List[Optional[TypeTerm]]:
        env: Dict[str, TypeTerm] = {}
        for arg, tt in zip(clause.head.args, inputs):
            if tt is not None and isinstance(arg, Variable):
                env[arg.name] = tt
        pending: List[Tuple[Term, Term]] = []
        for literal in clause.body:
            if not isinstance(literal, Compound):
                continue
            if literal.functor == '=' and len(literal.args) == 2:
                pending.append(literal.args)
            elif literal.functor == IS and len(literal.args) == 2:
                if isinstance(literal.args[0], Variable):
                    env.setdefault(literal.args[0].name, NUM_TYPE)
            elif not is_comparison(literal):
                self._call(literal, env)
            if not self._retry(pending, env):
                return [None] * len(inputs)
        return [type_of_term(arg, env, self.grammar) if tt is None else None
                for arg, tt in zip(clause.head.args, inputs)]

    def _retry(self, pending: List[Tuple[Term, Term]], env: Dict[str, TypeTerm]) -> bool:
        """Type pending unifications; False if one of them cannot succeed"""
        progress = True
        while progress and pending:
            progress = False
            for pair in list(pending):
                done = self._unify(pair[0], pair[1], env)
                if done is False:
                    return False
                if done:
                    pending.remove(pair)
                    progress = True
        return True

    def _typed(self, term: Term, env: Mapping[str, TypeTerm]) -> bool:
        return all(name in env for name in term_variables(term))

    def _unify(self, left: Term, right: Term, env: Dict[str, TypeTerm]) -> Optional[bool]:
        """Type the variables of one side from the other; None while neither side is typed"""
        if self._typed(left, env) and self._typed(right, env):
            return True
        if self._typed(right, env):
            left, right = right, left
        if not self._typed(left, env):
            return None
        return self._destructure(right, type_of_term(left, env, self.grammar), env)

    def _destructure(self, term: Term, tt: Optional[TypeTerm], env: Dict[str, TypeTerm]) -> bool:
        if isinstance(term, Variable):
            if tt is not None:
                env.setdefault(term.name, tt)
            return True
        if tt is None or isinstance(term, Integer):
            return True
        if tt == ANY_TYPE:
            for name in term_variables(term):
                env.setdefault(name, ANY_TYPE)
            return True
        alt = tt
        if isinstance(tt, SymbolType):
            if tt.name not in self.grammar.rules:
                return False
            alt = select_alternative(term, tt.name, self.grammar)
        if not (isinstance(alt, FunctorType) and alt.functor == term.functor and len(alt.args) == len(term.args)):
            return False
        return all(self._destructure(arg, arg_type, env) for arg, arg_type in zip(term.args, alt.args))

    def _call(self, literal: Compound, env: Dict[str, TypeTerm]):
        types: List[Optional[TypeTerm]] = []
        for arg in literal.args:
            types.append(type_of_term(arg, env, self.grammar) if self._typed(arg, env) else None)
        indicator = (literal.functor, len(literal.args))
        if not self.program.is_defined(indicator):
            found = [None if t is not None else ANY_TYPE for t in types]
        else:
            found = self._evaluate((indicator, tuple(types)))
        for arg, tt, out in zip(literal.args, types, found):
            if tt is None and isinstance(arg, Variable) and out is not None:
                env[arg.name] = out


# ---------------------------------------------------------------------------
# Memo table
# ---------------------------------------------------------------------------

def canonical_call_pattern(schemas: Sequence[Optional[SizedSchema]],
                           d: Sequence[DomainConstraint] = ()) -> Tuple[str, Tuple[Optional[SizedSchema], ...],
                                                                          Tuple[DomainConstraint, ...]]:
    """
    Rename a call pattern to the conventional bound-variable names.

    Returns the memo key with the renamed schemas and constraints.
    α-equivalent patterns share a key; different constraint sets do not.
    """
    mapping = conventional_names(schemas)
    renamed = tuple(rename_schema(s, mapping) if s is not None else None for s in schemas)
    constraints = tuple(DomainConstraint(substitute(c.subject, mapping), c.op, c.bound) for c in d)
    parts = [render_schema(s) if s is not None else '-' for s in renamed]
    key = "(" + ", ".join(parts) + ")"
    if constraints:
        key += " | " + ", ".join(sorted(str(c) for c in constraints))
    return key, renamed, constraints


@dataclass
class Version:
    name: str
    indicator: Tuple[str, int]
    pattern: CallPattern
    key: str
    entry: bool = False
    dependents: Set[str] = field(default_factory=set)
    status: str = 'computing'


class MemoTable:
    """(predicate, canonical call pattern) → version, plus who depends on whom"""

    def __init__(self):
        self.versions: Dict[str, Version] = {}
        self.keys: Dict[Tuple[Tuple[str, int], str], str] = {}
        self.counts: Dict[Tuple[str, int], int] = {}

    def lookup(self, indicator: Tuple[str, int], key: str) -> Optional[Version]:
        name = self.keys.get((indicator, key))
        return self.versions[name] if name is not None else None

    def register(self, indicator: Tuple[str, int], key: str, pattern: CallPattern) -> Version:
        count = self.counts.get(indicator, 0) + 1
        self.counts[indicator] = count
        name = f"{indicator[0]}/{indicator[1]}#{count}"
        version = Version(name, indicator, pattern, key)
        self.versions[name] = version
        self.keys[(indicator, key)] = name
        return version

    def add_dependent(self, callee: str, caller: str):
        self.versions[callee].dependents.add(caller)

    def __len__(self):
        return len(self.versions)

    def __iter__(self):
        return iter(self.versions.values())


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass
class AnalysisEntry:
    """Solved success of one version"""
    version: str
    indicator: Tuple[str, int]
    pattern: CallPattern
    element: AbstractElement
    forms: Dict[str, ClosedForm]
    nf: str
    det: str
    iterations: int
    system: EqSystem
    diagnostics: List[Diagnostic] = field(default_factory=list)
    entry: bool = False

    def form(self, quantity: str, side: str) -> ClosedForm:
        return self.forms[f"{self.version}.{quantity}_{side}"]

    def bounds(self, quantity: str) -> Tuple[ClosedForm, ClosedForm]:
        return self.form(quantity, LOWER), self.form(quantity, UPPER)


@dataclass
class AnalysisResult:
    entries: List[AnalysisEntry]
    resources: Tuple[ResourceDef, ...]
    grammar: TypeGrammar
    diagnostics: List[Diagnostic] = field(default_factory=list)

    def entry(self, version: str) -> AnalysisEntry:
        for entry in self.entries:
            if entry.version == version:
                return entry
        raise AnalysisError(f"no version named {version}")

    def versions_of(self, indicator: Tuple[str, int]) -> List[AnalysisEntry]:
        return [e for e in self.entries if e.indicator == indicator]

    def entry_points(self) -> List[AnalysisEntry]:
        return [e for e in self.entries if e.entry]

    @property
    def properties(self) -> Dict[str, Tuple[str, str]]:
        return {e.version: (e.nf, e.det) for e in self.entries}


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

class Analyzer:
    """One analysis run over a normalized program"""

    def __init__(self, program: Program, grammar: TypeGrammar, defs: Sequence[ResourceDef],
                 settings: Optional[AnalysisSettings] = None):
        self.program = program
        self.grammar = grammar
        self.defs = tuple(defs)
        self.settings = settings or AnalysisSettings()
        self.types = OutputTypes(program, grammar, self.settings.iteration_cap)
        self.memo = MemoTable()
        self.forms: Dict[str, ClosedForm] = {}
        self.properties: Dict[str, Tuple[str, str]] = {}
        self.entries: Dict[str, AnalysisEntry] = {}
        self.diagnostics: List[Diagnostic] = []
        self._index: Dict[str, int] = {}
        self._low: Dict[str, int] = {}
        self._stack: List[str] = []
        self._on_stack: Set[str] = set()
        self._walks: Dict[str, List[Tuple[int, ClauseWalk, ClauseTests]]] = {}
        self._calls: Dict[str, Set[str]] = {}

    # -- versions -----------------------------------------------------------

    def version_for(self, indicator: Tuple[str, int], inputs: Sequence[Optional[SizedSchema]],
                    d: Sequence[DomainConstraint] = ()) -> Version:
        types = tuple(type_of_schema(s, self.grammar) if s is not None else None for s in inputs)
        fresh = FreshNames()
        shapes = [schema_for_type(t, self.grammar, fresh) if t is not None else None for t in types]
        key, renamed, constraints = canonical_call_pattern(shapes, d)
        version = self.memo.lookup(indicator, key)
        if version is not None:
            return version
        if self.memo.counts.get(indicator, 0) >= self.settings.version_cap:
            raise AnalysisError(f"{indicator[0]}/{indicator[1]}: more than "
                                f"{self.settings.version_cap} call patterns")
        out_types = self.types.outputs(indicator, types)
        outputs = tuple(schema_for_type(t, self.grammar, FreshNames('o')) if s is None else None
                        for s, t in zip(renamed, out_types))
        pattern = CallPattern(indicator, renamed, outputs, constraints)
        return self.memo.register(indicator, key, pattern)

    def _trusted(self, names: Iterable[str]) -> Dict[str, List[str]]:
        trusted: Dict[str, List[str]] = {}
        for name in names:
            indicator = self.memo.versions[name].indicator
            for decl in self.program.trusts:
                if decl.indicator == indicator:
                    trusted.setdefault(name, []).append(decl.prop)
        return trusted

    def _property_of(self, version: str) -> Tuple[str, str]:
        return self.properties.get(version, (NOT_FAILS, IS_DET))

    # -- walking ------------------------------------------------------------

    def _resolver(self, caller: str):
        def resolve(literal: Compound, inputs: Sequence[Optional[SizedSchema]]):
            indicator = (literal.functor, len(literal.args))
            if not self.program.is_defined(indicator):
                self._diagnose(UNDEFINED_CALL, caller, f"call to undefined predicate "
                                                       f"{indicator[0]}/{indicator[1]}")
                success = bottom(self.defs)
                outputs = {str(i): OpaqueNode() for i, s in enumerate(inputs, start=1) if s is None}
                return UNDEFINED, None, AbstractElement(success.sol, success.resources, True, (), success.r,
                                                        FAILS, NON_DET, None, outputs, True)
            callee = self.version_for(indicator, inputs)
            self.memo.add_dependent(callee.name, caller)
            self._calls.setdefault(caller, set()).add(callee.name)
            if callee.name not in self._index:
                self._visit(callee.name)
                if caller in self._on_stack:
                    self._low[caller] = min(self._low[caller], self._low[callee.name])
            elif callee.name in self._on_stack and caller in self._on_stack:
                self._low[caller] = min(self._low[caller], self._index[callee.name])
            nf, det = self._property_of(callee.name)
            return CALL, callee.name, call_success(callee.name, callee.pattern, inputs, self.defs, nf, det,
                                                   self.forms)
        return resolve

    def _walk(self, name: str) -> List[Tuple[int, ClauseWalk, ClauseTests]]:
        version = self.memo.versions[name]
        resolver = self._resolver(name)
        walks = []
        for index, clause in enumerate(self.program.clauses(version.indicator)):
            try:
                walk = walk_clause(clause, version.pattern, self.grammar, self.defs, resolver, name)
            except (DomainError, SizedTypeError, RecurrenceError) as exc:
                raise AnalysisError(f"line {clause.line}: {version.indicator[0]}/{version.indicator[1]}: "
                                    f"{exc}") from exc
            if walk.prime is None:
                continue
            walks.append((index, walk, clause_tests(clause, index, version.pattern.inputs)))
        return walks

    # -- strongly connected groups --------------------------------------------

    def _visit(self, name: str):
        self._index[name] = self._low[name] = len(self._index)
        self._stack.append(name)
        self._on_stack.add(name)
        self._walks[name] = self._walk(name)
        if self._low[name] != self._index[name]:
            return
        members: List[str] = []
        while True:
            member = self._stack.pop()
            self._on_stack.discard(member)
            members.append(member)
            if member == name:
                break
        self._stabilize(sorted(members, key=self._index.get))

    def _stabilize(self, members: List[str]):
        recursive = len(members) > 1 or members[0] in self._calls.get(members[0], ())
        trusted = self._trusted(members)
        for name, props in trusted.items():
            self._diagnose(TRUST, name, f"trusted {', '.join(props)}")
        previous: Dict[str, AbstractElement] = {}
        widened: Dict[str, Tuple[AbstractElement, EqSystem]] = {}
        converged = False
        iteration = 0
        for iteration in range(1, self.settings.iteration_cap + 1):
            infos = {m: [ClauseInfo(tests, walk.literals) for _, walk, tests in self._walks[m]]
                     for m in members}
            result = solve_properties(infos, self._property_of, trusted, self.settings.iteration_cap)
            self.properties.update(result.properties)
            if recursive:
                for m in members:
                    self._walks[m] = self._walk(m)
            for m in members:
                version = self.memo.versions[m]
                nf, det = self.properties[m]
                primes = [None] * len(self.program.clauses(version.indicator))
                for index, walk, _ in self._walks[m]:
                    primes[index] = walk.prime
                tests = [tests for _, _, tests in self._walks[m]]
                widened[m] = widen(primes, tests, version.pattern, self.defs, nf, det, m)
            current = {m: widened[m][0] for m in members}
            if not recursive or (previous and all(leq(previous[m], current[m]) and leq(current[m], previous[m])
                                                  for m in members)):
                converged = True
                break
            previous = current

        functions = [fn for m in members for fn in widened[m][1].functions]
        if converged:
            solver = Solver(functions, self.forms, self.settings.solver)
            forms = solver.solve_all()
            notes = solver.notes
        else:
            forms = {fn.name: fallback_form(fn) for fn in functions}
            notes = {}
            for m in members:
                self._diagnose(ITERATION_CAP, m, f"no stable element after {iteration} iterations")
        self.forms.update(forms)

        for m in members:
            version = self.memo.versions[m]
            version.status = 'stable'
            element, system = widened[m]
            own = {fn.name: forms[fn.name] for fn in system.functions}
            for fn_name, form in own.items():
                if fn_name in notes:
                    self._diagnose(FALLBACK, m, f"{fn_name}: {notes[fn_name]}")
                elif form.imprecise and converged:
                    self._diagnose(FALLBACK, m, f"{fn_name}: no closed form")
            nf, det = self.properties[m]
            self.entries[m] = AnalysisEntry(m, version.indicator, version.pattern, element, own, nf, det,
                                            iteration, system,
                                            [d for d in self.diagnostics if d.version == m], version.entry)

    def _diagnose(self, kind: str, version: str, message: str):
        diagnostic = Diagnostic(kind, version, message)
        if diagnostic not in self.diagnostics:
            self.diagnostics.append(diagnostic)

    # -- entry points -------------------------------------------------------

    def analyze_entry(self, decl: EntryDecl) -> AnalysisEntry:
        if not self.program.is_defined(decl.indicator):
            raise AnalysisError(f"line {decl.line}: entry for undefined predicate "
                                f"{decl.name}/{len(decl.argspecs)}")
        try:
            types = [entry_type(spec, self.grammar) for spec in decl.argspecs]
        except TypeGrammarError as exc:
            raise AnalysisError(f"line {decl.line}: {exc}") from exc
        fresh = FreshNames()
        schemas = [schema_for_type(t, self.grammar, fresh) if t is not None else None for t in types]
        version = self.version_for(decl.indicator, schemas)
        version.entry = True
        if version.name not in self._index:
            self._visit(version.name)
        entry = self.entries[version.name]
        entry.entry = True
        return entry

    def result(self) -> AnalysisResult:
        ordered = sorted(self.entries.values(), key=lambda e: self._index[e.version])
        for entry in ordered:
            entry.diagnostics = [d for d in self.diagnostics if d.version == entry.version]
        return AnalysisResult(ordered, self.defs, self.grammar, list(self.diagnostics))


def analyze(program: Program, entries: Optional[Sequence[EntryDecl]] = None,
            resources: Optional[Sequence[ResourceDef]] = None,
            settings: Optional[AnalysisSettings] = None) -> AnalysisResult:
    """
    Analyse a program from its entry declarations.

    Args:
        program: Parsed program; it is normalized here
        entries: Entry declarations, the program's own when omitted
        resources: Resource definitions, the program's declarations (or
            steps) when omitted
        settings: Iteration caps and solver settings

    Raises:
        AnalysisError: On grammar, entry, mode or schema errors
    """
    grammar = grammar_from_program(program)
    check = well_formed(grammar)
    if not check.ok:
        raise AnalysisError("; ".join(check.errors))
    try:
        defs = tuple(resources) if resources is not None else resources_of(program.resources)
    except DomainError as exc:
        raise AnalysisError(str(exc)) from exc
    entries = list(entries if entries is not None else program.entries)
    if not entries:
        raise AnalysisError("program has no entry declarations")
    analyzer = Analyzer(normalize_program(program), grammar, defs, settings)
    for decl in entries:
        analyzer.analyze_entry(decl)
    return analyzer.result()


def _shape_name(shape: Optional[SizedSchema]) -> str:
    if shape is None or isinstance(shape, OpaqueNode):
        return "out"
    return "out:" + ("num" if isinstance(shape, NumNode) else shape.symbol)


def describe_pattern(pattern: CallPattern) -> str:
    """Call pattern in `τ^(l,u)(...)` notation, `out:τ` at output positions"""
    parts = [render_schema(schema) if schema is not None else _shape_name(shape)
             for schema, shape in zip(pattern.inputs, pattern.outputs)]
    text = f"{pattern.indicator[0]}(" + ", ".join(parts) + ")"
    if pattern.d:
        text += " | " + ", ".join(str(c) for c in pattern.d)
    return text
