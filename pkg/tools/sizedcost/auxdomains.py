"""
Non-failure, determinacy and clause exclusivity for sizedcost

Each clause of a predicate version is summarized by the tests its guard
prefix performs on the input arguments: the constructor at an access path,
an integer interval at a path, or the outcome of comparing two operands.
Two clauses are exclusive when some test of one contradicts a test of the
other; a set of clauses covers the inputs when splitting the input space on
those tests leaves no region without a clause.

Tests that the sized-type guards already express (constructors along a
list spine, intervals on numeric arguments) are marked as captured. The
lower-bound rules only need coverage on the remaining tests.
"""

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from . import SizedCostError
from .frontend import Clause, Compound, Integer, Term, Variable, is_comparison
from .sizedtypes import NumNode, OpaqueNode, PlainNode, RecNode, SizedSchema, child_schema
from .symexpr import INF, Const, Number

NOT_FAILS = 'not_fails'
FAILS = 'fails'
IS_DET = 'is_det'
NON_DET = 'non_det'

# literal kinds after the guard prefix
CALL = 'call'
SAFE = 'safe'
TEST = 'test'
UNDEFINED = 'undefined'

OUTCOMES = frozenset({'lt', 'eq', 'gt'})
_OUTCOME_OF = {
    '<': frozenset({'lt'}), '=<': frozenset({'lt', 'eq'}), '>': frozenset({'gt'}),
    '>=': frozenset({'gt', 'eq'}), '=:=': frozenset({'eq'}), '=\\=': frozenset({'lt', 'gt'}),
}
_FLIP = {'lt': 'gt', 'gt': 'lt', 'eq': 'eq'}
_MIRROR = {'<': '>', '>': '<', '=<': '>=', '>=': '=<', '=:=': '=:=', '=\\=': '=\\='}

MAX_COVERING_CLAUSES = 10


class AuxDomainError(SizedCostError):
    """Property analysis failure"""
    pass


Path = Tuple
Key = Tuple[str, object]
Interval = Tuple[Number, Number]


@dataclass
class ClauseTests:
    """Guard-prefix tests of one clause on the input access paths"""
    index: int
    tests: Dict[Key, object] = field(default_factory=dict)
    captured: Set[Key] = field(default_factory=set)
    unknown: bool = False
    nodes: Dict[Path, SizedSchema] = field(default_factory=dict)

    def uncaptured(self) -> Dict[Key, object]:
        return {k: v for k, v in self.tests.items() if k not in self.captured}

    @property
    def certain(self) -> bool:
        """Applies whenever its sized-type guards hold"""
        return not self.unknown and not self.uncaptured()


@dataclass
class ClauseInfo:
    """Tests plus the kinds of the literals after the guard prefix"""
    tests: ClauseTests
    literals: Tuple[Tuple[str, Optional[str]], ...] = ()


# ---------------------------------------------------------------------------
# Extracting tests
# ---------------------------------------------------------------------------

def _path_text(path: Path) -> str:
    return f"@{path[0]}" + "".join(f".{f}{j}" for f, j, _ in path[1:])


def _child(node: SizedSchema, position: Tuple[str, int]) -> Optional[SizedSchema]:
    if isinstance(node, RecNode) and position in node.self_positions:
        return node
    return child_schema(node, position)


def _domain_interval(node: SizedSchema) -> Interval:
    if isinstance(node, NumNode) and isinstance(node.lower, Const) and isinstance(node.upper, Const):
        return (node.lower.value, node.upper.value)
    return (0, INF)


def _captured(path: Path, node: SizedSchema, kind: str) -> bool:
    """Tests the sized-type guards express exactly"""
    if kind == 'c':
        return isinstance(node, RecNode) and _on_spine(path)
    if kind == 'n':
        return len(path) == 1 and isinstance(node, NumNode) and not isinstance(node.lower, Const)
    return False


def _on_spine(path: Path) -> bool:
    # steps are (functor, index, is_self_position)
    return all(step[2] for step in path[1:])


class _TestBuilder:
    def __init__(self, index: int):
        self.result = ClauseTests(index)
        self.paths: Dict[str, Path] = {}

    def bind_argument(self, name: str, position: int, node: SizedSchema):
        path = (position,)
        self.paths[name] = path
        self.result.nodes[path] = node

    def add(self, key: Key, value, node: SizedSchema, path: Path):
        tests = self.result.tests
        kind = key[0]
        if kind == 'c':
            if key in tests and tests[key] != value:
                self.result.unknown = True
            tests[key] = value
        elif kind == 'n':
            lo, hi = tests.get(key, _domain_interval(node))
            tests[key] = (max(lo, value[0]), min(hi, value[1]))
        else:
            tests[key] = tests.get(key, OUTCOMES) & value
        if path is not None and _captured(path, node, kind):
            self.result.captured.add(key)

    def match(self, path: Path, node: Optional[SizedSchema], pattern: Term):
        if node is None or isinstance(node, OpaqueNode):
            self.result.unknown = True
            return
        if isinstance(pattern, Variable):
            if pattern.name in self.paths:
                # repeated variable: equality test between two paths
                self.result.unknown = True
            else:
                self.paths[pattern.name] = path
                self.result.nodes[path] = node
            return
        if isinstance(pattern, Integer):
            self.add(('n', path), (pattern.value, pattern.value), node, path)
            return
        self.add(('c', path), (pattern.functor, len(pattern.args)), node, path)
        for j, arg in enumerate(pattern.args, start=1):
            position = (pattern.functor, j)
            spine = isinstance(node, RecNode) and position in node.self_positions
            step = (pattern.functor, j, spine)
            self.match(path + (step,), _child(node, position), arg)

    def operand(self, term: Term) -> Optional[str]:
        if isinstance(term, Integer):
            return str(term.value)
        if isinstance(term, Variable):
            path = self.paths.get(term.name)
            return _path_text(path) if path is not None else None
        if isinstance(term, Compound) and len(term.args) == 2:
            left, right = self.operand(term.args[0]), self.operand(term.args[1])
            if left is None or right is None:
                return None
            return f"({left}{term.functor}{right})"
        return None

    def compare(self, literal: Compound):
        op = literal.functor
        left, right = literal.args
        if isinstance(left, Integer) and isinstance(right, Variable):
            left, right, op = right, left, _MIRROR[op]
        if isinstance(left, Variable) and isinstance(right, Integer) and left.name in self.paths:
            path = self.paths[left.name]
            node = self.result.nodes.get(path)
            k = right.value
            interval = {'<': (-INF, k - 1), '=<': (-INF, k), '>': (k + 1, INF),
                        '>=': (k, INF), '=:=': (k, k)}.get(op)
            if interval is not None and isinstance(node, NumNode):
                self.add(('n', path), interval, node, path)
                return
        a, b = self.operand(left), self.operand(right)
        if a is None or b is None:
            self.result.unknown = True
            return
        outcomes = _OUTCOME_OF[op]
        if b < a:
            a, b = b, a
            outcomes = frozenset(_FLIP[o] for o in outcomes)
        self.add(('k', (a, b)), outcomes, None, None)


def clause_tests(clause: Clause, index: int, inputs: Sequence[Optional[SizedSchema]]) -> ClauseTests:
    """
    Tests performed by a normalized clause's guard prefix.

    Args:
        clause: Normalized clause (head arguments are distinct variables)
        index: Clause index within its predicate
        inputs: Input schema per argument, None for output arguments
    """
    builder = _TestBuilder(index)
    for position, (arg, node) in enumerate(zip(clause.head.args, inputs), start=1):
        if node is not None and isinstance(arg, Variable):
            builder.bind_argument(arg.name, position, node)
    for literal in clause.body[:clause.guard_prefix_length()]:
        if is_comparison(literal):
            builder.compare(literal)
            continue
        left, right = literal.args
        if isinstance(right, Variable) and right.name in builder.paths and not (
                isinstance(left, Variable) and left.name in builder.paths):
            left, right = right, left
        if isinstance(left, Variable) and left.name in builder.paths:
            path = builder.paths[left.name]
            builder.match(path, builder.result.nodes.get(path), right)
        # anything else binds an output and always succeeds
    return builder.result


# ---------------------------------------------------------------------------
# Exclusivity and coverage
# ---------------------------------------------------------------------------

def _disjoint(key: Key, a, b) -> bool:
    kind = key[0]
    if kind == 'c':
        return a != b
    if kind == 'n':
        return a[1] < b[0] or b[1] < a[0]
    return not (a & b)


def exclusive(a: ClauseTests, b: ClauseTests) -> bool:
    """Some test of one clause contradicts a test of the other"""
    return any(key in b.tests and _disjoint(key, value, b.tests[key]) for key, value in a.tests.items())


def exclusive_pairs(clauses: Sequence[ClauseTests]) -> FrozenSet[FrozenSet[int]]:
    return frozenset(frozenset((a.index, b.index))
                     for a, b in itertools.combinations(clauses, 2) if exclusive(a, b))


def clauses_mutually_exclusive(clauses: Sequence[ClauseTests]) -> bool:
    return all(exclusive(a, b) for a, b in itertools.combinations(clauses, 2))


def _key_order(key: Key):
    kind, detail = key
    if kind == 'c':
        return (0, len(detail), str(detail))
    if kind == 'n':
        return (1, len(detail), str(detail))
    return (2, 0, str(detail))


def _domain(key: Key, nodes: Mapping[Path, SizedSchema]):
    kind, detail = key
    if kind == 'c':
        node = nodes.get(detail)
        return list(node.constructors) if isinstance(node, (RecNode, PlainNode)) else None
    if kind == 'n':
        return _domain_interval(nodes.get(detail))
    return sorted(OUTCOMES)


def _number_atoms(domain: Interval, intervals: Iterable[Interval]) -> List[Interval]:
    lo, hi = domain
    cuts = {lo}
    for a, b in intervals:
        if lo < a <= hi:
            cuts.add(a)
        if b != INF and lo < b + 1 <= hi:
            cuts.add(b + 1)
    ordered = sorted(cuts)
    return [(start, ordered[i + 1] - 1 if i + 1 < len(ordered) else hi)
            for i, start in enumerate(ordered)]


def _admits(key: Key, test, atom) -> bool:
    kind = key[0]
    if kind == 'c':
        return test == atom
    if kind == 'n':
        return test[0] <= atom[0] and atom[1] <= test[1]
    return atom in test


def _covers(clauses: List[Dict[Key, object]], nodes: Mapping[Path, SizedSchema]) -> bool:
    if any(not tests for tests in clauses):
        return True
    if not clauses:
        return False
    key = min({k for tests in clauses for k in tests}, key=_key_order)
    domain = _domain(key, nodes)
    if domain is None:
        return False
    if key[0] == 'n':
        atoms = _number_atoms(domain, [t[key] for t in clauses if key in t])
    else:
        atoms = domain
    for atom in atoms:
        rest = [{k: v for k, v in tests.items() if k != key}
                for tests in clauses if key not in tests or _admits(key, tests[key], atom)]
        if not _covers(rest, nodes):
            return False
    return True


def covers(clauses: Sequence[ClauseTests], captured: bool = True) -> bool:
    """
    True if the clauses jointly accept every input of the version.

    With captured=False, tests the sized-type guards express are ignored:
    the question is whether the clauses cover every input on which their
    guards hold.
    """
    usable = [c for c in clauses if not c.unknown]
    nodes: Dict[Path, SizedSchema] = {}
    for clause in usable:
        nodes.update(clause.nodes)
    return _covers([dict(c.tests) if captured else c.uncaptured() for c in usable], nodes)


def covering_sets(clauses: Sequence[ClauseTests]) -> FrozenSet[FrozenSet[int]]:
    """Non-empty clause subsets whose uncaptured tests cover"""
    found: Set[FrozenSet[int]] = set()
    if len(clauses) > MAX_COVERING_CLAUSES:
        if covers(clauses, captured=False):
            found.add(frozenset(c.index for c in clauses))
        return frozenset(found)
    for size in range(1, len(clauses) + 1):
        for subset in itertools.combinations(clauses, size):
            indices = frozenset(c.index for c in subset)
            if any(smaller <= indices for smaller in found) or covers(subset, captured=False):
                found.add(indices)
    return frozenset(found)


def certain_clauses(clauses: Sequence[ClauseTests]) -> FrozenSet[int]:
    return frozenset(c.index for c in clauses if c.certain)


# ---------------------------------------------------------------------------
# Non-failure and determinacy
# ---------------------------------------------------------------------------

Properties = Tuple[str, str]
Lookup = Callable[[str], Properties]


def _literal_nf(kind: str, version: Optional[str], lookup: Lookup) -> bool:
    if kind == SAFE:
        return True
    if kind == CALL and version is not None:
        return lookup(version)[0] == NOT_FAILS
    return False


def _literal_det(kind: str, version: Optional[str], lookup: Lookup) -> bool:
    if kind == CALL and version is not None:
        return lookup(version)[1] == IS_DET
    return kind != UNDEFINED


def nonfailure(clauses: Sequence[ClauseInfo], lookup: Lookup) -> str:
    """
    not_fails if the clauses whose body cannot fail after the guard prefix
    cover the version's inputs.
    """
    safe = [c.tests for c in clauses
            if all(_literal_nf(kind, version, lookup) for kind, version in c.literals)]
    return NOT_FAILS if safe and covers(safe) else FAILS


def determinacy(clauses: Sequence[ClauseInfo], lookup: Lookup) -> str:
    """is_det if the clauses are pairwise exclusive and every body literal is det"""
    if not clauses_mutually_exclusive([c.tests for c in clauses]):
        return NON_DET
    for clause in clauses:
        if not all(_literal_det(kind, version, lookup) for kind, version in clause.literals):
            return NON_DET
    return IS_DET


def apply_trust(properties: Properties, trusted: Iterable[str]) -> Properties:
    nf, det = properties
    for prop in trusted:
        if prop in (NOT_FAILS, FAILS):
            nf = prop
        elif prop in (IS_DET, NON_DET):
            det = prop
    return nf, det


@dataclass
class PropertyResult:
    properties: Dict[str, Properties]
    iterations: int
    converged: bool


def solve_properties(members: Mapping[str, Sequence[ClauseInfo]], external: Lookup,
                     trusted: Optional[Mapping[str, Iterable[str]]] = None,
                     iteration_cap: int = 50) -> PropertyResult:
    """
    Optimistic fixpoint of non-failure and determinacy over a recursive
    group of versions.

    Members start at (not_fails, is_det) and are re-checked until nothing
    changes. Without convergence within the cap they degrade to
    (fails, non_det).
    """
    trusted = trusted or {}
    current: Dict[str, Properties] = {
        name: apply_trust((NOT_FAILS, IS_DET), trusted.get(name, ())) for name in members}

    def lookup(version: str) -> Properties:
        return current[version] if version in current else external(version)

    for iteration in range(1, iteration_cap + 1):
        updated = {name: apply_trust((nonfailure(clauses, lookup), determinacy(clauses, lookup)),
                                     trusted.get(name, ()))
                   for name, clauses in members.items()}
        if updated == current:
            return PropertyResult(current, iteration, True)
        current = updated
    return PropertyResult({name: apply_trust((FAILS, NON_DET), trusted.get(name, ())) for name in members},
                          iteration_cap, False)
