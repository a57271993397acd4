"""
Regular term grammars for sizedcost

A grammar maps type symbols to alternatives (type terms). Built from
`:- regtype` directives, with `num` as the only base type and `list(T)`
expanded to a generated rule unless an equivalent rule is already declared.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

import networkx as nx

from . import SizedCostError
from .frontend import Compound, Integer, Program, Term, Variable, is_ground


class TypeGrammarError(SizedCostError):
    """Ill-formed grammar, undefined symbol or bad membership query"""
    pass


NUM = 'num'


@dataclass(frozen=True)
class BaseType:
    name: str = NUM


@dataclass(frozen=True)
class SymbolType:
    name: str


@dataclass(frozen=True)
class FunctorType:
    functor: str
    args: Tuple['TypeTerm', ...] = ()


TypeTerm = Union[BaseType, SymbolType, FunctorType]

NUM_TYPE = BaseType(NUM)
NIL_TYPE = FunctorType('[]')


def render_type(tt: TypeTerm) -> str:
    if isinstance(tt, BaseType):
        return tt.name
    if isinstance(tt, SymbolType):
        return tt.name
    if tt.functor == '.' and len(tt.args) == 2:
        return f"[{render_type(tt.args[0])}|{render_type(tt.args[1])}]"
    if not tt.args:
        return tt.functor
    return f"{tt.functor}(" + ",".join(render_type(a) for a in tt.args) + ")"


def alternative_key(alt: TypeTerm) -> Tuple[str, int]:
    """Top functor of an alternative, used for the determinism check"""
    if isinstance(alt, BaseType):
        return ('#' + alt.name, 0)
    if isinstance(alt, SymbolType):
        return ('@' + alt.name, 0)
    return (alt.functor, len(alt.args))


@dataclass
class WellFormedness:
    """Result of a grammar check"""
    ok: bool
    errors: List[str] = field(default_factory=list)

    def __bool__(self):
        return self.ok


class TypeGrammar:
    """
    Regular term grammar: type symbol -> alternatives.

    Rules are added while the grammar is built from declarations; generated
    `list(T)` rules are added on demand by list_symbol_for.
    """

    def __init__(self, rules: Optional[Dict[str, Tuple[TypeTerm, ...]]] = None):
        self.rules: Dict[str, Tuple[TypeTerm, ...]] = dict(rules or {})
        self.lines: Dict[str, int] = {}

    def add_rule(self, symbol: str, alternatives: Iterable[TypeTerm], line: int = 0):
        if symbol == NUM or symbol in self.rules:
            raise TypeGrammarError(f"type symbol {symbol} defined twice")
        self.rules[symbol] = tuple(alternatives)
        self.lines[symbol] = line

    def is_defined(self, symbol: str) -> bool:
        return symbol == NUM or symbol in self.rules

    def alternatives(self, symbol: str) -> Tuple[TypeTerm, ...]:
        if symbol not in self.rules:
            raise TypeGrammarError(f"undefined type symbol: {symbol}")
        return self.rules[symbol]

    def symbols(self) -> List[str]:
        return list(self.rules)

    def referenced(self, tt: TypeTerm) -> Set[str]:
        if isinstance(tt, SymbolType):
            return {tt.name}
        if isinstance(tt, FunctorType):
            found: Set[str] = set()
            for arg in tt.args:
                found |= self.referenced(arg)
            return found
        return set()

    def is_recursive(self, symbol: str) -> bool:
        if symbol not in self.rules:
            return False
        return any(symbol in self.referenced(alt) for alt in self.rules[symbol])

    def dependency_graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        for symbol, alts in self.rules.items():
            graph.add_node(symbol)
            for alt in alts:
                for ref in self.referenced(alt):
                    graph.add_edge(symbol, ref)
        return graph

    def list_symbol_for(self, elem: TypeTerm, create: bool = True) -> Optional[str]:
        """
        Symbol of the list type `[] | [elem|self]`.

        Reuses a declared rule of exactly that shape, otherwise generates
        `list(elem)` when create is set.
        """
        for symbol, alts in self.rules.items():
            if _is_list_rule(symbol, alts, elem):
                return symbol
        if not create:
            return None
        name = f"list({render_type(elem)})"
        self.rules[name] = (NIL_TYPE, FunctorType('.', (elem, SymbolType(name))))
        self.lines[name] = 0
        return name

    def list_element(self, symbol: str) -> Optional[TypeTerm]:
        """Element type if symbol is a list type, else None"""
        alts = self.rules.get(symbol)
        if not alts or len(alts) != 2:
            return None
        for alt in alts:
            if isinstance(alt, FunctorType) and alt.functor == '.' and len(alt.args) == 2:
                if _is_list_rule(symbol, alts, alt.args[0]):
                    return alt.args[0]
        return None

    def symbol_for_constructor(self, functor: str, arity: int) -> List[str]:
        """Symbols with an alternative headed by functor/arity"""
        return [s for s, alts in self.rules.items()
                if any(alternative_key(a) == (functor, arity) for a in alts)]


def _is_list_rule(symbol: str, alts: Tuple[TypeTerm, ...], elem: TypeTerm) -> bool:
    if len(alts) != 2:
        return False
    cons = FunctorType('.', (elem, SymbolType(symbol)))
    return set(alts) == {NIL_TYPE, cons}


# ---------------------------------------------------------------------------
# Building from declarations
# ---------------------------------------------------------------------------

def type_term_from(term: Term, grammar: TypeGrammar, declared: Set[str],
                   top_level: bool = False) -> TypeTerm:
    """
    Convert a declaration term to a type term.

    Atoms in argument positions are type references; a top-level atom that
    is not a declared symbol is a constant constructor.
    """
    if isinstance(term, Variable) or isinstance(term, Integer):
        raise TypeGrammarError(f"not a type term: {term}")
    if term.functor == '[]' and not term.args:
        return NIL_TYPE
    if term.functor == NUM and not term.args:
        return NUM_TYPE
    if term.functor == 'list' and len(term.args) == 1:
        elem = type_term_from(term.args[0], grammar, declared)
        return SymbolType(grammar.list_symbol_for(elem))
    if not term.args:
        if top_level:
            if term.functor in declared:
                raise TypeGrammarError(
                    f"alternative {term.functor} is a type symbol; aliases are not supported")
            return FunctorType(term.functor)
        return SymbolType(term.functor)
    return FunctorType(term.functor, tuple(type_term_from(a, grammar, declared) for a in term.args))


def grammar_from_program(program: Program) -> TypeGrammar:
    """
    Build the grammar of a program's `:- regtype` declarations.

    Raises:
        TypeGrammarError: On duplicate symbols or malformed type terms
    """
    grammar = TypeGrammar()
    declared = {decl.name for decl in program.types}
    for decl in program.types:
        alts = tuple(type_term_from(a, grammar, declared, top_level=True) for a in decl.alternatives)
        if decl.name in grammar.rules:
            raise TypeGrammarError(f"line {decl.line}: type symbol {decl.name} defined twice")
        grammar.rules[decl.name] = alts
        grammar.lines[decl.name] = decl.line
    return grammar


def entry_type(term: Term, grammar: TypeGrammar) -> Optional[TypeTerm]:
    """Type of an entry argument spec; None for `out`"""
    if isinstance(term, Compound) and term.functor == 'out' and not term.args:
        return None
    declared = set(grammar.rules)
    return type_term_from(term, grammar, declared)


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

def well_formed(grammar: TypeGrammar) -> WellFormedness:
    """
    Check referenced symbols, determinism, productivity and the absence of
    mutual recursion between type symbols.
    """
    errors: List[str] = []

    for symbol, alts in grammar.rules.items():
        for alt in alts:
            for ref in grammar.referenced(alt):
                if not grammar.is_defined(ref):
                    errors.append(f"{symbol}: undefined type symbol {ref} in {render_type(alt)}")
        keys = [alternative_key(a) for a in alts]
        duplicates = sorted({f"{k[0]}/{k[1]}" for k in keys if keys.count(k) > 1})
        for dup in duplicates:
            errors.append(f"{symbol}: alternatives share the top functor {dup} (nondeterministic)")

    productive: Set[str] = set()
    changed = True
    while changed:
        changed = False
        for symbol, alts in grammar.rules.items():
            if symbol not in productive and any(_productive(a, productive) for a in alts):
                productive.add(symbol)
                changed = True
    for symbol in grammar.rules:
        if symbol not in productive:
            errors.append(f"{symbol}: generates no finite term")

    graph = grammar.dependency_graph()
    for component in nx.strongly_connected_components(graph):
        if len(component) > 1:
            names = ", ".join(sorted(component))
            errors.append(f"mutually recursive type symbols are not supported: {names}")

    return WellFormedness(ok=not errors, errors=errors)


def _productive(tt: TypeTerm, productive: Set[str]) -> bool:
    if isinstance(tt, BaseType):
        return True
    if isinstance(tt, SymbolType):
        return tt.name == NUM or tt.name in productive
    return all(_productive(a, productive) for a in tt.args)


def membership(term: Term, tt: Union[str, TypeTerm], grammar: TypeGrammar) -> bool:
    """
    True iff the ground term is generated by the type.

    Raises:
        TypeGrammarError: If the term is not ground or the symbol is undefined
    """
    if not is_ground(term):
        raise TypeGrammarError("membership is only defined for ground terms")
    if isinstance(tt, str):
        tt = NUM_TYPE if tt == NUM else SymbolType(tt)
    return _member(term, tt, grammar)


def _member(term: Term, tt: TypeTerm, grammar: TypeGrammar) -> bool:
    while True:
        if isinstance(tt, BaseType) or (isinstance(tt, SymbolType) and tt.name == NUM):
            # num holds the naturals
            return isinstance(term, Integer) and term.value >= 0
        if isinstance(tt, SymbolType):
            alt = select_alternative(term, tt.name, grammar)
            if alt is None:
                return False
            tt = alt
            continue
        if not isinstance(term, Compound) or term.functor != tt.functor or len(term.args) != len(tt.args):
            return False
        if not tt.args:
            return True
        # the last argument is walked iteratively so long lists stay flat
        for arg, arg_type in zip(term.args[:-1], tt.args[:-1]):
            if not _member(arg, arg_type, grammar):
                return False
        term, tt = term.args[-1], tt.args[-1]


def select_alternative(term: Term, symbol: str, grammar: TypeGrammar) -> Optional[TypeTerm]:
    """The alternative of a deterministic rule matching the term's top functor"""
    for alt in grammar.alternatives(symbol):
        if isinstance(alt, BaseType):
            if isinstance(term, Integer):
                return alt
        elif isinstance(alt, FunctorType):
            if isinstance(term, Compound) and term.functor == alt.functor and len(term.args) == len(alt.args):
                return alt
    return None


# ---------------------------------------------------------------------------
# Typing terms
# ---------------------------------------------------------------------------

ANY = 'any'
ANY_TYPE = SymbolType(ANY)
_NOT_A_LIST = object()


def _list_element_of(tt: TypeTerm, grammar: TypeGrammar):
    if tt == NIL_TYPE:
        return None
    if isinstance(tt, SymbolType) and tt.name in grammar.rules:
        elem = grammar.list_element(tt.name)
        if elem is not None:
            return elem
    return _NOT_A_LIST


def join_types(a: Optional[TypeTerm], b: Optional[TypeTerm], grammar: TypeGrammar) -> Optional[TypeTerm]:
    """
    Least upper bound in the order unknown (None) < type < any.

    `[]` joins with every list type; lists join elementwise.
    """
    if a is None:
        return b
    if b is None or a == b:
        return a
    if ANY_TYPE in (a, b):
        return ANY_TYPE
    ea, eb = _list_element_of(a, grammar), _list_element_of(b, grammar)
    if ea is not _NOT_A_LIST and eb is not _NOT_A_LIST:
        elem = join_types(ea, eb, grammar)
        if elem is None:
            return NIL_TYPE
        if elem == ANY_TYPE:
            return ANY_TYPE
        return SymbolType(grammar.list_symbol_for(elem))
    if isinstance(a, FunctorType) and isinstance(b, FunctorType) and \
            a.functor == b.functor and len(a.args) == len(b.args):
        args = tuple(join_types(x, y, grammar) for x, y in zip(a.args, b.args))
        if any(x is None or x == ANY_TYPE for x in args):
            return ANY_TYPE
        return FunctorType(a.functor, args)
    return ANY_TYPE


def type_of_term(term: Term, env: Mapping[str, TypeTerm], grammar: TypeGrammar) -> Optional[TypeTerm]:
    """
    Type of a possibly non-ground term given the types of its variables.

    Returns None while some variable is still untyped. A constructor that
    belongs to several symbols gives `any`; one that belongs to none gives
    an anonymous functor type.
    """
    if isinstance(term, Variable):
        return env.get(term.name)
    if isinstance(term, Integer):
        return NUM_TYPE
    if term.functor == '[]' and not term.args:
        return NIL_TYPE
    if term.functor == '.' and len(term.args) == 2:
        head = type_of_term(term.args[0], env, grammar)
        tail = type_of_term(term.args[1], env, grammar)
        if head is None or tail is None:
            return None
        if head == ANY_TYPE:
            return ANY_TYPE
        return join_types(SymbolType(grammar.list_symbol_for(head)), tail, grammar)
    candidates = grammar.symbol_for_constructor(term.functor, len(term.args))
    if len(candidates) == 1:
        return SymbolType(candidates[0])
    if candidates:
        return ANY_TYPE
    args = [type_of_term(a, env, grammar) for a in term.args]
    if any(a is None for a in args):
        return None
    return FunctorType(term.functor, tuple(args))


def sized_schema(symbol: Union[str, TypeTerm], grammar: TypeGrammar, fresh=None):
    """
    Sized type schema of a symbol with fresh bound variables.

    Raises:
        TypeGrammarError: If the symbol is undefined
    """
    from .sizedtypes import FreshNames, build_schema

    tt = symbol
    if isinstance(symbol, str):
        if not grammar.is_defined(symbol):
            raise TypeGrammarError(f"undefined type symbol: {symbol}")
        tt = NUM_TYPE if symbol == NUM else SymbolType(symbol)
    return build_schema(tt, grammar, fresh or FreshNames())
