"""
Frontend for sizedcost programs

Parses Edinburgh-style definite clause programs with directives
(`:- regtype`, `:- entry`, `:- resource`, `:- trust`) into an AST, prints
ASTs back to source text, and normalizes clauses so head arguments are
distinct variables with the original head bindings as leading `=` literals.

Supported builtins: `=`, `is` and the arithmetic comparisons
`<`, `=<`, `>`, `>=`, `=:=`, `=\\=`. Arithmetic is limited to `+`, `-`, `*`
and integer constants. Cut, negation, disjunction and if-then-else are
rejected with a positioned diagnostic.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import lark
from lark import Transformer, v_args

from . import SizedCostError


class FrontendError(SizedCostError):
    """Syntax or declaration error, with source position when known"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None and line > 0:
            where = f"line {line}" + (f", column {column}" if column else "")
            message = f"{where}: {message}"
        super().__init__(message)


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Integer:
    value: int


@dataclass(frozen=True)
class Compound:
    functor: str
    args: Tuple['Term', ...] = ()

    @property
    def indicator(self) -> Tuple[str, int]:
        return (self.functor, len(self.args))


Term = Union[Variable, Integer, Compound]

NIL = Compound('[]')
UNIFY = '='
IS = 'is'
COMPARISONS = ('<', '=<', '>', '>=', '=:=', '=\\=')
ARITH_OPS = ('+', '-', '*')


def cons(head: Term, tail: Term) -> Compound:
    return Compound('.', (head, tail))


def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    result = tail
    for item in reversed(list(items)):
        result = cons(item, result)
    return result


def is_builtin(literal: Term) -> bool:
    return isinstance(literal, Compound) and len(literal.args) == 2 and (
        literal.functor in (UNIFY, IS) or literal.functor in COMPARISONS)


def is_comparison(literal: Term) -> bool:
    return isinstance(literal, Compound) and len(literal.args) == 2 and literal.functor in COMPARISONS


def is_guard_literal(literal: Term) -> bool:
    """Literals allowed in a clause's guard prefix: unifications and comparisons"""
    return isinstance(literal, Compound) and len(literal.args) == 2 and (
        literal.functor == UNIFY or literal.functor in COMPARISONS)


def term_variables(term: Term, acc: Optional[List[str]] = None) -> List[str]:
    """Variable names of a term in first-occurrence order"""
    if acc is None:
        acc = []
    if isinstance(term, Variable):
        if term.name not in acc:
            acc.append(term.name)
    elif isinstance(term, Compound):
        for arg in term.args:
            term_variables(arg, acc)
    return acc


def is_ground(term: Term) -> bool:
    if isinstance(term, Variable):
        return False
    if isinstance(term, Compound):
        return all(is_ground(a) for a in term.args)
    return True


def rename_term(term: Term, mapping: Dict[str, Term]) -> Term:
    if isinstance(term, Variable):
        return mapping.get(term.name, term)
    if isinstance(term, Compound) and term.args:
        return Compound(term.functor, tuple(rename_term(a, mapping) for a in term.args))
    return term


def list_items(term: Term) -> Optional[List[Term]]:
    """Elements of a proper list term, or None if it is not one"""
    items: List[Term] = []
    while isinstance(term, Compound) and term.functor == '.' and len(term.args) == 2:
        items.append(term.args[0])
        term = term.args[1]
    if term == NIL:
        return items
    return None


@dataclass(frozen=True)
class Clause:
    head: Compound
    body: Tuple[Term, ...] = ()
    line: int = field(default=0, compare=False)

    @property
    def indicator(self) -> Tuple[str, int]:
        return self.head.indicator

    def variables(self) -> List[str]:
        acc = term_variables(self.head)
        for literal in self.body:
            term_variables(literal, acc)
        return acc

    def guard_prefix_length(self) -> int:
        count = 0
        for literal in self.body:
            if not is_guard_literal(literal):
                break
            count += 1
        return count


@dataclass(frozen=True)
class TypeDecl:
    name: str
    alternatives: Tuple[Term, ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class EntryDecl:
    name: str
    argspecs: Tuple[Term, ...]
    line: int = field(default=0, compare=False)

    @property
    def indicator(self) -> Tuple[str, int]:
        return (self.name, len(self.argspecs))


@dataclass(frozen=True)
class ResourceDecl:
    name: str
    options: Tuple[Tuple[str, Any], ...] = ()
    line: int = field(default=0, compare=False)

    def option(self, key: str, default: Any = None) -> Any:
        for name, value in self.options:
            if name == key:
                return value
        return default


@dataclass(frozen=True)
class TrustDecl:
    name: str
    arity: int
    prop: str
    line: int = field(default=0, compare=False)

    @property
    def indicator(self) -> Tuple[str, int]:
        return (self.name, self.arity)


TRUST_PROPERTIES = ('not_fails', 'fails', 'is_det', 'non_det')


@dataclass
class Program:
    predicates: Dict[Tuple[str, int], Tuple[Clause, ...]]
    types: Tuple[TypeDecl, ...] = ()
    entries: Tuple[EntryDecl, ...] = ()
    resources: Tuple[ResourceDecl, ...] = ()
    trusts: Tuple[TrustDecl, ...] = ()
    name: str = field(default='<string>', compare=False)

    def clauses(self, indicator: Tuple[str, int]) -> Tuple[Clause, ...]:
        return self.predicates.get(indicator, ())

    def is_defined(self, indicator: Tuple[str, int]) -> bool:
        return indicator in self.predicates

    def all_clauses(self) -> List[Clause]:
        return [c for clauses in self.predicates.values() for c in clauses]


# ---------------------------------------------------------------------------
# Grammar
# ---------------------------------------------------------------------------

PROGRAM_GRAMMAR = r'''
    start: item*

    ?item: clause
         | directive

    clause: term "." -> fact
          | term ":-" body "." -> rule

    directive: ":-" "regtype" ATOM ":=" term ("|" term)* "." -> regtype_decl
             | ":-" "entry" term "." -> entry_decl
             | ":-" "resource" ATOM "(" option ("," option)* ")" "." -> resource_decl
             | ":-" "resource" ATOM "." -> resource_decl
             | ":-" "trust" term "+" ATOM "." -> trust_decl
             | ":-" term "." -> unknown_decl

    option: ATOM "=" optval

    ?optval: INT -> opt_int
           | ATOM -> opt_atom
           | QATOM -> opt_quoted
           | "(" optval "," optval ")" -> opt_pair
           | "[" "]" -> opt_nil
           | "[" optval ("," optval)* "]" -> opt_list

    body: literal ("," literal)*

    literal: term -> goal
           | term "=" term -> unify
           | term "is" expr -> is_lit
           | expr COMPOP expr -> compare
           | "!" -> cut
           | "\\+" literal -> negation
           | "(" body ";" body ")" -> disjunction
           | "(" body "->" body ")" -> ifthen

    ?expr: expr "+" prod -> add
         | expr "-" prod -> sub
         | prod

    ?prod: prod "*" unary -> mul
         | unary

    ?unary: "-" unary -> neg
          | INT -> num
          | VAR -> evar
          | "(" expr ")"

    term: VAR -> var
        | INT -> int
        | ATOM -> atom
        | ATOM "(" term ("," term)* ")" -> compound
        | "[" "]" -> nil
        | "[" term ("," term)* "]" -> list
        | "[" term ("," term)* "|" term "]" -> partial_list

    VAR: /[A-Z_][A-Za-z0-9_]*/
    ATOM: /[a-z][A-Za-z0-9_]*/
    QATOM: /'[^']*'/
    INT: /[0-9]+/
    COMPOP: /=<|>=|=:=|=\\=|<|>/
    COMMENT: /%[^\n]*/

    %import common.WS
    %ignore WS
    %ignore COMMENT
'''

_parser = lark.Lark(PROGRAM_GRAMMAR, start='start', propagate_positions=True)


class _Unsupported:
    """Marker for constructs rejected after parsing"""

    def __init__(self, construct: str, line: int, column: int):
        self.construct = construct
        self.line = line
        self.column = column


class _ProgramBuilder(Transformer):
    """Turns the lark parse tree into AST objects"""

    # terms
    def var(self, children):
        return Variable(str(children[0]))

    def int(self, children):
        return Integer(int(children[0]))

    def atom(self, children):
        return Compound(str(children[0]))

    def compound(self, children):
        return Compound(str(children[0]), tuple(children[1:]))

    def nil(self, children):
        return NIL

    def list(self, children):
        return make_list(children)

    def partial_list(self, children):
        return make_list(children[:-1], children[-1])

    # arithmetic
    def add(self, children):
        return Compound('+', (children[0], children[1]))

    def sub(self, children):
        return Compound('-', (children[0], children[1]))

    def mul(self, children):
        return Compound('*', (children[0], children[1]))

    def neg(self, children):
        inner = children[0]
        if isinstance(inner, Integer):
            return Integer(-inner.value)
        return Compound('-', (Integer(0), inner))

    def num(self, children):
        return Integer(int(children[0]))

    def evar(self, children):
        return Variable(str(children[0]))

    # literals
    def goal(self, children):
        return children[0]

    def unify(self, children):
        return Compound(UNIFY, (children[0], children[1]))

    def is_lit(self, children):
        return Compound(IS, (children[0], children[1]))

    def compare(self, children):
        left, op, right = children
        return Compound(str(op), (left, right))

    @v_args(meta=True)
    def cut(self, meta, children):
        return _Unsupported('cut (!)', meta.line, meta.column)

    @v_args(meta=True)
    def negation(self, meta, children):
        return _Unsupported('negation (\\+)', meta.line, meta.column)

    @v_args(meta=True)
    def disjunction(self, meta, children):
        return _Unsupported('disjunction (;)', meta.line, meta.column)

    @v_args(meta=True)
    def ifthen(self, meta, children):
        return _Unsupported('if-then-else (->)', meta.line, meta.column)

    def body(self, children):
        return list(children)

    # clauses
    @v_args(meta=True)
    def fact(self, meta, children):
        return _make_clause(children[0], [], meta.line, meta.column)

    @v_args(meta=True)
    def rule(self, meta, children):
        return _make_clause(children[0], children[1], meta.line, meta.column)

    # directives
    @v_args(meta=True)
    def regtype_decl(self, meta, children):
        return TypeDecl(str(children[0]), tuple(children[1:]), meta.line)

    @v_args(meta=True)
    def entry_decl(self, meta, children):
        spec = children[0]
        if not isinstance(spec, Compound):
            raise FrontendError("entry declaration must name a predicate", meta.line, meta.column)
        return EntryDecl(spec.functor, spec.args, meta.line)

    @v_args(meta=True)
    def resource_decl(self, meta, children):
        options = tuple(children[1:])
        keys = [k for k, _ in options]
        if len(set(keys)) != len(keys):
            raise FrontendError(f"duplicate option in resource {children[0]}", meta.line, meta.column)
        return ResourceDecl(str(children[0]), options, meta.line)

    @v_args(meta=True)
    def trust_decl(self, meta, children):
        spec, prop = children
        prop = str(prop)
        if not isinstance(spec, Compound):
            raise FrontendError("trust declaration must name a predicate", meta.line, meta.column)
        if prop not in TRUST_PROPERTIES:
            raise FrontendError(f"unknown trusted property: {prop}", meta.line, meta.column)
        return TrustDecl(spec.functor, len(spec.args), prop, meta.line)

    @v_args(meta=True)
    def unknown_decl(self, meta, children):
        spec = children[0]
        kind = spec.functor if isinstance(spec, Compound) else str(spec)
        raise FrontendError(f"unknown declaration kind: {kind}", meta.line, meta.column)

    def option(self, children):
        return (str(children[0]), children[1])

    def opt_int(self, children):
        return int(children[0])

    def opt_atom(self, children):
        return str(children[0])

    def opt_quoted(self, children):
        return str(children[0])[1:-1]

    def opt_pair(self, children):
        return (children[0], children[1])

    def opt_nil(self, children):
        return ()

    def opt_list(self, children):
        return tuple(children)


def _make_clause(head: Term, body: List[Any], line: int, column: int) -> Clause:
    if not isinstance(head, Compound):
        raise FrontendError("clause head must be an atom or compound term", line, column)
    if head.functor in ('.', '[]') or is_builtin(head):
        raise FrontendError(f"cannot define builtin or list constructor {head.functor}", line, column)
    for literal in body:
        if isinstance(literal, _Unsupported):
            raise FrontendError(f"unsupported construct: {literal.construct}",
                                literal.line, literal.column)
        if not isinstance(literal, Compound):
            raise FrontendError("body literal must be callable", line, column)
    clause = Clause(head, tuple(body), line)
    return _rename_anonymous(clause)


def _rename_anonymous(clause: Clause) -> Clause:
    counter = [0]

    def fresh(term: Term) -> Term:
        if isinstance(term, Variable) and term.name == '_':
            counter[0] += 1
            return Variable(f"_G{counter[0]}")
        if isinstance(term, Compound) and term.args:
            return Compound(term.functor, tuple(fresh(a) for a in term.args))
        return term

    head = fresh(clause.head)
    body = tuple(fresh(literal) for literal in clause.body)
    return Clause(head, body, clause.line)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def parse_program(source: str, name: str = '<string>') -> Program:
    """
    Parse program source text.

    Args:
        source: Program text (UTF-8 decoded)
        name: Source name used in reports

    Returns:
        Program with clauses grouped by predicate and declarations separated

    Raises:
        FrontendError: On syntax errors (with line/column), duplicate entry
            declarations, unknown declaration kinds and unsupported constructs
    """
    try:
        tree = _parser.parse(source)
    except lark.exceptions.UnexpectedInput as e:
        line = getattr(e, 'line', None)
        column = getattr(e, 'column', None)
        if line is None or line < 0:
            line = source.count('\n') + 1
        raise FrontendError(f"syntax error near {_context(source, e)}", line, column)

    try:
        items = _ProgramBuilder().transform(tree).children
    except lark.exceptions.VisitError as e:
        if isinstance(e.orig_exc, FrontendError):
            raise e.orig_exc
        raise FrontendError(f"cannot build program: {e.orig_exc}")

    return _assemble(items, name)


def _context(source: str, error: Exception) -> str:
    pos = getattr(error, 'pos_in_stream', None)
    if pos is None or pos < 0:
        return "end of input"
    snippet = source[pos:pos + 12].split('\n')[0]
    return repr(snippet) if snippet else "end of input"


def _assemble(items: List[Any], name: str) -> Program:
    predicates: Dict[Tuple[str, int], List[Clause]] = {}
    types: List[TypeDecl] = []
    entries: List[EntryDecl] = []
    resources: List[ResourceDecl] = []
    trusts: List[TrustDecl] = []

    for item in items:
        if isinstance(item, Clause):
            predicates.setdefault(item.indicator, []).append(item)
        elif isinstance(item, TypeDecl):
            types.append(item)
        elif isinstance(item, EntryDecl):
            if any(e == item for e in entries):
                raise FrontendError(f"duplicate entry declaration for {item.name}/{len(item.argspecs)}",
                                    item.line)
            entries.append(item)
        elif isinstance(item, ResourceDecl):
            if any(r.name == item.name for r in resources):
                raise FrontendError(f"duplicate resource declaration: {item.name}", item.line)
            resources.append(item)
        elif isinstance(item, TrustDecl):
            trusts.append(item)

    for entry in entries:
        if entry.indicator not in predicates:
            raise FrontendError(f"entry declaration names undefined predicate "
                                f"{entry.name}/{len(entry.argspecs)}", entry.line)

    return Program(
        predicates={k: tuple(v) for k, v in predicates.items()},
        types=tuple(types),
        entries=tuple(entries),
        resources=tuple(resources),
        trusts=tuple(trusts),
        name=name,
    )


def parse_term(text: str) -> Term:
    """Parse a single term, e.g. a goal argument given on the command line"""
    program = parse_program(f"dummy__({text}).")
    clause = program.all_clauses()[0]
    return clause.head.args[0]


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def normalize_clause(clause: Clause) -> Clause:
    """
    Rewrite a clause so its head arguments are distinct variables.

    Non-variable head arguments and repeated head variables are replaced by
    fresh variables, and the original bindings become leading `=` literals
    in argument order. The rest of the body is kept in order.
    """
    used = set(clause.variables())
    seen: List[str] = []
    head_args: List[Term] = []
    bindings: List[Term] = []
    counter = 0

    for arg in clause.head.args:
        if isinstance(arg, Variable) and arg.name not in seen:
            seen.append(arg.name)
            head_args.append(arg)
            continue
        counter += 1
        fresh_name = f"H{counter}"
        while fresh_name in used:
            counter += 1
            fresh_name = f"H{counter}"
        used.add(fresh_name)
        fresh_var = Variable(fresh_name)
        head_args.append(fresh_var)
        bindings.append(Compound(UNIFY, (fresh_var, arg)))

    if not bindings:
        return clause
    head = Compound(clause.head.functor, tuple(head_args))
    return Clause(head, tuple(bindings) + clause.body, clause.line)


def normalize_program(program: Program) -> Program:
    return Program(
        predicates={k: tuple(normalize_clause(c) for c in v) for k, v in program.predicates.items()},
        types=program.types,
        entries=program.entries,
        resources=program.resources,
        trusts=program.trusts,
        name=program.name,
    )


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def format_term(term: Term) -> str:
    if isinstance(term, Variable):
        return term.name
    if isinstance(term, Integer):
        return str(term.value)
    if term.functor == '.' and len(term.args) == 2:
        items: List[str] = []
        tail: Term = term
        while isinstance(tail, Compound) and tail.functor == '.' and len(tail.args) == 2:
            items.append(format_term(tail.args[0]))
            tail = tail.args[1]
        if tail == NIL:
            return "[" + ",".join(items) + "]"
        return "[" + ",".join(items) + "|" + format_term(tail) + "]"
    if term == NIL:
        return "[]"
    if not term.args:
        return term.functor
    return term.functor + "(" + ",".join(format_term(a) for a in term.args) + ")"


def format_expr(term: Term) -> str:
    if isinstance(term, Compound) and term.functor in ARITH_OPS and len(term.args) == 2:
        left, right = term.args
        return f"{_expr_operand(left)}{term.functor}{_expr_operand(right)}"
    return format_term(term)


def _expr_operand(term: Term) -> str:
    text = format_expr(term)
    if isinstance(term, Compound) and term.functor in ARITH_OPS and len(term.args) == 2:
        return f"({text})"
    if isinstance(term, Integer) and term.value < 0:
        return f"({text})"
    return text


def format_literal(literal: Term) -> str:
    if isinstance(literal, Compound) and len(literal.args) == 2:
        left, right = literal.args
        if literal.functor == UNIFY:
            return f"{format_term(left)} = {format_term(right)}"
        if literal.functor == IS:
            return f"{format_term(left)} is {format_expr(right)}"
        if literal.functor in COMPARISONS:
            return f"{format_expr(left)} {literal.functor} {format_expr(right)}"
    return format_term(literal)


def format_clause(clause: Clause) -> str:
    head = format_term(clause.head)
    if not clause.body:
        return f"{head}."
    body = ",\n    ".join(format_literal(l) for l in clause.body)
    return f"{head} :-\n    {body}."


def _format_option(value: Any) -> str:
    if isinstance(value, tuple) and len(value) == 2 and not all(isinstance(v, str) for v in value):
        return f"({_format_option(value[0])},{_format_option(value[1])})"
    if isinstance(value, tuple):
        return "[" + ",".join(f"'{v}'" for v in value) + "]"
    return str(value)


def format_program(program: Program) -> str:
    lines: List[str] = []
    for decl in program.types:
        alts = " | ".join(format_term(a) for a in decl.alternatives)
        lines.append(f":- regtype {decl.name} := {alts}.")
    for decl in program.resources:
        if decl.options:
            opts = ", ".join(f"{k}={_format_option(v)}" for k, v in decl.options)
            lines.append(f":- resource {decl.name}({opts}).")
        else:
            lines.append(f":- resource {decl.name}.")
    for decl in program.entries:
        lines.append(f":- entry {format_term(Compound(decl.name, decl.argspecs))}.")
    for decl in program.trusts:
        args = ",".join("_" for _ in range(decl.arity))
        spec = f"{decl.name}({args})" if decl.arity else decl.name
        lines.append(f":- trust {spec} + {decl.prop}.")
    if lines:
        lines.append("")
    for clauses in program.predicates.values():
        for clause in clauses:
            lines.append(format_clause(clause))
        lines.append("")
    return "\n".join(lines)
