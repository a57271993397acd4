"""
Benchmark corpus runs for sizedcost

Each benchmark is a program `<name>.pl` with a golden sidecar
`<name>.golden.yaml` naming the entry predicate, the resource and the
expected lower and upper complexity orders, optionally with exact closed
forms per quantity and solved output schemas. A corpus run analyses every
program, compares it with its golden and prints one row per benchmark.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import SizedCostError
from .fixpoint import AnalysisSettings, analyze
from .frontend import Program, parse_program
from .report import Report, ReportError, VersionReport, build_report
from .resdomain import ResourceDef
from .utils import list_programs, read_text, read_yaml
from .validate import validate_golden_data

GOLDEN_SUFFIX = '.golden.yaml'

_SUPERSCRIPT_DIGITS = str.maketrans("0123456789", "⁰¹²³⁴⁵⁶⁷⁸⁹")


class CorpusError(SizedCostError):
    """Missing or invalid golden file, empty corpus directory"""
    pass


@dataclass
class Golden:
    benchmark: str
    entry: str
    resource: str
    lower: str
    upper: str
    description: str = ''
    trust: List[str] = field(default_factory=list)
    forms: Dict[str, Dict[str, str]] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    path: Optional[Path] = None


def golden_path(program_path: Path) -> Path:
    return program_path.with_name(program_path.stem + GOLDEN_SUFFIX)


def load_golden(path: Path, schema: Dict) -> Golden:
    """
    Raises:
        CorpusError: If the file is missing, unreadable or fails the schema
    """
    if not path.exists():
        raise CorpusError(f"missing golden file: {path}")
    try:
        data = read_yaml(path)
    except Exception as e:
        raise CorpusError(f"cannot read golden {path}: {e}")
    check = validate_golden_data(data, schema)
    if not check.valid:
        raise CorpusError(f"invalid golden {path}: " + "; ".join(check.errors))
    return Golden(
        benchmark=data['benchmark'],
        entry=data['entry'],
        resource=data['resource'],
        lower=str(data['lower']),
        upper=str(data['upper']),
        description=data.get('description', ''),
        trust=list(data.get('trust', [])),
        forms={q: dict(v) for q, v in data.get('forms', {}).items()},
        outputs={str(k): str(v) for k, v in data.get('outputs', {}).items()},
        path=path,
    )


def _canonical_min_max(text: str) -> str:
    def sort_args(match: re.Match) -> str:
        args = sorted(a for a in match.group(2).split(',') if a)
        return f"{match.group(1)}({','.join(args)})"
    return re.sub(r'(min|max)\(([^()]*)\)', sort_args, text)


def canonical_order(text: str) -> str:
    """
    Canonical spelling of a complexity order.

    Whitespace and explicit product signs are dropped, `x^2` becomes `x²`
    for symbolic bases and min/max arguments are sorted.
    """
    text = re.sub(r'\s+', '', str(text))
    text = re.sub(r'[*·](?=[^\W\d_])', '', text)
    text = re.sub(r'([^\W\d_][\d′]*)\^(\d+)',
                  lambda m: m.group(1) + m.group(2).translate(_SUPERSCRIPT_DIGITS), text)
    return _canonical_min_max(text)


def orders_match(actual: str, expected: str) -> bool:
    return canonical_order(actual) == canonical_order(expected)


def forms_match(actual: Optional[str], expected: str) -> bool:
    """Closed forms and schemas compared modulo spacing and min/max argument order"""
    if actual is None:
        return False
    canonical = lambda text: _canonical_min_max(re.sub(r'\s+', '', str(text)))
    return canonical(actual) == canonical(expected)


@dataclass
class BenchmarkRow:
    benchmark: str
    entry: str
    lower: str = ''
    upper: str = ''
    expected_lower: str = ''
    expected_upper: str = ''
    mismatches: List[str] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def matches(self) -> bool:
        return self.error is None and not self.mismatches


def _parse_indicator(text: str) -> Tuple[str, int]:
    name, _, arity = text.rpartition('/')
    return name, int(arity)


def entry_version(report: Report, indicator: Tuple[str, int]) -> VersionReport:
    predicate = f"{indicator[0]}/{indicator[1]}"
    versions = report.entry_versions(predicate)
    if not versions:
        raise CorpusError(f"{report.program}: no entry version of {predicate}")
    return versions[0]


def compare(version: VersionReport, golden: Golden, program: Program) -> List[str]:
    """Every difference between an analysed entry version and its golden"""
    mismatches = []
    bound = version.bound(golden.resource)
    if not orders_match(bound.lower_order, golden.lower):
        mismatches.append(f"lower order {bound.lower_order}, expected {golden.lower}")
    if not orders_match(bound.upper_order, golden.upper):
        mismatches.append(f"upper order {bound.upper_order}, expected {golden.upper}")
    for quantity, sides in golden.forms.items():
        try:
            actual = version.bound(quantity)
        except ReportError:
            mismatches.append(f"no {quantity} bounds to compare")
            continue
        for side, expected in sides.items():
            got = actual.lower if side == 'lower' else actual.upper
            if not forms_match(got, str(expected)):
                mismatches.append(f"{quantity} {side} {got}, expected {expected}")
    outputs = {str(o.position): o.schema for o in version.outputs}
    for position, expected in golden.outputs.items():
        got = outputs.get(position)
        if not forms_match(got, expected):
            mismatches.append(f"output {position} {got or 'missing'}, expected {expected}")
    declared = {f"{t.name}/{t.arity} + {t.prop}" for t in program.trusts}
    for assertion in golden.trust:
        if assertion not in declared:
            mismatches.append(f"trust assertion not declared: {assertion}")
    return mismatches


def run_benchmark(program_path: Path, schema: Dict, settings: Optional[AnalysisSettings] = None,
                  default_resource: Optional[ResourceDef] = None) -> BenchmarkRow:
    """
    Analyse one benchmark and compare it with its golden.

    Program and analysis errors end up in the row; only golden problems
    raise.

    Raises:
        CorpusError: On a missing or invalid golden file
    """
    golden = load_golden(golden_path(program_path), schema)
    row = BenchmarkRow(golden.benchmark, golden.entry, expected_lower=golden.lower,
                       expected_upper=golden.upper)
    try:
        program = parse_program(read_text(program_path), program_path.name)
        resources = None
        if not program.resources and default_resource is not None:
            resources = [default_resource]
        result = analyze(program, resources=resources, settings=settings)
        report = build_report(result, program_path.name)
        version = entry_version(report, _parse_indicator(golden.entry))
    except SizedCostError as e:
        row.error = str(e)
        return row
    try:
        bound = version.bound(golden.resource)
    except ReportError as e:
        row.error = str(e)
        return row
    row.lower, row.upper = bound.lower_order, bound.upper_order
    row.mismatches = compare(version, golden, program)
    row.diagnostics = [d for v in report.versions for d in v.diagnostics]
    return row


def run_corpus(directory: Path, schema: Dict, settings: Optional[AnalysisSettings] = None,
               default_resource: Optional[ResourceDef] = None) -> List[BenchmarkRow]:
    """
    Raises:
        CorpusError: If the directory holds no programs or a golden is missing
    """
    programs = list_programs(directory)
    if not programs:
        raise CorpusError(f"no benchmark programs in {directory}")
    missing = [p.name for p in programs if not golden_path(p).exists()]
    if missing:
        raise CorpusError(f"missing golden file for: {', '.join(missing)}")
    return [run_benchmark(p, schema, settings, default_resource) for p in programs]


def render_table(rows: Sequence[BenchmarkRow]) -> str:
    """Benchmark, lower and upper orders, match flag"""
    headers = ("Benchmark", "LB", "UB", "Match")
    table = []
    for row in rows:
        if row.error is not None:
            flag = "error"
        else:
            flag = "yes" if row.matches else "NO"
        table.append((row.benchmark, row.lower or "-", row.upper or "-", flag))
    widths = [max(len(h), *(len(r[i]) for r in table)) if table else len(h) for i, h in enumerate(headers)]

    def line(cells):
        return "  ".join(cell.ljust(w) for cell, w in zip(cells, widths)).rstrip()

    lines = [line(headers), line(tuple('-' * w for w in widths))]
    lines.extend(line(r) for r in table)
    for row in rows:
        if row.error is not None:
            lines.append(f"{row.benchmark}: {row.error}")
        for mismatch in row.mismatches:
            lines.append(f"{row.benchmark}: {mismatch}")
    matched = sum(1 for r in rows if r.matches)
    lines.append("")
    lines.append(f"{matched}/{len(rows)} benchmarks match")
    return "\n".join(lines)
