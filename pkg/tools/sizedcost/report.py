"""
Analysis reports for sizedcost

A Report holds, per analysed version, its call pattern, non-failure and
determinacy, the solved lower and upper bounds of solutions and of every
resource with their complexity orders, the solved output schemas and the
diagnostics. It renders as text for people and in a structured,
line-oriented format for goldens and tooling:

    sizedcost-report 1
    program: append.pl
    resources: steps
    version: append/3#1
      predicate: append/3
      ...
      resource: steps
        lower: α1+1
        ...

parse_structured inverts render_structured exactly.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import SizedCostError
from .fixpoint import AnalysisEntry, AnalysisResult, describe_pattern
from .recurrence import LOWER, UPPER, order_of
from .resdomain import SOLUTIONS, output_quantity
from .sizedtypes import render_schema, schema_slots, with_slots

HEADER = "sizedcost-report 1"
INDENT = "  "


class ReportError(SizedCostError):
    """Malformed structured report"""
    pass


@dataclass
class BoundReport:
    quantity: str
    lower: str
    upper: str
    lower_order: str
    upper_order: str


@dataclass
class OutputReport:
    position: int
    schema: str


@dataclass
class VersionReport:
    version: str
    predicate: str
    pattern: str
    entry: bool
    nf: str
    det: str
    iterations: int
    bounds: List[BoundReport] = field(default_factory=list)
    outputs: List[OutputReport] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)

    def bound(self, quantity: str) -> BoundReport:
        for bound in self.bounds:
            if bound.quantity == quantity:
                return bound
        raise ReportError(f"{self.version}: no bounds for {quantity}")


@dataclass
class Report:
    program: str
    resources: List[str]
    versions: List[VersionReport] = field(default_factory=list)

    def version(self, name: str) -> VersionReport:
        for version in self.versions:
            if version.version == name:
                return version
        raise ReportError(f"no version named {name}")

    def entry_versions(self, predicate: Optional[str] = None) -> List[VersionReport]:
        return [v for v in self.versions if v.entry and (predicate is None or v.predicate == predicate)]


# ---------------------------------------------------------------------------
# Building
# ---------------------------------------------------------------------------

def solved_output(entry: AnalysisEntry, position: int) -> str:
    """Output schema of an argument with its slots replaced by the solved bounds"""
    shape = entry.pattern.outputs[position - 1]
    slots = []
    for k in range(1, len(schema_slots(shape)) + 1):
        lower, upper = entry.bounds(output_quantity(position, k))
        slots.append((lower.collapsed(), upper.collapsed()))
    return render_schema(with_slots(shape, slots))


def version_report(entry: AnalysisEntry, resources: Sequence[str]) -> VersionReport:
    name, arity = entry.indicator
    report = VersionReport(entry.version, f"{name}/{arity}", describe_pattern(entry.pattern), entry.entry,
                           entry.nf, entry.det, entry.iterations)
    for quantity in [SOLUTIONS, *resources]:
        lower, upper = entry.bounds(quantity)
        report.bounds.append(BoundReport(quantity, lower.render(), upper.render(),
                                         order_of(lower).text, order_of(upper).text))
    for position, shape in enumerate(entry.pattern.outputs, start=1):
        if shape is not None:
            report.outputs.append(OutputReport(position, solved_output(entry, position)))
    report.diagnostics = [d.message for d in entry.diagnostics]
    return report


def build_report(result: AnalysisResult, program: str,
                 resources: Optional[Sequence[str]] = None) -> Report:
    """
    Report of every version of an analysis.

    Args:
        result: Analysis result
        program: Program name shown in the report
        resources: Resources to include, all analysed ones when omitted

    Raises:
        ReportError: If a requested resource was not analysed
    """
    analysed = [d.name for d in result.resources]
    if resources is None:
        resources = analysed
    for name in resources:
        if name not in analysed:
            raise ReportError(f"resource {name} was not analysed (have: {', '.join(analysed) or 'none'})")
    report = Report(program, list(resources))
    report.versions = [version_report(entry, resources) for entry in result.entries]
    return report


# ---------------------------------------------------------------------------
# Text
# ---------------------------------------------------------------------------

def render_text(report: Report) -> str:
    lines = [f"Program: {report.program}", f"Resources: {', '.join(report.resources) or 'none'}", ""]
    for version in report.versions:
        marker = "  [entry]" if version.entry else ""
        lines.append(f"== {version.version}{marker}")
        lines.append(f"   call:    {version.pattern}")
        lines.append(f"   nf: {version.nf}   det: {version.det}   iterations: {version.iterations}")
        width = max(len(b.quantity) for b in version.bounds) if version.bounds else 0
        for bound in version.bounds:
            label = "solutions" if bound.quantity == SOLUTIONS else bound.quantity
            lines.append(f"   {label:<{max(width, 9)}}  lower {bound.lower}  [{bound.lower_order}]"
                         f"   upper {bound.upper}  [{bound.upper_order}]")
        for output in version.outputs:
            lines.append(f"   arg {output.position}:   {output.schema}")
        for diagnostic in version.diagnostics:
            lines.append(f"   ! {diagnostic}")
        lines.append("")
    return "\n".join(lines)


def render_equations(result: AnalysisResult) -> str:
    """Every version's bound functions before solving"""
    lines = []
    for entry in result.entries:
        lines.append(f"-- {entry.version}  {describe_pattern(entry.pattern)}")
        lines.append(entry.system.dump())
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Structured
# ---------------------------------------------------------------------------

def _line(depth: int, key: str, value) -> str:
    return f"{INDENT * depth}{key}: {value}"


def render_structured(report: Report) -> str:
    lines = [HEADER, _line(0, 'program', report.program), _line(0, 'resources', ' '.join(report.resources))]
    for version in report.versions:
        lines.append(_line(0, 'version', version.version))
        lines.append(_line(1, 'predicate', version.predicate))
        lines.append(_line(1, 'pattern', version.pattern))
        lines.append(_line(1, 'entry', 'true' if version.entry else 'false'))
        lines.append(_line(1, 'nf', version.nf))
        lines.append(_line(1, 'det', version.det))
        lines.append(_line(1, 'iterations', version.iterations))
        for bound in version.bounds:
            lines.append(_line(1, 'resource', bound.quantity))
            lines.append(_line(2, 'lower', bound.lower))
            lines.append(_line(2, 'upper', bound.upper))
            lines.append(_line(2, 'lower_order', bound.lower_order))
            lines.append(_line(2, 'upper_order', bound.upper_order))
        for output in version.outputs:
            lines.append(_line(1, 'output', output.position))
            lines.append(_line(2, 'schema', output.schema))
        for diagnostic in version.diagnostics:
            lines.append(_line(1, 'diagnostic', diagnostic))
    return "\n".join(lines) + "\n"


def _split(line: str, number: int) -> Tuple[int, str, str]:
    stripped = line.lstrip(' ')
    indent = len(line) - len(stripped)
    if indent % len(INDENT):
        raise ReportError(f"line {number}: bad indentation")
    key, sep, value = stripped.partition(':')
    if not sep:
        raise ReportError(f"line {number}: expected 'key: value'")
    if value.startswith(' '):
        value = value[1:]
    return indent // len(INDENT), key, value


_VERSION_FIELDS = ('predicate', 'pattern', 'entry', 'nf', 'det', 'iterations')
_BOUND_FIELDS = ('lower', 'upper', 'lower_order', 'upper_order')


def parse_structured(text: str) -> Report:
    """
    Raises:
        ReportError: On a missing header, unknown keys or missing fields
    """
    lines = text.split("\n")
    if not lines or lines[0] != HEADER:
        raise ReportError(f"not a structured report (expected header '{HEADER}')")
    top: Dict[str, str] = {}
    versions: List[Tuple[str, Dict[str, str], List[Tuple[str, Dict[str, str]]],
                         List[Tuple[str, Dict[str, str]]], List[str]]] = []
    block: Optional[Dict[str, str]] = None
    for number, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        depth, key, value = _split(line, number)
        if depth == 0:
            if key == 'version':
                versions.append((value, {}, [], [], []))
            elif key in ('program', 'resources') and not versions:
                top[key] = value
            else:
                raise ReportError(f"line {number}: unexpected key {key}")
        elif depth == 1:
            if not versions:
                raise ReportError(f"line {number}: {key} outside a version")
            _, fields, bounds, outputs, diagnostics = versions[-1]
            if key in _VERSION_FIELDS:
                fields[key] = value
            elif key == 'resource':
                block = {}
                bounds.append((value, block))
            elif key == 'output':
                block = {}
                outputs.append((value, block))
            elif key == 'diagnostic':
                diagnostics.append(value)
            else:
                raise ReportError(f"line {number}: unknown version field {key}")
        elif depth == 2 and block is not None:
            block[key] = value
        else:
            raise ReportError(f"line {number}: unexpected nesting")

    for key in ('program', 'resources'):
        if key not in top:
            raise ReportError(f"missing {key}")
    report = Report(top['program'], top['resources'].split())
    for name, fields, bounds, outputs, diagnostics in versions:
        missing = [k for k in _VERSION_FIELDS if k not in fields]
        if missing:
            raise ReportError(f"version {name}: missing {', '.join(missing)}")
        try:
            iterations = int(fields['iterations'])
        except ValueError:
            raise ReportError(f"version {name}: iterations must be an integer")
        version = VersionReport(name, fields['predicate'], fields['pattern'], fields['entry'] == 'true',
                                fields['nf'], fields['det'], iterations, diagnostics=diagnostics)
        for quantity, values in bounds:
            missing = [k for k in _BOUND_FIELDS if k not in values]
            if missing:
                raise ReportError(f"version {name}, resource {quantity}: missing {', '.join(missing)}")
            version.bounds.append(BoundReport(quantity, *(values[k] for k in _BOUND_FIELDS)))
        for position, values in outputs:
            if 'schema' not in values or not position.isdigit():
                raise ReportError(f"version {name}: malformed output {position}")
            version.outputs.append(OutputReport(int(position), values['schema']))
        report.versions.append(version)
    return report


def bound_pair(version: VersionReport, quantity: str) -> Tuple[str, str]:
    bound = version.bound(quantity)
    return bound.lower, bound.upper


__all__ = ['HEADER', 'ReportError', 'BoundReport', 'OutputReport', 'VersionReport', 'Report',
           'build_report', 'render_text', 'render_equations', 'render_structured', 'parse_structured',
           'LOWER', 'UPPER']
