"""
Test analysis reports.

Tests ensure that report.py correctly:
- Builds per-version reports with bounds, orders and output schemas
- Renders text and structured reports
- Parses structured reports back exactly
- Rejects malformed structured reports
"""

import unittest
from pathlib import Path

# Add parent to path
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.sizedcost.fixpoint import analyze
from tools.sizedcost.frontend import parse_program
from tools.sizedcost.report import (
    HEADER,
    ReportError,
    build_report,
    parse_structured,
    render_equations,
    render_structured,
    render_text,
)
from tools.sizedcost.utils import read_text

CORPUS = Path(__file__).parent.parent / 'corpus'


def corpus_report(name, resources=None):
    program = parse_program(read_text(CORPUS / f"{name}.pl"), f"{name}.pl")
    result = analyze(program)
    return result, build_report(result, program.name, resources)


class TestBuild(unittest.TestCase):
    """Test report contents"""

    @classmethod
    def setUpClass(cls):
        cls.result, cls.report = corpus_report('append')

    def test_version(self):
        """Test the entry version and its properties"""
        version = self.report.version('append/3#1')
        self.assertTrue(version.entry)
        self.assertEqual(version.predicate, 'append/3')
        self.assertEqual((version.nf, version.det), ('not_fails', 'is_det'))
        self.assertEqual(self.report.entry_versions('append/3'), [version])

    def test_bounds(self):
        """Test bounds and orders per quantity"""
        bound = self.report.versions[0].bound('steps')
        self.assertEqual((bound.lower, bound.upper), ("α1+1", "β1+1"))
        self.assertEqual((bound.lower_order, bound.upper_order), ("α1", "β1"))
        sol = self.report.versions[0].bound('sol')
        self.assertEqual((sol.lower, sol.upper), ("1", "1"))

    def test_output_schema(self):
        """Test the solved output schema"""
        outputs = self.report.versions[0].outputs
        self.assertEqual([o.position for o in outputs], [3])
        self.assertEqual(outputs[0].schema, "listnum^(α1+α2,β1+β2)(num^(min(γ1,γ2),max(δ1,δ2)))")

    def test_unknown_resource(self):
        """Test requesting a resource that was not analysed"""
        with self.assertRaises(ReportError):
            build_report(self.result, 'append.pl', ['calls'])
        with self.assertRaises(ReportError):
            self.report.version('append/3#9')
        with self.assertRaises(ReportError):
            self.report.versions[0].bound('calls')


class TestRendering(unittest.TestCase):
    """Test text and structured output"""

    @classmethod
    def setUpClass(cls):
        cls.result, cls.report = corpus_report('append')

    def test_text(self):
        """Test the text report names the version and its bounds"""
        text = render_text(self.report)
        self.assertIn("Program: append.pl", text)
        self.assertIn("== append/3#1  [entry]", text)
        self.assertIn("lower α1+1  [α1]", text)

    def test_structured_round_trip(self):
        """Test parsing a rendered report gives the same report"""
        text = render_structured(self.report)
        self.assertTrue(text.startswith(HEADER + "\n"))
        self.assertEqual(parse_structured(text), self.report)

    def test_structured_round_trip_with_callees(self):
        """Test reports with several versions and diagnostics survive"""
        _, report = corpus_report('hanoi')
        self.assertEqual(parse_structured(render_structured(report)), report)
        _, report = corpus_report('listfact')
        self.assertGreater(len(report.versions), 1)
        self.assertEqual(parse_structured(render_structured(report)), report)

    def test_equations(self):
        """Test the equation dump lists every version"""
        text = render_equations(self.result)
        self.assertIn("-- append/3#1", text)


class TestParsing(unittest.TestCase):
    """Test malformed structured reports"""

    def test_missing_header(self):
        """Test the header is required"""
        with self.assertRaises(ReportError):
            parse_structured("program: x.pl\nresources: steps\n")

    def test_unknown_key(self):
        """Test unknown keys are rejected"""
        text = f"{HEADER}\nprogram: x.pl\nresources: steps\nversion: p/1#1\n  colour: red\n"
        with self.assertRaises(ReportError):
            parse_structured(text)

    def test_missing_fields(self):
        """Test versions need every field"""
        text = f"{HEADER}\nprogram: x.pl\nresources: steps\nversion: p/1#1\n  predicate: p/1\n"
        with self.assertRaises(ReportError) as ctx:
            parse_structured(text)
        self.assertIn("missing", str(ctx.exception))

    def test_bad_indentation(self):
        """Test indentation must be in steps of two spaces"""
        text = f"{HEADER}\nprogram: x.pl\nresources: steps\nversion: p/1#1\n   predicate: p/1\n"
        with self.assertRaises(ReportError):
            parse_structured(text)

    def test_empty_report(self):
        """Test a report without versions"""
        report = parse_structured(f"{HEADER}\nprogram: x.pl\nresources: steps calls\n")
        self.assertEqual(report.resources, ['steps', 'calls'])
        self.assertEqual(report.versions, [])


if __name__ == '__main__':
    unittest.main()
