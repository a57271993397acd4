"""
Test the command-line interface.

Tests ensure that cli.py correctly:
- Dispatches every command
- Returns 0 on success, 1 on diagnostics under --strict, violations or
  mismatches, and 2 on input errors
- Writes a run log for every command
"""

import unittest
import io
import json
import os
import shutil
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

# Add parent to path
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.sizedcost.cli import EXIT_FAILED, EXIT_INPUT, EXIT_OK, main
from tools.sizedcost.report import HEADER

REPO_ROOT = Path(__file__).parent.parent

UNDEFINED = """\
:- entry p(num, out).
p(X, Y) :- q(X, Y).
"""

GROW = """\
:- regtype listnum := [] | [num|listnum].
:- entry grow(listnum).
grow(L) :- grow([0|L]).
"""


class CLITestCase(unittest.TestCase):
    """Runs commands inside a scratch copy of the repository"""

    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())
        shutil.copy(REPO_ROOT / 'config.json', self.temp_dir / 'config.json')
        shutil.copytree(REPO_ROOT / 'schema', self.temp_dir / 'schema')
        shutil.copytree(REPO_ROOT / 'corpus', self.temp_dir / 'corpus')
        self.old_cwd = os.getcwd()
        os.chdir(self.temp_dir)

    def tearDown(self):
        os.chdir(self.old_cwd)
        shutil.rmtree(self.temp_dir)

    def run_cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = main(list(argv))
        return code, out.getvalue(), err.getvalue()


class TestAnalyze(CLITestCase):
    """Test the analyze command"""

    def test_text_report(self):
        """Test a text report on stdout"""
        code, out, _ = self.run_cli('analyze', 'corpus/append.pl')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("β1+1", out)

    def test_structured_report(self):
        """Test the structured format"""
        code, out, _ = self.run_cli('analyze', 'corpus/append.pl', '--format', 'structured')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(out.startswith(HEADER))

    def test_output_file(self):
        """Test writing the report to a file"""
        code, out, _ = self.run_cli('analyze', 'corpus/fib.pl', '--output', 'reports/fib.txt')
        self.assertEqual(code, EXIT_OK)
        self.assertTrue((self.temp_dir / 'reports' / 'fib.txt').exists())
        self.assertIn("Report written", out)

    def test_dump_equations(self):
        """Test the bound functions are printed before the report"""
        code, out, _ = self.run_cli('analyze', 'corpus/append.pl', '--dump-equations')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("-- append/3#1", out)

    def test_missing_file(self):
        """Test an unreadable program is an input error"""
        code, _, err = self.run_cli('analyze', 'corpus/none.pl')
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("cannot read input", err)

    def test_syntax_error(self):
        """Test a program with unsupported syntax is an input error"""
        shutil.copy(REPO_ROOT / 'tests' / 'fixtures' / 'broken.pl', self.temp_dir / 'broken.pl')
        code, _, _ = self.run_cli('analyze', 'broken.pl')
        self.assertEqual(code, EXIT_INPUT)

    def test_strict(self):
        """Test diagnostics fail the run only under --strict"""
        (self.temp_dir / 'undefined.pl').write_text(UNDEFINED, encoding='utf-8')
        code, _, err = self.run_cli('analyze', 'undefined.pl')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("diagnostic", err)
        code, _, _ = self.run_cli('analyze', 'undefined.pl', '--strict')
        self.assertEqual(code, EXIT_FAILED)

    def test_strict_unsolved_bound(self):
        """Test a bound left without a closed form fails the run under --strict"""
        (self.temp_dir / 'grow.pl').write_text(GROW, encoding='utf-8')
        code, _, err = self.run_cli('analyze', 'grow.pl')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("diagnostic", err)
        code, _, _ = self.run_cli('analyze', 'grow.pl', '--strict')
        self.assertEqual(code, EXIT_FAILED)

    def test_unknown_resource(self):
        """Test asking for a resource that was not analysed"""
        code, _, _ = self.run_cli('analyze', 'corpus/append.pl', '--resource', 'calls')
        self.assertEqual(code, EXIT_INPUT)

    def test_run_log(self):
        """Test every run writes a structured log"""
        self.run_cli('analyze', 'corpus/append.pl')
        logs = list((self.temp_dir / 'logs' / 'runs').rglob('*_analyze.json'))
        self.assertEqual(len(logs), 1)
        data = json.loads(logs[0].read_text(encoding='utf-8'))
        self.assertEqual(data['outcome'], 'success')
        self.assertEqual(data['inputs'], ['corpus/append.pl'])
        self.assertEqual([v['predicate'] for v in data['versions']], ['append/3'])


class TestOtherCommands(CLITestCase):
    """Test check, corpus, validate and normalize"""

    def test_check(self):
        """Test bounds hold on random inputs"""
        code, out, _ = self.run_cli('check', 'corpus/append.pl', '--budget', '4', '--samples', '10')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("10/10 pass", out)

    def test_check_unknown_resource(self):
        """Test checking a resource that was not analysed"""
        code, _, _ = self.run_cli('check', 'corpus/append.pl', '--resource', 'calls')
        self.assertEqual(code, EXIT_INPUT)

    def test_corpus(self):
        """Test the corpus matches its goldens"""
        code, out, _ = self.run_cli('corpus')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("15/15 benchmarks match", out)

    def test_corpus_mismatch(self):
        """Test a wrong golden fails the corpus run"""
        corpus = self.temp_dir / 'small'
        corpus.mkdir()
        shutil.copy(self.temp_dir / 'corpus' / 'append.pl', corpus / 'append.pl')
        golden = (self.temp_dir / 'corpus' / 'append.golden.yaml').read_text(encoding='utf-8')
        (corpus / 'append.golden.yaml').write_text(golden.replace("upper: β1\n", "upper: β1²\n"),
                                                   encoding='utf-8')
        code, out, _ = self.run_cli('corpus', 'small')
        self.assertEqual(code, EXIT_FAILED)
        self.assertIn("0/1 benchmarks match", out)

    def test_corpus_missing_directory(self):
        """Test a directory without programs is an input error"""
        code, _, _ = self.run_cli('corpus', 'nowhere')
        self.assertEqual(code, EXIT_INPUT)

    def test_validate(self):
        """Test golden validation exit codes"""
        code, _, _ = self.run_cli('validate', 'corpus/append.golden.yaml')
        self.assertEqual(code, EXIT_OK)
        (self.temp_dir / 'bad.golden.yaml').write_text("benchmark: bad\n", encoding='utf-8')
        code, _, _ = self.run_cli('validate', 'bad.golden.yaml')
        self.assertEqual(code, EXIT_FAILED)
        code, _, _ = self.run_cli('validate', 'missing.golden.yaml')
        self.assertEqual(code, EXIT_INPUT)

    def test_normalize(self):
        """Test the normalized program is printed"""
        code, out, _ = self.run_cli('normalize', 'corpus/append.pl')
        self.assertEqual(code, EXIT_OK)
        self.assertIn("H1", out)

    def test_no_command(self):
        """Test a missing command prints help"""
        code, out, _ = self.run_cli()
        self.assertEqual(code, EXIT_INPUT)
        self.assertIn("usage", out)


if __name__ == '__main__':
    unittest.main()
