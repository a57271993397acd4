"""
sizedcost CLI - Main entrypoint

Dispatch-style CLI over the analyzer, the concrete oracle and the
benchmark corpus.

Usage:
    sizedcost analyze <file> [--format text|structured] [--strict] [--resource NAME]
    sizedcost check <file> [--budget N] [--samples N] [--seed N]
    sizedcost corpus [<dir>]
    sizedcost validate <golden.yaml>
    sizedcost normalize <file>

Exit codes: 0 success; 1 diagnostics under --strict, bound violations or
corpus mismatches; 2 input errors.
"""

import sys
import argparse
import json
from pathlib import Path
from typing import List, Optional

from . import __version__, SizedCostError
from .config import ConfigError, load_config
from .corpus import CorpusError, render_table, run_corpus
from .fixpoint import AnalysisError, AnalysisResult, analyze
from .frontend import FrontendError, Program, format_program, normalize_program, parse_program
from .logging import create_run_log
from .oracle import OracleError, check_entry
from .report import ReportError, build_report, render_equations, render_structured, render_text
from .resdomain import SOLUTIONS
from .utils import find_repo_root, read_text, write_text
from .validate import JSONSCHEMA_AVAILABLE, validate_golden_file

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2

INPUT_ERRORS = (FrontendError, AnalysisError, ReportError, CorpusError, ConfigError, OSError)


def _resolve(path: str, repo_root: Path) -> Path:
    """Paths are taken relative to the working directory, then to the repo root"""
    candidate = Path(path)
    if candidate.is_absolute() or candidate.exists():
        return candidate
    return repo_root / candidate


def _load_program(args, repo_root: Path, run_log) -> Program:
    """
    Raises:
        OSError: If the file cannot be read
        FrontendError: On syntax or declaration errors
    """
    path = _resolve(args.file, repo_root)
    run_log.add_input(path)
    return parse_program(read_text(path), path.name)


def _analyze(program: Program, config, run_log) -> AnalysisResult:
    resources = None if program.resources else [config.default_resource]
    result = analyze(program, resources=resources, settings=config.analysis_settings())
    run_log.record_analysis(result)
    return result


def _report_input_error(error: Exception, run_log) -> int:
    message = f"cannot read input: {error}" if isinstance(error, OSError) else str(error)
    print(f"✗ {message}", file=sys.stderr)
    run_log.failure(message)
    return EXIT_INPUT


def cmd_analyze(args, repo_root: Path, config, run_log) -> int:
    """Analyse a program and print or write its report"""
    try:
        program = _load_program(args, repo_root, run_log)
        result = _analyze(program, config, run_log)
        report = build_report(result, program.name, args.resource or None)
    except INPUT_ERRORS as e:
        return _report_input_error(e, run_log)

    if args.dump_equations:
        print(render_equations(result))

    if args.format == 'structured':
        text = render_structured(report)
    else:
        text = render_text(report)

    if args.output:
        output_path = Path(args.output)
        write_text(output_path, text)
        run_log.add_output(output_path)
        print(f"✓ Report written to {output_path}")
    else:
        print(text)

    if result.diagnostics:
        print(f"{len(result.diagnostics)} diagnostic(s)", file=sys.stderr)
        if args.strict:
            run_log.failure("Analysis produced diagnostics under --strict")
            return EXIT_FAILED

    run_log.success(f"Analysed {program.name}")
    return EXIT_OK


def cmd_check(args, repo_root: Path, config, run_log) -> int:
    """Run every entry version on random inputs and check its bounds"""
    budget = args.budget if args.budget is not None else config.check_budget
    samples = args.samples if args.samples is not None else config.check_samples
    seed = args.seed if args.seed is not None else config.check_seed
    try:
        program = _load_program(args, repo_root, run_log)
        result = _analyze(program, config, run_log)
    except INPUT_ERRORS as e:
        return _report_input_error(e, run_log)

    analysed = [d.name for d in result.resources]
    resources = args.resource or analysed
    unknown = [r for r in resources if r not in analysed]
    if unknown:
        return _report_input_error(ReportError(f"resource {', '.join(unknown)} was not analysed"), run_log)
    quantities = [SOLUTIONS, *resources]

    print(f"Checking {program.name}: budget {budget}, {samples} samples, seed {seed}")
    print()
    run_log.set_setting('budget', budget)
    run_log.set_setting('samples', samples)
    run_log.set_setting('seed', seed)

    failed = False
    for entry in result.entry_points():
        try:
            summary = check_entry(program, result, entry, budget, samples, seed,
                                  config.oracle_limits(), quantities)
        except OracleError as e:
            print(f"✗ {entry.version}: {e}", file=sys.stderr)
            run_log.add_error(str(e), entry.version)
            failed = True
            continue
        mark = "✓" if summary.failed == 0 else "✗"
        line = f"{mark} {entry.version}: {summary.passed}/{summary.runs} pass"
        if summary.diverged:
            line += f", {summary.diverged} diverged"
        print(line)
        for verdict in summary.failures[:5]:
            print(f"    {verdict.goal}")
            for violation in verdict.violations:
                print(f"      {violation}")
        if len(summary.failures) > 5:
            print(f"    ... and {len(summary.failures) - 5} more failing inputs")
        run_log.record_check(summary)
        failed = failed or summary.failed > 0

    print()
    if failed:
        run_log.failure("Bound violations found")
        return EXIT_FAILED
    run_log.success("All bounds hold")
    return EXIT_OK


def cmd_corpus(args, repo_root: Path, config, run_log) -> int:
    """Analyse every benchmark and compare with its golden orders"""
    directory = _resolve(args.dir, repo_root) if args.dir else repo_root / config.corpus_dir
    schema_path = repo_root / config.schema_dir / 'golden.schema.json'
    run_log.add_input(directory)
    try:
        with open(schema_path, 'r') as f:
            schema = json.load(f)
        rows = run_corpus(directory, schema, config.analysis_settings(), config.default_resource)
    except (CorpusError, ConfigError, OSError, json.JSONDecodeError) as e:
        return _report_input_error(e, run_log)

    print(render_table(rows))
    mismatched = [r.benchmark for r in rows if not r.matches]
    for row in rows:
        run_log.record_benchmark(row)
    if mismatched:
        run_log.failure(f"{len(mismatched)} benchmark(s) do not match their goldens")
        return EXIT_FAILED
    run_log.success(f"All {len(rows)} benchmarks match")
    return EXIT_OK


def cmd_validate(args, repo_root: Path, config, run_log) -> int:
    """Validate a golden sidecar against the golden schema"""
    file_path = _resolve(args.file, repo_root)
    schema_path = _resolve(args.schema, repo_root) if args.schema else \
        repo_root / config.schema_dir / 'golden.schema.json'
    run_log.add_input(file_path)
    run_log.add_input(schema_path)

    print(f"Validating: {file_path}")
    if not JSONSCHEMA_AVAILABLE:
        print("NOTE: jsonschema library not installed")
        print("      Performing basic structure validation only")
    print()

    result = validate_golden_file(file_path, schema_path)
    print(result.summary())

    if not file_path.exists() or not schema_path.exists():
        run_log.failure("Validation input missing")
        return EXIT_INPUT
    if result.valid:
        run_log.success("Validation passed")
        return EXIT_OK
    run_log.failure("Validation failed")
    return EXIT_FAILED


def cmd_normalize(args, repo_root: Path, config, run_log) -> int:
    """Print the normalized program"""
    try:
        program = _load_program(args, repo_root, run_log)
    except INPUT_ERRORS as e:
        return _report_input_error(e, run_log)
    print(format_program(normalize_program(program)))
    run_log.success(f"Normalized {program.name}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entrypoint"""
    if argv is None:
        argv = sys.argv[1:]

    repo_root = find_repo_root()

    try:
        config = load_config(repo_root)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT

    parser = argparse.ArgumentParser(
        description='sizedcost - resource bounds for small logic programs',
        prog='sizedcost'
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    # analyze command
    analyze_parser = subparsers.add_parser('analyze', help='Analyse a program')
    analyze_parser.add_argument('file', help='Program source file')
    analyze_parser.add_argument('--format', default='text', choices=['text', 'structured'],
                                help='Report format (default: text)')
    analyze_parser.add_argument('--output', help='Write the report to this file instead of stdout')
    analyze_parser.add_argument('--strict', action='store_true', help='Exit 1 if the analysis produced diagnostics')
    analyze_parser.add_argument('--resource', action='append', help='Only report this resource (repeatable)')
    analyze_parser.add_argument('--dump-equations', action='store_true',
                                help='Print the bound functions of every version before solving')

    # check command
    check_parser = subparsers.add_parser('check', help='Check inferred bounds on random inputs')
    check_parser.add_argument('file', help='Program source file')
    check_parser.add_argument('--budget', type=int, help='Per-argument size budget (default: config check.budget)')
    check_parser.add_argument('--samples', type=int, help='Inputs per entry (default: config check.samples)')
    check_parser.add_argument('--seed', type=int, help='Random seed (default: config check.seed)')
    check_parser.add_argument('--resource', action='append', help='Only check this resource (repeatable)')

    # corpus command
    corpus_parser = subparsers.add_parser('corpus', help='Run the benchmark corpus against its goldens')
    corpus_parser.add_argument('dir', nargs='?', help='Corpus directory (default: config corpus_dir)')

    # validate command
    validate_parser = subparsers.add_parser('validate', help='Validate a golden sidecar')
    validate_parser.add_argument('file', help='Golden YAML file')
    validate_parser.add_argument('--schema', help='Schema file (default: schema/golden.schema.json)')

    # normalize command
    normalize_parser = subparsers.add_parser('normalize', help='Print the normalized program')
    normalize_parser.add_argument('file', help='Program source file')

    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_INPUT

    run_log = create_run_log(repo_root, config.logs_dir, args.command, argv)

    handlers = {
        'analyze': cmd_analyze,
        'check': cmd_check,
        'corpus': cmd_corpus,
        'validate': cmd_validate,
        'normalize': cmd_normalize,
    }

    try:
        return handlers[args.command](args, repo_root, config, run_log)

    except SizedCostError as e:
        run_log.failure(str(e))
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INPUT

    except Exception as e:
        run_log.failure(f"Unexpected error: {e}")
        print(f"Unexpected error: {e}", file=sys.stderr)
        return EXIT_FAILED

    finally:
        # Always write log
        try:
            log_path = run_log.write()
            print(f"\nRun log: {log_path}")
        except OSError as e:
            print(f"Warning: cannot write run log: {e}", file=sys.stderr)


if __name__ == '__main__':
    sys.exit(main())
