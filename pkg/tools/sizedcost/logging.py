"""
Run logs for sizedcost

Every CLI command writes one JSON log to logs/runs/
Format: logs/runs/YYYY-MM-DD/HHMMSS_<command>.json

A log holds one record per analysed version, per checked entry version
or per benchmark, plus the analysis diagnostics by kind. The bounds
themselves belong in the reports.
"""

import json
from collections import Counter
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional
import time

if TYPE_CHECKING:
    from .corpus import BenchmarkRow
    from .fixpoint import AnalysisResult, Diagnostic
    from .oracle import CheckSummary


class RunLog:
    """Structured log of one analyzer run"""

    def __init__(self, repo_root: Path, logs_dir: str, command: str, args: List[str]):
        self.repo_root = repo_root
        self.logs_dir = repo_root / logs_dir
        self.command = command
        self.start_time = time.time()
        self.timestamp = datetime.now(timezone.utc)

        self.data: Dict[str, Any] = {
            'timestamp': self.timestamp.isoformat(),
            'command': command,
            'args': args,
            'inputs': [],
            'outputs': [],
            'settings': {},
            'versions': [],
            'checks': [],
            'benchmarks': [],
            'diagnostics': [],
            'errors': [],
            'outcome': 'pending',
            'message': None,
            'duration_ms': 0,
        }

    def _relative(self, path: Path) -> str:
        try:
            return str(path.resolve().relative_to(self.repo_root.resolve()))
        except ValueError:
            return str(path)

    def add_input(self, path: Path) -> None:
        """Record a program, golden, schema or corpus directory that was read"""
        rel_path = self._relative(path)
        if rel_path not in self.data['inputs']:
            self.data['inputs'].append(rel_path)

    def add_output(self, path: Path) -> None:
        rel_path = self._relative(path)
        if rel_path not in self.data['outputs']:
            self.data['outputs'].append(rel_path)

    def set_setting(self, key: str, value: Any) -> None:
        self.data['settings'][key] = value

    def record_analysis(self, result: 'AnalysisResult') -> None:
        """One record per version, then every diagnostic of the analysis"""
        for entry in result.entries:
            name, arity = entry.indicator
            self.data['versions'].append({
                'version': entry.version,
                'predicate': f"{name}/{arity}",
                'entry': entry.entry,
                'nf': entry.nf,
                'det': entry.det,
                'iterations': entry.iterations,
                'imprecise': sorted(fn for fn, form in entry.forms.items() if form.imprecise),
            })
        for diagnostic in result.diagnostics:
            self.add_diagnostic(diagnostic)

    def add_diagnostic(self, diagnostic: 'Diagnostic', benchmark: Optional[str] = None) -> None:
        record = {'kind': diagnostic.kind, 'version': diagnostic.version, 'message': diagnostic.message}
        if benchmark is not None:
            record['benchmark'] = benchmark
        self.data['diagnostics'].append(record)

    def record_check(self, summary: 'CheckSummary') -> None:
        self.data['checks'].append({
            'version': summary.version,
            'runs': summary.runs,
            'passed': summary.passed,
            'failed': summary.failed,
            'diverged': summary.diverged,
        })

    def record_benchmark(self, row: 'BenchmarkRow') -> None:
        self.data['benchmarks'].append({
            'benchmark': row.benchmark,
            'entry': row.entry,
            'matches': row.matches,
            'mismatches': list(row.mismatches),
            'diagnostics': len(row.diagnostics),
            'error': row.error,
        })

    def add_error(self, message: str, version: Optional[str] = None) -> None:
        record = {'timestamp': datetime.now(timezone.utc).isoformat(), 'message': message}
        if version is not None:
            record['version'] = version
        self.data['errors'].append(record)

    def diagnostic_counts(self) -> Dict[str, int]:
        return dict(Counter(d['kind'] for d in self.data['diagnostics']))

    def success(self, message: Optional[str] = None) -> None:
        self.data['outcome'] = 'success'
        self.data['message'] = message

    def failure(self, message: Optional[str] = None) -> None:
        self.data['outcome'] = 'failure'
        self.data['message'] = message
        if message:
            self.add_error(message)

    def write(self) -> Path:
        """Write the log and return its path"""
        self.data['duration_ms'] = int((time.time() - self.start_time) * 1000)
        self.data['diagnostic_counts'] = self.diagnostic_counts()

        date_dir = self.logs_dir / self.timestamp.strftime('%Y-%m-%d')
        date_dir.mkdir(parents=True, exist_ok=True)
        log_path = date_dir / f"{self.timestamp.strftime('%H%M%S')}_{self.command}.json"

        with open(log_path, 'w') as f:
            json.dump(self.data, f, indent=2, default=str)
        return log_path


def create_run_log(repo_root: Path, logs_dir: str, command: str, args: List[str]) -> RunLog:
    return RunLog(repo_root, logs_dir, command, args)
