"""
Configuration loader for sizedcost

Reads config.json from repo root and provides typed access to settings.
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional

from . import SizedCostError
from .fixpoint import AnalysisSettings
from .oracle import OracleLimits
from .recurrence import SolverSettings
from .resdomain import DomainError, ResourceDef


class ConfigError(SizedCostError):
    """Missing or malformed configuration"""
    pass


class Config:
    """sizedcost configuration"""

    def __init__(self, config_path: Path, data: Optional[Dict[str, Any]] = None):
        """Load configuration from JSON file, or use the given data"""
        self.config_path = config_path
        self.data = data if data is not None else self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load and parse config.json"""
        if not self.config_path.exists():
            raise ConfigError(f"Config file not found: {self.config_path}")
        try:
            with open(self.config_path, 'r') as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in {self.config_path}: {e}")

    def _section(self, name: str) -> Dict[str, Any]:
        return self.data.get(name, {})

    @property
    def version(self) -> str:
        return self.data.get('version', '0.3.0')

    @property
    def corpus_dir(self) -> str:
        return self.data.get('corpus_dir', 'corpus')

    @property
    def schema_dir(self) -> str:
        return self.data.get('schema_dir', 'schema')

    @property
    def reports_dir(self) -> str:
        return self.data.get('reports_dir', 'reports')

    @property
    def logs_dir(self) -> str:
        return self._section('logs').get('runs_dir', 'logs/runs')

    @property
    def iteration_cap(self) -> int:
        return int(self._section('analysis').get('iteration_cap', 50))

    @property
    def unroll_depth(self) -> int:
        return int(self._section('analysis').get('unroll_depth', 10000))

    @property
    def step_limit(self) -> int:
        return int(self._section('oracle').get('step_limit', 1000000))

    @property
    def depth_limit(self) -> int:
        return int(self._section('oracle').get('depth_limit', 5000))

    @property
    def check_budget(self) -> int:
        return int(self._section('check').get('budget', 8))

    @property
    def check_samples(self) -> int:
        return int(self._section('check').get('samples', 100))

    @property
    def check_seed(self) -> int:
        return int(self._section('check').get('seed', 0))

    @property
    def default_resource(self) -> ResourceDef:
        spec = dict(self._section('resources').get('default', {'name': 'steps'}))
        try:
            name = spec.pop('name', 'steps')
            if 'default' in spec:
                spec['default'] = tuple(spec['default'])
            if 'ops' in spec:
                spec['ops'] = tuple(spec['ops'])
            return ResourceDef(name, **spec)
        except (TypeError, DomainError) as e:
            raise ConfigError(f"Invalid resources.default in {self.config_path}: {e}")

    def analysis_settings(self) -> AnalysisSettings:
        return AnalysisSettings(iteration_cap=self.iteration_cap,
                                solver=SolverSettings(depth_limit=self.unroll_depth))

    def oracle_limits(self) -> OracleLimits:
        return OracleLimits(step_limit=self.step_limit, depth_limit=self.depth_limit)


def load_config(repo_root: Path) -> Config:
    """Load config from repo root; defaults when the file is absent"""
    config_path = repo_root / 'config.json'
    if not config_path.exists():
        return Config(config_path, {})
    return Config(config_path)
