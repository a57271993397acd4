"""
Test configuration loading.

Tests ensure that config.py correctly:
- Falls back to defaults when config.json is absent
- Reads analysis, oracle and check settings
- Builds the default resource and rejects bad ones
"""

import unittest
import json
import tempfile
import shutil
from pathlib import Path

# Add parent to path
import sys
sys.path.insert(0, str(Path(__file__).parent.parent))

from tools.sizedcost.config import Config, ConfigError, load_config
from tools.sizedcost.symexpr import INF


class TestConfig(unittest.TestCase):
    """Test config.json handling"""

    def setUp(self):
        """Set up test fixtures"""
        self.temp_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        """Clean up temp directory"""
        shutil.rmtree(self.temp_dir)

    def write(self, data):
        (self.temp_dir / 'config.json').write_text(json.dumps(data), encoding='utf-8')
        return load_config(self.temp_dir)

    def test_defaults(self):
        """Test a missing file gives the defaults"""
        config = load_config(self.temp_dir)
        self.assertEqual(config.corpus_dir, 'corpus')
        self.assertEqual(config.logs_dir, 'logs/runs')
        self.assertEqual(config.iteration_cap, 50)
        self.assertEqual(config.check_budget, 8)
        self.assertEqual(config.default_resource.name, 'steps')
        self.assertEqual(config.default_resource.headcost, 1)

    def test_sections(self):
        """Test every section is read"""
        config = self.write({
            'analysis': {'iteration_cap': 7, 'unroll_depth': 300},
            'oracle': {'step_limit': 99, 'depth_limit': 12},
            'check': {'budget': 3, 'samples': 5, 'seed': 11},
            'logs': {'runs_dir': 'out/logs'},
        })
        self.assertEqual(config.analysis_settings().iteration_cap, 7)
        self.assertEqual(config.analysis_settings().solver.depth_limit, 300)
        self.assertEqual(config.oracle_limits().step_limit, 99)
        self.assertEqual(config.oracle_limits().depth_limit, 12)
        self.assertEqual((config.check_budget, config.check_samples, config.check_seed), (3, 5, 11))
        self.assertEqual(config.logs_dir, 'out/logs')

    def test_default_resource(self):
        """Test the default resource options"""
        config = self.write({'resources': {'default': {'name': 'calls', 'headcost': 0, 'litcost': 1,
                                                       'default': [0, INF], 'ops': ['*']}}})
        rdef = config.default_resource
        self.assertEqual(rdef.name, 'calls')
        self.assertEqual(rdef.litcost, 1)
        self.assertEqual(rdef.default, (0, INF))
        self.assertEqual(rdef.ops, ('*',))

    def test_bad_resource(self):
        """Test unknown resource options raise ConfigError"""
        config = self.write({'resources': {'default': {'name': 'steps', 'colour': 'red'}}})
        with self.assertRaises(ConfigError):
            config.default_resource

    def test_invalid_json(self):
        """Test a malformed config.json raises ConfigError"""
        (self.temp_dir / 'config.json').write_text('{"analysis": }', encoding='utf-8')
        with self.assertRaises(ConfigError):
            load_config(self.temp_dir)

    def test_missing_file_explicit(self):
        """Test an explicit path that does not exist raises ConfigError"""
        with self.assertRaises(ConfigError):
            Config(self.temp_dir / 'nowhere.json')

    def test_repo_config(self):
        """Test the repository's own config.json loads"""
        config = load_config(Path(__file__).parent.parent)
        self.assertEqual(config.corpus_dir, 'corpus')
        self.assertEqual(config.default_resource.name, 'steps')


if __name__ == '__main__':
    unittest.main()
