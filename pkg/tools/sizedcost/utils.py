"""
Utility functions for the sizedcost CLI

Common helper functions used across CLI commands.
"""

from pathlib import Path
from typing import List, Optional

import yaml


def find_repo_root(start: Optional[Path] = None) -> Path:
    """
    Find the repository root.
    Walks up from the current directory to the first directory holding
    config.json and a corpus/ directory.
    """
    current = start or Path.cwd()
    for candidate in [current, *current.parents]:
        if (candidate / 'config.json').exists() and (candidate / 'corpus').is_dir():
            return candidate

    # Fallback to current directory
    return current


def read_text(file_path: Path) -> str:
    with open(file_path, 'r', encoding='utf-8') as f:
        return f.read()


def read_yaml(file_path: Path) -> dict:
    """Read and parse a YAML file"""
    with open(file_path, 'r', encoding='utf-8') as f:
        return yaml.safe_load(f)


def write_text(file_path: Path, text: str) -> None:
    ensure_dir(file_path.parent)
    with open(file_path, 'w', encoding='utf-8') as f:
        f.write(text)


def ensure_dir(directory: Path) -> None:
    """Ensure directory exists, creating it if necessary"""
    directory.mkdir(parents=True, exist_ok=True)


def list_programs(directory: Path) -> List[Path]:
    """Benchmark programs of a corpus directory, sorted by name"""
    if not directory.is_dir():
        return []
    return sorted(directory.glob('*.pl'))
