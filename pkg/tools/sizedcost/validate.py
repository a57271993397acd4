"""
Golden sidecar validation for sizedcost

Golden files are YAML; they are checked against schema/golden.schema.json
with the jsonschema library (Draft-07). Falls back to basic validation if
jsonschema is not installed.

Validates:
- File is valid YAML holding a mapping
- Data conforms to the golden schema
- Required top-level keys are present (basic mode)
"""

from pathlib import Path
from typing import Any, Dict, List
import json

import yaml

from .utils import read_yaml

try:
    import jsonschema
    from jsonschema import Draft7Validator
    JSONSCHEMA_AVAILABLE = True
except ImportError:
    jsonschema = None
    JSONSCHEMA_AVAILABLE = False


GOLDEN_SCHEMA = 'golden.schema.json'
REQUIRED_KEYS = ['benchmark', 'entry', 'resource', 'lower', 'upper']


class ValidationResult:
    """Result of validation check"""

    def __init__(self, valid: bool, errors: List[str], warnings: List[str]):
        self.valid = valid
        self.errors = errors
        self.warnings = warnings

    def __bool__(self) -> bool:
        return self.valid

    def summary(self) -> str:
        """Generate validation summary"""
        lines = []

        if self.valid:
            lines.append("✓ Validation PASSED")
        else:
            lines.append("✗ Validation FAILED")

        if self.errors:
            lines.append("\nErrors:")
            for error in self.errors:
                lines.append(f"  - {error}")

        if self.warnings:
            lines.append("\nWarnings:")
            for warning in self.warnings:
                lines.append(f"  - {warning}")

        return "\n".join(lines)


def validate_golden_basic(data: Dict[str, Any]) -> ValidationResult:
    """
    Basic validation for a golden sidecar.

    Note: This is NOT full JSON Schema validation.
    """
    errors = []
    warnings = []

    for key in REQUIRED_KEYS:
        if key not in data:
            errors.append(f"Missing required field: {key}")
        elif not isinstance(data[key], str):
            errors.append(f"Field '{key}' must be a string")

    if 'forms' in data and not isinstance(data['forms'], dict):
        errors.append("Field 'forms' must be an object")

    if 'description' not in data:
        warnings.append("Recommended field 'description' is missing")

    return ValidationResult(len(errors) == 0, errors, warnings)


def validate_golden_data(data: Any, schema: Dict[str, Any]) -> ValidationResult:
    """Validate loaded golden data against the schema"""
    errors = []
    warnings = []

    if not isinstance(data, dict):
        errors.append("Golden file must hold a mapping")
        return ValidationResult(False, errors, warnings)

    if not JSONSCHEMA_AVAILABLE:
        result = validate_golden_basic(data)
        result.warnings.append("jsonschema library not installed - performing basic validation only")
        return result

    validator = Draft7Validator(schema)
    for error in sorted(validator.iter_errors(data), key=lambda e: list(e.path)):
        path = '.'.join(str(p) for p in error.path) if error.path else 'root'
        errors.append(f"{path}: {error.message}")
    return ValidationResult(len(errors) == 0, errors, warnings)


def validate_golden_file(file_path: Path, schema_path: Path) -> ValidationResult:
    """Validate a golden YAML sidecar against the golden schema"""
    errors = []
    warnings = []

    if not file_path.exists():
        errors.append(f"File does not exist: {file_path}")
        return ValidationResult(False, errors, warnings)

    try:
        data = read_yaml(file_path)
    except yaml.YAMLError as e:
        errors.append(f"Invalid YAML: {e}")
        return ValidationResult(False, errors, warnings)
    except IOError as e:
        errors.append(f"Cannot read file: {e}")
        return ValidationResult(False, errors, warnings)

    if not schema_path.exists():
        errors.append(f"Schema file not found: {schema_path}")
        return ValidationResult(False, errors, warnings)

    try:
        with open(schema_path, 'r') as f:
            schema = json.load(f)
    except json.JSONDecodeError as e:
        errors.append(f"Schema file is not valid JSON: {e}")
        return ValidationResult(False, errors, warnings)

    return validate_golden_data(data, schema)
