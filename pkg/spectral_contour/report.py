# report.py

"""
Run reports: one record per asserted or reported check, written as indented
JSON with a stable key order.
"""

import json
import logging
import math
import os
import platform
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """Convert numpy scalars, complex numbers and non-finite floats to JSON values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [_plain(float(value.real)), _plain(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


@dataclass
class CheckRecord:
    """
    One check. ``kind`` is 'assert' (counts toward pass/fail) or 'report'.

    For asserts, ``tolerance`` is the allowance the value was compared with;
    ``error`` names the exception class when the check could not complete.
    """
    name: str
    value: Any = None
    tolerance: Optional[float] = None
    passed: bool = True
    kind: str = 'assert'
    error: Optional[str] = None
    message: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'kind': self.kind,
            'value': _plain(self.value),
            'tolerance': _plain(self.tolerance),
            'passed': self.passed,
            'error': self.error,
            'message': self.message,
        }


@dataclass
class Report:
    command: str
    scene_digest: Optional[str]
    environment: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    checks: List[CheckRecord] = field(default_factory=list)
    results: Dict[str, Any] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)
    timing: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check_at_most(self, name: str, value: float, limit: float, tolerance: float) -> CheckRecord:
        """Assert value <= limit + tolerance."""
        ok = bool(np.isfinite(value) and value <= limit + tolerance)
        return self.add(CheckRecord(name=name, value=value, tolerance=tolerance, passed=ok,
                                    message=f"<= {limit:.17g}"))

    def check_at_least(self, name: str, value: float, limit: float, tolerance: float) -> CheckRecord:
        """Assert value >= limit - tolerance."""
        ok = bool(np.isfinite(value) and value >= limit - tolerance)
        return self.add(CheckRecord(name=name, value=value, tolerance=tolerance, passed=ok,
                                    message=f">= {limit:.17g}"))

    def check_close(self, name: str, value: float, target: float, tolerance: float) -> CheckRecord:
        ok = bool(np.isfinite(value) and abs(value - target) <= tolerance)
        return self.add(CheckRecord(name=name, value=value, tolerance=tolerance, passed=ok,
                                    message=f"== {target:.17g}"))

    def check_true(self, name: str, ok: bool, value: Any = None) -> CheckRecord:
        return self.add(CheckRecord(name=name, value=value if value is not None else bool(ok), passed=bool(ok)))

    def note(self, name: str, value: Any) -> CheckRecord:
        """Reported value, never asserted."""
        return self.add(CheckRecord(name=name, value=value, tolerance=None, passed=True, kind='report'))

    def fail(self, name: str, exc: BaseException) -> CheckRecord:
        return self.add(CheckRecord(name=name, passed=False, error=type(exc).__name__, message=str(exc)))

    def add(self, record: CheckRecord) -> CheckRecord:
        self.checks.append(record)
        if not record.passed:
            logger.warning(f"Check failed: {record.name} ({record.error or record.message})")
        return record

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        body = {
            'command': self.command,
            'scene_digest': self.scene_digest,
            'passed': self.passed,
            'environment': _plain(self.environment),
            'tolerances': _plain(dict(sorted(self.tolerances.items()))),
            'checks': [c.to_dict() for c in self.checks],
            'results': _plain(self.results),
            'artifacts': list(self.artifacts),
        }
        if include_timing:
            body['timing'] = _plain(self.timing)
        return body

    def body_json(self) -> str:
        """Report body without timing; identical for identical runs."""
        return json.dumps(self.to_dict(include_timing=False), indent=2)


def environment_info(nodes: int, seed: int, n_jobs: int) -> Dict[str, Any]:
    return {
        'nodes': nodes,
        'seed': seed,
        'n_jobs': n_jobs,
        'numpy': np.__version__,
        'python': platform.python_version(),
    }


def write_report(report: Report, path: Path) -> Path:
    """Write the report atomically: temp file in the same directory, then os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f'.{path.name}.', dir=path.parent)
    try:
        with os.fdopen(fd, 'w') as f:
            json.dump(report.to_dict(), f, indent=2)
            f.write('\n')
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.info(f"Report written to {path}")
    return path
