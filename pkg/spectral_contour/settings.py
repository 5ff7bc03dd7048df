# settings.py

"""
Defaults table and run settings.

Tolerances live in one place so every report can echo the values it was
checked against. Environment variables (optionally from a .env file) supply
run defaults; the CLI and scene files override them.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Mapping, Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()

# Named tolerances used by the numerical checks
DEFAULT_TOLERANCES: Dict[str, float] = {
    # linalg
    'lu_pivot': 1e-13,
    'hermitian': 1e-12,
    'jacobi_offdiag': 1e-12,
    'power_iteration': 1e-12,
    # contour / cauchy
    'integer_count': 1e-6,
    'plemelj': 1e-6,
    # dlayer
    'row_sum': 5e-8,
    'partition_of_unity': 1e-8,
    'np_norm': 1e-6,
    'kernel_sign': 1e-8,
    'curvature_sign': 1e-8,
    'disk_collapse': 1e-8,
    'antianalytic': 1e-6,
    'inverse_norm': 1e-2,
    # calculus
    'total_mass': 1e-8,
    'decomposition': 1e-7,
    'inclusion_eig': 1e-8,
    'support': 1e-6,
    'sym_norm': 1e-6,
    # mapping / extremal
    'unit_sup': 1e-9,
    'mapping': 1e-6,
    'bound': 1e-6,
    'crouzeix_absolute': 9.08,
    'config_ceiling': 1e-6,
    # smoothing
    'homomorphism': 1e-6,
    'fit_curvature': 1e-6,
}

DEFAULT_NODES = 256
DEFAULT_SEED = 0
DEFAULT_JOBS = 1
DEFAULT_LOG_LEVEL = 'INFO'


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring non-integer {name}={raw!r}, using {default}")
        return default


def env_defaults() -> Dict[str, object]:
    """Read run defaults from SPECTRAL_CONTOUR_* environment variables."""
    return {
        'nodes': _env_int('SPECTRAL_CONTOUR_NODES', DEFAULT_NODES),
        'seed': _env_int('SPECTRAL_CONTOUR_SEED', DEFAULT_SEED),
        'n_jobs': _env_int('SPECTRAL_CONTOUR_JOBS', DEFAULT_JOBS),
        'log_level': os.getenv('SPECTRAL_CONTOUR_LOG_LEVEL', DEFAULT_LOG_LEVEL).upper(),
    }


def merge_tolerances(overrides: Optional[Mapping[str, float]] = None) -> Dict[str, float]:
    """
    Return the defaults table with scene overrides applied.

    Raises:
        KeyError: If an override names an unknown tolerance
    """
    merged = dict(DEFAULT_TOLERANCES)
    for name, value in (overrides or {}).items():
        if name not in DEFAULT_TOLERANCES:
            raise KeyError(f"Unknown tolerance: {name}. Available: {sorted(DEFAULT_TOLERANCES)}")
        merged[name] = float(value)
    return merged


def tolerance(name: str, tolerances: Optional[Mapping[str, float]] = None) -> float:
    """Look up ``name`` in a resolved table, or in the defaults when none is given."""
    table = DEFAULT_TOLERANCES if tolerances is None else tolerances
    return float(table[name])


@dataclass(frozen=True)
class RunSettings:
    """Effective settings for one command run."""
    nodes: int = DEFAULT_NODES
    seed: int = DEFAULT_SEED
    n_jobs: int = DEFAULT_JOBS
    out_dir: Path = Path('.')
    write_csv: bool = False
    log_level: str = DEFAULT_LOG_LEVEL
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def tol(self, name: str) -> float:
        return self.tolerances[name]


def resolve_settings(
    cli: Optional[Mapping[str, object]] = None,
    scene: Optional[Mapping[str, object]] = None,
    tolerance_overrides: Optional[Mapping[str, float]] = None,
) -> RunSettings:
    """
    Build RunSettings with precedence CLI flag > scene file > environment > default.

    Args:
        cli: Values given on the command line (None entries are ignored)
        scene: Values taken from the scene file (None entries are ignored)
        tolerance_overrides: Scene ``tolerances:`` block

    Returns:
        Frozen RunSettings
    """
    values: Dict[str, object] = env_defaults()
    for layer in (scene or {}, cli or {}):
        for key, value in layer.items():
            if value is not None:
                values[key] = value

    settings = RunSettings(
        nodes=int(values['nodes']),
        seed=int(values['seed']),
        n_jobs=int(values['n_jobs']),
        log_level=str(values['log_level']).upper(),
        tolerances=merge_tolerances(tolerance_overrides),
    )
    if 'out_dir' in values:
        settings = replace(settings, out_dir=Path(str(values['out_dir'])))
    if 'write_csv' in values:
        settings = replace(settings, write_csv=bool(values['write_csv']))
    logger.debug(f"Resolved settings: nodes={settings.nodes} seed={settings.seed} n_jobs={settings.n_jobs}")
    return settings
