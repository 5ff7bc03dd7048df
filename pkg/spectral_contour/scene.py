# scene.py

"""
Scene files: YAML documents validated by pydantic models.

Complex numbers are written as [re, im] pairs (or plain reals). Unknown
keys are rejected at every level; YAML syntax errors become ParseError with
a line number and schema errors become ValidationError listing every
problem.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator
from pydantic import ValidationError as PydanticValidationError

from .contour import ContourSpec
from .errors import ParseError, ValidationError
from .generators import Polynomial
from .settings import DEFAULT_TOLERANCES

logger = logging.getLogger(__name__)

COMMANDS = ('convexity', 'transforms', 'calculus', 'mapping', 'extremal', 'smooth', 'selftest')


def _to_complex(value):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex numbers are [re, im] pairs, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, bool):
        raise ValueError("expected a number or [re, im] pair")
    if isinstance(value, (int, float, complex)):
        return complex(value)
    raise ValueError(f"expected a number or [re, im] pair, got {value!r}")


Complex = Annotated[complex, BeforeValidator(_to_complex)]


class SceneModel(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class ContourBlock(SceneModel):
    family: Literal['circle', 'ellipse', 'star', 'fourier']
    center: Complex = 0j
    radius: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None
    base_radius: Optional[float] = None
    amplitude: Optional[float] = None
    lobes: Optional[int] = None
    # fourier: [[mode, re, im], ...]
    coefficients: Optional[List[List[float]]] = None

    @model_validator(mode='after')
    def _family_fields(self):
        required = {
            'circle': ('radius',),
            'ellipse': ('a', 'b'),
            'star': ('base_radius', 'amplitude', 'lobes'),
            'fourier': ('coefficients',),
        }[self.family]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.family} contour needs {', '.join(missing)}")
        if self.coefficients is not None and any(len(row) != 3 for row in self.coefficients):
            raise ValueError("fourier coefficients are [mode, re, im] triples")
        return self

    def to_spec(self, nodes: int) -> ContourSpec:
        if self.family == 'circle':
            return ContourSpec.circle(self.center, self.radius, nodes=nodes)
        if self.family == 'ellipse':
            return ContourSpec.ellipse(self.center, self.a, self.b, nodes=nodes)
        if self.family == 'star':
            return ContourSpec.star(self.base_radius, self.amplitude, self.lobes, nodes=nodes, center=self.center)
        modes = [int(row[0]) for row in self.coefficients]
        coeffs = [complex(row[1], row[2]) for row in self.coefficients]
        return ContourSpec.fourier(modes, coeffs, nodes=nodes)


class MatrixBlock(SceneModel):
    real: List[List[float]]
    imag: Optional[List[List[float]]] = None

    @model_validator(mode='after')
    def _square(self):
        n = len(self.real)
        if n == 0 or any(len(row) != n for row in self.real):
            raise ValueError(f"matrix must be square, got rows of lengths {[len(r) for r in self.real]}")
        if self.imag is not None and (len(self.imag) != n or any(len(row) != n for row in self.imag)):
            raise ValueError("matrix imag part must have the same shape as the real part")
        if not np.all(np.isfinite(self.array())):
            raise ValueError("matrix entries must be finite")
        return self

    def array(self) -> np.ndarray:
        M = np.asarray(self.real, dtype=float).astype(complex)
        if self.imag is not None:
            M = M + 1j * np.asarray(self.imag, dtype=float)
        return M


class FunctionBlock(SceneModel):
    # ascending powers of (z - center)
    coefficients: List[Complex] = Field(min_length=1)
    center: Complex = 0j

    def to_polynomial(self) -> Polynomial:
        return Polynomial(tuple(self.coefficients), self.center)


class EnsembleBlock(SceneModel):
    count: int = Field(ge=1)
    dims: List[int] = Field(min_length=1)
    degree: int = Field(ge=0, le=16)
    seed: int
    scale_fraction: float = Field(default=0.9, gt=0.0, le=1.0)
    # calculus only: cycled per trial, may straddle the critical size
    scale_fractions: List[float] = Field(default_factory=list)
    vanish_at_center: bool = False

    @model_validator(mode='after')
    def _dims(self):
        if any(d < 1 for d in self.dims):
            raise ValueError(f"ensemble dims must be positive, got {self.dims}")
        if any(s <= 0.0 for s in self.scale_fractions):
            raise ValueError(f"ensemble scale_fractions must be positive, got {self.scale_fractions}")
        return self

    def fractions(self) -> List[float]:
        return list(self.scale_fractions) or [self.scale_fraction]


class ExtremalBlock(SceneModel):
    degree: int = Field(default=3, ge=0, le=16)
    restarts: int = Field(default=8, ge=1)
    config_degree: Optional[int] = Field(default=None, ge=0, le=16)
    config_samples: int = Field(default=200, ge=1)


class SmoothingBlock(SceneModel):
    points: List[Complex] = Field(min_length=1)
    hull: bool = False
    epsilon: float = Field(gt=0.0)
    levels: int = Field(ge=1)
    h: float = Field(gt=0.0)
    modes: int = Field(default=32, ge=4)
    nodes: int = 256
    kappa: Optional[float] = None


class Scene(SceneModel):
    """A validated scene document."""
    contour: Optional[ContourBlock] = None
    nodes: Optional[int] = None
    seed: Optional[int] = None
    jobs: Optional[int] = None
    matrix: Optional[MatrixBlock] = None
    functions: List[FunctionBlock] = Field(default_factory=list)
    ensemble: Optional[EnsembleBlock] = None
    extremal: Optional[ExtremalBlock] = None
    smoothing: Optional[SmoothingBlock] = None
    tolerances: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode='after')
    def _known_tolerances(self):
        unknown = sorted(set(self.tolerances) - set(DEFAULT_TOLERANCES))
        if unknown:
            raise ValueError(f"unknown tolerances: {unknown}")
        return self

    @property
    def digest(self) -> str:
        """sha256 of the canonical JSON form of the scene."""
        body = json.dumps(self.model_dump(mode='json'), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(body.encode('utf-8')).hexdigest()

    def polynomials(self) -> List[Polynomial]:
        return [block.to_polynomial() for block in self.functions]

    def settings_layer(self) -> Dict[str, object]:
        return {'nodes': self.nodes, 'seed': self.seed, 'n_jobs': self.jobs}

    def require(self, command: str, seed: Optional[int] = None) -> None:
        """
        Check that the blocks ``command`` needs are present.

        ``seed`` is a seed supplied outside the scene (the command line).

        Raises:
            ValidationError: Listing every missing block
        """
        needs = {
            'convexity': ('contour',),
            'transforms': ('contour',),
            'calculus': ('contour', 'matrix'),
            'mapping': ('contour', 'ensemble'),
            'extremal': ('contour', 'matrix', 'seed'),
            'smooth': ('smoothing',),
            'selftest': (),
        }
        if command not in needs:
            raise ValidationError(f"Unknown command: {command}", problems=[f"command: one of {list(COMMANDS)}"])
        present = {name: getattr(self, name) is not None for name in needs[command]}
        if command == 'calculus':
            # a random-matrix ensemble stands in for the scene matrix
            present['matrix'] = present['matrix'] or self.ensemble is not None
        if 'seed' in present:
            present['seed'] = present['seed'] or seed is not None
        problems = [f"{name}: required by '{command}'" for name, ok in present.items() if not ok]
        if problems:
            raise ValidationError(f"Scene is missing blocks for '{command}'", problems=problems)


def _problems(exc: PydanticValidationError) -> List[str]:
    return [f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors()]


def scene_from_dict(data: Union[dict, None]) -> Scene:
    """
    Validate a parsed scene mapping.

    Raises:
        ValidationError: Listing every violated field or invariant
    """
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValidationError("Scene document must be a mapping", problems=['<root>: expected a mapping'])
    try:
        return Scene.model_validate(data)
    except PydanticValidationError as exc:
        problems = _problems(exc)
        raise ValidationError(f"Invalid scene: {len(problems)} problem(s)", problems=problems) from exc


def parse_scene(path) -> Scene:
    """
    Read and validate a YAML scene file.

    Raises:
        ParseError: If the file is missing or not well-formed YAML (with line number)
        ValidationError: If the document violates the scene schema
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ParseError(f"Cannot read scene file {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, 'problem_mark', None)
        line = mark.line + 1 if mark is not None else None
        raise ParseError(f"Malformed scene file {path}" + (f" at line {line}" if line else ""), line=line) from exc
    scene = scene_from_dict(data)
    logger.info(f"Loaded scene {path.name} (digest {scene.digest[:12]})")
    return scene
