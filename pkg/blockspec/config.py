"""
Run configuration: one strict JSON document per run.

    {
      "alpha": [0.3, 0.7],
      "g": [[1, 2], [3, 4]],
      "distribution": "complex-gaussian",
      "N": 1000,
      "trials": 20,
      "seed": 0,
      "grid_points": 513,
      "bins": 50,
      "solver": {"tol": 1e-12, "t_min": 1e-6},
      "output_path": "-"
    }

Only `alpha` and `g` are required. Unknown keys, at the top level or inside
`solver`, are rejected.
"""

import dataclasses
import json
import math
import typing as t
from dataclasses import dataclass, field

from .block_model import BlockStructure, EntryLaw, validate
from .density import DEFAULT_GRID_POINTS, MIN_GRID_POINTS
from .errors import (
    InvalidAlpha,
    InvalidD,
    InvalidG,
    InvalidSolverParams,
    ParseError,
    ValidationError,
)
from .montecarlo import DEFAULT_BINS, MIN_N
from .stieltjes_solver import SolverParams

__all__ = ["RunConfig", "parse_config"]

MAX_SEED = 2**64

_SOLVER_FIELDS: dict[str, type] = {
    "tol": float,
    "max_iter": int,
    "damping": float,
    "t0": float,
    "t_min": float,
    "vanish_threshold": float,
}


@dataclass(frozen=True, slots=True)
class RunConfig:
    """Everything a CLI run needs, with the documented defaults."""

    structure: BlockStructure
    N: int = 1000
    trials: int = 20
    seed: int = 0
    grid_points: int = DEFAULT_GRID_POINTS
    bins: int = DEFAULT_BINS
    solver: SolverParams = field(default_factory=SolverParams)

    output_path: str = "-"
    """Destination file for the command's output; "-" is stdout."""

    def __post_init__(self):
        _check_int("N", self.N, minimum=max(MIN_N, self.structure.D))
        _check_int("trials", self.trials, minimum=1)
        _check_int("seed", self.seed, minimum=0)
        if self.seed >= MAX_SEED:
            raise ValidationError("seed", f"must be below 2**64, got {self.seed}")
        _check_int("grid_points", self.grid_points, minimum=MIN_GRID_POINTS)
        _check_int("bins", self.bins, minimum=1)
        if not self.output_path:
            raise ValidationError("output_path", "must not be empty")

    def with_overrides(self, **overrides: object) -> t.Self:
        """A copy with the given fields replaced; `None` values are ignored."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        return dataclasses.replace(self, **changes)


def _check_int(name: str, value: object, *, minimum: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(name, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ValidationError(name, f"must be at least {minimum}, got {value}")


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _number_list(name: str, value: object) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ValidationError(name, "expected a non-empty list of numbers")
    if not all(_is_number(item) and math.isfinite(item) for item in value):
        raise ValidationError(name, "expected a list of finite numbers")
    return [float(item) for item in value]


def _reject_duplicates(pairs: list[tuple[str, object]]) -> dict[str, object]:
    result: dict[str, object] = {}
    for key, value in pairs:
        if key in result:
            raise ValidationError(key, "duplicate key")
        result[key] = value
    return result


def _reject_unknown(obj: dict[str, object], known: t.Iterable[str], prefix: str = "") -> None:
    for key in obj:
        if key not in known:
            raise ValidationError(f"{prefix}{key}", "unknown key")


def _parse_structure(document: dict[str, object]) -> BlockStructure:
    for required in ("alpha", "g"):
        if required not in document:
            raise ValidationError(required, "required")
    alpha = _number_list("alpha", document["alpha"])
    rows = document["g"]
    if not isinstance(rows, list) or not rows:
        raise ValidationError("g", "expected a non-empty list of rows")
    g = [_number_list(f"g[{c}]", row) for c, row in enumerate(rows)]
    distribution = document.get("distribution", EntryLaw.COMPLEX_GAUSSIAN.value)
    try:
        law = EntryLaw(distribution)
    except ValueError:
        choices = ", ".join(law.value for law in EntryLaw)
        raise ValidationError(
            "distribution", f"expected one of {choices}, got {distribution!r}"
        ) from None
    structure = BlockStructure(
        alpha=tuple(alpha),
        g=tuple(tuple(row) for row in g),
        distribution=law,
    )
    try:
        validate(structure)
    except (InvalidAlpha, InvalidD) as exc:
        raise ValidationError("alpha", str(exc)) from exc
    except InvalidG as exc:
        raise ValidationError("g", str(exc)) from exc
    return structure


def _parse_solver(value: object) -> SolverParams:
    if not isinstance(value, dict):
        raise ValidationError("solver", "expected an object")
    _reject_unknown(value, _SOLVER_FIELDS, prefix="solver.")
    kwargs: dict[str, t.Any] = {}
    for key, kind in _SOLVER_FIELDS.items():
        if key not in value:
            continue
        item = value[key]
        if kind is int and not (isinstance(item, int) and not isinstance(item, bool)):
            raise ValidationError(f"solver.{key}", f"expected an integer, got {item!r}")
        if kind is float and not (_is_number(item) and math.isfinite(item)):
            raise ValidationError(f"solver.{key}", f"expected a finite number, got {item!r}")
        kwargs[key] = kind(item)
    try:
        return SolverParams(**kwargs)
    except InvalidSolverParams as exc:
        raise ValidationError("solver", str(exc)) from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        document = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    if not isinstance(document, dict):
        raise ValidationError("<root>", "expected a JSON object")

    known = {f.name for f in dataclasses.fields(RunConfig)} - {"structure"}
    _reject_unknown(document, known | {"alpha", "g", "distribution"})

    structure = _parse_structure(document)
    kwargs: dict[str, t.Any] = {
        key: document[key]
        for key in ("N", "trials", "seed", "grid_points", "bins", "output_path")
        if key in document
    }
    if "output_path" in kwargs and not isinstance(kwargs["output_path"], str):
        raise ValidationError("output_path", "expected a string")
    if "solver" in document:
        kwargs["solver"] = _parse_solver(document["solver"])
    return RunConfig(structure=structure, **kwargs)
