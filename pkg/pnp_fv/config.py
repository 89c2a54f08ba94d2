"""
Experiment configuration files.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Final, Mapping, cast

from .errors import ConfigurationError
from .problem import ProblemSpec
from .solver import NewtonOptions
from .steady import SteadyOptions

LOGGER: Final[logging.Logger] = logging.getLogger(__name__)

NEWTON_KEYS: Final[dict[str, type]] = {
    "tol_inf": float,
    "max_iters": int,
    "damping": bool,
    "backtrack_factor": float,
    "min_step": float,
}
STEADY_KEYS: Final[dict[str, type]] = {
    "tol": float,
    "max_iters": int,
    "armijo": float,
    "backtrack_factor": float,
    "min_step": float,
}


@dataclass(frozen=True)
class ConvergenceSettings:
    """Refinement ladder of uniform 1D meshes and the reference resolution."""

    ladder: tuple[int, ...]
    reference: int


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one JSON configuration file describes."""

    source: Path
    problem: ProblemSpec
    newton: NewtonOptions
    steady: SteadyOptions
    domain_length: float = 1.0
    mesh: str | None = None
    convergence: ConvergenceSettings | None = None


def _options(block: object, keys: Mapping[str, type], label: str) -> dict[str, object]:
    if not isinstance(block, Mapping):
        raise ConfigurationError(f"key '{label}': expected an object")
    data = cast(Mapping[str, object], block)
    parsed: dict[str, object] = {}
    for key, value in data.items():
        if key not in keys:
            raise ConfigurationError(f"key '{label}.{key}': unknown option")
        expected = keys[key]
        if expected is bool:
            if not isinstance(value, bool):
                raise ConfigurationError(f"key '{label}.{key}': expected true or false")
        elif expected is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigurationError(f"key '{label}.{key}': expected an integer")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"key '{label}.{key}': expected a number")
        parsed[key] = expected(value)
    return parsed


def _convergence(block: object) -> ConvergenceSettings:
    if not isinstance(block, Mapping):
        raise ConfigurationError("key 'convergence': expected an object")
    data = cast(Mapping[str, object], block)
    ladder = data.get("ladder")
    reference = data.get("reference")
    if not isinstance(ladder, list) or not ladder:
        raise ConfigurationError("key 'convergence.ladder': expected a nonempty list")
    if not all(isinstance(n, int) and not isinstance(n, bool) for n in ladder):
        raise ConfigurationError("key 'convergence.ladder': expected integers")
    if isinstance(reference, bool) or not isinstance(reference, int):
        raise ConfigurationError("key 'convergence.reference': expected an integer")
    return ConvergenceSettings(
        ladder=tuple(cast(list[int], ladder)), reference=reference
    )


def parse_config(
    data: Mapping[str, object], *, source: Path, verbose: bool = False
) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from decoded JSON."""
    problem = ProblemSpec.from_dict(data)
    newton_kwargs = _options(data.get("newton", {}), NEWTON_KEYS, "newton")
    steady_kwargs = _options(data.get("steady", {}), STEADY_KEYS, "steady")
    newton = NewtonOptions(**newton_kwargs, verbose=verbose)  # type: ignore[arg-type]
    steady = SteadyOptions(**steady_kwargs, verbose=verbose)  # type: ignore[arg-type]

    domain_length = data.get("domain_length", 1.0)
    if isinstance(domain_length, bool) or not isinstance(domain_length, (int, float)):
        raise ConfigurationError("key 'domain_length': expected a number")
    mesh = data.get("mesh")
    if mesh is not None and not isinstance(mesh, str):
        raise ConfigurationError("key 'mesh': expected a mesh source string")

    convergence = None
    if "convergence" in data:
        convergence = _convergence(data["convergence"])
    return ExperimentConfig(
        source=source,
        problem=problem,
        newton=newton,
        steady=steady,
        domain_length=float(domain_length),
        mesh=mesh,
        convergence=convergence,
    )


def load_config(path: Path, *, verbose: bool = False) -> ExperimentConfig:
    """Read and validate the JSON configuration at ``path``.

    Raises:
        ConfigurationError: Malformed JSON or an invalid key; the message
            names the file and the key
        OSError: The file cannot be read
    """
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: expected a JSON object at the top level")
    try:
        data = cast(dict[str, object], raw)
        config = parse_config(data, source=path, verbose=verbose)
    except ConfigurationError as exc:
        raise type(exc)(f"{path}: {exc}") from exc
    LOGGER.info(
        "Loaded configuration %s (%d species)", path, len(config.problem.species)
    )
    return config
