"""Reading and validating the JSON run configuration."""

import json
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .errors import ConfigError
from .fock import basis_size
from .grid import GRID_KINDS, TrapSpec
from .models import GridSpec, MixtureModel, MixtureSpec, SpeciesSpec
from .propagate import PropagationConfig

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_HEIGHT = 30.0
DEFAULT_BANDS = 8

TOP_KEYS = {
    "species",
    "inter",
    "trap",
    "grid",
    "propagation",
    "output",
    "seed",
    "bands",
}
SPECIES_KEYS = {"name", "particles", "spfs", "species_states", "g", "trap"}
INTER_KEYS = {"pair", "g"}
TRAP_KEYS = {"harmonic", "barrier_height", "barrier_width", "block_height"}
GRID_KEYS = {"kind", "points", "frequency", "half_width"}
PROPAGATION_KEYS = {f.name for f in fields(PropagationConfig)}


@dataclass(frozen=True)
class RunConfig:
    """A validated run: mixture, relaxation blocking, integrator settings and outputs.

    Species traps in ``spec`` are the propagation traps (no step); the step
    heights applied during relaxation are kept in ``block_heights``.
    """

    spec: MixtureSpec
    block_heights: Tuple[float, ...]
    propagation: PropagationConfig
    output: Path
    seed: int = 0
    bands: int = DEFAULT_BANDS

    def __post_init__(self) -> None:
        if len(self.block_heights) != self.spec.S:
            raise ConfigError("one block height per species required")
        if self.bands < 1:
            raise ConfigError("bands must be >= 1", path="bands")

    def model(self) -> MixtureModel:
        """Propagation model (right well open)."""
        return MixtureModel.build(self.spec)

    def relaxation_model(self, model: Optional[MixtureModel] = None) -> MixtureModel:
        """Model with the right well blocked by each species' step."""
        model = model or self.model()
        traps = tuple(
            t.with_block(h) for t, h in zip(model.traps, self.block_heights)
        )
        return model.with_traps(traps)

    def metadata(self) -> Dict[str, Any]:
        """Every parameter affecting results, defaults included, plus derived values."""
        spec = self.spec.to_dict()
        species = zip(spec["species"], self.block_heights, self.spec.species)
        for entry, height, s in species:
            entry["trap"]["block_height"] = height
            entry["g_times_N_minus_1"] = s.g * (s.particles - 1)
            entry["configurations"] = s.configurations
        propagation = asdict(self.propagation)
        return {
            "spec": spec,
            "propagation": propagation,
            "output": str(self.output),
            "seed": self.seed,
            "bands": self.bands,
        }


class ConfigLoader:
    """Parses configuration documents into RunConfig, rejecting unknown keys."""

    def parse(self, document: Any, source: Optional[Path] = None) -> RunConfig:
        """Validate a decoded JSON document.

        Args:
            document: Decoded JSON object
            source: File the document came from (sets the default output dir)

        Returns:
            Validated RunConfig with all documented defaults filled in

        Raises:
            ConfigError: On any schema violation, with the offending path
        """
        self._check_object(document, TOP_KEYS, "$")
        shared = self._trap(document.get("trap", {}), "trap")
        grid = self._grid(document.get("grid", {}))
        raw_species = document.get("species")
        if not isinstance(raw_species, list) or not raw_species:
            raise ConfigError("must be a non-empty list", path="species")
        species: List[SpeciesSpec] = []
        blocks: List[float] = []
        for i, entry in enumerate(raw_species):
            spec, block = self._species(entry, f"species[{i}]", shared, grid)
            species.append(spec)
            blocks.append(block)
        couplings = self._inter(document.get("inter", []), [s.name for s in species])
        spec = MixtureSpec.create(species, couplings, grid)
        propagation = self._propagation(document.get("propagation", {}))
        stem = source.stem if source is not None else "run"
        output = document.get("output", f"runs/{stem}")
        if not isinstance(output, str) or not output:
            raise ConfigError("must be a non-empty string", path="output")
        seed = self._int(document, "seed", "seed", default=0, minimum=0)
        bands = self._int(document, "bands", "bands", default=DEFAULT_BANDS, minimum=1)
        config = RunConfig(
            spec=spec,
            block_heights=tuple(blocks),
            propagation=propagation,
            output=Path(output),
            seed=seed,
            bands=bands,
        )
        logger.info(
            "configuration: S=%d, n=%d, output=%s", spec.S, grid.points, config.output
        )
        return config

    def load(self, path: Path) -> RunConfig:
        """Read and validate a configuration file.

        Raises:
            ConfigError: If the file is missing, not JSON, or invalid
        """
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigError(f"configuration file not found: {path}")
        except PermissionError:
            raise ConfigError(f"permission denied reading configuration: {path}")
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"invalid JSON at line {e.lineno}: {e.msg}", path=str(path)
            )
        return self.parse(document, source=path)

    def _check_object(self, obj: Any, allowed: set, path: str) -> None:
        if not isinstance(obj, dict):
            raise ConfigError("must be an object", path=path)
        unknown = sorted(set(obj) - allowed)
        if unknown:
            raise ConfigError(
                f"unknown key(s) {', '.join(unknown)}; "
                f"allowed: {', '.join(sorted(allowed))}",
                path=path,
            )

    def _int(
        self,
        obj: dict,
        key: str,
        path: str,
        default: Optional[int] = None,
        minimum: Optional[int] = None,
    ) -> int:
        if key not in obj:
            if default is None:
                raise ConfigError("is required", path=path)
            return default
        value = obj[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"must be an integer, got {value!r}", path=path)
        if minimum is not None and value < minimum:
            raise ConfigError(f"must be >= {minimum}, got {value}", path=path)
        return value

    def _float(
        self,
        obj: dict,
        key: str,
        path: str,
        default: Optional[float] = None,
        positive: bool = False,
        non_negative: bool = False,
    ) -> float:
        if key not in obj:
            if default is None:
                raise ConfigError("is required", path=path)
            return default
        value = obj[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"must be a number, got {value!r}", path=path)
        value = float(value)
        if positive and not value > 0:
            raise ConfigError(f"must be positive, got {value}", path=path)
        if non_negative and value < 0:
            raise ConfigError(f"must be non-negative, got {value}", path=path)
        return value

    def _trap(
        self, obj: Any, path: str, base: Optional[Tuple[TrapSpec, float]] = None
    ) -> Tuple[TrapSpec, float]:
        self._check_object(obj, TRAP_KEYS, path)
        trap, block = base if base is not None else (TrapSpec(), DEFAULT_BLOCK_HEIGHT)
        harmonic = self._float(
            obj, "harmonic", f"{path}.harmonic", trap.harmonic, positive=True
        )
        height = self._float(
            obj,
            "barrier_height",
            f"{path}.barrier_height",
            trap.barrier_height,
            non_negative=True,
        )
        width = self._float(
            obj,
            "barrier_width",
            f"{path}.barrier_width",
            trap.barrier_width,
            positive=True,
        )
        block = self._float(
            obj, "block_height", f"{path}.block_height", block, non_negative=True
        )
        return TrapSpec(harmonic, height, width), block

    def _grid(self, obj: Any) -> GridSpec:
        self._check_object(obj, GRID_KEYS, "grid")
        defaults = GridSpec()
        kind = obj.get("kind", defaults.kind)
        if kind not in GRID_KINDS:
            raise ConfigError(
                f"unknown grid kind {kind!r}; valid: {', '.join(GRID_KINDS)}",
                path="grid.kind",
            )
        points = self._int(obj, "points", "grid.points", defaults.points, minimum=2)
        if kind == "sine" and points % 2:
            raise ConfigError("sine grids need an even point count", path="grid.points")
        frequency = self._float(
            obj, "frequency", "grid.frequency", defaults.frequency, positive=True
        )
        half_width = self._float(
            obj, "half_width", "grid.half_width", defaults.half_width, positive=True
        )
        return GridSpec(kind, points, frequency, half_width)

    def _species(
        self,
        obj: Any,
        path: str,
        shared: Tuple[TrapSpec, float],
        grid: GridSpec,
    ) -> Tuple[SpeciesSpec, float]:
        self._check_object(obj, SPECIES_KEYS, path)
        name = obj.get("name")
        if not isinstance(name, str) or not name:
            raise ConfigError("must be a non-empty string", path=f"{path}.name")
        particles = self._int(obj, "particles", f"{path}.particles", minimum=1)
        spfs = self._int(obj, "spfs", f"{path}.spfs", minimum=1)
        if spfs > grid.points:
            raise ConfigError(
                f"{spfs} SPFs exceed the {grid.points} grid points", path=f"{path}.spfs"
            )
        states = self._int(obj, "species_states", f"{path}.species_states", minimum=1)
        limit = basis_size(particles, spfs)
        if states > limit:
            raise ConfigError(
                f"{states} species states exceed the {limit} number states "
                f"of N={particles}, m={spfs}",
                path=f"{path}.species_states",
            )
        g = self._float(obj, "g", f"{path}.g", default=0.0)
        trap, block = shared
        if "trap" in obj:
            trap, block = self._trap(obj["trap"], f"{path}.trap", base=shared)
        return SpeciesSpec(name, particles, spfs, states, g, trap), block

    def _inter(self, obj: Any, names: List[str]) -> Dict[Tuple[str, str], float]:
        if not isinstance(obj, list):
            raise ConfigError("must be a list", path="inter")
        couplings: Dict[Tuple[str, str], float] = {}
        for i, entry in enumerate(obj):
            path = f"inter[{i}]"
            self._check_object(entry, INTER_KEYS, path)
            pair = entry.get("pair")
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(p, str) for p in pair)
            ):
                raise ConfigError(
                    "must be a list of two species names", path=f"{path}.pair"
                )
            a, b = pair
            for p in pair:
                if p not in names:
                    raise ConfigError(f"unknown species {p!r}", path=f"{path}.pair")
            if a == b:
                raise ConfigError(
                    "must name two different species", path=f"{path}.pair"
                )
            key = (a, b) if names.index(a) < names.index(b) else (b, a)
            if key in couplings:
                raise ConfigError(f"duplicate pair ({a}, {b})", path=f"{path}.pair")
            couplings[key] = self._float(entry, "g", f"{path}.g")
        return couplings

    def _propagation(self, obj: Any) -> PropagationConfig:
        self._check_object(obj, PROPAGATION_KEYS, "propagation")
        defaults = PropagationConfig()
        values: Dict[str, Any] = {}
        for f in fields(PropagationConfig):
            if f.name not in obj:
                continue
            path = f"propagation.{f.name}"
            default = getattr(defaults, f.name)
            if f.name in ("max_steps", "dense_top_limit"):
                values[f.name] = self._int(obj, f.name, path, minimum=1)
            elif isinstance(default, bool):
                if not isinstance(obj[f.name], bool):
                    raise ConfigError("must be a boolean", path=path)
                values[f.name] = obj[f.name]
            else:
                values[f.name] = self._float(obj, f.name, path, default, positive=True)
        return PropagationConfig(**values)


def parse_config(document: Any, source: Optional[Path] = None) -> RunConfig:
    """Validate a decoded configuration document.

    This is a convenience function that creates a ConfigLoader instance and
    calls its parse method.
    """
    return ConfigLoader().parse(document, source)


def load_config(path: Path) -> RunConfig:
    """Read and validate a configuration file."""
    return ConfigLoader().load(path)
