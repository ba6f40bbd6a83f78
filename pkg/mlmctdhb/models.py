"""Static problem definitions and the runtime mixture model."""

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .fock import NumberBasis, basis_size, enumerate_basis
from .grid import Grid, TrapSpec, build_grid, one_body_hamiltonian


@dataclass(frozen=True)
class SpeciesSpec:
    """Definition of one bosonic species."""

    name: str
    particles: int
    spfs: int
    species_states: int
    g: float = 0.0
    trap: TrapSpec = field(default_factory=TrapSpec)

    def __post_init__(self) -> None:
        if self.particles < 1:
            raise ConfigError(f"species {self.name}: particle number must be >= 1")
        if self.spfs < 1:
            raise ConfigError(f"species {self.name}: SPF count must be >= 1")
        if self.species_states < 1:
            raise ConfigError(f"species {self.name}: species-state count must be >= 1")
        limit = basis_size(self.particles, self.spfs)
        if self.species_states > limit:
            raise ConfigError(
                f"species {self.name}: {self.species_states} species states exceed "
                f"the {limit} number states of N={self.particles}, m={self.spfs}"
            )

    @property
    def configurations(self) -> int:
        return basis_size(self.particles, self.spfs)


@dataclass(frozen=True)
class GridSpec:
    """Parameters of the shared DVR grid."""

    kind: str = "harmonic"
    points: int = 250
    frequency: float = 1.0
    half_width: float = 10.0

    def build(self) -> Grid:
        return build_grid(self.kind, self.points, self.frequency, self.half_width)


@dataclass(frozen=True)
class MixtureSpec:
    """Static definition of an S-species mixture.

    ``inter`` is the symmetric matrix of inter-species couplings g_{σσ'};
    its diagonal is ignored (intra couplings live on the species).
    """

    species: Tuple[SpeciesSpec, ...]
    inter: Tuple[Tuple[float, ...], ...]
    grid: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self) -> None:
        S = len(self.species)
        if S < 1:
            raise ConfigError("a mixture needs at least one species")
        names = [s.name for s in self.species]
        if len(set(names)) != S:
            raise ConfigError("species names must be unique")
        g = np.asarray(self.inter, dtype=float)
        if g.shape != (S, S):
            raise ConfigError(f"inter-species coupling matrix must be {S}x{S}")
        if not np.allclose(g, g.T, rtol=0.0, atol=0.0):
            raise ConfigError("inter-species coupling matrix must be symmetric")
        for s in self.species:
            if s.spfs > self.grid.points:
                raise ConfigError(
                    f"species {s.name}: {s.spfs} SPFs exceed "
                    f"{self.grid.points} grid points"
                )

    @classmethod
    def create(
        cls,
        species: List[SpeciesSpec],
        couplings: Optional[Dict[Tuple[str, str], float]] = None,
        grid: Optional[GridSpec] = None,
    ) -> "MixtureSpec":
        """Build a spec from per-pair couplings keyed by species names."""
        names = [s.name for s in species]
        g = np.zeros((len(species), len(species)))
        for (a, b), value in (couplings or {}).items():
            if a not in names or b not in names:
                raise ConfigError(f"unknown species in coupling pair ({a}, {b})")
            if a == b:
                raise ConfigError(f"coupling pair ({a}, {b}) must name two species")
            i, j = names.index(a), names.index(b)
            g[i, j] = g[j, i] = value
        return cls(
            species=tuple(species),
            inter=tuple(tuple(float(x) for x in row) for row in g),
            grid=grid or GridSpec(),
        )

    @property
    def S(self) -> int:
        return len(self.species)

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        return [(a, b) for a in range(self.S) for b in range(a + 1, self.S)]

    def coupling(self, a: int, b: int) -> float:
        return float(self.inter[a][b])

    def with_truncation(self, spfs: int, species_states: int) -> "MixtureSpec":
        """Same physics with a uniform (m, M) for every species."""
        species = tuple(
            replace(s, spfs=spfs, species_states=species_states) for s in self.species
        )
        return replace(self, species=species)

    def to_dict(self) -> dict:
        return {
            "species": [
                {
                    "name": s.name,
                    "particles": s.particles,
                    "spfs": s.spfs,
                    "species_states": s.species_states,
                    "g": s.g,
                    "trap": {
                        "harmonic": s.trap.harmonic,
                        "barrier_height": s.trap.barrier_height,
                        "barrier_width": s.trap.barrier_width,
                        "block_height": s.trap.block_height,
                    },
                }
                for s in self.species
            ],
            "inter": [list(row) for row in self.inter],
            "grid": {
                "kind": self.grid.kind,
                "points": self.grid.points,
                "frequency": self.grid.frequency,
                "half_width": self.grid.half_width,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MixtureSpec":
        species = tuple(
            SpeciesSpec(
                name=s["name"],
                particles=int(s["particles"]),
                spfs=int(s["spfs"]),
                species_states=int(s["species_states"]),
                g=float(s["g"]),
                trap=TrapSpec(**s["trap"]),
            )
            for s in data["species"]
        )
        return cls(
            species=species,
            inter=tuple(tuple(float(x) for x in row) for row in data["inter"]),
            grid=GridSpec(**data["grid"]),
        )


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """A MixtureSpec bound to its grid, one-body Hamiltonians and number bases."""

    spec: MixtureSpec
    grid: Grid
    traps: Tuple[TrapSpec, ...]
    one_body: Tuple[np.ndarray, ...]
    bases: Tuple[NumberBasis, ...]

    @classmethod
    def build(cls, spec: MixtureSpec, grid: Optional[Grid] = None) -> "MixtureModel":
        grid = grid if grid is not None else spec.grid.build()
        traps = tuple(s.trap for s in spec.species)
        return cls(
            spec=spec,
            grid=grid,
            traps=traps,
            one_body=tuple(one_body_hamiltonian(grid, t) for t in traps),
            bases=tuple(enumerate_basis(s.particles, s.spfs) for s in spec.species),
        )

    def with_traps(self, traps: Tuple[TrapSpec, ...]) -> "MixtureModel":
        """Same mixture and grid under different traps (instantaneous switch)."""
        if len(traps) != self.spec.S:
            raise ValueError("one trap per species required")
        return replace(
            self,
            traps=tuple(traps),
            one_body=tuple(one_body_hamiltonian(self.grid, t) for t in traps),
        )

    def blocked(self, height: float) -> "MixtureModel":
        return self.with_traps(tuple(t.with_block(height) for t in self.traps))

    def unblocked(self) -> "MixtureModel":
        return self.with_traps(tuple(t.without_block() for t in self.traps))

    @property
    def S(self) -> int:
        return self.spec.S

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(s.species_states for s in self.spec.species)
