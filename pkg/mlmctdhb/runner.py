"""Subcommand orchestration: bands, relax, propagate, observe and cost.

Every stage writes into the run's output directory:

    bands.csv               lowest one-body levels of each species' trap
    relax_energy.csv        energy after every relaxation window
    ground_state.mlb        relaxed state (blocked right well)
    trajectory.csv          one observable record per output time
    checkpoints/t_*.mlb     propagation checkpoints
    final.mlb               last propagated state
    metadata.json           configuration echo plus run diagnostics
    observables.csv         records recomputed from checkpoints
    meanfield_reference.csv coupled Gross-Pitaevskii reference curves
    cost.json               storage-cost comparison
"""

import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from .checkpoint import Checkpoint, read_checkpoint, write_checkpoint
from .cli import Subcommand
from .config import RunConfig
from .cost import cost_estimate
from .densities import compute_density_set, natural_orbitals
from .errors import ConfigError, ConvergenceError, ObservableError
from .grid import eigenpairs
from .models import MixtureModel
from .observables import (
    ObservableRecord,
    joint_well_probability,
    record,
    well_probability,
)
from .oracle import gp_propagate
from .output import RecordWriter, write_json, write_table
from .propagate import output_times, propagate_real, relax_imaginary
from .state import MLState, init_hartree

logger = logging.getLogger(__name__)

GROUND_STATE = "ground_state.mlb"
FINAL_STATE = "final.mlb"
CHECKPOINT_DIR = "checkpoints"


def checkpoint_name(t: float) -> str:
    return f"t_{t:015.6f}.mlb"


class Runner:
    """Executes one subcommand of a configured run.

    Args:
        config: Validated run configuration
        output: Output directory (defaults to ``config.output``)
    """

    def __init__(self, config: RunConfig, output: Optional[Path] = None) -> None:
        self.config = config
        self.output = Path(output) if output is not None else config.output
        self._model: Optional[MixtureModel] = None

    @property
    def model(self) -> MixtureModel:
        if self._model is None:
            self._model = self.config.model()
        return self._model

    def run(
        self, subcommand: Subcommand, resume: Optional[Path] = None
    ) -> Dict[str, Any]:
        """Dispatch a subcommand and return a short summary of what it wrote."""
        self.output.mkdir(parents=True, exist_ok=True)
        if subcommand is Subcommand.BANDS:
            return self.bands()
        if subcommand is Subcommand.RELAX:
            return self.relax()
        if subcommand is Subcommand.PROPAGATE:
            return self.propagate(resume)
        if subcommand is Subcommand.OBSERVE:
            return self.observe()
        return self.cost()

    def bands(self) -> Dict[str, Any]:
        """Lowest one-body levels and neighbouring gaps under the open trap."""
        k = min(self.config.bands, self.model.grid.n)
        header = ["level"]
        columns: List[np.ndarray] = []
        for sigma, species in enumerate(self.config.spec.species):
            energies, _ = eigenpairs(self.model.one_body[sigma], k)
            gaps = np.append(np.diff(energies), np.nan)
            header += [f"E_{species.name}", f"gap_{species.name}"]
            columns += [energies, gaps]
        rows = [[float(level)] + [c[level] for c in columns] for level in range(k)]
        path = self.output / "bands.csv"
        write_table(path, header, rows)
        logger.info("wrote %d levels to %s", k, path)
        return {"bands": str(path)}

    def relax(self) -> Dict[str, Any]:
        """Relax the Hartree product state in the blocked trap."""
        blocked = self.config.relaxation_model(self.model)
        start = init_hartree(blocked)
        energies: List[List[float]] = []

        def on_window(tau: float, e: float) -> None:
            energies.append([tau, e])

        try:
            result = relax_imaginary(
                start, blocked, self.config.propagation, on_window=on_window
            )
        except ConvergenceError as exc:
            write_table(self.output / "relax_energy.csv", ["tau", "energy"], energies)
            if exc.last_state is not None:
                write_checkpoint(
                    self.output / "relax_last.mlb", exc.last_state, self.config.spec
                )
            raise
        write_table(self.output / "relax_energy.csv", ["tau", "energy"], energies)
        path = self.output / GROUND_STATE
        write_checkpoint(path, result.state.with_time(0.0), self.config.spec)
        logger.info("ground state E=%.12f written to %s", result.energy, path)
        return {"ground_state": str(path), "energy": result.energy}

    def _initial_state(self) -> MLState:
        path = self.output / GROUND_STATE
        if not path.is_file():
            logger.info("no %s in %s; relaxing first", GROUND_STATE, self.output)
            self.relax()
        return self._load(path).state.with_time(0.0)

    def _load(self, path: Path) -> Checkpoint:
        checkpoint = read_checkpoint(path)
        if checkpoint.spec != self.config.spec:
            raise ConfigError(
                f"checkpoint {path} was written for a different mixture",
                path="--config",
            )
        return checkpoint

    def propagate(self, resume: Optional[Path] = None) -> Dict[str, Any]:
        """Real-time propagation after an instantaneous removal of the step.

        The relaxed state is reused unchanged under the open trap. With
        ``resume`` the run continues from a checkpoint and appends to the
        existing trajectory.
        """
        if resume is not None:
            state = self._load(resume).state
            logger.info("resuming from %s at t=%.6f", resume, state.time)
        else:
            state = self._initial_state()
        start_time = state.time
        writer = RecordWriter(
            self.output / "trajectory.csv", append=resume is not None
        )
        checkpoint_dir = self.output / CHECKPOINT_DIR

        def on_record(rec: ObservableRecord) -> None:
            if resume is not None and rec.t <= start_time:
                return
            writer.write(rec)

        def on_checkpoint(current: MLState) -> None:
            path = checkpoint_dir / checkpoint_name(current.time)
            write_checkpoint(path, current, self.config.spec)
            logger.info("checkpoint t=%.6f written to %s", current.time, path)

        metadata = self._metadata(resume, start_time)
        write_json(self.output / "metadata.json", dict(metadata, status="running"))
        try:
            trajectory = propagate_real(
                state,
                self.model,
                self.config.propagation,
                on_record=on_record,
                on_checkpoint=on_checkpoint,
            )
        except ObservableError as exc:
            write_json(
                self.output / "metadata.json",
                dict(metadata, status="failed", error=str(exc)),
            )
            raise
        assert trajectory.final_state is not None
        write_checkpoint(
            self.output / FINAL_STATE, trajectory.final_state, self.config.spec
        )
        metadata.update(
            status="complete",
            accepted_steps=trajectory.accepted_steps,
            rejected_steps=trajectory.rejected_steps,
            repairs=[asdict(r) for r in trajectory.repairs],
            energy_corrections=trajectory.energy_corrections,
            records=len(trajectory.records),
        )
        if self.config.propagation.mean_field_reference and resume is None:
            metadata["meanfield_reference"] = str(self.meanfield_reference(state))
        write_json(self.output / "metadata.json", metadata)
        return {"trajectory": str(writer.path), "records": len(trajectory.records)}

    def _metadata(self, resume: Optional[Path], start_time: float) -> Dict[str, Any]:
        metadata = self.config.metadata()
        metadata.update(
            version=__version__,
            output=str(self.output),
            resume=str(resume) if resume is not None else None,
            start_time=start_time,
        )
        return metadata

    def meanfield_reference(self, state: MLState) -> Path:
        """Coupled GP curves from each species' dominant natural orbital.

        Writes, per output time, P_L of every species and, for every pair
        recorded by the full run, the joint probabilities P_LL and P_RR of the
        product state and their sum P_same (both particles in the same well).
        """
        model = self.model
        densities = compute_density_set(state, model)
        orbitals = np.stack(
            [
                natural_orbitals(densities.rho1[sigma], state.spfs[sigma])[1][0]
                for sigma in range(model.S)
            ]
        )
        cfg = self.config.propagation
        times = [state.time] + output_times(state.time, cfg.t_final, cfg.output_stride)
        trajectory = gp_propagate(model, orbitals, times)
        names = [s.name for s in model.spec.species]
        pairs = [
            (sigma, partner)
            for sigma in range(model.S)
            for partner in range(sigma, model.S)
            if sigma != partner or model.spec.species[sigma].particles >= 2
        ]
        header = ["t"] + [f"P_L_{n}" for n in names]
        for sigma, partner in pairs:
            tag = f"{names[sigma]}_{names[partner]}"
            header += [f"P_LL_{tag}", f"P_RR_{tag}", f"P_same_{tag}"]
        # one orbital per species: the pair density is a single constant
        product = np.ones((1, 1, 1, 1), dtype=complex)
        rows = []
        for t, snapshot in zip(times, trajectory):
            p_left = [
                well_probability(np.abs(phi) ** 2, model.grid, "L") for phi in snapshot
            ]
            row = [t] + p_left
            for sigma, partner in pairs:
                phi, phi_p = snapshot[sigma][None, :], snapshot[partner][None, :]
                p_ll, p_rr = (
                    joint_well_probability(product, phi, phi_p, model.grid, sides)
                    for sides in (("L", "L"), ("R", "R"))
                )
                row += [p_ll, p_rr, p_ll + p_rr]
            rows.append(row)
        path = self.output / "meanfield_reference.csv"
        write_table(path, header, rows)
        logger.info("mean-field reference written to %s", path)
        return path

    def observe(self) -> Dict[str, Any]:
        """Recompute observable records from every saved checkpoint."""
        paths = sorted((self.output / CHECKPOINT_DIR).glob("t_*.mlb"))
        if not paths:
            raise ConfigError(
                f"no checkpoints in {self.output / CHECKPOINT_DIR}", path="--out"
            )
        states = sorted((self._load(p).state for p in paths), key=lambda s: s.time)
        writer = RecordWriter(self.output / "observables.csv")
        for state in states:
            writer.write(record(state, self.model))
        logger.info("recomputed %d records into %s", len(states), writer.path)
        return {"observables": str(writer.path), "records": len(states)}

    def cost(self) -> Dict[str, Any]:
        report = cost_estimate(self.config.spec)
        path = self.output / "cost.json"
        write_json(path, report.to_dict())
        return report.to_dict()


def run(
    subcommand: Subcommand,
    config: RunConfig,
    output: Optional[Path] = None,
    resume: Optional[Path] = None,
) -> Dict[str, Any]:
    """Convenience wrapper around Runner.run."""
    return Runner(config, output).run(subcommand, resume)
