"""Adaptive real- and imaginary-time propagation of ML-MCTDHB states."""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from .eom import MODES, full_rhs
from .errors import (
    ConfigError,
    ConvergenceError,
    NumericalError,
    ObservableError,
    StiffnessError,
)
from .meanfield import DENSE_TOP_LIMIT
from .models import MixtureModel
from .observables import ObservableRecord, record
from .state import MLState, energy, normalize, orthonormality_residual, reorthonormalize

logger = logging.getLogger(__name__)

Rhs = Callable[[float, np.ndarray], np.ndarray]

# Dormand-Prince 5(4): stage nodes, extended Butcher rows and the
# coefficients of the local truncation error estimate (b - b_hat).
EVAL_STAGES = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
BUTCHER = (
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
TRUNCATION = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

SAFETY = 0.9
ALPHA = 0.7 / 5
BETA = 0.4 / 5
MIN_FACTOR = 0.1
MAX_FACTOR = 5.0
MIN_STEP = 1e-12
DEFAULT_TOLERANCE = 1e-10
# energy restoration: finite-difference step along the slope and the roundoff floor
SLOPE_STEP = 1e-6
ENERGY_FLOOR = 1e-14
MONOTONE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class PropagationConfig:
    """Integrator and run-control parameters.

    Real-time runs integrate to ``t_final`` with records every
    ``output_stride``; relaxation runs stop once the energy changes by less
    than ``relax_tolerance`` over two consecutive ``relax_output_stride``
    windows. With ``conserve_energy`` every accepted real-time step is pulled
    back to the initial energy and unit norm.
    """

    t_final: float = 100.0
    output_stride: float = 0.5
    initial_step: float = 1e-3
    atol: float = DEFAULT_TOLERANCE
    rtol: float = DEFAULT_TOLERANCE
    regularization: float = 1e-10
    repair_threshold: float = 1e-8
    checkpoint_stride: Optional[float] = None
    max_steps: int = 10_000_000
    relax_tolerance: float = 1e-10
    relax_output_stride: float = 0.5
    relax_max_time: float = 500.0
    dense_top_limit: int = DENSE_TOP_LIMIT
    mean_field_reference: bool = False
    conserve_energy: bool = True

    def __post_init__(self) -> None:
        positive = (
            "t_final",
            "output_stride",
            "initial_step",
            "atol",
            "rtol",
            "regularization",
            "repair_threshold",
            "relax_tolerance",
            "relax_output_stride",
            "relax_max_time",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(
                    f"{name} must be positive", path=f"propagation.{name}"
                )
        if self.checkpoint_stride is not None and not self.checkpoint_stride > 0:
            raise ConfigError(
                "checkpoint_stride must be positive", "propagation.checkpoint_stride"
            )
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1", path="propagation.max_steps")
        if self.dense_top_limit < 1:
            raise ConfigError(
                "dense_top_limit must be >= 1", "propagation.dense_top_limit"
            )


@dataclass(frozen=True)
class StepResult:
    """One accepted embedded Runge-Kutta step."""

    t: float
    y: np.ndarray
    dt: float
    dt_next: float
    error: float
    rejected: int
    derivative: np.ndarray


@dataclass(frozen=True)
class RepairEvent:
    """An orthonormality repair performed during real-time propagation."""

    t: float
    residual: float


@dataclass
class Trajectory:
    """Records of a real-time run, strictly increasing in time."""

    records: List[ObservableRecord] = field(default_factory=list)
    repairs: List[RepairEvent] = field(default_factory=list)
    checkpoints: List[MLState] = field(default_factory=list)
    final_state: Optional[MLState] = None
    accepted_steps: int = 0
    rejected_steps: int = 0
    energy_corrections: int = 0

    def append(self, rec: ObservableRecord) -> None:
        if self.records and rec.t <= self.records[-1].t:
            raise ValueError(
                f"record time {rec.t} does not increase past {self.records[-1].t}"
            )
        self.records.append(rec)


@dataclass
class RelaxationResult:
    """Outcome of an imaginary-time relaxation."""

    state: MLState
    energy: float
    energies: List[Tuple[float, float]]
    converged: bool
    energy_increases: int = 0


def error_norm(
    error: np.ndarray, y: np.ndarray, y_new: np.ndarray, atol: float, rtol: float
) -> float:
    """Largest component of a local error estimate in units of its tolerance."""
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return float(np.max(np.abs(error) / scale, initial=0.0))


def step_adaptive(
    rhs: Rhs,
    t: float,
    y: np.ndarray,
    dt: float,
    atol: float = DEFAULT_TOLERANCE,
    rtol: float = DEFAULT_TOLERANCE,
    previous_error: float = 1.0,
    min_step: float = MIN_STEP,
    k1: Optional[np.ndarray] = None,
) -> StepResult:
    """Take one accepted Dormand-Prince 5(4) step, retrying rejected ones.

    Args:
        rhs: Right-hand side f(t, y)
        t: Current time
        y: Current state vector
        dt: Trial step
        atol: Absolute tolerance
        rtol: Relative tolerance
        previous_error: Error norm of the last accepted step (PI control)
        min_step: Smallest admissible step
        k1: f(t, y) if already known

    Returns:
        StepResult holding the new time and state, the step taken, the
        proposed next step (within [0.1, 5] times the step taken) and
        f(t + dt, y_new)

    Raises:
        StiffnessError: If the step falls below ``min_step``
    """
    rejected = 0
    if k1 is None:
        k1 = rhs(t, y)
    while True:
        if dt < min_step:
            raise StiffnessError(
                f"step size {dt:.3e} fell below {min_step:.1e} at t={t:.6f}",
                snapshot=y,
                t=t,
            )
        stages = [k1]
        for row, c in zip(BUTCHER[:-1], EVAL_STAGES[1:]):
            increment = sum(b * k for b, k in zip(row, stages) if b)
            stages.append(rhs(t + c * dt, y + dt * increment))
        y_new = y + dt * sum(b * k for b, k in zip(BUTCHER[-1], stages) if b)
        stages.append(rhs(t + dt, y_new))
        error = dt * sum(e * k for e, k in zip(TRUNCATION, stages) if e)
        err = error_norm(error, y, y_new, atol, rtol)
        if not np.isfinite(err):
            factor = MIN_FACTOR
        elif err <= 1.0:
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * err**-ALPHA * max(previous_error, 1e-4) ** BETA
                factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            return StepResult(
                t=t + dt,
                y=y_new,
                dt=dt,
                dt_next=dt * factor,
                error=err,
                rejected=rejected,
                derivative=stages[-1],
            )
        else:
            factor = max(MIN_FACTOR, SAFETY * err ** (-1 / 5))
        rejected += 1
        dt = dt * factor


class Propagator:
    """Drives a state through time under the full equations of motion.

    Imaginary-time runs re-orthonormalize and renormalize after every
    accepted step; real-time runs repair only when the orthonormality
    residual exceeds the configured threshold, and with ``conserve_energy``
    restore the energy of the first state they were given.
    """

    def __init__(
        self,
        model: MixtureModel,
        config: PropagationConfig,
        mode: str = "real",
        on_step: Optional[Callable[[MLState], None]] = None,
    ) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown propagation mode {mode!r}. Valid modes: {MODES}")
        self.model = model
        self.config = config
        self.mode = mode
        self.on_step = on_step
        self.dt = config.initial_step
        self.previous_error = 1.0
        self.accepted = 0
        self.rejected = 0
        self.corrections = 0
        self.repairs: List[RepairEvent] = []
        self.reference_energy: Optional[float] = None
        self._template: Optional[MLState] = None

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        assert self._template is not None
        state = self._template.from_vector(y, time=t)
        derivative = full_rhs(
            state,
            self.model,
            self.mode,
            self.config.regularization,
            self.config.dense_top_limit,
        )
        return derivative.to_vector()

    def _after_step(self, state: MLState) -> MLState:
        if self.mode == "imaginary":
            return normalize(reorthonormalize(state))
        residual = orthonormality_residual(state)
        if residual > self.config.repair_threshold:
            logger.warning(
                "orthonormality residual %.3e at t=%.6f exceeds %.1e; repairing",
                residual,
                state.time,
                self.config.repair_threshold,
            )
            self.repairs.append(RepairEvent(t=state.time, residual=residual))
            return reorthonormalize(state)
        return state

    def restore_energy(
        self,
        state: MLState,
        derivative: np.ndarray,
        limit: float,
        fresh: bool = False,
    ) -> MLState:
        """Pull a real-time state back to the reference energy and unit norm.

        Takes one Newton step along the imaginary-time direction -i f(y),
        whose energy slope is measured by a finite difference. States whose
        slope does not lower the energy, or whose correction would exceed
        ``limit`` in imaginary time, are only renormalized. ``fresh`` marks a
        state that ``derivative`` was evaluated at, so its energy is read off
        the top block instead of being reassembled.
        """
        assert self.reference_energy is not None
        if fresh:
            # derivative is f(state), so its top block gives -i H A
            da = derivative[: state.a.size].reshape(state.a.shape)
            scale = float(np.vdot(state.a, state.a).real)
            e = float((1j * np.vdot(state.a, da)).real) / scale
            state = normalize(state)
        else:
            state = normalize(state)
            e = energy(state, self.model)
        defect = e - self.reference_energy
        if abs(defect) <= ENERGY_FLOOR * max(1.0, abs(self.reference_energy)):
            return state
        direction = -1j * derivative
        y = state.to_vector()
        h = SLOPE_STEP / max(1.0, float(np.linalg.norm(direction)))
        shifted = normalize(state.from_vector(y + h * direction))
        slope = (energy(shifted, self.model) - e) / h
        if not slope < 0.0:
            return state
        step = -defect / slope
        if abs(step) > limit:
            logger.debug(
                "energy defect %.3e at t=%.6f left uncorrected (slope %.3e)",
                defect,
                state.time,
                slope,
            )
            return state
        self.corrections += 1
        return normalize(state.from_vector(y + step * direction))

    def advance(self, state: MLState, t_target: float) -> MLState:
        """Integrate from ``state.time`` to exactly ``t_target``.

        Raises:
            StiffnessError: On step-size underflow (snapshot is the last state)
            NumericalError: If the step budget is exhausted
        """
        conserve = self.mode == "real" and self.config.conserve_energy
        if conserve and self.reference_energy is None:
            self.reference_energy = energy(state, self.model)
        self._template = state
        t = state.time
        y = state.to_vector()
        k1: Optional[np.ndarray] = None
        while t < t_target:
            if self.accepted >= self.config.max_steps:
                raise NumericalError(
                    f"step budget of {self.config.max_steps} exhausted at t={t:.6f}"
                )
            remaining = t_target - t
            clipped = self.dt >= remaining
            trial = remaining if clipped else self.dt
            try:
                result = step_adaptive(
                    self.rhs,
                    t,
                    y,
                    trial,
                    self.config.atol,
                    self.config.rtol,
                    self.previous_error,
                    k1=k1,
                )
            except StiffnessError as exc:
                raise StiffnessError(
                    str(exc), snapshot=state.from_vector(y, time=t), t=t
                ) from exc
            self.accepted += 1
            self.rejected += result.rejected
            self.previous_error = max(result.error, 1e-4)
            if clipped and not result.rejected:
                # landed on the output time; keep the unclipped proposal
                t = t_target
                self.dt = max(result.dt_next, self.dt)
            else:
                t = result.t
                self.dt = result.dt_next
            stepped = state.from_vector(result.y, time=t)
            current = self._after_step(stepped)
            if conserve:
                current = self.restore_energy(
                    current, result.derivative, result.dt, fresh=current is stepped
                )
            # the last stage is f(t, y) only while the state is untouched
            k1 = result.derivative if current is stepped else None
            y = current.to_vector()
            self._template = current
            if self.on_step is not None:
                self.on_step(current)
        return self._template.from_vector(y, time=t)


def output_times(start: float, stop: float, stride: float) -> List[float]:
    count = int(np.floor((stop - start) / stride + 1e-9))
    targets = [start + k * stride for k in range(1, count + 1)]
    if not targets or stop - targets[-1] > 1e-12 * max(1.0, abs(stop)):
        targets.append(stop)
    return targets


def propagate_real(
    state: MLState,
    model: MixtureModel,
    config: PropagationConfig,
    on_record: Optional[Callable[[ObservableRecord], None]] = None,
    on_checkpoint: Optional[Callable[[MLState], None]] = None,
) -> Trajectory:
    """Real-time propagation from ``state.time`` to ``config.t_final``.

    The initial state is recorded, then one record is taken per output
    stride. Checkpoints are taken at the first output time at or past each
    checkpoint stride and at the end of the run.

    Raises:
        StiffnessError: On step-size underflow
        ObservableError: If a record is not finite (a checkpoint of the last
            good state is taken first)
    """
    if state.time >= config.t_final:
        raise ConfigError(
            f"state time {state.time} is not before t_final {config.t_final}",
            path="propagation.t_final",
        )
    propagator = Propagator(model, config, "real")
    trajectory = Trajectory()

    def take(current: MLState, last_good: MLState) -> None:
        rec = record(current, model)
        if not rec.is_finite():
            if on_checkpoint is not None:
                on_checkpoint(last_good)
            raise ObservableError(f"non-finite observable at t={current.time:.6f}")
        trajectory.append(rec)
        if on_record is not None:
            on_record(rec)

    take(state, state)
    next_checkpoint = (
        state.time + config.checkpoint_stride if config.checkpoint_stride else None
    )
    current = state
    for target in output_times(state.time, config.t_final, config.output_stride):
        previous = current
        current = propagator.advance(current, target)
        logger.debug(
            "t=%.4f accepted=%d rejected=%d dt=%.3e",
            current.time,
            propagator.accepted,
            propagator.rejected,
            propagator.dt,
        )
        take(current, previous)
        if next_checkpoint is not None and current.time >= next_checkpoint - 1e-12:
            trajectory.checkpoints.append(current)
            if on_checkpoint is not None:
                on_checkpoint(current)
            while next_checkpoint <= current.time + 1e-12:
                next_checkpoint += config.checkpoint_stride  # type: ignore[operator]
    if not trajectory.checkpoints or trajectory.checkpoints[-1] is not current:
        trajectory.checkpoints.append(current)
        if on_checkpoint is not None:
            on_checkpoint(current)
    trajectory.final_state = current
    trajectory.accepted_steps = propagator.accepted
    trajectory.rejected_steps = propagator.rejected
    trajectory.repairs = list(propagator.repairs)
    trajectory.energy_corrections = propagator.corrections
    return trajectory


def relax_imaginary(
    state: MLState,
    model: MixtureModel,
    config: PropagationConfig,
    on_window: Optional[Callable[[float, float], None]] = None,
) -> RelaxationResult:
    """Imaginary-time relaxation to the variational ground state.

    Converged once the energy changes by less than ``relax_tolerance`` over
    two consecutive output windows. The energy is checked after every
    accepted step; each rise above roundoff is logged and counted in
    ``energy_increases``.

    Raises:
        ConvergenceError: If ``relax_max_time`` is reached first
    """
    current = normalize(reorthonormalize(state.with_time(0.0)))
    e_prev = energy(current, model)
    energies = [(0.0, e_prev)]
    if on_window is not None:
        on_window(0.0, e_prev)
    last_step = [e_prev]
    increases = [0]

    def check_step(stepped: MLState) -> None:
        e_step = energy(stepped, model)
        if e_step - last_step[0] > MONOTONE_TOLERANCE:
            increases[0] += 1
            logger.warning(
                "energy increased by %.3e during relaxation at tau=%.6f",
                e_step - last_step[0],
                stepped.time,
            )
        last_step[0] = e_step

    propagator = Propagator(model, config, "imaginary", on_step=check_step)
    quiet_windows = 0
    for target in output_times(0.0, config.relax_max_time, config.relax_output_stride):
        current = propagator.advance(current, target)
        e = last_step[0]
        energies.append((current.time, e))
        if on_window is not None:
            on_window(current.time, e)
        quiet = abs(e - e_prev) < config.relax_tolerance
        quiet_windows = quiet_windows + 1 if quiet else 0
        e_prev = e
        if quiet_windows >= 2:
            logger.info("relaxation converged at tau=%.4f, E=%.12f", current.time, e)
            return RelaxationResult(
                state=current,
                energy=e,
                energies=energies,
                converged=True,
                energy_increases=increases[0],
            )
    raise ConvergenceError(
        f"relaxation did not converge within tau={config.relax_max_time}",
        last_state=current,
    )
