"""
Plain records exchanged between the Monte Carlo harness, its workers and
the result files.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Optional

from rtbounds.kinds import SpectralFunctional
from rtbounds.samplers import InvalidClassError, TensorClass
from rtbounds.solvers import SolverConfig


class ExperimentError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    tensor_class: TensorClass
    functional: SpectralFunctional
    trials: int
    master_seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    tail_shifts: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "tail_shifts", tuple(float(t) for t in self.tail_shifts)
        )
        if self.trials < 1:
            raise ExperimentError(f"trials must be >= 1, got {self.trials}")
        if self.tensor_class.kind not in self.functional.compatible_kinds():
            raise ExperimentError(
                f"{self.functional.slug} is not defined for "
                f"{self.tensor_class.kind.name} tensors"
            )
        if any(not t > 0 for t in self.tail_shifts):
            raise ExperimentError(
                f"Tail shifts must be positive, got {self.tail_shifts}"
            )

    def __repr__(self):
        return (
            f"<ExperimentConfig {self.functional.slug} on {self.tensor_class}"
            f" x{self.trials} seed={self.master_seed}>"
        )

    def with_overrides(
        self,
        trials: Optional[int] = None,
        master_seed: Optional[int] = None,
        restarts: Optional[int] = None,
    ) -> "ExperimentConfig":
        """Copy with any non-``None`` value replaced."""
        changes: dict[str, Any] = {}
        if trials is not None:
            changes["trials"] = trials
        if master_seed is not None:
            changes["master_seed"] = master_seed
        if restarts is not None:
            changes["solver"] = dataclasses.replace(
                self.solver, restarts=restarts
            )
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tensor_class": self.tensor_class.to_dict(),
            "functional": self.functional.slug,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "solver": self.solver.to_dict(),
            "tail_shifts": list(self.tail_shifts),
        }

    @classmethod
    def from_dict(
        cls, payload: dict[str, Any], solver_defaults: Optional[dict] = None
    ) -> "ExperimentConfig":
        try:
            return cls(
                tensor_class=TensorClass.from_dict(payload["tensor_class"]),
                functional=SpectralFunctional.from_slug(payload["functional"]),
                trials=int(payload["trials"]),
                master_seed=int(payload.get("master_seed", 0)),
                solver=SolverConfig.from_dict(
                    payload.get("solver", {}), defaults=solver_defaults
                ),
                tail_shifts=tuple(payload.get("tail_shifts", ())),
            )
        except ExperimentError:
            raise
        except KeyError as e:
            raise ExperimentError(
                f"Experiment configuration is missing {e}"
            ) from e
        except (InvalidClassError, TypeError, ValueError) as e:
            raise ExperimentError(
                f"Invalid experiment configuration: {e}"
            ) from e


@dataclass(frozen=True)
class TrialRecord:
    """The outcome of one sample-then-solve trial."""

    trial_index: int
    seed: int
    value: float
    iterations: int
    converged: bool
    error: Optional[str] = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"Trial {self.trial_index} value is not finite")

    @property
    def usable(self) -> bool:
        return self.converged and self.error is None


@dataclass(frozen=True)
class TailCheck:
    t: float
    exceed_count: int
    upper99: float
    tail_bound: float
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "t": self.t,
            "exceed_count": self.exceed_count,
            "upper99": self.upper99,
            "tail_bound": self.tail_bound,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class ExperimentSummary:
    config: Optional[ExperimentConfig]
    mean: float
    stderr: float
    bound_exact: Optional[float]
    bound_loose: float
    mean_over_bound: float
    tails: tuple[TailCheck, ...]
    pass_expectation: bool
    used_trials: int = 0
    excluded_trials: int = 0

    @property
    def passed(self) -> bool:
        return self.pass_expectation and all(tail.passed for tail in self.tails)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": None if self.config is None else self.config.to_dict(),
            "mean": self.mean,
            "stderr": self.stderr,
            "bound_exact": self.bound_exact,
            "bound_loose": self.bound_loose,
            "mean_over_bound": self.mean_over_bound,
            "tails": [tail.to_dict() for tail in self.tails],
            "pass_expectation": self.pass_expectation,
        }
