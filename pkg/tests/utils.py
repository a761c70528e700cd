import os

import coverage

from rtbounds.models import ExperimentConfig, TrialRecord
from rtbounds.pool import TrialProcess


class CoverageWorker(TrialProcess):
    """TrialProcess subclass that initializes coverage in subprocess."""

    def _pre_run_init(self):
        super()._pre_run_init()
        # Only start coverage if COVERAGE_PROCESS_START is set
        if os.environ.get("COVERAGE_PROCESS_START"):
            coverage.process_startup()


def exploding_trial(config: ExperimentConfig, index: int) -> TrialRecord:
    """Trial function that fails on odd indices."""
    if index % 2:
        raise RuntimeError(f"trial {index} exploded")
    return TrialRecord(
        trial_index=index,
        seed=index,
        value=float(index),
        iterations=1,
        converged=True,
    )
