"""
Seeded Monte Carlo batches of sample-then-solve trials, with empirical
checks of the expectation bounds and concentration tails.

Trial ``i`` samples with ``derive_substream(master_seed, i)`` and seeds
its solver from that substream's first child, so the record list depends
only on the configuration and never on how trials are scheduled.
"""

import csv
import dataclasses
import json
import math
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from loguru import logger
from scipy import stats

from rtbounds.bounds import BoundReport, bound, tail_prob
from rtbounds.io import PathLike
from rtbounds.models import (
    ExperimentConfig,
    ExperimentError,
    ExperimentSummary,
    TailCheck,
    TrialRecord,
)
from rtbounds.pool import TrialPool, TrialProcess
from rtbounds.samplers import derive_substream, sample
from rtbounds.solvers import DegenerateSolveError, solve
from rtbounds.utils import format_dims, format_float

CSV_HEADER = (
    "trial",
    "seed",
    "class",
    "dims",
    "functional",
    "value",
    "iterations",
    "converged",
)
MAX_UNCONVERGED_FRACTION = 0.05
EXPECTATION_MARGIN = 3.0
TAIL_CONFIDENCE = 0.99


def run_trial(config: ExperimentConfig, index: int) -> TrialRecord:
    seed = derive_substream(config.master_seed, index)
    tensor = sample(config.tensor_class, seed)
    solver_cfg = dataclasses.replace(config.solver, rng=seed.child(0))
    try:
        result = solve(tensor, config.functional, solver_cfg)
    except (DegenerateSolveError, ValueError) as e:
        logger.warning(f"Trial {index} of {config!r} failed: {e}")
        return TrialRecord(
            trial_index=index,
            seed=seed.substream_seed,
            value=0.0,
            iterations=0,
            converged=False,
            error=str(e),
        )
    return TrialRecord(
        trial_index=index,
        seed=seed.substream_seed,
        value=result.value,
        iterations=result.iterations_total,
        converged=result.converged,
    )


def binomial_upper_limit(
    successes: int, trials: int, confidence: float = TAIL_CONFIDENCE
) -> float:
    """
    Exact one-sided Clopper-Pearson upper confidence limit of a binomial
    proportion.
    """
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"Invalid binomial count {successes}/{trials}")
    if successes == trials:
        return 1.0
    return float(stats.beta.ppf(confidence, successes + 1, trials - successes))


def summarize(
    records: Sequence[TrialRecord],
    report: BoundReport,
    tail_shifts: Sequence[float] = (),
    config: Optional[ExperimentConfig] = None,
) -> ExperimentSummary:
    """
    Aggregate converged trials and test them against ``report``.

    The expectation passes when mean + 3 SE stays below the tightest bound.
    Each tail passes when the 99% upper limit of the frequency of values
    above ``bound_loose + t`` stays below exp(-t^2 / 2).

    Raises
    ------
    ExperimentError:
        No record converged.
    """
    usable = [record for record in records if record.usable]
    if not usable:
        raise ExperimentError("No converged trials to summarize")

    values = np.array([record.value for record in usable])
    n = values.size
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    applicable = report.applicable

    tails = []
    for t in tail_shifts:
        exceed = int(np.count_nonzero(values > report.bound_loose + t))
        upper = binomial_upper_limit(exceed, n)
        limit = tail_prob(t)
        tails.append(TailCheck(t, exceed, upper, limit, upper <= limit))

    return ExperimentSummary(
        config=config,
        mean=mean,
        stderr=stderr,
        bound_exact=report.bound_exact,
        bound_loose=report.bound_loose,
        mean_over_bound=mean / applicable,
        tails=tuple(tails),
        pass_expectation=mean + EXPECTATION_MARGIN * stderr <= applicable,
        used_trials=n,
        excluded_trials=len(records) - n,
    )


def run_experiment(
    config: ExperimentConfig,
    threads: int = 1,
    worker_class: type[TrialProcess] = TrialProcess,
) -> tuple[list[TrialRecord], ExperimentSummary]:
    """
    Run every trial of ``config`` and summarize them.

    Raises
    ------
    ExperimentError:
        More than 5% of trials did not converge.
    """
    threads = max(1, min(threads, config.trials))
    logger.info(f"Running {config!r} on {threads} worker(s)")
    if threads == 1:
        records = [run_trial(config, i) for i in range(config.trials)]
    else:
        with TrialPool(
            config, run_trial, max_workers=threads, worker_class=worker_class
        ) as pool:
            records = pool.run(range(config.trials))

    unconverged = sum(not record.usable for record in records)
    if unconverged > MAX_UNCONVERGED_FRACTION * len(records):
        raise ExperimentError(
            f"{unconverged} of {len(records)} trials did not converge"
        )
    if unconverged:
        logger.warning(f"Excluding {unconverged} unconverged trials")

    report = bound(config.functional, config.tensor_class)
    summary = summarize(records, report, config.tail_shifts, config)
    if summary.passed:
        logger.success(
            f"{config!r}: mean {summary.mean:.6g} is "
            f"{summary.mean_over_bound:.3%} of the bound"
        )
    else:
        logger.warning(f"{config!r}: bound checks failed")
    return records, summary


def load_experiment_config(
    path: PathLike, solver_defaults: Optional[dict] = None
) -> ExperimentConfig:
    """
    Read an experiment description from a JSON file.

    Raises
    ------
    FileNotFoundError:
        The file does not exist.
    ExperimentError:
        The file is not valid JSON or does not describe an experiment.
    """
    text = Path(path).read_text()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ExperimentError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(payload, dict):
        raise ExperimentError(f"{path} must hold a JSON object")
    return ExperimentConfig.from_dict(payload, solver_defaults)


def write_trials_csv(
    records: Sequence[TrialRecord], config: ExperimentConfig, path: PathLike
):
    kind = config.tensor_class.kind.name.replace("_", "-")
    dims = format_dims(config.tensor_class.dims)
    with open(path, "w", newline="") as fout:
        writer = csv.writer(fout, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in records:
            writer.writerow(
                (
                    record.trial_index,
                    record.seed,
                    kind,
                    dims,
                    config.functional.slug,
                    format_float(record.value),
                    record.iterations,
                    "true" if record.converged else "false",
                )
            )
    logger.debug(f"Wrote {len(records)} trials to {path}")


def write_summary_json(summary: ExperimentSummary, path: PathLike):
    Path(path).write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    logger.debug(f"Wrote summary to {path}")


def write_experiment(
    out_dir: PathLike,
    records: Sequence[TrialRecord],
    summary: ExperimentSummary,
) -> tuple[Path, Path]:
    """Write ``trials.csv`` and ``summary.json`` into ``out_dir``."""
    if summary.config is None:
        raise ExperimentError("Summary carries no experiment configuration")
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    trials_path = directory / "trials.csv"
    summary_path = directory / "summary.json"
    write_trials_csv(records, summary.config, trials_path)
    write_summary_json(summary, summary_path)
    return trials_path, summary_path
