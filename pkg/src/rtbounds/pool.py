"""
This module defines the multiprocess workers that execute Monte Carlo
trials and the pool that manages them.
"""

import contextlib
import multiprocessing as mp
import os
import queue
import warnings
from typing import Callable, Iterable, Optional

from loguru import logger

from rtbounds.models import ExperimentConfig, TrialRecord
from rtbounds.samplers import derive_substream
from rtbounds.utils import make_warning_logger

TrialFunction = Callable[[ExperimentConfig, int], TrialRecord]


class TrialProcess(mp.Process):
    """
    A multiprocess Process which pulls trial indices from a task queue,
    runs them and pushes the resulting TrialRecords onto a result queue.

    A ``None`` task tells the worker to exit. Trials raising unexpectedly
    are reported as errored records rather than taking the worker down.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        trial_function: TrialFunction,
        tasks: "mp.Queue[Optional[int]]",
        results: "mp.Queue[TrialRecord]",
        *args,
        exception_logging: str = "warning",
        warning_logging: str = "debug",
        **kwargs,
    ):
        super().__init__(*args, **kwargs)
        self.config = config
        self.trial_function = trial_function
        self.tasks = tasks
        self.results = results
        self.exception_logging = exception_logging
        self.warning_logging = warning_logging

    def __repr__(self):
        return f"<TrialProcess pid={os.getpid()} />"

    def _pre_run_init(self):
        warnings.showwarning = make_warning_logger(self.warning_logging)

    def process_trial(self, index: int) -> TrialRecord:
        try:
            return self.trial_function(self.config, index)
        except KeyboardInterrupt:
            raise
        except Exception as e:
            log_func = getattr(logger, self.exception_logging, logger.warning)
            log_func(f"Worker {self} encountered {e} on trial {index}")
            seed = derive_substream(self.config.master_seed, index)
            return TrialRecord(
                trial_index=index,
                seed=seed.substream_seed,
                value=0.0,
                iterations=0,
                converged=False,
                error=str(e),
            )

    def run(self):
        self._pre_run_init()
        while True:
            index = self.tasks.get()
            if index is None:
                break
            self.results.put(self.process_trial(index))


class TrialPool(contextlib.AbstractContextManager):
    """
    Spawns up to ``max_workers`` trial workers for one experiment and
    collects their records in trial order.
    """

    def __init__(
        self,
        config: ExperimentConfig,
        trial_function: TrialFunction,
        max_workers: int = 1,
        worker_class: type[TrialProcess] = TrialProcess,
        exception_logging: str = "warning",
        warning_logging: str = "debug",
        poll_time: float = 0.5,
    ):
        self.config = config
        self.trial_function = trial_function
        self.max_workers = max_workers
        self.WorkerClass = worker_class
        self.exception_logging = exception_logging
        self.warning_logging = warning_logging
        self.poll_time = poll_time
        self.workers: list[mp.Process] = []
        self.tasks: "mp.Queue[Optional[int]]" = mp.Queue()
        self.results: "mp.Queue[TrialRecord]" = mp.Queue()

    def __repr__(self):
        return f"<TrialPool workers={self.max_workers} {self.config!r}>"

    def __enter__(self):
        for _ in range(self.max_workers):
            self.workers.append(
                self.WorkerClass(
                    self.config,
                    self.trial_function,
                    self.tasks,
                    self.results,
                    daemon=True,
                    exception_logging=self.exception_logging,
                    warning_logging=self.warning_logging,
                )
            )
            self.workers[-1].start()
        logger.debug(f"Started {len(self.workers)} workers for {self}")
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        for worker in self.workers:
            if worker.is_alive():
                worker.terminate()
            worker.join()
        # Tasks left unread by terminated workers are dropped.
        self.tasks.cancel_join_thread()
        for channel in (self.tasks, self.results):
            channel.close()
            channel.join_thread()

    def __bool__(self):
        return any(worker.is_alive() for worker in self.workers)

    def run(self, indices: Iterable[int]) -> list[TrialRecord]:
        """
        Execute the given trials and return their records sorted by trial
        index.

        Raises
        ------
        RuntimeError:
            Every worker exited before all records were collected.
        """
        indices = list(indices)
        for index in indices:
            self.tasks.put(index)
        for _ in self.workers:
            self.tasks.put(None)

        records: list[TrialRecord] = []
        drained = False
        while len(records) < len(indices):
            try:
                records.append(self.results.get(timeout=self.poll_time))
            except queue.Empty:
                if self:
                    continue
                # One more poll picks up records flushed by exiting workers.
                if drained:
                    raise RuntimeError(
                        f"Workers exited with {len(indices) - len(records)}"
                        " trials outstanding"
                    )
                drained = True
                continue
            if len(records) % 100 == 0:
                logger.info(f"{len(records)}/{len(indices)} trials finished")
        return sorted(records, key=lambda record: record.trial_index)
