import multiprocessing as mp

import pytest

from rtbounds import harness
from rtbounds.pool import TrialPool, TrialProcess
from rtbounds.samplers import derive_substream

from .utils import CoverageWorker, exploding_trial


def test_worker_records_exceptions(small_experiment):
    worker = TrialProcess(small_experiment, exploding_trial, None, None)
    record = worker.process_trial(3)
    assert not record.usable
    assert record.error == "trial 3 exploded"
    assert record.seed == derive_substream(7, 3).substream_seed
    assert worker.process_trial(2).value == 2.0


def test_worker_exits_on_sentinel(small_experiment):
    tasks, results = mp.Queue(), mp.Queue()
    for task in (0, 1, None):
        tasks.put(task)
    worker = TrialProcess(small_experiment, exploding_trial, tasks, results)
    worker.run()
    records = sorted(
        [results.get(timeout=5), results.get(timeout=5)],
        key=lambda record: record.trial_index,
    )
    assert records[0].usable
    assert records[1].error == "trial 1 exploded"


def test_pool_orders_records(small_experiment):
    with TrialPool(
        small_experiment,
        exploding_trial,
        max_workers=3,
        worker_class=CoverageWorker,
    ) as pool:
        assert pool
        records = pool.run(range(10))
    assert [record.trial_index for record in records] == list(range(10))
    assert [record.usable for record in records] == [
        index % 2 == 0 for index in range(10)
    ]


def test_pool_shuts_workers_down(small_experiment):
    with TrialPool(
        small_experiment, exploding_trial, max_workers=2
    ) as pool:
        pool.run(range(4))
    assert not pool
    assert all(worker.exitcode is not None for worker in pool.workers)


def test_pool_closes_queues(small_experiment):
    with TrialPool(
        small_experiment, exploding_trial, max_workers=2
    ) as pool:
        pool.run(range(4))
    with pytest.raises(ValueError):
        pool.tasks.put(0)
    with pytest.raises(ValueError):
        pool.results.put(None)


def test_pool_closes_queues_after_error(small_experiment):
    with pytest.raises(RuntimeError, match="interrupted"):
        with TrialPool(
            small_experiment, exploding_trial, max_workers=1
        ) as pool:
            for index in range(500):
                pool.tasks.put(index)
            raise RuntimeError("interrupted")
    assert not pool
    with pytest.raises(ValueError):
        pool.tasks.put(0)


def test_pool_matches_serial_run(small_experiment):
    serial = [
        harness.run_trial(small_experiment, i)
        for i in range(small_experiment.trials)
    ]
    with TrialPool(
        small_experiment,
        harness.run_trial,
        max_workers=2,
        worker_class=CoverageWorker,
    ) as pool:
        parallel = pool.run(range(small_experiment.trials))
    assert parallel == serial


@pytest.mark.parametrize("threads", [2, 4])
def test_threads_give_identical_files(tmp_path, small_experiment, threads):
    outputs = []
    for count in (1, threads):
        records, summary = harness.run_experiment(
            small_experiment, threads=count, worker_class=CoverageWorker
        )
        trials_path, summary_path = harness.write_experiment(
            tmp_path / str(count), records, summary
        )
        outputs.append((trials_path.read_bytes(), summary_path.read_bytes()))
    assert outputs[0] == outputs[1]
