import json
import os

import numpy as np
import pytest
from hypothesis import Verbosity, settings

from rtbounds.io import write_tensor
from rtbounds.kinds import SpectralFunctional
from rtbounds.models import ExperimentConfig
from rtbounds.samplers import TensorClass
from rtbounds.solvers import SolverConfig
from rtbounds.tensor import Tensor

settings.register_profile("ci", max_examples=1000, deadline=None)
settings.register_profile("dev", max_examples=100, deadline=None)
settings.register_profile(
    "debug", max_examples=100, deadline=None, verbosity=Verbosity.verbose
)
settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240516)


@pytest.fixture
def unit_cube():
    """2 * e1 x e1 x e1, the rank-one tensor with spectral norm 2."""
    data = np.zeros((2, 2, 2))
    data[0, 0, 0] = 2.0
    return Tensor(data)


@pytest.fixture
def tensor_file(tmp_path, unit_cube):
    path = tmp_path / "cube.rtb"
    write_tensor(unit_cube, path)
    return path


@pytest.fixture
def small_experiment():
    """A fast experiment: 3x3 Gaussian matrices on the exact matrix path."""
    return ExperimentConfig(
        tensor_class=TensorClass.iid((3, 3)),
        functional=SpectralFunctional.l2_singular,
        trials=12,
        master_seed=7,
        solver=SolverConfig(restarts=4),
        tail_shifts=(1.0, 2.0),
    )


@pytest.fixture
def experiment_file(tmp_path, small_experiment):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(small_experiment.to_dict()))
    return path
