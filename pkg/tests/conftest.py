import numpy as np
import pytest

from mfsc import _kernels

KERNEL_NAMES = [
    "halfspace_pass",
    "union2_pass",
    "accumulate_rows",
    "accumulate_rows_choice",
    "sparse_box_project",
    "log_penalty_sum",
    "frac_penalty_sum",
]


@pytest.fixture(params=sorted(_kernels.backends()))
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    impl = _kernels.backends()[request.param]
    for name in KERNEL_NAMES:
        monkeypatch.setattr(_kernels, name, getattr(impl, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
