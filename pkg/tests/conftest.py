import pytest

from secular import _kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    """Compile all numba kernels once so timed tests measure steady state."""
    _kernels.warmup()
