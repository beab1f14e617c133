import numpy as np
import pytest

from polysketch.data import DataMatrix
from polysketch.tensor_sketch import sketch_matrix, tensor_sketcher


@pytest.fixture(scope="session", autouse=True)
def warm_compiled_kernels():
    """Compile the jitted sketch path once so timed tests measure math only."""
    X = DataMatrix(np.ones((3, 2)))
    for p in (1, 5):
        sketch_matrix(tensor_sketcher(3, 4, p, seed=0), X)
