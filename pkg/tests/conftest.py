import pathlib

import numpy as np
import pytest

from borders.svm import parse_libsvm_model

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def synth_svm_model():
    return parse_libsvm_model((FIXTURES / "synth_rbf.model").read_text())


@pytest.fixture(scope="session")
def blobs3_model():
    return parse_libsvm_model((FIXTURES / "blobs3.model").read_text())


@pytest.fixture(scope="session")
def blobs3_data_text():
    return (FIXTURES / "blobs3.data").read_text()


def central_difference(f, x, step_scale=1e-5):
    """Central finite-difference gradient with a coordinate-relative step."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for k in range(len(x)):
        h = step_scale * (1.0 + abs(x[k]))
        e = np.zeros_like(x)
        e[k] = h
        out[k] = (f(x + e) - f(x - e)) / (2.0 * h)
    return out
