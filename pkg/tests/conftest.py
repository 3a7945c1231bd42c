import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def centered_dft_matrix(n: int) -> np.ndarray:
    """Explicit unitary DFT matrix with DC at index n//2 in both domains.

    Independent oracle for the FFT-based transforms: built straight from
    the definition, no fft calls.
    """
    c = n // 2
    k = (np.arange(n) - c)[:, None]
    l = (np.arange(n) - c)[None, :]
    return np.exp(-2j * np.pi * k * l / n) / np.sqrt(n)


def centered_dft2(x: np.ndarray) -> np.ndarray:
    f1 = centered_dft_matrix(x.shape[0])
    return f1 @ x @ f1.T
