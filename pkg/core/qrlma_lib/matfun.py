"""Dense matrix functions behind the closed-form predictor and its sensitivities.

All functions accept stacks of matrices (..., n, n); scipy's expm evaluates the
Pade degree-13 scaling-and-squaring approximant on each slice.
"""
from typing import Tuple

import numpy as np
import scipy.linalg

from qrlma_lib.error import DimensionError, NonFiniteInputError, SingularMatrixError

CONDITION_LIMIT = 1e12


def _square(A: np.ndarray, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteInputError(f"{name} contains non-finite entries")
    return A


def expm(A: np.ndarray) -> np.ndarray:
    return scipy.linalg.expm(_square(A))


def phi1(A: np.ndarray, s: float) -> np.ndarray:
    """s * phi1(sA) = (e^{sA} - I) A^{-1} without inverting A."""
    A = _square(A)
    if not np.isfinite(s):
        raise NonFiniteInputError("Horizon must be finite")
    n = A.shape[-1]
    block = np.zeros(A.shape[:-2] + (2 * n, 2 * n))
    block[..., :n, :n] = s * A
    block[..., :n, n:] = s * np.eye(n)
    return scipy.linalg.expm(block)[..., :n, n:]


def expm_frechet(A: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Frechet derivative L(A, E) read off the block exponential of [[A, E], [0, A]]."""
    return expm_and_frechet(A, E)[1]


def expm_and_frechet(A: np.ndarray, E: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    A = _square(A)
    E = _square(E, "E")
    if A.shape != E.shape:
        raise DimensionError(f"A {A.shape} and E {E.shape} differ in shape")
    n = A.shape[-1]
    block = np.zeros(A.shape[:-2] + (2 * n, 2 * n))
    block[..., :n, :n] = A
    block[..., n:, n:] = A
    block[..., :n, n:] = E
    full = scipy.linalg.expm(block)
    return full[..., :n, :n], full[..., :n, n:]


def condition(A: np.ndarray) -> float:
    return float(np.linalg.cond(_square(A), 1))


def inverse(A: np.ndarray) -> np.ndarray:
    A = _square(A)
    cond = condition(A)
    if not np.isfinite(cond) or cond >= CONDITION_LIMIT:
        raise SingularMatrixError(cond)
    return scipy.linalg.inv(A)


def eigenvalues(A: np.ndarray) -> np.ndarray:
    return scipy.linalg.eigvals(_square(A))


def stiffness_ratio(eigs: np.ndarray) -> float:
    """max |Re| / min nonzero |Re| of the spectrum."""
    re = np.abs(np.real(eigs))
    re = re[re > 0]
    if re.size == 0:
        return 1.0
    return float(re.max() / re.min())
