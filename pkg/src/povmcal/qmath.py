"""Complex linear algebra and Fock-space utilities shared by all modules.

Operators are plain complex numpy arrays of shape (d, d).  This module pins
the conventions everything else relies on:

* vectorization is row-major (``vec(X) = X.reshape(-1)``),
* tensor products follow the Kronecker convention
  ``(A (x) B)[i*db+p, j*db+q] = A[i,j] * B[p,q]``,
* quadrature wavefunctions are normalized so the vacuum variance is 1/4,
  matching the quadrature operator with the 1/2 prefactor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError

ComplexOperator = np.ndarray
"""A dense square complex matrix; the universal carrier for states,
POVM elements and quorum projectors."""


def as_operator(x) -> ComplexOperator:
    """Coerce ``x`` to a square complex matrix, validating its shape."""
    a = np.asarray(x, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(a: ComplexOperator) -> ComplexOperator:
    return np.conj(a.T)


def vec(a: ComplexOperator) -> np.ndarray:
    """Row-major vectorization."""
    return np.asarray(a, dtype=complex).reshape(-1)


def unvec(v: np.ndarray, dim: int) -> ComplexOperator:
    v = np.asarray(v, dtype=complex)
    if v.size != dim * dim:
        raise DimensionMismatchError(f"vector of size {v.size} is not {dim}x{dim}")
    return v.reshape(dim, dim)


def tensor_product(a: ComplexOperator, b: ComplexOperator) -> ComplexOperator:
    """Kronecker product with the first factor on the coarse index."""
    return np.kron(as_operator(a), as_operator(b))


def partial_trace_first(x: ComplexOperator, dim_first: int) -> ComplexOperator:
    """Trace out the first tensor factor of dimension ``dim_first``.

    ``result[p, q] = sum_i x[(i,p), (i,q)]``
    """
    x = as_operator(x)
    d = x.shape[0]
    if dim_first <= 0 or d % dim_first != 0:
        raise DimensionMismatchError(
            f"dimension {d} is not divisible by first-factor dimension {dim_first}"
        )
    d2 = d // dim_first
    return np.einsum("ipiq->pq", x.reshape(dim_first, d2, dim_first, d2))


def partial_trace_second(x: ComplexOperator, dim_second: int) -> ComplexOperator:
    """Trace out the second tensor factor of dimension ``dim_second``."""
    x = as_operator(x)
    d = x.shape[0]
    if dim_second <= 0 or d % dim_second != 0:
        raise DimensionMismatchError(
            f"dimension {d} is not divisible by second-factor dimension {dim_second}"
        )
    d1 = d // dim_second
    return np.einsum("piqi->pq", x.reshape(d1, dim_second, d1, dim_second))


@dataclass(frozen=True)
class HermitianCheckReport:
    """Hermiticity and positivity diagnostics for one operator.

    ``max_antihermitian_deviation`` is ``max |X[i,j] - conj(X[j,i])|``;
    ``min_eigenvalue`` is the smallest eigenvalue of the Hermitian part
    ``(X + X^dag)/2``.  The deviation is reported, not silently
    symmetrized away, so that non-Hermitian garbage surfaces in tests.
    """

    max_antihermitian_deviation: float
    min_eigenvalue: float


def positivity_report(x: ComplexOperator) -> HermitianCheckReport:
    x = as_operator(x)
    deviation = float(np.abs(x - dagger(x)).max())
    hermitian_part = (x + dagger(x)) / 2.0
    eigenvalues = np.linalg.eigvalsh(hermitian_part)
    return HermitianCheckReport(deviation, float(eigenvalues[0]))


def fock_quadrature_table(max_m: int, xs) -> np.ndarray:
    """Quadrature wavefunctions psi_m(x) for m = 0..max_m, shape (max_m+1, len(xs)).

    Convention: vacuum variance 1/4, i.e. psi_0(x) = (2/pi)^(1/4) exp(-x^2).
    Levels are generated by the normalized three-term recurrence

        psi_{m+1}(x) = (2 x psi_m(x) - sqrt(m) psi_{m-1}(x)) / sqrt(m+1),

    which avoids factorials and stays stable well past m = 60.
    """
    if max_m < 0:
        raise ValueError("max_m must be nonnegative")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    table = np.zeros((max_m + 1, xs.size))
    table[0] = (2.0 / np.pi) ** 0.25 * np.exp(-xs * xs)
    if max_m >= 1:
        table[1] = 2.0 * xs * table[0]
    for m in range(1, max_m):
        table[m + 1] = (2.0 * xs * table[m] - np.sqrt(m) * table[m - 1]) / np.sqrt(m + 1)
    return table


def fock_quadrature_amplitude(m: int, x: float) -> float:
    """psi_m(x) in the vacuum-variance-1/4 convention."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    return float(fock_quadrature_table(m, [x])[m, 0])


def hermitian_inverse_sqrt(a: ComplexOperator, floor: float = 1e-14) -> ComplexOperator:
    """Inverse square root of a positive Hermitian matrix.

    Eigenvalues below ``floor * max_eigenvalue`` are treated as zero
    (their inverse-sqrt contribution is dropped), which keeps the result
    finite for numerically rank-deficient inputs.
    """
    a = as_operator(a)
    w, u = np.linalg.eigh((a + dagger(a)) / 2.0)
    cut = floor * max(float(w[-1]), 0.0)
    keep = w > cut
    inv_sqrt = np.zeros_like(w)
    inv_sqrt[keep] = 1.0 / np.sqrt(w[keep])
    return (u * inv_sqrt) @ dagger(u)
