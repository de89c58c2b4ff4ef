"""
The D×D reduced matrices G and Ĝ and their Perron-Frobenius data.

G_cd = alpha_c g²_cd and Ĝ_cd = alpha_c g²_dc. Both are entrywise positive,
share their spectral radius, and the limiting spectrum is supported on the
disk of radius sqrt(rho(G)).
"""

import logging
import math
import sys
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import numpy.typing as npt

from .block_model import BlockStructure, validate
from .errors import NoConvergence, NonPositiveMatrix

__all__ = [
    "ReducedPair",
    "build_reduced",
    "hilbert_schmidt_radius",
    "is_separable",
    "perron_eigenpair",
    "spectral_radius",
]

logger = logging.getLogger(__name__)

POWER_TOL = 1e-12
POWER_MAX_ITER = 100_000
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, slots=True, eq=False)
class ReducedPair:
    """Block fractions, G, Ĝ and the Perron-Frobenius eigenpair of G."""

    alpha: npt.NDArray[np.float64]
    """Block fractions, the weights of every block-averaged quantity."""

    G: npt.NDArray[np.float64]
    Ghat: npt.NDArray[np.float64]

    pf_value: float
    """lambda = rho(G) = rho(Ĝ)."""

    pf_vector: npt.NDArray[np.float64]
    """Positive eigenvector of G for `pf_value`, entries summing to 1."""

    pf_vector_hat: npt.NDArray[np.float64]
    """Positive eigenvector of Ĝ for `pf_value`, entries summing to 1."""

    @property
    def D(self) -> int:
        return self.G.shape[0]

    @property
    def radius(self) -> float:
        """Support radius sqrt(rho(G))."""
        return math.sqrt(self.pf_value)


def _closed_form_value(M: npt.NDArray[np.float64]) -> float:
    """Largest eigenvalue of a 1×1 or 2×2 positive matrix."""
    if M.shape == (1, 1):
        return float(M[0, 0])
    tr = float(M[0, 0] + M[1, 1])
    det = float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
    return (tr + math.sqrt(tr * tr - 4.0 * det)) / 2.0


def perron_eigenpair(
    M: npt.ArrayLike,
) -> tuple[float, npt.NDArray[np.float64]]:
    """
    Perron-Frobenius eigenvalue and eigenvector of an entrywise positive matrix.

    Power iteration from the all-ones vector, renormalizing to unit sum at
    each step; stops when successive iterates differ by less than 1e-12 in
    sup norm. For D <= 2 the eigenvalue is checked against its closed form.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValueError(f"Expected a non-empty square matrix, got shape {M.shape}.")
    if not np.all(np.isfinite(M)) or np.any(M <= 0):
        raise NonPositiveMatrix("Perron-Frobenius iteration needs a positive matrix.")

    D = M.shape[0]
    v = np.full(D, 1.0 / D)
    for iteration in range(1, POWER_MAX_ITER + 1):
        w = M @ v
        w_next = w / w.sum()
        step = float(np.max(np.abs(w_next - v)))
        v = w_next
        if step < POWER_TOL:
            break
    else:
        raise NoConvergence(
            f"Power iteration did not converge in {POWER_MAX_ITER} iterations.",
            iterations=POWER_MAX_ITER,
            last_iterate=v,
        )

    # With v summing to one, the sum of Mv is the eigenvalue estimate.
    value = float((M @ v).sum())
    residual = float(np.max(np.abs(M @ v - value * v)))
    logger.debug(
        "power iteration: D=%d iterations=%d value=%r residual=%.3e",
        D,
        iteration,
        value,
        residual,
    )
    if residual > RESIDUAL_TOL * max(1.0, value):
        raise NoConvergence(
            f"Perron-Frobenius residual {residual:.3e} exceeds tolerance.",
            iterations=iteration,
            last_iterate=v,
        )
    if D <= 2:
        exact = _closed_form_value(M)
        assert math.isclose(value, exact, rel_tol=1e-12, abs_tol=1e-12), (
            f"Power iteration value {value!r} disagrees with closed form {exact!r}."
        )
    return value, v


def _readonly(a: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=0 if "pytest" in sys.modules else 512)
def build_reduced(structure: BlockStructure) -> ReducedPair:
    """
    Build G and Ĝ for a structure and compute their Perron-Frobenius data.

    Results are cached by structure value; the returned arrays are read-only.
    """
    validate(structure)
    alpha = structure.alpha_array
    g2 = structure.g_array**2
    G = alpha[:, None] * g2
    Ghat = alpha[:, None] * g2.T
    value, vector = perron_eigenpair(G)
    _, vector_hat = perron_eigenpair(Ghat)
    return ReducedPair(
        alpha=_readonly(alpha),
        G=_readonly(G),
        Ghat=_readonly(Ghat),
        pf_value=value,
        pf_vector=_readonly(vector),
        pf_vector_hat=_readonly(vector_hat),
    )


def spectral_radius(structure: BlockStructure) -> float:
    """Radius sqrt(rho(G)) of the support of the limiting spectral measure."""
    return build_reduced(structure).radius


def hilbert_schmidt_radius(structure: BlockStructure) -> float:
    """
    The expected Hilbert-Schmidt norm of X_N, (sum_cd alpha_c alpha_d g²_cd)^(1/2).

    It equals the spectral radius when g depends on only one of its indices
    (see `is_separable`), and can be smaller or larger otherwise.
    """
    validate(structure)
    alpha = structure.alpha_array
    return math.sqrt(float(alpha @ structure.g_array**2 @ alpha))


def is_separable(structure: BlockStructure, *, rtol: float = 1e-12) -> bool:
    """Whether g depends only on its row index or only on its column index."""
    g = structure.g_array
    rows_constant = np.allclose(g, g[:, :1], rtol=rtol, atol=0.0)
    columns_constant = np.allclose(g, g[:1, :], rtol=rtol, atol=0.0)
    return bool(rows_constant or columns_constant)
