"""
The block-structured random matrix model.

An N×N matrix is cut into D² rectangular blocks. Row i belongs to block
c_i, and entry (i, j) is `g[c_i, c_j] * J_ij` where the J_ij are iid with
mean 0 and variance 1/N.
"""

import enum
import math
import typing as t
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .errors import IndexOutOfRange, InvalidAlpha, InvalidD, InvalidG, InvalidStructure

__all__ = [
    "BlockStructure",
    "EntryLaw",
    "SampledMatrix",
    "block_index",
    "block_labels",
    "block_sizes",
    "sample_matrix",
    "validate",
]

ALPHA_SUM_TOL = 1e-12

# Slack used when flooring alpha_c * N so that products such as
# 0.29 * 100 = 28.999999999999996 floor to the intended integer.
_FLOOR_SLACK = 1e-9


class EntryLaw(enum.StrEnum):
    """Distribution of the normalized entries J_ij."""

    REAL_GAUSSIAN = "real-gaussian"
    COMPLEX_GAUSSIAN = "complex-gaussian"
    RADEMACHER = "rademacher"

    @property
    def is_real(self) -> bool:
        return self is not EntryLaw.COMPLEX_GAUSSIAN


@dataclass(frozen=True, slots=True)
class BlockStructure:
    """
    Parameters of the model: block fractions `alpha`, per-block standard
    deviation multipliers `g`, and the entry law.

    Fields are stored as tuples so structures hash and compare by value.
    Construction does not validate; call `validate()` (every operation
    that consumes a structure does).
    """

    alpha: tuple[float, ...]
    g: tuple[tuple[float, ...], ...]
    distribution: EntryLaw = EntryLaw.COMPLEX_GAUSSIAN

    @property
    def D(self) -> int:
        """Number of blocks per axis."""
        return len(self.alpha)

    @property
    def alpha_array(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.alpha, dtype=np.float64)

    @property
    def g_array(self) -> npt.NDArray[np.float64]:
        return np.asarray(self.g, dtype=np.float64).reshape(self.D, -1)

    @classmethod
    def from_arrays(
        cls,
        alpha: npt.ArrayLike,
        g: npt.ArrayLike,
        distribution: EntryLaw | str = EntryLaw.COMPLEX_GAUSSIAN,
    ) -> t.Self:
        """Build a structure from array-likes (lists, numpy arrays, ...)."""
        alpha_arr = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
        g_arr = np.atleast_2d(np.asarray(g, dtype=np.float64))
        return cls(
            alpha=tuple(float(a) for a in alpha_arr),
            g=tuple(tuple(float(x) for x in row) for row in g_arr),
            distribution=EntryLaw(distribution),
        )

    @classmethod
    def column_dependent(
        cls,
        alpha: npt.ArrayLike,
        gamma: npt.ArrayLike,
        distribution: EntryLaw | str = EntryLaw.COMPLEX_GAUSSIAN,
    ) -> t.Self:
        """A structure whose g depends only on the column block: g_cd = gamma_d."""
        gamma_arr = np.asarray(gamma, dtype=np.float64)
        return cls.from_arrays(
            alpha, np.tile(gamma_arr, (gamma_arr.size, 1)), distribution
        )

    @classmethod
    def row_dependent(
        cls,
        alpha: npt.ArrayLike,
        gamma: npt.ArrayLike,
        distribution: EntryLaw | str = EntryLaw.COMPLEX_GAUSSIAN,
    ) -> t.Self:
        """A structure whose g depends only on the row block: g_cd = gamma_c."""
        gamma_arr = np.asarray(gamma, dtype=np.float64)
        return cls.from_arrays(
            alpha, np.tile(gamma_arr[:, None], (1, gamma_arr.size)), distribution
        )

    def permuted(self, order: Sequence[int]) -> t.Self:
        """Relabel the blocks: new block k is old block `order[k]`."""
        idx = np.asarray(order, dtype=np.intp)
        return type(self).from_arrays(
            self.alpha_array[idx],
            self.g_array[np.ix_(idx, idx)],
            self.distribution,
        )


def validate(structure: BlockStructure) -> None:
    """
    Check every `BlockStructure` invariant, raising the matching
    `InvalidStructure` subclass on the first violation.
    """
    D = structure.D
    if D == 0:
        raise InvalidD("A block structure needs at least one block (D >= 1).")

    alpha = structure.alpha_array
    if not np.all(np.isfinite(alpha)) or np.any(alpha <= 0):
        raise InvalidAlpha(f"All block fractions must be positive, got {structure.alpha}.")
    total = float(alpha.sum())
    if abs(total - 1.0) > ALPHA_SUM_TOL:
        raise InvalidAlpha(f"Block fractions must sum to 1, got sum {total!r}.")

    if len(structure.g) != D or any(len(row) != D for row in structure.g):
        raise InvalidG(f"g must be a {D}x{D} matrix to match alpha.")
    g = structure.g_array
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise InvalidG("All entries of g must be strictly positive.")

    if not isinstance(structure.distribution, EntryLaw):
        raise InvalidStructure(f"Unknown entry law {structure.distribution!r}.")


def block_index(i: int, N: int, alpha: Sequence[float]) -> int:
    """
    Return the 1-based block label c of row `i` (1-based): the unique c
    with i/N in the half-open interval (sum(alpha[:c-1]), sum(alpha[:c])].
    """
    if N < 1 or not 1 <= i <= N:
        raise IndexOutOfRange(f"Row index {i} is outside 1..{N}.")
    edges = np.cumsum(np.asarray(alpha, dtype=np.float64))
    # Tolerate rounding in the cumulative sums; i/N == edge belongs to the
    # lower block.
    c = int(np.searchsorted(edges + ALPHA_SUM_TOL, i / N, side="left"))
    return min(c, len(edges) - 1) + 1


def block_sizes(N: int, alpha: Sequence[float]) -> tuple[int, ...]:
    """
    Sizes of the D blocks of an N×N matrix.

    Each block gets floor(alpha_c * N) rows; the leftover rows are handed
    out one per block in increasing block order.
    """
    sizes = [math.floor(a * N + _FLOOR_SLACK) for a in alpha]
    leftover = N - sum(sizes)
    for c in range(leftover):
        sizes[c] += 1
    return tuple(sizes)


def block_labels(N: int, alpha: Sequence[float]) -> npt.NDArray[np.intp]:
    """0-based block label of every row, consistent with `block_sizes`."""
    sizes = block_sizes(N, alpha)
    return np.repeat(np.arange(len(sizes), dtype=np.intp), sizes)


@dataclass(frozen=True, slots=True, eq=False)
class SampledMatrix:
    """One realization of the model."""

    entries: npt.NDArray[np.float64] | npt.NDArray[np.complex128]
    """N×N entries; real dtype for real entry laws, complex otherwise."""

    block_sizes: tuple[int, ...]
    seed: int
    trial_index: int
    labels: npt.NDArray[np.intp] = field(repr=False)

    @property
    def N(self) -> int:
        return self.entries.shape[0]


def _row_generator(seed: int, trial_index: int, row: int) -> np.random.Generator:
    """
    A Philox stream for one row of one trial.

    The 128-bit key packs (seed, trial_index); the row index occupies the
    top word of the 256-bit counter, so every row starts a disjoint block
    of the counter space.
    """
    key = (trial_index << 64) | seed
    return np.random.Generator(np.random.Philox(key=key, counter=row << 192))


def _sample_row(
    law: EntryLaw, N: int, seed: int, trial_index: int, row: int
) -> npt.NDArray[np.float64] | npt.NDArray[np.complex128]:
    rng = _row_generator(seed, trial_index, row)
    match law:
        case EntryLaw.REAL_GAUSSIAN:
            return rng.standard_normal(N) / math.sqrt(N)
        case EntryLaw.COMPLEX_GAUSSIAN:
            parts = rng.standard_normal(2 * N) / math.sqrt(2 * N)
            return parts[:N] + 1j * parts[N:]
        case EntryLaw.RADEMACHER:
            signs = 2.0 * rng.integers(0, 2, size=N) - 1.0
            return signs / math.sqrt(N)
    raise ValueError(f"Unknown entry law {law!r}")


def sample_matrix(
    structure: BlockStructure, N: int, seed: int, trial_index: int
) -> SampledMatrix:
    """
    Draw one N×N realization of the model.

    The result is a deterministic function of (structure, N, seed,
    trial_index); rows are drawn from independent counter-based streams, so
    the order in which rows are generated never matters.
    """
    validate(structure)
    if N < structure.D:
        raise InvalidStructure(f"N = {N} is smaller than the number of blocks.")
    if not 0 <= seed < 2**64:
        raise InvalidStructure(f"seed must be an unsigned 64-bit integer, got {seed}.")
    if not 0 <= trial_index < 2**64:
        raise InvalidStructure(f"trial_index must be unsigned 64-bit, got {trial_index}.")

    law = structure.distribution
    labels = block_labels(N, structure.alpha)
    dtype = np.float64 if law.is_real else np.complex128
    J = np.empty((N, N), dtype=dtype)
    for i in range(N):
        J[i] = _sample_row(law, N, seed, trial_index, i)

    g = structure.g_array
    entries = g[np.ix_(labels, labels)] * J
    return SampledMatrix(
        entries=entries,
        block_sizes=block_sizes(N, structure.alpha),
        seed=seed,
        trial_index=trial_index,
        labels=labels,
    )
