"""
Fixed-point solver for the regularized block Stieltjes transform.

With a = i·h and â = i·ĥ on the imaginary axis η = i·t, the self-consistent
equations become a real, positive system in (h, ĥ) that depends on z only
through u = |z|²:

    x_c = sum_d G_dc h_d + t        y_c = sum_d Ĝ_dc ĥ_d + t
    h_c = x_c / (u + x_c y_c)       ĥ_c = y_c / (u + x_c y_c)

The map (h, ĥ) -> (x/(u+xy), y/(u+xy)) sends the box [0, 1/t]^2D into
itself and is iterated (with convex damping) towards its unique fixed
point. At small t the map contracts by only 1 - O(t) along the scaling
(h, ĥ) -> (λh, ĥ/λ), so each solve ends with Newton steps on a residual in
which the sum rule sum_c alpha_c h_c = sum_c alpha_c ĥ_c pins that direction.
The density follows from psi_c = 1 / (u + x_c y_c) and b_c = -z psi_c.

Every function accepts a single u with (D,) vectors, and the batch helpers
accept K values of u with (K, D) arrays; rows never interact.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .errors import InvalidSolverParams, NoConvergence, ZeroZOutsideSupport
from .reduced_matrices import ReducedPair

__all__ = [
    "FixedPointSolution",
    "SolverParams",
    "b_values",
    "homogeneous_h",
    "iterate_once",
    "solve",
    "solve_batch",
    "t_continuation",
    "t_continuation_batch",
    "t_schedule",
]

logger = logging.getLogger(__name__)

type FloatArray = npt.NDArray[np.float64]

NEWTON_SWITCH = 1e-3
"""Relative fixed-point change below which a row switches to Newton steps."""

MAX_HALVINGS = 40
ROUNDOFF = 64 * np.finfo(np.float64).eps


@dataclass(frozen=True, slots=True)
class SolverParams:
    """Tolerances and schedule for the fixed-point iteration."""

    tol: float = 1e-12
    """Sup-norm threshold on the final Newton step, relative to max(1, |h|, |ĥ|)."""

    max_iter: int = 1_000_000
    """Iteration cap per solve."""

    damping: float = 0.5
    """Weight of the raw update in the convex combination, in (0, 1]."""

    t0: float = 1.0
    """First regularization level of the continuation."""

    t_min: float = 1e-6
    """Last regularization level, reported as the t -> 0 limit."""

    vanish_threshold: float = 1e-4
    """Solutions with sum_c alpha_c h_c below this are classified as exterior."""

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidSolverParams(f"tol must be positive, got {self.tol!r}.")
        if self.max_iter < 1:
            raise InvalidSolverParams(f"max_iter must be positive, got {self.max_iter!r}.")
        if not 0 < self.damping <= 1:
            raise InvalidSolverParams(f"damping must lie in (0, 1], got {self.damping!r}.")
        if not 0 < self.t_min < self.t0:
            raise InvalidSolverParams(
                f"Need 0 < t_min < t0, got t_min={self.t_min!r}, t0={self.t0!r}."
            )
        if not self.vanish_threshold > 0:
            raise InvalidSolverParams(
                f"vanish_threshold must be positive, got {self.vanish_threshold!r}."
            )


@dataclass(frozen=True, slots=True, eq=False)
class FixedPointSolution:
    """Converged (h, ĥ, psi) at one (u, t) with convergence metadata."""

    u: float
    """|z|²."""

    t: float
    h: FloatArray
    hhat: FloatArray
    psi: FloatArray
    iterations: int
    converged: bool

    is_interior: bool
    """Whether sum_c alpha_c h_c reached the vanish threshold."""

    mean_h: float
    """sum_c alpha_c h_c, the regularized Stieltjes transform divided by i."""

    mean_hhat: float
    """sum_c alpha_c ĥ_c; equals `mean_h` at a fixed point."""

    @property
    def D(self) -> int:
        return self.h.shape[0]


def t_schedule(params: SolverParams) -> list[float]:
    """Regularization levels t0, t0/2, t0/4, ... while above t_min, then t_min."""
    levels: list[float] = []
    t = params.t0
    while t > params.t_min:
        levels.append(t)
        t /= 2.0
    levels.append(params.t_min)
    return levels


def _x_y(
    h: FloatArray, hhat: FloatArray, t: float, reduced: ReducedPair
) -> tuple[FloatArray, FloatArray]:
    # Row i of block c couples to column block d through alpha_d g²_cd,
    # which contracts G and Ĝ over their first index.
    return h @ reduced.G + t, hhat @ reduced.Ghat + t


def _denominator(
    x: FloatArray, y: FloatArray, u: float | FloatArray
) -> FloatArray:
    u_arr = np.asarray(u, dtype=np.float64)
    if u_arr.ndim:
        u_arr = u_arr[:, None]
    return u_arr + x * y


def iterate_once(
    h: FloatArray,
    hhat: FloatArray,
    u: float | FloatArray,
    t: float,
    reduced: ReducedPair,
    damping: float,
) -> tuple[FloatArray, FloatArray]:
    """
    One damped application of the fixed-point map.

    The raw update is H = x/(u + xy), Ĥ = y/(u + xy); the result is
    (1 - damping)·(h, ĥ) + damping·(H, Ĥ). Denominators are at least t², so
    the update never divides by zero, and each raw component is at most 1/t.
    """
    x, y = _x_y(h, hhat, t, reduced)
    den = _denominator(x, y, u)
    H = x / den
    Hhat = y / den
    if damping == 1.0:
        return H, Hhat
    keep = 1.0 - damping
    return keep * h + damping * H, keep * hhat + damping * Hhat


def _check_u_t(u: FloatArray, t: float) -> None:
    if not t > 0:
        raise ValueError(f"The regularization t must be positive, got {t!r}.")
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise ValueError("u = |z|² must be finite and non-negative.")


def _scale(h: FloatArray, hhat: FloatArray) -> FloatArray:
    return np.maximum(
        1.0, np.maximum(np.max(np.abs(h), axis=1), np.max(np.abs(hhat), axis=1))
    )


def _residual(
    h: FloatArray,
    hhat: FloatArray,
    u: FloatArray,
    t: float,
    reduced: ReducedPair,
    swapped: npt.NDArray[np.intp] | None = None,
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray, npt.NDArray[np.intp]]:
    """
    Residuals (h·den - x, ĥ·den - y) of a (K, D) batch, with one row per
    batch entry replaced by the sum rule sum_c alpha_c (h_c - ĥ_c).

    The identity

        sum_c alpha_c (y_c r_c - x_c r̂_c) / den_c = t·sum_c alpha_c (h_c - ĥ_c)

    holds for every (h, ĥ), so swapping the equation with the largest weight
    for the sum rule keeps the roots and removes the near-singular direction
    (h, ĥ) -> (λh, ĥ/λ) that the equations only feel at order t.
    """
    x, y = _x_y(h, hhat, t, reduced)
    den = _denominator(x, y, u)
    r = np.concatenate([h * den - x, hhat * den - y], axis=1)
    alpha = reduced.alpha
    if swapped is None:
        weight = np.concatenate([alpha * y / den, alpha * x / den], axis=1)
        swapped = np.argmax(weight, axis=1)
    r[np.arange(r.shape[0]), swapped] = h @ alpha - hhat @ alpha
    return r, x, y, den, swapped


def _jacobian(
    h: FloatArray,
    hhat: FloatArray,
    x: FloatArray,
    y: FloatArray,
    den: FloatArray,
    swapped: npt.NDArray[np.intp],
    reduced: ReducedPair,
) -> FloatArray:
    K, D = h.shape
    Gt, Ghatt = reduced.G.T, reduced.Ghat.T
    diagonal = den[:, :, None] * np.eye(D)
    J = np.empty((K, 2 * D, 2 * D))
    J[:, :D, :D] = diagonal + (h * y - 1.0)[:, :, None] * Gt
    J[:, :D, D:] = (h * x)[:, :, None] * Ghatt
    J[:, D:, :D] = (hhat * y)[:, :, None] * Gt
    J[:, D:, D:] = diagonal + (hhat * x - 1.0)[:, :, None] * Ghatt
    J[np.arange(K), swapped] = np.concatenate([reduced.alpha, -reduced.alpha])
    return J


def _newton_rows(
    rows: npt.NDArray[np.intp],
    u: FloatArray,
    t: float,
    h: FloatArray,
    hhat: FloatArray,
    reduced: ReducedPair,
    params: SolverParams,
) -> tuple[npt.NDArray[np.bool_], npt.NDArray[np.bool_]]:
    """
    One damped Newton step on `rows`, updating h and ĥ in place.

    Returns (done, failed): done rows have a step below `tol` or a residual
    at roundoff; failed rows found no acceptable step and fall back to the
    fixed-point map.
    """
    D = reduced.D
    hr, hhr, ur = h[rows], hhat[rows], u[rows]
    r, x, y, den, swapped = _residual(hr, hhr, ur, t, reduced)
    norm = np.linalg.norm(r, axis=1)
    size = np.maximum(
        np.maximum(np.max(x, axis=1), np.max(y, axis=1)), _scale(hr, hhr)
    )
    done = norm <= ROUNDOFF * size
    failed = np.zeros(rows.size, dtype=np.bool_)
    live = np.flatnonzero(~done)
    if live.size == 0:
        return done, failed

    J = _jacobian(
        hr[live], hhr[live], x[live], y[live], den[live], swapped[live], reduced
    )
    try:
        step = -np.linalg.solve(J, r[live][:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        failed[live] = True
        return done, failed
    v = np.concatenate([hr[live], hhr[live]], axis=1)
    lam = np.ones(live.size)
    pending = np.isfinite(step).all(axis=1)
    failed[live[~pending]] = True
    for _ in range(MAX_HALVINGS):
        idx = np.flatnonzero(pending)
        if idx.size == 0:
            break
        trial = v[idx] + lam[idx, None] * step[idx]
        r_trial, *_ = _residual(
            trial[:, :D], trial[:, D:], ur[live[idx]], t, reduced, swapped[live[idx]]
        )
        trial_norm = np.linalg.norm(r_trial, axis=1)
        ok = np.all(trial >= 0.0, axis=1) & (
            (trial_norm <= (1.0 - 1e-4 * lam[idx]) * norm[live[idx]])
            | (trial_norm <= ROUNDOFF * size[live[idx]])
        )
        accepted = idx[ok]
        target = rows[live[accepted]]
        h[target] = trial[ok, :D]
        hhat[target] = trial[ok, D:]
        threshold = params.tol * _scale(trial[ok, :D], trial[ok, D:])
        small = (lam[accepted] == 1.0) & (
            np.max(np.abs(step[accepted]), axis=1) <= threshold
        )
        done[live[accepted[small]]] = True
        pending[accepted] = False
        lam[idx[~ok]] *= 0.5
    failed[live[pending]] = True
    return done, failed


def _iterate_batch(
    u: FloatArray,
    t: float,
    h: FloatArray,
    hhat: FloatArray,
    reduced: ReducedPair,
    params: SolverParams,
) -> tuple[FloatArray, FloatArray, npt.NDArray[np.int64], npt.NDArray[np.bool_]]:
    """
    Solve every row of a (K, D) batch and freeze rows as they converge.

    Rows start on the damped fixed-point map. Once a row's sup-norm change
    falls below `NEWTON_SWITCH` it is finished by Newton steps, and it
    converges when the Newton step is below `tol` (relative to max(1, |h|))
    or the residual reaches roundoff. Every map application or Newton step
    counts as one iteration.
    """
    K = u.shape[0]
    iterations = np.zeros(K, dtype=np.int64)
    converged = np.zeros(K, dtype=np.bool_)
    polishing = np.zeros(K, dtype=np.bool_)
    for iteration in range(1, params.max_iter + 1):
        rows = np.flatnonzero(~converged)
        if rows.size == 0:
            break
        iterations[rows] = iteration

        newton = rows[polishing[rows]]
        if newton.size:
            done, failed = _newton_rows(newton, u, t, h, hhat, reduced, params)
            converged[newton[done]] = True
            polishing[newton[failed]] = False

        sweep = rows[~polishing[rows]]
        if sweep.size:
            h_rows, hhat_rows = h[sweep], hhat[sweep]
            h_next, hhat_next = iterate_once(
                h_rows, hhat_rows, u[sweep], t, reduced, params.damping
            )
            change = np.maximum(
                np.max(np.abs(h_next - h_rows), axis=1),
                np.max(np.abs(hhat_next - hhat_rows), axis=1),
            )
            h[sweep] = h_next
            hhat[sweep] = hhat_next
            polishing[sweep[change <= NEWTON_SWITCH * _scale(h_next, hhat_next)]] = True
    return h, hhat, iterations, converged


def _start(
    K: int,
    D: int,
    warm_start: tuple[npt.ArrayLike, npt.ArrayLike] | None,
) -> tuple[FloatArray, FloatArray]:
    if warm_start is None:
        return np.zeros((K, D)), np.zeros((K, D))
    h0, hhat0 = warm_start
    h = np.array(np.broadcast_to(np.asarray(h0, dtype=np.float64), (K, D)))
    hhat = np.array(np.broadcast_to(np.asarray(hhat0, dtype=np.float64), (K, D)))
    return h, hhat


def _solutions(
    u: FloatArray,
    t: float,
    h: FloatArray,
    hhat: FloatArray,
    iterations: npt.NDArray[np.int64],
    converged: npt.NDArray[np.bool_],
    reduced: ReducedPair,
    params: SolverParams,
) -> list[FixedPointSolution]:
    x, y = _x_y(h, hhat, t, reduced)
    psi = 1.0 / _denominator(x, y, u)
    mean_h = h @ reduced.alpha
    mean_hhat = hhat @ reduced.alpha
    return [
        FixedPointSolution(
            u=float(u[k]),
            t=t,
            h=h[k].copy(),
            hhat=hhat[k].copy(),
            psi=psi[k].copy(),
            iterations=int(iterations[k]),
            converged=bool(converged[k]),
            is_interior=bool(mean_h[k] >= params.vanish_threshold),
            mean_h=float(mean_h[k]),
            mean_hhat=float(mean_hhat[k]),
        )
        for k in range(u.shape[0])
    ]


def solve_batch(
    u_values: npt.ArrayLike,
    t: float,
    reduced: ReducedPair,
    params: SolverParams = SolverParams(),
    warm_start: tuple[npt.ArrayLike, npt.ArrayLike] | None = None,
    *,
    raise_on_failure: bool = True,
) -> list[FixedPointSolution]:
    """
    Solve at several values of u and a common t.

    `warm_start` is a pair (h, ĥ) of shape (D,) or (K, D); the default cold
    start is all zeros. With `raise_on_failure`, a row that hits `max_iter`
    raises `NoConvergence` carrying the batch's last iterate; otherwise the
    row is returned with `converged=False`.
    """
    u = np.atleast_1d(np.asarray(u_values, dtype=np.float64))
    _check_u_t(u, t)
    h, hhat = _start(u.shape[0], reduced.D, warm_start)
    h, hhat, iterations, converged = _iterate_batch(u, t, h, hhat, reduced, params)
    if raise_on_failure and not converged.all():
        first = int(np.flatnonzero(~converged)[0])
        raise NoConvergence(
            f"Fixed-point iteration did not converge at u={u[first]!r}, t={t!r} "
            f"within {params.max_iter} iterations.",
            iterations=int(iterations[first]),
            last_iterate=(h, hhat),
            t=t,
            index=first,
        )
    return _solutions(u, t, h, hhat, iterations, converged, reduced, params)


def solve(
    u: float,
    t: float,
    reduced: ReducedPair,
    params: SolverParams = SolverParams(),
    warm_start: tuple[npt.ArrayLike, npt.ArrayLike] | None = None,
    *,
    raise_on_failure: bool = True,
) -> FixedPointSolution:
    """Solve the fixed-point equations at one (u, t)."""
    (solution,) = solve_batch(
        [u], t, reduced, params, warm_start, raise_on_failure=raise_on_failure
    )
    return solution


def t_continuation_batch(
    u_values: npt.ArrayLike,
    reduced: ReducedPair,
    params: SolverParams = SolverParams(),
    warm_start: tuple[npt.ArrayLike, npt.ArrayLike] | None = None,
) -> list[FixedPointSolution]:
    """
    Follow each u down the geometric t schedule to t_min, warm-starting
    every level from the previous one.
    """
    u = np.atleast_1d(np.asarray(u_values, dtype=np.float64))
    _check_u_t(u, params.t_min)
    h, hhat = _start(u.shape[0], reduced.D, warm_start)
    total = np.zeros(u.shape[0], dtype=np.int64)
    converged = np.ones(u.shape[0], dtype=np.bool_)
    levels = t_schedule(params)
    for t in levels:
        h, hhat, iterations, converged = _iterate_batch(u, t, h, hhat, reduced, params)
        total += iterations
        if not converged.all():
            first = int(np.flatnonzero(~converged)[0])
            raise NoConvergence(
                f"Continuation stalled at t={t!r} for u={u[first]!r}.",
                iterations=int(total[first]),
                last_iterate=(h, hhat),
                t=t,
                index=first,
            )
        logger.debug(
            "continuation level t=%.3e: %d rows, max iterations %d",
            t,
            u.shape[0],
            int(iterations.max()),
        )
    return _solutions(u, levels[-1], h, hhat, total, converged, reduced, params)


def t_continuation(
    u: float,
    reduced: ReducedPair,
    params: SolverParams = SolverParams(),
    warm_start: tuple[npt.ArrayLike, npt.ArrayLike] | None = None,
) -> FixedPointSolution:
    """The t -> 0 solution at one u, approached through `t_schedule(params)`."""
    (solution,) = t_continuation_batch([u], reduced, params, warm_start)
    return solution


def b_values(solution: FixedPointSolution, z: complex) -> npt.NDArray[np.complex128]:
    """
    The off-diagonal block transform b_c at z.

    Inside the support b_c = -z·psi_c. Outside it b tends to -1/conj(z),
    which is returned directly; z = 0 cannot lie outside the support.
    """
    z = complex(z)
    u = abs(z) ** 2
    if not math.isclose(u, solution.u, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"|z|² = {u!r} does not match the solution's u = {solution.u!r}.")
    if solution.is_interior:
        return -z * solution.psi.astype(np.complex128)
    if z == 0:
        raise ZeroZOutsideSupport("z = 0 was classified as outside the support.")
    return np.full(solution.D, -1.0 / z.conjugate(), dtype=np.complex128)


def homogeneous_h(u: float, sigma: float, t: float) -> float:
    """
    The positive solution of the one-block equation
    h = (sigma² h + t) / (u + (sigma² h + t)²).

    With x = sigma² h + t this is the cubic x³ - t x² + (u - sigma²) x - t u = 0,
    which has exactly one root above t. As t -> 0 the solution tends to
    sqrt(sigma² - u) / sigma² inside the disk and to 0 outside it.
    """
    roots = np.roots([1.0, -t, u - sigma**2, -t * u])
    real = roots[np.abs(roots.imag) <= 1e-12 * max(1.0, float(np.max(np.abs(roots))))]
    x = float(np.max(real.real))
    return (x - t) / sigma**2

