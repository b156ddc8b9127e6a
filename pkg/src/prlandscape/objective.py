"""Intensity least-squares objective and its derivatives.

For an ensemble with rows a_j and squared measurements y_j^2,

    F(z)        = (1/m) sum_j (<a_j, z>^2 - y_j^2)^2
    grad F(z)   = (4/m) sum_j (<a_j, z>^2 - y_j^2) <a_j, z> a_j
    H_xi.xi(z)  = (4/m) sum_j (a_j^T xi)^2 (3 (a_j^T z)^2 - y_j^2)

The 4/m gradient prefactor is the calculus of F; the critical-point set
and every region verdict are invariant to this positive constant.
Finite-difference oracles (central, step h = 1e-5 * (1 + ||z||)) are
provided for independent cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from ._backend import kernels
from .ensemble import MeasurementEnsemble
from .errors import CapacityError, ConvergenceError, NormalizationError, ShapeError

DENSE_LIMIT = 512
UNIT_TOL = 1e-9


def _vec(v, n: int, what: str = "z") -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.shape != (n,):
        raise ShapeError(f"{what} has shape {v.shape}, expected ({n},)")
    return v


def _unit(v, n: int, what: str) -> np.ndarray:
    v = _vec(v, n, what)
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > UNIT_TOL:
        raise NormalizationError(f"{what} has norm {nrm!r}, expected 1 within {UNIT_TOL}")
    return v


@dataclass(frozen=True)
class ObjectiveEvaluation:
    """Loss, gradient, and the cached residuals r_j = <a_j,z>^2 - y_j^2."""

    loss: float
    gradient: np.ndarray
    residuals: np.ndarray


@dataclass(frozen=True)
class CurvatureProbe:
    """The Hessian quadratic form along a unit direction."""

    direction: np.ndarray
    quad_form: float


def loss(e: MeasurementEnsemble, z) -> float:
    return kernels.loss(e.rows, e.y_squared, _vec(z, e.n))


def gradient(e: MeasurementEnsemble, z) -> np.ndarray:
    _, g = kernels.loss_gradient(e.rows, e.y_squared, _vec(z, e.n))
    return g


def loss_and_gradient(e: MeasurementEnsemble, z) -> tuple[float, np.ndarray]:
    """Fused single-pass loss and gradient (the solver hot path)."""
    return kernels.loss_gradient(e.rows, e.y_squared, _vec(z, e.n))


def evaluate(e: MeasurementEnsemble, z) -> ObjectiveEvaluation:
    z = _vec(z, e.n)
    r = kernels.residuals(e.rows, e.y_squared, z)
    val, g = kernels.loss_gradient(e.rows, e.y_squared, z)
    return ObjectiveEvaluation(loss=val, gradient=g, residuals=r)


def hessian_quadratic_form(e: MeasurementEnsemble, z, xi) -> float:
    return kernels.quad_form(
        e.rows, e.y_squared, _vec(z, e.n), _unit(xi, e.n, "xi")
    )


def curvature_probe(e: MeasurementEnsemble, z, xi) -> CurvatureProbe:
    xi = _unit(xi, e.n, "xi")
    xi = xi / np.linalg.norm(xi)  # tighten to the 1e-12 invariant
    return CurvatureProbe(direction=xi, quad_form=hessian_quadratic_form(e, z, xi))


def hessian_vector_product(e: MeasurementEnsemble, z, v) -> np.ndarray:
    return kernels.hvp(e.rows, e.y_squared, _vec(z, e.n), _vec(v, e.n, "v"))


def full_hessian(e: MeasurementEnsemble, z, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Assemble the n x n Hessian (4/m) sum_j (3 s_j^2 - y_j^2) a_j a_j^T."""
    if e.n > dense_limit:
        raise CapacityError(
            f"n={e.n} exceeds the dense limit {dense_limit}; "
            "use hessian_vector_product with an iterative eigensolver"
        )
    z = _vec(z, e.n)
    s = e.rows @ z
    w = 3.0 * s * s - e.y_squared
    h = (e.rows * w[:, None]).T @ e.rows
    h *= 4.0 / e.m
    return 0.5 * (h + h.T)


def extreme_eigenvalues(
    e: MeasurementEnsemble,
    z,
    which: str = "min",
    dense_limit: int = DENSE_LIMIT,
    tol: float = 1e-8,
    maxiter: int | None = None,
):
    """Extreme Hessian eigenpair at z.

    Dense eigendecomposition up to ``dense_limit``; beyond that a Lanczos
    iteration on hessian_vector_product with the given tolerance and a cap
    of 10*n iterations.  The returned pair satisfies
    ||H v - lambda v|| <= 1e-8 * (1 + |lambda|).
    """
    if which not in ("min", "max"):
        raise ValueError(f"which must be 'min' or 'max', got {which!r}")
    z = _vec(z, e.n)
    n = e.n
    if n <= dense_limit:
        h = full_hessian(e, z, dense_limit=dense_limit)
        vals, vecs = np.linalg.eigh(h)
        idx = 0 if which == "min" else n - 1
        lam, vec = float(vals[idx]), vecs[:, idx].copy()
    else:
        op = spla.LinearOperator(
            (n, n), matvec=lambda v: hessian_vector_product(e, z, v), dtype=np.float64
        )
        cap = 10 * n if maxiter is None else maxiter
        try:
            vals, vecs = spla.eigsh(
                op, k=1, which="SA" if which == "min" else "LA", tol=tol, maxiter=cap
            )
        except spla.ArpackNoConvergence as err:
            raise ConvergenceError(
                f"eigensolver did not converge within {cap} iterations", float("nan")
            ) from err
        lam, vec = float(vals[0]), vecs[:, 0].copy()
    residual = float(
        np.linalg.norm(hessian_vector_product(e, z, vec) - lam * vec)
    )
    bound = 1e-8 * (1.0 + abs(lam))
    if residual > bound:
        raise ConvergenceError(
            f"eigenpair residual {residual:.3e} exceeds {bound:.3e}", residual
        )
    return lam, vec


def fd_step(z) -> float:
    """Frozen oracle step h = 1e-5 * (1 + ||z||)."""
    return 1e-5 * (1.0 + float(np.linalg.norm(z)))


def fd_gradient(e: MeasurementEnsemble, z, h: float | None = None) -> np.ndarray:
    """Independent central-difference gradient oracle built on loss only."""
    z = _vec(z, e.n)
    h = fd_step(z) if h is None else h
    out = np.empty(e.n)
    for k in range(e.n):
        zp = z.copy()
        zm = z.copy()
        zp[k] += h
        zm[k] -= h
        out[k] = (loss(e, zp) - loss(e, zm)) / (2.0 * h)
    return out


def fd_hessian_vector_product(e: MeasurementEnsemble, z, v, h: float | None = None) -> np.ndarray:
    """Central-difference Hessian action oracle built on gradient only."""
    z = _vec(z, e.n)
    v = _vec(v, e.n, "v")
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        return np.zeros(e.n)
    u = v / nrm
    h = fd_step(z) if h is None else h
    return nrm * (gradient(e, z + h * u) - gradient(e, z - h * u)) / (2.0 * h)
