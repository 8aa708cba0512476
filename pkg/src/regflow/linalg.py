"""Dense Euclidean-space primitives.

Vectors are 1-D float64 arrays, operators are dense square matrices. All
entry points validate shapes and finiteness so the flows and the integrator
can assume clean data.
"""

import numpy as np

from .errors import EigFailedError, NonFiniteError, SolveFailedError

#: Reciprocal-condition threshold below which an unregularized solve is
#: treated as singular.
RCOND_FLOOR = 1e-14


def as_vector(x, dim=None):
    """Validate ``x`` as a finite 1-D float vector and return a copy."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise ValueError(f"expected dimension {dim}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError("vector has non-finite entries")
    return v.copy()


def as_matrix(a, dim=None):
    """Validate ``a`` as a finite square matrix and return a copy."""
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError("matrix has non-finite entries")
    return m.copy()


def regularized_solve(a, eps, b):
    """Solve (A + eps*I) x = b by LU with partial pivoting.

    One step of iterative refinement is applied; for the shifted systems used
    by the regularized flows this keeps the residual near rounding level even
    when A + eps*I is poorly conditioned.

    Parameters
    ----------
    a : array_like, square
    eps : float, must be > 0
    b : array_like, vector
    """
    a = as_matrix(a)
    b = as_vector(b, dim=a.shape[0])
    if not eps > 0.0:
        raise ValueError(f"shift must be positive, got {eps!r}")
    m = a + eps * np.eye(a.shape[0])
    try:
        x = np.linalg.solve(m, b)
        r = b - m @ x
        x = x + np.linalg.solve(m, r)
    except np.linalg.LinAlgError as exc:
        raise SolveFailedError(f"shifted solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolveFailedError("shifted solve produced non-finite entries")
    return x


def solve_plain(a, b, rcond_floor=RCOND_FLOOR):
    """Solve A x = b, refusing near-singular A.

    Used by the classical (unregularized) flows, where a rank-deficient
    derivative must surface as SolveFailedError rather than as garbage.
    """
    a = as_matrix(a)
    b = as_vector(b, dim=a.shape[0])
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0 or s[-1] / s[0] < rcond_floor:
        raise SolveFailedError(
            f"operator is numerically singular (rcond ~ {0.0 if s[0] == 0 else s[-1] / s[0]:.2e})"
        )
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SolveFailedError(f"solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolveFailedError("solve produced non-finite entries")
    return x


def gram_map(j):
    """Return the Gram matrix J^T J, symmetrized against rounding drift."""
    j = np.asarray(j, dtype=float)
    t = j.T @ j
    return 0.5 * (t + t.T)


def spectral_projector(t, eps, sym_tol=1e-10):
    """Orthogonal projector onto the span of eigenvectors of T with eigenvalue >= eps.

    T must be symmetric to absolute tolerance ``sym_tol``. Returns the dense
    projector matrix; the zero matrix when no eigenvalue clears the cut.
    """
    t = as_matrix(t)
    if not eps > 0.0:
        raise ValueError(f"cut level must be positive, got {eps!r}")
    if np.max(np.abs(t - t.T)) > sym_tol:
        raise ValueError("matrix is not symmetric within tolerance")
    w, u = eig_sym(t)
    keep = u[:, w >= eps]
    return keep @ keep.T


def eig_sym(t):
    """Eigendecomposition of a symmetric matrix, ascending eigenvalues."""
    try:
        w, u = np.linalg.eigh(0.5 * (t + t.T))
    except np.linalg.LinAlgError as exc:
        raise EigFailedError(f"symmetric eigensolver failed: {exc}") from exc
    return w, u


def central_difference_jacobian(f, x, step=None):
    """Column-wise central-difference Jacobian of ``f`` at ``x``.

    Default step is max(1e-6, 1e-6 * ||x||_inf), one step for all columns.
    """
    x = as_vector(x)
    if step is None:
        step = max(1e-6, 1e-6 * float(np.max(np.abs(x))) if x.size else 1e-6)
    fx = as_vector(f(x))
    jac = np.empty((fx.size, x.size))
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        jac[:, k] = (as_vector(f(x + e)) - as_vector(f(x - e))) / (2.0 * step)
    if not np.all(np.isfinite(jac)):
        raise NonFiniteError("finite-difference Jacobian has non-finite entries")
    return jac
