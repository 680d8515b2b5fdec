"""Reference solvers for the pack's coupling equations.

Everything here is deliberately self-contained (no numpy.linalg): these
routines provide an independent route to the branch currents, matrix
inverses and eigenvalues that the model builder and the certificate
checker obtain by other means, so the two can be compared in tests and
in the verify command.
"""

from __future__ import annotations

import numpy as np

from .errors import InternalConsistencyError, ParameterError, SingularMatrixError


def _lu_factor(a: np.ndarray):
    """Doolittle LU with partial pivoting; returns packed factors and
    the row permutation."""
    m = np.array(a, dtype=float)
    n, ncols = m.shape
    if n != ncols:
        raise ParameterError("matrix must be square, got %dx%d" % (n, ncols))
    if not np.all(np.isfinite(m)):
        raise ParameterError("matrix entries must be finite")
    scale = max(np.max(np.abs(m)), 1.0)
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(m[k:, k])))
        if abs(m[p, k]) < 1e-14 * scale:
            raise SingularMatrixError(
                "pivot %d vanished during elimination" % k, pivot_index=k
            )
        if p != k:
            m[[k, p]] = m[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        m[k + 1:, k] /= m[k, k]
        m[k + 1:, k + 1:] -= np.outer(m[k + 1:, k], m[k, k + 1:])
    return m, perm


def solve_linear(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ x = b by LU elimination with partial pivoting.

    The result is checked against the inputs: a backward error above
    1e-10 raises InternalConsistencyError.
    """
    b = np.asarray(b, dtype=float)
    a_shape = np.shape(a)
    if b.shape != a_shape[:1]:
        raise ParameterError("rhs shape %s does not match matrix" % (b.shape,))
    lu, perm = _lu_factor(a)
    n = lu.shape[0]
    x = b[perm].copy()
    for k in range(1, n):
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - lu[k, k + 1:] @ x[k + 1:]) / lu[k, k]

    residual = np.max(np.abs(np.asarray(a, dtype=float) @ x - b))
    denom = np.max(np.abs(a)) * max(np.max(np.abs(x)), 1.0) + np.max(np.abs(b)) + 1.0
    if residual > 1e-10 * denom:
        raise InternalConsistencyError(
            "linear solve backward error %.3e exceeds tolerance" % (residual / denom)
        )
    return x


def numeric_inverse(a: np.ndarray) -> np.ndarray:
    """Invert column by column via solve_linear."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    inv = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        inv[:, j] = solve_linear(a, e)
    return inv


def reference_branch_currents(
    series_resistances: np.ndarray,
    potentials: np.ndarray,
    pack_current: float,
) -> np.ndarray:
    """Branch currents from the raw circuit equations.

    Builds the linear system directly from terminal-voltage equality of
    consecutive branches plus the current sum, then solves it. The
    potentials are the branch source voltages OCV(z_k) + w_k; positive
    current charges the cell.
    """
    r = np.asarray(series_resistances, dtype=float)
    p = np.asarray(potentials, dtype=float)
    n = r.size
    if p.shape != (n,):
        raise ParameterError("potentials shape %s does not match %d branches" % (p.shape, n))
    lhs = np.zeros((n, n))
    rhs = np.zeros(n)
    for k in range(n - 1):
        lhs[k, k] = r[k]
        lhs[k, k + 1] = -r[k + 1]
        rhs[k] = p[k + 1] - p[k]
    lhs[n - 1, :] = 1.0
    rhs[n - 1] = pack_current
    return solve_linear(lhs, rhs)


def branch_voltage_spread(
    series_resistances: np.ndarray,
    potentials: np.ndarray,
    currents: np.ndarray,
) -> float:
    """Worst disagreement between branch terminal voltages.

    All branches share the pack terminals, so p_k + r_k i_k must agree;
    the spread measures how well a candidate current vector satisfies
    that constraint.
    """
    r = np.asarray(series_resistances, dtype=float)
    p = np.asarray(potentials, dtype=float)
    v = p + r * np.asarray(currents, dtype=float)
    return float(np.max(v) - np.min(v))


def jacobi_eigenvalues(a: np.ndarray, sweep_tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Returns them in ascending order. The input must be symmetric to
    1e-9 relative; the iteration stops once the off-diagonal Frobenius
    mass drops below sweep_tol relative to the whole matrix.
    """
    m = np.array(a, dtype=float)
    n, ncols = m.shape
    if n != ncols:
        raise ParameterError("matrix must be square, got %dx%d" % (n, ncols))
    scale = max(np.max(np.abs(m)), 1.0)
    if np.max(np.abs(m - m.T)) > 1e-9 * scale:
        raise ParameterError("matrix is not symmetric")
    m = 0.5 * (m + m.T)

    frob = max(np.sqrt(np.sum(m * m)), 1.0)
    for _ in range(max_sweeps):
        # Sum the off-diagonal mass directly; subtracting the diagonal
        # mass from the total cancels catastrophically once converged.
        off_part = m - np.diag(np.diag(m))
        off = np.sqrt(np.sum(off_part * off_part))
        if off <= sweep_tol * frob:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(m[p, q]) <= 1e-30 * scale:
                    continue
                theta = (m[q, q] - m[p, p]) / (2.0 * m[p, q])
                t = np.sign(theta) if theta != 0.0 else 1.0
                t = t / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * m[:, p] - s * m[:, q]
                rot_q = s * m[:, p] + c * m[:, q]
                m[:, p], m[:, q] = rot_p, rot_q
                rot_p = c * m[p, :] - s * m[q, :]
                rot_q = s * m[p, :] + c * m[q, :]
                m[p, :], m[q, :] = rot_p, rot_q
    else:
        raise InternalConsistencyError(
            "Jacobi iteration failed to converge in %d sweeps" % max_sweeps
        )
    return np.sort(np.diag(m))
