"""Small dense solvers used by the M-step and the Yule-Walker equations."""

import numpy as np

from arhmm.errors import SingularSystemError


def gauss_jordan(a, b, pivot_tol=1e-12):
    """Solve ``a @ x = b`` by Gauss-Jordan reduction with partial pivoting.

    Parameters
    ----------
    a : array_like, shape (n, n)
    b : array_like, shape (n,)
    pivot_tol : float
        Relative threshold; a pivot smaller than ``pivot_tol * max|a|`` is
        treated as zero.

    Returns
    -------
    x : ndarray, shape (n,)

    Raises
    ------
    SingularSystemError
        If a pivot falls below the threshold.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    if n == 0:
        return np.zeros(0)
    aug = np.column_stack([a, b])
    scale = np.max(np.abs(a))
    if not np.isfinite(scale):
        raise SingularSystemError("system matrix has non-finite entries")
    threshold = pivot_tol * scale
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(aug[col:, col])))
        pivot = aug[pivot_row, col]
        if scale == 0.0 or abs(pivot) <= threshold:
            raise SingularSystemError(f"pivot {pivot:.3g} in column {col} below {threshold:.3g}")
        if pivot_row != col:
            aug[[col, pivot_row]] = aug[[pivot_row, col]]
        aug[col] /= aug[col, col]
        others = np.arange(n) != col
        aug[others] -= np.outer(aug[others, col], aug[col])
    return aug[:, n].copy()


def solve_with_ridge(a, b, pivot_tol=1e-12, ridge=1e-8):
    """Gauss-Jordan solve that retries with a diagonal ridge when singular.

    The ridge added is ``ridge * trace(a) / n``. Returns ``(x, ridged)``.
    """
    try:
        return gauss_jordan(a, b, pivot_tol), False
    except SingularSystemError:
        a = np.array(a, dtype=float)
        n = a.shape[0]
        lam = ridge * np.trace(a) / n
        if not lam > 0:
            lam = ridge
        return gauss_jordan(a + lam * np.eye(n), b, pivot_tol), True


def levinson_durbin(rho, kmax):
    """Partial autocorrelations from autocorrelations by Levinson-Durbin.

    Parameters
    ----------
    rho : array_like
        Autocorrelations ``rho[0] = 1, rho[1], ..., rho[kmax]``.
    kmax : int

    Returns
    -------
    ndarray, shape (kmax,)
        ``phi_kk`` for ``k = 1..kmax``.
    """
    rho = np.asarray(rho, dtype=float)
    out = np.empty(kmax)
    phi = np.zeros(0)
    err = rho[0]
    for k in range(1, kmax + 1):
        if err <= 1e-12:
            raise SingularSystemError(f"Toeplitz system of order {k} is singular")
        acc = rho[k] - np.dot(phi, rho[k - 1:0:-1]) if k > 1 else rho[1]
        kappa = acc / err
        phi = np.concatenate([phi - kappa * phi[::-1], [kappa]])
        err *= 1.0 - kappa * kappa
        out[k - 1] = kappa
    return out
