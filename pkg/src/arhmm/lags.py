"""AR order selection from the sample partial autocorrelation function."""

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from arhmm.errors import DataError, SingularSystemError
from arhmm.linalg import gauss_jordan

DEFAULT_KMAX = 5
DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class PacfReport:
    rho: np.ndarray
    phi_kk: np.ndarray
    critical: float
    order: int

    @property
    def significant(self):
        return np.abs(self.phi_kk) > self.critical


def _centered(series):
    y = np.asarray(series, dtype=float).ravel()
    if y.size < 2 or not np.isfinite(y).all():
        raise DataError("series must have at least two finite values")
    y = y - y.mean()
    if not np.any(y != 0.0):
        raise DataError("autocorrelation undefined for a constant series")
    return y


def autocovariances(series, kmax):
    """Biased sample autocovariances ``zeta_0..zeta_kmax`` (divisor ``len(series)``)."""
    y = _centered(series)
    n = y.size
    if kmax >= n:
        raise DataError(f"series of length {n} too short for lag {kmax}")
    return np.array([np.dot(y[k:], y[: n - k]) / n for k in range(kmax + 1)])


def autocorrelation(series, k):
    """Lag-``k`` sample autocorrelation ``zeta_k / zeta_0``."""
    zeta = autocovariances(series, k)
    return float(zeta[k] / zeta[0])


def _toeplitz(rho, k):
    idx = np.arange(k)
    return rho[np.abs(idx[:, None] - idx[None, :])]


def pacf(series, kmax=DEFAULT_KMAX):
    """Partial autocorrelations ``Phi(1..kmax)``.

    Each ``Phi(k)`` is the last coefficient of the order-``k`` Yule-Walker
    system, solved directly with pivoted Gauss-Jordan reduction.

    Raises
    ------
    SingularSystemError
        If an order-``k`` Toeplitz system is singular.
    """
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    zeta = autocovariances(series, kmax)
    rho = zeta / zeta[0]
    out = np.empty(kmax)
    for k in range(1, kmax + 1):
        try:
            phi = gauss_jordan(_toeplitz(rho, k), rho[1 : k + 1])
        except SingularSystemError as exc:
            raise SingularSystemError(f"Yule-Walker system of order {k} is singular") from exc
        out[k - 1] = phi[-1]
    return out


def critical_value(n, alpha=DEFAULT_ALPHA):
    """Two-sided threshold ``z_{1-alpha/2} / sqrt(n)`` for white-noise PACF values."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return NormalDist().inv_cdf(1.0 - alpha / 2.0) / np.sqrt(n)


def pacf_report(series, kmax=DEFAULT_KMAX, alpha=DEFAULT_ALPHA):
    y = np.asarray(series, dtype=float).ravel()
    zeta = autocovariances(y, kmax)
    phi = pacf(y, kmax)
    crit = critical_value(y.size, alpha)
    sig = np.flatnonzero(np.abs(phi) > crit)
    order = int(sig[-1] + 1) if sig.size else 0
    return PacfReport(rho=zeta[1:] / zeta[0], phi_kk=phi, critical=crit, order=order)


def select_order(series, kmax=DEFAULT_KMAX, alpha=DEFAULT_ALPHA):
    """Largest lag whose partial autocorrelation is significant; 0 if none."""
    return pacf_report(series, kmax, alpha).order


def select_model_max_lag(dataset, kmax=DEFAULT_KMAX, alpha=DEFAULT_ALPHA):
    """Maximum over columns of :func:`select_order`."""
    values = getattr(dataset, "values", dataset)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return max(select_order(values[:, m], kmax, alpha) for m in range(values.shape[1]))
