"""Matrix functions of symmetric matrices via eigendecomposition.

All functions accept stacks of matrices (leading batch axes).
"""

import numpy as np

from .exceptions import GeometryDomainError

EIG_FLOOR = 1e-14


def sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def spd_sym_eig(a):
    """Eigenvalues (ascending) and orthonormal eigenvectors of symmetric ``a``."""
    return np.linalg.eigh(sym(np.asarray(a, dtype=float)))


def _apply(w, q, fw):
    return (q * fw[..., None, :]) @ np.swapaxes(q, -1, -2)


def _spd_eig(a, what):
    w, q = spd_sym_eig(a)
    lo = w[..., 0]
    if np.any(lo <= 0.0):
        raise GeometryDomainError(
            f"{what} requires a positive definite matrix; "
            f"smallest eigenvalue {float(np.min(lo)):.3e}"
        )
    return np.maximum(w, EIG_FLOOR), q


def spd_expm(a):
    w, q = spd_sym_eig(a)
    return _apply(w, q, np.exp(w))


def spd_logm(a):
    w, q = _spd_eig(a, "logm")
    return _apply(w, q, np.log(w))


def spd_sqrtm(a):
    w, q = _spd_eig(a, "sqrtm")
    return _apply(w, q, np.sqrt(w))


def spd_invsqrtm(a):
    w, q = _spd_eig(a, "invsqrtm")
    return _apply(w, q, 1.0 / np.sqrt(w))


def spd_sqrt_pair(a):
    """Return ``(a^{1/2}, a^{-1/2})`` from one eigendecomposition."""
    w, q = _spd_eig(a, "sqrtm")
    s = np.sqrt(w)
    return _apply(w, q, s), _apply(w, q, 1.0 / s)


def spd_powm(a, p):
    w, q = _spd_eig(a, "powm")
    return _apply(w, q, w**p)


def logm_frechet_adjoint(z, e):
    """Fréchet derivative of ``logm`` at SPD ``z`` applied to symmetric ``e``.

    The derivative is self-adjoint in the trace inner product, so this is
    also its adjoint.  Uses the Daleckii-Krein formula with divided
    differences of ``log`` in the eigenbasis of ``z``.
    """
    w, q = _spd_eig(z, "logm derivative")
    qt = np.swapaxes(q, -1, -2)
    et = qt @ e @ q
    wi = w[..., :, None]
    wj = w[..., None, :]
    ratio = wi / wj - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        dd = np.where(
            np.abs(ratio) < 1e-8,
            (1.0 - 0.5 * ratio) / wj,
            np.log1p(ratio) / (wi - wj),
        )
    return q @ (dd * et) @ qt
