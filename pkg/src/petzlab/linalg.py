"""Hermitian eigensystems, functional calculus on supports and Schatten norms.

Every other module in the package goes through :class:`PsdMatrix` for powers,
logarithms and support projections, so the support conventions live here:

* eigenvalues below ``SUPPORT_CUTOFF * lambda_max`` count as exactly zero;
* complex powers ``A**z`` act as ``exp(z ln lambda)`` on the support and as 0
  on the kernel, so ``A**0`` is the support projector;
* logarithms are pseudo-logarithms (0 on the kernel).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

SUPPORT_CUTOFF = 1e-12
HERMITIAN_TOL = 1e-12
MAX_DIM = 64

ArrayLike = Union[np.ndarray, "PsdMatrix"]


class NotHermitianError(ValueError):
    pass


class NotPositiveError(ValueError):
    pass


def as_array(a) -> np.ndarray:
    if isinstance(a, PsdMatrix):
        return a.matrix
    return np.asarray(a, dtype=complex)


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(np.abs(a).max(initial=0.0), 1e-300)
    return bool(np.abs(a - a.conj().T).max(initial=0.0) <= tol * scale)


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def eig_hermitian(h) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and unitary eigenvectors of a Hermitian matrix.

    Raises NotHermitianError when ``h`` is not Hermitian to within 1e-12 of
    its largest entry. The input is symmetrised before ``eigh`` so the
    reconstruction ``U diag(w) U^H`` is Hermitian to machine precision.
    """
    h = as_array(h)
    if not is_hermitian(h):
        raise NotHermitianError("matrix is not Hermitian")
    w, u = np.linalg.eigh(hermitian_part(h))
    return w, u


def _apply_eig(u: np.ndarray, vals: np.ndarray) -> np.ndarray:
    # vals may carry leading batch axes: (..., d)
    return (u * vals[..., None, :]) @ u.conj().T


@dataclass(frozen=True, eq=False)
class PsdMatrix:
    """Positive semidefinite matrix with a cached eigensystem.

    Build with :meth:`from_array`, which validates Hermiticity, clips
    round-off negativity and zeroes eigenvalues under the support cutoff.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_array(cls, a, cutoff: float = SUPPORT_CUTOFF) -> "PsdMatrix":
        if isinstance(a, PsdMatrix):
            return a
        a = np.asarray(a, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] > MAX_DIM:
            raise ValueError(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
        w, u = eig_hermitian(a)
        lam_max = max(w[-1], 0.0)
        if w[0] < -cutoff * max(lam_max, 1e-300) and w[0] < -1e-300:
            raise NotPositiveError(f"matrix has eigenvalue {w[0]:.3e} < 0")
        w = np.where(w > cutoff * lam_max, w, 0.0)
        return cls(w, u)

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @cached_property
    def matrix(self) -> np.ndarray:
        return _apply_eig(self.eigenvectors, self.eigenvalues.astype(complex))

    @cached_property
    def support_mask(self) -> np.ndarray:
        return self.eigenvalues > 0.0

    @property
    def support_rank(self) -> int:
        return int(self.support_mask.sum())

    @property
    def is_faithful(self) -> bool:
        return self.support_rank == self.dim

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    @cached_property
    def support(self) -> np.ndarray:
        return _apply_eig(self.eigenvectors, self.support_mask.astype(complex))

    def _log_eigs(self) -> np.ndarray:
        mask = self.support_mask
        return np.where(mask, np.log(np.where(mask, self.eigenvalues, 1.0)), 0.0)

    def power(self, z) -> np.ndarray:
        """``A**z`` on the support; vectorised over an array of exponents.

        For array ``z`` of shape ``(k,)`` the result has shape ``(k, d, d)``.
        """
        z = np.asarray(z, dtype=complex)
        mask = self.support_mask
        lw = self._log_eigs()
        vals = np.where(mask, np.exp(z[..., None] * lw), 0.0)
        return _apply_eig(self.eigenvectors, vals)

    def log(self) -> np.ndarray:
        return _apply_eig(self.eigenvectors, self._log_eigs().astype(complex))

    def apply(self, fn) -> "PsdMatrix":
        """New PsdMatrix with ``fn`` applied to the support eigenvalues."""
        mask = self.support_mask
        vals = np.where(mask, fn(np.where(mask, self.eigenvalues, 1.0)), 0.0)
        return PsdMatrix(np.asarray(vals, dtype=float), self.eigenvectors)


def as_psd(a) -> PsdMatrix:
    return PsdMatrix.from_array(a)


def matrix_power(a, z) -> np.ndarray:
    """Complex power of a PSD matrix with the pseudo-power convention."""
    return as_psd(a).power(z)


def matrix_log(a) -> np.ndarray:
    return as_psd(a).log()


def expm_hermitian(h) -> np.ndarray:
    w, u = eig_hermitian(h)
    return _apply_eig(u, np.exp(w).astype(complex))


def support_projection(a) -> np.ndarray:
    return as_psd(a).support


def schatten_norm(a, p) -> float:
    """Schatten p-norm ``(sum sigma_i**p)**(1/p)``; ``p = inf`` is the operator norm.

    Values ``0 < p < 1`` are rejected; use :func:`schatten_quasi_norm` for those.
    """
    p = float(p)
    if p < 1:
        raise ValueError(f"Schatten norm needs p >= 1, got {p}")
    return schatten_quasi_norm(a, p)


def schatten_quasi_norm(a, p: float) -> float:
    s = np.linalg.svd(as_array(a), compute_uv=False)
    return float(_norm_from_singular_values(s, p))


def _norm_from_singular_values(s: np.ndarray, p: float):
    # s: (..., k) singular values; scaled to avoid overflow in s**p
    smax = s.max(axis=-1, initial=0.0)
    if np.isinf(p):
        return smax
    safe = np.where(smax > 0, smax, 1.0)
    out = safe * ((s / safe[..., None]) ** p).sum(axis=-1) ** (1.0 / p)
    return np.where(smax > 0, out, 0.0)


def schatten_norms_batched(a: np.ndarray, p: float) -> np.ndarray:
    """Schatten (quasi-)norms of a stack of matrices of shape ``(k, m, n)``."""
    s = np.linalg.svd(a, compute_uv=False)
    return _norm_from_singular_values(s, float(p))


def psd_sqrt_batched(a: np.ndarray) -> np.ndarray:
    """Square roots of a stack of Hermitian PSD matrices (negative dust clipped)."""
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    w, u = np.linalg.eigh(a)
    w = np.sqrt(np.clip(w, 0.0, None)).astype(complex)
    return (u * w[..., None, :]) @ np.conj(np.swapaxes(u, -1, -2))


def psd_power_batched(a: np.ndarray, z: float) -> np.ndarray:
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    w, u = np.linalg.eigh(a)
    wmax = w.max(axis=-1, keepdims=True)
    keep = w > SUPPORT_CUTOFF * np.maximum(wmax, 1e-300)
    vals = np.where(keep, np.where(keep, w, 1.0) ** z, 0.0).astype(complex)
    return (u * vals[..., None, :]) @ np.conj(np.swapaxes(u, -1, -2))


# ---------------------------------------------------------------- JSON format


def matrix_to_json(a) -> dict:
    a = as_array(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix JSON holds square matrices only")
    if a.shape[0] > MAX_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds {MAX_DIM}")
    return {"dim": int(a.shape[0]), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        d = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    if d > MAX_DIM:
        raise ValueError(f"dimension {d} exceeds {MAX_DIM}")
    if re.shape != (d, d) or im.shape != (d, d):
        raise ValueError(f"matrix JSON shape mismatch for dim {d}")
    return re + 1j * im


def save_matrix(path, a) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_json(a), fh)


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_json(json.load(fh))
