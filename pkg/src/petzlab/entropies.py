"""Weighted p-norms, relative entropies, Renyi families and p-fidelities.

Divergences return ``numpy.inf`` when the support condition fails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .linalg import PsdMatrix, as_psd, eig_hermitian, schatten_norm

SUPPORT_TOL = 1e-10
EXP_CAP = 300.0
NEWTON_DECREMENT_TOL = 1e-10


def slack(lhs: float, rhs: float, rel: float = 1e-7) -> float:
    """Absolute tolerance ``rel * max(1, |lhs|, |rhs|)`` used by inequality checks."""
    scale = max(1.0, abs(lhs) if np.isfinite(lhs) else 0.0, abs(rhs) if np.isfinite(rhs) else 0.0)
    return rel * scale


def weighted_p_norm(x, p, w: float, rho, eta=None) -> float:
    """Kosaki-type norm ``|| rho^{(1-w)/p} x eta^{w/p} ||_p``.

    ``eta`` defaults to ``rho``. With ``p = inf`` the weights reduce to support
    projections, giving the operator norm of ``x`` compressed to the supports.
    """
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must lie in [0, 1], got {w}")
    rho = as_psd(rho)
    eta = rho if eta is None else as_psd(eta)
    inv_p = 0.0 if np.isinf(p) else 1.0 / p
    y = rho.power((1.0 - w) * inv_p) @ np.asarray(x) @ eta.power(w * inv_p)
    return schatten_norm(y, p)


def support_contained(rho, eta, tol: float = SUPPORT_TOL) -> bool:
    """Whether supp rho lies inside supp eta (mass of rho outside supp eta below ``tol``)."""
    rho, eta = as_psd(rho), as_psd(eta)
    if eta.is_faithful:
        return True
    outside = np.eye(eta.dim) - eta.support
    return float(np.trace(outside @ rho.matrix).real) <= tol * max(rho.trace, 1e-300)


def relative_entropy(rho, eta) -> float:
    """``tr rho (ln rho - ln eta)`` with pseudo-logarithms; ``inf`` on support violation."""
    rho, eta = as_psd(rho), as_psd(eta)
    if not support_contained(rho, eta):
        return np.inf
    lam = rho.eigenvalues[rho.support_mask]
    ent = float(np.sum(lam * np.log(lam)))
    cross = float(np.trace(rho.matrix @ eta.log()).real)
    return ent - cross


def alpha_z_renyi(rho, eta, alpha: float, z: float, unchecked: bool = False) -> float:
    """alpha-z Renyi divergence ``ln tr((rho^{a/2z} eta^{(1-a)/z} rho^{a/2z})^z) / (a - 1)``.

    ``alpha = z`` is the sandwiched divergence and ``z = 1`` the Petz-type one.
    Parameters are restricted to ``0 < alpha <= 2``, ``z >= max(alpha - 1, alpha/2)``
    unless ``unchecked`` is set.
    """
    if alpha <= 0 or alpha == 1 or z <= 0:
        raise ValueError("need alpha > 0, alpha != 1 and z > 0")
    if not unchecked and (alpha > 2 or z < max(alpha - 1.0, alpha / 2.0)):
        raise ValueError(f"(alpha, z) = ({alpha}, {z}) outside the default domain; pass unchecked=True")
    rho, eta = as_psd(rho), as_psd(eta)
    if alpha > 1 and not support_contained(rho, eta):
        return np.inf
    b = rho.power(alpha / (2.0 * z)) @ eta.power((1.0 - alpha) / (2.0 * z))
    s = np.linalg.svd(b, compute_uv=False)
    q = float(np.sum(s ** (2.0 * z)))
    if q <= 0.0:
        return np.inf
    return float(np.log(q) / (alpha - 1.0))


def sandwiched_renyi(rho, eta, alpha: float) -> float:
    return alpha_z_renyi(rho, eta, alpha, alpha, unchecked=True)


def p_fidelity(rho, eta, p: float = 1.0) -> float:
    """``|| sqrt(rho) sqrt(eta) ||_p``; ``p = 1`` is the usual fidelity."""
    return schatten_norm(as_psd(rho).power(0.5) @ as_psd(eta).power(0.5), p)


# ------------------------------------------------------- measured entropy


@dataclass(frozen=True)
class MeasuredResult:
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    h: np.ndarray | None = None


def _exp_kernel(h: np.ndarray) -> np.ndarray:
    # divided differences of exp: (e^{h_i} - e^{h_j}) / (h_i - h_j)
    lo = np.minimum(h[:, None], h[None, :])
    hi = np.maximum(h[:, None], h[None, :])
    adiff = hi - lo
    small = adiff < 1e-8
    safe = np.where(small, 1.0, np.minimum(adiff, 700.0))
    near = np.exp(lo) * np.where(small, 1.0 + 0.5 * adiff, np.expm1(safe) / safe)
    # for widely separated eigenvalues e^{lo} is negligible next to e^{hi}
    far = np.exp(hi) / np.where(adiff > 700.0, adiff, 1.0)
    return np.where(adiff > 700.0, far, near)


def measured_objective(h, rho, eta) -> tuple[float, np.ndarray]:
    """Objective ``tr(rho H) + 1 - tr(eta e^H)`` and its Hermitian gradient.

    The gradient is ``rho - U (Gamma o U^H eta U) U^H`` with the divided
    difference kernel ``Gamma`` of exp in the eigenbasis of ``H``.
    """
    rho, eta = np.asarray(rho), np.asarray(eta)
    w, u = eig_hermitian(h)
    # trial points of a line search can be far out; keep exp finite there
    w = np.minimum(w, EXP_CAP)
    eta_u = u.conj().T @ eta @ u
    val = float(np.trace(rho @ h).real) + 1.0 - float(np.sum(np.exp(w) * np.diag(eta_u).real))
    grad = rho - u @ (_exp_kernel(w) * eta_u) @ u.conj().T
    return val, 0.5 * (grad + grad.conj().T)


def _herm_to_vec(a: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(a.shape[0], 1)
    s2 = np.sqrt(2.0)
    return np.concatenate([np.diag(a).real, s2 * a[iu].real, s2 * a[iu].imag])


def _vec_to_herm(x: np.ndarray, d: int) -> np.ndarray:
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    a = np.zeros((d, d), dtype=complex)
    a[iu] = (x[d:d + m] + 1j * x[d + m:]) / np.sqrt(2.0)
    a = a + a.conj().T
    a[np.diag_indices(d)] = x[:d]
    return a


def measured_relative_entropy_result(rho, eta, tol: float = 1e-10, max_iter: int = 500) -> MeasuredResult:
    """Maximise ``tr(rho H) + 1 - tr(eta e^H)`` over Hermitian ``H``.

    The problem is compressed to supp eta and solved with L-BFGS from the
    start point ``H = ln rho - ln eta``. The real parameterisation is an
    orthonormal basis of Hermitian matrices, so the vector gradient norm
    equals the Frobenius norm of the matrix gradient. When the gradient
    stalls above tolerance a Newton polish runs and a Newton decrement below
    ``NEWTON_DECREMENT_TOL`` also counts as converged. The optimiser ``h`` is
    returned in the input basis, extended by zero on the kernel of eta.
    """
    rho, eta = as_psd(rho), as_psd(eta)
    if not support_contained(rho, eta):
        return MeasuredResult(np.inf, np.nan, 0, True)
    basis = eta.eigenvectors[:, eta.support_mask]
    r_c = basis.conj().T @ rho.matrix @ basis
    e_c = basis.conj().T @ eta.matrix @ basis
    d = basis.shape[1]
    r_psd = PsdMatrix.from_array(0.5 * (r_c + r_c.conj().T))
    e_psd = PsdMatrix.from_array(0.5 * (e_c + e_c.conj().T))
    if r_psd.is_faithful:
        h0 = r_psd.log() - e_psd.log()
    else:
        # ln of rho is -inf on its kernel; start from a finite surrogate
        floor = 1e-8 * r_psd.eigenvalues.max()
        h0 = PsdMatrix(np.maximum(r_psd.eigenvalues, floor), r_psd.eigenvectors).log() - e_psd.log()

    def fun(x):
        val, g = measured_objective(_vec_to_herm(x, d), r_c, e_c)
        return -val, -_herm_to_vec(g)

    x0 = _herm_to_vec(0.5 * (h0 + h0.conj().T))
    val0, g0 = fun(x0)
    if np.linalg.norm(g0) <= tol:
        return MeasuredResult(-val0, float(np.linalg.norm(g0)), 0, True,
                              basis @ _vec_to_herm(x0, d) @ basis.conj().T)
    res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-15, "maxcor": 30})
    x, f, g = res.x, float(res.fun), res.jac
    gnorm = float(np.linalg.norm(g))
    converged = gnorm <= max(tol, 1e-7)
    if not converged:
        # large eigenvalues of H put a roundoff floor under the gradient;
        # certify the optimum by the Newton decrement instead
        x, f, g, decrement = _newton_polish(fun, x, f, g)
        gnorm = float(np.linalg.norm(g))
        converged = gnorm <= max(tol, 1e-7) or decrement <= NEWTON_DECREMENT_TOL
    h = basis @ _vec_to_herm(x, d) @ basis.conj().T
    return MeasuredResult(-f, gnorm, int(res.nit), bool(converged), h)


def _newton_polish(fun, x, f, g, steps: int = 30):
    """Damped Newton on the convex ``fun`` with a central-difference Hessian.

    Returns the final point, value, gradient and Newton decrement ``g.H^-1.g / 2``.
    """
    n = x.size
    decrement = np.inf
    for _ in range(steps):
        hess = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1e-7
            hess[:, j] = (fun(x + e)[1] - fun(x - e)[1]) / 2e-7
        w, u = np.linalg.eigh(0.5 * (hess + hess.T))
        w = np.maximum(w, 1e-14 * max(w.max(), 1e-300))
        step = -u @ ((u.T @ g) / w)
        decrement = float(-(g @ step)) / 2
        if decrement <= 1e-15:
            break
        a = 1.0
        while a > 1e-10:
            f2, g2 = fun(x + a * step)
            if f2 <= f:
                break
            a *= 0.5
        else:
            break
        x, f, g = x + a * step, f2, g2
    return x, f, g, decrement


def measured_relative_entropy(rho, eta, tol: float = 1e-10, max_iter: int = 500) -> float:
    """Measured relative entropy through its variational form."""
    return measured_relative_entropy_result(rho, eta, tol, max_iter).value


def projective_measured_entropy(rho, eta, basis) -> float:
    """Classical relative entropy of the outcome distributions in an orthonormal ``basis``."""
    basis = np.asarray(basis)
    pr = np.einsum("ia,ij,ja->a", basis.conj(), np.asarray(rho), basis).real
    pe = np.einsum("ia,ij,ja->a", basis.conj(), np.asarray(eta), basis).real
    mask = pr > 0
    if np.any(pe[mask] <= 0):
        return np.inf
    return float(np.sum(pr[mask] * np.log(pr[mask] / pe[mask])))

