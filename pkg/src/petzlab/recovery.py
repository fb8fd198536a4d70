"""Petz, rotated, universal and nonlinear recovery maps, the interpolant G(z)
and the logarithmic fidelity of recovery.

For a reference state ``eta`` and channel ``Phi`` with ``eta_hat = Phi(eta)``:

    R_z(X) = eta^{conj(z)/2} Phi^H(eta_hat^{-conj(z)/2} X eta_hat^{-z/2}) eta^{z/2}

with pseudo-inverse powers on supp eta_hat. ``z = 1`` is the Petz map. Every
function accepts an array of ``z`` values and then returns a stack of
matrices, which is how the quadrature nodes are evaluated in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import PsdMatrix, as_psd, psd_power_batched, psd_sqrt_batched, schatten_norms_batched
from .quadrature import QuadratureRule, integrate_weighted
from .states import QuantumChannel


def _dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


@dataclass(frozen=True, eq=False)
class RecoveryMapSpec:
    """Reference state and channel; caches ``eta_hat = Phi(eta)``."""

    eta: PsdMatrix
    channel: QuantumChannel
    eta_hat: PsdMatrix = field(init=False)

    def __post_init__(self):
        eta = as_psd(self.eta)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "eta_hat", as_psd(self.channel.apply(eta.matrix)))

    def apply(self, z, x) -> np.ndarray:
        """``R_z(X)``; ``z`` scalar or 1-D array, ``X`` a matrix or a matching stack."""
        z = np.asarray(z, dtype=complex)
        if np.any(z.real <= 0) or np.any(z.real > 1 + 1e-12):
            raise ValueError("recovery maps need 0 < Re z <= 1")
        a = self.eta.power(z / 2.0)
        b = self.eta_hat.power(-z / 2.0)
        inner = _dagger(b) @ np.asarray(x) @ b
        return _dagger(a) @ self.channel.adjoint(inner) @ a

    def outside_mass(self, x) -> float:
        """Trace norm of the part of ``X`` outside supp eta_hat (dropped by the map)."""
        p = self.eta_hat.support
        x = np.asarray(x)
        return float(np.abs(np.linalg.eigvalsh(x - p @ x @ p)).sum())


def _spec(eta, channel) -> RecoveryMapSpec:
    return eta if isinstance(eta, RecoveryMapSpec) else RecoveryMapSpec(eta, channel)


def rotated_recovery_apply(eta, channel: QuantumChannel | None, z, x) -> np.ndarray:
    """Rotated recovery map ``R_z(X)`` (``eta`` may be a prepared RecoveryMapSpec)."""
    return _spec(eta, channel).apply(z, x)


def petz_apply(eta, channel: QuantumChannel | None, x) -> np.ndarray:
    """Petz map ``eta^{1/2} Phi^H(eta_hat^{-1/2} X eta_hat^{-1/2}) eta^{1/2}``."""
    return _spec(eta, channel).apply(1.0, x)


def vector_recover_half(eta, channel: QuantumChannel | None, x_hat) -> np.ndarray:
    """``R_{1/2}`` acting on an L2 representative: ``eta^{1/4} Phi^H(eta_hat^{-1/4} X eta_hat^{-1/4}) eta^{1/4}``."""
    return _spec(eta, channel).apply(0.5, x_hat)


def universal_recovery_apply(eta, channel: QuantumChannel | None, x, rule: QuadratureRule | None = None):
    """``int beta_0(t) R_{1+it}(X) dt``."""
    spec = _spec(eta, channel)
    x = np.asarray(x)
    out = integrate_weighted(lambda t: spec.apply(1.0 + 1j * t, x), 0.0, rule)
    # the t -> -t symmetry makes the average Hermitian exactly when X is
    if np.allclose(x, _dagger(x), rtol=0.0, atol=1e-14 * max(1.0, float(np.abs(x).max()))):
        out = 0.5 * (out + _dagger(out))
    return out


def universal_recovery_choi(eta, channel: QuantumChannel | None, rule: QuadratureRule | None = None) -> np.ndarray:
    """Choi matrix of the universal recovery map (input is the channel's output space)."""
    spec = _spec(eta, channel)
    d = spec.channel.d_out
    units = np.einsum("ia,jb->ijab", np.eye(d), np.eye(d)).reshape(d * d, d, d)  # |i><j| at i*d + j
    outs = np.stack([universal_recovery_apply(spec, None, e, rule) for e in units])
    dd = outs.shape[-1]
    return outs.reshape(d, d, dd, dd).transpose(0, 2, 1, 3).reshape(d * dd, d * dd)


def nonlinear_recovery_root(eta, channel: QuantumChannel | None, p: float, x, rule: QuadratureRule | None = None):
    """``int beta_0(t) R_{(1+it)/p}(X^{1/p}) dt``, the p-th root of the nonlinear recovery."""
    spec = _spec(eta, channel)
    xp = as_psd(x).power(1.0 / p)
    out = integrate_weighted(lambda t: spec.apply((1.0 + 1j * t) / p, xp), 0.0, rule)
    return 0.5 * (out + _dagger(out))


def nonlinear_recovery_p(eta, channel: QuantumChannel | None, p: float, x, rule: QuadratureRule | None = None):
    """Nonlinear universal recovery ``(int beta_0(t) R_{(1+it)/p}(X^{1/p}) dt)^p``."""
    if p < 1:
        raise ValueError("p must be at least 1")
    root = nonlinear_recovery_root(eta, channel, p, x, rule)
    return psd_power_batched(root, p)


# ----------------------------------------------------------- interpolant


@dataclass(frozen=True)
class InterpolantPoint:
    z: complex
    G: np.ndarray
    weighted_norm: float


class Interpolant:
    """``G(z) = (rho_hat^{z/2} eta_hat^{-z/2} (x) I_env) V eta^{z/2} rho^{-z/2}``.

    ``V`` is the Stinespring isometry of the channel. :meth:`norm` returns the
    weighted norm ``|| G(z) rho^{1/q} ||_q``, vectorised over ``z``.
    """

    def __init__(self, rho, eta, channel: QuantumChannel):
        self.rho = as_psd(rho)
        self.eta = as_psd(eta)
        self.channel = channel
        self.rho_hat = as_psd(channel.apply(self.rho.matrix))
        self.eta_hat = as_psd(channel.apply(self.eta.matrix))
        self.v = channel.stinespring()
        self.d_env = channel.rank

    def matrix(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        left = self.rho_hat.power(z / 2.0) @ self.eta_hat.power(-z / 2.0)
        left = np.kron(left, np.eye(self.d_env)) if left.ndim == 2 else _kron_batch(left, self.d_env)
        right = self.eta.power(z / 2.0) @ self.rho.power(-z / 2.0)
        return left @ self.v @ right

    def norm(self, z, q: float | None = None):
        """``|| G(z) rho^{1/q} ||_q``; ``q`` defaults to ``1/Re z``."""
        z = np.asarray(z, dtype=complex)
        if q is None:
            q = 1.0 / float(np.real(z).flat[0])
        g = self.matrix(z) @ self.rho.power(1.0 / q)
        out = schatten_norms_batched(g, q)
        return out if np.ndim(out) else float(out)

    def point(self, z, q: float | None = None) -> InterpolantPoint:
        return InterpolantPoint(complex(z), self.matrix(z), float(self.norm(z, q)))


def _kron_batch(a: np.ndarray, n: int) -> np.ndarray:
    k, r, c = a.shape
    eye = np.eye(n)
    return (a[:, :, None, :, None] * eye[None, None, :, None, :]).reshape(k, r * n, c * n)


def interpolant_G(rho, eta, channel: QuantumChannel, z, q: float | None = None) -> InterpolantPoint:
    return Interpolant(rho, eta, channel).point(z, q)


# ------------------------------------------------ fidelity of recovery


def recovery_fidelity(rho, eta, channel: QuantumChannel, z, spec: RecoveryMapSpec | None = None):
    """``f_{1/theta}(rho^theta, R_z(Phi(rho)^theta))`` with ``theta = Re z`` (vectorised over z
    sharing one real part)."""
    z = np.asarray(z, dtype=complex)
    theta = float(np.real(z).flat[0])
    if np.any(np.abs(np.real(z) - theta) > 1e-15):
        raise ValueError("all z must share the same real part")
    rho = as_psd(rho)
    spec = RecoveryMapSpec(eta, channel) if spec is None else spec
    rho_hat = as_psd(channel.apply(rho.matrix))
    rec = spec.apply(z, rho_hat.power(theta))
    prod = rho.power(theta / 2.0) @ psd_sqrt_batched(rec)
    out = schatten_norms_batched(prod, 1.0 / theta)
    return out if np.ndim(out) else float(out)


def log_fidelity_of_recovery(rho, eta, channel: QuantumChannel, z, spec: RecoveryMapSpec | None = None):
    """``FR^z = -ln f_{1/Re z}(rho^{Re z}, R_z(Phi(rho)^{Re z}))``; ``inf`` on fidelity underflow."""
    f = np.asarray(recovery_fidelity(rho, eta, channel, z, spec))
    out = np.where(f < 1e-300, np.inf, -np.log(np.maximum(f, 1e-300)))
    return out if out.ndim else float(out)
