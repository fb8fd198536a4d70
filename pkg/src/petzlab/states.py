"""Density matrices, CPTP channels in Kraus form and random constructions.

Conventions:

* Kraus operators are stacked in an array of shape ``(r, d_out, d_in)``.
* The Stinespring isometry is ``V = sum_k K_k (x) |k>``, a
  ``(d_out * r) x d_in`` matrix with the output factor first, so
  ``Phi(X) = tr_env(V X V^H)`` and ``Phi^H(Y) = V^H (Y (x) I) V``.
* The Choi matrix is ``J = sum_ij |i><j| (x) Phi(|i><j|)`` (input factor first).
* Random generators take either an integer seed or a ``numpy.random.Generator``.
  :func:`keyed_rng` derives independent streams from ``(seed, *key)`` so that
  ensembles regenerate identically in any order.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .linalg import MAX_DIM, PsdMatrix, as_array, matrix_from_json, matrix_to_json

TRACE_TOL = 1e-10
CHANNEL_TOL = 1e-10


# ------------------------------------------------------------------ randomness


def keyed_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator keyed by a master seed and an integer path, e.g. ``(dim, index)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return keyed_rng(0 if seed is None else seed)


def ginibre(rows: int, cols: int, rng) -> np.ndarray:
    rng = as_rng(rng)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def haar_isometry(rows: int, cols: int, rng) -> np.ndarray:
    """Haar-random isometry ``rows x cols`` (``rows >= cols``) via QR with phase fix."""
    if rows < cols:
        raise ValueError("an isometry needs rows >= cols")
    q, r = np.linalg.qr(ginibre(rows, cols, rng))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph[None, :]


def haar_unitary(d: int, rng) -> np.ndarray:
    return haar_isometry(d, d, rng)


def random_hermitian(d: int, rng, scale: float = 1.0) -> np.ndarray:
    g = ginibre(d, d, rng)
    return scale * 0.5 * (g + g.conj().T)


def random_psd(d: int, rng, rank: int | None = None) -> np.ndarray:
    g = ginibre(d, d if rank is None else rank, rng)
    return g @ g.conj().T


# -------------------------------------------------------------- density matrix


class DensityMatrix(PsdMatrix):
    """PSD matrix with unit trace (within 1e-10)."""

    @classmethod
    def from_array(cls, a, cutoff=None) -> "DensityMatrix":
        if isinstance(a, DensityMatrix):
            return a
        if isinstance(a, PsdMatrix):
            out = cls(a.eigenvalues, a.eigenvectors)
        else:
            out = super().from_array(a) if cutoff is None else super().from_array(a, cutoff)
        if abs(out.trace - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {out.trace!r}, expected 1")
        return out


def density_matrix(a) -> DensityMatrix:
    return DensityMatrix.from_array(a)


def normalize(a) -> np.ndarray:
    a = as_array(a)
    a = 0.5 * (a + a.conj().T)
    return a / np.trace(a).real


def regularize(rho, delta: float) -> DensityMatrix:
    """Mix with the maximally mixed state: ``(1 - delta) rho + delta I/d``."""
    r = as_array(rho)
    d = r.shape[0]
    return density_matrix((1.0 - delta) * r + delta * np.eye(d) / d)


def is_comparable(rho, eta, delta: float, tol: float = 1e-12) -> bool:
    """``delta eta <= rho <= eta / delta`` checked through eigenvalues."""
    r, e = as_array(rho), as_array(eta)
    lo = np.linalg.eigvalsh(r - delta * e)[0]
    hi = np.linalg.eigvalsh(e / delta - r)[0]
    return bool(lo >= -tol and hi >= -tol)


def random_state(dim: int, seed, kind: str = "mixed", eta=None, delta: float = 0.1) -> DensityMatrix:
    """Random density matrix.

    kind:
        ``pure``            Haar-random rank-one state.
        ``mixed``           Hilbert-Schmidt (Ginibre) state.
        ``near_degenerate`` spectrum within 1e-5 of uniform, random eigenbasis.
        ``comparable``      ``delta eta <= rho <= eta / delta`` for the given ``eta``.
    """
    if dim < 2:
        raise ValueError("dim must be at least 2")
    rng = as_rng(seed)
    if kind == "pure":
        v = haar_isometry(dim, 1, rng)
        return density_matrix(v @ v.conj().T)
    if kind == "mixed":
        return density_matrix(normalize(random_psd(dim, rng)))
    if kind == "near_degenerate":
        lam = 1.0 + 1e-5 * rng.uniform(-1.0, 1.0, dim)
        u = haar_unitary(dim, rng)
        return density_matrix(normalize((u * (lam / lam.sum())) @ u.conj().T))
    if kind in ("comparable", "comparable_to"):
        if eta is None:
            raise ValueError("comparable states need a reference eta")
        return comparable_to(eta, delta, rng)
    raise ValueError(f"unknown state kind {kind!r}")


def comparable_to(eta, delta: float, seed, tries: int = 100) -> DensityMatrix:
    """Random ``rho = (1 - s) eta + s W`` with ``delta eta <= rho <= eta / delta``.

    ``W`` is a random state supported inside supp eta. Up to ``tries`` draws are
    made at each mixing weight ``s`` before ``s`` is halved.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    rng = as_rng(seed)
    eta_psd = PsdMatrix.from_array(eta)
    e = eta_psd.matrix
    if delta == 1.0:
        return density_matrix(e)
    proj = eta_psd.support
    d = e.shape[0]
    s = 1.0
    while s > 1e-12:
        for _ in range(tries):
            w = proj @ random_psd(d, rng) @ proj
            rho = (1.0 - s) * e + s * normalize(w)
            if is_comparable(rho, e, delta):
                return density_matrix(normalize(rho))
        s *= 0.5
    return density_matrix(e)


# --------------------------------------------------------------------- channel


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map given by Kraus operators of shape ``(r, d_out, d_in)``."""

    kraus: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3:
            raise ValueError("Kraus operators must form an array of shape (r, d_out, d_in)")
        if max(k.shape[1:]) > MAX_DIM:
            raise ValueError(f"channel dimension exceeds {MAX_DIM}")
        object.__setattr__(self, "kraus", k)

    @property
    def d_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def d_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def rank(self) -> int:
        return self.kraus.shape[0]

    def apply(self, x) -> np.ndarray:
        """``sum_k K_k X K_k^H``; ``X`` may carry leading batch axes."""
        x = as_array(x)
        if x.shape[-2:] != (self.d_in, self.d_in):
            raise ValueError(f"input of shape {x.shape[-2:]} does not match d_in={self.d_in}")
        return np.einsum("kai,...ij,kbj->...ab", self.kraus, x, self.kraus.conj(), optimize=True)

    def adjoint(self, y) -> np.ndarray:
        """``sum_k K_k^H Y K_k``; ``Y`` may carry leading batch axes."""
        y = as_array(y)
        if y.shape[-2:] != (self.d_out, self.d_out):
            raise ValueError(f"input of shape {y.shape[-2:]} does not match d_out={self.d_out}")
        return np.einsum("kai,...ab,kbj->...ij", self.kraus.conj(), y, self.kraus, optimize=True)

    __call__ = apply

    def stinespring(self) -> np.ndarray:
        """Isometry ``V`` of shape ``(d_out * r, d_in)``, output factor first."""
        return self.kraus.transpose(1, 0, 2).reshape(self.d_out * self.rank, self.d_in)

    def choi(self) -> np.ndarray:
        vecs = self.kraus.transpose(0, 2, 1).reshape(self.rank, self.d_in * self.d_out)
        return vecs.T @ vecs.conj()

    @classmethod
    def from_choi(cls, choi, d_in: int, d_out: int, cutoff: float = 1e-12) -> "QuantumChannel":
        w, u = np.linalg.eigh(0.5 * (choi + choi.conj().T))
        keep = w > cutoff * max(w[-1], 1e-300)
        vecs = (u[:, keep] * np.sqrt(w[keep])).T
        kraus = vecs.reshape(-1, d_in, d_out).transpose(0, 2, 1)
        return cls(kraus)

    def compose(self, other: "QuantumChannel") -> "QuantumChannel":
        """``self o other``."""
        k = np.einsum("aij,bjk->abik", self.kraus, other.kraus).reshape(-1, self.d_out, other.d_in)
        return QuantumChannel(k)

    def to_json(self) -> dict:
        return {"d_in": self.d_in, "d_out": self.d_out, "kraus": [_rect_to_json(k) for k in self.kraus]}

    @classmethod
    def from_json(cls, obj: dict) -> "QuantumChannel":
        try:
            d_in, d_out = int(obj["d_in"]), int(obj["d_out"])
            kraus = np.stack([_rect_from_json(k) for k in obj["kraus"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed channel JSON: {exc}") from exc
        if kraus.shape[1:] != (d_out, d_in):
            raise ValueError("Kraus shapes do not match d_in/d_out")
        return cls(kraus)


def _rect_to_json(k: np.ndarray) -> dict:
    if k.shape[0] == k.shape[1]:
        return matrix_to_json(k)
    return {"rows": int(k.shape[0]), "cols": int(k.shape[1]), "re": k.real.tolist(), "im": k.imag.tolist()}


def _rect_from_json(obj: dict) -> np.ndarray:
    if "dim" in obj:
        return matrix_from_json(obj)
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    if re.shape != (int(obj["rows"]), int(obj["cols"])) or im.shape != re.shape:
        raise ValueError("rectangular matrix JSON shape mismatch")
    return re + 1j * im


def save_channel(path, channel: QuantumChannel) -> None:
    with open(path, "w") as fh:
        json.dump(channel.to_json(), fh)


def load_channel(path) -> QuantumChannel:
    with open(path) as fh:
        return QuantumChannel.from_json(json.load(fh))


@dataclass(frozen=True)
class ChannelValidation:
    passed: bool
    tp_defect: float
    min_choi_eigenvalue: float


def validate_channel(channel: QuantumChannel, tol: float = CHANNEL_TOL) -> ChannelValidation:
    k = channel.kraus
    tp = np.einsum("kai,kaj->ij", k.conj(), k) - np.eye(channel.d_in)
    tp_defect = float(np.linalg.norm(tp, 2))
    min_eig = float(np.linalg.eigvalsh(channel.choi())[0])
    return ChannelValidation(tp_defect <= tol and min_eig >= -tol, tp_defect, min_eig)


# ------------------------------------------------------------ channel factory


def identity_channel(d: int) -> QuantumChannel:
    return QuantumChannel(np.eye(d)[None])


def unitary_channel(u) -> QuantumChannel:
    return QuantumChannel(np.asarray(u)[None])


def embedding_channel(d_in: int, d_out: int) -> QuantumChannel:
    """Isometric embedding of ``C^d_in`` into the first block of ``C^d_out``."""
    if d_out < d_in:
        raise ValueError("embedding needs d_out >= d_in")
    return QuantumChannel(np.eye(d_out, d_in)[None])


def _weyl_operators(d: int) -> list[np.ndarray]:
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return [np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b) for a in range(d) for b in range(d)]


def depolarizing_channel(lam: float, d: int = 2) -> QuantumChannel:
    """``X -> (1 - lam) X + lam tr(X) I/d``.

    For qubits the Kraus operators are the standard ``I, X, Y, Z`` family; in
    general the Weyl (clock and shift) operators are used.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"depolarizing parameter must lie in [0, 1], got {lam}")
    if d == 2:
        paulis = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0])]
    else:
        paulis = _weyl_operators(d)
    n = d * d
    coef = [np.sqrt(1.0 - lam + lam / n)] + [np.sqrt(lam / n)] * (n - 1)
    return QuantumChannel(np.stack([c * p for c, p in zip(coef, paulis)]))


def partial_trace_channel(dims, which) -> QuantumChannel:
    """Trace out the tensor factors listed in ``which`` (an index or sequence of indices)."""
    dims = [int(x) for x in dims]
    which = {which} if np.isscalar(which) else set(which)
    if not which <= set(range(len(dims))):
        raise ValueError("partial trace factor index out of range")
    traced = [i for i in range(len(dims)) if i in which]
    kraus = []
    for idx in itertools.product(*[range(dims[i]) for i in traced]):
        pick = dict(zip(traced, idx))
        k = np.ones((1, 1))
        for i, d in enumerate(dims):
            k = np.kron(k, np.eye(d)[pick[i]][None, :] if i in pick else np.eye(d))
        kraus.append(k)
    return QuantumChannel(np.stack(kraus))


def pinching_channel(projectors) -> QuantumChannel:
    ps = np.stack([np.asarray(p, dtype=complex) for p in projectors])
    d = ps.shape[-1]
    for p in ps:
        if np.abs(p @ p - p).max() > 1e-10 or np.abs(p - p.conj().T).max() > 1e-10:
            raise ValueError("pinching needs orthogonal projectors")
    if np.abs(ps.sum(axis=0) - np.eye(d)).max() > 1e-10:
        raise ValueError("pinching projectors must sum to the identity")
    return QuantumChannel(ps)


def block_projectors(sizes) -> list[np.ndarray]:
    d = int(sum(sizes))
    out, start = [], 0
    for s in sizes:
        p = np.zeros((d, d))
        p[start:start + s, start:start + s] = np.eye(s)
        out.append(p)
        start += s
    return out


def conditional_expectation_channel(blocks) -> QuantumChannel:
    """Trace-preserving conditional expectation onto ``sum_i M_{n_i} (x) I_{m_i}``.

    ``blocks`` is a sequence of ``(n_i, m_i)``. On block ``i`` the map is
    ``X -> tr_{m_i}(X) (x) I/m_i``, and off-diagonal blocks are removed.
    """
    sizes = [int(n) * int(m) for n, m in blocks]
    d = sum(sizes)
    kraus, start = [], 0
    for (n, m), size in zip(blocks, sizes):
        for j in range(m):
            for k in range(m):
                e = np.zeros((m, m))
                e[j, k] = 1.0 / np.sqrt(m)
                op = np.zeros((d, d), dtype=complex)
                op[start:start + size, start:start + size] = np.kron(np.eye(n), e)
                kraus.append(op)
        start += size
    return QuantumChannel(np.stack(kraus))


def random_isometry_channel(d_in: int, d_out: int | None = None, d_env: int | None = None, seed=None,
                            rank: int | None = None) -> QuantumChannel:
    """Channel from a Haar-random Stinespring isometry.

    The Kraus rank is drawn uniformly from ``1..d_env`` unless given, and is
    raised if needed so that ``d_out * rank >= d_in``.
    """
    rng = as_rng(seed)
    d_out = d_in if d_out is None else d_out
    d_env = d_in if d_env is None else d_env
    if rank is None:
        rank = int(rng.integers(1, d_env + 1))
    rank = max(rank, -(-d_in // d_out))
    v = haar_isometry(d_out * rank, d_in, rng)
    return QuantumChannel(v.reshape(d_out, rank, d_in).transpose(1, 0, 2))


def make_channel(kind: str, **params) -> QuantumChannel:
    """Channel factory keyed by name; parameters as in the individual constructors."""
    if kind == "identity":
        return identity_channel(params["d"])
    if kind == "depolarizing":
        return depolarizing_channel(params.get("lam", params.get("lambda", 0.5)), params.get("d", 2))
    if kind == "partial_trace":
        return partial_trace_channel(params["dims"], params.get("which", 1))
    if kind == "pinching":
        return pinching_channel(params["projectors"])
    if kind == "conditional_expectation":
        return conditional_expectation_channel(params["blocks"])
    if kind == "random_isometry":
        return random_isometry_channel(params["d_in"], params.get("d_out"), params.get("d_env"),
                                       params.get("seed"), params.get("rank"))
    if kind == "unitary":
        u = params.get("u")
        return unitary_channel(haar_unitary(params["d"], params.get("seed")) if u is None else u)
    if kind == "embedding":
        return embedding_channel(params["d_in"], params["d_out"])
    raise ValueError(f"unknown channel kind {kind!r}")
