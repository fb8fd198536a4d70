"""Inequality and identity checks.

Every check computes both sides of one inequality and returns a
:class:`GapReport` whose ``margin`` is oriented so that ``margin >= 0`` means
the inequality holds; ``passed`` is ``margin >= -slack`` with
``slack = 1e-7 * max(1, |lhs|, |rhs|)``.

The ``check_*`` functions take explicit inputs. The ``run_*`` functions build
seeded instances for the suite runner and are collected in :data:`REGISTRY`.
"""

from __future__ import annotations

import itertools
import zlib
from dataclasses import dataclass, field

import numpy as np

from .entropies import (
    measured_relative_entropy_result,
    p_fidelity,
    relative_entropy,
    sandwiched_renyi,
    slack,
)
from .linalg import (
    PsdMatrix,
    as_psd,
    eig_hermitian,
    expm_hermitian,
    psd_power_batched,
    schatten_norm,
    schatten_norms_batched,
)
from .quadrature import QuadratureRule, integrate_weighted
from .recovery import (
    Interpolant,
    RecoveryMapSpec,
    log_fidelity_of_recovery,
    nonlinear_recovery_p,
    nonlinear_recovery_root,
    recovery_fidelity,
    universal_recovery_apply,
)
from .states import (
    DensityMatrix,
    QuantumChannel,
    block_projectors,
    comparable_to,
    density_matrix,
    depolarizing_channel,
    embedding_channel,
    haar_unitary,
    keyed_rng,
    normalize,
    partial_trace_channel,
    pinching_channel,
    random_hermitian,
    random_isometry_channel,
    random_psd,
    random_state,
    regularize,
    unitary_channel,
)

DELTA_REG = 1e-6
COMPARABLE_DELTA = 0.1
EQUALITY_TOL = 1e-9
PETZ_EXACT_TOL = 1e-7


@dataclass
class GapReport:
    check_name: str
    instance_id: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    slack: float
    diagnostics: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    replay: dict | None = field(default=None, repr=False, compare=False)

    def to_json(self) -> dict:
        return {
            "check": self.check_name,
            "instance_id": self.instance_id,
            "params": self.params,
            "lhs": _num(self.lhs),
            "rhs": _num(self.rhs),
            "margin": _num(self.margin),
            "pass": self.passed,
            "slack": _num(self.slack),
            "diagnostics": {k: _num(v) for k, v in sorted(self.diagnostics.items())},
        }


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if np.isfinite(x):
        return x
    return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")


def make_report(name, instance_id, lhs, rhs, margin, diagnostics=None, params=None, replay=None) -> GapReport:
    lhs, rhs, margin = float(np.real(lhs)), float(np.real(rhs)), float(np.real(margin))
    s = slack(lhs, rhs)
    passed = bool(np.isfinite(margin) and margin >= -s) or margin == np.inf
    return GapReport(name, instance_id, lhs, rhs, margin, passed, s, dict(diagnostics or {}), dict(params or {}),
                     replay)


def entropy_gap(rho, eta, channel: QuantumChannel) -> tuple[float, float, float]:
    """``(D(rho||eta), D(Phi rho||Phi eta), gap)``."""
    rho_m, eta_m = as_psd(rho).matrix, as_psd(eta).matrix
    d_in = relative_entropy(rho_m, eta_m)
    d_out = relative_entropy(channel.apply(rho_m), channel.apply(eta_m))
    return d_in, d_out, d_in - d_out


def _faithful(rho, delta_reg: float) -> tuple[PsdMatrix, bool]:
    rho = as_psd(rho)
    if rho.is_faithful:
        return rho, False
    return regularize(rho.matrix / rho.trace, delta_reg), True


def _trace_norm(a: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(0.5 * (a + a.conj().T))).sum())


# ------------------------------------------------------- trace inequalities


def check_alt(xs, rho, eta, p: float, r: float, w: float, rule: QuadratureRule | None = None,
              delta_reg: float = DELTA_REG, instance_id: str = "", params=None) -> GapReport:
    """Multivariate Araki-Lieb-Thirring inequality in a weighted norm.

    lhs = ln || rho^{(1-w)r/p} prod x_k^r eta^{wr/p} ||_{p/r}
    rhs = r int beta_r(t) ln || rho^{(1-w)/p} prod x_k^{1+it} eta^{w/p} ||_p dt
    """
    if not (p >= 1 and 0 < r <= 1 and 0 <= w <= 1):
        raise ValueError("need p >= 1, 0 < r <= 1 and 0 <= w <= 1")
    rho, reg_rho = _faithful(rho, delta_reg)
    eta, reg_eta = _faithful(eta, delta_reg)
    xs = [as_psd(x) for x in xs]
    left_r, right_r = rho.power((1 - w) * r / p), eta.power(w * r / p)
    prod_r = np.linalg.multi_dot([x.power(r) for x in xs]) if len(xs) > 1 else xs[0].power(r)
    lhs = float(np.log(schatten_norms_batched((left_r @ prod_r @ right_r)[None], p / r)[0]))
    left, right = rho.power((1 - w) / p), eta.power(w / p)

    def integrand(t):
        z = 1.0 + 1j * np.asarray(t)
        prod = xs[0].power(z)
        for x in xs[1:]:
            prod = prod @ x.power(z)
        return np.log(schatten_norms_batched(left @ prod @ right, p))

    rhs = r * float(integrate_weighted(integrand, r, rule))
    diag = {"delta_reg": delta_reg if (reg_rho or reg_eta) else 0.0, "n": len(xs)}
    return make_report("alt", instance_id, lhs, rhs, rhs - lhs, diag, params)


def _exp_psd(h) -> PsdMatrix:
    w, u = eig_hermitian(h)
    return PsdMatrix(np.exp(w), u)


def trotter_alpha(hs, rho, p: float, r: float) -> np.ndarray:
    """``(rho^{r/2p} e^{rH_1/2} ... e^{rH_n} ... e^{rH_1/2} rho^{r/2p})^{1/r}``."""
    rho = as_psd(rho)
    half = [expm_hermitian(0.5 * r * np.asarray(h)) for h in hs[:-1]]
    mid = expm_hermitian(r * np.asarray(hs[-1]))
    core = mid
    for e in reversed(half):
        core = e @ core @ e
    outer = rho.power(r / (2 * p))
    return psd_power_batched(outer @ core @ outer, 1.0 / r)


def check_gt(hs, rho, p: float, rule: QuadratureRule | None = None, delta_reg: float = DELTA_REG,
             instance_id: str = "", params=None, trotter=(0.25, 1 / 16, 1 / 64)) -> GapReport:
    """Multivariate Golden-Thompson inequality with ``rho = e^{H_0}``.

    lhs = ln || exp(H_0/p + sum H_k) ||_p
    rhs = int beta_0(t) ln || prod exp((1+it) H_k) rho^{1/p} ||_p dt
    """
    rho, reg = _faithful(rho, delta_reg)
    hs = [np.asarray(h, dtype=complex) for h in hs]
    target = expm_hermitian(rho.log() / p + sum(hs))
    lhs = float(np.log(schatten_norms_batched(target[None], p)[0]))
    exps = [_exp_psd(h) for h in hs]
    right = rho.power(1.0 / p)

    def integrand(t):
        z = 1.0 + 1j * np.asarray(t)
        prod = exps[0].power(z)
        for e in exps[1:]:
            prod = prod @ e.power(z)
        return np.log(schatten_norms_batched(prod @ right, p))

    rhs = float(integrate_weighted(integrand, 0.0, rule))
    diag = {"delta_reg": delta_reg if reg else 0.0, "n": len(hs)}
    errs = [schatten_norm(trotter_alpha(hs, rho, p, r) - target, p) for r in trotter]
    for r, e in zip(trotter, errs):
        diag[f"trotter_err_r{r:.6g}"] = e
    diag["trotter_decreasing"] = float(all(b <= a + 1e-12 for a, b in zip(errs, errs[1:])))
    return make_report("gt", instance_id, lhs, rhs, rhs - lhs, diag, params)


def lieb_function(h0, x, p: float) -> float:
    """``|| exp(H_0/p + ln X) ||_p`` for positive definite ``X``."""
    return schatten_norm(expm_hermitian(np.asarray(h0) / p + as_psd(x).log()), p)


def check_lieb(h0, p: float, x1, x2, lam: float, instance_id: str = "", params=None) -> GapReport:
    """Concavity of ``X -> || exp(H_0/p + ln X) ||_p`` along a segment.

    Concavity holds for ``p = 1`` (Lieb's theorem). For ``p > 1`` the map is a
    weighted l_p norm on commuting inputs and hence convex, so the inequality
    generally fails there.
    """
    x1, x2 = as_psd(x1), as_psd(x2)
    if not (x1.is_faithful and x2.is_faithful):
        raise ValueError("Lieb concavity needs positive definite X1, X2")
    mid = lam * x1.matrix + (1 - lam) * x2.matrix
    lhs = lam * lieb_function(h0, x1, p) + (1 - lam) * lieb_function(h0, x2, p)
    rhs = lieb_function(h0, mid, p)
    return make_report("lieb", instance_id, lhs, rhs, rhs - lhs, {"lambda": lam}, params)


# ------------------------------------------------------------ data processing


def check_dpi_relative_entropy(rho, eta, channel: QuantumChannel, instance_id: str = "", params=None) -> GapReport:
    d_in, d_out, gap = entropy_gap(rho, eta, channel)
    margin = gap if np.isfinite(d_in) else np.inf
    return make_report("dpi_relative_entropy", instance_id, d_out, d_in, margin, {}, params)


def check_dpi_sandwiched(rho, eta, channel: QuantumChannel, p: float, instance_id: str = "", params=None) -> GapReport:
    """``D_p(Phi rho || Phi eta) <= D_p(rho || eta)`` for the sandwiched divergence."""
    rho_m, eta_m = as_psd(rho).matrix, as_psd(eta).matrix
    d_in = sandwiched_renyi(rho_m, eta_m, p)
    d_out = sandwiched_renyi(channel.apply(rho_m), channel.apply(eta_m), p)
    margin = d_in - d_out if np.isfinite(d_in) else np.inf
    return make_report("dpi_sandwiched", instance_id, d_out, d_in, margin, {}, params)


def check_dpi_p_fidelity(rho, eta, channel: QuantumChannel, p: float, scaled: bool = True,
                         instance_id: str = "", params=None) -> GapReport:
    """Monotonicity of the p-fidelity under channels.

    With ``scaled`` (default) the states enter through their ``1/p`` powers,
    ``f_p(Phi(rho)^{1/p}, Phi(eta)^{1/p}) >= f_p(rho^{1/p}, eta^{1/p})``, which is
    ``|| rho^{1/2p} eta^{1/2p} ||_p``. This agrees with the unscaled form at
    ``p = 1``; the unscaled form fails for ``p > 1`` (e.g. ``tr(rho eta)`` at
    ``p = 2`` is not monotone).
    """
    rho, eta = as_psd(rho), as_psd(eta)
    rho_hat, eta_hat = as_psd(channel.apply(rho.matrix)), as_psd(channel.apply(eta.matrix))
    if scaled:
        before = p_fidelity(rho.power(1.0 / p), eta.power(1.0 / p), p)
        after = p_fidelity(rho_hat.power(1.0 / p), eta_hat.power(1.0 / p), p)
    else:
        before = p_fidelity(rho, eta, p)
        after = p_fidelity(rho_hat, eta_hat, p)
    return make_report("dpi_p_fidelity", instance_id, before, after, after - before, {"scaled": scaled}, params)


# ------------------------------------------------------------------ recovery


def check_recovery_p(rho, eta, channel: QuantumChannel, p: float, rule: QuadratureRule | None = None,
                     instance_id: str = "", params=None) -> GapReport:
    """``D(rho||eta) - D(Phi rho||Phi eta) >= 2p int beta_0(t) FR^{(1+it)/p} dt``."""
    _, _, gap = entropy_gap(rho, eta, channel)
    spec = RecoveryMapSpec(eta, channel)
    fr = float(integrate_weighted(lambda t: log_fidelity_of_recovery(rho, eta, channel, (1 + 1j * t) / p, spec),
                                  0.0, rule))
    lhs = 2 * p * fr
    return make_report("recovery_p", instance_id, lhs, gap, gap - lhs, {"gap": gap, "fr_integral": fr}, params)


def check_universal_recovery(rho, eta, channel: QuantumChannel, p: float, rule: QuadratureRule | None = None,
                             instance_id: str = "", params=None) -> GapReport:
    """``-ln f_p(rho^{1/p}, Y) <= gap / 2p`` with ``Y = R~_p(Phi rho)^{1/p}``.

    ``Y`` is the averaged map ``int beta_0(t) R_{(1+it)/p}(Phi(rho)^{1/p}) dt``.
    The unscaled value ``-ln f_p(rho, R~_p(Phi rho))`` is recorded in the
    diagnostics; it coincides with the checked quantity at ``p = 1``.
    """
    _, _, gap = entropy_gap(rho, eta, channel)
    rho = as_psd(rho)
    spec = RecoveryMapSpec(eta, channel)
    rho_hat = channel.apply(rho.matrix)
    root = nonlinear_recovery_root(spec, None, p, rho_hat, rule)
    f = p_fidelity(rho.power(1.0 / p), root, p)
    lhs = -np.log(f) if f > 1e-300 else np.inf
    rhs = gap / (2 * p)
    unscaled = p_fidelity(rho, psd_power_batched(root, p), p)
    diag = {"gap": gap, "neg_log_fidelity_unscaled": -np.log(max(unscaled, 1e-300))}
    return make_report("universal_recovery", instance_id, lhs, rhs, rhs - lhs, diag, params)


def check_measured_recovery(rho, eta, channel: QuantumChannel, rule: QuadratureRule | None = None,
                            tol: float = 1e-10, target: str = "rho_hat", instance_id: str = "",
                            params=None) -> GapReport:
    """``D_M(rho || R~(Phi rho)) <= D(rho||eta) - D(Phi rho||Phi eta)``.

    ``target = "eta_hat"`` applies the universal map to ``Phi(eta)`` instead,
    which returns ``eta`` and reduces the left side to ``D_M(rho||eta)``.
    """
    _, _, gap = entropy_gap(rho, eta, channel)
    rho = as_psd(rho)
    src = channel.apply(rho.matrix) if target == "rho_hat" else channel.apply(as_psd(eta).matrix)
    rec = universal_recovery_apply(eta, channel, src, rule)
    res = measured_relative_entropy_result(rho.matrix, rec, tol=tol)
    diag = {"gap": gap, "grad_norm": res.grad_norm, "iterations": res.iterations, "converged": res.converged}
    return make_report("measured_recovery", instance_id, res.value, gap, gap - res.value, diag, params)


def check_quadratic(rho, eta, channel: QuantumChannel, instance_id: str = "", params=None) -> GapReport:
    """Two quadratic recovery bounds through ``R_{1/2}``.

    margin_1 = gap - || rho^{1/2} - R_{1/2}(Phi(rho)^{1/2}) ||_2^2
    margin_2 = 4 gap - || rho - R_{1/2}(Phi(rho)^{1/2})^2 ||_1^2
    The report margin is the smaller of the two.
    """
    _, _, gap = entropy_gap(rho, eta, channel)
    rho = as_psd(rho)
    spec = RecoveryMapSpec(eta, channel)
    rec = spec.apply(0.5, as_psd(channel.apply(rho.matrix)).power(0.5))
    err2 = float(np.linalg.norm(rho.power(0.5) - rec) ** 2)
    err1 = _trace_norm(rho.matrix - rec @ rec) ** 2
    m1, m2 = gap - err2, 4 * gap - err1
    diag = {"gap": gap, "margin_1": m1, "margin_2": m2, "l2_error_sq": err2, "l1_error_sq": err1}
    lhs, rhs = (err2, gap) if m1 <= m2 else (err1, 4 * gap)
    return make_report("quadratic", instance_id, lhs, rhs, min(m1, m2), diag, params)


def petz_error(rho, eta, channel: QuantumChannel) -> float:
    """``|| R(Phi(rho)) - rho ||_1`` for the Petz map ``R``."""
    rho = as_psd(rho)
    rec = RecoveryMapSpec(eta, channel).apply(1.0, channel.apply(rho.matrix))
    return _trace_norm(rec - rho.matrix)


def check_petz_equality(rho, eta, channel: QuantumChannel, equality_tol: float = EQUALITY_TOL,
                        exact_tol: float = PETZ_EXACT_TOL, rule: QuadratureRule | None = None,
                        instance_id: str = "", params=None) -> GapReport:
    """Equality in data processing versus exact recovery.

    * gap <= equality_tol: the Petz map and the nonlinear maps (p = 1, 2) must
      recover rho within 10 sqrt(equality_tol) in trace norm.
    * Petz-exact (error <= exact_tol): the gap must vanish up to slack.
    * Otherwise the instance is in generic position (gap > 0, not exact); the
      margin records the distance from both thresholds.
    """
    _, _, gap = entropy_gap(rho, eta, channel)
    rho = as_psd(rho)
    spec = RecoveryMapSpec(eta, channel)
    rho_hat = channel.apply(rho.matrix)
    err = _trace_norm(spec.apply(1.0, rho_hat) - rho.matrix)
    diag = {"gap": gap, "petz_error": err}
    if gap <= equality_tol:
        errs = [err]
        for p in (1, 2):
            e = _trace_norm(nonlinear_recovery_p(spec, None, p, rho_hat, rule) - rho.matrix)
            diag[f"nonlinear_error_p{p}"] = e
            errs.append(e)
        bound = 10 * np.sqrt(equality_tol)
        diag["case"] = 0
        return make_report("petz_equality", instance_id, max(errs), bound, bound - max(errs), diag, params)
    if err <= exact_tol:
        diag["case"] = 1
        return make_report("petz_equality", instance_id, gap, 0.0, -gap, diag, params)
    diag["case"] = 2
    return make_report("petz_equality", instance_id, 0.0, min(gap - equality_tol, err - exact_tol),
                       min(gap - equality_tol, err - exact_tol), diag, params)


# ------------------------------------------------------ interpolation checks


def exp_sum(coefficients, z):
    z = np.asarray(z, dtype=complex)
    return sum(c * np.exp(a * z) for c, a in coefficients)


def check_hirschman_scalar(coefficients, theta: float, rule: QuadratureRule | None = None,
                           instance_id: str = "", params=None) -> GapReport:
    """Hirschman's strip inequality for ``g(z) = sum c_k e^{a_k z}``.

    ln|g(theta)| <= (1-theta) int ln|g(it)| beta_{1-theta} + theta int ln|g(1+it)| beta_theta
    """
    coefficients = [(complex(c), float(a)) for c, a in coefficients]
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    g_theta = abs(exp_sum(coefficients, theta))
    if g_theta < 1e-12:
        raise ValueError("|g(theta)| is too small for a logarithmic comparison")
    lhs = float(np.log(g_theta))
    left = integrate_weighted(lambda t: np.log(np.abs(exp_sum(coefficients, 1j * t))), 1 - theta, rule)
    right = integrate_weighted(lambda t: np.log(np.abs(exp_sum(coefficients, 1 + 1j * t))), theta, rule)
    rhs = float((1 - theta) * left + theta * right)
    return make_report("hirschman_scalar", instance_id, lhs, rhs, rhs - lhs, {"terms": len(coefficients)}, params)


def richardson(values, ratio: float = 10.0) -> float:
    """Eliminate the leading error terms of ``E(h) = E0 + c1 h + c2 h^2 + ...``.

    ``values`` are estimates at ``h, h/ratio, h/ratio^2, ...``.
    """
    table = list(values)
    k = 1
    while len(table) > 1:
        f = ratio ** k
        table = [(f * b - a) / (f - 1) for a, b in zip(table, table[1:])]
        k += 1
    return float(table[0])


def derivative_estimates(rho, eta, channel: QuantumChannel, thetas, q0: float = 4.0) -> list[float]:
    """``-(2/theta) ln || G(theta) rho^{1/q(theta)} ||_{q(theta)}`` with ``1/q = (1-theta)/q0 + theta``."""
    g = Interpolant(rho, eta, channel)
    out = []
    for th in thetas:
        q = 1.0 / ((1 - th) / q0 + th)
        out.append(-2.0 / th * np.log(g.norm(th, q)))
    return out


def check_entropy_derivative(rho, eta, channel: QuantumChannel, thetas=(1e-2, 1e-3, 1e-4), q0: float = 4.0,
                             rel_tol: float = 1e-3, instance_id: str = "", params=None) -> GapReport:
    """Small-theta behaviour of the interpolant norm reproduces the entropy gap.

    The estimates at the given thetas (ratio 10) are Richardson-extrapolated;
    margin = rel_tol * max(1, gap) - |extrapolant - gap|.
    """
    _, _, gap = entropy_gap(rho, eta, channel)
    est = derivative_estimates(rho, eta, channel, thetas, q0)
    ratio = thetas[0] / thetas[1]
    extrap = richardson(est, ratio)
    tol = rel_tol * max(1.0, abs(gap))
    diag = {"gap": gap, "raw_smallest_theta": est[-1], "tolerance": tol}
    return make_report("entropy_derivative", instance_id, extrap, gap, tol - abs(extrap - gap), diag, params)


def check_fidid(rho, eta, channel: QuantumChannel, z, instance_id: str = "", params=None) -> GapReport:
    """``|| G(z) rho^theta ||_{1/theta} = f_{1/theta}(rho^theta, R_z(Phi(rho)^theta))``, ``theta = Re z``.

    The margin is ``-|lhs - rhs|``.
    """
    lhs = Interpolant(rho, eta, channel).norm(z)
    rhs = recovery_fidelity(rho, eta, channel, z)
    return make_report("fidid", instance_id, lhs, rhs, -abs(lhs - rhs), {"re_z": z.real, "im_z": z.imag}, params)


def check_fidint(rho, eta, channel: QuantumChannel, theta: float, q0: float = 64.0, q1: float = 2.0,
                 rule: QuadratureRule | None = None, instance_id: str = "", params=None) -> GapReport:
    """Three-line bound for the interpolant, with ``1/q(theta) = (1-theta)/q0 + theta/q1``.

    ln||G(theta)||_{q(theta)} <= (1-theta) int ln||G(it)||_{q0} beta_{1-theta}
                                 + theta int ln||G(1+it)||_{q1} beta_theta
    """
    g = Interpolant(rho, eta, channel)
    q = 1.0 / ((1 - theta) / q0 + theta / q1)
    lhs = float(np.log(g.norm(theta, q)))
    left = integrate_weighted(lambda t: np.log(g.norm(1j * np.asarray(t), q0)), 1 - theta, rule)
    right = integrate_weighted(lambda t: np.log(g.norm(1 + 1j * np.asarray(t), q1)), theta, rule)
    rhs = float((1 - theta) * left + theta * right)
    boundary = float(np.max(g.norm(1j * np.linspace(-3, 3, 13), q0)))
    diag = {"boundary_norm_max": boundary}
    return make_report("fidint", instance_id, lhs, rhs, rhs - lhs, diag, params)


# ================================================================ ensembles


def _salt(name: str) -> int:
    return zlib.crc32(name.encode())


def instance_rng(seed: int, name: str, dim: int, index: int) -> np.random.Generator:
    return keyed_rng(seed, _salt(name), dim, index)


STATE_CYCLE = ("mixed", "mixed", "pure", "near_degenerate")


def generic_state(dim: int, rng, index: int, delta_reg: float = DELTA_REG) -> DensityMatrix:
    """State drawn from a kind cycled by index; non-faithful draws are regularised."""
    kind = STATE_CYCLE[index % len(STATE_CYCLE)]
    rho = random_state(dim, rng, kind)
    return rho if rho.is_faithful else regularize(rho.matrix, delta_reg)


def generic_channel(dim: int, rng, index: int) -> QuantumChannel:
    """Channel drawn from a kind cycled by index."""
    kind = index % 5
    if kind in (0, 1):
        return random_isometry_channel(dim, dim, dim, rng)
    if kind == 2:
        return random_isometry_channel(dim, int(rng.integers(2, dim + 2)), dim + 1, rng)
    if kind == 3:
        return depolarizing_channel(float(rng.uniform(0.05, 1.0)), dim)
    sizes = _random_partition(dim, rng)
    u = haar_unitary(dim, rng)
    return pinching_channel([u @ p @ u.conj().T for p in block_projectors(sizes)])


def _random_partition(dim: int, rng) -> list[int]:
    cut = int(rng.integers(1, dim))
    return [cut, dim - cut]


@dataclass
class Instance:
    instance_id: str
    rho: DensityMatrix
    eta: DensityMatrix
    channel: QuantumChannel
    kind: str = "generic"

    def replay(self) -> dict:
        return {"rho": self.rho.matrix, "eta": self.eta.matrix, "channel": self.channel}


def sufficient_instance(dim: int, rng, index: int) -> Instance:
    """Instance where the channel is sufficient for the pair (exact Petz recovery)."""
    kind = index % 4
    iid = f"d{dim}-i{index}"
    if kind == 0:
        sizes = _random_partition(dim, rng)
        u = haar_unitary(dim, rng)
        projs = [u @ p @ u.conj().T for p in block_projectors(sizes)]
        states = []
        for _ in range(2):
            weights = rng.dirichlet(np.ones(len(projs)))
            blocks = [wgt * normalize(p @ random_psd(dim, rng) @ p) for wgt, p in zip(weights, projs)]
            states.append(density_matrix(normalize(sum(blocks))))
        return Instance(iid, states[0], states[1], pinching_channel(projs), "pinching")
    if kind == 1:
        rho, eta = random_state(dim, rng), random_state(dim, rng)
        return Instance(iid, rho, eta, unitary_channel(haar_unitary(dim, rng)), "unitary")
    if kind == 2:
        sigma = random_state(2, rng).matrix
        rho_a, eta_a = random_state(dim, rng).matrix, random_state(dim, rng).matrix
        return Instance(iid, density_matrix(np.kron(rho_a, sigma)), density_matrix(np.kron(eta_a, sigma)),
                        partial_trace_channel([dim, 2], 1), "partial_trace")
    rho, eta = random_state(dim, rng), random_state(dim, rng)
    return Instance(iid, rho, eta, embedding_channel(dim, dim + 1), "embedding")


def comparable_instance(dim: int, rng, index: int, delta: float = COMPARABLE_DELTA) -> Instance:
    eta = random_state(dim, rng)
    rho = comparable_to(eta, delta, rng)
    return Instance(f"d{dim}-i{index}", rho, eta, generic_channel(dim, rng, index), "comparable")


def generic_instance(dim: int, rng, index: int) -> Instance:
    eta = generic_state(dim, rng, index)
    rho = generic_state(dim, rng, index // len(STATE_CYCLE))
    return Instance(f"d{dim}-i{index}", rho, eta, generic_channel(dim, rng, index), "generic")


def commuting_instance(dim: int, rng, index: int) -> Instance:
    """Pair diagonal in a common random basis, with a pinching in that basis."""
    u = haar_unitary(dim, rng)
    rho = density_matrix(u @ np.diag(rng.dirichlet(np.ones(dim))) @ u.conj().T)
    eta = density_matrix(u @ np.diag(rng.dirichlet(np.ones(dim))) @ u.conj().T)
    projs = [u @ p @ u.conj().T for p in block_projectors(_random_partition(dim, rng))]
    return Instance(f"d{dim}-i{index}", rho, eta, pinching_channel(projs), "commuting")


def recovery_instance(dim: int, rng, index: int) -> Instance:
    """Recovery ensembles: comparable pairs on even indices, general pairs on odd ones."""
    if index % 2 == 0:
        return comparable_instance(dim, rng, index)
    return generic_instance(dim, rng, index)


def build_instance(kind: str, seed: int, dim: int, index: int, salt: str = "instance") -> Instance:
    """Named ensemble kinds: generic, comparable, sufficient, commuting, recovery."""
    rng = instance_rng(seed, salt, dim, index)
    makers = {
        "generic": generic_instance,
        "comparable": comparable_instance,
        "sufficient": sufficient_instance,
        "commuting": commuting_instance,
        "recovery": recovery_instance,
    }
    if kind not in makers:
        raise ValueError(f"unknown instance kind {kind!r}")
    return makers[kind](dim, rng, index)


# ============================================================ suite runners

ALT_GRID = list(itertools.product((1.0, 2.0, 4.0), (0.25, 0.5, 1.0), (0.0, 0.5, 1.0), (1, 2, 3)))
GT_GRID = list(itertools.product((1.0, 2.0), (1, 2, 3)))
SANDWICHED_P = (1.5, 2.0, 3.0)
FIDELITY_P = (1.0, 2.0, 4.0)
FIDID_GRID = list(itertools.product((0.25, 0.5, 1.0), (-1.0, 0.0, 1.0)))
FIDINT_THETAS = (0.25, 0.5)


def _is_commuting_slot(index: int, grid_size: int) -> bool:
    # one full sweep of the grid in every four is commuting
    return (index // grid_size) % 4 == 3


def run_alt(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    rng = instance_rng(seed, "alt", dim, index)
    p, r, w, n = ALT_GRID[index % len(ALT_GRID)]
    params = {"p": p, "r": r, "w": w, "n": n}
    if _is_commuting_slot(index, len(ALT_GRID)):
        u = haar_unitary(dim, rng)
        diag = lambda v: u @ np.diag(v) @ u.conj().T  # noqa: E731
        rho = density_matrix(diag(rng.dirichlet(np.ones(dim))))
        eta = density_matrix(diag(rng.dirichlet(np.ones(dim))))
        xs = [diag(rng.uniform(0.05, 2.0, dim)) for _ in range(n)]
        params["commuting"] = True
    else:
        rho = generic_state(dim, rng, index)
        eta = generic_state(dim, rng, index // 4)
        xs = [random_psd(dim, rng, rank=dim if k % 3 else max(1, dim - 1)) for k in range(n)]
        params["commuting"] = False
    rep = check_alt(xs, rho, eta, p, r, w, rule, instance_id=f"d{dim}-i{index}", params=params)
    rep.replay = {"rho": rho.matrix, "eta": eta.matrix, "xs": xs}
    return [rep]


def run_gt(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    rng = instance_rng(seed, "gt", dim, index)
    p, n = GT_GRID[index % len(GT_GRID)]
    params = {"p": p, "n": n}
    if _is_commuting_slot(index, len(GT_GRID)):
        u = haar_unitary(dim, rng)
        rho = density_matrix(u @ np.diag(rng.dirichlet(np.ones(dim))) @ u.conj().T)
        hs = [u @ np.diag(rng.uniform(-1, 1, dim)) @ u.conj().T for _ in range(n)]
        params["commuting"] = True
    else:
        rho = generic_state(dim, rng, index)
        hs = [random_hermitian(dim, rng, 0.7) for _ in range(n)]
        params["commuting"] = False
    rep = check_gt(hs, rho, p, rule, instance_id=f"d{dim}-i{index}", params=params)
    rep.replay = {"rho": rho.matrix, "hs": hs}
    return [rep]


def run_lieb(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    rng = instance_rng(seed, "lieb", dim, index)
    h0 = random_hermitian(dim, rng)
    x1 = random_psd(dim, rng) + 1e-3 * np.eye(dim)
    x2 = random_psd(dim, rng) + 1e-3 * np.eye(dim)
    lam = float(rng.uniform())
    rep = check_lieb(h0, 1.0, x1, x2, lam, instance_id=f"d{dim}-i{index}", params={"p": 1.0})
    rep.replay = {"h0": h0, "x1": x1, "x2": x2, "lambda": lam}
    return [rep]


def run_dpi_relative_entropy(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    inst = build_instance("generic", seed, dim, index, "dpi_relative_entropy")
    rep = check_dpi_relative_entropy(inst.rho, inst.eta, inst.channel, inst.instance_id)
    rep.replay = inst.replay()
    return [rep]


def run_dpi_sandwiched(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    inst = build_instance("generic", seed, dim, index, "dpi_sandwiched")
    out = []
    for p in SANDWICHED_P:
        rep = check_dpi_sandwiched(inst.rho, inst.eta, inst.channel, p, f"{inst.instance_id}-p{p:g}", {"p": p})
        rep.replay = inst.replay()
        out.append(rep)
    return out


def run_dpi_p_fidelity(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    inst = build_instance("generic", seed, dim, index, "dpi_p_fidelity")
    out = []
    for p in FIDELITY_P:
        rep = check_dpi_p_fidelity(inst.rho, inst.eta, inst.channel, p, instance_id=f"{inst.instance_id}-p{p:g}",
                                   params={"p": p})
        rep.replay = inst.replay()
        out.append(rep)
    return out


def _recovery_family_instance(seed, dim, index, salt):
    # every tenth instance is an engineered sufficient one
    if index % 10 == 9:
        inst = build_instance("sufficient", seed, dim, index, salt)
    else:
        inst = build_instance("recovery", seed, dim, index, salt)
    return inst


def run_recovery_p(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    inst = _recovery_family_instance(seed, dim, index, "recovery_p")
    out = []
    for p in p_values or (1.0, 2.0):
        rep = check_recovery_p(inst.rho, inst.eta, inst.channel, p, rule, f"{inst.instance_id}-p{p:g}",
                               {"p": p, "kind": inst.kind})
        rep.replay = inst.replay()
        out.append(rep)
    return out


def run_universal_recovery(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    inst = _recovery_family_instance(seed, dim, index, "universal_recovery")
    out = []
    for p in p_values or (1.0, 2.0):
        rep = check_universal_recovery(inst.rho, inst.eta, inst.channel, p, rule, f"{inst.instance_id}-p{p:g}",
                                       {"p": p, "kind": inst.kind})
        rep.replay = inst.replay()
        out.append(rep)
    return out


def run_measured_recovery(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    inst = _recovery_family_instance(seed, dim, index, "measured_recovery")
    rep = check_measured_recovery(inst.rho, inst.eta, inst.channel, rule, instance_id=inst.instance_id,
                                  params={"kind": inst.kind})
    rep.replay = inst.replay()
    return [rep]


def run_quadratic(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    inst = _recovery_family_instance(seed, dim, index, "quadratic")
    rep = check_quadratic(inst.rho, inst.eta, inst.channel, inst.instance_id, {"kind": inst.kind})
    rep.replay = inst.replay()
    return [rep]


def run_petz_equality(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    kind = "sufficient" if index % 2 == 0 else "generic"
    inst = build_instance(kind, seed, dim, index, "petz_equality")
    rep = check_petz_equality(inst.rho, inst.eta, inst.channel, rule=rule, instance_id=inst.instance_id,
                              params={"kind": inst.kind})
    rep.replay = inst.replay()
    return [rep]


def hirschman_family(rng, index: int) -> tuple[list, float]:
    """Random exponential sum and theta.

    Families cycle through a single exponential (exact equality), a dominant
    term (zero-free, equality up to quadrature), two terms with a line of
    zeros inside the strip, and three generic terms.
    """
    theta = float(rng.uniform(0.1, 0.9))
    phase = lambda: np.exp(2j * np.pi * rng.uniform())  # noqa: E731
    kind = index % 4
    while True:
        if kind == 0:
            coeffs = [(rng.uniform(0.2, 3.0) * phase(), rng.uniform(-3, 3))]
        elif kind == 1:
            a0 = rng.uniform(-2, 2)
            coeffs = [(rng.uniform(1, 2) * phase(), a0)]
            coeffs += [(0.1 * rng.uniform(0, 1) * phase() * np.exp(-1.0), a0 + rng.uniform(-1, 1)) for _ in range(2)]
        elif kind == 2:
            a0, gap_a = rng.uniform(-2, 2), rng.uniform(1, 4)
            x_star = rng.uniform(0.2, 0.8)
            c0 = rng.uniform(0.5, 2)
            coeffs = [(c0 * phase(), a0), (c0 * np.exp(-gap_a * x_star) * phase(), a0 + gap_a)]
        else:
            coeffs = [(rng.uniform(0.2, 2) * phase(), rng.uniform(-3, 3)) for _ in range(3)]
        grid = np.linspace(-12, 12, 2401)
        edge = np.abs(np.concatenate([exp_sum(coeffs, 1j * grid), exp_sum(coeffs, 1 + 1j * grid)]))
        if abs(exp_sum(coeffs, theta)) >= 1e-6 and edge.min() >= 1e-2 * edge.max():
            return coeffs, theta
        theta = float(rng.uniform(0.1, 0.9))


def run_hirschman_scalar(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    rng = instance_rng(seed, "hirschman_scalar", dim, index)
    coeffs, theta = hirschman_family(rng, index)
    family = ("exponential", "dominant", "two_term", "generic")[index % 4]
    rep = check_hirschman_scalar(coeffs, theta, rule, f"d{dim}-i{index}", {"theta": theta, "family": family})
    rep.replay = {"coefficients": [[c.real, c.imag, a] for c, a in coeffs], "theta": theta}
    return [rep]


def run_entropy_derivative(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    inst = build_instance("comparable", seed, dim, index, "entropy_derivative")
    rep = check_entropy_derivative(inst.rho, inst.eta, inst.channel, instance_id=inst.instance_id)
    rep.replay = inst.replay()
    return [rep]


def run_fidid(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    inst = build_instance("comparable", seed, dim, index, "fidid")
    out = []
    for theta, t in FIDID_GRID:
        z = complex(theta, t)
        rep = check_fidid(inst.rho, inst.eta, inst.channel, z, f"{inst.instance_id}-th{theta:g}-t{t:g}",
                          {"theta": theta, "t": t})
        rep.replay = inst.replay()
        out.append(rep)
    return out


def run_fidint(seed, dim, index, p_values=None, rule=None) -> list[GapReport]:
    inst = build_instance("recovery", seed, dim, index, "fidint")
    out = []
    for theta in FIDINT_THETAS:
        rep = check_fidint(inst.rho, inst.eta, inst.channel, theta, rule=rule,
                           instance_id=f"{inst.instance_id}-th{theta:g}", params={"theta": theta})
        rep.replay = inst.replay()
        out.append(rep)
    return out


REGISTRY = {
    "alt": run_alt,
    "gt": run_gt,
    "lieb": run_lieb,
    "dpi_relative_entropy": run_dpi_relative_entropy,
    "dpi_sandwiched": run_dpi_sandwiched,
    "dpi_p_fidelity": run_dpi_p_fidelity,
    "recovery_p": run_recovery_p,
    "universal_recovery": run_universal_recovery,
    "measured_recovery": run_measured_recovery,
    "quadratic": run_quadratic,
    "petz_equality": run_petz_equality,
    "hirschman_scalar": run_hirschman_scalar,
    "entropy_derivative": run_entropy_derivative,
    "fidid": run_fidid,
    "fidint": run_fidint,
}

SUITES = {
    "all": list(REGISTRY),
    "trace": ["alt", "gt", "lieb"],
    "dpi": ["dpi_relative_entropy", "dpi_sandwiched", "dpi_p_fidelity"],
    "recovery": ["recovery_p", "universal_recovery", "measured_recovery", "quadratic", "petz_equality"],
    "interpolation": ["hirschman_scalar", "entropy_derivative", "fidid", "fidint"],
}

P_DEPENDENT = ("recovery_p", "universal_recovery")

CHECK_PARAMS = {
    "alt": {"p": [1.0, 2.0, 4.0], "r": [0.25, 0.5, 1.0], "w": [0.0, 0.5, 1.0], "n": [1, 2, 3]},
    "gt": {"p": [1.0, 2.0], "n": [1, 2, 3], "trotter_r": [0.25, 1 / 16, 1 / 64]},
    "lieb": {"p": [1.0]},
    "dpi_relative_entropy": {},
    "dpi_sandwiched": {"p": list(SANDWICHED_P)},
    "dpi_p_fidelity": {"p": list(FIDELITY_P), "scaled": True},
    "recovery_p": {},
    "universal_recovery": {},
    "measured_recovery": {"target": "rho_hat"},
    "quadratic": {},
    "petz_equality": {"equality_tol": EQUALITY_TOL, "exact_tol": PETZ_EXACT_TOL},
    "hirschman_scalar": {"theta_range": [0.1, 0.9]},
    "entropy_derivative": {"thetas": [1e-2, 1e-3, 1e-4], "q0": 4.0, "rel_tol": 1e-3},
    "fidid": {"theta": [0.25, 0.5, 1.0], "t": [-1.0, 0.0, 1.0]},
    "fidint": {"theta": list(FIDINT_THETAS), "q0": 64.0, "q1": 2.0},
}
