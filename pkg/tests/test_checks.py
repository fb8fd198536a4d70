import json

import numpy as np
import pytest

from petzlab.checks import (
    CHECK_PARAMS,
    REGISTRY,
    SUITES,
    build_instance,
    check_alt,
    check_dpi_p_fidelity,
    check_dpi_relative_entropy,
    check_dpi_sandwiched,
    check_entropy_derivative,
    check_fidid,
    check_fidint,
    check_gt,
    check_hirschman_scalar,
    check_lieb,
    check_measured_recovery,
    check_petz_equality,
    check_quadratic,
    check_recovery_p,
    check_universal_recovery,
    hirschman_family,
    instance_rng,
    lieb_function,
    make_report,
    richardson,
)
from petzlab.entropies import measured_relative_entropy, weighted_p_norm
from petzlab.linalg import matrix_power
from petzlab.quadrature import beta_density
from petzlab.states import (
    block_projectors,
    depolarizing_channel,
    haar_unitary,
    identity_channel,
    keyed_rng,
    pinching_channel,
    random_hermitian,
    random_psd,
    random_state,
    unitary_channel,
)


def _comparable(seed, d=2):
    inst = build_instance("comparable", seed, d, seed, "check-tests")
    return inst.rho.matrix, inst.eta.matrix, inst.channel


def _sufficient(seed, d=3):
    inst = build_instance("sufficient", seed, d, 4 * seed, "check-tests")  # index % 4 == 0: pinching
    return inst.rho.matrix, inst.eta.matrix, inst.channel


def _commuting_pair(seed, d=3):
    rng = keyed_rng(seed, 77)
    u = haar_unitary(d, rng)
    rho = u @ np.diag(rng.dirichlet(np.ones(d))) @ u.conj().T
    eta = u @ np.diag(rng.dirichlet(np.ones(d))) @ u.conj().T
    return rho, eta, u


# ---------------------------------------------------------------- reports


def test_report_pass_rule():
    assert make_report("x", "i", 1.0, 1.0, -0.5e-7).passed
    assert not make_report("x", "i", 1.0, 1.0, -2e-7).passed
    assert make_report("x", "i", 0.0, np.inf, np.inf).passed
    assert not make_report("x", "i", 0.0, 0.0, np.nan).passed
    assert not make_report("x", "i", np.inf, 0.0, -np.inf).passed


def test_report_json_handles_infinities():
    rep = make_report("x", "i", 0.0, np.inf, np.inf, {"a": np.nan})
    obj = json.loads(json.dumps(rep.to_json()))
    assert obj["rhs"] == "inf" and obj["margin"] == "inf" and obj["diagnostics"]["a"] == "nan"


# ------------------------------------------------------- trace inequalities


@pytest.mark.parametrize("p,w,n", [(1.0, 0.0, 1), (2.0, 0.5, 2), (4.0, 1.0, 3)])
def test_alt_r1_is_exact(p, w, n):
    rng = keyed_rng(1, n)
    xs = [random_psd(3, rng) for _ in range(n)]
    rep = check_alt(xs, random_state(3, rng), random_state(3, rng), p, 1.0, w)
    assert rep.margin == 0.0


@pytest.mark.parametrize("p,r,w,n", [(1.0, 0.25, 0.0, 2), (2.0, 0.5, 1.0, 3), (4.0, 0.5, 0.5, 1)])
def test_alt_commuting_equality(p, r, w, n):
    rho, eta, u = _commuting_pair(2)
    rng = keyed_rng(3)
    xs = [u @ np.diag(rng.uniform(0.1, 2, 3)) @ u.conj().T for _ in range(n)]
    rep = check_alt(xs, rho, eta, p, r, w)
    assert abs(rep.margin) <= 1e-8


def test_alt_random_pair_against_brute_force():
    rng = keyed_rng(4)
    xs = [random_psd(3, rng) for _ in range(2)]
    rho, eta = random_state(3, rng).matrix, random_state(3, rng).matrix
    p, r, w = 2.0, 0.5, 1.0
    rep = check_alt(xs, rho, eta, p, r, w)
    assert rep.passed and rep.margin > 0
    t = np.linspace(-12, 12, 48001)
    vals = np.array([np.log(weighted_p_norm(matrix_power(xs[0], 1 + 1j * s) @ matrix_power(xs[1], 1 + 1j * s),
                                            p, w, rho, eta)) for s in t[::20]])
    dens = beta_density(r, t[::20])
    brute = r * np.trapezoid(vals * dens, t[::20])
    assert abs(brute - rep.rhs) <= 1e-4


def test_gt_single_exponential_with_commuting_reference():
    rng = keyed_rng(5)
    h1 = random_hermitian(3, rng)
    for p in (1.0, 2.0):
        rep = check_gt([h1], np.eye(3) / 3, p)
        assert abs(rep.margin) <= 1e-8


@pytest.mark.parametrize("p,n", [(1.0, 1), (2.0, 2), (1.0, 3)])
def test_gt_commuting_equality(p, n):
    rho, _, u = _commuting_pair(6)
    rng = keyed_rng(7)
    hs = [u @ np.diag(rng.uniform(-1, 1, 3)) @ u.conj().T for _ in range(n)]
    assert abs(check_gt(hs, rho, p).margin) <= 1e-8


def test_gt_random_and_trotter_diagnostics():
    rng = keyed_rng(8)
    hs = [random_hermitian(3, rng, 0.7) for _ in range(2)]
    rep = check_gt(hs, random_state(3, rng), 2.0)
    assert rep.passed and rep.margin > 0
    assert rep.diagnostics["trotter_decreasing"] == 1.0
    errs = [v for k, v in sorted(rep.diagnostics.items()) if k.startswith("trotter_err")]
    assert len(errs) == 3


def test_lieb_trivial_cases():
    rng = keyed_rng(9)
    h0, x1, x2 = random_hermitian(3, rng), random_psd(3, rng) + 0.1 * np.eye(3), random_psd(3, rng) + 0.1 * np.eye(3)
    assert abs(check_lieb(h0, 1.0, x1, x1, 0.3).margin) <= 1e-12
    assert abs(check_lieb(h0, 1.0, x1, x2, 0.0).margin) <= 1e-12
    assert abs(check_lieb(h0, 1.0, x1, x2, 1.0).margin) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_lieb_concave_at_p1(seed):
    rng = keyed_rng(10, seed)
    h0, x1, x2 = random_hermitian(3, rng), random_psd(3, rng) + 1e-3 * np.eye(3), random_psd(3, rng) + 1e-3 * np.eye(3)
    assert check_lieb(h0, 1.0, x1, x2, 0.5).passed


def test_lieb_fails_beyond_p1():
    # commuting inputs reduce the function to a weighted l_2 norm, which is convex
    h0 = np.zeros((2, 2))
    x1, x2 = np.diag([1.0, 1e-3]), np.diag([1e-3, 1.0])
    rep = check_lieb(h0, 2.0, x1, x2, 0.5)
    assert not rep.passed
    assert abs(lieb_function(h0, x1, 2.0) - np.sqrt(1 + 1e-6)) <= 1e-12


def test_lieb_rejects_singular():
    with pytest.raises(ValueError):
        check_lieb(np.zeros((2, 2)), 1.0, np.diag([1.0, 0.0]), np.eye(2), 0.5)


# ------------------------------------------------------------ data processing


def test_dpi_identity_is_zero():
    rho, eta, _ = _comparable(1, 3)
    ch = identity_channel(3)
    assert abs(check_dpi_relative_entropy(rho, eta, ch).margin) <= 1e-12
    assert abs(check_dpi_sandwiched(rho, eta, ch, 2.0).margin) <= 1e-12
    assert abs(check_dpi_p_fidelity(rho, eta, ch, 2.0).margin) <= 1e-12


def test_dpi_completely_depolarizing():
    rho, eta, _ = _comparable(2, 3)
    rep = check_dpi_relative_entropy(rho, eta, depolarizing_channel(1.0, 3))
    assert abs(rep.margin - rep.rhs) <= 1e-12
    assert abs(rep.lhs) <= 1e-12


def test_dpi_sandwiched_pinching_on_commuting_pair():
    rho, eta, u = _commuting_pair(3)
    ch = pinching_channel([u @ p @ u.conj().T for p in block_projectors([1, 2])])
    for p in (1.5, 2.0, 3.0):
        assert abs(check_dpi_sandwiched(rho, eta, ch, p).margin) <= 1e-8


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
def test_dpi_p_fidelity_orthogonal_pure_states(p):
    ch = depolarizing_channel(1.0, 2)
    rep = check_dpi_p_fidelity(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), ch, p)
    assert abs(rep.lhs) <= 1e-12
    assert abs(rep.margin - 1.0) <= 1e-12


def test_dpi_p_fidelity_unscaled_form_fails_at_p2():
    # f_2(rho, rho) = sqrt(tr rho^2) drops from 1 to 1/sqrt(2) for a pure qubit sent to I/2
    rho = np.diag([1.0, 0.0])
    rep = check_dpi_p_fidelity(rho, rho, depolarizing_channel(1.0, 2), 2.0, scaled=False)
    assert not rep.passed
    assert check_dpi_p_fidelity(rho, rho, depolarizing_channel(1.0, 2), 2.0).passed


@pytest.mark.parametrize("seed", range(3))
def test_dpi_random(seed):
    inst = build_instance("generic", seed, 3, seed, "dpi-tests")
    args = (inst.rho, inst.eta, inst.channel)
    assert check_dpi_relative_entropy(*args).passed
    for p in (1.5, 2.0, 3.0):
        assert check_dpi_sandwiched(*args, p).passed
    for p in (1.0, 2.0, 4.0):
        assert check_dpi_p_fidelity(*args, p).passed


# ------------------------------------------------------------------ recovery


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_recovery_identity_and_sufficient(p):
    rho, eta, _ = _comparable(4, 3)
    rep = check_recovery_p(rho, eta, identity_channel(3), p)
    assert abs(rep.margin) <= 1e-10 and abs(rep.lhs) <= 1e-10
    rho, eta, ch = _sufficient(1)
    rep = check_recovery_p(rho, eta, ch, p)
    assert abs(rep.lhs) <= 1e-7 and abs(rep.rhs) <= 1e-7


@pytest.mark.parametrize("seed", range(3))
def test_recovery_random_comparable_qubit(seed):
    rho, eta, ch = _comparable(seed)
    for p in (1.0, 2.0):
        assert check_recovery_p(rho, eta, ch, p).passed
        assert check_universal_recovery(rho, eta, ch, p).passed


def test_universal_recovery_sufficient_and_identity():
    rho, eta, ch = _sufficient(2)
    for p in (1.0, 2.0):
        assert abs(check_universal_recovery(rho, eta, ch, p).margin) <= 1e-7
    rho, eta, _ = _comparable(5, 3)
    assert abs(check_universal_recovery(rho, eta, identity_channel(3), 1.0).margin) <= 1e-9


def test_universal_recovery_unscaled_matches_at_p1():
    rho, eta, ch = _comparable(6)
    rep = check_universal_recovery(rho, eta, ch, 1.0)
    assert abs(rep.diagnostics["neg_log_fidelity_unscaled"] - rep.lhs) <= 1e-10


def test_measured_recovery_cases():
    rho, eta, _ = _comparable(7, 3)
    assert abs(check_measured_recovery(rho, eta, identity_channel(3)).margin) <= 1e-8
    rho, eta, ch = _sufficient(3)
    assert abs(check_measured_recovery(rho, eta, ch).margin) <= 1e-6
    for seed in range(3):
        rep = check_measured_recovery(*_comparable(seed))
        assert rep.passed and rep.diagnostics["converged"]


def test_measured_recovery_eta_target_reduces_to_measured_entropy():
    rho, eta, ch = _comparable(8)
    rep = check_measured_recovery(rho, eta, ch, target="eta_hat")
    assert abs(rep.lhs - measured_relative_entropy(rho, eta)) <= 1e-8


def test_quadratic_cases():
    rho, eta, _ = _comparable(9, 3)
    rep = check_quadratic(rho, eta, identity_channel(3))
    assert abs(rep.diagnostics["margin_1"]) <= 1e-10 and abs(rep.diagnostics["margin_2"]) <= 1e-10
    rep = check_quadratic(*_sufficient(4))
    assert abs(rep.diagnostics["margin_1"]) <= 1e-7 and abs(rep.diagnostics["margin_2"]) <= 1e-7
    for seed in range(3):
        assert check_quadratic(*_comparable(seed)).passed


def test_petz_equality_pinching():
    rep = check_petz_equality(*_sufficient(5))
    assert rep.passed and rep.diagnostics["case"] == 0
    assert rep.diagnostics["petz_error"] <= 1e-7


def test_petz_equality_unitary():
    rng = keyed_rng(11)
    rho, eta = random_state(3, rng).matrix, random_state(3, rng).matrix
    rep = check_petz_equality(rho, eta, unitary_channel(haar_unitary(3, rng)))
    assert rep.passed and rep.diagnostics["case"] == 0


def test_petz_equality_generic_position():
    rho, eta, _ = _comparable(10, 3)
    rep = check_petz_equality(rho, eta, depolarizing_channel(0.5, 3))
    assert rep.passed and rep.diagnostics["case"] == 2
    assert rep.diagnostics["gap"] > 0 and rep.diagnostics["petz_error"] > 1e-7


# ------------------------------------------------------ interpolation checks


def test_hirschman_constant():
    assert abs(check_hirschman_scalar([(2.0 - 1j, 0.0)], 0.4).margin) <= 1e-12


@pytest.mark.parametrize("a", [-2.5, 0.7, 3.0])
def test_hirschman_single_exponential(a):
    rep = check_hirschman_scalar([(1.3j, a)], 0.35)
    assert abs(rep.lhs - (np.log(1.3) + 0.35 * a)) <= 1e-12
    assert abs(rep.margin) <= 1e-8


def test_hirschman_two_terms():
    assert check_hirschman_scalar([(1.0, 0.0), (0.3, 1.0)], 0.5).passed


def test_hirschman_rejects_zero():
    with pytest.raises(ValueError):
        check_hirschman_scalar([(1.0, 0.0), (-1.0, 0.0)], 0.5)


@pytest.mark.parametrize("index", range(8))
def test_hirschman_family_generates_valid_instances(index):
    coeffs, theta = hirschman_family(keyed_rng(12, index), index)
    assert 0.1 <= theta <= 0.9
    assert check_hirschman_scalar(coeffs, theta).passed


def test_richardson_removes_polynomial_error():
    h = np.array([1e-2, 1e-3, 1e-4])
    assert abs(richardson(2.0 + 3.0 * h - 5.0 * h ** 2) - 2.0) <= 1e-12


def test_entropy_derivative_identity():
    rho, eta, _ = _comparable(13)
    rep = check_entropy_derivative(rho, eta, identity_channel(2))
    assert abs(rep.lhs) <= 1e-6 and rep.passed


def test_entropy_derivative_commuting():
    rho, eta, u = _commuting_pair(14, 2)
    eta = 0.5 * eta + 0.5 * rho
    ch = pinching_channel([u @ p @ u.conj().T for p in block_projectors([1, 1])])
    rep = check_entropy_derivative(rho, eta, depolarizing_channel(0.5, 2).compose(ch))
    assert rep.passed and abs(rep.lhs - rep.rhs) <= 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_entropy_derivative_random(seed):
    assert check_entropy_derivative(*_comparable(seed)).passed


@pytest.mark.parametrize("seed", range(3))
def test_fidid_and_fidint(seed):
    rho, eta, ch = _comparable(seed, 3)
    for z in (0.25 - 1j, 0.5, 1 + 1j):
        assert abs(check_fidid(rho, eta, ch, z).margin) <= 1e-8
    for theta in (0.25, 0.5):
        assert check_fidint(rho, eta, ch, theta).passed


# ---------------------------------------------------------------- registry


def test_registry_and_suites():
    assert len(REGISTRY) >= 13
    assert set(SUITES["all"]) == set(REGISTRY)
    assert set(CHECK_PARAMS) == set(REGISTRY)
    for name in SUITES:
        assert set(SUITES[name]) <= set(REGISTRY)


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_runners_deterministic_and_passing(name):
    a = [r.to_json() for r in REGISTRY[name](3, 2, 1, (1.0, 2.0))]
    b = [r.to_json() for r in REGISTRY[name](3, 2, 1, (1.0, 2.0))]
    assert a == b
    assert all(r["pass"] for r in a)


def test_instance_rng_keys_differ():
    a = instance_rng(0, "alt", 2, 0).standard_normal(3)
    b = instance_rng(0, "gt", 2, 0).standard_normal(3)
    assert not np.allclose(a, b)


def test_build_instance_kinds():
    for kind in ("generic", "comparable", "sufficient", "commuting", "recovery"):
        inst = build_instance(kind, 0, 3, 2)
        assert inst.rho.dim == inst.eta.dim == inst.channel.d_in
    with pytest.raises(ValueError):
        build_instance("nope", 0, 2, 0)
