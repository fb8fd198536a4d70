"""Interpolation densities beta_theta on the real line and quadrature against them.

    beta_theta(t) = sin(pi theta) / (2 theta (cosh(pi t) + cos(pi theta)))
    beta_0(t)     = (pi / 2) / (cosh(pi t) + 1)

Both are probability densities. Integrals are computed with composite
Gauss-Legendre panels on [-T, T]; the rule is refined by halving the panel
width until two successive levels agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DEFAULT_TRUNCATION = 12.0
DEFAULT_NODES_PER_PANEL = 32
DEFAULT_TOL = 1e-9
DEFAULT_MAX_DEPTH = 5


class QuadratureError(RuntimeError):
    """Refinement did not converge; carries the last two estimates."""

    def __init__(self, message, estimates):
        super().__init__(message)
        self.estimates = estimates


def _check_theta(theta) -> float:
    theta = float(theta)
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0, 1), got {theta}")
    return theta


def beta_density(theta, t):
    """Density beta_theta(t); ``theta = 0`` gives beta_0. Vectorised over ``t``.

    Evaluated as ``sin(pi theta) / (4 theta (sinh(pi t/2)**2 + cos(pi theta/2)**2))``,
    which is algebraically identical and avoids cancellation for theta near 1.
    """
    theta = _check_theta(theta)
    t = np.asarray(t, dtype=float)
    sh = np.sinh(0.5 * np.pi * t) ** 2
    if theta == 0.0:
        out = (np.pi / 4.0) / (sh + 1.0)
    else:
        out = np.sin(np.pi * theta) / (4.0 * theta * (sh + np.cos(0.5 * np.pi * theta) ** 2))
    return out if out.ndim else float(out)


@lru_cache(maxsize=64)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule on [-T, T] with panels of width ``panel_width``."""

    truncation: float = DEFAULT_TRUNCATION
    nodes_per_panel: int = DEFAULT_NODES_PER_PANEL
    panel_width: float = 1.0
    target_tol: float = DEFAULT_TOL
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.truncation <= 0 or self.panel_width <= 0 or self.nodes_per_panel < 1:
            raise ValueError("invalid quadrature rule parameters")
        npan = int(round(2 * self.truncation / self.panel_width))
        edges = -self.truncation + self.panel_width * np.arange(npan)
        x, w = _gauss_legendre(self.nodes_per_panel)
        half = 0.5 * self.panel_width
        nodes = (edges[:, None] + half * (x[None, :] + 1.0)).ravel()
        weights = np.tile(half * w, npan)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def refined(self) -> "QuadratureRule":
        return _cached_rule(self.truncation, self.nodes_per_panel, 0.5 * self.panel_width, self.target_tol)

    def coarsened(self) -> "QuadratureRule":
        return _cached_rule(self.truncation, self.nodes_per_panel, 2.0 * self.panel_width, self.target_tol)

    def weighted(self, theta) -> np.ndarray:
        """Node weights multiplied by beta_theta(node)."""
        return _cached_weights(self, float(theta))

    def to_json(self) -> dict:
        return {
            "truncation": self.truncation,
            "nodes_per_panel": self.nodes_per_panel,
            "panel_width": self.panel_width,
            "target_tol": self.target_tol,
        }


@lru_cache(maxsize=32)
def _cached_rule(truncation, nodes_per_panel, panel_width, target_tol) -> QuadratureRule:
    return QuadratureRule(truncation, nodes_per_panel, panel_width, target_tol)


@lru_cache(maxsize=256)
def _cached_weights(rule: QuadratureRule, theta: float) -> np.ndarray:
    out = rule.weights * beta_density(theta, rule.nodes)
    out.setflags(write=False)
    return out


DEFAULT_RULE = QuadratureRule()


def apply_rule(f, theta, rule: QuadratureRule):
    """Single-level estimate ``sum_i w_i beta_theta(t_i) f(t_i)``.

    ``f`` maps the node array of shape ``(k,)`` to values with leading axis ``k``
    (scalars or stacked matrices).
    """
    vals = np.asarray(f(rule.nodes))
    return np.tensordot(rule.weighted(theta), vals, axes=(0, 0))


def integrate_weighted(f, theta, rule: QuadratureRule | None = None, max_depth: int = DEFAULT_MAX_DEPTH,
                       tol: float | None = None):
    """Integrate ``f`` against beta_theta over the real line.

    ``f`` is vectorised over nodes (see :func:`apply_rule`). The estimate from
    ``rule`` is compared against the next coarser level (panels twice as wide);
    while the two differ by ``tol`` or more in max-abs value the rule is
    refined, and the finer estimate of the first agreeing pair is returned.
    ``theta = 1`` is the point mass at ``t = 0`` (the weak limit of
    beta_theta) and returns ``f(0)``.

    Raises QuadratureError after ``max_depth`` refinements without agreement.
    """
    if float(theta) == 1.0:
        return np.asarray(f(np.zeros(1)))[0]
    rule = DEFAULT_RULE if rule is None else rule
    tol = rule.target_tol if tol is None else tol
    prev = apply_rule(f, theta, rule.coarsened())
    cur = apply_rule(f, theta, rule)
    if np.max(np.abs(cur - prev)) < tol:
        return cur
    prev = cur
    for _ in range(max_depth):
        rule = rule.refined()
        cur = apply_rule(f, theta, rule)
        if np.max(np.abs(cur - prev)) < tol:
            return cur
        prev = cur
    raise QuadratureError(
        f"quadrature did not reach tolerance {tol:g} after {max_depth} refinements",
        (_plain(prev), _plain(cur)),
    )


def _plain(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def integrate_fixed(f, theta, rule: QuadratureRule | None = None):
    """One-level estimate without refinement, for inner loops with a known-smooth integrand."""
    if float(theta) == 1.0:
        return np.asarray(f(np.zeros(1)))[0]
    return apply_rule(f, theta, DEFAULT_RULE if rule is None else rule)
