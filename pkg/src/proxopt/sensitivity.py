"""Derivatives of the inner distance minimum w.r.t. the outer variables.

At a converged inner solution the implicit function theorem gives the
sensitivity dt/dx of the minimizer, from which the gradient and an approximate
(Gauss-Newton style, symmetrized) Hessian of the squared distance follow by
the chain rule. The outer variable x is whatever the caller differentiates
against (a pair of free poses, a robot state, ...); its influence enters only
through the world-frame anchor and vectors of each primitive, supplied as
PlacementJacobian objects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import DEFAULT_INNER, InnerSettings, ProximityResult
from .primitives import PlacementJacobian, WorldPrimitive


class InnerNotConverged(RuntimeError):
    """The implicit-function-theorem hypothesis (zero inner gradient) is violated."""


@dataclass(frozen=True)
class PairDerivatives:
    dt_dx: np.ndarray
    grad_x: np.ndarray
    hess_xx: np.ndarray


def _pair_geometry(pair, jacobians, t_star):
    """Common ingredients: point difference, t- and x-Jacobians, signed vector data."""
    a, b = pair
    ja, jb = jacobians
    la = a.num_params
    t_star = np.asarray(t_star, dtype=float)
    ta, tb = t_star[:la], t_star[la:]

    d = (a.anchor + ta @ a.vectors) - (b.anchor + tb @ b.vectors)
    jt = np.concatenate([a.vectors, -b.vectors], axis=0).T  # (3, L)
    jx = (ja.danchor + np.tensordot(ta, ja.dvectors, axes=1)) - (
        jb.danchor + np.tensordot(tb, jb.dvectors, axes=1)
    )  # (3, n_x)
    # Signed world-vector Jacobians, matching the columns of jt.
    if la + b.num_params:
        dv = np.concatenate([ja.dvectors, -jb.dvectors], axis=0)  # (L, 3, n_x)
    else:
        dv = np.zeros((0, 3, ja.n_x))
    return d, jt, jx, dv


def _mixed_tx(d, jt, jx, dv):
    """d^2 D / dt dx, shape (L, n_x)."""
    # Row l: 2 * (d/dx of jt column l)^T d + 2 * jt_l^T jx.
    return 2.0 * (np.tensordot(dv, d, axes=([1], [0])) + jt.T @ jx)


def sensitivity_matrix(
    pair: tuple[WorldPrimitive, WorldPrimitive],
    jacobians: tuple[PlacementJacobian, PlacementJacobian],
    result: ProximityResult,
    settings: InnerSettings = DEFAULT_INNER,
) -> np.ndarray:
    """dt/dx of the inner minimizer, shape (La+Lb, n_x).

    Requires a converged inner solve; refuses otherwise so the caller can
    tighten the inner tolerance instead of silently using a wrong linearization.
    """
    if not result.converged:
        raise InnerNotConverged("inner solve did not converge; sensitivity undefined")
    t = result.t_star
    if len(t) == 0:
        return np.zeros((0, jacobians[0].n_x))
    d, jt, jx, dv = _pair_geometry(pair, jacobians, t)
    u_tt = 2.0 * (jt.T @ jt)
    idx = np.arange(len(t))
    u_tt[idx, idx] += 2.0 * settings.w_reg + np.where((t > 1.0) | (t < 0.0), 2.0 * settings.w_con, 0.0)
    u_tx = _mixed_tx(d, jt, jx, dv)  # barriers and regularizer do not depend on x
    return -np.linalg.solve(u_tt, u_tx)


def distance_gradient(
    pair: tuple[WorldPrimitive, WorldPrimitive],
    jacobians: tuple[PlacementJacobian, PlacementJacobian],
    result: ProximityResult,
    dt_dx: np.ndarray,
) -> np.ndarray:
    """Total derivative dD/dx = dD/dx|_t + dD/dt * dt/dx, shape (n_x,)."""
    d, jt, jx, _ = _pair_geometry(pair, jacobians, result.t_star)
    grad = 2.0 * (d @ jx)
    if dt_dx.shape[0]:
        grad = grad + (2.0 * (d @ jt)) @ dt_dx
    return grad


def distance_hessian(
    pair: tuple[WorldPrimitive, WorldPrimitive],
    jacobians: tuple[PlacementJacobian, PlacementJacobian],
    result: ProximityResult,
    dt_dx: np.ndarray,
) -> np.ndarray:
    """Approximate d^2 D / dx^2, symmetrized, dropping kinematic curvature terms."""
    d, jt, jx, dv = _pair_geometry(pair, jacobians, result.t_star)
    hess = 2.0 * (jx.T @ jx)  # Gauss-Newton part of d^2 D / dx^2
    if dt_dx.shape[0]:
        d_tt = 2.0 * (jt.T @ jt)
        d_tx = _mixed_tx(d, jt, jx, dv)
        hess = hess + (dt_dx.T @ d_tt + 2.0 * d_tx.T) @ dt_dx
    return 0.5 * (hess + hess.T)


def pair_derivatives(
    pair: tuple[WorldPrimitive, WorldPrimitive],
    jacobians: tuple[PlacementJacobian, PlacementJacobian],
    result: ProximityResult,
    settings: InnerSettings = DEFAULT_INNER,
) -> PairDerivatives:
    """Bundle sensitivity, gradient and Hessian for one solved pair."""
    dt_dx = sensitivity_matrix(pair, jacobians, result, settings)
    return PairDerivatives(
        dt_dx=dt_dx,
        grad_x=distance_gradient(pair, jacobians, result, dt_dx),
        hess_xx=distance_hessian(pair, jacobians, result, dt_dx),
    )
