import numpy as np
import pytest

from proxopt.distance import DEFAULT_INNER, InnerSettings, ProximityResult, solve_inner
from proxopt.pairs import (
    FreePair,
    KIND_PAIRS,
    near_parallel_capsules,
    pair_jacobians,
    place_pair,
    random_pair,
    solve_pair,
)
from proxopt.primitives import Kind, Primitive
from proxopt.sensitivity import (
    InnerNotConverged,
    distance_gradient,
    distance_hessian,
    pair_derivatives,
    sensitivity_matrix,
)

TIGHT = InnerSettings(grad_tol=1e-12, max_iters=80)


def _sphere_pair():
    a = Primitive(Kind.SPHERE, np.zeros(3), margin=0.1)
    b = Primitive(Kind.SPHERE, np.zeros(3), margin=0.1)
    pair = FreePair(a, b)
    x = np.zeros(12)
    x[6] = 3.0  # B at (3, 0, 0)
    return pair, x


def test_sphere_pair_sensitivity_is_empty():
    pair, x = _sphere_pair()
    res = solve_pair(pair, x)
    dt_dx = sensitivity_matrix(place_pair(pair, x), pair_jacobians(pair, x), res)
    assert dt_dx.shape == (0, 12)


def test_requires_convergence():
    pair, x = _sphere_pair()
    res = solve_pair(pair, x)
    bad = ProximityResult(res.d_sq, res.t_star, res.closest_a, res.closest_b, 50, False)
    with pytest.raises(InnerNotConverged):
        sensitivity_matrix(place_pair(pair, x), pair_jacobians(pair, x), bad)


def test_sensitivity_matches_fd_of_argmin():
    rng = np.random.default_rng(20)
    eps = 1e-6
    worst = 0.0
    for kinds in KIND_PAIRS:
        if kinds == (Kind.SPHERE, Kind.SPHERE):
            continue
        for _ in range(5):
            pair, x = random_pair(kinds, rng)
            res = solve_pair(pair, x, TIGHT)
            assert res.converged
            dt_dx = sensitivity_matrix(place_pair(pair, x), pair_jacobians(pair, x), res, TIGHT)
            fd = np.empty_like(dt_dx)
            for k in range(12):
                xp, xm = x.copy(), x.copy()
                xp[k] += eps
                xm[k] -= eps
                rp = solve_pair(pair, xp, TIGHT, warm_start=res.t_star)
                rm = solve_pair(pair, xm, TIGHT, warm_start=res.t_star)
                fd[:, k] = (rp.t_star - rm.t_star) / (2 * eps)
            worst = max(worst, np.linalg.norm(dt_dx - fd) / max(1.0, np.linalg.norm(fd)))
    assert worst < 1e-4


def test_sensitivity_bounded_for_near_parallel_capsules():
    rng = np.random.default_rng(21)
    for _ in range(50):
        a, b = near_parallel_capsules(rng)
        res = solve_inner((a, b), DEFAULT_INNER)
        assert res.converged
        # treat the placed capsules as local primitives on free identity poses
        pair = FreePair(
            Primitive(Kind.CAPSULE, a.anchor, a.vectors, a.margin),
            Primitive(Kind.CAPSULE, b.anchor, b.vectors, b.margin),
        )
        x = np.zeros(12)
        dt_dx = sensitivity_matrix((a, b), pair_jacobians(pair, x), res)
        assert np.all(np.isfinite(dt_dx))
        assert np.abs(dt_dx).max() <= 10.0 / DEFAULT_INNER.w_reg


def test_distance_gradient_sphere_pair():
    pair, x = _sphere_pair()
    res = solve_pair(pair, x)
    dt_dx = sensitivity_matrix(place_pair(pair, x), pair_jacobians(pair, x), res)
    grad = distance_gradient(place_pair(pair, x), pair_jacobians(pair, x), res, dt_dx)
    assert np.allclose(grad[0:3], [-6.0, 0.0, 0.0])
    assert np.allclose(grad[6:9], [6.0, 0.0, 0.0])


def test_distance_gradient_matches_fd():
    rng = np.random.default_rng(22)
    eps = 1e-6
    worst = 0.0
    for kinds in KIND_PAIRS:
        for _ in range(5):
            pair, x = random_pair(kinds, rng)
            res = solve_pair(pair, x, TIGHT)
            assert res.converged
            ders = pair_derivatives(place_pair(pair, x), pair_jacobians(pair, x), res, TIGHT)
            fd = np.empty(12)
            for k in range(12):
                xp, xm = x.copy(), x.copy()
                xp[k] += eps
                xm[k] -= eps
                rp = solve_pair(pair, xp, TIGHT, warm_start=res.t_star)
                rm = solve_pair(pair, xm, TIGHT, warm_start=res.t_star)
                fd[k] = (rp.d_sq - rm.d_sq) / (2 * eps)
            worst = max(worst, np.linalg.norm(ders.grad_x - fd) / max(1.0, np.linalg.norm(fd)))
    assert worst < 1e-4


def test_gradient_translation_blocks_are_opposite():
    rng = np.random.default_rng(23)
    for kinds in KIND_PAIRS:
        pair, x = random_pair(kinds, rng)
        res = solve_pair(pair, x, TIGHT)
        ders = pair_derivatives(place_pair(pair, x), pair_jacobians(pair, x), res, TIGHT)
        assert np.allclose(ders.grad_x[0:3], -ders.grad_x[6:9], atol=1e-8)


def test_hessian_sphere_pair_exact():
    pair, x = _sphere_pair()
    res = solve_pair(pair, x)
    jacs = pair_jacobians(pair, x)
    world = place_pair(pair, x)
    dt_dx = sensitivity_matrix(world, jacs, res)
    hess = distance_hessian(world, jacs, res, dt_dx)
    assert np.allclose(hess[0:3, 0:3], 2.0 * np.eye(3))
    assert np.allclose(hess[0:3, 6:9], -2.0 * np.eye(3))

    # exact for spheres: matches FD of the gradient
    eps = 1e-6
    fd = np.empty((12, 12))
    for k in range(12):
        xp, xm = x.copy(), x.copy()
        xp[k] += eps
        xm[k] -= eps
        for xx, sign in ((xp, 1), (xm, -1)):
            r = solve_pair(pair, xx)
            g = distance_gradient(
                place_pair(pair, xx),
                pair_jacobians(pair, xx),
                r,
                sensitivity_matrix(place_pair(pair, xx), pair_jacobians(pair, xx), r),
            )
            if sign == 1:
                gp = g
            else:
                gm = g
        fd[:, k] = (gp - gm) / (2 * eps)
    assert np.allclose(hess, fd, atol=1e-6)


def test_hessian_translation_block_positive_semidefinite():
    # The distance between convex sets is convex in the two translations, so
    # the translation-translation block of the approximate Hessian must be
    # (numerically) positive semidefinite. The full matrix including rotation
    # coordinates is legitimately indefinite.
    rng = np.random.default_rng(24)
    idx = np.r_[0:3, 6:9]
    for _ in range(50):
        pair, x = random_pair((Kind.CAPSULE, Kind.CAPSULE), rng)
        res = solve_pair(pair, x, TIGHT)
        world = place_pair(pair, x)
        jacs = pair_jacobians(pair, x)
        hess = distance_hessian(world, jacs, res, sensitivity_matrix(world, jacs, res, TIGHT))
        eig = np.linalg.eigvalsh(hess[np.ix_(idx, idx)])
        assert eig[0] >= -1e-9 * max(eig[-1], 1e-12)


def test_near_parallel_derivatives_all_finite():
    rng = np.random.default_rng(25)
    for _ in range(50):
        a, b = near_parallel_capsules(rng)
        res = solve_inner((a, b))
        pair = FreePair(
            Primitive(Kind.CAPSULE, a.anchor, a.vectors, a.margin),
            Primitive(Kind.CAPSULE, b.anchor, b.vectors, b.margin),
        )
        ders = pair_derivatives((a, b), pair_jacobians(pair, np.zeros(12)), res)
        assert np.all(np.isfinite(ders.dt_dx))
        assert np.all(np.isfinite(ders.grad_x))
        assert np.all(np.isfinite(ders.hess_xx))
