"""Differentiable convex-primitive distances and collision-free trajectory optimization."""

from .distance import (
    InnerSettings,
    ProximityResult,
    brute_force_distance,
    eval_D,
    eval_R,
    eval_U,
    solve_inner,
)
from .kinematics import Joint, LimitSpec, RobotModel, RobotState, forward_kinematics, fk_jacobian
from .poses import Pose
from .primitives import (
    Kind,
    PlacementJacobian,
    Primitive,
    WorldPrimitive,
    bounding_center_radius,
    place,
    point_jacobian_t,
    point_jacobian_x,
    point_on,
)
from .sensitivity import (
    InnerNotConverged,
    PairDerivatives,
    distance_gradient,
    distance_hessian,
    pair_derivatives,
    sensitivity_matrix,
)
from .scene_io import SceneError, export_trajectory, load_scene, save_scene
from .trajopt import (
    EETarget,
    Objectives,
    Obstacle,
    OuterSettings,
    Scene,
    SolveError,
    SolveReport,
    StateTarget,
    Trajectory,
    broad_phase,
    collision_penalty,
    default_trajectory,
    goal_terms,
    limit_penalty,
    smoothness_term,
    solve,
    validate,
)

__version__ = "0.1.0"
