"""Integrable whole-body orientation for floating-base mechanisms.

Fits a configuration-dependent quaternion whose rate of change
approximates the local connection mapping joint velocities to the base
angular velocity that keeps centroidal angular momentum zero.  Includes
exact planar reference models, a kinematic-tree momentum pipeline, the
alternating least-squares fitter, and a CLI for fitting and evaluation.
"""

__version__ = "0.1.0"

from .basis import (
    MonomialBasis,
    basis_jacobian,
    basis_jacobian_batch,
    basis_size,
    build_basis,
    eval_basis,
    eval_basis_batch,
)
from .centroidal import (
    CentroidalMatrices,
    JointTrajectory,
    LocalConnectionSample,
    OrientationTrajectory,
    centroidal_matrices,
    centroidal_momentum_oracle,
    forward_kinematics,
    local_connection,
    local_connection_batch,
    reconstruct_base_orientation,
    sampled_joint_trajectory,
)
from .errors import (
    BadAxisError,
    BadInertiaError,
    ContractViolationError,
    CycleError,
    DegenerateGridError,
    DomainError,
    FitIterationError,
    MirrorError,
    ModelError,
    ModelSchemaError,
    ModelSyntaxError,
    NumericalError,
    QuaternionDomainError,
    ScalarFloorError,
    SingularInertiaError,
    SingularNormalMatrixError,
    ToolkitError,
    TrajectoryError,
    UnknownJointError,
    UnknownLinkError,
)
from .fit import FitReport, FitSettings, fit_wbo, linear_step, objective
from .model import (
    Configuration,
    Joint,
    MirrorTable,
    RobotModel,
    canonical_dict,
    content_hash,
    load_model,
    lock_joints,
    mirror_configuration,
    parse_model,
    sample_configurations,
)
from .planar import (
    BarFlywheelParams,
    DriftStats,
    PlanarPsiFunction,
    PlanarState,
    PlanarTrajectory,
    bar_flywheel_model,
    bar_flywheel_model_dict,
    closed_form_cycle_rotation,
    exact_psi_rel,
    fit_planar_psi,
    planar_cam,
    planar_connection,
    psi_fit_residual,
    reconstruct_bar_angle,
    reorientation_cycle,
    sinusoid_trajectory,
    wbo_drift,
)
from .spatial import Pose, SpatialInertia, UnitQuaternion, quat_compose
from .wbo import (
    WboFunction,
    approx_cam,
    eval_q,
    load_wbo,
    omega_wbo,
    save_wbo,
    t_matrix,
    t_matrix_from_quat,
    world_wbo,
)
