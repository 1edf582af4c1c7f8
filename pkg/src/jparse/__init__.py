"""Singularity-resilient inverse-kinematics velocity control toolkit."""

from .geometry import PoseSE3, RigidTransform, rotation_about, rotation_log
from .kinematics import (
    DimensionError,
    Joint,
    ManipulatorModel,
    TaskError,
    Twist,
    forward_kinematics,
    geometric_jacobian,
    load_model,
    model_from_dh,
    pose_error,
    save_model,
)
from .models import builtin_model, builtin_model_names
from .resolvers import (
    ADLS,
    DLS,
    EDLS,
    DegenerateJacobianError,
    JParse,
    NullspaceObjective,
    Pinv,
    ResolverConfig,
    SvdFactors,
    adls_lambda,
    config_from_dict,
    config_to_dict,
    dls_velocities,
    edls_velocities,
    gamma_lower_bound,
    jparse_gain_matrix,
    jparse_inverse,
    phi_matrix,
    pinv_velocities,
    projection_basis,
    resolve,
    safety_sigma,
    singularity_metrics,
    svd,
)
from .controller import (
    ControllerGains,
    StabilityReport,
    command_twist,
    lyapunov_value,
    stability_report,
    step,
)
from .simulator import (
    FixedGoal,
    KeypointList,
    Scenario,
    SinusoidTrack,
    TrajectoryLog,
    builtin_scenario,
    builtin_scenarios,
    run_scenario,
    summarize,
)

__version__ = "0.1.0"
