"""Two-level mobile robot control: kinematic tracking outer loop, PID + neural feedforward inner loop."""

from .kinematics import (
    Pose,
    PostureError,
    ReferenceProfile,
    Segment,
    VelocityPair,
    integrate_pose,
    pose_error,
    reference_state,
    unicycle_derivative,
    wrap_angle,
)
from .tracking import (
    TrackingGains,
    error_dynamics,
    lyapunov_rate,
    lyapunov_sign_scan,
    lyapunov_value,
    tracking_control,
)

__version__ = "0.1.0"
