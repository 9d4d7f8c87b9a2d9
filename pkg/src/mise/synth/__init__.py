"""Control synthesis for the two-level, Lambda and three-qubit systems."""
from .core import (AffineSolution, BlochTrajectory, BoundaryMismatch, IncompatibleTrajectory,
                   InfeasibleFinalTime, InfeasibleTrajectory, Protocol, SingularTrajectory,
                   SynthesisError, affine_solve, tracking_defect)
from .lam import (N_ROOM, DegenerateTrajectory, adiabatic_reference_schedule,
                  lambda_adiabatic_protocol, lambda_nocoupling_schedule,
                  lambda_synthesize_controls, transitionless_controls)
from .models import (LAMBDA_CONTROLS, THREE_QUBIT_CONTROLS, TWO_LEVEL_CONTROLS, lambda_model,
                     three_qubit_model, two_level_model)
from .schedule import ControlSchedule, ScheduleError
from .shapes import Shape, ShapeError, make_shape, mixing_angle
from .threequbit import three_qubit_protocol
from .twolevel import (coherent_protocol_I, coherent_protocol_II, scan_final_time,
                       two_level_adiabatic_protocol, two_level_reference_schedule)

__all__ = [
    "AffineSolution", "BlochTrajectory", "BoundaryMismatch", "ControlSchedule",
    "DegenerateTrajectory", "IncompatibleTrajectory", "InfeasibleFinalTime",
    "InfeasibleTrajectory", "LAMBDA_CONTROLS", "N_ROOM", "Protocol",
    "ScheduleError", "Shape", "ShapeError", "SingularTrajectory", "SynthesisError",
    "THREE_QUBIT_CONTROLS", "TWO_LEVEL_CONTROLS", "adiabatic_reference_schedule",
    "affine_solve", "coherent_protocol_I", "coherent_protocol_II", "lambda_adiabatic_protocol",
    "lambda_model", "lambda_nocoupling_schedule", "lambda_synthesize_controls", "make_shape",
    "mixing_angle", "scan_final_time", "three_qubit_model", "three_qubit_protocol",
    "tracking_defect", "transitionless_controls", "two_level_adiabatic_protocol",
    "two_level_model", "two_level_reference_schedule",
]
