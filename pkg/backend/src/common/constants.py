"""
This file contains all the constants used in the project.
"""

import math
import os

from backend.src.common.enums import ParamsId

STATE_DIM = 6
CONTROL_DIM = 3
WIND_DIM = 2
OBSERVATION_DIM = STATE_DIM + WIND_DIM

STATE_NAMES: tuple[str, ...] = ("x1", "x2", "x3", "x4", "x5", "x6")

# Vehicle parameter sets, SI units (thrust limits are the tabulated kN values x 1000)
VEHICLE_PRESETS: dict[ParamsId, dict] = {
    ParamsId.PA: {
        "mass": 500.0,
        "gravity": 3.728,
        "length": 10.0,
        "drag_coeff": 0.2,
        "dt": 0.05,
        "u_max": (15000.0, 2000.0, 2000.0),
    },
    ParamsId.PB: {
        "mass": 450.0,
        "gravity": 3.65,
        "length": 11.0,
        "drag_coeff": 0.4,
        "dt": 0.05,
        "u_max": (10000.0, 5000.0, 5000.0),
    },
}

# Initial condition bounds over (x1, x2, x3, x4, x5, x6, wx, wy)
INITIAL_LOWER_BOUND: tuple[float, ...] = (
    -50.0,
    150.0,
    -math.pi / 6,
    -5.0,
    -20.0,
    -0.5,
    -4.0,
    -1.0,
)
INITIAL_UPPER_BOUND: tuple[float, ...] = (
    50.0,
    200.0,
    math.pi / 6,
    5.0,
    -2.5,
    0.5,
    4.0,
    1.0,
)

# Final bounds over (x1..x5); x4 and x5 bounds are shifted by -wx and -wy
FINAL_LOWER_BOUND: tuple[float, ...] = (-4.0, 0.0, -math.pi / 18, -3.0, -3.0)
FINAL_UPPER_BOUND: tuple[float, ...] = (4.0, 1.0, math.pi / 18, 3.0, 0.0)
FINAL_TARGET: tuple[float, ...] = (0.0, 0.5, 0.0, 0.0, 0.0)

TOUCHDOWN_ALTITUDE = 1.0
DEFAULT_MAX_STEPS = 2000

SHAPING_MAXIMA: tuple[float, ...] = (50.0, 200.0, math.pi / 6, 5.0, 20.0)

# Fixed input scaling of the policy, Q and V networks, from the initial bound magnitudes
OBSERVATION_SCALE: tuple[float, ...] = (50.0, 200.0, math.pi / 6, 5.0, 20.0, 0.5, 4.0, 1.0)

# Datum layout: states block (time-major), controls block, then wx, wy, T_f
DATUM_NODES = 100
DATUM_STATES_END = DATUM_NODES * STATE_DIM
DATUM_CONTROLS_END = DATUM_STATES_END + DATUM_NODES * CONTROL_DIM
DATUM_WX_INDEX = DATUM_CONTROLS_END
DATUM_WY_INDEX = DATUM_CONTROLS_END + 1
DATUM_DURATION_INDEX = DATUM_CONTROLS_END + 2
DATUM_LENGTH = DATUM_CONTROLS_END + 3

NORMALIZATION_STD_FLOOR = 1e-8
LAYER_NORM_EPSILON = 1e-5
LOG_STD_BOUNDS: tuple[float, float] = (-5.0, 2.0)
ACTION_INVERSE_CLIP = 1.0 - 1e-3
LOG_RATIO_CLIP = 20.0
MI_RIDGE = 1e-6

# Sample counts of the recipe datasets
SMALL_REAL_COUNT = 25
LARGE_REAL_COUNT = 1000
IDEAL_COUNT = 1000
SYNTHETIC_COUNT = 1000

FILES_DIR = os.path.join(
    os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
    "pipeline",
    "files",
)

WORKBENCH_LOGO = r"""
            |
           / \
          |   |        lander-augment
         /|___|\       sim-to-real augmentation workbench
        /_/   \_\
       ___________
"""
