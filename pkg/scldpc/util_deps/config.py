"""Default configuration values and published reference numbers for scldpc."""
from pathlib import Path

USER_CONFIG_DIR = Path.home() / ".config" / "scldpc"
PROJECT_CONFIG_NAME = ".scldpc"
CONFIG_FILENAME = "config.json"
PACKAGE_VERSION = "0.1.0"

# Mean evolution
DEFAULT_DTAU = 1e-3
DEFAULT_SUCCESS_TOLERANCE = 1e-6
DEFAULT_HIT_ZERO = 1e-9
DEFAULT_E_FLOOR = 1e-12
DEFAULT_THRESHOLD_TOLERANCE = 1e-4
DEFAULT_REFERENCE_OFFSET = 0.04

# Uncoupled fixed point
DEFAULT_ROOT_GRID = 1000
DEFAULT_ROOT_LOW = 1e-9
DEFAULT_ROOT_TOLERANCE = 1e-13

# Covariance
DEFAULT_MEMORY_GUARD = 5000
DEFAULT_PSD_TOLERANCE = 1e-6

# Temporal covariance
DEFAULT_SAMPLES = 200
DEFAULT_FIT_WINDOW = (0.05, 0.8)

# Scaling law
DEFAULT_QUAD_RTOL = 1e-8
DEFAULT_SERIES_SWITCH_C = 30.0

# Peeling
DEFAULT_RECORD_POINTS = 100

# Published values: thresholds and gamma (coupled L=100), tau_lb/L, delta1*, alpha, theta.
# Keys are (l, r).
PUBLISHED_THRESHOLD = {
    (3, 6): 0.4881, (4, 8): 0.4977, (5, 10): 0.4994, (6, 12): 0.4999,
    (4, 12): 0.3302, (5, 15): 0.3325, (4, 6): 0.6656,
}
PUBLISHED_GAMMA = {
    (3, 6): 4.31, (4, 8): 4.24, (5, 10): 4.19, (6, 12): 4.15,
    (4, 12): 4.28, (5, 15): 4.23, (4, 6): 4.2,
}
PUBLISHED_TAU_RATIO = {
    (3, 6): 0.0814, (4, 8): 0.0193, (5, 10): 0.0053, (6, 12): 0.0015,
    (4, 12): 0.020, (5, 15): 0.0067, (4, 6): 0.01272,
}
PUBLISHED_DELTA1 = {
    (3, 6): 0.67, (4, 8): 0.85, (5, 10): 0.91, (6, 12): 1.05,
    (4, 12): 0.64, (5, 15): 0.72, (4, 6): 0.91,
}
PUBLISHED_ALPHA = {
    (3, 6): 5.12, (4, 8): 4.44, (5, 10): 4.23, (6, 12): 4.04,
    (4, 12): 5.1, (5, 15): 4.72, (4, 6): 4.28,
}
PUBLISHED_THETA = {
    (3, 6): 0.59, (4, 8): 0.61, (5, 10): 0.63,
    (4, 12): 0.84, (5, 15): 0.88, (4, 6): 0.51,
}
PUBLISHED_THETA_STRETCHED = {1: 0.59, 2: 0.28, 4: 0.17}
PUBLISHED_COUPLED_THRESHOLD = {(3, 6, 50): 0.48815, (4, 8, 100): 0.4977}
PUBLISHED_M_SL = {(3, 6, 50, 1000): 700, (4, 8, 50, 2000): 1100}
