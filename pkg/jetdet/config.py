"""
Runtime configuration for jetdet, read from the environment.
"""

import os
from pathlib import Path

# Base directory
BASE_DIR = Path(__file__).resolve().parent

# Ring settings
DEFAULT_TRUNC = int(os.environ.get("JETDET_TRUNC", 10))

# Scale settings: the interval ]0, S[ and the number of sample radii in it
SCALE_S = float(os.environ.get("JETDET_SCALE_S", 0.45))
GRID_POINTS = int(os.environ.get("JETDET_GRID_POINTS", 10))

# Radius of the weighted least-squares inverse, kept rational ("1/4")
RADIUS = os.environ.get("JETDET_RADIUS", "1/4")

# Reproducibility
SEED = int(os.environ.get("JETDET_SEED", 0))

# Logging settings
LOG_LEVEL = os.environ.get("JETDET_LOG_LEVEL", "INFO")

# Output settings
OUTPUT_DIR = os.environ.get("JETDET_OUTPUT_DIR", os.path.join(BASE_DIR.parent, "reports"))

# Circle ring: working band multiplier over the band of the perturbation
CIRCLE_BAND_FACTOR = int(os.environ.get("JETDET_CIRCLE_BAND_FACTOR", 0)) or None


def ensure_output_dir(path: str = OUTPUT_DIR) -> str:
    os.makedirs(path, exist_ok=True)
    return path
