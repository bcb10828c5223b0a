"""
Configuration for the Z_N curve KZ engine
"""

import os

try:
    from dotenv import load_dotenv
except ImportError:  # .env support is optional
    load_dotenv = None

# Load environment variables from .env file
if load_dotenv is not None:
    load_dotenv()

# Precision configuration
DEFAULT_PRECISION_BITS = int(os.environ.get('ZNKZ_PRECISION_BITS', '128'))
MIN_PRECISION_BITS = 53

# Curve geometry
COLLISION_TOLERANCE = float(os.environ.get('ZNKZ_COLLISION_TOLERANCE', '1e-12'))  # relative to diameter
PATH_CLEARANCE = float(os.environ.get('ZNKZ_PATH_CLEARANCE', '1e-3'))  # relative to min pairwise distance
BRANCH_SAMPLES = int(os.environ.get('ZNKZ_BRANCH_SAMPLES', '64'))  # points on the t-circle

# Quadrature configuration
QUADRATURE_ORDER = int(os.environ.get('ZNKZ_QUADRATURE_ORDER', '32'))
MAX_PANEL_DEPTH = int(os.environ.get('ZNKZ_MAX_PANEL_DEPTH', '40'))
ARC_CHORDS = 48  # polygonization of arcs for crossing counts

# KZ and theta configuration
KZ_STEP_FRACTION = float(os.environ.get('ZNKZ_KZ_STEP_FRACTION', '1e-4'))
MAX_PARTITIONS = int(os.environ.get('ZNKZ_MAX_PARTITIONS', '1000000'))
MAX_CHARACTERISTIC_CANDIDATES = int(os.environ.get('ZNKZ_MAX_CHARACTERISTIC_CANDIDATES', '4096'))
THETA_RADIUS_STEPS = 6  # ellipsoid enlargements before the tail bound is declared unmet

# Exact identity testing
IDENTITY_TRIALS = int(os.environ.get('ZNKZ_IDENTITY_TRIALS', '100'))
IDENTITY_SEED = int(os.environ.get('ZNKZ_IDENTITY_SEED', '20240611'))
SAMPLE_BOUND = 2 ** 16

# Concurrency
MAX_WORKERS = int(os.environ.get('ZNKZ_MAX_WORKERS', '4'))

# Cache and output directories
CACHE_DIR = os.environ.get('ZNKZ_CACHE_DIR', '_znkz_cache')
USE_DISK_CACHE = os.environ.get('ZNKZ_USE_DISK_CACHE', '0') == '1'
MEMORY_CACHE_LIMIT = int(os.environ.get('ZNKZ_MEMORY_CACHE_LIMIT', '4096'))  # moment vectors kept in process
FIXTURES_DIR = os.environ.get('ZNKZ_FIXTURES_DIR', 'data/fixtures')

# Logging configuration
LOG_PROGRESS = os.environ.get('ZNKZ_LOG_PROGRESS', '1') == '1'
LOG_QUADRATURE = False
LOG_CHARACTERISTICS = True
LOG_TIMINGS = True

# Default pass thresholds per check command (relative residuals at 128 bits)
CHECK_TOLERANCES = {
    'check-kz': 1e-6,
    'check-singlet': 1e-20,
    'check-szego': 1e-20,
    'check-exact': 1e-20,
    'theta-solve': 1e-12,
    'a-period': 1e-15,
    'check-thomae': 1e-12,
    'check-smirnov': 1e-12,
}


def tolerance(bits, margin=16):
    """Relative tolerance 2^-(bits - margin) used by the numerical checks"""
    return 2.0 ** (-(bits - margin))
