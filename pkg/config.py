import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Numerical tolerances
TOLERANCE_SETTINGS = {
    "positivity": 1e-9,          # Default tol for positivity verdicts
    "atom_merge": 1e-10,         # Atoms closer than this are merged
    "zero_mass": 1e-15,          # Masses/coefficients at or below this are dropped
    "moment": 1e-12,             # Relative tol for moment cross-checks
    "path": 1e-12,               # Relative tol for gamma path independence
    "psd_floor": 1e-10,          # Eigenvalue floor relative to trace (Hankel checks)
    "boundary": 1e-6,            # Below this margin a theorem entry is inconclusive
    "degenerate_ratio": 1e-15,   # Moment ratio floor for measure-backed weights
    "unbounded_cap": 1e6,        # Seam weights above this are treated as diverging
    "oracle": 1e-10              # Relative tol for internal moment oracles
}

# Density positivity sampling
QUADRATURE_SETTINGS = {
    "chebyshev_points": 1024     # Sample points per density piece
}

# 2-variable shift windows
GRID_SETTINGS = {
    "window": (48, 48),          # Default evaluable window for generator grids
    "hyponormal_K": (40, 40),    # Index bound for hyponormality scans
    "commute_window": (10, 10)
}

# Main-theorem verification
THEOREM_SETTINGS = {
    "mmax": 3,
    "nmax": 3,
    "max_workers": 4,
    "random_seed": 42,
    "subnormal_share": 0.5      # Fraction of random draws built subnormal
}

# Region scan defaults (free parameters of the hyponormal-not-subnormal example)
SCAN_SETTINGS = {
    "omega": (0.75, 0.8333333333333334, 0.9),   # Stampfli data; larger atom of tau_1 lands at t = 1
    "a": 0.5,
    "kappa_steps": 51,
    "y0_steps": 101,
    "audit_powers": (2, 2),
    "audit_window": (40, 40),
    "max_workers": 4
}

# Output locations
OUTPUT_SETTINGS = {
    "results_dir": "results",
    "log_dir": "logs",
    "csv_float_format": "%.17g"
}


def resolve_tolerance(tol: float = None) -> float:
    """Positivity tolerance: explicit value, else SHIFTLAB_TOL, else the default"""
    if tol is not None:
        return float(tol)
    env_tol = os.getenv("SHIFTLAB_TOL")
    if env_tol:
        return float(env_tol)
    return TOLERANCE_SETTINGS["positivity"]
