"""Two-tier mmWave network coverage: analytical framework, simulator, CLI.

Macro stations form a Poisson process; small cells form a Poisson hole
process carved by randomly oriented circular-sector exclusion regions around
the macros. The package evaluates distance, association and SINR-coverage
laws for that geometry under blockage, sectored beamforming and Nakagami
fading, and cross-validates them against a Monte Carlo simulator.
"""

from .coverage import Approach, CoverageOptions, SweepSpec, coverage_probabilities
from .curves import CoverageCurve, read_curves_csv, write_curves_csv
from .geometry import PointPattern, SectorHole, default_window_radius, sample_network
from .intensity import (
    association_probabilities,
    association_probability,
    equivalent_small_cell_density,
    nearest_bs_distance_pdf,
)
from .model import (
    ConfigError,
    DirectivityPmf,
    ExponentialLos,
    LinkState,
    LosBall,
    NetworkConfig,
    directivity_pmf,
    load_config,
    los_probability,
    path_loss,
    preset,
    sample_fading,
)
from .montecarlo import estimate_association, estimate_coverage, run_trials

__version__ = "0.1.0"

__all__ = [
    "Approach",
    "ConfigError",
    "CoverageCurve",
    "CoverageOptions",
    "DirectivityPmf",
    "ExponentialLos",
    "LinkState",
    "LosBall",
    "NetworkConfig",
    "PointPattern",
    "SectorHole",
    "SweepSpec",
    "association_probabilities",
    "association_probability",
    "coverage_probabilities",
    "default_window_radius",
    "directivity_pmf",
    "equivalent_small_cell_density",
    "estimate_association",
    "estimate_coverage",
    "load_config",
    "los_probability",
    "nearest_bs_distance_pdf",
    "path_loss",
    "preset",
    "read_curves_csv",
    "run_trials",
    "sample_fading",
    "sample_network",
    "write_curves_csv",
    "__version__",
]
