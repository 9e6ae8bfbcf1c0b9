"""Planar point-process sampling and sector-hole carving.

The small-cell layer is a baseline Poisson process with every point removed
that falls inside any circular-sector exclusion region centered on a macro
site; sector orientations are independent and uniform. Macro sites are
sampled on a disk extended by the hole radius so holes owned by off-window
macros still carve inside the analysis window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .model import LinkState, NetworkConfig, TWO_PI

# Above this many candidate pairs, hole carving goes through a KD-tree
# instead of a dense distance matrix.
_BRUTE_FORCE_LIMIT = 400_000


@dataclass(frozen=True)
class SectorHole:
    """Circular-sector exclusion region: |p - center| <= radius and the polar
    angle of p - center lies in [orientation, orientation + central_angle),
    taken mod 2pi."""

    center: tuple
    radius: float
    central_angle: float
    orientation: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("hole radius must be non-negative")
        if not 0.0 <= self.central_angle <= TWO_PI + 1e-12:
            raise ValueError("central angle must lie in [0, 2pi]")


@dataclass
class PointPattern:
    """Base stations with tier and blockage labels; xy in metres."""

    xy: np.ndarray  # (n, 2)
    tier: np.ndarray  # (n,) in {1, 2}
    is_los: np.ndarray  # (n,) bool

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        self.tier = np.asarray(self.tier, dtype=np.int8).reshape(-1)
        self.is_los = np.asarray(self.is_los, dtype=bool).reshape(-1)
        if not (len(self.xy) == len(self.tier) == len(self.is_los)):
            raise ValueError("pattern arrays must have equal length")
        if len(self.tier) and not np.all((self.tier == 1) | (self.tier == 2)):
            raise ValueError("tier labels must be 1 or 2")

    def __len__(self):
        return len(self.xy)

    def distances(self) -> np.ndarray:
        return np.hypot(self.xy[:, 0], self.xy[:, 1])

    def state(self) -> np.ndarray:
        return np.where(self.is_los, int(LinkState.LOS), int(LinkState.NLOS)).astype(np.int8)


def sample_ppp(density: float, window_radius: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous Poisson points on a disk around the origin; returns (n, 2)."""
    if density < 0:
        raise ValueError("density must be non-negative")
    if window_radius <= 0:
        raise ValueError("window radius must be positive")
    n = rng.poisson(density * math.pi * window_radius**2)
    r = window_radius * np.sqrt(rng.random(n))
    phi = TWO_PI * rng.random(n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def point_in_sector(point, hole: SectorHole) -> bool:
    """Membership test with a half-open angular interval (boundary ray included
    at `orientation`, excluded at `orientation + central_angle`)."""
    dx = point[0] - hole.center[0]
    dy = point[1] - hole.center[1]
    if math.hypot(dx, dy) > hole.radius:
        return False
    rel = (math.atan2(dy, dx) - hole.orientation) % TWO_PI
    return rel < hole.central_angle


def _in_any_hole(xy, centers, radius, central_angle, orientations) -> np.ndarray:
    """Vectorised membership of each point in the union of sector holes."""
    mask = np.zeros(len(xy), dtype=bool)
    if len(xy) == 0 or len(centers) == 0 or radius == 0.0 or central_angle == 0.0:
        return mask
    if len(xy) * len(centers) <= _BRUTE_FORCE_LIMIT:
        dx = xy[:, 0][:, None] - centers[:, 0][None, :]
        dy = xy[:, 1][:, None] - centers[:, 1][None, :]
        pidx, hidx = np.nonzero(dx * dx + dy * dy <= radius * radius)
        dx, dy = dx[pidx, hidx], dy[pidx, hidx]
    else:
        tree = cKDTree(xy)
        groups = tree.query_ball_point(centers, r=radius)
        hidx = np.repeat(np.arange(len(centers)), [len(g) for g in groups])
        pidx = np.fromiter(
            (p for g in groups for p in g), dtype=np.intp, count=len(hidx)
        )
        dx = xy[pidx, 0] - centers[hidx, 0]
        dy = xy[pidx, 1] - centers[hidx, 1]
    rel = (np.arctan2(dy, dx) - orientations[hidx]) % TWO_PI
    mask[pidx[rel < central_angle]] = True
    return mask


def carve_php(
    baseline_xy: np.ndarray,
    hole_centers: np.ndarray,
    hole_radius: float,
    central_angle: float,
    rng: np.random.Generator,
):
    """Remove baseline points covered by any sector hole.

    Each hole center receives an independent uniform orientation; retention is
    deterministic given those orientations. Returns (retained_xy, holes).
    """
    if hole_radius < 0:
        raise ValueError("hole radius must be non-negative")
    baseline_xy = np.asarray(baseline_xy, dtype=float).reshape(-1, 2)
    hole_centers = np.asarray(hole_centers, dtype=float).reshape(-1, 2)
    orientations = TWO_PI * rng.random(len(hole_centers))
    mask = _in_any_hole(baseline_xy, hole_centers, hole_radius, central_angle, orientations)
    holes = [
        SectorHole((float(c[0]), float(c[1])), hole_radius, central_angle, float(o))
        for c, o in zip(hole_centers, orientations)
    ]
    return baseline_xy[~mask], holes


def default_window_radius(cfg: NetworkConfig, cap: float | None = None) -> float:
    """Analysis window large enough that tail interference is negligible.

    Takes the maximum of a macro-spacing term, the blockage support radius
    (exp(-20) residual), and a 2 km floor; an explicit cap wins if given.
    """
    terms = [2000.0]
    if cfg.lambda_macro > 0:
        terms.append(10.0 * math.sqrt(1.0 / (math.pi * cfg.lambda_macro)))
    support = cfg.los.support_radius(math.exp(-20.0))
    if math.isfinite(support):
        terms.append(support)
    radius = max(terms)
    if cap is not None:
        radius = min(radius, cap)
    return radius


def sample_network(
    cfg: NetworkConfig,
    window_radius: float,
    rng: np.random.Generator,
    return_details: bool = False,
):
    """Draw one network realization around the typical user at the origin.

    Macro sites are sampled on a disk of radius ``window_radius + D`` so that
    off-window holes still carve; only stations within ``window_radius`` are
    returned. Every returned station is independently labeled LOS with
    probability P_los(distance to origin).
    """
    if window_radius <= 0:
        raise ValueError("window radius must be positive")
    macro_ext = sample_ppp(cfg.lambda_macro, window_radius + cfg.hole_radius, rng)
    small_base = sample_ppp(cfg.lambda_small, window_radius, rng)
    small_xy, holes = carve_php(
        small_base, macro_ext, cfg.hole_radius, cfg.hole_angle, rng
    )
    macro_r = np.hypot(macro_ext[:, 0], macro_ext[:, 1])
    macro_xy = macro_ext[macro_r <= window_radius]

    xy = np.vstack([macro_xy, small_xy])
    tier = np.concatenate(
        [np.ones(len(macro_xy), dtype=np.int8), np.full(len(small_xy), 2, dtype=np.int8)]
    )
    dist = np.hypot(xy[:, 0], xy[:, 1])
    is_los = rng.random(len(xy)) < cfg.los.prob(dist)
    pattern = PointPattern(xy, tier, is_los)
    if not return_details:
        return pattern
    removed = small_base[
        _in_any_hole(
            small_base,
            np.asarray([h.center for h in holes], dtype=float).reshape(-1, 2),
            cfg.hole_radius,
            cfg.hole_angle,
            np.asarray([h.orientation for h in holes]),
        )
    ]
    return pattern, {"holes": holes, "removed_small": removed}


def dump_realization(cfg: NetworkConfig, window_radius: float, rng, path) -> int:
    """Write one realization as columnar text: x_m, y_m, tier, state, in_hole.

    Removed baseline small cells appear with in_hole = 1 so the spatial
    structure of the exclusion regions is visible. Returns the record count.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    pattern, details = sample_network(cfg, window_radius, rng, return_details=True)
    lines = ["x_m,y_m,tier,state,in_hole"]
    for (x, y), t, los in zip(pattern.xy, pattern.tier, pattern.is_los):
        state = "los" if los else "nlos"
        lines.append(f"{float(x)!r},{float(y)!r},{int(t)},{state},0")
    for x, y in details["removed_small"]:
        lines.append(f"{float(x)!r},{float(y)!r},2,unknown,1")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return len(lines) - 1
