"""Partition-based loop estimation and confidence regions.

A loop found by the filtration is matched to a labeled (loop, interior)
partition pair by locating the pixels whose intensities equal the loop's
birth and death values: the match requires a birth pixel inside the loop
region and a death pixel inside its interior.  Matched loops are then
re-estimated by the partition sample means, whose joint distribution is
asymptotically bivariate normal with independent coordinates, giving
chi-square confidence ellipses on the diagram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sp_stats

from .grid_image import GrayImage, PartitionLabeling, Role
from .persistence import PersistenceDiagram

__all__ = [
    "PartitionStats",
    "ConfidenceRegion",
    "MatchResult",
    "DegenerateRegionError",
    "InsufficientPixelsError",
    "match_loops",
    "localize_value",
    "partition_stats",
    "confidence_region",
    "region_contains",
    "persistence_interval",
]


class DegenerateRegionError(ValueError):
    """Confidence region undefined because an estimated variance is zero."""


class InsufficientPixelsError(ValueError):
    """A partition has too few pixels for the requested statistic."""


@dataclass(frozen=True)
class PartitionStats:
    role: Role
    n: int
    mean: float
    sample_variance: float  # unbiased, divisor n - 1


@dataclass(frozen=True)
class ConfidenceRegion:
    """Chi-square ellipse for a loop's (death, birth) on the diagram."""

    center: tuple[float, float]  # (death mean, birth mean)
    variance: tuple[float, float]  # (var of death mean, var of birth mean)
    alpha: float
    chi2_quantile: float
    n: tuple[int, int] = (0, 0)  # (n_death, n_birth), informational

    def boundary(self, theta):
        """Point(s) of the ellipse boundary at angle(s) theta."""
        theta = np.asarray(theta, dtype=np.float64)
        scale = math.sqrt(self.chi2_quantile)
        d = self.center[0] + scale * math.sqrt(self.variance[0]) * np.cos(theta)
        b = self.center[1] + scale * math.sqrt(self.variance[1]) * np.sin(theta)
        return np.stack([d, b], axis=-1)

    def contains(self, point) -> bool:
        d, b = float(point[0]), float(point[1])
        maha = (d - self.center[0]) ** 2 / self.variance[0] + (
            b - self.center[1]
        ) ** 2 / self.variance[1]
        return maha <= self.chi2_quantile * (1.0 + 1e-9)

    @property
    def area(self) -> float:
        return math.pi * self.chi2_quantile * math.sqrt(self.variance[0] * self.variance[1])

    def to_dict(self) -> dict:
        return {
            "center": [self.center[0], self.center[1]],
            "variance": [self.variance[0], self.variance[1]],
            "alpha": self.alpha,
            "chi2_quantile": self.chi2_quantile,
            "n": [self.n[0], self.n[1]],
        }


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int], ...]  # (diagram point index, loop index i)
    unmatched_diagram_points: tuple[int, ...]

    def loop_of_point(self, point_index: int) -> int | None:
        for pi, loop in self.pairs:
            if pi == point_index:
                return loop
        return None

    def point_of_loop(self, loop: int) -> int | None:
        for pi, li in self.pairs:
            if li == loop:
                return pi
        return None


def localize_value(image: GrayImage, value: float, smoothed: GrayImage | None = None,
                   smoothed_value: float | None = None):
    """Pixel(s) whose intensity equals ``value`` exactly.

    Returns a single (x, y) when the value is unique, or when a smoothed
    image plus the corresponding smoothed value are supplied (the tied pixel
    whose smoothed intensity is nearest ``smoothed_value`` wins).  Otherwise
    returns the tuple of all tied pixels, in row-major order, for the caller
    to disambiguate.
    """
    ys, xs = np.nonzero(image.intensity == value)
    if ys.size == 0:
        raise LookupError(f"value {value!r} does not occur in the image")
    if ys.size == 1:
        return int(xs[0]), int(ys[0])
    if smoothed is not None and smoothed_value is not None:
        gaps = np.abs(smoothed.intensity[ys, xs] - smoothed_value)
        k = int(np.argmin(gaps))
        return int(xs[k]), int(ys[k])
    return tuple((int(x), int(y)) for x, y in zip(xs, ys))


def _candidate_pixels(image, value, smoothed=None, smoothed_value=None):
    loc = localize_value(image, value, smoothed, smoothed_value)
    if isinstance(loc[0], int):
        return (loc,)
    return loc


def match_loops(
    diagram: PersistenceDiagram,
    labeling: PartitionLabeling,
    image: GrayImage,
    smoothed: GrayImage | None = None,
    smoothed_diagram: PersistenceDiagram | None = None,
) -> MatchResult:
    """Match finite dim-1 diagram points to labeled loops.

    Points are scanned in decreasing persistence order.  A point matches
    loop i when some pixel carrying its birth value lies in the Loop(i)
    region and some pixel carrying its death value lies in Interior(i); each
    loop accepts at most one point, every other point stays unmatched.  When
    a smoothed image and its diagram are supplied, value ties are broken by
    proximity of the smoothed intensity to the smoothed diagram's most
    persistent loop (used for high-resolution images where several pixels
    share the birth value).
    """
    h1 = [(idx, p) for idx, p in enumerate(diagram.points) if p.dim == 1 and not p.essential]
    h1.sort(key=lambda ip: (-ip[1].persistence, ip[1].death, ip[1].birth, ip[0]))

    smoothed_birth = smoothed_death = None
    if smoothed is not None and smoothed_diagram is not None:
        sp = smoothed_diagram.most_persistent(1)
        if sp is not None:
            smoothed_birth, smoothed_death = sp.birth, sp.death

    loop_indices = labeling.loop_indices()
    label_role = labeling.roles
    open_loops = set(loop_indices)
    pairs: list[tuple[int, int]] = []
    unmatched: list[int] = []

    lab = labeling.label
    for idx, p in h1:
        matched_loop = None
        if open_loops:
            birth_px = _candidate_pixels(image, p.birth, smoothed, smoothed_birth)
            death_px = _candidate_pixels(image, p.death, smoothed, smoothed_death)
            birth_loops = set()
            for (x, y) in birth_px:
                role = label_role.get(int(lab[y, x]))
                if role is not None and role.kind == "loop":
                    birth_loops.add(role.index)
            for (x, y) in death_px:
                role = label_role.get(int(lab[y, x]))
                if role is not None and role.kind == "interior":
                    i = role.index
                    if i in birth_loops and i in open_loops:
                        matched_loop = i
                        break
        if matched_loop is None:
            unmatched.append(idx)
        else:
            pairs.append((idx, matched_loop))
            open_loops.discard(matched_loop)
    return MatchResult(tuple(pairs), tuple(unmatched))


def partition_stats(image: GrayImage, labeling: PartitionLabeling, role: Role) -> PartitionStats:
    """Sample mean and unbiased variance of the pixels holding a role.

    Edge pixels carry no label and are therefore never included.
    """
    labels = labeling.labels_with_role(role)
    if not labels:
        raise KeyError(f"role {role} not present in labeling")
    mask = labeling.mask_of_role(role)
    vals = image.intensity[mask]
    if vals.size < 2:
        raise InsufficientPixelsError(
            f"role {role} has {vals.size} pixel(s); need at least 2"
        )
    return PartitionStats(
        role=role,
        n=int(vals.size),
        mean=float(vals.mean()),
        sample_variance=float(vals.var(ddof=1)),
    )


def confidence_region(
    stats_interior: PartitionStats, stats_loop: PartitionStats, alpha: float
) -> ConfidenceRegion:
    """Asymptotic (1 - alpha) ellipse for the matched loop's (death, birth)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    var_death = stats_interior.sample_variance / stats_interior.n
    var_birth = stats_loop.sample_variance / stats_loop.n
    if var_death <= 0.0 or var_birth <= 0.0:
        raise DegenerateRegionError(
            "zero estimated variance: confidence region is degenerate (noise-free image?)"
        )
    q = float(sp_stats.chi2.ppf(1.0 - alpha, df=2))
    return ConfidenceRegion(
        center=(stats_interior.mean, stats_loop.mean),
        variance=(var_death, var_birth),
        alpha=alpha,
        chi2_quantile=q,
        n=(stats_interior.n, stats_loop.n),
    )


def region_contains(region: ConfidenceRegion, point) -> bool:
    return region.contains(point)


def persistence_interval(
    stats_interior: PartitionStats, stats_loop: PartitionStats, alpha: float
) -> tuple[float, float]:
    """Point estimate and half-width for the loop's persistence.

    The estimate is the difference of the partition means; its variance is
    the sum of the two variances of the means.  Zero estimated variance
    yields a degenerate zero half-width rather than an error.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    estimate = stats_loop.mean - stats_interior.mean
    var = (
        stats_loop.sample_variance / stats_loop.n
        + stats_interior.sample_variance / stats_interior.n
    )
    z = float(sp_stats.norm.ppf(1.0 - alpha / 2.0))
    return estimate, z * math.sqrt(var)
