"""Smoothing plus stratified-bootstrap confidence bands for image diagrams.

The benchmark pipeline smooths the image by local polynomial regression
(tricube-weighted least squares over the k nearest pixels, with k a fixed
fraction of the pixel count), then bootstraps pixel intensities within
segmentation strata to estimate the (1 - alpha) quantile c_n of the sup-norm
distance between smoothed bootstrap replicates and the smoothed image.
Diagram stability turns c_n into a square confidence region of half-width
c_n around every loop of the smoothed image's diagram.

The smoother is linear in the pixel values, so for a fixed image geometry,
degree, and bandwidth it is cached as a sparse row-weight operator and
applied to whole batches of bootstrap replicates at once.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import sparse

from .grid_image import GrayImage, PartitionLabeling
from .persistence import PersistenceDiagram
from .seeds import child_seed

__all__ = [
    "BootstrapBand",
    "SquareRegion",
    "RankDeficiencyError",
    "local_poly_smooth",
    "stratified_bootstrap",
    "stda_band",
    "band_to_regions",
]


class RankDeficiencyError(ValueError):
    """Neighborhood cannot support the requested polynomial degree."""


_N_COEF = {0: 1, 1: 3, 2: 6}


@njit(cache=True, nogil=True)
def _build_rows(width, height, k, degree, off_dx, off_dy, off_d2, out_idx, out_w):
    """Per-pixel smoothing weights: for each pixel, the tricube-weighted
    least-squares evaluation functional over its k nearest pixels.

    Offsets must be sorted by (squared distance, dy, dx).  Writes neighbor
    ids and weights into out_idx/out_w (shape n_pixels x k); returns 0, or
    the failing pixel id when the local normal matrix is singular.
    """
    p = 1 if degree == 0 else (3 if degree == 1 else 6)
    n_off = off_dx.shape[0]
    nb_dx = np.empty(k, dtype=np.int64)
    nb_dy = np.empty(k, dtype=np.int64)
    nb_d2 = np.empty(k, dtype=np.float64)
    phi = np.empty(p, dtype=np.float64)
    for y in range(height):
        for x in range(width):
            pid = y * width + x
            found = 0
            for o in range(n_off):
                xx = x + off_dx[o]
                yy = y + off_dy[o]
                if 0 <= xx < width and 0 <= yy < height:
                    nb_dx[found] = off_dx[o]
                    nb_dy[found] = off_dy[o]
                    nb_d2[found] = off_d2[o]
                    found += 1
                    if found == k:
                        break
            if found < k:
                return pid + 1  # not enough pixels in the image
            dmax = math.sqrt(nb_d2[k - 1])
            m = np.zeros((p, p), dtype=np.float64)
            for c in range(k):
                u = math.sqrt(nb_d2[c]) / dmax
                w = 0.0
                if u < 1.0:
                    w = (1.0 - u * u * u) ** 3
                dx = float(nb_dx[c])
                dy = float(nb_dy[c])
                phi[0] = 1.0
                if p > 1:
                    phi[1] = dx
                    phi[2] = dy
                if p > 3:
                    phi[3] = dx * dx
                    phi[4] = dx * dy
                    phi[5] = dy * dy
                for a in range(p):
                    for b in range(p):
                        m[a, b] += w * phi[a] * phi[b]
            e0 = np.zeros(p, dtype=np.float64)
            e0[0] = 1.0
            det_guard = np.linalg.det(m)
            if not np.isfinite(det_guard) or abs(det_guard) < 1e-300:
                return -(pid + 1)
            coef = np.linalg.solve(m, e0)
            for c in range(k):
                u = math.sqrt(nb_d2[c]) / dmax
                w = 0.0
                if u < 1.0:
                    w = (1.0 - u * u * u) ** 3
                dx = float(nb_dx[c])
                dy = float(nb_dy[c])
                s = coef[0]
                if p > 1:
                    s += coef[1] * dx + coef[2] * dy
                if p > 3:
                    s += coef[3] * dx * dx + coef[4] * dx * dy + coef[5] * dy * dy
                out_idx[pid, c] = (y + nb_dy[c]) * width + (x + nb_dx[c])
                out_w[pid, c] = w * s
    return 0


_operator_cache: dict[tuple, sparse.csr_matrix] = {}
_cache_lock = threading.Lock()


def _neighbor_count(width: int, height: int, bandwidth: float) -> int:
    if not 0.0 < bandwidth <= 1.0:
        raise ValueError("bandwidth must be a fraction in (0, 1]")
    return max(1, int(math.ceil(bandwidth * width * height)))


def smoothing_operator(width: int, height: int, degree: int, bandwidth: float) -> sparse.csr_matrix:
    """The (cached) linear operator mapping raw to smoothed pixel vectors."""
    if degree not in _N_COEF:
        raise ValueError("degree must be 0, 1, or 2")
    k = _neighbor_count(width, height, bandwidth)
    if k < _N_COEF[degree]:
        raise RankDeficiencyError(
            f"bandwidth {bandwidth} gives {k} neighbors; degree {degree} needs "
            f">= {_N_COEF[degree]}"
        )
    key = (width, height, degree, k)
    with _cache_lock:
        cached = _operator_cache.get(key)
    if cached is not None:
        return cached

    r = int(math.ceil(2.0 * math.sqrt(k / math.pi))) + 2
    r = min(max(r, 2), max(width, height))
    while (2 * r + 1) ** 2 < 4 * k and r < max(width, height):
        r += 1
    dys, dxs = np.mgrid[-r : r + 1, -r : r + 1]
    dys, dxs = dys.ravel(), dxs.ravel()
    d2 = (dys * dys + dxs * dxs).astype(np.float64)
    order = np.lexsort((dxs, dys, d2))

    n = width * height
    out_idx = np.empty((n, k), dtype=np.int64)
    out_w = np.empty((n, k), dtype=np.float64)
    status = _build_rows(
        width,
        height,
        k,
        degree,
        dxs[order].astype(np.int64),
        dys[order].astype(np.int64),
        d2[order],
        out_idx,
        out_w,
    )
    if status > 0:
        raise RankDeficiencyError(f"image too small for {k}-nearest smoothing")
    if status < 0:
        raise RankDeficiencyError(
            f"singular local fit at pixel {-status - 1}: neighborhood cannot support degree {degree}"
        )
    indptr = np.arange(0, (n + 1) * k, k, dtype=np.int64)
    op = sparse.csr_matrix((out_w.ravel(), out_idx.ravel(), indptr), shape=(n, n))
    with _cache_lock:
        _operator_cache[key] = op
    return op


def local_poly_smooth(image: GrayImage, degree: int, bandwidth: float) -> GrayImage:
    """Local polynomial regression surface of the image, evaluated per pixel."""
    op = smoothing_operator(image.width, image.height, degree, bandwidth)
    smoothed = op @ image.intensity.ravel()
    return GrayImage(smoothed.reshape(image.height, image.width))


def _strata(labeling: PartitionLabeling) -> list[np.ndarray]:
    """Flat pixel indices per stratum, sorted by label (edge stratum included)."""
    flat = labeling.label.ravel()
    return [np.nonzero(flat == lbl)[0] for lbl in np.unique(flat)]


def _resample_into(out: np.ndarray, values: np.ndarray, strata: list[np.ndarray], rng) -> None:
    for idx in strata:
        if idx.size == 0:
            continue
        out[idx] = values[idx][rng.integers(0, idx.size, size=idx.size)]


def stratified_bootstrap(image: GrayImage, labeling: PartitionLabeling, seed: int) -> GrayImage:
    """Resample pixel intensities with replacement within each labeled stratum.

    Every distinct label forms a stratum (held-out edge pixels form their
    own), so intensities never cross strata; the result is deterministic in
    the seed.
    """
    if labeling.label.shape != image.intensity.shape:
        raise ValueError("labeling and image shapes differ")
    rng = np.random.default_rng(seed)
    values = image.intensity.ravel()
    out = values.copy()
    _resample_into(out, values, _strata(labeling), rng)
    return GrayImage(out.reshape(image.intensity.shape))


@dataclass(frozen=True)
class BootstrapBand:
    c_n: float
    alpha: float
    B: int
    distances: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"c_n": self.c_n, "alpha": self.alpha, "B": self.B}


def stda_band(
    image: GrayImage,
    labeling: PartitionLabeling,
    degree: int,
    bandwidth: float,
    B: int,
    alpha: float,
    seed: int,
) -> BootstrapBand:
    """Bootstrap the sup-norm distance between smoothed replicates and the
    smoothed image; c_n is the ceil((1 - alpha) * B)-th order statistic.
    """
    if B < 100:
        raise ValueError("at least 100 bootstrap replicates are required")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    op = smoothing_operator(image.width, image.height, degree, bandwidth)
    values = image.intensity.ravel()
    strata = _strata(labeling)

    # replicate b is exactly stratified_bootstrap(image, labeling, child_seed(seed, b))
    cols = np.empty((values.size, B), dtype=np.float64, order="F")
    for b in range(B):
        col = values.copy()
        _resample_into(col, values, strata, np.random.default_rng(child_seed(seed, b)))
        cols[:, b] = col
    smoothed_base = op @ values
    smoothed_boot = op @ cols
    distances = np.abs(smoothed_boot - smoothed_base[:, None]).max(axis=0)

    rank = int(math.ceil((1.0 - alpha) * B))
    c_n = float(np.sort(distances)[rank - 1])
    return BootstrapBand(c_n=c_n, alpha=alpha, B=B, distances=tuple(float(d) for d in distances))


@dataclass(frozen=True)
class SquareRegion:
    death: float
    birth: float
    c_n: float
    significant: bool

    @property
    def area(self) -> float:
        return (2.0 * self.c_n) ** 2


def band_to_regions(band: BootstrapBand, diagram: PersistenceDiagram) -> list[SquareRegion]:
    """A half-width c_n square around every finite loop of the diagram; the
    loop is significant when its diagonal gap (persistence / 2) exceeds c_n.
    """
    regions = []
    for p in diagram.in_dim(1, include_essential=False):
        regions.append(
            SquareRegion(
                death=p.death,
                birth=p.birth,
                c_n=band.c_n,
                significant=(p.persistence / 2.0) > band.c_n,
            )
        )
    return regions
