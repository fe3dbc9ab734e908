"""Edge-detection segmentation of an image into nested contiguous regions.

Edges are pixels at local maxima of the gradient magnitude of the
Gaussian-smoothed image (non-maximum suppression along the quantized
gradient direction) above a threshold; removing them from the grid leaves
4-connected regions.  Region roles (background / loop / interior) follow
from the containment structure: a non-background region that encloses at
least one other region is a loop and its enclosed regions are its interior.

The repair step rescues partitions from segmentation errors: intensity
outliers of a loop or interior partition that sit next to the edge set and
lie at least as close to the opposite partition's outlier-trimmed mean are
moved into the edge set, so they no longer contaminate either partition's
statistics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid_image import EDGE_LABEL, GrayImage, PartitionLabeling, Role

__all__ = [
    "EdgeSet",
    "DegenerateSegmentationError",
    "UnsupportedNestingError",
    "detect_edges",
    "label_regions",
    "infer_roles",
    "correct_misclassified",
    "save_edges",
    "load_edges",
]

_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_EIGHT = np.ones((3, 3), dtype=bool)


class DegenerateSegmentationError(ValueError):
    """The edge set leaves no pixels to form regions."""


class UnsupportedNestingError(ValueError):
    """Regions are nested more deeply than loop-around-interior."""


@dataclass(frozen=True)
class EdgeSet:
    mask: np.ndarray  # bool, shape (height, width), read-only

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.mask, dtype=bool))
        arr.flags.writeable = False
        object.__setattr__(self, "mask", arr)

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def edge_pixels(self) -> set[tuple[int, int]]:
        ys, xs = np.nonzero(self.mask)
        return {(int(x), int(y)) for x, y in zip(xs, ys)}

    def union(self, extra_mask: np.ndarray) -> "EdgeSet":
        return EdgeSet(self.mask | extra_mask)


def _connected_components(mask: np.ndarray):
    """4-connected components of a boolean mask: (labels from 1, count)."""
    return ndimage.label(mask, structure=_FOUR)


def _otsu_threshold(values: np.ndarray) -> float:
    """Otsu's threshold on a sample of non-negative values (256-bin histogram)."""
    v = values[np.isfinite(values)]
    if v.size == 0 or v.max() <= 0:
        return 0.0
    hist, bin_edges = np.histogram(v, bins=256, range=(0.0, float(v.max())))
    hist = hist.astype(np.float64)
    centers = (bin_edges[:-1] + bin_edges[1:]) / 2.0
    w0 = np.cumsum(hist)
    w1 = w0[-1] - w0
    m0 = np.cumsum(hist * centers)
    total = m0[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = m0 / w0
        mu1 = (total - m0) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between[~np.isfinite(between)] = -1.0
    return float(centers[int(np.argmax(between))])


def detect_edges(
    image: GrayImage, gaussian_sigma: float = 2.0, gradient_threshold: float | None = None
) -> EdgeSet:
    """Edge pixels: gradient-direction local maxima of the smoothed image's
    gradient magnitude, above the threshold (Otsu's choice when not given).
    """
    if gaussian_sigma <= 0:
        raise ValueError("gaussian_sigma must be positive")
    smoothed = ndimage.gaussian_filter(image.intensity, gaussian_sigma, mode="nearest")
    gy, gx = np.gradient(smoothed)
    mag = np.hypot(gx, gy)

    if gradient_threshold is None:
        gradient_threshold = _otsu_threshold(mag[mag > 0])

    # Quantize gradient direction into 4 sectors and compare against the two
    # neighbors along it; one comparison is strict so exact plateau ties keep
    # a single crest pixel.
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    sector = np.floor((angle + np.pi / 8) / (np.pi / 4)).astype(int) % 4
    pad = np.pad(mag, 1, mode="constant", constant_values=-np.inf)
    offsets = {
        0: ((0, 1), (0, -1)),  # horizontal gradient: compare left/right
        1: ((1, 1), (-1, -1)),  # diagonal
        2: ((1, 0), (-1, 0)),  # vertical gradient: compare up/down
        3: ((1, -1), (-1, 1)),  # anti-diagonal
    }
    h, w = mag.shape
    keep = np.zeros((h, w), dtype=bool)
    for s, ((dy1, dx1), (dy2, dx2)) in offsets.items():
        n1 = pad[1 + dy1 : 1 + dy1 + h, 1 + dx1 : 1 + dx1 + w]
        n2 = pad[1 + dy2 : 1 + dy2 + h, 1 + dx2 : 1 + dx2 + w]
        keep |= (sector == s) & (mag > n1) & (mag >= n2)
    keep &= mag > gradient_threshold
    return EdgeSet(keep)


def label_regions(
    edges: EdgeSet,
    min_region_size: int = 4,
    assign_edge_pixels: bool = False,
    image: GrayImage | None = None,
) -> PartitionLabeling:
    """Label the 4-connected components of the non-edge pixels.

    Regions smaller than ``min_region_size`` are merged into the surrounding
    region (or absorbed into the edge set when isolated).  Labels are dense
    0..n with 0 the region touching the image border most.  Edge pixels stay
    held out (EDGE_LABEL) unless ``assign_edge_pixels`` is set, in which case
    each is attached to the adjacent region whose outlier-trimmed mean is
    nearest its intensity (requires ``image``).
    """
    free = ~edges.mask
    if not free.any():
        raise DegenerateSegmentationError("edge set covers every pixel")
    comp, n_comp = _connected_components(free)

    # Merge speckle regions into their surroundings.
    sizes = ndimage.sum_labels(np.ones_like(comp), comp, index=np.arange(1, n_comp + 1))
    for lbl in np.argsort(sizes) + 1:
        if sizes[lbl - 1] >= min_region_size or sizes[lbl - 1] == 0:
            continue
        mask = comp == lbl
        ring = ndimage.binary_dilation(mask, structure=_EIGHT, iterations=2) & ~mask
        neighbor_labels = comp[ring]
        neighbor_labels = neighbor_labels[neighbor_labels > 0]
        if neighbor_labels.size == 0:
            comp[mask] = 0  # isolated speckle becomes edge
        else:
            counts = np.bincount(neighbor_labels)
            target = int(np.argmax(counts))
            sizes[target - 1] += sizes[lbl - 1]
            comp[mask] = target
        sizes[lbl - 1] = 0

    present = [lbl for lbl in range(1, n_comp + 1) if sizes[lbl - 1] > 0]
    if not present:
        raise DegenerateSegmentationError("no region survives small-region pruning")

    border = np.zeros_like(free)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    border_counts = {lbl: int(((comp == lbl) & border).sum()) for lbl in present}
    background = max(present, key=lambda lbl: (border_counts[lbl], -lbl))
    ordered = [background] + [lbl for lbl in present if lbl != background]

    label = np.full(comp.shape, EDGE_LABEL, dtype=np.int32)
    for new, old in enumerate(ordered):
        label[comp == old] = new

    if assign_edge_pixels:
        if image is None:
            raise ValueError("assign_edge_pixels requires the image")
        label = _attach_edge_pixels(label, image)
    return PartitionLabeling(label, {})


def _trimmed_mean(vals: np.ndarray) -> float:
    if vals.size < 4:
        return float(vals.mean())
    q1, q3 = np.quantile(vals, [0.25, 0.75])
    iqr = q3 - q1
    keep = (vals >= q1 - 1.5 * iqr) & (vals <= q3 + 1.5 * iqr)
    return float(vals[keep].mean()) if keep.any() else float(vals.mean())


def _attach_edge_pixels(label: np.ndarray, image: GrayImage) -> np.ndarray:
    out = label.copy()
    means = {
        int(lbl): _trimmed_mean(image.intensity[label == lbl])
        for lbl in np.unique(label)
        if lbl != EDGE_LABEL
    }
    h, w = label.shape
    # Repeated passes let thick edge bands attach layer by layer.
    while True:
        ys, xs = np.nonzero(out == EDGE_LABEL)
        if ys.size == 0:
            break
        changed = False
        for y, x in zip(ys, xs):
            cand = set()
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and out[yy, xx] != EDGE_LABEL:
                        cand.add(int(out[yy, xx]))
            if cand:
                z = image.intensity[y, x]
                out[y, x] = min(cand, key=lambda l: (abs(z - means[l]), l))
                changed = True
        if not changed:
            break
    return out


def _enclosed_by(mask: np.ndarray) -> np.ndarray:
    """Pixels that cannot reach the image border without crossing ``mask``."""
    free = ~mask
    comp, _ = _connected_components(free)
    border_ids = np.unique(
        np.concatenate([comp[0, :], comp[-1, :], comp[:, 0], comp[:, -1]])
    )
    reachable = np.isin(comp, border_ids[border_ids > 0])
    return free & ~reachable


def infer_roles(labeling: PartitionLabeling) -> PartitionLabeling:
    """Assign background / loop / interior roles from region containment.

    The border-touching root region is the background.  Any other region
    that encloses at least one region (it has a hole, and some region sits
    inside it) becomes Loop(i); the regions immediately inside become
    Interior(i).  Interior regions with further nesting are unsupported.
    """
    labels = labeling.labels_present()
    masks = {lbl: labeling.mask_of_label(lbl) for lbl in labels}
    enclosed = {lbl: _enclosed_by(masks[lbl]) for lbl in labels}
    enclosed_sizes = {lbl: int(enclosed[lbl].sum()) for lbl in labels}

    parent: dict[int, int | None] = {}
    children: dict[int, list[int]] = {lbl: [] for lbl in labels}
    for b in labels:
        enclosers = [
            a
            for a in labels
            if a != b and bool((masks[b] & ~enclosed[a]).sum() == 0)
        ]
        if enclosers:
            p = min(enclosers, key=lambda a: (enclosed_sizes[a], a))
            parent[b] = p
            children[p].append(b)
        else:
            parent[b] = None

    border = np.zeros((labeling.height, labeling.width), dtype=bool)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    roots = [lbl for lbl in labels if parent[lbl] is None]
    background = None
    for lbl in sorted(roots, key=lambda l: -int((masks[l] & border).sum())):
        if (masks[lbl] & border).any():
            background = lbl
            break

    roles: dict[int, Role] = {}
    if background is not None:
        roles[background] = Role.background()
    loop_idx = 0
    for lbl in labels:
        if lbl == background:
            continue
        if children[lbl] and enclosed_sizes[lbl] > 0:
            loop_idx += 1
            roles[lbl] = Role.loop(loop_idx)
            for child in sorted(children[lbl]):
                if children[child]:
                    raise UnsupportedNestingError(
                        f"region {child} nests further regions inside an interior"
                    )
                roles[child] = Role.interior(loop_idx)
    return PartitionLabeling(labeling.label, roles)


def correct_misclassified(
    edges: EdgeSet, image: GrayImage, labeling: PartitionLabeling
) -> EdgeSet:
    """Move edge-adjacent intensity outliers of each loop/interior pair into
    the edge set when they sit at least as close to the opposite partition's
    outlier-trimmed mean, returning the enlarged edge set.
    """
    loop_indices = labeling.loop_indices()
    if not loop_indices:
        raise ValueError("labeling has no (loop, interior) pair to correct")
    near_edge = ndimage.binary_dilation(edges.mask, structure=_EIGHT)
    inten = image.intensity
    extra = np.zeros_like(edges.mask)

    for i in loop_indices:
        flagged: dict[str, np.ndarray] = {}
        trimmed_mean: dict[str, float] = {}
        masks = {
            "loop": labeling.mask_of_role(Role.loop(i)),
            "interior": labeling.mask_of_role(Role.interior(i)),
        }
        for part, mask in masks.items():
            vals = inten[mask]
            if vals.size < 4:
                warnings.warn(
                    f"partition {part}({i}) has {vals.size} pixels; quartiles undefined, skipped"
                )
                flagged[part] = np.zeros_like(mask)
                trimmed_mean[part] = float(vals.mean()) if vals.size else np.nan
                continue
            q1, q3 = np.quantile(vals, [0.25, 0.75])
            iqr = q3 - q1
            outlier = mask & ((inten > q3 + 1.5 * iqr) | (inten < q1 - 1.5 * iqr))
            flagged[part] = outlier & near_edge
            keep = mask & ~flagged[part]
            trimmed_mean[part] = float(inten[keep].mean())
        for part, other in (("loop", "interior"), ("interior", "loop")):
            if not flagged[part].any() or np.isnan(trimmed_mean[other]):
                continue
            ys, xs = np.nonzero(flagged[part])
            z = inten[ys, xs]
            move = np.abs(z - trimmed_mean[part]) >= np.abs(z - trimmed_mean[other])
            extra[ys[move], xs[move]] = True
    return edges.union(extra)


def save_edges(edges: EdgeSet, path) -> None:
    path = str(path)
    if path.endswith(".png"):
        from PIL import Image as PILImage

        PILImage.fromarray((edges.mask.astype(np.uint16)) * 65535).save(path)
        return
    with open(path, "w") as fh:
        for row in edges.mask:
            fh.write(",".join("1" if v else "0" for v in row))
            fh.write("\n")


def load_edges(path) -> EdgeSet:
    path = str(path)
    if path.endswith(".png"):
        from PIL import Image as PILImage

        with PILImage.open(path) as img:
            arr = np.asarray(img)
        return EdgeSet(arr > 0)
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([c == "1" for c in line.split(",")])
    return EdgeSet(np.array(rows, dtype=bool))
