"""Grayscale image grid, synthetic ring generation, and partition bookkeeping.

Images are rectangular grids of real-valued pixel intensities.  Pixel
coordinates are (x, y) with x the column (0-based, left to right) and y the
row (0-based, top to bottom); arrays are stored row-major with shape
(height, width).  Synthetic images place one or more concentric "ring"
patterns (a loop band of constant intensity around a constant interior) on a
constant background and add homoscedastic Gaussian noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GrayImage",
    "Role",
    "PartitionLabeling",
    "RingZone",
    "RingSpec",
    "InvalidSpecError",
    "ImageFormatError",
    "EDGE_LABEL",
    "generate",
    "load_image",
    "save_image",
    "load_labeling",
    "save_labeling",
]

# Label reserved for held-out edge pixels in segmentation-derived labelings.
# Truth labelings produced by generate() never contain it.
EDGE_LABEL = -1


class InvalidSpecError(ValueError):
    """Raised when a ring spec violates its geometric invariants."""


class ImageFormatError(ValueError):
    """Raised when an image or labeling file cannot be parsed."""


@dataclass(frozen=True)
class GrayImage:
    """A width x height grid of finite real pixel intensities."""

    intensity: np.ndarray  # float64, shape (height, width), read-only

    def __post_init__(self):
        arr = np.asarray(self.intensity, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 2:
            raise ValueError("image must be at least 2x2")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image intensities must be finite")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "intensity", arr)

    @property
    def height(self) -> int:
        return self.intensity.shape[0]

    @property
    def width(self) -> int:
        return self.intensity.shape[1]

    def at(self, x: int, y: int) -> float:
        return float(self.intensity[y, x])

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.intensity.shape == other.intensity.shape and np.array_equal(
            self.intensity, other.intensity
        )

    def __hash__(self):
        return hash((self.intensity.shape, self.intensity.tobytes()))


@dataclass(frozen=True)
class Role:
    """Role of a labeled region: background, the i-th loop, or its interior."""

    kind: str  # "background" | "loop" | "interior"
    index: int = 0

    @staticmethod
    def background() -> "Role":
        return Role("background", 0)

    @staticmethod
    def loop(i: int) -> "Role":
        return Role("loop", i)

    @staticmethod
    def interior(i: int) -> "Role":
        return Role("interior", i)

    def to_string(self) -> str:
        if self.kind == "background":
            return "background"
        return f"{self.kind}:{self.index}"

    @staticmethod
    def from_string(s: str) -> "Role":
        if s == "background":
            return Role.background()
        kind, _, idx = s.partition(":")
        if kind not in ("loop", "interior") or not idx.isdigit():
            raise ImageFormatError(f"unknown role string {s!r}")
        return Role(kind, int(idx))


@dataclass(frozen=True)
class PartitionLabeling:
    """Per-pixel region labels plus a role for each region.

    ``label`` holds a non-negative region id per pixel (0 is conventionally
    the background region touching the image border).  Segmentation-derived
    labelings may additionally mark held-out edge pixels with ``EDGE_LABEL``;
    such pixels belong to no region and are excluded from all statistics.
    ``roles`` maps region ids to roles; regions without a recognized role
    (noise speckle) may be absent from the map.
    """

    label: np.ndarray  # int32, shape (height, width), read-only
    roles: dict[int, Role] = field(default_factory=dict)

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.label, dtype=np.int32))
        if arr.ndim != 2:
            raise ValueError("label array must be 2-D")
        arr.flags.writeable = False
        object.__setattr__(self, "label", arr)

    @property
    def height(self) -> int:
        return self.label.shape[0]

    @property
    def width(self) -> int:
        return self.label.shape[1]

    @property
    def edge_mask(self) -> np.ndarray:
        return self.label == EDGE_LABEL

    def labels_present(self) -> list[int]:
        return sorted(int(v) for v in np.unique(self.label) if v != EDGE_LABEL)

    def labels_with_role(self, role: Role) -> list[int]:
        return sorted(lbl for lbl, r in self.roles.items() if r == role)

    def mask_of_label(self, lbl: int) -> np.ndarray:
        return self.label == lbl

    def mask_of_role(self, role: Role) -> np.ndarray:
        mask = np.zeros(self.label.shape, dtype=bool)
        for lbl in self.labels_with_role(role):
            mask |= self.label == lbl
        return mask

    def loop_indices(self) -> list[int]:
        return sorted({r.index for r in self.roles.values() if r.kind == "loop"})

    def validate(self) -> None:
        """Check region contiguity, interior enclosure, and border contact."""
        from .segmentation import _connected_components  # local import, no cycle at module load

        for lbl in self.labels_present():
            mask = self.mask_of_label(lbl)
            _, count = _connected_components(mask)
            if count != 1:
                raise ValueError(f"label {lbl} is not 4-connected ({count} components)")
        for i in self.loop_indices():
            loop_mask = self.mask_of_role(Role.loop(i))
            int_mask = self.mask_of_role(Role.interior(i))
            if not int_mask.any():
                raise ValueError(f"loop {i} has no interior")
            if _reaches_border(int_mask, blocked=loop_mask):
                raise ValueError(f"interior {i} is not enclosed by loop {i}")
        for lbl in self.labels_with_role(Role.background()):
            mask = self.mask_of_label(lbl)
            border = np.zeros_like(mask)
            border[0, :] = border[-1, :] = True
            border[:, 0] = border[:, -1] = True
            if not (mask & border).any():
                raise ValueError("background region does not touch the border")


def _reaches_border(start: np.ndarray, blocked: np.ndarray) -> bool:
    """4-connected flood fill from ``start`` avoiding ``blocked`` pixels."""
    from scipy.ndimage import label as cc_label

    free = ~blocked
    comp, _ = cc_label(free, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    start_ids = np.unique(comp[start & free])
    border_ids = np.unique(
        np.concatenate([comp[0, :], comp[-1, :], comp[:, 0], comp[:, -1]])
    )
    start_ids = start_ids[start_ids > 0]
    border_ids = set(border_ids[border_ids > 0].tolist())
    return any(int(s) in border_ids for s in start_ids)


@dataclass(frozen=True)
class RingZone:
    """One ring: a loop band of constant mean around a constant interior.

    ``center`` is the (x, y) pixel at the center.  A rectangle ring covers
    pixels with Chebyshev distance in (outer_half_extent - thickness,
    outer_half_extent]; a disk ring uses Euclidean distance.  The interior is
    everything closer than that.
    """

    center: tuple[int, int]
    outer_half_extent: int
    thickness: int
    mu_loop: float
    mu_interior: float


@dataclass(frozen=True)
class RingSpec:
    width: int
    height: int
    rings: tuple[RingZone, ...]
    mu_background: float
    sigma: float
    noise_family: str = "gaussian"
    shape: str = "rectangle"  # "rectangle" | "disk"

    def __post_init__(self):
        object.__setattr__(self, "rings", tuple(self.rings))

    def validate(self) -> None:
        if self.width < 2 or self.height < 2:
            raise InvalidSpecError("image must be at least 2x2")
        if self.sigma < 0:
            raise InvalidSpecError("sigma must be non-negative")
        if self.noise_family != "gaussian":
            raise InvalidSpecError(f"unsupported noise family {self.noise_family!r}")
        if self.shape not in ("rectangle", "disk"):
            raise InvalidSpecError(f"unsupported ring shape {self.shape!r}")
        occupied = np.zeros((self.height, self.width), dtype=bool)
        for k, ring in enumerate(self.rings):
            if ring.thickness < 1:
                raise InvalidSpecError(f"ring {k}: thickness must be >= 1")
            if ring.thickness >= ring.outer_half_extent:
                raise InvalidSpecError(f"ring {k}: thickness must be < outer_half_extent")
            cx, cy = ring.center
            h = ring.outer_half_extent
            if cx - h < 1 or cy - h < 1 or cx + h > self.width - 2 or cy + h > self.height - 2:
                raise InvalidSpecError(f"ring {k}: must keep >= 1 background pixel from the border")
            loop_mask, interior_mask = _ring_masks(self, ring)
            body = loop_mask | interior_mask
            if (occupied & body).any():
                raise InvalidSpecError(f"ring {k}: overlaps another ring")
            occupied |= body

    @staticmethod
    def from_json(path) -> "RingSpec":
        with open(path) as fh:
            raw = json.load(fh)
        try:
            rings = tuple(
                RingZone(
                    center=(int(r["center"][0]), int(r["center"][1])),
                    outer_half_extent=int(r["outer_half_extent"]),
                    thickness=int(r["thickness"]),
                    mu_loop=float(r["mu_loop"]),
                    mu_interior=float(r["mu_interior"]),
                )
                for r in raw.get("rings", [])
            )
            return RingSpec(
                width=int(raw["width"]),
                height=int(raw["height"]),
                rings=rings,
                mu_background=float(raw["mu_background"]),
                sigma=float(raw.get("sigma", 0.0)),
                noise_family=raw.get("noise_family", "gaussian"),
                shape=raw.get("shape", "rectangle"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpecError(f"malformed ring spec: {exc}") from exc


def _ring_masks(spec: RingSpec, ring: RingZone) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width]
    cx, cy = ring.center
    if spec.shape == "rectangle":
        dist = np.maximum(np.abs(xs - cx), np.abs(ys - cy))
    else:
        dist = np.hypot(xs - cx, ys - cy)
    h, t = ring.outer_half_extent, ring.thickness
    loop = (dist <= h) & (dist > h - t)
    interior = dist <= h - t
    return loop, interior


def generate(spec: RingSpec, seed: int) -> tuple[GrayImage, PartitionLabeling]:
    """Draw one image from a ring spec's pixel model, with the exact truth labeling.

    Every pixel is its partition mean plus independent N(0, sigma^2) noise
    drawn from a generator seeded with ``seed``; the result is reproducible
    bit-exactly for a given (spec, seed).
    """
    spec.validate()
    mu = np.full((spec.height, spec.width), spec.mu_background, dtype=np.float64)
    label = np.zeros((spec.height, spec.width), dtype=np.int32)
    roles: dict[int, Role] = {0: Role.background()}
    for i, ring in enumerate(spec.rings, start=1):
        loop_mask, interior_mask = _ring_masks(spec, ring)
        mu[loop_mask] = ring.mu_loop
        mu[interior_mask] = ring.mu_interior
        loop_lbl, int_lbl = 2 * i - 1, 2 * i
        label[loop_mask] = loop_lbl
        label[interior_mask] = int_lbl
        roles[loop_lbl] = Role.loop(i)
        roles[int_lbl] = Role.interior(i)
    if spec.sigma > 0:
        rng = np.random.default_rng(seed)
        mu = mu + rng.normal(0.0, spec.sigma, size=mu.shape)
    return GrayImage(mu), PartitionLabeling(label, roles)


# ---------------------------------------------------------------------------
# File formats: CSV (lossless decimal text) and 16-bit grayscale PNG.
# ---------------------------------------------------------------------------


def save_image(image: GrayImage, path) -> None:
    path = str(path)
    if path.endswith(".png"):
        _save_png16(image, path)
        return
    with open(path, "w") as fh:
        for row in image.intensity:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_image(path) -> GrayImage:
    path = str(path)
    if path.endswith(".png"):
        return _load_png16(path)
    rows: list[list[float]] = []
    with open(path) as fh:
        for r, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            parsed = []
            for c, cell in enumerate(cells):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ImageFormatError(
                        f"{path}: non-numeric cell at row {r}, column {c}: {cell!r}"
                    ) from None
            if rows and len(parsed) != len(rows[0]):
                raise ImageFormatError(
                    f"{path}: ragged row {r}: expected {len(rows[0])} cells, got {len(parsed)}"
                )
            rows.append(parsed)
    if not rows:
        raise ImageFormatError(f"{path}: empty image file")
    return GrayImage(np.array(rows, dtype=np.float64))


def _save_png16(image: GrayImage, path: str) -> None:
    from PIL import Image as PILImage

    arr = image.intensity
    rounded = np.rint(arr)
    if not np.array_equal(rounded, arr) or rounded.min() < 0 or rounded.max() > 65535:
        raise ImageFormatError(
            "PNG output requires integer intensities in [0, 65535]; use CSV for raw values"
        )
    PILImage.fromarray(rounded.astype(np.uint16)).save(path)


def _load_png16(path: str) -> GrayImage:
    from PIL import Image as PILImage

    with PILImage.open(path) as img:
        if img.mode not in ("I;16", "I;16B", "I", "L"):
            raise ImageFormatError(f"{path}: expected single-channel grayscale PNG, got mode {img.mode}")
        arr = np.asarray(img, dtype=np.float64)
    return GrayImage(arr)


def save_labeling(labeling: PartitionLabeling, csv_path, roles_path=None) -> None:
    csv_path = str(csv_path)
    if roles_path is None:
        roles_path = csv_path.rsplit(".", 1)[0] + ".json"
    with open(csv_path, "w") as fh:
        for row in labeling.label:
            fh.write(",".join(str(int(v)) for v in row))
            fh.write("\n")
    with open(roles_path, "w") as fh:
        json.dump({str(lbl): role.to_string() for lbl, role in sorted(labeling.roles.items())}, fh, indent=2)
        fh.write("\n")


def load_labeling(csv_path, roles_path=None) -> PartitionLabeling:
    csv_path = str(csv_path)
    if roles_path is None:
        roles_path = csv_path.rsplit(".", 1)[0] + ".json"
    rows = []
    with open(csv_path) as fh:
        for r, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                parsed = [int(c) for c in line.split(",")]
            except ValueError as exc:
                raise ImageFormatError(f"{csv_path}: bad label at row {r}: {exc}") from None
            if rows and len(parsed) != len(rows[0]):
                raise ImageFormatError(f"{csv_path}: ragged row {r}")
            rows.append(parsed)
    with open(roles_path) as fh:
        raw = json.load(fh)
    roles = {int(k): Role.from_string(v) for k, v in raw.items()}
    return PartitionLabeling(np.array(rows, dtype=np.int32), roles)
