"""Seeded Monte-Carlo studies: coverage/area, estimator bias, and repair.

Each study cell (noise level or geometry factor) runs R independent
replicates; replicate r of cell c draws every random quantity from streams
derived from (master_seed, study, c, r), so results are bit-reproducible,
order-independent, and stable under increasing the replicate count.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .filtration import build
from .grid_image import (
    EDGE_LABEL,
    GrayImage,
    PartitionLabeling,
    RingSpec,
    RingZone,
    Role,
    generate,
)
from .partda import (
    DegenerateRegionError,
    confidence_region,
    match_loops,
    partition_stats,
)
from .persistence import compute_diagram
from .seeds import child_rng, child_seed
from .segmentation import EdgeSet, correct_misclassified
from .stda import smoothing_operator, _resample_into, _strata

__all__ = [
    "RingGeometry",
    "StudyConfig",
    "CellResult",
    "StudyResult",
    "run_study",
    "run_coverage_study",
    "run_bias_study",
    "run_misclassification_study",
    "edge_banded_labeling",
    "misclassified_segmentation",
]

_STUDY_IDS = {"coverage": 1, "bias": 2, "misclassification": 3}


@dataclass(frozen=True)
class RingGeometry:
    width: int = 100
    height: int = 100
    outer_half_extent: int = 30
    thickness: int = 7

    def spec(self, mu_background, mu_interior, mu_loop, sigma) -> RingSpec:
        center = (self.width // 2, self.height // 2)
        return RingSpec(
            width=self.width,
            height=self.height,
            rings=(
                RingZone(center, self.outer_half_extent, self.thickness, mu_loop, mu_interior),
            ),
            mu_background=mu_background,
            sigma=sigma,
        )


@dataclass(frozen=True)
class StudyConfig:
    study: str
    replicates: int = 500
    sigmas: tuple[float, ...] = (50.0, 150.0, 250.0, 350.0)
    alpha: float = 0.05
    master_seed: int = 20260811
    methods: tuple[str, ...] = ("tTDA", "parTDA")
    mu_background: float = 2000.0
    mu_interior: float = 1000.0
    mu_loop: float = 3000.0
    geometry: RingGeometry = field(default_factory=RingGeometry)
    use_true_labeling: bool = True
    stda_degree: int = 2
    stda_bandwidth: float = 0.3
    stda_bootstrap: int = 300
    stda_edge_band: int = 2  # half-width (px) of the edge stratum straddling boundaries
    thickness_levels: tuple[int, ...] = (2, 7, 11, 16)
    thickness_dimension: int = 50
    thickness_half_extent: int = 20
    dimension_levels: tuple[int, ...] = (20, 50, 100, 150)
    misclassified_pixels: int = 6
    threads: int | None = None

    def __post_init__(self):
        if self.study not in _STUDY_IDS:
            raise ValueError(f"unknown study {self.study!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.sigmas:
            raise ValueError("sigmas must be non-empty")
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "thickness_levels", tuple(self.thickness_levels))
        object.__setattr__(self, "dimension_levels", tuple(self.dimension_levels))
        if isinstance(self.geometry, dict):
            object.__setattr__(self, "geometry", RingGeometry(**self.geometry))

    @staticmethod
    def coverage_default(**overrides) -> "StudyConfig":
        base = dict(study="coverage", methods=("tTDA", "parTDA"))
        base.update(overrides)
        return StudyConfig(**base)

    @staticmethod
    def stda_default(**overrides) -> "StudyConfig":
        base = dict(
            study="coverage",
            methods=("parTDA", "sTDA"),
            replicates=200,
            geometry=RingGeometry(50, 50, 15, 5),
            stda_bootstrap=100,
            stda_edge_band=3,
        )
        base.update(overrides)
        return StudyConfig(**base)

    @staticmethod
    def bias_default(**overrides) -> "StudyConfig":
        base = dict(
            study="bias",
            replicates=1000,
            sigmas=(100.0,),
            mu_background=2000.0,
            mu_interior=3000.0,
            mu_loop=4000.0,
        )
        base.update(overrides)
        return StudyConfig(**base)

    @staticmethod
    def misclassification_default(**overrides) -> "StudyConfig":
        base = dict(
            study="misclassification",
            replicates=500,
            sigmas=(10.0, 50.0, 100.0, 200.0, 300.0),
            mu_interior=1000.0,
            mu_loop=3000.0,
            geometry=RingGeometry(50, 50, 15, 5),
            methods=("parTDA",),
        )
        base.update(overrides)
        return StudyConfig(**base)

    @staticmethod
    def from_json(path) -> "StudyConfig":
        with open(path) as fh:
            raw = json.load(fh)
        if "geometry" in raw and isinstance(raw["geometry"], dict):
            raw["geometry"] = RingGeometry(**raw["geometry"])
        for key in ("sigmas", "methods", "thickness_levels", "dimension_levels"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return StudyConfig(**raw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["geometry"] = dataclasses.asdict(self.geometry)
        for key in ("sigmas", "methods", "thickness_levels", "dimension_levels"):
            d[key] = list(d[key])
        return d


@dataclass(frozen=True)
class CellResult:
    study: str
    factor_name: str
    factor_value: float
    sigma: float
    method: str
    variant: str
    n_replicates: int
    n_missing: int
    mean_death: float
    mean_birth: float
    bias_death: float
    bias_birth: float
    coverage: float
    coverage_se: float
    mean_area: float
    area_se: float
    mean_p_b: float


_CSV_COLUMNS = [f.name for f in dataclasses.fields(CellResult)]


@dataclass(frozen=True)
class StudyResult:
    config: StudyConfig
    cells: tuple[CellResult, ...]
    wall_seconds: float

    def cell(self, **query) -> CellResult:
        hits = [
            c
            for c in self.cells
            if all(getattr(c, k) == v for k, v in query.items())
        ]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} cells match {query}")
        return hits[0]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(_CSV_COLUMNS) + "\n")
            for c in self.cells:
                cells = []
                for name in _CSV_COLUMNS:
                    v = getattr(c, name)
                    if isinstance(v, float):
                        cells.append("" if math.isnan(v) else f"{v:.17g}")
                    else:
                        cells.append(str(v))
                fh.write(",".join(cells) + "\n")

    def write_manifest(self, path) -> None:
        manifest = {
            "config": self.config.to_dict(),
            "version": _version_string(),
            "wall_seconds": self.wall_seconds,
            "n_cells": len(self.cells),
        }
        with open(path, "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")


def _version_string() -> str:
    import subprocess

    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=os.path.dirname(__file__),
        )
        if out.returncode == 0:
            return f"looptrust {__version__} ({out.stdout.strip()})"
    except OSError:
        pass
    return f"looptrust {__version__}"


def _mean_or_nan(values: list[float]) -> float:
    return float(np.mean(values)) if values else float("nan")


def _se_or_nan(values: list[float]) -> float:
    if len(values) < 2:
        return float("nan")
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def _coverage_stats(flags: list[bool]) -> tuple[float, float]:
    if not flags:
        return float("nan"), float("nan")
    p = float(np.mean(flags))
    return p, math.sqrt(p * (1.0 - p) / len(flags))


def _run_replicates(fn, n, threads):
    if threads is None:
        threads = min(os.cpu_count() or 1, 8)
    if threads <= 1 or n == 1:
        return [fn(r) for r in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def edge_banded_labeling(labeling: PartitionLabeling, band_px: int = 1) -> PartitionLabeling:
    """Mark pixels within ``band_px`` of a partition boundary as edge pixels.

    Mimics an edge-detected segmentation whose regions are correct: the
    returned labeling keeps the region labels and roles but holds out a band
    straddling every boundary (the edge stratum for the bootstrap).
    """
    lab = labeling.label
    interface = np.zeros(lab.shape, dtype=bool)
    interface[:, :-1] |= lab[:, :-1] != lab[:, 1:]
    interface[:, 1:] |= lab[:, :-1] != lab[:, 1:]
    interface[:-1, :] |= lab[:-1, :] != lab[1:, :]
    interface[1:, :] |= lab[:-1, :] != lab[1:, :]
    if band_px > 1:
        from scipy import ndimage

        interface = ndimage.binary_dilation(
            interface, structure=np.ones((3, 3), dtype=bool), iterations=band_px - 1
        )
    new_label = lab.copy()
    new_label[interface] = EDGE_LABEL
    return PartitionLabeling(new_label, dict(labeling.roles))


def misclassified_segmentation(
    geometry: RingGeometry, n_misclassified: int = 6
) -> tuple[EdgeSet, PartitionLabeling]:
    """A deliberately wrong segmentation of the standard ring.

    Single-pixel edge contours trace the outermost and innermost bands of the
    loop; a notch in the inner contour pushes ``n_misclassified`` interior
    pixels (one row, adjacent to the contour) onto the loop side.  All
    misclassified pixels neighbor the edge set, as the repair step assumes.
    """
    w, h = geometry.width, geometry.height
    cx, cy = w // 2, h // 2
    he, t = geometry.outer_half_extent, geometry.thickness
    if t < 3:
        raise ValueError("edge contours need thickness >= 3")
    inner = he - t + 1  # innermost loop band
    if n_misclassified > 2 * (he - t) - 3:
        raise ValueError("notch too wide for the interior")

    ys, xs = np.mgrid[0:h, 0:w]
    cheb = np.maximum(np.abs(xs - cx), np.abs(ys - cy))
    edge = (cheb == he) | (cheb == inner)
    label = np.full((h, w), EDGE_LABEL, dtype=np.int32)
    label[cheb > he] = 0
    label[(cheb < he) & (cheb > inner)] = 1
    label[cheb < inner] = 2

    if n_misclassified > 0:
        x0 = cx - (n_misclassified // 2)
        cols = np.arange(x0, x0 + n_misclassified)
        top = cy - inner
        # open the contour over the notch; it dips two rows into the interior
        edge[top, cols] = False
        label[top, cols] = 1  # these are true loop-band pixels, correctly loop
        label[top + 1, cols] = 1  # true interior pixels misclassified into the loop
        edge[top + 2, cols] = True
        label[top + 2, cols] = EDGE_LABEL
        for xconn in (x0 - 1, x0 + n_misclassified):
            edge[top + 1, xconn] = True
            label[top + 1, xconn] = EDGE_LABEL

    roles = {0: Role.background(), 1: Role.loop(1), 2: Role.interior(1)}
    return EdgeSet(edge), PartitionLabeling(label, roles)


# ---------------------------------------------------------------------------
# Study drivers
# ---------------------------------------------------------------------------


def _partda_record(image, labeling, truth, alpha):
    """(mean_death, mean_birth, covered, area) from the partition estimates."""
    stats_int = partition_stats(image, labeling, Role.interior(1))
    stats_loop = partition_stats(image, labeling, Role.loop(1))
    try:
        region = confidence_region(stats_int, stats_loop, alpha)
        covered = region.contains(truth)
        area = region.area
    except DegenerateRegionError:
        covered = (stats_int.mean, stats_loop.mean) == truth
        area = 0.0
    return stats_int.mean, stats_loop.mean, covered, area


def run_coverage_study(config: StudyConfig) -> StudyResult:
    if config.study != "coverage":
        raise ValueError("config.study must be 'coverage'")
    t_start = time.time()
    study_id = _STUDY_IDS["coverage"]
    truth = (config.mu_interior, config.mu_loop)
    geom = config.geometry

    want_t = "tTDA" in config.methods
    want_par = "parTDA" in config.methods
    want_s = "sTDA" in config.methods

    smoothed_truth = None
    op = None
    boot_labeling_template = None
    if want_s:
        op = smoothing_operator(geom.width, geom.height, config.stda_degree, config.stda_bandwidth)
        clean_spec = geom.spec(config.mu_background, config.mu_interior, config.mu_loop, 0.0)
        clean_img, clean_lab = _generate(clean_spec, 0)
        smoothed_clean = GrayImage(
            (op @ clean_img.intensity.ravel()).reshape(geom.height, geom.width)
        )
        sp = compute_diagram(build(smoothed_clean)).most_persistent(1)
        if sp is None:
            raise RuntimeError("smoothed noiseless pattern has no loop; adjust smoothing")
        smoothed_truth = (sp.death, sp.birth)
        boot_labeling_template = edge_banded_labeling(clean_lab, config.stda_edge_band)

    cells = []
    for c_idx, sigma in enumerate(config.sigmas):
        spec = geom.spec(config.mu_background, config.mu_interior, config.mu_loop, sigma)

        def one(r, _spec=spec, _c=c_idx, _sigma=sigma):
            rec = {}
            img, lab = _generate(_spec, child_seed(config.master_seed, study_id, _c, r, 0))
            if want_t or want_par:
                diagram = compute_diagram(build(img))
                match = match_loops(diagram, lab, img)
                point_idx = match.point_of_loop(1)
                if point_idx is None:
                    rec["ttda"] = None
                    rec["par"] = (float("nan"), float("nan"), False, float("nan"))
                else:
                    p = diagram.points[point_idx]
                    rec["ttda"] = (p.death, p.birth)
                    if want_par:
                        rec["par"] = _partda_record(img, lab, truth, config.alpha)
            if want_s:
                boot_lab = boot_labeling_template
                values = img.intensity.ravel()
                strata = _strata(boot_lab)
                B = config.stda_bootstrap
                cols = np.empty((values.size, B), dtype=np.float64, order="F")
                base_seed = child_seed(config.master_seed, study_id, _c, r, 1)
                for b in range(B):
                    col = values.copy()
                    _resample_into(col, values, strata, child_rng(base_seed, b))
                    cols[:, b] = col
                smoothed_base = op @ values
                dists = np.abs(op @ cols - smoothed_base[:, None]).max(axis=0)
                rank = int(math.ceil((1.0 - config.alpha) * B))
                c_n = float(np.sort(dists)[rank - 1])
                s_img = GrayImage(smoothed_base.reshape(img.intensity.shape))
                s_point = compute_diagram(build(s_img)).most_persistent(1)
                if s_point is None:
                    rec["stda"] = (float("nan"), float("nan"), False, (2 * c_n) ** 2, c_n, False)
                else:
                    covered = (
                        abs(s_point.death - smoothed_truth[0]) <= c_n
                        and abs(s_point.birth - smoothed_truth[1]) <= c_n
                    )
                    significant = s_point.persistence / 2.0 > c_n
                    rec["stda"] = (
                        s_point.death,
                        s_point.birth,
                        covered,
                        (2 * c_n) ** 2,
                        c_n,
                        significant,
                    )
            return rec

        records = _run_replicates(one, config.replicates, config.threads)

        if want_t:
            hits = [r["ttda"] for r in records if r["ttda"] is not None]
            cells.append(
                CellResult(
                    study="coverage",
                    factor_name="sigma",
                    factor_value=sigma,
                    sigma=sigma,
                    method="tTDA",
                    variant="",
                    n_replicates=config.replicates,
                    n_missing=config.replicates - len(hits),
                    mean_death=_mean_or_nan([h[0] for h in hits]),
                    mean_birth=_mean_or_nan([h[1] for h in hits]),
                    bias_death=_mean_or_nan([h[0] - truth[0] for h in hits]),
                    bias_birth=_mean_or_nan([h[1] - truth[1] for h in hits]),
                    coverage=float("nan"),
                    coverage_se=float("nan"),
                    mean_area=float("nan"),
                    area_se=float("nan"),
                    mean_p_b=float("nan"),
                )
            )
        if want_par:
            recs = [r["par"] for r in records]
            covered = [r[2] for r in recs]
            areas = [r[3] for r in recs if not math.isnan(r[3])]
            cov, cov_se = _coverage_stats(covered)
            cells.append(
                CellResult(
                    study="coverage",
                    factor_name="sigma",
                    factor_value=sigma,
                    sigma=sigma,
                    method="parTDA",
                    variant="",
                    n_replicates=config.replicates,
                    n_missing=sum(1 for r in recs if math.isnan(r[0])),
                    mean_death=_mean_or_nan([r[0] for r in recs if not math.isnan(r[0])]),
                    mean_birth=_mean_or_nan([r[1] for r in recs if not math.isnan(r[1])]),
                    bias_death=_mean_or_nan(
                        [r[0] - truth[0] for r in recs if not math.isnan(r[0])]
                    ),
                    bias_birth=_mean_or_nan(
                        [r[1] - truth[1] for r in recs if not math.isnan(r[1])]
                    ),
                    coverage=cov,
                    coverage_se=cov_se,
                    mean_area=_mean_or_nan(areas),
                    area_se=_se_or_nan(areas),
                    mean_p_b=float("nan"),
                )
            )
        if want_s:
            recs = [r["stda"] for r in records]
            cov, cov_se = _coverage_stats([r[2] for r in recs])
            areas = [r[3] for r in recs]
            cells.append(
                CellResult(
                    study="coverage",
                    factor_name="sigma",
                    factor_value=sigma,
                    sigma=sigma,
                    method="sTDA",
                    variant="",
                    n_replicates=config.replicates,
                    n_missing=sum(1 for r in recs if math.isnan(r[0])),
                    mean_death=_mean_or_nan([r[0] for r in recs if not math.isnan(r[0])]),
                    mean_birth=_mean_or_nan([r[1] for r in recs if not math.isnan(r[1])]),
                    bias_death=_mean_or_nan(
                        [r[0] - smoothed_truth[0] for r in recs if not math.isnan(r[0])]
                    ),
                    bias_birth=_mean_or_nan(
                        [r[1] - smoothed_truth[1] for r in recs if not math.isnan(r[1])]
                    ),
                    coverage=cov,
                    coverage_se=cov_se,
                    mean_area=_mean_or_nan(areas),
                    area_se=_se_or_nan(areas),
                    mean_p_b=float("nan"),
                )
            )
    return StudyResult(config, tuple(cells), time.time() - t_start)


def _generate(spec: RingSpec, seed: int):
    return generate(spec, seed)


def _bias_cells(config: StudyConfig):
    """(factor_name, factor_value, geometry) for each bias-study cell."""
    cells = []
    for t in config.thickness_levels:
        geom = RingGeometry(
            config.thickness_dimension,
            config.thickness_dimension,
            config.thickness_half_extent,
            int(t),
        )
        cells.append(("thickness", float(t), geom))
    for d in config.dimension_levels:
        d = int(d)
        he = max(3, round(0.3 * d))
        t = max(2, round(0.1 * d))
        cells.append(("dimension", float(d), RingGeometry(d, d, he, t)))
    return cells


def run_bias_study(config: StudyConfig) -> StudyResult:
    if config.study != "bias":
        raise ValueError("config.study must be 'bias'")
    t_start = time.time()
    study_id = _STUDY_IDS["bias"]
    truth = (config.mu_interior, config.mu_loop)
    sigma = config.sigmas[0]

    cells = []
    for c_idx, (fname, fval, geom) in enumerate(_bias_cells(config)):
        spec = geom.spec(config.mu_background, config.mu_interior, config.mu_loop, sigma)

        def one(r, _spec=spec, _c=c_idx):
            img, lab = _generate(_spec, child_seed(config.master_seed, study_id, _c, r, 0))
            diagram = compute_diagram(build(img))
            match = match_loops(diagram, lab, img)
            point_idx = match.point_of_loop(1)
            out = {"ttda": None, "p_b": float("nan")}
            if point_idx is not None:
                p = diagram.points[point_idx]
                out["ttda"] = (p.death, p.birth)
                loop_mask = lab.mask_of_role(Role.loop(1))
                n_b = int(loop_mask.sum())
                v_birth = int((img.intensity[loop_mask] >= p.birth).sum())
                out["p_b"] = 1.0 - v_birth / n_b
            stats_int = partition_stats(img, lab, Role.interior(1))
            stats_loop = partition_stats(img, lab, Role.loop(1))
            out["par"] = (stats_int.mean, stats_loop.mean)
            return out

        records = _run_replicates(one, config.replicates, config.threads)
        hits = [r["ttda"] for r in records if r["ttda"] is not None]
        p_bs = [r["p_b"] for r in records if not math.isnan(r["p_b"])]
        if "tTDA" in config.methods:
            cells.append(
                CellResult(
                    study="bias",
                    factor_name=fname,
                    factor_value=fval,
                    sigma=sigma,
                    method="tTDA",
                    variant="",
                    n_replicates=config.replicates,
                    n_missing=config.replicates - len(hits),
                    mean_death=_mean_or_nan([h[0] for h in hits]),
                    mean_birth=_mean_or_nan([h[1] for h in hits]),
                    bias_death=_mean_or_nan([h[0] - truth[0] for h in hits]),
                    bias_birth=_mean_or_nan([h[1] - truth[1] for h in hits]),
                    coverage=float("nan"),
                    coverage_se=float("nan"),
                    mean_area=float("nan"),
                    area_se=float("nan"),
                    mean_p_b=_mean_or_nan(p_bs),
                )
            )
        if "parTDA" in config.methods:
            pars = [r["par"] for r in records]
            cells.append(
                CellResult(
                    study="bias",
                    factor_name=fname,
                    factor_value=fval,
                    sigma=sigma,
                    method="parTDA",
                    variant="",
                    n_replicates=config.replicates,
                    n_missing=0,
                    mean_death=_mean_or_nan([p[0] for p in pars]),
                    mean_birth=_mean_or_nan([p[1] for p in pars]),
                    bias_death=_mean_or_nan([p[0] - truth[0] for p in pars]),
                    bias_birth=_mean_or_nan([p[1] - truth[1] for p in pars]),
                    coverage=float("nan"),
                    coverage_se=float("nan"),
                    mean_area=float("nan"),
                    area_se=float("nan"),
                    mean_p_b=float("nan"),
                )
            )
    return StudyResult(config, tuple(cells), time.time() - t_start)


def run_misclassification_study(config: StudyConfig) -> StudyResult:
    if config.study != "misclassification":
        raise ValueError("config.study must be 'misclassification'")
    t_start = time.time()
    study_id = _STUDY_IDS["misclassification"]
    truth = (config.mu_interior, config.mu_loop)
    geom = config.geometry
    edges, bad_labeling = misclassified_segmentation(geom, config.misclassified_pixels)

    cells = []
    for c_idx, sigma in enumerate(config.sigmas):
        spec = geom.spec(config.mu_background, config.mu_interior, config.mu_loop, sigma)

        def one(r, _spec=spec, _c=c_idx):
            img, _ = _generate(_spec, child_seed(config.master_seed, study_id, _c, r, 0))
            mis = _partda_record(img, bad_labeling, truth, config.alpha)
            fixed_edges = correct_misclassified(edges, img, bad_labeling)
            moved = fixed_edges.mask & ~edges.mask
            fixed_label = bad_labeling.label.copy()
            fixed_label[moved] = EDGE_LABEL
            fixed_labeling = PartitionLabeling(fixed_label, dict(bad_labeling.roles))
            cor = _partda_record(img, fixed_labeling, truth, config.alpha)
            return mis, cor

        records = _run_replicates(one, config.replicates, config.threads)
        for variant, pos in (("misclassified", 0), ("corrected", 1)):
            recs = [r[pos] for r in records]
            cov, cov_se = _coverage_stats([x[2] for x in recs])
            areas = [x[3] for x in recs if not math.isnan(x[3])]
            cells.append(
                CellResult(
                    study="misclassification",
                    factor_name="sigma",
                    factor_value=sigma,
                    sigma=sigma,
                    method="parTDA",
                    variant=variant,
                    n_replicates=config.replicates,
                    n_missing=0,
                    mean_death=_mean_or_nan([x[0] for x in recs]),
                    mean_birth=_mean_or_nan([x[1] for x in recs]),
                    bias_death=_mean_or_nan([x[0] - truth[0] for x in recs]),
                    bias_birth=_mean_or_nan([x[1] - truth[1] for x in recs]),
                    coverage=cov,
                    coverage_se=cov_se,
                    mean_area=_mean_or_nan(areas),
                    area_se=_se_or_nan(areas),
                    mean_p_b=float("nan"),
                )
            )
    return StudyResult(config, tuple(cells), time.time() - t_start)


def run_study(config: StudyConfig) -> StudyResult:
    return {
        "coverage": run_coverage_study,
        "bias": run_bias_study,
        "misclassification": run_misclassification_study,
    }[config.study](config)
