"""Per-image intra saliency at superpixel granularity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MissingIntra

SPATIAL_SCALE = 0.4


@dataclass(frozen=True)
class SaliencyMap:
    values: np.ndarray
    image_id: str = ""
    granularity: str = "superpixel"


def minmax(values, degenerate: float = 0.5) -> np.ndarray:
    """Rescale to [0, 1]; a constant input maps to `degenerate` everywhere."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi - lo <= 1e-12 * max(1.0, abs(hi)):
        return np.full_like(v, degenerate)
    return (v - lo) / (hi - lo)


def region_means(raster: np.ndarray, seg) -> np.ndarray:
    return np.bincount(seg.labels.ravel(), weights=raster.ravel(),
                       minlength=seg.n_regions) / seg.pixel_count


def ingest_intra(group, segs) -> list[SaliencyMap]:
    """Pool precomputed pixel maps into superpixels, then min-max per image."""
    if group.intra_maps is None:
        raise MissingIntra(f"group {group.name!r} has no precomputed intra maps")
    return [SaliencyMap(minmax(region_means(raster, seg)), img.id)
            for img, raster, seg in zip(group.images, group.intra_maps, segs)]


def fallback_intra(img, seg, lam: float) -> SaliencyMap:
    """Spatially weighted global Lab contrast, amplified by depth deviation.

    Used when no precomputed intra maps exist. `lam` is the image's depth
    confidence, so an uninformative depth map leaves the colour contrast alone.
    """
    lab = seg.mean_lab
    pos = seg.centroid
    color_dist = np.linalg.norm(lab[:, None, :] - lab[None, :, :], axis=-1)
    spatial = np.exp(-np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1) / SPATIAL_SCALE)
    contrast = (color_dist * spatial) @ seg.pixel_count.astype(np.float64)
    depth_gain = 1.0 + lam * np.abs(seg.mean_depth - img.depth.mean())
    return SaliencyMap(minmax(contrast * depth_gain), img.id)
