"""Loading RGBD image groups from disk and writing saliency rasters.

A group directory looks like::

    group/
      rgb/    a.png b.png ...
      depth/  a.png b.png ...
      gt/     (optional) binary masks
      intra/  (optional) precomputed intra-saliency maps

Files are matched across folders by stem.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import (DimensionMismatch, EmptyGroup, ImageTooSmall, IoError, MissingDepth,
                     MissingIntra, NoGroundTruth)

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".bmp", ".jpg", ".jpeg", ".tif", ".tiff"}
MIN_SIDE = 16


@dataclass(frozen=True)
class RgbdImage:
    id: str
    rgb: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float64 in [0, 1]

    def __post_init__(self):
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise DimensionMismatch(f"{self.id}: rgb must be HxWx3, got {self.rgb.shape}")
        if self.depth.shape != self.rgb.shape[:2]:
            raise DimensionMismatch(
                f"{self.id}: depth {self.depth.shape} vs rgb {self.rgb.shape[:2]}")
        if min(self.rgb.shape[:2]) < MIN_SIDE:
            raise ImageTooSmall(f"{self.id}: sides must be >= {MIN_SIDE}")

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]


@dataclass(frozen=True)
class ImageGroup:
    images: list
    ground_truth: list | None = None
    intra_maps: list | None = None
    name: str = "group"

    def __post_init__(self):
        for label, extra in (("ground_truth", self.ground_truth), ("intra_maps", self.intra_maps)):
            if extra is None:
                continue
            if len(extra) != len(self.images):
                raise DimensionMismatch(f"{label}: {len(extra)} entries for {len(self.images)} images")
            for img, arr in zip(self.images, extra):
                if arr.shape != img.depth.shape:
                    raise DimensionMismatch(f"{label} for {img.id}: {arr.shape} vs {img.depth.shape}")

    def __len__(self):
        return len(self.images)

    @property
    def ids(self) -> list[str]:
        return [img.id for img in self.images]


def normalize_depth(raw: np.ndarray) -> np.ndarray:
    """Scale an integer raster to [0, 1] by the maximum of its bit depth."""
    raw = np.asarray(raw)
    if raw.size == 0:
        raise ValueError("empty raster")
    if raw.dtype == np.uint8:
        return raw.astype(np.float64) / 255.0
    if raw.dtype == np.uint16:
        return raw.astype(np.float64) / 65535.0
    if np.issubdtype(raw.dtype, np.floating):
        return np.clip(raw.astype(np.float64), 0.0, 1.0)
    raise ValueError(f"unsupported depth dtype {raw.dtype}")


def _index_folder(folder: Path) -> dict[str, Path]:
    if not folder.is_dir():
        return {}
    return {p.stem: p for p in sorted(folder.iterdir())
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES}


def _read_gray(path: Path) -> np.ndarray:
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise IoError(f"cannot read {path}")
    if arr.ndim == 3:
        # some datasets store depth as 3 identical channels
        arr = arr[..., 0] if arr.shape[2] in (3, 4) else arr.mean(axis=2)
    return arr


def read_rgb(path) -> np.ndarray:
    arr = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if arr is None:
        raise IoError(f"cannot read {path}")
    return cv2.cvtColor(arr, cv2.COLOR_BGR2RGB)


def binarize_mask(raw: np.ndarray) -> np.ndarray:
    if raw.dtype == np.uint16:
        return raw > 32767
    return raw > 127


def load_group(root, cfg=None) -> ImageGroup:
    root = Path(root)
    invert = bool(cfg is not None and cfg.invert_depth)
    rgb_files = _index_folder(root / "rgb")
    depth_files = _index_folder(root / "depth")
    gt_files = _index_folder(root / "gt")
    intra_files = _index_folder(root / "intra")

    stems = sorted(rgb_files)
    if len(stems) < 2:
        raise EmptyGroup(f"{root}: co-saliency needs at least 2 images, found {len(stems)}")

    images, gts, intras = [], [], []
    for stem in stems:
        if stem not in depth_files:
            raise MissingDepth(stem)
        rgb = read_rgb(rgb_files[stem])
        depth = normalize_depth(_read_gray(depth_files[stem]))
        if depth.shape != rgb.shape[:2]:
            raise DimensionMismatch(stem)
        if invert:
            depth = 1.0 - depth
        images.append(RgbdImage(stem, rgb, depth))
        if gt_files:
            if stem not in gt_files:
                raise NoGroundTruth(stem)
            gts.append(binarize_mask(_read_gray(gt_files[stem])))
        if intra_files:
            if stem not in intra_files:
                raise MissingIntra(stem)
            intras.append(normalize_depth(_read_gray(intra_files[stem])))

    log.debug("loaded %d images from %s", len(images), root)
    return ImageGroup(images, gts or None, intras or None, name=root.name)


def quantize(values: np.ndarray) -> np.ndarray:
    """Round [0, 1] values to 8 bits, halves rounding up."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(255.0 * v + 0.5).astype(np.uint8)


def _imwrite(path: Path, arr: np.ndarray):
    path = Path(path)
    if not path.parent.is_dir():
        raise IoError(f"directory does not exist: {path.parent}")
    try:
        ok = cv2.imwrite(str(path), arr)
    except cv2.error as exc:
        raise IoError(str(exc)) from exc
    if not ok:
        raise IoError(f"could not write {path}")


def write_saliency_map(smap: np.ndarray, path) -> None:
    smap = np.asarray(smap, dtype=np.float64)
    if smap.size and (smap.min() < 0 or smap.max() > 1):
        raise ValueError("saliency values must lie in [0, 1]")
    _imwrite(Path(path), quantize(smap))


def read_saliency_map(path) -> np.ndarray:
    return normalize_depth(_read_gray(Path(path)))


def write_label_raster(labels: np.ndarray, path) -> None:
    if labels.max() > 65535:
        raise ValueError("too many labels for a 16-bit raster")
    _imwrite(Path(path), labels.astype(np.uint16))


def write_rgb(rgb: np.ndarray, path) -> None:
    _imwrite(Path(path), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))


def write_gray(arr: np.ndarray, path) -> None:
    _imwrite(Path(path), np.asarray(arr))


def discover_groups(root) -> list[Path]:
    """A directory holding rgb/ is one group; otherwise each such child is."""
    root = Path(root)
    if (root / "rgb").is_dir():
        return [root]
    return sorted(p for p in root.iterdir() if p.is_dir() and (p / "rgb").is_dir())
