"""Synthetic RGBD groups with a known common object, for tests and demos."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .dataset_io import ImageGroup, RgbdImage, quantize

COMMON_COLOR = (210, 30, 35)
DISTRACTOR_COLORS = [(40, 70, 220), (230, 210, 40), (40, 200, 210), (200, 60, 200),
                     (250, 140, 20)]
BACKGROUND_COLORS = [(120, 150, 110), (150, 140, 120), (110, 130, 150), (140, 150, 130),
                     (135, 125, 140)]


def _place(rng, size, side, taken, margin=4):
    for _ in range(1000):
        y, x = rng.integers(margin, size - side - margin, size=2)
        box = (y, x, y + side, x + side)
        if all(box[2] + margin <= t[0] or t[2] + margin <= box[0] or
               box[3] + margin <= t[1] or t[3] + margin <= box[1] for t in taken):
            return box
    raise RuntimeError("could not place object")


@dataclass
class SyntheticScene:
    group: ImageGroup
    distractors: list  # boolean disc mask per image

    @property
    def common(self) -> list:
        return self.group.ground_truth

    def background(self, i: int) -> np.ndarray:
        return ~(self.common[i] | self.distractors[i])


def make_synthetic(n_images: int = 3, size: int = 128, rng_seed: int = 0,
                   square: int = 36, blob_radius: int = 13) -> SyntheticScene:
    """Each image shows the same red square (nearer than the background) at a
    random position plus one distractor disc of an image-specific colour.

    Ground truth marks the square only.
    """
    rng = np.random.default_rng(rng_seed)
    images, gts, discs = [], [], []
    ys, xs = np.mgrid[0:size, 0:size] / size
    for i in range(n_images):
        base = np.array(BACKGROUND_COLORS[i % len(BACKGROUND_COLORS)], dtype=np.float64)
        noise = cv2.GaussianBlur(rng.normal(0, 1, (size, size, 3)), (0, 0), 3) * 25
        rgb = base + noise + 15 * (xs[..., None] - 0.5)
        depth = 0.25 + 0.15 * ys + 0.02 * cv2.GaussianBlur(rng.normal(0, 1, (size, size)), (0, 0), 2)

        sq = _place(rng, size, square, [])
        d = 2 * blob_radius
        blob = _place(rng, size, d, [sq])
        gt = np.zeros((size, size), dtype=bool)
        gt[sq[0]:sq[2], sq[1]:sq[3]] = True
        cy, cx = blob[0] + blob_radius, blob[1] + blob_radius
        disc = (np.mgrid[0:size, 0:size][0] - cy) ** 2 + (np.mgrid[0:size, 0:size][1] - cx) ** 2 \
            <= blob_radius ** 2

        rgb[gt] = np.array(COMMON_COLOR) + rng.normal(0, 4, (gt.sum(), 3))
        rgb[disc] = np.array(DISTRACTOR_COLORS[i % len(DISTRACTOR_COLORS)]) \
            + rng.normal(0, 4, (disc.sum(), 3))
        depth[gt] = 0.85
        depth[disc] = 0.5
        images.append(RgbdImage(f"img{i:02d}", np.clip(rgb, 0, 255).astype(np.uint8),
                                np.clip(depth, 0, 1)))
        gts.append(gt)
        discs.append(disc)
    return SyntheticScene(ImageGroup(images, gts, None, name="synthetic"), discs)


def make_synthetic_group(n_images: int = 3, size: int = 128, rng_seed: int = 0,
                         square: int = 36, blob_radius: int = 13) -> ImageGroup:
    return make_synthetic(n_images, size, rng_seed, square, blob_radius).group


def write_group(group: ImageGroup, root) -> Path:
    """Lay a group out on disk as rgb/ depth/ gt/ (and intra/ when present)."""
    root = Path(root)
    for sub in ("rgb", "depth"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(group.images):
        cv2.imwrite(str(root / "rgb" / f"{img.id}.png"), cv2.cvtColor(img.rgb, cv2.COLOR_RGB2BGR))
        cv2.imwrite(str(root / "depth" / f"{img.id}.png"), quantize(img.depth))
        if group.ground_truth is not None:
            (root / "gt").mkdir(exist_ok=True)
            cv2.imwrite(str(root / "gt" / f"{img.id}.png"),
                        group.ground_truth[i].astype(np.uint8) * 255)
        if group.intra_maps is not None:
            (root / "intra").mkdir(exist_ok=True)
            cv2.imwrite(str(root / "intra" / f"{img.id}.png"), quantize(group.intra_maps[i]))
    return root


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description="Write a synthetic RGBD group to disk.")
    parser.add_argument("out", type=Path)
    parser.add_argument("--images", type=int, default=3)
    parser.add_argument("--size", type=int, default=128)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    write_group(make_synthetic_group(args.images, args.size, args.seed), args.out)
