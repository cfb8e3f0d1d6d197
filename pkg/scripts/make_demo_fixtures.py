#!/usr/bin/env python3
"""Generate the demo fixture images used by the repair experiment.

Writes a binary ring ground truth, a broken-ring initial prediction (an
angular sector dimmed to a sub-threshold value), and a small textured
sample image. The gap sector is placed a fixed angle away from the cell
where the ground-truth loop is created, which keeps the two loops close
enough spatially to be matched to each other.
"""

import argparse
from pathlib import Path

import numpy as np

from toposeg import BinaryMask, GrayImage, betti_numbers, compute_diagram, save_pgm


def ring_pair(size: int, gap_value: float) -> tuple[GrayImage, GrayImage]:
    yy, xx = np.mgrid[0:size, 0:size]
    cy = cx = (size - 1) / 2.0
    radius = np.hypot(yy - cy, xx - cx)
    band = (radius >= size * 9 / 32) & (radius < size * 12 / 32)
    gt = GrayImage(band.astype(float))

    loop = [p for p in compute_diagram(gt).pairs if p.dim == 1][0]
    r0, c0 = loop.creation_cell
    theta0 = np.arctan2(r0 - cy, c0 - cx) + 0.5
    angles = np.arctan2(yy - cy, xx - cx)
    offset = np.abs(np.angle(np.exp(1j * (angles - theta0))))
    gap = band & (offset < 4.0 / size)

    init = band.astype(float)
    init[gap] = gap_value
    broken = GrayImage(init)

    assert betti_numbers(BinaryMask(band))[1] == 1
    assert betti_numbers(BinaryMask(init >= 0.5))[1] == 0
    return broken, gt


def textured_sample(size: int, seed: int) -> GrayImage:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    waves = 0.5 + 0.3 * np.sin(yy / 3.0) * np.cos(xx / 5.0)
    return GrayImage(np.clip(waves + rng.normal(0, 0.05, (size, size)), 0, 1))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="fixtures")
    parser.add_argument("--size", type=int, default=32)
    parser.add_argument("--gap-value", type=float, default=0.3)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    broken, gt = ring_pair(args.size, args.gap_value)
    save_pgm(broken, out / "broken_ring.pgm")
    save_pgm(gt, out / "ring_gt.pgm")
    save_pgm(textured_sample(args.size, args.seed), out / "texture.pgm")
    print(f"wrote broken_ring.pgm, ring_gt.pgm, texture.pgm to {out}")


if __name__ == "__main__":
    main()
