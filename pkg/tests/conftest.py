import numpy as np
import pytest

from toposeg import BinaryMask, GrayImage, compute_diagram
from toposeg.losses import _correlate_symm, _stage_forward


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def generic_image(rng, shape, lo=0.1, hi=0.9):
    """All-distinct, non-lattice intensities with a guaranteed value gap.

    A jittered lattice keeps the minimal gap above 1e-2 while avoiding the
    exact arithmetic coincidences an evenly spaced grid produces in filter
    responses.
    """
    n = shape[0] * shape[1]
    vals = np.linspace(lo, hi, n) + rng.uniform(-0.005, 0.005, n)
    return rng.permutation(vals).reshape(shape)


def preactivation_margin(fx, pixels: np.ndarray) -> float:
    """Smallest nonzero rectifier preactivation magnitude across stages.

    Finite-difference probes sit on a kink when a preactivation lies within
    the probe step of zero; test inputs are resampled until clear of that.
    """
    x = pixels[None]
    margin = np.inf
    for stage in fx.stages:
        if stage.relu:
            if x.shape[0] == 1:
                pre = np.stack([_correlate_symm(x[0], f) for f in stage.filters])
            else:
                pre = np.stack(
                    [_correlate_symm(x[i], f) for i, f in enumerate(stage.filters)]
                )
            nonzero = np.abs(pre[pre != 0])
            if nonzero.size:
                margin = min(margin, float(nonzero.min()))
        x, _ = _stage_forward(x, stage)
    return margin


def toy_ring() -> GrayImage:
    """3x3 image: border at 0.8, centre at 0.2 (one component, one hole)."""
    px = np.full((3, 3), 0.8)
    px[1, 1] = 0.2
    return GrayImage(px)


def broken_ring_fixture(size: int = 32, gap_value: float = 0.3):
    """(init, gt_image, gt_mask) for the ring-repair demonstration.

    The ground truth is a binary annulus; the initial prediction dims an
    angular sector to ``gap_value`` so the binarized ring is broken. The
    sector is placed a fixed angle away from where the ground-truth loop's
    creation cell sits, which keeps the two loops' creation cells close
    enough to be matched to each other rather than to the diagonal.
    """
    yy, xx = np.mgrid[0:size, 0:size]
    cy = cx = (size - 1) / 2.0
    radius = np.hypot(yy - cy, xx - cx)
    ring = (radius >= 9) & (radius < 12)
    gt = GrayImage(ring.astype(float))

    loop = [p for p in compute_diagram(gt).pairs if p.dim == 1][0]
    r0, c0 = loop.creation_cell
    theta0 = np.arctan2(r0 - cy, c0 - cx) + 0.5
    angles = np.arctan2(yy - cy, xx - cx)
    offset = np.abs(np.angle(np.exp(1j * (angles - theta0))))
    gap = ring & (offset < 0.12)

    init = ring.astype(float)
    init[gap] = gap_value
    return GrayImage(init), gt, BinaryMask(ring)
