"""Unpaired-translation objective values over caller-supplied mappings.

Generators and discriminators are plain callables; this module only
evaluates the least-squares adversarial, cycle-consistency and identity
terms. The mirrored objective for the opposite image domain is the same
function with the arguments swapped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .image import GrayImage

ImageMap = Callable[[GrayImage], GrayImage]
ScoreMap = Callable[[GrayImage], np.ndarray]


@dataclass(frozen=True)
class GanWeights:
    lambda_cycle: float = 10.0
    lambda_identity: float = 0.5

    def __post_init__(self):
        if self.lambda_cycle < 0.0 or self.lambda_identity < 0.0:
            raise ValueError("weights must be >= 0")


@dataclass(frozen=True)
class GeneratorObjective:
    adv: float
    cycle: float
    identity: float
    total: float


def _apply(mapping: ImageMap, img: GrayImage) -> GrayImage:
    out = mapping(img)
    if (out.height, out.width) != (img.height, img.width):
        raise ValueError("generator changed image dimensions")
    return out


def _mean_abs_diff(a: GrayImage, b: GrayImage) -> float:
    return float(np.abs(a.pixels - b.pixels).mean())


def generator_objective(
    real: GrayImage,
    gen_forward: ImageMap,
    gen_backward: ImageMap,
    disc: ScoreMap,
    weights: GanWeights | None = None,
    identity_via: ImageMap | None = None,
) -> GeneratorObjective:
    """Generator-side objective for one domain.

    adv scores the translated image against 1, cycle compares the
    round-trip reconstruction, identity passes the real image through the
    opposite generator (override with ``identity_via`` to use another
    mapping). total = adv + lambda_cycle * cycle + lambda_identity * identity.
    """
    weights = weights if weights is not None else GanWeights()
    fake = _apply(gen_forward, real)
    scores = np.asarray(disc(fake), dtype=np.float64)
    adv = float(((scores - 1.0) ** 2).mean())
    cycle = _mean_abs_diff(real, _apply(gen_backward, fake))
    identity_map = identity_via if identity_via is not None else gen_backward
    identity = _mean_abs_diff(real, _apply(identity_map, real))
    total = adv + weights.lambda_cycle * cycle + weights.lambda_identity * identity
    return GeneratorObjective(adv, cycle, identity, total)


def discriminator_objective(
    real: GrayImage, fake: GrayImage, disc: ScoreMap
) -> float:
    """Least-squares discriminator objective: real scored against 1, fake
    against 0, each halved."""
    real_scores = np.asarray(disc(real), dtype=np.float64)
    fake_scores = np.asarray(disc(fake), dtype=np.float64)
    return float(
        0.5 * ((real_scores - 1.0) ** 2).mean() + 0.5 * (fake_scores**2).mean()
    )
