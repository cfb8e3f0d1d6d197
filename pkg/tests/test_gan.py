import numpy as np
import pytest

from toposeg import (
    GanWeights,
    GrayImage,
    discriminator_objective,
    generator_objective,
)


def identity(img):
    return img


def invert(img):
    return GrayImage(1.0 - img.pixels)


def const_disc(value):
    return lambda img: np.full((img.height, img.width), float(value))


class TestGeneratorObjective:
    def test_identity_generators_zero_everything(self, rng):
        img = GrayImage(rng.random((5, 5)))
        out = generator_objective(img, identity, identity, const_disc(1.0))
        assert out.adv == 0.0
        assert out.cycle == 0.0
        assert out.identity == 0.0
        assert out.total == 0.0

    def test_hand_worked_inversion(self):
        img = GrayImage(np.full((4, 4), 0.25))
        out = generator_objective(img, identity, invert, const_disc(1.0))
        assert np.isclose(out.cycle, 0.5)
        assert np.isclose(out.identity, 0.5)
        assert np.isclose(out.total, 10.0 * 0.5 + 0.5 * 0.5)

    def test_zero_discriminator_gives_unit_adv(self, rng):
        img = GrayImage(rng.random((3, 3)))
        out = generator_objective(img, identity, identity, const_disc(0.0))
        assert out.adv == 1.0

    def test_affine_in_weights(self, rng):
        img = GrayImage(rng.random((4, 4)))
        base = generator_objective(img, identity, invert, const_disc(0.5))
        for lc, li in [(0.0, 0.0), (3.0, 1.0), (10.0, 0.5)]:
            out = generator_objective(
                img, identity, invert, const_disc(0.5), GanWeights(lc, li)
            )
            assert np.isclose(out.total, base.adv + lc * base.cycle + li * base.identity)

    def test_identity_generator_override(self, rng):
        img = GrayImage(rng.random((4, 4)))
        out = generator_objective(
            img, identity, invert, const_disc(1.0), identity_via=identity
        )
        assert out.identity == 0.0
        assert out.cycle > 0.0

    def test_mirrored_roles_same_code_path(self, rng):
        a = GrayImage(rng.random((4, 4)))
        b = GrayImage(rng.random((4, 4)))
        out_a = generator_objective(a, invert, identity, const_disc(0.7))
        out_b = generator_objective(b, invert, identity, const_disc(0.7))
        assert out_a.adv == out_b.adv  # constant discriminator
        assert np.isclose(out_a.cycle, np.abs(a.pixels - (1 - a.pixels)).mean())
        assert np.isclose(out_b.cycle, np.abs(b.pixels - (1 - b.pixels)).mean())

    def test_dimension_change_rejected(self, rng):
        img = GrayImage(rng.random((4, 4)))
        shrink = lambda im: GrayImage(im.pixels[:2, :2])
        with pytest.raises(ValueError):
            generator_objective(img, shrink, identity, const_disc(1.0))

    def test_nonnegative(self, rng):
        img = GrayImage(rng.random((4, 4)))
        out = generator_objective(img, invert, invert, const_disc(0.3))
        assert min(out.adv, out.cycle, out.identity, out.total) >= 0.0


class TestDiscriminatorObjective:
    def test_constant_one(self, rng):
        real = GrayImage(rng.random((3, 3)))
        fake = GrayImage(rng.random((3, 3)))
        assert discriminator_objective(real, fake, const_disc(1.0)) == 0.5

    def test_constant_zero(self, rng):
        real = GrayImage(rng.random((3, 3)))
        fake = GrayImage(rng.random((3, 3)))
        assert discriminator_objective(real, fake, const_disc(0.0)) == 0.5

    def test_perfect_discriminator(self, rng):
        real = GrayImage(np.ones((3, 3)))
        fake = GrayImage(np.zeros((3, 3)))
        perfect = lambda img: np.full((3, 3), 1.0 if img.pixels.mean() > 0.5 else 0.0)
        assert discriminator_objective(real, fake, perfect) == 0.0


class TestGanWeights:
    def test_defaults(self):
        w = GanWeights()
        assert w.lambda_cycle == 10.0
        assert w.lambda_identity == 0.5

    def test_validation(self):
        with pytest.raises(ValueError):
            GanWeights(lambda_cycle=-1.0)
