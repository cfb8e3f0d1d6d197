import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from toposeg import (
    BinaryMask,
    GrayImage,
    betti_curve,
    betti_numbers,
    compute_diagram,
    diagram_from_json,
    diagram_to_json,
    threshold_mask,
)

from conftest import toy_ring

LEVELS = st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0])
level_images = arrays(np.float64, (8, 8), elements=LEVELS)


class TestComputeDiagram:
    def test_single_peak(self):
        px = np.zeros((3, 3))
        px[1, 1] = 1.0
        d = compute_diagram(GrayImage(px))
        assert len(d.pairs) == 1
        (p,) = d.pairs
        assert p.dim == 0 and p.essential
        assert p.creation == 1.0 and p.destruction == 0.0
        assert p.creation_cell == (1, 1) and p.destruction_cell is None

    def test_constant_image(self):
        for c in (0.0, 0.4, 1.0):
            d = compute_diagram(GrayImage(np.full((4, 5), c)))
            assert len(d.pairs) == 1
            assert d.pairs[0].essential and d.pairs[0].creation == c

    def test_toy_ring(self):
        d = compute_diagram(toy_ring())
        dims = sorted(p.dim for p in d.pairs)
        assert dims == [0, 1]
        ess = [p for p in d.pairs if p.essential]
        assert len(ess) == 1 and ess[0].dim == 0 and ess[0].creation == 0.8
        loop = [p for p in d.pairs if p.dim == 1][0]
        assert loop.creation == 0.8 and loop.destruction == 0.2
        # agrees with the brute-force curve at every threshold
        curve = betti_curve(toy_ring())
        for t, counts in zip(curve.thresholds, curve.counts):
            assert d.alive_counts(t) == counts

    def test_exactly_one_essential(self, rng):
        for _ in range(20):
            img = GrayImage(rng.random((6, 6)))
            d = compute_diagram(img)
            ess = [p for p in d.pairs if p.essential]
            assert len(ess) == 1 and ess[0].dim == 0
            assert ess[0].destruction == 0.0

    def test_critical_values_match_cells(self, rng):
        img = GrayImage(rng.random((7, 5)))
        d = compute_diagram(img)
        for p in d.pairs:
            assert p.creation == img.pixels[p.creation_cell]
            if p.destruction_cell is not None:
                assert p.destruction == img.pixels[p.destruction_cell]
            assert p.creation >= p.destruction

    @given(px=level_images)
    @settings(max_examples=60, deadline=None)
    def test_oracle_consistency(self, px):
        img = GrayImage(px)
        d = compute_diagram(img)
        curve = betti_curve(img)
        for t, counts in zip(curve.thresholds, curve.counts):
            assert d.alive_counts(t) == counts

    @given(
        px=arrays(
            np.float64, (6, 6),
            elements=st.sampled_from(np.linspace(0.1, 0.8, 15).tolist()),
        )
    )
    @settings(max_examples=40, deadline=None)
    def test_affine_rescaling_covariance(self, px):
        img = GrayImage(px)
        mapped = GrayImage(0.5 * px + 0.1)
        d0 = compute_diagram(img)
        d1 = compute_diagram(mapped)
        assert len(d0.pairs) == len(d1.pairs)
        for a, b in zip(d0.pairs, d1.pairs):
            assert (a.dim, a.essential) == (b.dim, b.essential)
            assert a.creation_cell == b.creation_cell
            assert a.destruction_cell == b.destruction_cell
            assert np.isclose(b.creation, 0.5 * a.creation + 0.1)
            if not a.essential:
                assert np.isclose(b.destruction, 0.5 * a.destruction + 0.1)

    @given(px=level_images)
    @settings(max_examples=40, deadline=None)
    def test_pair_count_bounded_by_pixels(self, px):
        assert len(compute_diagram(GrayImage(px)).pairs) <= px.size

    def test_transpose_preserves_interval_multiset(self, rng):
        px = rng.choice([0.0, 0.3, 0.7, 1.0], size=(7, 7))
        d0 = compute_diagram(GrayImage(px))
        d1 = compute_diagram(GrayImage(px.T.copy()))
        sig = lambda d: sorted((p.dim, p.creation, p.destruction) for p in d.pairs)
        assert sig(d0) == sig(d1)

    def test_one_pixel_image(self):
        d = compute_diagram(GrayImage(np.array([[0.7]])))
        assert len(d.pairs) == 1 and d.pairs[0].essential


class TestBettiNumbers:
    def test_all_true(self):
        assert betti_numbers(BinaryMask(np.ones((4, 4), bool))) == (1, 0)

    def test_solid_ring(self):
        bits = np.ones((3, 3), bool)
        bits[1, 1] = False
        assert betti_numbers(BinaryMask(bits)) == (1, 1)

    def test_checkerboard_diagonal_connects(self):
        bits = np.array([[True, False], [False, True]])
        b0, b1 = betti_numbers(BinaryMask(bits))
        assert (b0, b1) == (1, 0)
        # Euler characteristic cross-check: two vertices, one diagonal edge
        assert b0 - b1 == 2 - 1

    def test_empty(self):
        assert betti_numbers(BinaryMask(np.zeros((3, 3), bool))) == (0, 0)

    def test_two_rings(self):
        bits = np.zeros((3, 7), bool)
        bits[:, :3] = True
        bits[1, 1] = False
        bits[:, 4:] = True
        bits[1, 5] = False
        assert betti_numbers(BinaryMask(bits)) == (2, 2)


class TestBettiCurve:
    def test_constant(self):
        c = betti_curve(GrayImage(np.full((3, 3), 0.6)))
        assert c.thresholds == (0.6,)
        assert c.counts == ((1, 0),)

    def test_toy_ring(self):
        c = betti_curve(toy_ring())
        assert c.thresholds == (0.8, 0.2)
        assert c.counts == ((1, 1), (1, 0))

    def test_thresholds_strictly_decreasing(self, rng):
        img = GrayImage(rng.choice([0.0, 0.5, 1.0], size=(5, 5)))
        c = betti_curve(img)
        assert all(a > b for a, b in zip(c.thresholds, c.thresholds[1:]))
        assert set(c.thresholds) == set(np.unique(img.pixels))


class TestSerialization:
    def test_roundtrip(self, rng):
        img = GrayImage(rng.random((5, 5)))
        d = compute_diagram(img)
        objs = json.loads(json.dumps(diagram_to_json(d)))
        back = diagram_from_json(objs, d.height, d.width)
        assert back.pairs == d.pairs

    def test_ordering(self, rng):
        d = compute_diagram(GrayImage(rng.random((6, 6))))
        objs = diagram_to_json(d)
        keys = [(o["dim"], -o["creation"], tuple(o["creation_cell"])) for o in objs]
        assert keys == sorted(keys)

    def test_repeated_calls_identical(self, rng):
        px = rng.random((6, 6))
        a = compute_diagram(GrayImage(px))
        b = compute_diagram(GrayImage(px))
        assert a.pairs == b.pairs
