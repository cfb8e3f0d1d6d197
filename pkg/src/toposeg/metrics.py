"""Segmentation quality metrics: confusion rates, centerline Dice, Betti errors.

Skeletons come from sequential thinning that only deletes simple pixels
(deletions that provably keep the local 8-foreground/4-background topology
intact), so component and loop counts are preserved by construction.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from .image import BinaryMask, GrayImage, threshold_mask
from .persistence import betti_numbers

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int


METRIC_NAMES = (
    "acc", "dice", "sp", "se", "pr", "f1", "mcc",
    "cldice", "betti0_err", "betti1_err",
)


@dataclass(frozen=True)
class MetricsRow:
    image: str
    acc: float
    dice: float
    sp: float
    se: float
    pr: float
    f1: float
    mcc: float
    cldice: float
    betti0_err: float
    betti1_err: float

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in METRIC_NAMES)


@dataclass(frozen=True, eq=False)
class MetricsReport:
    rows: tuple[MetricsRow, ...]
    mean: MetricsRow

    def to_csv(self) -> str:
        header = "image," + ",".join(METRIC_NAMES)
        lines = [header]
        for row in (*self.rows, self.mean):
            lines.append(row.image + "," + ",".join(repr(v) for v in row.values()))
        return "\n".join(lines) + "\n"

    def to_json_obj(self) -> dict:
        def rowdict(r: MetricsRow) -> dict:
            return {f.name: getattr(r, f.name) for f in fields(MetricsRow)}

        return {"rows": [rowdict(r) for r in self.rows], "mean": rowdict(self.mean)}


def confusion(pred: BinaryMask, gt: BinaryMask) -> Confusion:
    """Pixel counts with foreground as the positive class."""
    if pred.bits.shape != gt.bits.shape:
        raise ValueError("mask dimensions differ")
    p = pred.bits
    g = gt.bits
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = int(np.count_nonzero(~p & ~g))
    return Confusion(tp, fp, tn, fn)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def pixel_metrics(c: Confusion) -> dict[str, float]:
    """acc, dice, sp, se, pr, f1, mcc from counts; 0/0 ratios are 0."""
    tp, fp, tn, fn = float(c.tp), float(c.fp), float(c.tn), float(c.fn)
    n = tp + fp + tn + fn
    dice = _ratio(2 * tp, 2 * tp + fp + fn)
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / np.sqrt(den) if den else 0.0
    return {
        "acc": (tp + tn) / n,
        "dice": dice,
        "sp": _ratio(tn, tn + fp),
        "se": _ratio(tp, tp + fn),
        "pr": _ratio(tp, tp + fp),
        "f1": dice,
        "mcc": float(mcc),
    }


# ---------------------------------------------------------------------------
# Thinning
#
# A foreground pixel is simple when its 8-neighbourhood has exactly one
# foreground piece under 8-adjacency and exactly one background piece that
# is 4-adjacent to the centre; deleting such a pixel cannot split, merge,
# create or fill anything. The 256 neighbourhood configurations are
# precomputed into a lookup table.

_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))
_EDGE_SLOTS = (1, 3, 4, 6)  # offsets 4-adjacent to the centre


def _component_count(slots: list[int], connect8: bool) -> list[set[int]]:
    comps: list[set[int]] = []
    for s in slots:
        merged = {s}
        keep = []
        for comp in comps:
            linked = False
            for t in comp:
                dr = abs(_OFFSETS[s][0] - _OFFSETS[t][0])
                dc = abs(_OFFSETS[s][1] - _OFFSETS[t][1])
                if connect8:
                    linked = dr <= 1 and dc <= 1
                else:
                    linked = dr + dc == 1
                if linked:
                    break
            if linked:
                merged |= comp
            else:
                keep.append(comp)
        keep.append(merged)
        comps = keep
    return comps


def _build_simple_lut() -> tuple[np.ndarray, np.ndarray]:
    simple = np.zeros(256, dtype=np.bool_)
    n_fg = np.zeros(256, dtype=np.uint8)
    for code in range(256):
        fg = [i for i in range(8) if code >> i & 1]
        bg = [i for i in range(8) if not code >> i & 1]
        n_fg[code] = len(fg)
        fg_comps = _component_count(fg, connect8=True)
        bg_comps = [c for c in _component_count(bg, connect8=False)
                    if c & set(_EDGE_SLOTS)]
        simple[code] = len(fg_comps) == 1 and len(bg_comps) == 1
    return simple, n_fg


_SIMPLE_LUT, _NFG_LUT = _build_simple_lut()
_OFF_R = np.array([o[0] for o in _OFFSETS], dtype=np.int64)
_OFF_C = np.array([o[1] for o in _OFFSETS], dtype=np.int64)


@njit(cache=True)
def _thin_pass(mask, simple_lut, nfg_lut, off_r, off_c, dr, dc):
    h, w = mask.shape
    changed = 0
    for r in range(h):
        for c in range(w):
            if mask[r, c] == 0:
                continue
            rr = r + dr
            cc = c + dc
            if 0 <= rr < h and 0 <= cc < w and mask[rr, cc] != 0:
                continue  # not a border pixel in this direction
            code = 0
            for i in range(8):
                r2 = r + off_r[i]
                c2 = c + off_c[i]
                if 0 <= r2 < h and 0 <= c2 < w and mask[r2, c2] != 0:
                    code |= 1 << i
            if nfg_lut[code] >= 2 and simple_lut[code]:
                mask[r, c] = 0
                changed += 1
    return changed


def skeletonize(mask: BinaryMask) -> BinaryMask:
    """Thin to a unit-width 8-connected skeleton preserving (beta0, beta1).

    Directional sweeps (north, south, west, east borders) run until no
    simple non-endpoint pixel remains; deletions apply immediately, so the
    result is deterministic.
    """
    m = mask.bits.astype(np.uint8)
    dirs = ((-1, 0), (1, 0), (0, -1), (0, 1))
    while True:
        changed = 0
        for dr, dc in dirs:
            changed += _thin_pass(m, _SIMPLE_LUT, _NFG_LUT, _OFF_R, _OFF_C, dr, dc)
        if changed == 0:
            break
    return BinaryMask(m.astype(bool))


def cldice(pred: BinaryMask, gt: BinaryMask) -> float:
    """Centerline Dice: harmonic mean of skeleton-in-mask precision and
    sensitivity. Both masks empty scores 1, exactly one empty scores 0."""
    if pred.bits.shape != gt.bits.shape:
        raise ValueError("mask dimensions differ")
    skel_p = skeletonize(pred).bits
    skel_g = skeletonize(gt).bits
    p_any = bool(skel_p.any())
    g_any = bool(skel_g.any())
    if not p_any and not g_any:
        return 1.0
    if not p_any or not g_any:
        return 0.0
    tprec = np.count_nonzero(skel_p & gt.bits) / np.count_nonzero(skel_p)
    tsens = np.count_nonzero(skel_g & pred.bits) / np.count_nonzero(skel_g)
    if tprec + tsens == 0.0:
        return 0.0
    return 2.0 * tprec * tsens / (tprec + tsens)


def betti_error(pred: BinaryMask, gt: BinaryMask) -> tuple[int, int]:
    """Absolute whole-image component/loop count differences."""
    if pred.bits.shape != gt.bits.shape:
        raise ValueError("mask dimensions differ")
    p0, p1 = betti_numbers(pred)
    g0, g1 = betti_numbers(gt)
    return abs(p0 - g0), abs(p1 - g1)


def betti_error_tiled(
    pred: BinaryMask, gt: BinaryMask, tile: int
) -> tuple[float, float]:
    """Betti errors averaged over a regular tiling (ragged edges included)."""
    if tile < 1:
        raise ValueError("tile must be >= 1")
    if pred.bits.shape != gt.bits.shape:
        raise ValueError("mask dimensions differ")
    h, w = pred.bits.shape
    e0s = []
    e1s = []
    for r in range(0, h, tile):
        for c in range(0, w, tile):
            sub_p = BinaryMask(pred.bits[r : r + tile, c : c + tile])
            sub_g = BinaryMask(gt.bits[r : r + tile, c : c + tile])
            e0, e1 = betti_error(sub_p, sub_g)
            e0s.append(e0)
            e1s.append(e1)
    return float(np.mean(e0s)), float(np.mean(e1s))


def _evaluate_one(
    image_id: str,
    pred: GrayImage,
    gt: BinaryMask,
    bin_threshold: float,
    betti_tile: int | None,
) -> MetricsRow:
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ValueError(f"image {image_id}: prediction and target sizes differ")
    pm = threshold_mask(pred, bin_threshold)
    rates = pixel_metrics(confusion(pm, gt))
    cd = cldice(pm, gt)
    if betti_tile is None:
        e0, e1 = betti_error(pm, gt)
    else:
        e0, e1 = betti_error_tiled(pm, gt, betti_tile)
    return MetricsRow(
        image_id, rates["acc"], rates["dice"], rates["sp"], rates["se"],
        rates["pr"], rates["f1"], rates["mcc"], cd, float(e0), float(e1),
    )


def evaluate_dataset(
    pairs: list[tuple[GrayImage, BinaryMask]],
    bin_threshold: float = 0.5,
    ids: list[str] | None = None,
    betti_tile: int | None = None,
    threads: int = 1,
) -> MetricsReport:
    """All ten metrics per (prediction, target) pair plus the mean row.

    Predictions are binarized at ``bin_threshold``. Row order always follows
    input order, regardless of thread count.
    """
    if not 0.0 <= bin_threshold <= 1.0:
        raise ValueError("bin_threshold must lie in [0, 1]")
    if ids is None:
        ids = [str(i) for i in range(len(pairs))]
    if len(ids) != len(pairs):
        raise ValueError("ids and pairs lengths differ")

    def run(i: int) -> MetricsRow:
        pred, gt = pairs[i]
        return _evaluate_one(ids[i], pred, gt, bin_threshold, betti_tile)

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = tuple(pool.map(run, range(len(pairs))))
    else:
        rows = tuple(run(i) for i in range(len(pairs)))

    if rows:
        means = [float(np.mean([getattr(r, m) for r in rows])) for m in METRIC_NAMES]
    else:
        means = [0.0] * len(METRIC_NAMES)
    mean = MetricsRow("MEAN", *means)
    return MetricsReport(rows, mean)
