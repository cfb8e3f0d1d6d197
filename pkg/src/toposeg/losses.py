"""Differentiable segmentation losses with analytic pixel gradients.

Four losses share the LossResult contract (scalar value + gradient grid):

* ``sat_loss`` - persistence-based loss. Diagrams of prediction and target
  are matched (see :mod:`toposeg.matching`); matched features pay the
  squared gap of their (b, d) coordinates, features sent to the diagonal pay
  their squared distance to it. Coordinates are re-read live from the images
  at the critical cells, so the loss is differentiable in the prediction
  pixels while matching and critical cells are held fixed.
* ``perceptual_topo_loss`` - sum of squared feature gaps under a fixed
  multi-scale filter pyramid, backpropagated exactly.
* ``bce_loss`` - pixel-wise binary cross entropy with clamped logits.
* ``total_loss`` - bce + lambda_tc * perceptual + lambda_ts * persistence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal

from .image import GrayImage
from .matching import MatchConfig, Matching, match_diagrams
from .persistence import compute_diagram

_BCE_EPS = 1e-7


@dataclass(frozen=True, eq=False)
class LossResult:
    value: float
    gradient: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("loss value must be finite")
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, eq=False)
class Stage:
    """One pyramid stage: fixed odd-sized filters, then an optional
    rectifier and optional 2x average pooling."""

    filters: tuple[np.ndarray, ...]
    relu: bool = True
    downsample: bool = True

    def __post_init__(self):
        for f in self.filters:
            if f.ndim != 2 or f.shape[0] % 2 == 0 or f.shape[1] % 2 == 0:
                raise ValueError("filters must be 2-d with odd side lengths")


@dataclass(frozen=True, eq=False)
class FeatureExtractor:
    """Deterministic feature pyramid; ``taps`` lists the stages whose
    outputs enter the perceptual loss."""

    stages: tuple[Stage, ...]
    taps: tuple[int, ...]


@dataclass(frozen=True)
class LossConfig:
    lambda_tc: float = 0.05
    lambda_ts: float = 0.0002
    match: MatchConfig = field(default_factory=MatchConfig)

    def __post_init__(self):
        if self.lambda_tc < 0.0 or self.lambda_ts < 0.0:
            raise ValueError("loss weights must be >= 0")


@dataclass(frozen=True)
class LossBreakdown:
    bce: float
    tc: float
    ts: float


def _check_same_shape(pred: GrayImage, gt: GrayImage) -> None:
    if pred.pixels.shape != gt.pixels.shape:
        raise ValueError("prediction and target dimensions differ")


# ---------------------------------------------------------------------------
# Persistence loss


def sat_loss(
    pred: GrayImage, gt: GrayImage, cfg: MatchConfig | None = None
) -> tuple[LossResult, Matching]:
    """Spatially weighted persistence loss and the matching behind it.

    Gradients land only on the critical cells of the prediction's diagram;
    contributions from features sharing a cell accumulate.
    """
    _check_same_shape(pred, gt)
    dp = compute_diagram(pred)
    dg = compute_diagram(gt)
    matching = match_diagrams(dp, dg, cfg)

    ppx = pred.pixels
    gpx = gt.pixels
    grad = np.zeros_like(ppx)
    value = 0.0
    for e in matching.edges:
        if e.pred_index is None:
            continue  # target completed to the diagonal: no prediction term
        p = dp.pairs[e.pred_index]
        s = e.weight
        b_p = 1.0 - ppx[p.creation_cell]
        d_p = 1.0 if p.essential else 1.0 - ppx[p.destruction_cell]
        if e.gt_index is not None:
            g = dg.pairs[e.gt_index]
            b_g = 1.0 - gpx[g.creation_cell]
            d_g = 1.0 if g.essential else 1.0 - gpx[g.destruction_cell]
            if p.essential:
                value += s * (b_p - b_g) ** 2
                grad[p.creation_cell] += -2.0 * s * (b_p - b_g)
            else:
                value += s * ((b_p - b_g) ** 2 + (d_p - d_g) ** 2)
                grad[p.creation_cell] += -2.0 * s * (b_p - b_g)
                grad[p.destruction_cell] += -2.0 * s * (d_p - d_g)
        else:
            value += s * (b_p - d_p) ** 2 / 2.0
            grad[p.creation_cell] += -s * (b_p - d_p)
            grad[p.destruction_cell] += s * (b_p - d_p)
    return LossResult(value, grad), matching


# ---------------------------------------------------------------------------
# Perceptual loss over a fixed filter pyramid

_GAUSS = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]], dtype=np.float64) / 16.0
_D0 = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64) / 4.0
_D45 = np.array([[0, 1, 2], [-1, 0, 1], [-2, -1, 0]], dtype=np.float64) / 4.0
_D90 = _D0.T.copy()
_D135 = np.array([[2, 1, 0], [1, 0, -1], [0, -1, -2]], dtype=np.float64) / 4.0
_LAPLACE = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=np.float64) / 4.0
_DIAG2_45 = np.array([[0, 0, 1], [0, -2, 0], [1, 0, 0]], dtype=np.float64) / 2.0
_DIAG2_135 = np.array([[1, 0, 0], [0, -2, 0], [0, 0, 1]], dtype=np.float64) / 2.0

_DEFAULT_BANK = (_GAUSS, _D0, _D45, _D90, _D135, _LAPLACE, _DIAG2_45, _DIAG2_135)


def default_extractor() -> FeatureExtractor:
    """Three-stage pyramid: smoothing + oriented first/second derivative
    bank, rectifier, 2x average pooling; all three stage outputs tapped."""
    stages = tuple(Stage(_DEFAULT_BANK, relu=True, downsample=True) for _ in range(3))
    return FeatureExtractor(stages, taps=(0, 1, 2))


def load_extractor(path: str | Path) -> FeatureExtractor:
    """Load a filter pyramid from a JSON array of stages
    ({filters, downsample, relu?}); all stages are tapped."""
    entries = json.loads(Path(path).read_text())
    stages = []
    for entry in entries:
        filters = tuple(np.asarray(f, dtype=np.float64) for f in entry["filters"])
        stages.append(
            Stage(
                filters,
                relu=bool(entry.get("relu", True)),
                downsample=bool(entry["downsample"]),
            )
        )
    return FeatureExtractor(tuple(stages), taps=tuple(range(len(stages))))


def _correlate_symm(x: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Cross-correlation with symmetric edge padding, so constant inputs
    stay constant and zero-sum filters respond zero everywhere."""
    r0, r1 = k.shape[0] // 2, k.shape[1] // 2
    if r0 == 0 and r1 == 0:
        return x * k[0, 0]
    xp = np.pad(x, ((r0, r0), (r1, r1)), mode="symmetric")
    return signal.correlate2d(xp, k, mode="valid")


def _correlate_symm_adjoint(g: np.ndarray, k: np.ndarray, shape) -> np.ndarray:
    """Exact adjoint of :func:`_correlate_symm`: full convolution followed by
    folding the padded-cell gradients back onto their source pixels."""
    r0, r1 = k.shape[0] // 2, k.shape[1] // 2
    if r0 == 0 and r1 == 0:
        return g * k[0, 0]
    g_pad = signal.convolve2d(g, k, mode="full")
    h, w = shape
    rows = np.pad(np.arange(h), (r0, r0), mode="symmetric")
    cols = np.pad(np.arange(w), (r1, r1), mode="symmetric")
    out = np.zeros(shape)
    np.add.at(out, (rows[:, None], cols[None, :]), g_pad)
    return out


def _avg_pool(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x average pooling with partial edge blocks averaged over their true
    size. Returns (pooled, per-cell block counts) for the backward pass."""
    c, h, w = a.shape
    oh, ow = (h + 1) // 2, (w + 1) // 2
    padded = np.zeros((c, oh * 2, ow * 2))
    padded[:, :h, :w] = a
    sums = padded.reshape(c, oh, 2, ow, 2).sum(axis=(2, 4))
    rows = np.minimum(2, h - 2 * np.arange(oh))
    cols = np.minimum(2, w - 2 * np.arange(ow))
    counts = np.outer(rows, cols).astype(np.float64)
    return sums / counts, counts


def _avg_pool_backward(g: np.ndarray, counts: np.ndarray, h: int, w: int) -> np.ndarray:
    spread = g / counts
    return np.repeat(np.repeat(spread, 2, axis=1), 2, axis=2)[:, :h, :w]


def _stage_forward(x: np.ndarray, stage: Stage) -> tuple[np.ndarray, dict]:
    c_in = x.shape[0]
    k = len(stage.filters)
    if c_in == 1:
        pre = np.stack([_correlate_symm(x[0], f) for f in stage.filters])
    else:
        if k != c_in:
            raise ValueError("stage filter count must match channel count")
        pre = np.stack(
            [_correlate_symm(x[i], f) for i, f in enumerate(stage.filters)]
        )
    act = np.maximum(pre, 0.0) if stage.relu else pre
    cache: dict = {"c_in": c_in, "h": act.shape[1], "w": act.shape[2]}
    if stage.relu:
        cache["mask"] = pre > 0.0
    if stage.downsample:
        out, counts = _avg_pool(act)
        cache["counts"] = counts
    else:
        out = act
    return out, cache


def _stage_backward(g: np.ndarray, stage: Stage, cache: dict) -> np.ndarray:
    if stage.downsample:
        g = _avg_pool_backward(g, cache["counts"], cache["h"], cache["w"])
    if stage.relu:
        g = g * cache["mask"]
    shape = (cache["h"], cache["w"])
    if cache["c_in"] == 1:
        g_in = np.zeros((1, *shape))
        for i, f in enumerate(stage.filters):
            g_in[0] += _correlate_symm_adjoint(g[i], f, shape)
    else:
        g_in = np.stack(
            [_correlate_symm_adjoint(g[i], f, shape) for i, f in enumerate(stage.filters)]
        )
    return g_in


def extract_features(fx: FeatureExtractor, img: GrayImage) -> list[np.ndarray]:
    """Stage outputs of the pyramid at the configured taps."""
    x = img.pixels[None, :, :]
    outs = []
    for stage in fx.stages:
        x, _ = _stage_forward(x, stage)
        outs.append(x)
    return [outs[t] for t in fx.taps]


def perceptual_topo_loss(
    pred: GrayImage, gt: GrayImage, fx: FeatureExtractor | None = None
) -> LossResult:
    """Sum over taps of the squared feature gap, with exact backprop through
    the fixed filters (rectifier subgradient at 0 taken as 0)."""
    _check_same_shape(pred, gt)
    fx = fx if fx is not None else default_extractor()

    xg = gt.pixels[None, :, :]
    gt_outs = []
    for stage in fx.stages:
        xg, _ = _stage_forward(xg, stage)
        gt_outs.append(xg)

    xp = pred.pixels[None, :, :]
    pred_outs = []
    caches = []
    for stage in fx.stages:
        xp, cache = _stage_forward(xp, stage)
        pred_outs.append(xp)
        caches.append(cache)

    value = 0.0
    seeds: list[np.ndarray | None] = [None] * len(fx.stages)
    for t in fx.taps:
        diff = pred_outs[t] - gt_outs[t]
        value += float((diff * diff).sum())
        seed = 2.0 * diff
        seeds[t] = seed if seeds[t] is None else seeds[t] + seed

    g = None
    for s in range(len(fx.stages) - 1, -1, -1):
        if g is None and seeds[s] is None:
            continue
        g = seeds[s] if g is None else (g + seeds[s] if seeds[s] is not None else g)
        g = _stage_backward(g, fx.stages[s], caches[s])
    grad = g[0] if g is not None else np.zeros_like(pred.pixels)
    return LossResult(value, grad)


# ---------------------------------------------------------------------------
# Pixel-wise losses


def bce_loss(pred: GrayImage, gt: GrayImage) -> LossResult:
    """Mean binary cross entropy; prediction clamped to [eps, 1 - eps] and
    the gradient zeroed wherever the clamp is active."""
    _check_same_shape(pred, gt)
    y = gt.pixels
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("ground truth must be binary (values 0 or 1)")
    x = pred.pixels
    n = x.size
    xc = np.clip(x, _BCE_EPS, 1.0 - _BCE_EPS)
    value = float(-(y * np.log(xc) + (1.0 - y) * np.log1p(-xc)).sum() / n)
    inside = (x >= _BCE_EPS) & (x <= 1.0 - _BCE_EPS)
    grad = np.where(inside, -(y / xc - (1.0 - y) / (1.0 - xc)) / n, 0.0)
    return LossResult(value, grad)


def total_loss_breakdown(
    pred: GrayImage,
    gt: GrayImage,
    cfg: LossConfig | None = None,
    fx: FeatureExtractor | None = None,
) -> tuple[LossResult, LossBreakdown]:
    """Combined objective bce + lambda_tc * tc + lambda_ts * ts, plus the
    unweighted component values."""
    cfg = cfg if cfg is not None else LossConfig()
    b = bce_loss(pred, gt)
    t = perceptual_topo_loss(pred, gt, fx)
    s, _ = sat_loss(pred, gt, cfg.match)
    value = b.value + cfg.lambda_tc * t.value + cfg.lambda_ts * s.value
    grad = b.gradient + cfg.lambda_tc * t.gradient + cfg.lambda_ts * s.gradient
    return LossResult(value, grad), LossBreakdown(b.value, t.value, s.value)


def total_loss(
    pred: GrayImage,
    gt: GrayImage,
    cfg: LossConfig | None = None,
    fx: FeatureExtractor | None = None,
) -> LossResult:
    return total_loss_breakdown(pred, gt, cfg, fx)[0]
