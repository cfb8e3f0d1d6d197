"""Spatially weighted optimal matching between persistence diagrams.

Diagram points live at (b, d) = (1 - creation, 1 - destruction). A predicted
point matched to a target point pays the squared-coordinate gap scaled by a
spatial weight derived from the distance between the two creation cells; a
point matched to the diagonal pays its distance to the nearest diagonal
point (the midpoint projection) scaled by a configurable weight. The total
cost sums over predicted points only: target points left unmatched are
completed to the diagonal for bookkeeping at zero cost, so growing the
predicted diagram can never make the optimum cheaper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .persistence import PersistenceDiagram, PersistencePair


class _Diagonal:
    def __repr__(self):  # pragma: no cover - cosmetic
        return "DIAGONAL"


DIAGONAL = _Diagonal()


@dataclass(frozen=True)
class DiagramPoint:
    """Birth/death coordinates of one feature plus its creation cell."""

    b: float
    d: float
    creation_cell: tuple[int, int]
    dim: int
    essential: bool

    @classmethod
    def from_pair(cls, pair: PersistencePair) -> "DiagramPoint":
        return cls(
            1.0 - pair.creation,
            1.0 - pair.destruction,
            pair.creation_cell,
            pair.dim,
            pair.essential,
        )


@dataclass(frozen=True)
class MatchConfig:
    """Knobs of the matching cost.

    ``normalize_spatial`` divides creation-cell distances by ``image_diag``
    (the image diagonal, derived from the diagrams when left None) so the
    weight is resolution-free; switch it off for raw pixel distances.
    ``spatial_floor`` optionally lower-bounds the weight so two features
    sharing a creation cell are not matched for free.
    """

    q: float = 2.0
    diagonal_weight: float = 1.0
    normalize_spatial: bool = True
    spatial_floor: float = 0.0
    image_diag: float | None = None

    def __post_init__(self):
        if self.q < 1.0:
            raise ValueError("q must be >= 1")
        if self.diagonal_weight < 0.0:
            raise ValueError("diagonal_weight must be >= 0")
        if self.spatial_floor < 0.0:
            raise ValueError("spatial_floor must be >= 0")


@dataclass(frozen=True)
class MatchEdge:
    """One assignment. pred_index None marks a target completed to the
    diagonal; gt_index None marks a predicted point sent to the diagonal.
    Indices refer to positions in the owning diagram's pair tuple."""

    dim: int
    pred_index: int | None
    gt_index: int | None
    weight: float
    cost: float


@dataclass(frozen=True, eq=False)
class Matching:
    edges: tuple[MatchEdge, ...]
    total_cost: float

    def in_dim(self, dim: int) -> tuple[MatchEdge, ...]:
        return tuple(e for e in self.edges if e.dim == dim)

    def to_json_obj(self) -> dict:
        dims = sorted({e.dim for e in self.edges})
        groups = []
        for d in dims:
            pairs = []
            unmatched = []
            subtotal = 0.0
            for e in self.in_dim(d):
                if e.pred_index is None:
                    unmatched.append(e.gt_index)
                    continue
                pairs.append(
                    {
                        "pred": e.pred_index,
                        "gt": e.gt_index if e.gt_index is not None else "diagonal",
                        "weight": e.weight,
                        "cost": e.cost,
                    }
                )
                subtotal += e.cost
            groups.append(
                {"dim": d, "pairs": pairs, "unmatched_gt": unmatched,
                 "total_cost": subtotal}
            )
        return {"dims": groups, "total_cost": self.total_cost}


def image_diagonal(height: int, width: int) -> float:
    """Largest possible cell distance in a height×width grid."""
    d = math.hypot(height - 1, width - 1)
    return d if d > 0.0 else 1.0


def diagonal_projection(p: DiagramPoint) -> tuple[float, float]:
    """Closest diagonal point to p: both coordinates at (b + d) / 2."""
    m = 0.5 * (p.b + p.d)
    return (m, m)


def _spatial_weight(p: DiagramPoint, t: DiagramPoint, cfg: MatchConfig) -> float:
    dr = p.creation_cell[0] - t.creation_cell[0]
    dc = p.creation_cell[1] - t.creation_cell[1]
    dist_sq = float(dr * dr + dc * dc)
    if cfg.normalize_spatial:
        diag = cfg.image_diag
        if diag is None:
            raise ValueError("normalize_spatial requires image_diag")
        dist_sq /= diag * diag
    return max(dist_sq ** (cfg.q / 2.0), cfg.spatial_floor)


def pair_cost(
    p: DiagramPoint, t: "DiagramPoint | _Diagonal", cfg: MatchConfig
) -> tuple[float, float]:
    """(cost, weight) of assigning p to a target point or to the diagonal."""
    if t is DIAGONAL:
        weight = cfg.diagonal_weight
        pb, pd = diagonal_projection(p)
        gap_sq = (p.b - pb) ** 2 + (p.d - pd) ** 2
    else:
        if p.dim != t.dim:
            raise ValueError("cannot match points of different dimension")
        if p.essential != t.essential:
            raise ValueError("cannot match essential with non-essential")
        weight = _spatial_weight(p, t, cfg)
        gap_sq = (p.b - t.b) ** 2 + (p.d - t.d) ** 2
    return weight * gap_sq ** (cfg.q / 2.0), weight


def match_diagrams(
    pred: PersistenceDiagram, gt: PersistenceDiagram, cfg: MatchConfig | None = None
) -> Matching:
    """Cost-minimal assignment between two diagrams, per dimension.

    Essential pairs match essential-to-essential. Non-essential predicted
    points are assigned by an exact solver over all target points plus a
    private diagonal slot each; unmatched targets are recorded as diagonal
    completions at zero cost.
    """
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ValueError("diagrams must come from same-sized images")
    cfg = cfg if cfg is not None else MatchConfig()
    if cfg.normalize_spatial and cfg.image_diag is None:
        cfg = replace(cfg, image_diag=image_diagonal(pred.height, pred.width))

    pred_pts = [DiagramPoint.from_pair(p) for p in pred.pairs]
    gt_pts = [DiagramPoint.from_pair(p) for p in gt.pairs]

    edges: list[MatchEdge] = []
    total = 0.0
    dims = sorted({p.dim for p in pred.pairs} | {p.dim for p in gt.pairs})
    for dim in dims:
        p_ess = [i for i, p in enumerate(pred.pairs) if p.dim == dim and p.essential]
        g_ess = [j for j, p in enumerate(gt.pairs) if p.dim == dim and p.essential]
        if len(p_ess) != len(g_ess):
            raise ValueError("diagrams disagree on essential pair counts")
        for i, j in zip(p_ess, g_ess):
            cost, weight = pair_cost(pred_pts[i], gt_pts[j], cfg)
            edges.append(MatchEdge(dim, i, j, weight, cost))
            total += cost

        p_idx = [i for i, p in enumerate(pred.pairs) if p.dim == dim and not p.essential]
        g_idx = [j for j, p in enumerate(gt.pairs) if p.dim == dim and not p.essential]
        n, m = len(p_idx), len(g_idx)
        matched_gt: set[int] = set()
        if n:
            cost_mat = np.full((n, m + n), np.inf)
            for a, i in enumerate(p_idx):
                for b, j in enumerate(g_idx):
                    cost_mat[a, b] = pair_cost(pred_pts[i], gt_pts[j], cfg)[0]
                cost_mat[a, m + a] = pair_cost(pred_pts[i], DIAGONAL, cfg)[0]
            rows, cols = linear_sum_assignment(cost_mat)
            assign = dict(zip(rows.tolist(), cols.tolist()))
            for a, i in enumerate(p_idx):
                b = assign[a]
                if b < m:
                    j = g_idx[b]
                    cost, weight = pair_cost(pred_pts[i], gt_pts[j], cfg)
                    edges.append(MatchEdge(dim, i, j, weight, cost))
                    matched_gt.add(j)
                else:
                    cost, weight = pair_cost(pred_pts[i], DIAGONAL, cfg)
                    edges.append(MatchEdge(dim, i, None, weight, cost))
                total += cost
        for j in g_idx:
            if j not in matched_gt:
                edges.append(MatchEdge(dim, None, j, 0.0, 0.0))

    return Matching(tuple(edges), total)


def wasserstein_distance(
    pred: PersistenceDiagram, gt: PersistenceDiagram, cfg: MatchConfig | None = None
) -> float:
    """q-th root of the optimal matching cost."""
    cfg = cfg if cfg is not None else MatchConfig()
    return match_diagrams(pred, gt, cfg).total_cost ** (1.0 / cfg.q)
