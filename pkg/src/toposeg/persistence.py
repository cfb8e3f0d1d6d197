"""Persistent homology of grayscale images under a decreasing-threshold sweep.

The filtration adds pixels in order of (intensity descending, row-major index
ascending), i.e. the superlevel sets ``{v >= t}`` for t sweeping from the
highest pixel value down to the lowest. Foreground connectivity is
8-adjacency; holes are bounded 4-connected components of the complement.

Dimension-0 features (connected components) are tracked with a union-find
merge process obeying the elder rule: on a merge, the component whose
creation pixel entered earlier survives. Dimension-1 features (loops) come
from the same merge process run on the complement in reversed order with a
virtual outside region attached to the border; a background component that
is born when pixel q joins the complement and later absorbed through pixel
r corresponds to a loop created at r and filled at q in forward time.

Zero-persistence events (created and destroyed at the same intensity) are
dropped; they are invisible to every thresholded snapshot. The single
component that survives the full sweep is emitted as an essential pair with
destruction pinned to 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image import BinaryMask, GrayImage, threshold_mask

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a normal install
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


Cell = tuple[int, int]


@dataclass(frozen=True)
class PersistencePair:
    """One homological feature of the sweep.

    ``creation``/``destruction`` are pixel intensities with
    creation >= destruction; both equal the intensity at their critical
    cell. Essential pairs never die: destruction is 0 and there is no
    destruction cell.
    """

    dim: int
    creation: float
    destruction: float
    creation_cell: Cell
    destruction_cell: Cell | None
    essential: bool


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    pairs: tuple[PersistencePair, ...]
    height: int
    width: int

    def in_dim(self, dim: int) -> tuple[PersistencePair, ...]:
        return tuple(p for p in self.pairs if p.dim == dim)

    def alive_counts(self, t: float) -> tuple[int, int]:
        """Number of dim-0/dim-1 features alive in the superlevel set at t."""
        alive = [0, 0]
        for p in self.pairs:
            if p.creation >= t and (p.essential or p.destruction < t):
                alive[p.dim] += 1
        return alive[0], alive[1]


@dataclass(frozen=True, eq=False)
class BettiCurve:
    """Per-threshold (beta0, beta1), thresholds strictly decreasing."""

    thresholds: tuple[float, ...]
    counts: tuple[tuple[int, int], ...]


# ---------------------------------------------------------------------------
# Union-find sweeps (jit-compiled)


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _merge_sweep(order, rank, height, width):
    """8-adjacency merge process; returns (birth_pixel, merge_pixel) events."""
    n = height * width
    parent = np.full(n, -1, np.int64)
    birth = np.zeros(n, np.int64)
    ev_birth = np.empty(n, np.int64)
    ev_merge = np.empty(n, np.int64)
    nev = 0
    for step in range(n):
        p = order[step]
        parent[p] = p
        birth[p] = p
        pr = p // width
        pc = p % width
        for dr in range(-1, 2):
            for dc in range(-1, 2):
                if dr == 0 and dc == 0:
                    continue
                qr = pr + dr
                qc = pc + dc
                if qr < 0 or qr >= height or qc < 0 or qc >= width:
                    continue
                q = qr * width + qc
                if parent[q] == -1:
                    continue
                rq = _find(parent, q)
                rp = _find(parent, p)
                if rq == rp:
                    continue
                if rank[birth[rq]] <= rank[birth[rp]]:
                    elder, younger = rq, rp
                else:
                    elder, younger = rp, rq
                ev_birth[nev] = birth[younger]
                ev_merge[nev] = p
                nev += 1
                parent[younger] = elder
    return ev_birth[:nev], ev_merge[:nev]


@njit(cache=True)
def _complement_sweep(order, rank, height, width):
    """4-adjacency merge process on the complement with an outside node.

    ``rank`` has length n+1 with rank[n] = -1 so the outside region is the
    eldest component and never dies.
    """
    n = height * width
    outside = n
    parent = np.full(n + 1, -1, np.int64)
    birth = np.zeros(n + 1, np.int64)
    parent[outside] = outside
    birth[outside] = outside
    ev_birth = np.empty(n, np.int64)
    ev_merge = np.empty(n, np.int64)
    nev = 0
    for step in range(n):
        p = order[step]
        parent[p] = p
        birth[p] = p
        pr = p // width
        pc = p % width
        for k in range(5):
            if k == 0:
                if pr == 0 or pr == height - 1 or pc == 0 or pc == width - 1:
                    q = outside
                else:
                    continue
            else:
                if k == 1:
                    qr, qc = pr - 1, pc
                elif k == 2:
                    qr, qc = pr + 1, pc
                elif k == 3:
                    qr, qc = pr, pc - 1
                else:
                    qr, qc = pr, pc + 1
                if qr < 0 or qr >= height or qc < 0 or qc >= width:
                    continue
                q = qr * width + qc
                if parent[q] == -1:
                    continue
            rq = _find(parent, q)
            rp = _find(parent, p)
            if rq == rp:
                continue
            if rank[birth[rq]] <= rank[birth[rp]]:
                elder, younger = rq, rp
            else:
                elder, younger = rp, rq
            ev_birth[nev] = birth[younger]
            ev_merge[nev] = p
            nev += 1
            parent[younger] = elder
    return ev_birth[:nev], ev_merge[:nev]


# ---------------------------------------------------------------------------


def _pair_sort_key(p: PersistencePair):
    dcell = p.destruction_cell if p.destruction_cell is not None else (-1, -1)
    return (p.dim, -p.creation, p.creation_cell, -p.destruction, dcell)


def compute_diagram(img: GrayImage) -> PersistenceDiagram:
    """Persistence diagram of the decreasing-threshold sweep of `img`."""
    px = img.pixels
    h, w = px.shape
    n = h * w
    flat = px.ravel()

    order = np.argsort(-flat, kind="stable").astype(np.int64)
    rank = np.empty(n, np.int64)
    rank[order] = np.arange(n)

    ev_b0, ev_m0 = _merge_sweep(order, rank, h, w)

    order_rev = order[::-1].copy()
    rank_rev = np.empty(n + 1, np.int64)
    rank_rev[order_rev] = np.arange(n)
    rank_rev[n] = -1
    ev_b1, ev_m1 = _complement_sweep(order_rev, rank_rev, h, w)

    pairs: list[PersistencePair] = []
    root = int(order[0])
    pairs.append(
        PersistencePair(0, float(flat[root]), 0.0, (root // w, root % w), None, True)
    )

    created = flat[ev_b0]
    destroyed = flat[ev_m0]
    for b, m, cv, dv in zip(ev_b0, ev_m0, created, destroyed):
        if cv > dv:
            pairs.append(
                PersistencePair(
                    0, float(cv), float(dv),
                    (int(b) // w, int(b) % w), (int(m) // w, int(m) % w), False,
                )
            )

    # reverse-sweep births fill holes, reverse-sweep merges create them
    created = flat[ev_m1]
    destroyed = flat[ev_b1]
    for b, m, cv, dv in zip(ev_b1, ev_m1, created, destroyed):
        if cv > dv:
            pairs.append(
                PersistencePair(
                    1, float(cv), float(dv),
                    (int(m) // w, int(m) % w), (int(b) // w, int(b) % w), False,
                )
            )

    pairs.sort(key=_pair_sort_key)
    return PersistenceDiagram(tuple(pairs), h, w)


# ---------------------------------------------------------------------------
# Brute-force Betti oracles

_FG_STRUCTURE = np.ones((3, 3), dtype=int)
_BG_STRUCTURE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)


def betti_numbers(mask: BinaryMask) -> tuple[int, int]:
    """(beta0, beta1) of a mask: 8-connected components and bounded
    4-connected background components."""
    fg = mask.bits
    _, beta0 = ndimage.label(fg, structure=_FG_STRUCTURE)
    labels, n_bg = ndimage.label(~fg, structure=_BG_STRUCTURE)
    if n_bg == 0:
        return int(beta0), 0
    border = np.unique(
        np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    )
    touching = int(np.count_nonzero(border > 0))
    return int(beta0), int(n_bg - touching)


def betti_curve(img: GrayImage) -> BettiCurve:
    """Betti numbers of every thresholded snapshot, thresholds descending."""
    values = np.unique(img.pixels)[::-1]
    counts = tuple(betti_numbers(threshold_mask(img, float(t))) for t in values)
    return BettiCurve(tuple(float(t) for t in values), counts)


# ---------------------------------------------------------------------------
# Serialization


def diagram_to_json(diagram: PersistenceDiagram) -> list[dict]:
    """Diagram as a JSON-ready list, ordered (dim asc, creation desc,
    row-major creation cell)."""
    out = []
    for p in diagram.pairs:
        out.append(
            {
                "dim": p.dim,
                "creation": p.creation,
                "destruction": p.destruction,
                "creation_cell": list(p.creation_cell),
                "destruction_cell": (
                    list(p.destruction_cell) if p.destruction_cell is not None else None
                ),
                "essential": p.essential,
            }
        )
    return out


def diagram_from_json(objs: list[dict], height: int, width: int) -> PersistenceDiagram:
    pairs = []
    for o in objs:
        dcell = o["destruction_cell"]
        pairs.append(
            PersistencePair(
                int(o["dim"]),
                float(o["creation"]),
                float(o["destruction"]),
                tuple(o["creation_cell"]),
                tuple(dcell) if dcell is not None else None,
                bool(o["essential"]),
            )
        )
    pairs.sort(key=_pair_sort_key)
    return PersistenceDiagram(tuple(pairs), height, width)


def diagram_dumps(diagram: PersistenceDiagram) -> str:
    return json.dumps(diagram_to_json(diagram))
