"""Grid linearizations, context neighborhoods, and quadtree segmentation.

The Hilbert scan visits every dyadic quadrant of a 2^r x 2^r grid as one
contiguous run, which is the property that lets a switching 1-D denoiser
applied along the scan simulate any quadtree-piecewise assignment of
rules. Contexts are the 2k lattice offsets nearest the origin (Euclidean
distance, fixed tie-break), packed into integers base the noisy-alphabet
size. All coordinates are 0-based (row, col).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class PHOrder:
    """Hilbert-scan visit order of an N x N grid, N = 2^r.

    to_coord[i] = (row, col) of the i-th visited cell; to_index inverts it.
    """

    side: int
    to_coord: np.ndarray  # (n, 2)
    to_index: np.ndarray  # (N, N)

    def coord_of(self, i: int) -> tuple[int, int]:
        r, c = self.to_coord[i]
        return int(r), int(c)

    def index_of(self, row: int, col: int) -> int:
        return int(self.to_index[row, col])

    def to_csv(self) -> str:
        lines = ["index,row,col"]
        for i, (r, c) in enumerate(self.to_coord):
            lines.append(f"{i},{r},{c}")
        return "\n".join(lines) + "\n"


def ph_order(r: int) -> PHOrder:
    """Build the Hilbert scan of a 2^r x 2^r grid.

    Standard base motif and reflection rules; consecutive cells are
    lattice 4-neighbors and every dyadic quadrant is visited contiguously.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    side = 1 << r
    n = side * side
    t = np.arange(n, dtype=np.int64)
    x = np.zeros(n, dtype=np.int64)
    y = np.zeros(n, dtype=np.int64)
    s = 1
    while s < side:
        rx = 1 & (t >> 1)
        ry = 1 & (t ^ rx)
        flip = (ry == 0) & (rx == 1)
        x[flip] = s - 1 - x[flip]
        y[flip] = s - 1 - y[flip]
        swap = ry == 0
        x[swap], y[swap] = y[swap], x[swap].copy()
        x += s * rx
        y += s * ry
        t >>= 2
        s <<= 1
    to_coord = np.stack([x, y], axis=1)
    to_index = np.empty((side, side), dtype=np.int64)
    to_index[x, y] = np.arange(n)
    return PHOrder(side, to_coord, to_index)


@dataclass(frozen=True)
class ContextNeighborhood:
    """The 2k offsets read around a cell, plus the interior margin.

    margin = ceil(k / 4); every offset stays within that max-norm box, so
    cells at least margin away from every edge have fully in-bounds
    contexts.
    """

    order: int
    offsets: tuple[tuple[int, int], ...]
    margin: int


def spiral_offsets(k: int) -> ContextNeighborhood:
    """First 2k lattice offsets by distance to the origin, origin excluded.

    Ties are broken by (row, col) lexicographic order. k = 0 gives the
    empty neighborhood (symbol-by-symbol denoising).
    """
    if k < 0:
        raise ValueError("context order must be >= 0")
    if k == 0:
        return ContextNeighborhood(0, (), 0)
    margin = -(-k // 4)
    if 2 * k > (2 * margin + 1) ** 2 - 1:
        raise ValueError(f"margin {margin} cannot hold 2k = {2 * k} offsets")
    box = max(margin, int(np.ceil(np.sqrt(2.0 * k)))) + 1
    while True:
        span = np.arange(-box, box + 1)
        rr, cc = np.meshgrid(span, span, indexing="ij")
        rr, cc = rr.ravel(), cc.ravel()
        keep = (rr != 0) | (cc != 0)
        rr, cc = rr[keep], cc[keep]
        order = np.lexsort((cc, rr, rr * rr + cc * cc))
        rr, cc = rr[order[: 2 * k]], cc[order[: 2 * k]]
        # enlarge the candidate box if the selection touches its rim,
        # since closer points outside the box could then exist
        if max(np.abs(rr).max(), np.abs(cc).max()) < box:
            break
        box += 1
    if max(np.abs(rr).max(), np.abs(cc).max()) > margin:
        raise ValueError(f"offsets for k = {k} escape the margin box {margin}")
    offsets = tuple((int(a), int(b)) for a, b in zip(rr, cc))
    return ContextNeighborhood(k, offsets, margin)


def interior_slice(side: int, margin: int) -> slice:
    if side - 2 * margin <= 0:
        raise ValueError(f"margin {margin} leaves no interior on side {side}")
    return slice(margin, side - margin)


def interior_mask(side: int, margin: int) -> np.ndarray:
    s = interior_slice(side, margin)
    mask = np.zeros((side, side), dtype=bool)
    mask[s, s] = True
    return mask


def context_grid(data: np.ndarray, nb: ContextNeighborhood, z_size: int) -> np.ndarray:
    """Packed context ids for every interior cell of a symbol array.

    Entry (i, j) is the context of cell (i + margin, j + margin); digit t
    of the base-z_size packing is the symbol at offsets[t].
    """
    side = data.shape[0]
    h = side - 2 * nb.margin
    if h <= 0:
        raise ValueError(f"margin {nb.margin} leaves no interior on side {side}")
    if nb.order and z_size ** (2 * nb.order) > (1 << 62):
        raise ValueError("context id would overflow the packing integer")
    ctx = np.zeros((h, h), dtype=np.int64)
    place = 1
    for dr, dc in nb.offsets:
        r0, c0 = nb.margin + dr, nb.margin + dc
        ctx += data[r0:r0 + h, c0:c0 + h].astype(np.int64) * place
        place *= z_size
    return ctx


def context_at(data: np.ndarray, t: tuple[int, int], nb: ContextNeighborhood,
               z_size: int) -> int:
    """Packed context id of a single interior cell."""
    side = data.shape[0]
    r, c = t
    if not (nb.margin <= r < side - nb.margin and nb.margin <= c < side - nb.margin):
        raise ValueError(f"cell {t} is outside the interior for margin {nb.margin}")
    ctx = 0
    place = 1
    for dr, dc in nb.offsets:
        ctx += int(data[r + dr, c + dc]) * place
        place *= z_size
    return ctx


def line_context_ids(seq: np.ndarray, k: int, z_size: int) -> np.ndarray:
    """Two-sided 1-D context ids for positions k .. n-1-k of a sequence."""
    seq = np.asarray(seq)
    n = seq.size
    h = n - 2 * k
    if h <= 0:
        raise ValueError(f"context order {k} leaves no interior on length {n}")
    if k and z_size ** (2 * k) > (1 << 62):
        raise ValueError("context id would overflow the packing integer")
    ctx = np.zeros(h, dtype=np.int64)
    place = 1
    for off in list(range(-k, 0)) + list(range(1, k + 1)):
        ctx += seq[k + off: k + off + h].astype(np.int64) * place
        place *= z_size
    return ctx


def raster_order(side: int) -> np.ndarray:
    """Row-major (row, col) enumeration of an N x N grid."""
    if side < 1:
        raise ValueError("side must be >= 1")
    rr, cc = np.divmod(np.arange(side * side, dtype=np.int64), side)
    return np.stack([rr, cc], axis=1)


# ---------------------------------------------------------------------------
# Quadtrees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadTree:
    """Leaf, or internal node with children (upper-left, upper-right,
    lower-right, lower-left)."""

    children: tuple["QuadTree", "QuadTree", "QuadTree", "QuadTree"] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    @property
    def leaf_count(self) -> int:
        if self.is_leaf:
            return 1
        return sum(c.leaf_count for c in self.children)

    @property
    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(c.depth for c in self.children)

    def preorder_bits(self) -> list[int]:
        """1 for an internal node, 0 for a leaf, preorder."""
        if self.is_leaf:
            return [0]
        bits = [1]
        for c in self.children:
            bits.extend(c.preorder_bits())
        return bits


LEAF = QuadTree()


def quadtree_from_bits(bits) -> QuadTree:
    it = iter(bits)

    def build() -> QuadTree:
        b = next(it)
        if b == 0:
            return LEAF
        return QuadTree(tuple(build() for _ in range(4)))

    tree = build()
    for extra in it:
        raise ValueError("trailing bits after quadtree")
    return tree


@lru_cache(maxsize=None)
def _enumerate_trees(m: int, depth_budget: int) -> tuple[QuadTree, ...]:
    trees = []
    if m == 1:
        trees.append(LEAF)
    if m >= 4 and depth_budget >= 1:
        parts = [p for p in range(1, m - 2) if p % 3 == 1]
        for a in parts:
            for b in parts:
                for c in parts:
                    d = m - a - b - c
                    if d < 1 or d % 3 != 1:
                        continue
                    for ta in _enumerate_trees(a, depth_budget - 1):
                        for tb in _enumerate_trees(b, depth_budget - 1):
                            for tc in _enumerate_trees(c, depth_budget - 1):
                                for td in _enumerate_trees(d, depth_budget - 1):
                                    trees.append(QuadTree((ta, tb, tc, td)))
    return tuple(trees)


def quadtree_enumerate(m: int, max_depth: int) -> list[QuadTree]:
    """All quadtrees with exactly m leaves and depth <= max_depth.

    Leaf counts of quadtrees are always of the form 3j + 1; any other m
    yields an empty list plus a warning.
    """
    if m < 1 or m % 3 != 1:
        warnings.warn(f"no quadtree has {m} leaves (must be 3j + 1)")
        return []
    return list(_enumerate_trees(m, max_depth))


@dataclass(frozen=True)
class RegionMap:
    """Per-cell leaf labels (0 .. m-1, leaf preorder) of a quadtree."""

    side: int
    labels: np.ndarray

    @property
    def n_regions(self) -> int:
        return int(self.labels.max()) + 1

    def to_csv(self) -> str:
        lines = ["row,col,label"]
        for r in range(self.side):
            for c in range(self.side):
                lines.append(f"{r},{c},{self.labels[r, c]}")
        return "\n".join(lines) + "\n"


def region_map(tree: QuadTree, side: int) -> RegionMap:
    """Label every cell of an N x N grid by its containing leaf."""
    if side < 1 or side & (side - 1):
        raise ValueError("side must be a power of two")
    if (1 << tree.depth) > side:
        raise ValueError(f"tree depth {tree.depth} too deep for side {side}")
    labels = np.empty((side, side), dtype=np.int64)
    counter = 0

    def fill(node: QuadTree, r0: int, c0: int, size: int):
        nonlocal counter
        if node.is_leaf:
            labels[r0:r0 + size, c0:c0 + size] = counter
            counter += 1
            return
        h = size // 2
        ul, ur, lr, ll = node.children
        fill(ul, r0, c0, h)
        fill(ur, r0, c0 + h, h)
        fill(lr, r0 + h, c0 + h, h)
        fill(ll, r0 + h, c0, h)

    fill(tree, 0, 0, side)
    return RegionMap(side, labels)
