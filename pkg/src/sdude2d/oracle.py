"""Genie-aided performance targets and exact reference-class minimizers.

These routines see the clean data and certify what the blind algorithms
should approach: the best fixed rule per context (genie_fixed), the best
bounded-switching assignment along the Hilbert scan (bruteforce_ph_class,
exact at any size because the switching DP is exact), and the best
quadtree-piecewise assignment (bruteforce_qt_class, exhaustive over all
quadtrees with m leaves, so desk scale only). Since every quadtree
region is a dyadic quadrant and the Hilbert scan visits quadrants
contiguously, any m-region quadtree assignment induces at most m switches
along the scan; the scan-class minimum therefore never exceeds the
quadtree-class minimum.

Also here: the leaf-choice counting lower bound on the number of
quadtree-piecewise rule combinations, and evaluators for the
concentration bounds on the switching scheme's excess loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .denoise import SwitchingSchedule, schedule_from_csv, sdude_dp
from .geometry import (
    QuadTree,
    context_grid,
    interior_mask,
    ph_order,
    quadtree_enumerate,
    quadtree_from_bits,
    region_map,
    spiral_offsets,
)
from .model import Grid, LossFunction, cumulative_true_loss, output_table

TARGETS = ("dk", "dphkm", "d2d0m")


@dataclass(frozen=True)
class GenieReport:
    """A performance target value with the schedule (and quadtree, when
    applicable) that attains it."""

    target: str
    value: float
    schedule: SwitchingSchedule
    quadtree: QuadTree | None = None

    def reevaluate(self, clean: Grid, noisy: Grid, loss: LossFunction) -> float:
        return cumulative_true_loss(clean, self.schedule, noisy, loss,
                                    self.schedule.covered & ~noisy.pad_mask)


def _check_pair(clean: Grid, noisy: Grid):
    if clean.side != noisy.side:
        raise ValueError("clean and noisy grids must share a side")
    if (clean.pad_mask != noisy.pad_mask).any():
        raise ValueError("clean and noisy grids must share a pad mask")


def _true_loss_cube(loss: LossFunction, z_size: int) -> np.ndarray:
    """cube[x, z, s] = loss of rule s on the pair (x, z)."""
    out = output_table(z_size, loss.recon_size)  # (S, Z)
    return np.transpose(loss.matrix[:, out], (0, 2, 1))


def genie_fixed(clean: Grid, noisy: Grid, k: int, loss: LossFunction) -> GenieReport:
    """Best fixed rule per 2-D context, chosen with the clean data.

    Minimizes the true summed loss independently per context; the value
    is normalized by the number of covered cells.
    """
    _check_pair(clean, noisy)
    nb = spiral_offsets(k)
    side = noisy.side
    covered = interior_mask(side, nb.margin) & ~noisy.pad_mask
    if not covered.any():
        raise ValueError(f"context order {k} leaves no usable interior")
    ctx2d = context_grid(noisy.data, nb, noisy.alphabet_size)
    inner = interior_mask(side, nb.margin)
    sel = covered[inner].reshape(ctx2d.shape)
    uniq, inv = np.unique(ctx2d[sel], return_inverse=True)
    x = clean.data[covered].astype(np.int64)
    z = noisy.data[covered].astype(np.int64)
    xs, zs = clean.alphabet_size, noisy.alphabet_size
    counts = np.bincount((inv * xs + x) * zs + z,
                         minlength=uniq.size * xs * zs).reshape(uniq.size, xs, zs)
    cube = _true_loss_cube(loss, zs)  # (X, Z, S)
    per_cs = np.tensordot(counts, cube, axes=([1, 2], [0, 1]))  # (C, S)
    rules = np.argmin(per_cs, axis=1)
    value = float(per_cs[np.arange(uniq.size), rules].sum() / inv.size)
    codes = np.full((side, side), -1, dtype=np.int64)
    codes[covered] = rules[inv]
    schedule = SwitchingSchedule(codes, covered, zs, loss.recon_size)
    return GenieReport("dk", value, schedule)


def bruteforce_ph_class(clean: Grid, noisy: Grid, k: int, m: int,
                        loss: LossFunction) -> GenieReport:
    """Exact minimum true loss over per-context scan assignments with at
    most m switches each (the Hilbert-scan reference class)."""
    _check_pair(clean, noisy)
    nb = spiral_offsets(k)
    side = noisy.side
    covered = interior_mask(side, nb.margin) & ~noisy.pad_mask
    if not covered.any():
        raise ValueError(f"context order {k} leaves no usable interior")
    order = ph_order(side.bit_length() - 1)
    rr = order.to_coord[:, 0]
    cc = order.to_coord[:, 1]
    keep = covered[rr, cc]
    rr, cc = rr[keep], cc[keep]
    ctx2d = context_grid(noisy.data, nb, noisy.alphabet_size)
    ctx_seq = ctx2d[rr - nb.margin, cc - nb.margin]
    cube = _true_loss_cube(loss, noisy.alphabet_size)
    pos_losses = cube[clean.data[rr, cc], noisy.data[rr, cc]]  # (len, S)
    codes = np.full((side, side), -1, dtype=np.int64)
    total = 0.0
    sort = np.argsort(ctx_seq, kind="stable")
    bounds = np.flatnonzero(np.diff(ctx_seq[sort])) + 1
    for idx in np.split(sort, bounds):
        assignment, value = sdude_dp(pos_losses[idx], min(m, idx.size))
        codes[rr[idx], cc[idx]] = assignment
        total += value
    schedule = SwitchingSchedule(codes, covered, noisy.alphabet_size,
                                 loss.recon_size)
    return GenieReport("dphkm", total / rr.size, schedule)


def bruteforce_qt_class(clean: Grid, noisy: Grid, m: int, loss: LossFunction,
                        max_depth: int | None = None) -> GenieReport:
    """Exhaustive minimum true loss over quadtree-piecewise assignments.

    Every quadtree with m leaves (depth capped at log2(side), where
    deeper trees would split unit cells) is tried; each region gets its
    true-loss-best fixed rule.
    """
    _check_pair(clean, noisy)
    side = clean.side
    r = side.bit_length() - 1
    depth_cap = r if max_depth is None else min(max_depth, r)
    trees = quadtree_enumerate(m, depth_cap)
    if not trees:
        raise ValueError(f"no quadtrees with {m} leaves at depth <= {depth_cap}")
    valid = ~clean.pad_mask
    if not valid.any():
        raise ValueError("grid is entirely padding")
    x = clean.data[valid].astype(np.int64)
    z = noisy.data[valid].astype(np.int64)
    xs, zs = clean.alphabet_size, noisy.alphabet_size
    cube = _true_loss_cube(loss, zs)
    n_valid = int(valid.sum())
    best = None
    for tree in trees:
        labels = region_map(tree, side).labels
        lab = labels[valid]
        counts = np.bincount((lab * xs + x) * zs + z,
                             minlength=m * xs * zs).reshape(m, xs, zs)
        per_ls = np.tensordot(counts, cube, axes=([1, 2], [0, 1]))  # (m, S)
        rules = np.argmin(per_ls, axis=1)
        occupied = np.bincount(lab, minlength=m) > 0
        value = float(per_ls[np.arange(m), rules][occupied].sum() / n_valid)
        if best is None or value < best[0] - 1e-15:
            codes = np.full((side, side), -1, dtype=np.int64)
            codes[valid] = rules[lab]
            best = (value, tree, codes)
    value, tree, codes = best
    schedule = SwitchingSchedule(codes, valid, zs, loss.recon_size)
    return GenieReport("d2d0m", value, schedule, quadtree=tree)


# ---------------------------------------------------------------------------
# Counting and concentration bounds
# ---------------------------------------------------------------------------

def split_count_lower_bound(m: int) -> int:
    """Product of (3i + 1) over the splits building an m-leaf quadtree:
    a lower bound on the number of quadtree-piecewise rule combinations,
    and at least 3**((m - 4) / 3)."""
    if m < 1 or m % 3 != 1:
        raise ValueError(f"leaf count must be 3j + 1, got {m}")
    j = (m - 1) // 3
    out = 1
    for i in range(j):
        out *= 3 * i + 1
    return out


def binary_entropy(x: float) -> float:
    """Natural-log binary entropy, 0 at both endpoints by continuity."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"entropy argument must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log(1.0 - x)


@dataclass(frozen=True)
class BoundParams:
    """Inputs to the excess-loss concentration bounds."""

    epsilon: float
    n: int
    m: int
    z_size: int
    xhat_size: int
    loss_bound: float
    k: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 <= self.m <= self.n:
            raise ValueError("need 0 <= m <= n")
        if self.loss_bound <= 0:
            raise ValueError("loss bound must be positive")


def _safe_exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def excess_loss_bound(params: BoundParams, order: str = "zeroth") -> float:
    """Probability that the switching scheme exceeds its target by more
    than epsilon; values above 1 are reported as-is (vacuous bound).

    The zeroth-order form is
        2 exp(-n [eps^2 / (2 L^2) - 2 (h(m/n) + (m+1) ln|S| / n)]);
    the k-th order form multiplies the prefactor by (margin+1)^2, scales
    the eps term down by the same factor, and scales the class-size term
    up by the number of contexts |Z|^(2k), with n taken as the interior
    count.
    """
    n_rules = params.xhat_size ** params.z_size
    h = binary_entropy(params.m / params.n)
    class_term = h + (params.m + 1) * math.log(n_rules) / params.n
    if order == "zeroth":
        inner = (params.epsilon ** 2 / (2.0 * params.loss_bound ** 2)
                 - 2.0 * class_term)
        return 2.0 * _safe_exp(-params.n * inner)
    if order == "kth":
        kt = -(-params.k // 4)
        inner = ((params.epsilon / params.loss_bound) ** 2 / (2.0 * (kt + 1) ** 2)
                 - 2.0 * params.z_size ** (2 * params.k) * class_term)
        return 2.0 * (kt + 1) ** 2 * _safe_exp(-params.n * inner)
    raise ValueError(f"unknown bound order {order!r}")


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------

REPORT_MAGIC = "sdude2d-genie-report 1"


def format_report(report: GenieReport) -> str:
    lines = [
        REPORT_MAGIC,
        f"target {report.target}",
        f"value {report.value!r}",
        f"side {report.schedule.codes.shape[0]}",
        f"alphabets {report.schedule.z_size} {report.schedule.xhat_size}",
    ]
    if report.quadtree is not None:
        bits = " ".join(str(b) for b in report.quadtree.preorder_bits())
        lines.append(f"quadtree {bits}")
    lines.append("witness")
    lines.append(report.schedule.to_csv().rstrip("\n"))
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> GenieReport:
    lines = text.splitlines()
    if not lines or lines[0] != REPORT_MAGIC:
        raise ValueError("unrecognized report header")
    fields = {}
    i = 1
    while i < len(lines) and lines[i] != "witness":
        key, _, rest = lines[i].partition(" ")
        fields[key] = rest
        i += 1
    if i == len(lines):
        raise ValueError("report has no witness section")
    target = fields["target"]
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}")
    side = int(fields["side"])
    z_size, xhat_size = (int(v) for v in fields["alphabets"].split())
    schedule = schedule_from_csv("\n".join(lines[i + 1:]), side, z_size, xhat_size)
    tree = None
    if "quadtree" in fields:
        tree = quadtree_from_bits(int(b) for b in fields["quadtree"].split())
    return GenieReport(target, float(fields["value"]), schedule, quadtree=tree)
