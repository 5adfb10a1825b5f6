"""The four denoisers: fixed-rule and switching, 2-D scan and raster scan.

Every denoiser outputs a switching schedule: one single-symbol rule code
per covered cell. Fixed-rule (DUDE-style) modes pick, for each context,
the rule minimizing the summed estimated loss of the context's cells.
Switching (S-DUDE-style) modes instead run an exact dynamic program over
each context's cells ordered along a scan (Hilbert for 2-D, row-major for
raster), allowing the rule to change at most m times per context.

The DP is the classic bounded-switching recursion over states
(switches used, current rule): stay in the same rule for free or enter
from a different rule by spending one switch. It is exact: the schedule
it returns attains the minimum summed loss over all assignments with at
most m switches. Time and memory are O(len * (m+1) * n_rules).

Modes:
    dude-2d          fixed rule per 2-D spiral context
    sdude-2d         switching along the Hilbert scan per 2-D context
    dude-1d-raster   fixed rule per two-sided 1-D context of the
                     row-major flattened grid
    sdude-1d-raster  switching along the flattened sequence per 1-D context

Cells without a full context (margins) and padded cells pass through
unchanged and are never covered by a schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (
    ContextNeighborhood,
    context_grid,
    interior_mask,
    line_context_ids,
    ph_order,
    spiral_offsets,
)
from .model import (
    ChannelError,
    ChannelModel,
    EstimatedLossTable,
    Grid,
    LossFunction,
    build_estimated_loss,
    output_table,
    validate_channel,
)

MODES = ("dude-2d", "sdude-2d", "dude-1d-raster", "sdude-1d-raster")


@dataclass(frozen=True)
class DenoiseConfig:
    """Context order k, switch budget m (ignored by fixed-rule modes),
    mode, and the margin policy (only passthrough is supported)."""

    k: int
    m: int = 0
    mode: str = "sdude-2d"
    margin_policy: str = "passthrough"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if self.k < 0:
            raise ValueError("context order k must be >= 0")
        if self.m < 0:
            raise ValueError("switch budget m must be >= 0")
        if self.margin_policy != "passthrough":
            raise ValueError("only the passthrough margin policy is supported")


@dataclass(frozen=True)
class SwitchingSchedule:
    """Per-cell single-symbol rule codes; -1 marks uncovered cells."""

    codes: np.ndarray
    covered: np.ndarray
    z_size: int
    xhat_size: int

    def __post_init__(self):
        c = np.asarray(self.codes, dtype=np.int64).copy()
        c.setflags(write=False)
        object.__setattr__(self, "codes", c)
        cov = np.asarray(self.covered, dtype=bool).copy()
        cov.setflags(write=False)
        object.__setattr__(self, "covered", cov)

    def to_csv(self) -> str:
        lines = ["row,col,denoiser"]
        rows, cols = np.nonzero(self.covered)
        for r, c in zip(rows, cols):
            lines.append(f"{r},{c},{self.codes[r, c]}")
        return "\n".join(lines) + "\n"


def schedule_from_csv(text: str, side: int, z_size: int, xhat_size: int) -> SwitchingSchedule:
    codes = np.full((side, side), -1, dtype=np.int64)
    covered = np.zeros((side, side), dtype=bool)
    lines = text.strip().splitlines()
    if not lines or lines[0] != "row,col,denoiser":
        raise ValueError("bad schedule CSV header")
    for line in lines[1:]:
        r, c, s = (int(v) for v in line.split(","))
        codes[r, c] = s
        covered[r, c] = True
    return SwitchingSchedule(codes, covered, z_size, xhat_size)


@dataclass(frozen=True)
class DPState:
    """Per-position forward/backward value tables of the switching DP,
    each of shape (len, budget + 1, n_rules)."""

    forward: np.ndarray
    backward: np.ndarray
    budget: int


def sdude_dp(losses: np.ndarray, budget: int, keep_tables: bool = False):
    """Minimize the summed per-position loss over assignments with at
    most `budget` rule switches.

    losses[i, s] is the cost of using rule s at position i. Returns
    (assignment, value) or (assignment, value, DPState) when keep_tables
    is set. Ties prefer not switching, then the smallest rule code; the
    returned assignment uses the fewest switches among optimal ones found
    by that preference.
    """
    losses = np.asarray(losses, dtype=np.float64)
    if losses.ndim != 2 or losses.shape[0] < 1:
        raise ValueError("losses must be a (len, n_rules) array with len >= 1")
    if budget < 0:
        raise ValueError("switch budget must be >= 0")
    n, n_rules = losses.shape
    m = min(budget, n)
    rows = m + 1
    ridx = np.arange(rows)
    sidx = np.arange(n_rules)

    f = np.empty((rows, n_rules))
    f[:] = losses[0]
    switched = np.zeros((n, rows, n_rules), dtype=bool)
    best1 = np.zeros((n, rows), dtype=np.int32)
    best2 = np.zeros((n, rows), dtype=np.int32)
    fwd = [f.copy()] if keep_tables else None

    for i in range(1, n):
        b1 = np.argmin(f, axis=1)
        v1 = f[ridx, b1]
        masked = f.copy()
        masked[ridx, b1] = np.inf
        b2 = np.argmin(masked, axis=1)
        v2 = masked[ridx, b2]
        best1[i] = b1
        best2[i] = b2
        new = np.empty_like(f)
        new[0] = losses[i] + f[0]
        if rows > 1:
            enter = np.where(sidx[None, :] == b1[:-1, None],
                             v2[:-1, None], v1[:-1, None])
            use = enter < f[1:]
            switched[i, 1:] = use
            new[1:] = losses[i] + np.where(use, enter, f[1:])
        f = new
        if keep_tables:
            fwd.append(f.copy())

    j, s = divmod(int(np.argmin(f)), n_rules)
    value = float(f[j, s])

    assignment = np.empty(n, dtype=np.int64)
    assignment[n - 1] = s
    for i in range(n - 1, 0, -1):
        if switched[i, j, s]:
            prev = int(best1[i, j - 1])
            if prev == s:
                prev = int(best2[i, j - 1])
            s = prev
            j -= 1
        assignment[i - 1] = s

    if not keep_tables:
        return assignment, value
    bwd = [None] * n
    b = np.empty((rows, n_rules))
    b[:] = losses[n - 1]
    bwd[n - 1] = b.copy()
    for i in range(n - 2, -1, -1):
        b1 = np.argmin(b, axis=1)
        v1 = b[ridx, b1]
        masked = b.copy()
        masked[ridx, b1] = np.inf
        v2 = masked[ridx, np.argmin(masked, axis=1)]
        new = np.empty_like(b)
        new[0] = losses[i] + b[0]
        if rows > 1:
            enter = np.where(sidx[None, :] == b1[:-1, None],
                             v2[:-1, None], v1[:-1, None])
            new[1:] = losses[i] + np.minimum(enter, b[1:])
        b = new
        bwd[i] = b.copy()
    state = DPState(np.stack(fwd), np.stack(bwd), m)
    return assignment, value, state


def dude_rule(losses: np.ndarray) -> int:
    """Best fixed rule for one group: argmin of the column sums."""
    losses = np.asarray(losses, dtype=np.float64)
    return int(np.argmin(losses.sum(axis=0)))


def dude_per_context(groups, table: EstimatedLossTable) -> dict:
    """Best fixed rule per context for explicit symbol groups.

    groups maps context id -> sequence of noisy symbols; empty groups are
    skipped. Ties go to the smallest rule code.
    """
    rules = {}
    for ctx, symbols in groups.items():
        symbols = np.asarray(symbols, dtype=np.int64)
        if symbols.size == 0:
            continue
        rules[ctx] = dude_rule(table.table[symbols])
    return rules


def switch_count(codes: np.ndarray) -> int:
    codes = np.asarray(codes)
    if codes.size <= 1:
        return 0
    return int((codes[1:] != codes[:-1]).sum())


# ---------------------------------------------------------------------------
# Grid drivers
# ---------------------------------------------------------------------------

def _best_rules_from_counts(counts: np.ndarray, table: EstimatedLossTable) -> np.ndarray:
    return np.argmin(counts @ table.table, axis=1)


def ph_interior_sequence(noisy: Grid, nb: ContextNeighborhood):
    """Covered cells in Hilbert order with their context ids.

    Returns (rows, cols, ctx) restricted to interior, non-padded cells.
    """
    side = noisy.side
    order = ph_order(side.bit_length() - 1)
    covered = interior_mask(side, nb.margin) & ~noisy.pad_mask
    rr = order.to_coord[:, 0]
    cc = order.to_coord[:, 1]
    keep = covered[rr, cc]
    rr, cc = rr[keep], cc[keep]
    ctx2d = context_grid(noisy.data, nb, noisy.alphabet_size)
    return rr, cc, ctx2d[rr - nb.margin, cc - nb.margin]


def _group_slices(ctx_seq: np.ndarray):
    """Stable grouping of sequence positions by context id."""
    order = np.argsort(ctx_seq, kind="stable")
    sorted_ctx = ctx_seq[order]
    bounds = np.flatnonzero(np.diff(sorted_ctx)) + 1
    starts = np.concatenate([[0], bounds])
    ends = np.concatenate([bounds, [ctx_seq.size]])
    return [order[a:b] for a, b in zip(starts, ends)]


def _schedule_2d(noisy: Grid, config: DenoiseConfig,
                 table: EstimatedLossTable) -> SwitchingSchedule:
    nb = spiral_offsets(config.k)
    side = noisy.side
    covered = interior_mask(side, nb.margin) & ~noisy.pad_mask
    if not covered.any():
        raise ValueError(f"context order {config.k} leaves no usable interior")
    codes = np.full((side, side), -1, dtype=np.int64)
    z = noisy.data.astype(np.int64)
    if config.mode == "dude-2d":
        ctx2d = context_grid(noisy.data, nb, noisy.alphabet_size)
        inner = interior_mask(side, nb.margin)
        sel = covered[inner].reshape(ctx2d.shape)
        # compact to the contexts that actually occur
        uniq, inv = np.unique(ctx2d[sel], return_inverse=True)
        flat = inv * noisy.alphabet_size + z[covered]
        counts = np.bincount(flat, minlength=uniq.size * noisy.alphabet_size)
        counts = counts.reshape(uniq.size, noisy.alphabet_size)
        rules = _best_rules_from_counts(counts, table)
        codes[covered] = rules[inv]
    else:
        rr, cc, ctx_seq = ph_interior_sequence(noisy, nb)
        z_seq = z[rr, cc]
        for idx in _group_slices(ctx_seq):
            assignment, _ = sdude_dp(table.table[z_seq[idx]],
                                     min(config.m, idx.size))
            codes[rr[idx], cc[idx]] = assignment
    return SwitchingSchedule(codes, covered, table.z_size, table.xhat_size)


def _schedule_raster(noisy: Grid, config: DenoiseConfig,
                     table: EstimatedLossTable) -> SwitchingSchedule:
    side = noisy.side
    seq = noisy.data.ravel().astype(np.int64)
    n = seq.size
    k = config.k
    if n - 2 * k <= 0:
        raise ValueError(f"context order {k} leaves no usable interior")
    ctx = line_context_ids(seq, k, noisy.alphabet_size)
    pos = np.arange(k, n - k)
    keep = ~noisy.pad_mask.ravel()[pos]
    pos, ctx = pos[keep], ctx[keep]
    if pos.size == 0:
        raise ValueError(f"context order {k} leaves no usable interior")
    flat_codes = np.full(n, -1, dtype=np.int64)
    if config.mode == "dude-1d-raster":
        uniq, inv = np.unique(ctx, return_inverse=True)
        flat = inv * noisy.alphabet_size + seq[pos]
        counts = np.bincount(flat, minlength=uniq.size * noisy.alphabet_size)
        counts = counts.reshape(uniq.size, noisy.alphabet_size)
        rules = _best_rules_from_counts(counts, table)
        flat_codes[pos] = rules[inv]
    else:
        for idx in _group_slices(ctx):
            assignment, _ = sdude_dp(table.table[seq[pos[idx]]],
                                     min(config.m, idx.size))
            flat_codes[pos[idx]] = assignment
    covered = np.zeros(n, dtype=bool)
    covered[pos] = True
    return SwitchingSchedule(flat_codes.reshape(side, side),
                             covered.reshape(side, side),
                             table.z_size, table.xhat_size)


def apply_schedule(noisy: Grid, schedule: SwitchingSchedule) -> Grid:
    """Reconstruct: covered cells get rule(z), the rest pass through."""
    tab = output_table(schedule.z_size, schedule.xhat_size)
    recon = noisy.data.copy()
    sel = schedule.covered
    recon[sel] = tab[schedule.codes[sel], noisy.data[sel]]
    return Grid(recon, noisy.pad_mask,
                max(noisy.alphabet_size, schedule.xhat_size))


def denoise(noisy: Grid, config: DenoiseConfig, channel: ChannelModel,
            loss: LossFunction):
    """Run one denoiser; returns (schedule, reconstructed grid)."""
    report = validate_channel(channel)
    if not report.accepted:
        raise ChannelError(f"invalid channel: {', '.join(report.causes)}")
    if channel.noisy.size < 2:
        raise ValueError("noisy alphabet must have at least 2 symbols")
    if noisy.alphabet_size != channel.noisy.size:
        raise ValueError(
            f"grid alphabet {noisy.alphabet_size} does not match channel "
            f"noisy alphabet {channel.noisy.size}"
        )
    table = build_estimated_loss(channel, loss)
    if config.mode in ("dude-2d", "sdude-2d"):
        schedule = _schedule_2d(noisy, config, table)
    else:
        schedule = _schedule_raster(noisy, config, table)
    return schedule, apply_schedule(noisy, schedule)
