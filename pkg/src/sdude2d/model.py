"""Finite alphabets, memoryless channels, and the observable surrogate loss.

Symbols are corrupted independently by a known channel matrix pi, where
pi[x, z] is the probability of observing noisy symbol z when the clean
symbol is x. Reconstruction quality is judged by a loss matrix lam over
(clean, reconstructed) pairs. Since the clean data is unavailable at
denoising time, every algorithm in this package instead minimizes an
estimated per-symbol loss l(z, s) defined so that its channel expectation
matches the true expected loss of the single-symbol rule s for every
clean symbol:

    sum_z pi[x, z] * l(z, s)  ==  sum_z pi[x, z] * lam[x, s(z)]   for all x.

The system is solved exactly when pi is square and by the minimum-norm
right inverse pi.T @ inv(pi @ pi.T) when there are more noisy than clean
symbols; either way pi must have full row rank. Estimated losses may be
negative (for a binary symmetric channel with crossover 0.1 and Hamming
loss, the always-output-0 rule has l(0, s) = -0.125).

A single-symbol rule s: Z -> Xhat is encoded as an integer in
[0, |Xhat|**|Z|) whose base-|Xhat| digit z is the output for noisy
symbol z. All symbols, coordinates, and encodings are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ROW_SUM_TOL = 1e-12
RANK_TOL = 1e-9
MAX_RULES = 1 << 20


class ChannelError(ValueError):
    """Channel matrix fails validation (shape, stochasticity, or rank)."""


@dataclass(frozen=True)
class Alphabet:
    """A finite alphabet whose symbols are 0 .. size-1."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"alphabet size must be >= 1, got {self.size}")


@dataclass(frozen=True)
class ChannelModel:
    """A discrete memoryless channel from a clean to a noisy alphabet."""

    clean: Alphabet
    noisy: Alphabet
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (self.clean.size, self.noisy.size):
            raise ChannelError(
                f"channel matrix shape {m.shape} does not match alphabets "
                f"({self.clean.size}, {self.noisy.size})"
            )
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class LossFunction:
    """Nonnegative loss matrix over (clean symbol, reconstructed symbol)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("loss matrix must be 2-D")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("loss entries must be finite and >= 0")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def clean_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def recon_size(self) -> int:
        return self.matrix.shape[1]


def hamming_loss(size: int) -> LossFunction:
    return LossFunction(1.0 - np.eye(size))


def bsc(delta: float) -> ChannelModel:
    """Binary symmetric channel with crossover probability delta."""
    if not 0.0 <= delta <= 1.0:
        raise ChannelError(f"crossover probability must be in [0, 1], got {delta}")
    m = np.array([[1.0 - delta, delta], [delta, 1.0 - delta]])
    return ChannelModel(Alphabet(2), Alphabet(2), m)


@dataclass(frozen=True)
class ChannelReport:
    """Validation result: row sums, smallest singular value, named causes."""

    accepted: bool
    causes: tuple[str, ...]
    row_sums: np.ndarray
    min_singular_value: float


def validate_channel(channel: ChannelModel) -> ChannelReport:
    """Check nonnegativity, row-stochasticity, and full row rank of pi.

    A channel is accepted iff every entry is >= 0, every row sums to 1
    within 1e-12, and the smallest singular value exceeds 1e-9.
    """
    m = channel.matrix
    causes = []
    if np.any(m < 0):
        causes.append("negative entry")
    row_sums = m.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
        causes.append("row sum != 1")
    sv = np.linalg.svd(m, compute_uv=False)
    min_sv = float(sv[-1]) if sv.size else 0.0
    if min_sv <= RANK_TOL:
        causes.append("rank-deficient")
    return ChannelReport(not causes, tuple(causes), row_sums, min_sv)


# ---------------------------------------------------------------------------
# Single-symbol rule encoding
# ---------------------------------------------------------------------------

def num_rules(z_size: int, xhat_size: int) -> int:
    n = xhat_size ** z_size
    if n > MAX_RULES:
        raise ValueError(
            f"{xhat_size}**{z_size} = {n} single-symbol rules exceeds the "
            f"supported maximum {MAX_RULES}"
        )
    return n


def output_table(z_size: int, xhat_size: int) -> np.ndarray:
    """Table t of shape (num_rules, z_size) with t[code, z] = rule output."""
    n = num_rules(z_size, xhat_size)
    codes = np.arange(n, dtype=np.int64)[:, None]
    powers = xhat_size ** np.arange(z_size, dtype=np.int64)[None, :]
    return (codes // powers) % xhat_size


def encode_rule(outputs, xhat_size: int) -> int:
    """Inverse of output_table rows: pack per-symbol outputs into a code."""
    outputs = np.asarray(outputs, dtype=np.int64)
    if np.any(outputs < 0) or np.any(outputs >= xhat_size):
        raise ValueError("rule outputs out of range")
    powers = xhat_size ** np.arange(outputs.size, dtype=np.int64)
    return int((outputs * powers).sum())


@dataclass(frozen=True)
class SingleSymbolDenoiser:
    """One map from noisy to reconstructed symbols, identified by its code."""

    code: int
    z_size: int
    xhat_size: int

    def __post_init__(self):
        if not 0 <= self.code < num_rules(self.z_size, self.xhat_size):
            raise ValueError(f"rule code {self.code} out of range")

    @property
    def outputs(self) -> np.ndarray:
        powers = self.xhat_size ** np.arange(self.z_size, dtype=np.int64)
        return (self.code // powers) % self.xhat_size

    def __call__(self, z: int) -> int:
        return int(self.outputs[z])


# ---------------------------------------------------------------------------
# Estimated loss
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimatedLossTable:
    """Estimated loss l[z, code] for every noisy symbol and rule code.

    l_max, lambda_max and their sum loss_bound are the constants entering
    the concentration bounds for the switching scheme.
    """

    table: np.ndarray
    outputs: np.ndarray
    z_size: int
    xhat_size: int
    l_max: float
    lambda_max: float
    loss_bound: float = field(init=False)

    def __post_init__(self):
        for name in ("table", "outputs"):
            a = getattr(self, name).copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "loss_bound", self.lambda_max + self.l_max)

    @property
    def n_rules(self) -> int:
        return self.table.shape[1]


def expected_loss_matrix(channel: ChannelModel, loss: LossFunction) -> np.ndarray:
    """True expected loss P[x, code] = sum_z pi[x, z] * lam[x, rule(z)]."""
    if loss.clean_size != channel.clean.size:
        raise ValueError("loss matrix rows do not match clean alphabet")
    out = output_table(channel.noisy.size, loss.recon_size)
    lam_sel = loss.matrix[:, out]  # (X, S, Z)
    return np.einsum("xz,xsz->xs", channel.matrix, lam_sel)


def build_estimated_loss(channel: ChannelModel, loss: LossFunction) -> EstimatedLossTable:
    """Solve pi @ l = P for the estimated-loss table of every rule.

    Requires a validated full-row-rank channel; raises ChannelError
    otherwise. Uses exact inversion for square pi and the minimum-norm
    right-inverse solution when the noisy alphabet is strictly larger.
    """
    report = validate_channel(channel)
    if not report.accepted:
        raise ChannelError(f"invalid channel: {', '.join(report.causes)}")
    p = expected_loss_matrix(channel, loss)
    pi = channel.matrix
    if channel.noisy.size == channel.clean.size:
        table = np.linalg.solve(pi, p)
    else:
        table = pi.T @ np.linalg.solve(pi @ pi.T, p)
    return EstimatedLossTable(
        table=table,
        outputs=output_table(channel.noisy.size, loss.recon_size),
        z_size=channel.noisy.size,
        xhat_size=loss.recon_size,
        l_max=float(table.max()),
        lambda_max=float(loss.matrix.max()),
    )


def unbiasedness_gap(channel: ChannelModel, loss: LossFunction,
                     table: EstimatedLossTable) -> float:
    """Max absolute deviation of pi @ l from the true expected loss."""
    p = expected_loss_matrix(channel, loss)
    return float(np.abs(channel.matrix @ table.table - p).max())


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """A dyadic square of symbols plus a mask of dummy-padded cells.

    Padded cells may appear in other cells' contexts but are excluded
    from every loss and error-rate computation.
    """

    data: np.ndarray
    pad_mask: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        d = np.asarray(self.data)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError(f"grid must be square, got shape {d.shape}")
        n = d.shape[0]
        if n & (n - 1) != 0:
            raise ValueError(f"grid side must be a power of two, got {n}")
        if d.size and (d.min() < 0 or d.max() >= self.alphabet_size):
            raise ValueError("grid symbols out of alphabet range")
        d = d.astype(np.int32, copy=True)
        d.setflags(write=False)
        object.__setattr__(self, "data", d)
        p = np.asarray(self.pad_mask, dtype=bool).copy()
        if p.shape != d.shape:
            raise ValueError("pad mask shape must match data")
        p.setflags(write=False)
        object.__setattr__(self, "pad_mask", p)

    @property
    def side(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.size


def next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


def make_grid(array, alphabet_size: int) -> Grid:
    """Wrap a 2-D symbol array, padding with symbol 0 to a dyadic square."""
    a = np.asarray(array)
    if a.ndim != 2:
        raise ValueError("expected a 2-D array")
    h, w = a.shape
    if h < 1 or w < 1:
        raise ValueError("empty image")
    side = next_pow2(max(h, w))
    data = np.zeros((side, side), dtype=np.int32)
    data[:h, :w] = a
    pad = np.ones((side, side), dtype=bool)
    pad[:h, :w] = False
    return Grid(data, pad, alphabet_size)


def crop_valid(grid: Grid) -> np.ndarray:
    """The non-padded sub-array (padding always sits bottom/right)."""
    valid = ~grid.pad_mask
    rows = np.flatnonzero(valid.any(axis=1))
    cols = np.flatnonzero(valid.any(axis=0))
    return grid.data[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1].copy()


# ---------------------------------------------------------------------------
# Cumulative losses over a region
# ---------------------------------------------------------------------------

def _check_region(grid: Grid, region: np.ndarray) -> np.ndarray:
    region = np.asarray(region, dtype=bool)
    if region.shape != grid.data.shape:
        raise ValueError("region shape must match the grid")
    if not region.any():
        raise ValueError("empty region")
    if (region & grid.pad_mask).any():
        raise ValueError("region contains padded cells")
    return region


def cumulative_true_loss(clean: Grid, schedule, noisy: Grid,
                         loss: LossFunction, region) -> float:
    """Average lam[x_t, s_t(z_t)] over the region under the schedule."""
    if clean.side != noisy.side:
        raise ValueError("grids must share a side")
    region = _check_region(noisy, region)
    if not (region <= schedule.covered).all():
        raise ValueError("schedule does not cover the region")
    tab = output_table(schedule.z_size, schedule.xhat_size)
    xhat = tab[schedule.codes[region], noisy.data[region]]
    return float(loss.matrix[clean.data[region], xhat].mean())


def cumulative_estimated_loss(noisy: Grid, schedule,
                              table: EstimatedLossTable, region) -> float:
    """Average estimated loss l[z_t, s_t] over the region."""
    region = _check_region(noisy, region)
    if not (region <= schedule.covered).all():
        raise ValueError("schedule does not cover the region")
    return float(table.table[noisy.data[region], schedule.codes[region]].mean())


# ---------------------------------------------------------------------------
# Plain-text matrix files and shorthand specs
# ---------------------------------------------------------------------------

def parse_matrix(text: str) -> np.ndarray:
    """Parse "rows cols" header plus row-major whitespace-separated values."""
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if len(tokens) < 2:
        raise ValueError("matrix file needs a 'rows cols' header")
    rows, cols = int(tokens[0]), int(tokens[1])
    vals = [float(t) for t in tokens[2:]]
    if len(vals) != rows * cols:
        raise ValueError(f"expected {rows * cols} values, got {len(vals)}")
    return np.array(vals).reshape(rows, cols)


def format_matrix(m: np.ndarray) -> str:
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    for row in m:
        lines.append(" ".join(f"{v:.12g}" for v in row))
    return "\n".join(lines) + "\n"


def channel_from_spec(spec: str) -> ChannelModel:
    """Build a channel from "bsc:<delta>" or a matrix file path."""
    if spec.startswith("bsc:"):
        return bsc(float(spec[4:]))
    with open(spec, "r", encoding="ascii") as fh:
        m = parse_matrix(fh.read())
    return ChannelModel(Alphabet(m.shape[0]), Alphabet(m.shape[1]), m)


def loss_from_spec(spec: str, clean_size: int, recon_size: int | None = None) -> LossFunction:
    """Build a loss from "hamming" or a matrix file path."""
    if spec == "hamming":
        return hamming_loss(clean_size if recon_size is None else max(clean_size, recon_size))
    with open(spec, "r", encoding="ascii") as fh:
        return LossFunction(parse_matrix(fh.read()))
