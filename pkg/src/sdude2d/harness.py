"""Channel simulation, synthetic test images, metrics, and sweep running.

Corruption is counter-based: the uniform draw for each cell comes from a
Philox stream keyed by the seed, generated in one fixed row-major pass,
so the noisy grid depends only on (clean grid, channel, seed) and never
on traversal order.

Synthetic composites paste four quadrant textures with deliberately
different per-region optimal rules (e.g. solid black next to dense
speckle), recreating the regime where a region-switching denoiser beats
any single fixed-rule denoiser.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .denoise import DenoiseConfig, denoise
from .geometry import interior_mask, spiral_offsets
from .model import (
    ChannelModel,
    Grid,
    LossFunction,
    channel_from_spec,
    cumulative_true_loss,
    loss_from_spec,
    make_grid,
    validate_channel,
)
from .netpbm import read_netpbm, write_netpbm
from .oracle import bruteforce_ph_class

DEFAULT_RECIPES = ("constant:1", "speckle:0.8", "checkerboard", "constant:0")


def corrupt(clean: Grid, channel: ChannelModel, seed: int) -> Grid:
    """Pass every non-padded cell through the channel, deterministically."""
    report = validate_channel(channel)
    if not report.accepted:
        raise ValueError(f"invalid channel: {', '.join(report.causes)}")
    if clean.alphabet_size > channel.clean.size:
        raise ValueError("clean grid alphabet exceeds channel input alphabet")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    u = rng.random(clean.data.shape)
    cdf = np.cumsum(channel.matrix, axis=1)
    noisy = (u[..., None] >= cdf[clean.data][..., :-1]).sum(axis=-1)
    noisy[clean.pad_mask] = clean.data[clean.pad_mask]
    return Grid(noisy, clean.pad_mask, channel.noisy.size)


# ---------------------------------------------------------------------------
# Synthetic quadrant textures
# ---------------------------------------------------------------------------

def _recipe_array(spec: str, side: int, rng: np.random.Generator) -> np.ndarray:
    name, _, arg = spec.partition(":")
    rr, cc = np.indices((side, side))
    if name == "constant":
        return np.full((side, side), int(arg or 0), dtype=np.int32)
    if name == "checkerboard":
        return ((rr + cc) % 2).astype(np.int32)
    if name == "hstripes":
        period = int(arg or 2)
        return ((rr // period) % 2).astype(np.int32)
    if name == "vstripes":
        period = int(arg or 2)
        return ((cc // period) % 2).astype(np.int32)
    if name == "speckle":
        density = float(arg or 0.5)
        return (rng.random((side, side)) < density).astype(np.int32)
    if name == "blobs":
        cell = int(arg or 8)
        coarse = side // cell if side >= cell else 1
        low = rng.random((coarse, coarse)) < 0.5
        return np.kron(low, np.ones((side // coarse, side // coarse),
                                    dtype=np.int32))[:side, :side]
    raise ValueError(f"unknown recipe {spec!r}")


def synthesize_composite(side: int, recipes=DEFAULT_RECIPES, seed: int = 0) -> Grid:
    """Paste four quadrant recipes (upper-left, upper-right, lower-right,
    lower-left) into a binary side x side grid."""
    if side < 2 or side & (side - 1):
        raise ValueError("side must be a power of two >= 2")
    if len(recipes) != 4:
        raise ValueError("need exactly 4 quadrant recipes")
    h = side // 2
    data = np.zeros((side, side), dtype=np.int32)
    corners = [(0, 0), (0, h), (h, h), (h, 0)]
    for q, (spec, (r0, c0)) in enumerate(zip(recipes, corners)):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(seed) * 4 + q))
        data[r0:r0 + h, c0:c0 + h] = _recipe_array(spec, h, rng)
    return Grid(data, np.zeros((side, side), dtype=bool), 2)


def ber(clean: Grid, test: Grid, region) -> float:
    """Fraction of region cells whose symbols differ."""
    if clean.side != test.side:
        raise ValueError("grids must share a side")
    region = np.asarray(region, dtype=bool)
    if not region.any():
        raise ValueError("empty region")
    if (region & clean.pad_mask).any():
        raise ValueError("region contains padded cells")
    return float((clean.data[region] != test.data[region]).mean())


def interior_region(grid: Grid, k: int) -> np.ndarray:
    """Cells with a full order-k context, excluding padding."""
    nb = spiral_offsets(k)
    return interior_mask(grid.side, nb.margin) & ~grid.pad_mask


# ---------------------------------------------------------------------------
# Experiment sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: an image source, a channel, and (mode, k, m, seed) cells."""

    image: str = "composite:64"
    recipes: tuple[str, ...] = DEFAULT_RECIPES
    channel: str = "bsc:0.1"
    loss: str = "hamming"
    seeds: tuple[int, ...] = (1,)
    ks: tuple[int, ...] = (1, 2)
    ms: tuple[int, ...] = (0, 4)
    modes: tuple[str, ...] = ("dude-2d", "sdude-2d")
    out_dir: str | None = None
    save_images: bool = False
    oracle_targets: bool = False
    composite_seed: int = 0


def parse_experiment_config(text: str) -> ExperimentConfig:
    """Parse flat "key = value" lines; lists are comma-separated."""
    cfg = ExperimentConfig()
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in ("image", "channel", "loss", "out_dir"):
            updates[key] = value
        elif key in ("recipes", "modes"):
            updates[key] = tuple(v.strip() for v in value.split(","))
        elif key in ("seeds", "ks", "ms"):
            updates[key] = tuple(int(v) for v in value.split(","))
        elif key in ("save_images", "oracle_targets"):
            updates[key] = value.lower() in ("1", "true", "yes", "on")
        elif key == "composite_seed":
            updates[key] = int(value)
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    return replace(cfg, **updates)


def load_clean_image(config: ExperimentConfig) -> Grid:
    if config.image.startswith("composite:"):
        side = int(config.image.split(":", 1)[1])
        return synthesize_composite(side, config.recipes, config.composite_seed)
    array, maxval = read_netpbm(config.image)
    return make_grid(array, maxval + 1)


@dataclass
class MetricsReport:
    """Sweep results: one row dict per (mode, k, m, seed) cell."""

    rows: list = field(default_factory=list)

    COLUMNS = ("mode", "k", "m", "seed", "ber_interior", "ber_full",
               "loss_interior", "target_dphkm", "error")

    def to_csv(self) -> str:
        lines = [",".join(self.COLUMNS)]
        for row in self.rows:
            cells = []
            for col in self.COLUMNS:
                v = row.get(col, "")
                if isinstance(v, float):
                    cells.append(f"{v:.9g}")
                else:
                    cells.append(str(v))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def timings_csv(self) -> str:
        lines = ["mode,k,m,seed,seconds"]
        for row in self.rows:
            if "seconds" in row:
                lines.append(f"{row['mode']},{row['k']},{row['m']},"
                             f"{row['seed']},{row['seconds']:.6f}")
        return "\n".join(lines) + "\n"

    def mean(self, column: str, mode: str, k: int, m: int) -> float:
        vals = [row[column] for row in self.rows
                if row["mode"] == mode and row["k"] == k and row["m"] == m
                and not row.get("error")]
        if not vals:
            raise ValueError(f"no rows for ({mode}, {k}, {m})")
        return float(np.mean(vals))


def run_experiment(config: ExperimentConfig) -> MetricsReport:
    """Corrupt once per seed, then denoise/score every (mode, k, m) cell.

    A failing cell is recorded with its error class and the sweep
    continues. The metrics CSV is a pure function of the config.
    """
    channel = channel_from_spec(config.channel)
    clean = load_clean_image(config)
    loss = loss_from_spec(config.loss, channel.clean.size, channel.noisy.size)
    report = MetricsReport()
    out_dir = config.out_dir
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    for seed in config.seeds:
        noisy = corrupt(clean, channel, seed)
        for mode in config.modes:
            for k in config.ks:
                for m in config.ms:
                    row = {"mode": mode, "k": k, "m": m, "seed": seed}
                    report.rows.append(row)
                    try:
                        cfg = DenoiseConfig(k=k, m=m, mode=mode)
                        t0 = time.perf_counter()
                        schedule, recon = denoise(noisy, cfg, channel, loss)
                        row["seconds"] = time.perf_counter() - t0
                        region = schedule.covered & ~noisy.pad_mask
                        row["ber_interior"] = ber(clean, recon, region)
                        row["ber_full"] = ber(clean, recon, ~clean.pad_mask)
                        row["loss_interior"] = cumulative_true_loss(
                            clean, schedule, noisy, loss, region)
                        if config.oracle_targets and mode in ("dude-2d", "sdude-2d"):
                            target = bruteforce_ph_class(
                                clean, noisy, k, m if mode == "sdude-2d" else 0,
                                loss)
                            row["target_dphkm"] = target.value
                        if config.save_images and out_dir is not None:
                            name = f"{mode}_k{k}_m{m}_seed{seed}.pbm"
                            write_netpbm(f"{out_dir}/{name}", recon.data,
                                         max(1, recon.alphabet_size - 1))
                    except Exception as exc:  # robust sweep: record and go on
                        row["error"] = type(exc).__name__
    if out_dir is not None:
        with open(f"{out_dir}/metrics.csv", "w", encoding="ascii") as fh:
            fh.write(report.to_csv())
        with open(f"{out_dir}/timings.csv", "w", encoding="ascii") as fh:
            fh.write(report.timings_csv())
    return report
