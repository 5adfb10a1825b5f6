"""Channel simulation, composites, BER, and the experiment runner."""

import numpy as np
import pytest

from sdude2d.harness import (
    DEFAULT_RECIPES,
    ExperimentConfig,
    ber,
    corrupt,
    interior_region,
    parse_experiment_config,
    run_experiment,
    synthesize_composite,
)
from sdude2d.model import (
    Alphabet,
    ChannelModel,
    bsc,
    hamming_loss,
    make_grid,
)
from sdude2d.oracle import genie_fixed


# ---------------------------------------------------------------------------
# corrupt
# ---------------------------------------------------------------------------

def test_corrupt_noiseless_is_identity():
    rng = np.random.default_rng(0)
    g = make_grid(rng.integers(0, 2, (16, 16)), 2)
    assert np.array_equal(corrupt(g, bsc(0.0), 1).data, g.data)


def test_corrupt_delta_one_is_complement():
    rng = np.random.default_rng(1)
    g = make_grid(rng.integers(0, 2, (16, 16)), 2)
    assert np.array_equal(corrupt(g, bsc(1.0), 1).data, 1 - g.data)


def test_corrupt_flip_rate_512():
    g = make_grid(np.zeros((512, 512), dtype=int), 2)
    noisy = corrupt(g, bsc(0.1), 12345)
    rate = noisy.data.mean()
    # binomial: sigma = sqrt(0.1 * 0.9 / 512^2) ~ 5.9e-4; spec allows 3e-3
    assert abs(rate - 0.1) <= 3e-3


def test_corrupt_deterministic_and_seed_sensitive():
    rng = np.random.default_rng(2)
    g = make_grid(rng.integers(0, 2, (32, 32)), 2)
    a = corrupt(g, bsc(0.1), 7)
    b = corrupt(g, bsc(0.1), 7)
    c = corrupt(g, bsc(0.1), 8)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_corrupt_leaves_padding_untouched():
    g = make_grid(np.ones((5, 5), dtype=int), 2)
    noisy = corrupt(g, bsc(0.4), 3)
    assert np.array_equal(noisy.data[g.pad_mask], g.data[g.pad_mask])


def test_corrupt_transition_frequencies_match_channel():
    # >= 1e5 cells, every transition within 4 sigma of its probability
    rng = np.random.default_rng(3)
    matrix = np.array([[0.7, 0.2, 0.1], [0.1, 0.6, 0.3]])
    channel = ChannelModel(Alphabet(2), Alphabet(3), matrix)
    clean = make_grid(rng.integers(0, 2, (512, 512)), 2)
    noisy = corrupt(clean, channel, 99)
    for x in range(2):
        sel = clean.data == x
        count_x = int(sel.sum())
        assert count_x >= 1e5 / 2
        for z in range(3):
            p = matrix[x, z]
            freq = float((noisy.data[sel] == z).mean())
            sigma = np.sqrt(p * (1 - p) / count_x)
            assert abs(freq - p) <= 4 * sigma


# ---------------------------------------------------------------------------
# synthetic composites
# ---------------------------------------------------------------------------

def test_composite_constant_recipes_checkerboard_of_quadrants():
    g = synthesize_composite(4, ("constant:0", "constant:1", "constant:0",
                                 "constant:1"), seed=0)
    assert np.all(g.data[:2, :2] == 0)
    assert np.all(g.data[:2, 2:] == 1)
    assert np.all(g.data[2:, 2:] == 0)
    assert np.all(g.data[2:, :2] == 1)


def test_composite_identical_recipes_constant():
    g = synthesize_composite(8, ("constant:1",) * 4, seed=0)
    assert np.all(g.data == 1)


def test_composite_quadrants_pairwise_distinct_statistics():
    # chi-square style distinctness on per-quadrant symbol frequencies
    g = synthesize_composite(128, DEFAULT_RECIPES, seed=5)
    h = 64
    quads = [g.data[:h, :h], g.data[:h, h:], g.data[h:, h:], g.data[h:, :h]]
    means = [q.mean() for q in quads]
    n = h * h
    for i in range(4):
        for j in range(i + 1, 4):
            p_pool = (means[i] + means[j]) / 2
            var = max(p_pool * (1 - p_pool) * 2 / n, 1e-12)
            z_stat = abs(means[i] - means[j]) / np.sqrt(var)
            assert z_stat > 8, f"quadrants {i},{j} indistinct"


def test_composite_quadrant_genie_rules_differ():
    # the composite exists to give quadrants different optimal rules
    g = synthesize_composite(64, DEFAULT_RECIPES, seed=1)
    noisy = corrupt(g, bsc(0.1), 2)
    h = 32
    loss = hamming_loss(2)
    corners = [(0, 0), (0, h), (h, h), (h, 0)]
    rules = []
    for r0, c0 in corners:
        clean_q = make_grid(np.asarray(g.data[r0:r0 + h, c0:c0 + h]), 2)
        noisy_q = make_grid(np.asarray(noisy.data[r0:r0 + h, c0:c0 + h]), 2)
        report = genie_fixed(clean_q, noisy_q, 0, loss)
        rules.append(int(report.schedule.codes[0, 0]))
    # constant-1 -> always 1; dense speckle -> identity; checkerboard and
    # constant-0 -> their own rules; at least 3 distinct, ends differ
    assert len(set(rules)) >= 3
    assert rules[0] != rules[3]


def test_composite_determinism():
    a = synthesize_composite(32, DEFAULT_RECIPES, seed=4)
    b = synthesize_composite(32, DEFAULT_RECIPES, seed=4)
    c = synthesize_composite(32, DEFAULT_RECIPES, seed=5)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_composite_rejects_bad_inputs():
    with pytest.raises(ValueError):
        synthesize_composite(12, DEFAULT_RECIPES, seed=0)
    with pytest.raises(ValueError):
        synthesize_composite(16, ("constant:0",), seed=0)
    with pytest.raises(ValueError):
        synthesize_composite(16, ("nope", "constant:0", "constant:0",
                                  "constant:0"), seed=0)


# ---------------------------------------------------------------------------
# ber
# ---------------------------------------------------------------------------

def test_ber_identical_grids_zero():
    rng = np.random.default_rng(4)
    g = make_grid(rng.integers(0, 2, (8, 8)), 2)
    assert ber(g, g, np.ones((8, 8), bool)) == 0.0


def test_ber_complement_is_one():
    rng = np.random.default_rng(5)
    g = make_grid(rng.integers(0, 2, (8, 8)), 2)
    flipped = make_grid(np.asarray(1 - g.data), 2)
    assert ber(g, flipped, np.ones((8, 8), bool)) == 1.0


def test_ber_matches_count_oracle():
    rng = np.random.default_rng(6)
    a = make_grid(rng.integers(0, 2, (8, 8)), 2)
    b = make_grid(rng.integers(0, 2, (8, 8)), 2)
    region = rng.random((8, 8)) < 0.5
    region[0, 0] = True
    count = sum(int(a.data[r, c] != b.data[r, c])
                for r in range(8) for c in range(8) if region[r, c])
    assert ber(a, b, region) == pytest.approx(count / region.sum(), abs=1e-15)


def test_ber_empty_region_rejected():
    g = make_grid(np.zeros((4, 4), dtype=int), 2)
    with pytest.raises(ValueError):
        ber(g, g, np.zeros((4, 4), bool))


def test_interior_region_excludes_margin_and_padding():
    g = make_grid(np.zeros((6, 6), dtype=int), 2)  # pads to 8
    region = interior_region(g, 1)
    assert not region[0].any() and not region[:, 0].any()
    assert not (region & g.pad_mask).any()


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------

def test_run_experiment_grid_shape_and_reduction():
    config = ExperimentConfig(
        image="composite:64", seeds=(1,), ks=(1, 2, 3, 4), ms=(0, 4),
        modes=("dude-2d", "sdude-2d"),
    )
    report = run_experiment(config)
    assert len(report.rows) == 16
    assert not any(row.get("error") for row in report.rows)
    lines = report.to_csv().splitlines()
    assert len(lines) == 17
    # fixed-rule rows ignore m; switching with m=0 reduces to fixed-rule
    for k in (1, 2, 3, 4):
        d0 = report.mean("ber_interior", "dude-2d", k, 0)
        d4 = report.mean("ber_interior", "dude-2d", k, 4)
        s0 = report.mean("ber_interior", "sdude-2d", k, 0)
        assert d0 == d4 == s0


def test_run_experiment_noiseless_all_zero():
    config = ExperimentConfig(image="composite:32", channel="bsc:0.0",
                              seeds=(1,), ks=(1,), ms=(0, 2))
    report = run_experiment(config)
    for row in report.rows:
        assert row["ber_interior"] == 0.0
        assert row["ber_full"] == 0.0


def test_run_experiment_deterministic_csv(tmp_path):
    config = ExperimentConfig(image="composite:32", seeds=(3, 4), ks=(1,),
                              ms=(0, 2), out_dir=str(tmp_path / "a"))
    csv_a = run_experiment(config).to_csv()
    config_b = ExperimentConfig(image="composite:32", seeds=(3, 4), ks=(1,),
                                ms=(0, 2), out_dir=str(tmp_path / "b"))
    csv_b = run_experiment(config_b).to_csv()
    assert csv_a == csv_b
    assert (tmp_path / "a" / "metrics.csv").read_text() == csv_a


def test_run_experiment_ber_equals_hamming_loss():
    config = ExperimentConfig(image="composite:32", seeds=(5,), ks=(0, 1),
                              ms=(2,), modes=("sdude-2d",))
    report = run_experiment(config)
    for row in report.rows:
        assert row["ber_interior"] == pytest.approx(row["loss_interior"],
                                                    abs=1e-12)


def test_run_experiment_records_cell_errors():
    # k too large for the grid: the cell fails, the sweep continues
    config = ExperimentConfig(image="composite:4", seeds=(1,), ks=(1, 16),
                              ms=(0,), modes=("dude-2d",))
    report = run_experiment(config)
    ok_rows = [r for r in report.rows if not r.get("error")]
    bad_rows = [r for r in report.rows if r.get("error")]
    assert len(ok_rows) == 1 and len(bad_rows) == 1
    assert bad_rows[0]["error"] == "ValueError"


def test_parse_experiment_config():
    text = """
    # sweep description
    image = composite:64
    channel = bsc:0.05
    seeds = 1, 2, 3
    ks = 1,2
    ms = 0,4
    modes = dude-2d, sdude-2d
    save_images = true
    composite_seed = 9
    """
    config = parse_experiment_config(text)
    assert config.image == "composite:64"
    assert config.channel == "bsc:0.05"
    assert config.seeds == (1, 2, 3)
    assert config.ks == (1, 2)
    assert config.ms == (0, 4)
    assert config.save_images is True
    assert config.composite_seed == 9


def test_parse_experiment_config_rejects_unknown_key():
    with pytest.raises(ValueError):
        parse_experiment_config("speed = fast\n")
