"""Acceptance gate: the ten go/no-go checks, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion
lines; each criterion also enforces its own runtime budget.
"""

import itertools
import time
from contextlib import contextmanager

import numpy as np
import pytest

import sdude2d as sd
from sdude2d.denoise import switch_count
from sdude2d.model import Alphabet, ChannelModel, LossFunction


@contextmanager
def criterion(num, title, budget=None):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        if budget is not None:
            elapsed = time.perf_counter() - t0
            if elapsed >= budget:
                raise AssertionError(
                    f"criterion {num} runtime {elapsed:.1f}s exceeds {budget}s")
        ok = True
    finally:
        elapsed = time.perf_counter() - t0
        status = "PASS" if ok else "FAIL"
        print(f"[acceptance] criterion {num:2d} ({title}): {status} "
              f"[{elapsed:.1f}s]")


def random_channel(rng, x_size, z_size):
    base = np.zeros((x_size, z_size))
    base[np.arange(x_size), np.arange(x_size)] = 1.0
    noise = rng.dirichlet(np.ones(z_size), size=x_size)
    return ChannelModel(Alphabet(x_size), Alphabet(z_size),
                        0.65 * base + 0.35 * noise)


def bruteforce_switching_min(losses, budget):
    n = losses.shape[0]
    best = np.inf
    for size in range(min(budget, n - 1) + 1):
        for cuts in itertools.combinations(range(1, n), size):
            bounds = (0,) + cuts + (n,)
            total = sum(losses[a:b].sum(axis=0).min()
                        for a, b in zip(bounds, bounds[1:]))
            best = min(best, total)
    return best


def test_criterion_1_estimated_loss_unbiasedness():
    with criterion(1, "estimated-loss unbiasedness", budget=5.0):
        rng = np.random.default_rng(101)
        worst = 0.0
        for _ in range(100):
            x_size = int(rng.integers(2, 5))
            z_size = int(rng.integers(x_size, 5))
            channel = random_channel(rng, x_size, z_size)
            xhat_size = int(rng.integers(2, 5))
            loss = LossFunction(rng.random((x_size, xhat_size)) * 2.0)
            table = sd.build_estimated_loss(channel, loss)
            worst = max(worst, sd.unbiasedness_gap(channel, loss, table))
        assert worst <= 1e-9, f"worst unbiasedness gap {worst:.3e}"


def test_criterion_2_dp_exact_optimality():
    with criterion(2, "switching DP exact optimality", budget=30.0):
        rng = np.random.default_rng(202)
        for _ in range(200):
            delta = float(rng.uniform(0.02, 0.45))
            lam = LossFunction(rng.random((2, 2)) * 2.0)
            table = sd.build_estimated_loss(sd.bsc(delta), lam)
            n = int(rng.integers(1, 11))
            m = int(rng.integers(0, 4))
            symbols = rng.integers(0, 2, n)
            losses = table.table[symbols]
            assignment, value = sd.sdude_dp(losses, m)
            expect = bruteforce_switching_min(losses, m)
            assert abs(value - expect) <= 1e-12
            assert switch_count(assignment) <= m
            realized = losses[np.arange(n), assignment].sum()
            assert abs(realized - value) <= 1e-12


def test_criterion_3_fixed_rule_reduction():
    with criterion(3, "switching(m=0) equals fixed-rule output"):
        rng = np.random.default_rng(303)
        channel, loss = sd.bsc(0.1), sd.hamming_loss(2)
        for _ in range(20):
            g = sd.make_grid(rng.integers(0, 2, (16, 16)), 2)
            for k in (0, 1, 2):
                _, recon_s = sd.denoise(g, sd.DenoiseConfig(k=k, m=0,
                                                            mode="sdude-2d"),
                                        channel, loss)
                _, recon_d = sd.denoise(g, sd.DenoiseConfig(k=k, m=0,
                                                            mode="dude-2d"),
                                        channel, loss)
                assert np.array_equal(recon_s.data, recon_d.data)


def test_criterion_4_hilbert_structural_invariants():
    with criterion(4, "Hilbert scan invariants r <= 8", budget=5.0):
        for r in range(9):
            order = sd.ph_order(r)
            side = order.side
            n = side * side
            rr = order.to_coord[:, 0]
            cc = order.to_coord[:, 1]
            # bijection
            assert np.array_equal(np.sort(rr * side + cc), np.arange(n))
            assert np.array_equal(order.to_index[rr, cc], np.arange(n))
            # consecutive cells are lattice 4-neighbors
            if n > 1:
                steps = np.abs(np.diff(order.to_coord, axis=0)).sum(axis=1)
                assert (steps == 1).all()
            # every dyadic quadrant is one contiguous run of visits
            for level in range(r + 1):
                q = side >> level
                labels = (rr // q) * (side // q) + (cc // q)
                changes = int((labels[1:] != labels[:-1]).sum())
                assert changes == 4 ** level - 1


def test_criterion_5_scan_class_dominates_quadtree_class():
    with criterion(5, "scan-class minimum <= quadtree-class minimum",
                   budget=60.0):
        rng = np.random.default_rng(505)
        loss = sd.hamming_loss(2)
        strict = 0
        for _ in range(50):
            clean = sd.make_grid(rng.integers(0, 2, (8, 8)), 2)
            noisy_data = clean.data ^ (rng.random((8, 8)) < 0.2)
            noisy = sd.make_grid(noisy_data.astype(int), 2)
            for m in (1, 4):
                ph = sd.bruteforce_ph_class(clean, noisy, 0, m, loss)
                qt = sd.bruteforce_qt_class(clean, noisy, m, loss)
                assert ph.value <= qt.value + 1e-12
                if ph.value < qt.value - 1e-12:
                    strict += 1
        assert strict >= 1, "inequality never strict on 50 random pairs"


def test_criterion_6_quadtree_counting():
    with criterion(6, "leaf-count product bound and tree counts"):
        assert sd.split_count_lower_bound(13) == 280
        assert 280 >= 3 ** ((13 - 4) / 3) == 27
        assert len(sd.quadtree_enumerate(1, 3)) == 1
        assert len(sd.quadtree_enumerate(4, 1)) == 1


def test_criterion_7_noiseless_genie_coupling():
    with criterion(7, "noiseless channel couples scheme to genie"):
        rng = np.random.default_rng(707)
        channel = ChannelModel(Alphabet(2), Alphabet(2), np.eye(2))
        loss = sd.hamming_loss(2)
        for _ in range(10):
            g = sd.make_grid(rng.integers(0, 2, (16, 16)), 2)
            for k in (0, 1):
                for m in (0, 2):
                    sched, _ = sd.denoise(
                        g, sd.DenoiseConfig(k=k, m=m, mode="sdude-2d"),
                        channel, loss)
                    achieved = sd.cumulative_true_loss(g, sched, g, loss,
                                                       sched.covered)
                    target = sd.bruteforce_ph_class(g, g, k, m, loss)
                    assert abs(achieved - target.value) <= 1e-12


def test_criterion_8_switching_dominates_fixed_rule():
    with criterion(8, "switching dominates fixed-rule on a heterogeneous "
                      "composite", budget=600.0):
        channel, loss = sd.bsc(0.1), sd.hamming_loss(2)
        clean = sd.synthesize_composite(128, sd.DEFAULT_RECIPES, seed=0)
        seeds = (1, 2, 3, 4, 5)
        ks = (1, 2, 3, 4)
        ms = (1, 4, 7)
        dude = {k: [] for k in ks}
        sdude = {(k, m): [] for k in ks for m in ms}
        for seed in seeds:
            noisy = sd.corrupt(clean, channel, seed)
            for k in ks:
                region = sd.interior_region(clean, k)
                _, recon = sd.denoise(noisy, sd.DenoiseConfig(k=k, m=0,
                                                              mode="dude-2d"),
                                      channel, loss)
                dude[k].append(sd.ber(clean, recon, region))
                for m in ms:
                    _, recon = sd.denoise(
                        noisy, sd.DenoiseConfig(k=k, m=m, mode="sdude-2d"),
                        channel, loss)
                    sdude[(k, m)].append(sd.ber(clean, recon, region))
        dude_mean = {k: float(np.mean(dude[k])) for k in ks}
        best_mean = {k: min(float(np.mean(sdude[(k, m)])) for m in ms)
                     for k in ks}
        for k in ks:
            assert best_mean[k] <= dude_mean[k], (
                f"k={k}: switching {best_mean[k]:.5f} worse than fixed "
                f"{dude_mean[k]:.5f}")
        k_star = min(ks, key=lambda k: dude_mean[k])
        assert best_mean[k_star] < dude_mean[k_star], (
            f"no strict improvement at the error-minimizing k={k_star}")


def test_criterion_9_linear_complexity_scaling():
    with criterion(9, "wall time scales linearly in n and m"):
        channel, loss = sd.bsc(0.1), sd.hamming_loss(2)

        def median_time(side, m, reps=5):
            clean = sd.synthesize_composite(side, sd.DEFAULT_RECIPES, seed=0)
            noisy = sd.corrupt(clean, channel, 1)
            config = sd.DenoiseConfig(k=2, m=m, mode="sdude-2d")
            times = []
            for _ in range(reps):
                t0 = time.perf_counter()
                sd.denoise(noisy, config, channel, loss)
                times.append(time.perf_counter() - t0)
            return float(np.median(times))

        # consecutive sides double, so n quadruples: allow 3 per doubling
        t = {side: median_time(side, 4) for side in (64, 128, 256)}
        assert t[128] / t[64] <= 9.0, f"n-scaling ratio {t[128] / t[64]:.2f}"
        assert t[256] / t[128] <= 9.0, f"n-scaling ratio {t[256] / t[128]:.2f}"
        tm = {m: median_time(128, m) for m in (4, 8, 16)}
        assert tm[8] / tm[4] <= 3.0, f"m-scaling ratio {tm[8] / tm[4]:.2f}"
        assert tm[16] / tm[8] <= 3.0, f"m-scaling ratio {tm[16] / tm[8]:.2f}"


def test_criterion_10_probability_bound_evaluator():
    with criterion(10, "probability-bound evaluator reproduces hand values"):
        # vacuous case: one reconstruction symbol, m = 0, eps = 0 ->
        # the exponent is exactly zero and the bound is exactly 2
        vac = sd.BoundParams(epsilon=0.0, n=1024, m=0, z_size=2, xhat_size=1,
                             loss_bound=2.125)
        assert sd.excess_loss_bound(vac, "zeroth") == 2.0
        # frozen via an independent multiplicative assembly:
        # 2 e^{-100/8} e^{200 h(0.1)} e^{22 ln 4}
        zeroth = sd.BoundParams(epsilon=1.0, n=100, m=10, z_size=2,
                                xhat_size=2, loss_bound=2.0)
        expected = 2.2595246418625256e+36
        got = sd.excess_loss_bound(zeroth, "zeroth")
        assert abs(got - expected) <= 1e-12 * max(1.0, expected)
        # frozen k-th order value: 2 (margin+1)^2 4^8 = 524288 exactly
        kth = sd.BoundParams(epsilon=0.0, n=10, m=0, z_size=2, xhat_size=2,
                             loss_bound=2.125, k=1)
        expected = 524287.9999999998
        got = sd.excess_loss_bound(kth, "kth")
        assert abs(got - expected) <= 1e-12 * max(1.0, expected)
