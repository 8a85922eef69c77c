"""Path-batch engine tests: reproducibility, statistics, exactness of the
log-space GBM step, storage accounting, and binary round trips."""

import math

import numpy as np
import pytest

from mssv.config import MarketGroupParams, MonitoringGrid, PricingConfig, uniform_grid
from mssv.paths import (
    DEFAULT_MEMORY_BUDGET,
    MemoryBudgetError,
    PathBatch,
    batch_from_increments,
    dump_batch,
    increments_of,
    load_batch,
    simulate_batch,
)
from mssv.payoffs import PayoffDescriptor
from mssv.rng import TAG_GBM, normal_lattice

EPS = 2.220446049250313e-16


def make_config(n_paths, times, seed=7, sigma_bar=0.2020, r=0.02, s0=100.0):
    return PricingConfig(
        group=MarketGroupParams(
            v0_delta=0.0, v1_delta=0.0, v3_eps=0.0, sigma_bar=sigma_bar, r=r
        ),
        grid=MonitoringGrid(times=tuple(times)),
        s0=s0,
        payoffs=(PayoffDescriptor(kind="european_call", strike=100.0),),
        n_paths=n_paths,
        seed=seed,
    )


def test_same_config_is_bitwise_reproducible():
    cfg = make_config(512, uniform_grid(13, 0.5).times, seed=2024)
    a = simulate_batch(cfg)
    b = simulate_batch(cfg)
    assert a.increments.tobytes() == b.increments.tobytes()
    assert a.values.tobytes() == b.values.tobytes()
    assert a.token == b.token


def test_worker_count_does_not_change_results():
    cfg = make_config(150_000, uniform_grid(4, 1.0).times, seed=99)
    reference = simulate_batch(cfg, workers=1)
    for workers in (3, 16):
        other = simulate_batch(cfg, workers=workers)
        assert other.increments.tobytes() == reference.increments.tobytes()
        assert other.values.tobytes() == reference.values.tobytes()
        assert other.token == reference.token


def test_increments_match_normal_lattice_pointwise():
    times = uniform_grid(6, 0.5).times  # n=6 exercises a partial last block
    cfg = make_config(40, times, seed=31415)
    batch = simulate_batch(cfg)
    sqrt_dts = np.sqrt(batch.grid.dts())
    paths = np.arange(40)
    for j in range(6):
        expected = normal_lattice(31415, TAG_GBM, paths, np.full(40, j)) * sqrt_dts[j]
        np.testing.assert_array_equal(batch.increments[:, j], expected)


def test_zero_increments_reduce_to_deterministic_drift():
    grid = MonitoringGrid(times=(0.1, 0.25, 0.5, 1.0))
    s0, sigma_bar, r = 100.0, 0.25, 0.03
    batch = batch_from_increments(
        grid, s0, sigma_bar, r, seed=0, increments=np.zeros((3, 4))
    )
    t = np.asarray(grid.times)
    expected = s0 * np.exp((r - 0.5 * sigma_bar**2) * t)
    np.testing.assert_allclose(batch.values, np.broadcast_to(expected, (3, 4)),
                               rtol=1e-12)


def test_discounted_terminal_value_is_a_martingale():
    cfg = make_config(1_000_000, (1.0,), seed=5150)
    batch = simulate_batch(cfg)
    disc = math.exp(-cfg.group.r * 1.0)
    sample = disc * batch.values[:, 0]
    mean = math.fsum(sample) / sample.size
    var = math.fsum((sample - mean) ** 2) / (sample.size - 1)
    se = math.sqrt(var / sample.size)
    assert abs(mean - cfg.s0) < 4.0 * se


def test_increment_statistics_match_brownian_scaling():
    times = uniform_grid(100, 0.5).times
    cfg = make_config(10_000, times, seed=777)
    batch = simulate_batch(cfg)
    dts = batch.grid.dts()
    # Pooled raw variance on a uniform grid with dt = 0.005 everywhere.
    flat = batch.increments.ravel()
    assert abs(flat.var(ddof=1) - 0.005) < 1e-4
    # Standardized increments are unit normals.
    z = batch.increments / np.sqrt(dts)
    m = z.size
    assert abs(z.mean()) < 4.0 / math.sqrt(m)
    assert abs(z.var(ddof=1) - 1.0) < 0.01


def test_log_step_is_exact_to_four_ulp():
    times = (0.01, 0.05, 0.125, 0.3, 0.31, 0.5, 0.75)
    cfg = make_config(2000, times, seed=808, sigma_bar=0.2020, r=0.02)
    batch = simulate_batch(cfg)
    sigma_bar, r = cfg.group.sigma_bar, cfg.group.r
    log_drifts = (r - 0.5 * sigma_bar * sigma_bar) * batch.grid.dts()
    prev = np.full(batch.n_paths, cfg.s0)
    worst = 0.0
    for j in range(batch.grid.n):
        step = np.log(batch.values[:, j] / prev)
        residual = step - (log_drifts[j] + sigma_bar * batch.increments[:, j])
        worst = max(worst, np.abs(residual).max())
        prev = batch.values[:, j]
    assert worst <= 4.0 * EPS


def test_terminal_value_telescopes():
    times = uniform_grid(50, 2.0).times
    cfg = make_config(500, times, seed=4242)
    batch = simulate_batch(cfg)
    sigma_bar, r = cfg.group.sigma_bar, cfg.group.r
    total_drift = float(np.sum((r - 0.5 * sigma_bar * sigma_bar) * batch.grid.dts()))
    direct = cfg.s0 * np.exp(total_drift + sigma_bar * batch.increments.sum(axis=1))
    np.testing.assert_allclose(batch.values[:, -1], direct, rtol=1e-12)


def test_memory_budget_is_enforced_before_allocation():
    # 10^9 paths x 100 dates would need 1.6 TB; the check must trip without
    # ever attempting the allocation (this returns instantly if it does).
    cfg = make_config(1_000_000_000, uniform_grid(100, 0.5).times)
    with pytest.raises(MemoryBudgetError):
        simulate_batch(cfg)
    # Default budget is 4 GiB: 1e6 x 300 needs 4.8e9 bytes.
    cfg = make_config(1_000_000, uniform_grid(300, 0.5).times)
    with pytest.raises(MemoryBudgetError):
        simulate_batch(cfg)


def test_memory_budget_boundary_and_message():
    cfg = make_config(100, uniform_grid(10, 0.5).times)
    need = 2 * 8 * 100 * 10
    with pytest.raises(MemoryBudgetError, match=f"{need} bytes"):
        simulate_batch(cfg, memory_budget=need - 1)
    batch = simulate_batch(cfg, memory_budget=need)
    assert batch.n_paths == 100
    assert DEFAULT_MEMORY_BUDGET == 4 * 2**30


def test_dump_load_round_trip(tmp_path):
    cfg = make_config(257, (0.1, 0.4, 0.5), seed=11, sigma_bar=0.3, r=0.01, s0=95.0)
    batch = simulate_batch(cfg)
    target = tmp_path / "batch.bin"
    dump_batch(batch, target)
    loaded = load_batch(target)
    assert loaded.grid.times == batch.grid.times
    assert (loaded.n_paths, loaded.seed) == (batch.n_paths, batch.seed)
    assert (loaded.sigma_bar, loaded.r, loaded.s0) == (
        batch.sigma_bar, batch.r, batch.s0)
    assert loaded.increments.tobytes() == batch.increments.tobytes()
    assert loaded.values.tobytes() == batch.values.tobytes()
    assert loaded.token == batch.token


def test_load_rejects_bad_magic(tmp_path):
    target = tmp_path / "junk.bin"
    target.write_bytes(b"NOTABATCH" + b"\x00" * 64)
    with pytest.raises(ValueError, match="bad magic"):
        load_batch(target)


def test_increments_of_selects_single_path():
    cfg = make_config(8, (0.5, 1.0), seed=3)
    batch = simulate_batch(cfg)
    np.testing.assert_array_equal(increments_of(batch, 5), batch.increments[5])
    for bad in (-1, 8):
        with pytest.raises(IndexError, match="path_index out of range"):
            increments_of(batch, bad)


def test_token_identifies_content():
    cfg_a = make_config(64, (0.5, 1.0), seed=1)
    cfg_b = make_config(64, (0.5, 1.0), seed=2)
    a1, a2, b = simulate_batch(cfg_a), simulate_batch(cfg_a), simulate_batch(cfg_b)
    assert a1.token == a2.token
    assert a1.token != b.token
    # A rebuilt batch with identical increments carries the same identity.
    rebuilt = batch_from_increments(
        a1.grid, a1.s0, a1.sigma_bar, a1.r, a1.seed, a1.increments.copy()
    )
    assert rebuilt.token == a1.token
    np.testing.assert_array_equal(rebuilt.values, a1.values)
    # Zeroed increments are different content, hence a different identity.
    zeroed = batch_from_increments(
        a1.grid, a1.s0, a1.sigma_bar, a1.r, a1.seed, np.zeros_like(a1.increments)
    )
    assert zeroed.token != a1.token


def test_batches_are_read_only():
    cfg = make_config(4, (1.0,), seed=1)
    batch = simulate_batch(cfg)
    with pytest.raises(ValueError):
        batch.increments[0, 0] = 0.0
    with pytest.raises(ValueError):
        batch.values[0, 0] = 0.0


def test_shape_validation():
    grid = MonitoringGrid(times=(0.5, 1.0))
    with pytest.raises(ValueError, match="shape"):
        batch_from_increments(grid, 100.0, 0.2, 0.0, 0, np.zeros((3, 5)))
    with pytest.raises(ValueError, match="shape"):
        PathBatch(
            grid=grid, s0=100.0, sigma_bar=0.2, r=0.0, n_paths=3, seed=0,
            increments=np.zeros((3, 2)), values=np.zeros((2, 2)),
        )
