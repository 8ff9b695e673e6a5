import numpy as np
import pytest

from irs_gbsm.clusters import ClusterLayout, EvolutionParams, TwinCluster
from irs_gbsm.config import from_dict
from irs_gbsm.fading import (
    CirTap,
    Link,
    build_link,
    draw_link_delays,
    los_coefficient,
    nlos_coefficient,
    realize,
    realize_subchannel,
    redraw_series,
    rician_combine,
    scenario_link,
)
from irs_gbsm.geometry import ArrayGeometry, Trajectory

C = 299_792_458.0


def small_config(**run):
    return from_dict({
        "name": "small",
        "geometry": {"bs_array": {"n_x": 3}},
        "clusters": {"rays": 4, "birth_rate": 12.0, "death_rate": 4.0},
        "channel": {"rician_bi": 1.0},
        "run": run,
    })


def one_ray_link(tx_motion=Trajectory(), first=(100.0, 0, 0), last=(100.0, 50.0, 0), k=0.0, link_delay=0.0):
    tx = ArrayGeometry.linear(1, 0.5)
    rx = ArrayGeometry.linear(1, 0.5, origin=(0.0, 300.0, 0.0))
    c = TwinCluster(
        0, np.array(first), np.array(last), np.array([first]), np.array([last]),
        np.array([link_delay]), np.ones(3),
    )
    vis = np.ones((1, 1), dtype=bool)
    return Link("test", 62e9, tx, rx, tx_motion, Trajectory(), [c], vis, vis, k)


def test_static_scene_is_time_invariant():
    link = one_ray_link()
    s = realize(link, [0.0, 0.5, 3.0])
    np.testing.assert_array_equal(s.nlos_delay[0], s.nlos_delay[2])
    h = s.narrowband()
    np.testing.assert_array_equal(h[0], h[1])


def test_single_ray_unit_amplitude():
    (tap,) = nlos_coefficient(one_ray_link(), 0, 0, 0.0)
    assert abs(tap.amplitude) == pytest.approx(1.0, abs=1e-12)
    assert tap.power == pytest.approx(1.0)


def test_moving_tx_towards_scatterer():
    link = one_ray_link(Trajectory.constant(10.0, 0.0))
    (a,) = nlos_coefficient(link, 0, 0, 0.0)
    (b,) = nlos_coefficient(link, 0, 0, 1.0)
    assert a.delay - b.delay == pytest.approx(10.0 / C, rel=1e-9)
    assert (a.delay - b.delay) * 1e9 == pytest.approx(33.356, abs=1e-3)


def test_ray_delay_composition():
    link = one_ray_link(link_delay=7e-9)
    (tap,) = nlos_coefficient(link, 0, 0, 0.0)
    expected = (100.0 + 50.0 + np.hypot(100.0, 250.0)) / C + 7e-9
    assert tap.delay == pytest.approx(expected, rel=1e-12)
    assert np.angle(tap.amplitude) == pytest.approx(np.angle(np.exp(2j * np.pi * 62e9 * tap.delay)), abs=1e-6)


def test_los_examples():
    link = one_ray_link()
    link.rx = ArrayGeometry.linear(1, 0.5, origin=(299.792458, 0.0, 0.0))
    tap = los_coefficient(link, 0, 0, 0.0)
    assert tap.delay == pytest.approx(1e-6, rel=1e-14)
    assert abs(tap.amplitude) == pytest.approx(1.0)
    link.tx_motion = Trajectory.constant(10.0, 0.0)
    later = los_coefficient(link, 0, 0, 2.0)
    assert (tap.delay - later.delay) * C == pytest.approx(20.0, rel=1e-9)


def test_rician_combine_weights():
    los = CirTap(1.0 + 0j, 0.0)
    nlos = [CirTap(np.sqrt(0.25) + 0j, 1e-8, 0, m) for m in range(4)]
    out = rician_combine(los, nlos, 0.0)
    assert out[0].amplitude == 0 and out[1].amplitude == nlos[0].amplitude
    out = rician_combine(los, nlos, np.inf)
    assert out[0].amplitude == 1 and all(t.amplitude == 0 for t in out[1:])
    out = rician_combine(los, nlos, 1.0)
    assert sum(t.power for t in out) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        rician_combine(los, nlos, -1.0)


def test_one_cluster_one_ray_static_series():
    tx = ArrayGeometry.linear(1, 0.5)
    rx = ArrayGeometry.linear(1, 0.5, origin=(50.0, 0, 0))
    link = build_link(
        tx, Trajectory(), rx, Trajectory(), 62e9, EvolutionParams(4, 4), ClusterLayout(rays=1), 3
    )
    assert link.n_clusters == 1
    s = realize(link, np.linspace(0, 1, 5))
    assert s.shape == (5, 1, 1)
    assert len(s.taps(0, 0, 0)) == 2
    h = s.narrowband()
    np.testing.assert_array_equal(h, np.broadcast_to(h[0], h.shape))


def test_bi_dimensions():
    cfg = small_config()
    s = realize_subchannel(cfg, "bi", 4, [0.0, 1e-3])
    # IRS elements by BS antennas
    assert s.shape == (2, 4, 3)
    assert s.matrix(1).shape == (4, 3)
    with pytest.raises(ValueError):
        realize_subchannel(cfg, "xy", 4, [0.0])


def test_taps_sum_to_narrowband():
    cfg = small_config()
    s = realize_subchannel(cfg, "bi", 8, [0.0, 2e-3])
    h = s.narrowband()
    for r in range(4):
        for q in range(3):
            total = sum(t.amplitude for t in s.taps(1, r, q))
            assert total == pytest.approx(h[1, r, q], rel=1e-9, abs=1e-12)


def test_powers_normalised_per_pair():
    s = realize_subchannel(small_config(), "iu", 2, [0.0, 1.0])
    totals = s.nlos_power.sum(axis=(-2, -1))
    seen = s.mask.any(axis=-1)
    np.testing.assert_allclose(totals[:, seen], 1.0)
    assert np.all(totals[:, ~seen] == 0)
    # invisible clusters carry no power
    hidden = ~s.mask[None, ..., None] & np.ones(s.nlos_power.shape, bool)
    assert np.all(s.nlos_power[hidden] == 0)


def test_batch_fast_path_matches_full_realisation():
    cfg = small_config()
    link = scenario_link(cfg, "bi", 21)
    times = [0.0, 1e-3, 2e-3]
    series = realize(link, times)
    rng = np.random.default_rng(0)
    draws = np.stack([draw_link_delays(link, rng) for _ in range(3)])
    fast = series.narrowband_batch(draws, f=1e6)
    for b in range(3):
        slow = realize(link.with_link_delays(draws[b]), times).narrowband(f=1e6)
        np.testing.assert_allclose(fast[b], slow, rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(redraw_series(series, draws[b]).narrowband(f=1e6), slow, rtol=1e-9, atol=1e-12)


def test_subchannel_seed_determinism():
    cfg = small_config()
    a = realize_subchannel(cfg, "bu", 5, [0.0]).narrowband()
    b = realize_subchannel(cfg, "bu", 5, [0.0]).narrowband()
    c = realize_subchannel(cfg, "bu", 6, [0.0]).narrowband()
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_ensemble_mean_power():
    # 10^4 seeds of the virtual-link delays at a fixed geometry, K = 1 on BI
    cfg = small_config()
    link = scenario_link(cfg, "bi", 1)
    series = realize(link, [0.0], [0], [0])
    draws = np.stack([draw_link_delays(link, np.random.default_rng(s)) for s in range(10_000)])
    h = series.narrowband_batch(draws)[:, 0, 0, 0]
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, rel=0.02)
