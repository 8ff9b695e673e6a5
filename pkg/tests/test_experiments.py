import numpy as np
import pytest

from irs_gbsm.config import preset
from irs_gbsm.experiments import (
    CHUNK,
    compute_acf,
    compute_ccf,
    compute_pathloss,
    map_chunks,
    run_acf,
    run_ccf,
    run_ds_cdf,
    run_pathloss,
)


def _range_chunk(args, start, stop):
    return list(range(start, stop))


def test_map_chunks_order_and_bounds():
    parts = map_chunks(_range_chunk, None, 2 * CHUNK + 3, workers=1)
    assert [len(p) for p in parts] == [CHUNK, CHUNK, 3]
    assert sum(parts, []) == list(range(2 * CHUNK + 3))
    assert map_chunks(_range_chunk, None, 0) == []


def small(name, **over):
    base = {"run.workers": 1}
    base.update(over)
    return preset(name).replace(**base)


def read_all(paths):
    return [p.read_bytes() for p in paths]


def test_acf_files_worker_independent(tmp_path):
    cfg = small("fig5", **{"run.ensemble": 1100, "run.lag_num": 21})
    one = read_all(run_acf(cfg, tmp_path / "w1"))
    two = read_all(run_acf(cfg.replace(**{"run.workers": 2}), tmp_path / "w2"))
    assert len(one) == 2 and one == two


def test_ccf_and_ds_files_worker_independent(tmp_path):
    cfg = small("fig7", **{"run.ensemble": 600})
    assert read_all(run_ccf(cfg, tmp_path / "a")) == read_all(run_ccf(cfg.replace(**{"run.workers": 2}), tmp_path / "b"))
    ds = small("fig8", **{"run.ensemble": 100})
    first = read_all(run_ds_cdf(ds, tmp_path / "c"))
    assert first == read_all(run_ds_cdf(ds.replace(**{"run.workers": 2}), tmp_path / "d"))
    assert first == read_all(run_ds_cdf(ds, tmp_path / "e"))


def test_output_headers(tmp_path):
    cfg = small("fig6", **{"run.ensemble": 16, "run.lag_num": 5})
    paths = run_acf(cfg, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["acf_fig6_direct_t0s.dat", "acf_fig6_irs_t0s.dat"]
    text = paths[0].read_text()
    for key in ("# tool: irs-gbsm", f"# config_hash: {cfg.digest()}", "# seed:", "# columns: lag", "# units:"):
        assert key in text
    data = np.loadtxt(paths[0])
    assert data.shape == (5, 11)
    assert data[0, 1] == 1.0 and data[0, 4] == 1.0


def test_acf_convergence_over_doublings():
    cfg = small("fig5")
    dev = []
    for n in (1250, 2500, 5000, 10000):
        r = compute_acf(cfg, 0.0, "irs", ensemble=n)
        dev.append(np.max(np.abs(r.sim.values - r.ana.values)))
    assert all(b < a for a, b in zip(dev, dev[1:])), dev


def test_ccf_convergence_over_doublings():
    cfg = small("fig7")
    dev = []
    for n in (1250, 2500, 5000, 10000):
        r = compute_ccf(cfg, 62e9, ensemble=n)
        dev.append(np.max(np.abs(r.sim.values - r.ana.values)))
    assert all(b < a for a, b in zip(dev, dev[1:])), dev


def test_estimators_respect_cauchy_schwarz():
    r = compute_acf(small("fig6"), 0.0, "direct", ensemble=300)
    assert np.all(np.abs(r.sim.raw) <= r.bound * (1 + 1e-12))
    assert np.all(r.ana.magnitude <= 1 + 1e-12)
    c = compute_ccf(small("fig7"), 2.6e9, ensemble=300)
    assert np.all(np.abs(c.sim.raw) <= c.bound * (1 + 1e-12))
    assert c.ana.values[0] == 1.0


def test_full_mode_runs():
    cfg = small("fig5", **{"run.ensemble_mode": "full", "run.lag_num": 6})
    r = compute_acf(cfg, 2.0, "irs", ensemble=40)
    assert r.sim.values[0] == 1.0
    assert np.all(np.abs(r.sim.raw) <= r.bound * (1 + 1e-12))


def test_cluster_selection_out_of_range():
    with pytest.raises(ValueError, match="clusters"):
        compute_acf(small("fig5", **{"run.cluster": 10_000}), 0.0, ensemble=2)


def test_pathloss_table(tmp_path):
    cfg = small("fig5")
    sizes, dist = compute_pathloss(cfg)
    rows = np.array(sizes, dtype=float)
    # column order: m elements d_bi d_iu p_t p_r pl_biu pl_single_closed pl_coherent_ideal
    assert rows[0, 0] == 1 and rows[0, 6] == pytest.approx(rows[0, 7], abs=1e-9)
    assert np.all(rows[:, 4] == cfg.run.transmit_power_dbm)
    np.testing.assert_allclose(rows[:, 5] - rows[:, 4], rows[:, 6], atol=1e-9)
    # far field: the optimised surface follows the coherent M^2 law
    np.testing.assert_allclose(rows[:, 6], rows[:, 8], atol=0.05)
    assert np.all(np.diff(rows[:, 6]) > 0)
    d = np.array(dist, dtype=float)
    # doubling both distances costs 12 dB
    assert np.all(np.abs(np.diff(d[:, 6]) + 20 * np.log10(4)) < 0.05)
    paths = run_pathloss(cfg, tmp_path)
    assert [p.name for p in paths] == ["pathloss_fig5_size.dat", "pathloss_fig5_distance.dat"]
