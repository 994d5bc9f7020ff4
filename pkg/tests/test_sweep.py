import csv
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from heavybo.datagen import MeanSpec
from heavybo.errors import ConfigError
from heavybo.plotting import emit_plot
from heavybo.sweep import (
    CSV_COLUMNS,
    AggregateCell,
    SweepGrid,
    TrialResult,
    aggregate,
    emit_csv,
    load_grid,
    parse_grid_values,
    read_csv,
    run_sweep,
    run_trial,
    trial_seed,
)

TINY = SweepGrid(p_values=(30, 60), gamma_values=(0.5, 2.0), n_train=10, n_test=50, trials=3, epochs=200, beta_values=(0.01,))


def svg_ids(path):
    return {el.get("id") for el in ET.parse(path).iter() if el.get("id")}


def test_grid_validation():
    with pytest.raises(ConfigError):
        SweepGrid(p_values=())
    with pytest.raises(ConfigError):
        SweepGrid(trials=0)
    with pytest.raises(ConfigError):
        SweepGrid(mixing="none")
    assert len(SweepGrid().cells()) == 12


def test_trial_seeds_distinct():
    seeds = {trial_seed(TINY, p, g, b, t) for (p, g, b) in TINY.cells() for t in range(TINY.trials)}
    assert len(seeds) == len(TINY.cells()) * TINY.trials


def test_noiseless_trial_interpolates():
    grid = SweepGrid(n_train=8, n_test=20, eta=0.0, epochs=500, mixing="identity")
    r = run_trial(50, 2.0, 0.01, grid, seed=1)
    assert not r.failed and r.train_error == 0.0 and r.separable


def test_trial_is_deterministic():
    a = run_trial(40, 0.5, 0.01, TINY, seed=99)
    b = run_trial(40, 0.5, 0.01, TINY, seed=99)
    a.wall_time = b.wall_time = 0.0
    assert a == b


def test_benchmark_regime_single_trial():
    grid = SweepGrid(epochs=20_000)
    r = run_trial(1500, 2.0, 1e-3, grid, seed=trial_seed(grid, 1500, 2.0, 1e-3, 0))
    assert abs(r.test_error - 0.05) <= 0.03


def test_divergent_trial_is_recorded(monkeypatch):
    import heavybo.sweep as sw
    from heavybo.errors import DivergenceError

    def boom(*a, **k):
        raise DivergenceError(17)

    monkeypatch.setattr(sw, "gd_train", boom)
    r = run_trial(20, 1.0, 0.1, TINY, seed=3)
    assert r.failed and "DivergenceError" in r.message and math.isnan(r.test_error)


def test_single_trial_aggregate():
    r = TrialResult(p=10, gamma=1.0, beta=0.1, trial=0, seed=1, train_error=0.0, test_error=0.2)
    (cell,) = aggregate([r])
    assert cell.mean_test_error == 0.2 and cell.sem_test_error is None and cell.ci95_halfwidth is None


def test_aggregate_statistics_and_order():
    errs = [0.1, 0.2, 0.4, 0.3]
    rs = [TrialResult(5, 1.0, 0.1, t, t, train_error=0.0, test_error=e) for t, e in enumerate(errs)]
    rs.append(TrialResult(5, 1.0, 0.1, 4, 4, failed=True))
    a = aggregate(rs)
    b = aggregate(rs[::-1])
    assert a == b
    (cell,) = a
    assert cell.trials_used == 4 and cell.failed_trials == 1 and cell.valid
    assert cell.mean_test_error == pytest.approx(0.25)
    assert cell.sem_test_error == pytest.approx(np.std(errs, ddof=1) / 2)
    assert cell.ci95_halfwidth == pytest.approx(1.96 * cell.sem_test_error)


def test_invalid_cell_when_too_many_failures():
    rs = [TrialResult(5, 1.0, 0.1, t, t, test_error=0.1, train_error=0.0, failed=t < 2) for t in range(5)]
    assert not aggregate(rs)[0].valid


def test_csv_schema_and_round_trip(tmp_path):
    cells = [AggregateCell(100, 0.25, 0.001, 20, 0, 0.0, 0.1288, 0.004)]
    emit_csv(cells, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 2
    back = read_csv(tmp_path / "a.csv")
    assert back[0].mean_test_error == 0.1288 and back[0].ci95_halfwidth == pytest.approx(1.96 * 0.004)
    with pytest.raises(ConfigError):
        emit_csv([], tmp_path / "b.csv")


def test_sweep_reproducible_bytes(tmp_path):
    emit_csv(run_sweep(TINY), tmp_path / "a.csv")
    emit_csv(run_sweep(TINY), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_parallel_equivalence():
    assert run_sweep(TINY, workers=1) == run_sweep(TINY, workers=3)


def test_grid_file_and_overrides(tmp_path):
    (tmp_path / "g.cfg").write_text(
        "# small grid\np_values = 10, 20\ngamma_values=1\nbeta_values = 0.1\ntrials = 2\nmean = rareweak:2,1.5\n"
        "shared_test_set = yes\n"
    )
    g = load_grid(tmp_path / "g.cfg")
    assert g.p_values == (10, 20) and g.gamma_values == (1.0,) and g.trials == 2
    assert g.mean == MeanSpec.rare_weak(2, 1.5) and g.shared_test_set
    g2 = parse_grid_values({"trials": "5", "eta": None}, base=g)
    assert g2.trials == 5 and g2.eta == g.eta
    for bad in ({"nope": "1"}, {"trials": "x"}):
        with pytest.raises(ConfigError):
            parse_grid_values(bad)
    (tmp_path / "bad.cfg").write_text("trials 3\n")
    with pytest.raises(ConfigError):
        load_grid(tmp_path / "bad.cfg")


def test_shared_test_set_mode():
    grid = SweepGrid(p_values=(30,), gamma_values=(1.0,), n_train=10, n_test=40, trials=2, epochs=100, shared_test_set=True)
    cells, trials = run_sweep(grid, return_trials=True)
    assert all(not t.failed for t in trials)


def _fig2_cells():
    out = []
    for g, base in ((0.25, 0.12), (0.5, 0.1), (2.0, 0.08)):
        for k, p in enumerate((100, 400, 800, 1500)):
            out.append(AggregateCell(p, g, 0.001, 20, 0, 0.0, base - 0.01 * k, 0.003))
    return out


def test_error_vs_p_svg_structure(tmp_path):
    path = tmp_path / "f.svg"
    emit_plot(_fig2_cells(), "error-vs-p", path, eta=0.05)
    ids = svg_ids(path)
    for g in ("0.25", "0.5", "2"):
        assert f"test-gamma-{g}" in ids and f"train-gamma-{g}" in ids
    assert "noise-level" in ids
    polylines = [el for el in ET.parse(path).iter() if el.get("id", "").startswith("test-gamma-")]
    assert len(polylines) == 3


def test_heatmap_svg_has_one_cell_per_entry(tmp_path):
    cells = [AggregateCell(p, g, 0.001, 5, 0, 0.0, 0.05 + 0.01 * i, None)
             for i, (p, g) in enumerate((p, g) for p in (100, 200, 400, 800) for g in (0.25, 0.5, 2.0))]
    path = tmp_path / "h.svg"
    emit_plot(cells, "heatmap", path)
    assert sum(1 for i in svg_ids(path) if i.startswith("cell-")) == 12


def test_svg_output_is_reproducible(tmp_path):
    emit_plot(_fig2_cells(), "error-vs-p", tmp_path / "a.svg", eta=0.05)
    emit_plot(_fig2_cells(), "error-vs-p", tmp_path / "b.svg", eta=0.05)
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_plot_errors(tmp_path):
    with pytest.raises(ConfigError):
        emit_plot([], "heatmap", tmp_path / "x.svg")
    with pytest.raises(ConfigError):
        emit_plot(_fig2_cells(), "pie", tmp_path / "x.svg")
    one_axis = [c for c in _fig2_cells() if c.gamma == 2.0]
    with pytest.raises(ConfigError):
        emit_plot(one_axis, "heatmap", tmp_path / "x.svg")


@pytest.mark.slow
def test_large_learning_rate_degrades_test_error():
    # qualitative trend claimed for the (p, beta) heatmap experiment
    grid = SweepGrid(p_values=(1500,), gamma_values=(0.8,), beta_values=(1e-4, 100.0), trials=5, epochs=2000, n_test=500)
    small, large = run_sweep(grid)
    assert large.mean_test_error > small.mean_test_error
