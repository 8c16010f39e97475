import numpy as np
import pytest

from goft.adapter import ortho_penalty
from goft.errors import ConfigError
from goft.trainer import (TaskSpec, TrainConfig, ablation_sweep, evaluate_mse,
                          make_adapter, make_task, train)


def spec_for(kind="rotation-recovery", d=8, n=4, samples=200, seed=0, **kw):
    return TaskSpec(kind=kind, d=d, n=n, samples=samples, seed=seed, **kw)


def test_task_determinism():
    a = make_task(spec_for(seed=5))
    b = make_task(spec_for(seed=5))
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.Y, b.Y)
    np.testing.assert_array_equal(a.weight.W, b.weight.W)


def test_invalid_specs():
    with pytest.raises(ConfigError):
        make_task(TaskSpec(kind="nope", d=8, n=4, samples=10))
    with pytest.raises(ConfigError):
        make_task(TaskSpec(kind="rotation-recovery", d=1, n=4, samples=10))
    with pytest.raises(ConfigError):
        make_task(TaskSpec(kind="regression-csv", d=4, n=2, samples=10))


def test_regression_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.standard_normal((20, 6))
    path = tmp_path / "data.csv"
    np.savetxt(path, data, delimiter=",")
    task = make_task(TaskSpec(kind="regression-csv", d=4, n=2, samples=20,
                              csv_path=str(path)))
    np.testing.assert_allclose(task.X, data[:, :4])
    np.testing.assert_allclose(task.Y, data[:, 4:])


def test_zero_steps_is_identity():
    task = make_task(spec_for())
    cfg = TrainConfig(method="goft", steps=0, seed=0)
    adapter = make_adapter("goft", task.weight)
    report = train(adapter, task, cfg)
    assert report.losses == []
    np.testing.assert_array_equal(adapter.chain.angles, 0.0)


def test_frozen_weight_untouched():
    task = make_task(spec_for())
    before = task.weight.W.copy()
    cfg = TrainConfig(method="goft", steps=50, seed=0)
    train(make_adapter("goft", task.weight), task, cfg)
    np.testing.assert_array_equal(task.weight.W, before)


def test_training_determinism_bitwise():
    task = make_task(spec_for())
    curves = []
    for _ in range(2):
        cfg = TrainConfig(method="qgoft", lam=0.01, steps=60, seed=3)
        report = train(make_adapter("qgoft", task.weight), task, cfg)
        curves.append(report.losses)
    assert curves[0] == curves[1]


def test_resume_reproduces_loss_curve():
    task = make_task(spec_for())
    cfg = TrainConfig(method="goft", steps=80, seed=1)
    full_adapter = make_adapter("goft", task.weight)
    full = train(full_adapter, task, cfg)

    part_adapter = make_adapter("goft", task.weight)
    first = train(part_adapter, task, cfg, stop_step=40)
    second = train(part_adapter, task, cfg, start_step=40,
                   opt=first.optimizer_state)
    assert first.losses + second.losses == full.losses
    np.testing.assert_array_equal(part_adapter.chain.angles,
                                  full_adapter.chain.angles)


def test_rotation_recovery_converges_d8():
    task = make_task(spec_for(d=8, n=4, samples=400, seed=2))
    cfg = TrainConfig(method="goft", lr=0.05, steps=800, batch_size=400, seed=2)
    adapter = make_adapter("goft", task.weight)
    report = train(adapter, task, cfg)
    assert report.final_mse < 1e-6


def test_goft_star_fits_scaled_target():
    task = make_task(spec_for(kind="scaled-rotation-recovery", d=8, n=4,
                              samples=400, seed=4))
    cfg = TrainConfig(method="goft-star", lr=0.05, steps=1200, batch_size=400, seed=4)
    adapter = make_adapter("goft-star", task.weight)
    report = train(adapter, task, cfg)
    assert report.final_mse < 1e-8
    assert report.param_count == 7 + 8


def test_goft_cannot_fit_scaled_target():
    task = make_task(spec_for(kind="scaled-rotation-recovery", d=8, n=4,
                              samples=400, seed=4))
    cfg = TrainConfig(method="goft", lr=0.05, steps=1200, batch_size=400, seed=4)
    report = train(make_adapter("goft", task.weight), task, cfg)
    assert report.final_mse > 1e-3  # norm mismatch floor


def test_oft_cayley_trains_small():
    task = make_task(spec_for(d=6, n=3, samples=200, seed=1))
    cfg = TrainConfig(method="oft-cayley", lr=0.05, steps=400,
                      batch_size=200, seed=1)
    adapter = make_adapter("oft-cayley", task.weight)
    report = train(adapter, task, cfg)
    assert report.final_mse < 1e-4
    assert report.param_count == 15


def test_oft_cayley_dimension_guard():
    task = make_task(spec_for(d=32, n=4, samples=50))
    with pytest.raises(ConfigError):
        make_adapter("oft-cayley", task.weight)


def test_lambda_warned_for_non_qgoft():
    cfg = TrainConfig(method="goft", lam=0.5)
    with pytest.warns(UserWarning):
        cfg.validate()


def test_report_penalty_tracks_regularizer():
    task = make_task(spec_for(kind="scaled-rotation-recovery", d=8, n=4,
                              samples=300, seed=6))
    cfg = TrainConfig(method="qgoft", lam=0.1, lr=0.05, steps=300,
                      batch_size=300, seed=6)
    adapter = make_adapter("qgoft", task.weight)
    report = train(adapter, task, cfg)
    assert report.penalties[-1] == pytest.approx(ortho_penalty(adapter.chain), rel=0.5)
    assert report.final_max_inner >= 0.0


def test_ablation_sweep_shapes():
    rows = ablation_sweep(
        spec_for(d=8, n=4, samples=200),
        methods=("goft", "qgoft"),
        lam_grid=(0.01, 0.1),
        config=TrainConfig(method="goft", steps=40, batch_size=200),
        seeds=(0, 1),
    )
    # per seed: 1 goft row + 2 qgoft rows
    assert len(rows) == 6
    assert {r["method"] for r in rows} == {"goft", "qgoft"}
    goft_rows = [r for r in rows if r["method"] == "goft"]
    assert all(r["param_count"] == 7 for r in goft_rows)
