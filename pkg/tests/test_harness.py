import math

import numpy as np
import pytest

from optlab import harness as H
from optlab.fp import FPConfig
from optlab.scenario import NetworkConfig

SMALL = NetworkConfig(num_bs_antennas=4, num_ir_elements=4, num_ues=2, num_quantiles=5)
# short optimiser runs keep the learner tests quick; they only exercise plumbing
QUICK = FPConfig(max_outer_iters=5)


def test_scheme_ids():
    assert [s.value for s in H.SchemeId] == ["proposed_fp", "fixed_ir", "direct", "qrdrl",
                                             "qlearning", "no_adapt"]
    with pytest.raises(ValueError):
        H.SchemeId("bogus")


@pytest.mark.parametrize("scheme", [s.value for s in H.SchemeId])
def test_run_drop_deterministic(scheme):
    a = H.run_drop(SMALL, scheme, 3)
    b = H.run_drop(SMALL, scheme, 3)
    assert a == b
    assert a.status == "ok" and a.metric > 0


def test_direct_ignores_reflector_size():
    a = H.run_drop(SMALL, "direct", 4)
    b = H.run_drop(SMALL.replace(num_ir_elements=16), "direct", 4)
    assert a.metric == b.metric


def test_proposed_beats_fixed_on_same_drop():
    cfg = NetworkConfig()
    for seed in range(3):
        p = H.run_drop(cfg, "proposed_fp", seed)
        f = H.run_drop(cfg, "fixed_ir", seed)
        assert p.metric >= f.metric


def test_untrained_learners_match_no_adapt():
    base = H.run_drop(SMALL, "no_adapt", 5).metric
    assert H.run_drop(SMALL, "qrdrl", 5).metric == base
    assert H.run_drop(SMALL, "qlearning", 5).metric == base


def test_failed_drop_is_recorded_not_raised(monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("synthetic failure")
    monkeypatch.setattr(H, "joint_optimize", boom)
    rec = H.run_drop(SMALL, "proposed_fp", 0)
    assert math.isnan(rec.metric)
    assert rec.status.startswith("failed: RuntimeError")


def test_sweep_counts_and_order():
    recs = H.sweep(SMALL, ["fixed_ir", "direct"], "P_max", [20.0], drops=1)
    assert len(recs) == 2
    recs = H.sweep(SMALL, ["direct"], "N", [4, 9], drops=2, seed=10)
    assert [(r.value, r.seed) for r in recs] == [(4, 10), (4, 11), (9, 10), (9, 11)]
    assert recs[0].metric == recs[2].metric
    with pytest.raises(ValueError):
        H.sweep(SMALL, ["direct"], "K", [1])


def test_sweep_independent_of_workers():
    a = H.sweep(SMALL, ["fixed_ir"], "b", [1e6, 2e6], drops=2)
    b = H.sweep(SMALL, ["fixed_ir"], "b", [1e6, 2e6], drops=2, workers=2)
    assert a == b


def test_seed_isolation():
    a = H.sweep(SMALL, ["proposed_fp"], "P_max", [30.0], drops=3, seed=0)
    b = H.sweep(SMALL, ["proposed_fp"], "P_max", [30.0], drops=1, seed=1)
    assert b[0] == a[1]


def test_power_sweep_increases():
    recs = H.sweep(SMALL, ["proposed_fp"], "P_max", [20.0, 30.0, 40.0], drops=3)
    _, mean, _ = H.series(recs, "proposed_fp")
    assert np.all(np.diff(mean) > 0)


def test_csv_round_trip(tmp_path):
    recs = H.sweep(SMALL, ["fixed_ir", "direct"], "P_max", [20.0], drops=2)
    recs.append(H.ExperimentRecord("qrdrl", "interval", 3.0, 1, 1.5e6, episode=3, coverage=0.97))
    recs.append(H.ExperimentRecord("direct", "P_max", 20.0, 9, math.nan, status="failed: X: y"))
    H.emit_csv(recs, tmp_path / "r.csv")
    back = H.read_csv(tmp_path / "r.csv")
    assert len(back) == len(recs)
    for a, b in zip(recs[:-1], back[:-1]):
        assert a == b
    assert math.isnan(back[-1].metric) and back[-1].status == "failed: X: y"


def test_empty_records_error(tmp_path):
    with pytest.raises(ValueError):
        H.emit_csv([], tmp_path / "e.csv")
    assert not (tmp_path / "e.csv").exists()
    with pytest.raises(ValueError):
        H.emit_plot_data([], tmp_path / "p.csv")


def test_aggregate_hand_values(tmp_path):
    recs = [H.ExperimentRecord("direct", "P_max", 20.0, s, m) for s, m in enumerate([1.0, 2.0, 3.0])]
    recs.append(H.ExperimentRecord("direct", "P_max", 20.0, 9, math.nan, status="failed"))
    (a,) = H.aggregate(recs)
    assert a["mean"] == 2.0 and a["n"] == 3
    assert a["stderr"] == pytest.approx(math.sqrt(1 / 3))
    H.emit_plot_data(recs, tmp_path / "plot.csv")
    lines = (tmp_path / "plot.csv").read_text().splitlines()
    assert lines[0] == "scheme,variable,x,mean,stderr,n"
    assert lines[1].startswith("direct,P_max,20.0,2.0,")


def test_windowed_means():
    assert np.array_equal(H.windowed_means(np.arange(7.0), 3), [1.0, 4.0, 6.0])


def test_train_and_eval_zero_episodes():
    out = H.train_and_eval(SMALL, 0, 3, seeds=(0,), action_ids=[1, 2, 3], fp_config=QUICK)
    assert out.training == []
    by = {s: [r.metric for r in out.online if r.scheme == s] for s in ("qrdrl", "qlearning", "no_adapt")}
    assert len(by["no_adapt"]) == 3
    assert by["qrdrl"] == by["no_adapt"] == by["qlearning"]


def test_train_and_eval_records_and_reduction(caplog):
    with caplog.at_level("WARNING"):
        out = H.train_and_eval(SMALL, 4, 2, seeds=(0, 1), pool_size=2, reduction_samples=3,
                               fp_config=QUICK)
    assert "action-space reduction" in caplog.text
    assert len(out.action_ids) == min(SMALL.reduced_action_count, 2 ** 4)
    assert len(out.training) == 2 * 2 * 4
    assert len(out.online) == 2 * 3 * 2
    assert set(out.tables) == {("qrdrl", 0), ("qlearning", 0), ("qrdrl", 1), ("qlearning", 1)}


def test_train_and_eval_seed_isolation():
    a = H.train_and_eval(SMALL, 3, 2, seeds=(0, 1), action_ids=[1, 2], pool_size=2, fp_config=QUICK)
    b = H.train_and_eval(SMALL, 3, 2, seeds=(1,), action_ids=[1, 2], pool_size=2, fp_config=QUICK)
    assert [r for r in a.online if r.seed == 1] == b.online
    assert [r for r in a.training if r.seed == 1] == b.training
