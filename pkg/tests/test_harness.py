import csv
import math

import numpy as np
import pytest

from combregret.action_sets import Exp2LowerBound, MSet, ParallelGames
from combregret.environments import AlternatingLB, FixedSequence, build_adversary
from combregret.exp2 import Exp2
from combregret.harness import (
    SUMMARY_FIELDS, TRACE_FIELDS, GameError, PlayerSpec, SweepConfig, comparator_curve,
    pseudo_regret, run_game, sweep,
)
from combregret.osmd import regret_bound


class Always:
    """Deterministic player that always plays one action."""

    feedback = "full"

    def __init__(self, a):
        self.a = np.asarray(a)

    def sample(self, rng):
        return self.a.copy()

    def update(self, a, fb):
        pass


def test_single_zero_round():
    aset = MSet(2, 1)
    tr = run_game(PlayerSpec("osmd", eta=0.1, feedback="full"), FixedSequence([[0.0, 0.0]]), aset, 1, 0)
    assert len(tr) == 1 and tr.inst_loss[0] == 0.0
    assert pseudo_regret([tr], aset, FixedSequence([[0.0, 0.0]])).mean == 0.0


def test_single_round_regret_one():
    aset = MSet(2, 1)
    adv = FixedSequence([[1.0, 0.0]])
    tr = run_game(Always([1, 0]), adv, aset, 1, 0)
    assert pseudo_regret([tr], aset, adv).per_seed[0] == 1.0


def test_first_round_expected_loss_half():
    aset = MSet(2, 1)
    adv = FixedSequence([[1.0, 0.0]] * 3)
    losses = [run_game(PlayerSpec("osmd", eta=0.5), adv, aset, 1, s).inst_loss[0] for s in range(4000)]
    assert abs(np.mean(losses) - 0.5) <= 4 * 0.5 / math.sqrt(4000)


def test_identical_seeds_identical_traces():
    aset = MSet(6, 2)
    adv = build_adversary("iid", aset)
    spec = PlayerSpec("osmd", "inf:q=2", 0.2)
    a, b = run_game(spec, adv, aset, 200, 11), run_game(spec, adv, aset, 200, 11)
    np.testing.assert_array_equal(a.actions, b.actions)
    np.testing.assert_array_equal(a.losses, b.losses)
    c = run_game(spec, adv, aset, 200, 12)
    assert not np.array_equal(a.actions, c.actions)


def test_player_and_environment_streams_are_separate():
    # the iid losses do not depend on which player consumed the other stream
    aset = MSet(4, 2)
    adv = build_adversary("iid", aset)
    a = run_game(PlayerSpec("osmd", eta=0.1), adv, aset, 50, 3)
    b = run_game(PlayerSpec("exp2", eta=0.1, feedback="full"), adv, aset, 50, 3)
    np.testing.assert_array_equal(a.losses, b.losses)


def test_trace_invariants_and_regret_additivity():
    aset = ParallelGames(6, 2)
    adv = build_adversary("alpha:eps=0.2,alpha=3", aset)
    tr = run_game(PlayerSpec("osmd", eta="auto"), adv, aset, 300, 5)
    assert len(tr) == 300
    assert np.all((tr.inst_loss >= 0) & (tr.inst_loss <= aset.m))
    np.testing.assert_allclose(tr.inst_loss, np.sum(tr.actions * tr.losses, axis=1))
    rep = pseudo_regret([tr], aset, adv)
    comp = 300 * float(aset.vertices()[3] @ adv.mean())
    assert rep.per_seed[0] == pytest.approx(tr.inst_loss.sum() - comp, abs=1e-9)


def test_comparator_is_best_fixed_action():
    aset = Exp2LowerBound(8)
    adv = build_adversary("epsskew:eps=0.3", aset)
    tr = run_game(PlayerSpec("exp2", eta=0.5, feedback="full"), adv, aset, 40, 0)
    comp = comparator_curve(tr, aset, adv)
    V = aset.vertices().astype(float)
    cum = np.cumsum(tr.losses, axis=0)
    for t in range(40):
        assert comp[t] == pytest.approx(np.min(V @ cum[t]))
        assert np.all(comp[t] <= V @ cum[t] + 1e-12)


def test_uniform_player_against_alternating_has_zero_expected_regret():
    # eta -> 0 limit of the closed form: uniform play earns nd/8 in expectation, like every action
    aset = Exp2LowerBound(4)
    adv = AlternatingLB(4)
    traces = [run_game(Exp2(aset, 1e-12), adv, aset, 2, s) for s in range(4000)]
    rep = pseudo_regret(traces, aset, adv)
    assert abs(rep.mean) <= 4 * rep.stderr


def test_report_statistics():
    aset = MSet(3, 1)
    adv = build_adversary("iid", aset)
    traces = [run_game(PlayerSpec("osmd", eta=0.3), adv, aset, 20, s) for s in range(5)]
    rep = pseudo_regret(traces, aset, adv, bound=10.0)
    assert rep.mean == pytest.approx(np.mean(rep.per_seed))
    assert rep.stderr == pytest.approx(np.std(rep.per_seed, ddof=1) / math.sqrt(5))
    assert rep.bound_satisfied == (rep.mean <= 10.0)
    np.testing.assert_allclose(rep.curves[:, -1], rep.per_seed)


def test_player_spec_resolution():
    aset = MSet(8, 2)
    assert PlayerSpec("osmd").resolve_eta(aset, 5000) == pytest.approx(math.sqrt(2 * 2 * math.log(4) / (5000 * 8)))
    assert PlayerSpec("osmd", "inf:q=2").bound(aset, 5000) == pytest.approx(regret_bound("T5", 2, 8, 5000, 2.0))
    assert PlayerSpec("osmd", eta=0.1).bound(aset, 100) is None
    assert PlayerSpec("exp2", feedback="full").resolve_eta(aset, 100) > 0
    with pytest.raises(ValueError):
        PlayerSpec("exp2", feedback="semi").resolve_eta(aset, 100)
    with pytest.raises(ValueError):
        PlayerSpec("ftrl")
    with pytest.raises(ValueError):
        PlayerSpec(eta=-1.0)


def test_errors_carry_round_index():
    aset = MSet(2, 1)
    adv = FixedSequence([[0.5, 0.5]])
    with pytest.raises(GameError, match="round 2"):
        run_game(PlayerSpec("osmd", eta=0.1), adv, aset, 2, 0)
    with pytest.raises(ValueError):
        run_game(PlayerSpec("osmd", eta=0.1), adv, MSet(3, 1), 1, 0)
    with pytest.raises(ValueError):
        run_game(PlayerSpec("osmd", eta=0.1), adv, aset, 0, 0)


def small_config(tmp_path, **kw):
    raw = dict(set="exp2lb:d=4", n=20, seeds=3, adversaries=["alternating"],
               players=[{"player": "exp2", "feedback": "full", "eta": 0.5}],
               output_dir=str(tmp_path), figures=False)
    raw.update(kw)
    return SweepConfig.from_dict(raw)


def test_sweep_eta_grid_rows_and_reference(tmp_path):
    rows = sweep(small_config(tmp_path, eta_grid=[0.01, 0.1, 1.0]))
    assert len(rows) == 3
    with open(tmp_path / "summary.csv") as fh:
        table = list(csv.DictReader(fh))
    assert list(table[0]) == SUMMARY_FIELDS
    for r, eta in zip(table, (0.01, 0.1, 1.0)):
        assert float(r["eta"]) == eta
        assert float(r["reference"]) == pytest.approx(20 * 4 / 16 * math.tanh(eta / 2))
        assert r["bound"] == "" and r["bound_satisfied"] == ""
    with open(tmp_path / "c000.csv") as fh:
        trace = list(csv.DictReader(fh))
    assert list(trace[0]) == TRACE_FIELDS
    assert len(trace) == 3 * 20


def test_sweep_csv_is_recomputable(tmp_path):
    sweep(small_config(tmp_path))
    with open(tmp_path / "c000.csv") as fh:
        rows = list(csv.DictReader(fh))
    by_run = {}
    for r in rows:
        by_run.setdefault(r["run_id"], []).append(r)
    for run in by_run.values():
        cum = np.cumsum([float(r["inst_loss"]) for r in run])
        np.testing.assert_allclose(cum, [float(r["cum_loss"]) for r in run], atol=1e-9)


def test_sweep_bound_column_for_tuned_osmd(tmp_path):
    cfg = SweepConfig.from_dict(dict(set="mset:d=4,m=2", n=50, seeds=[0, 1], adversaries=["iid"],
                                     players=[{"player": "osmd", "legendre": "inf:q=2"}],
                                     output_dir=str(tmp_path), figures=True))
    (row,) = sweep(cfg)
    assert row["bound"] == pytest.approx(regret_bound("T5", 2, 4, 50, 2.0))
    assert row["bound_satisfied"] is True
    assert (tmp_path / "summary.png").exists() and (tmp_path / "c000.png").exists()


def test_sweep_is_byte_reproducible(tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"r{k}"
        sweep(small_config(d, adversaries=["alternating", "epsskew:eps=0.2"]))
        outs.append({p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))})
    assert outs[0] == outs[1]


def test_sweep_workers_match_serial(tmp_path):
    a = sweep(small_config(tmp_path / "a"))
    b = sweep(small_config(tmp_path / "b", workers=2))
    assert (tmp_path / "a" / "c000.csv").read_bytes() == (tmp_path / "b" / "c000.csv").read_bytes()
    assert a == b


def test_sweep_eps_grid(tmp_path):
    rows = sweep(small_config(tmp_path, adversaries=["epsskew:eps=0.5"], eps_grid=[0.1, 0.3]))
    assert [r["adversary"] for r in rows] == ["epsskew:eps=0.1", "epsskew:eps=0.3"]


def test_sweep_rejects_empty_seeds(tmp_path):
    with pytest.raises(ValueError):
        sweep(small_config(tmp_path, seeds=[]))


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("COMBREGRET_OUTPUT_DIR", str(tmp_path / "env"))
    cfg = small_config(tmp_path)
    cfg.output_dir = None
    sweep(cfg)
    assert (tmp_path / "env" / "summary.csv").exists()
