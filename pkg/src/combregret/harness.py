"""Games, pseudo-regret and parameter sweeps with CSV output.

Each game seeds two independent generators from one integer seed: the first
drives the player's sampling, the second the adversary.  Floats are written
with ``repr`` so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .action_sets import ActionSet, build_action_set
from .environments import Adversary, build_adversary, observe
from .exp2 import Exp2, exp2_auto_eta
from .legendre import parse_legendre
from .oracles import (
    OracleError, exp2_alternating_regret, exp2_epsskew_regret_exact, minimax_reference,
)
from .osmd import OSMD, regret_bound, theorem_for, tuned_eta

OUTPUT_ENV = "COMBREGRET_OUTPUT_DIR"
TRACE_FIELDS = ["run_id", "seed", "t", "action_index", "inst_loss", "cum_loss", "cum_regret"]
SUMMARY_FIELDS = [
    "cell_id", "player", "adversary", "eta", "gamma", "n", "seeds",
    "mean_regret", "stderr", "bound", "bound_satisfied", "reference",
]


class GameError(RuntimeError):
    pass


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "results"))


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass(frozen=True)
class PlayerSpec:
    """What to build for each game.  ``eta`` is a number or ``"auto"``."""

    player: str = "osmd"
    legendre: str = "negentropy"
    eta: float | str = "auto"
    gamma: float = 0.0
    feedback: str = "semi"

    def __post_init__(self):
        if self.player not in ("osmd", "exp2"):
            raise ValueError(f"unknown player {self.player!r}")
        if self.eta != "auto" and not float(self.eta) > 0:
            raise ValueError(f"eta must be positive or 'auto', got {self.eta!r}")

    @property
    def tuned(self) -> bool:
        return self.eta == "auto"

    def resolve_eta(self, aset: ActionSet, n: int) -> float:
        if not self.tuned:
            return float(self.eta)
        if self.player == "osmd":
            theorem, q = theorem_for(parse_legendre(self.legendre))
            return tuned_eta(theorem, aset.m, aset.d, n, q)
        if self.feedback != "full":
            raise ValueError("eta=auto for exp2 is only defined with full feedback")
        return exp2_auto_eta(aset, n)

    def build(self, aset: ActionSet, n: int):
        eta = self.resolve_eta(aset, n)
        if self.player == "osmd":
            return OSMD(aset, parse_legendre(self.legendre), eta, self.feedback)
        return Exp2(aset, eta, self.gamma, self.feedback)

    def bound(self, aset: ActionSet, n: int):
        """Regret bound for tuned OSMD, else None."""
        if self.player != "osmd" or not self.tuned:
            return None
        theorem, q = theorem_for(parse_legendre(self.legendre))
        return regret_bound(theorem, aset.m, aset.d, n, q)

    def descriptor(self) -> str:
        if self.player == "osmd":
            return f"osmd/{self.legendre}/{self.feedback}"
        return f"exp2/{self.feedback}"


@dataclass
class GameTrace:
    actions: np.ndarray  # (n, d) int8
    action_index: np.ndarray  # (n,) position in the vertex list, -1 if not enumerable
    inst_loss: np.ndarray  # (n,)
    losses: np.ndarray | None  # (n, d)
    seed: int
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.inst_loss)

    @property
    def cum_loss(self) -> np.ndarray:
        return np.cumsum(self.inst_loss)


@dataclass
class RegretReport:
    seeds: list
    per_seed: np.ndarray
    curves: np.ndarray  # (k, n) running regret per seed
    bound: float | None = None

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_seed))

    @property
    def stderr(self) -> float:
        k = len(self.per_seed)
        return float(np.std(self.per_seed, ddof=1) / math.sqrt(k)) if k > 1 else 0.0

    @property
    def bound_satisfied(self):
        return None if self.bound is None else bool(self.mean <= self.bound)


def game_streams(seed: int):
    """(player generator, adversary generator) for a seed."""
    player_ss, env_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(player_ss), np.random.default_rng(env_ss)


def run_game(player, adversary: Adversary, aset: ActionSet, n: int, seed: int) -> GameTrace:
    """Play n rounds.  ``player`` is a PlayerSpec or a fresh player object.

    The adversary's loss for round t is drawn before the player samples.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if adversary.d != aset.d:
        raise ValueError(f"adversary has d={adversary.d}, set has d={aset.d}")
    meta = {"set": aset.descriptor(), "adversary": adversary.descriptor(), "seed": seed}
    if isinstance(player, PlayerSpec):
        meta.update(player=player.descriptor(), eta=player.resolve_eta(aset, n), gamma=player.gamma)
        player = player.build(aset, n)
    mode = player.feedback
    player_rng, env_rng = game_streams(seed)
    history = None if adversary.oblivious or adversary.stochastic else []
    actions = np.zeros((n, aset.d), dtype=np.int8)
    losses = np.zeros((n, aset.d))
    for t in range(1, n + 1):
        try:
            z = adversary.loss(t, env_rng, history)
            a = player.sample(player_rng)
            player.update(a, observe(mode, a, z))
        except (ArithmeticError, ValueError, IndexError, np.linalg.LinAlgError) as err:
            raise GameError(f"round {t}: {err}") from err
        actions[t - 1] = a
        losses[t - 1] = z
        if history is not None:
            history.append((a, z))
    inst = np.einsum("ij,ij->i", actions, losses)
    index = np.array([aset.index_of(a) for a in actions]) if aset.enumerable() else np.full(n, -1)
    return GameTrace(actions, index, inst, losses, seed, meta)


def comparator_curve(trace: GameTrace, aset: ActionSet, adversary: Adversary) -> np.ndarray:
    """Loss of the best fixed action over rounds 1..t, for every t.

    Oblivious adversaries use the best action in hindsight on the realised
    losses; stochastic ones use the action minimising the expected loss.
    """
    n = len(trace)
    if adversary.stochastic:
        mu = adversary.mean()
        best = aset.linear_minimize(mu)
        return float(best @ mu) * np.arange(1, n + 1)
    if trace.losses is None:
        raise ValueError("trace has no stored losses; cannot compute the comparator")
    cum = np.cumsum(trace.losses, axis=0)
    return np.array([float(aset.linear_minimize(c) @ c) for c in cum])


def pseudo_regret(traces, aset: ActionSet, adversary: Adversary, bound=None) -> RegretReport:
    if not traces:
        raise ValueError("no traces")
    curves = np.array([t.cum_loss - comparator_curve(t, aset, adversary) for t in traces])
    return RegretReport([t.seed for t in traces], curves[:, -1].copy(), curves, bound)


def write_trace_csv(path, run_rows) -> None:
    """``run_rows`` is a list of (run_id, trace, regret curve)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for run_id, trace, curve in run_rows:
            cum = trace.cum_loss
            for t in range(len(trace)):
                w.writerow([run_id, trace.seed, t + 1, int(trace.action_index[t]),
                            fmt(trace.inst_loss[t]), fmt(cum[t]), fmt(curve[t])])


# -- sweeps ---------------------------------------------------------------------

@dataclass
class SweepConfig:
    set: str
    n: int
    seeds: list
    players: list  # PlayerSpec
    adversaries: list  # adversary spec strings
    output_dir: str | None = None
    figures: bool = True
    workers: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepConfig":
        raw = dict(raw)
        seeds = raw.pop("seeds")
        seeds = list(range(seeds)) if isinstance(seeds, int) else [int(s) for s in seeds]
        players = [PlayerSpec(**p) for p in raw.pop("players", [{}])]
        eta_grid = raw.pop("eta_grid", None)
        if eta_grid:
            players = [replace(p, eta=float(e)) for p in players for e in eta_grid]
        advs = list(raw.pop("adversaries", ["iid"]))
        eps_grid = raw.pop("eps_grid", None)
        if eps_grid:
            advs = [_with_eps(a, e) for a in advs for e in eps_grid]
        return cls(players=players, adversaries=advs, seeds=seeds, **raw)

    @classmethod
    def load(cls, path) -> "SweepConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["players"] = [asdict(p) for p in self.players]
        return d


def _with_eps(spec: str, eps) -> str:
    kind, _, rest = spec.partition(":")
    if kind not in ("epsskew", "alpha"):
        return spec
    params = [p for p in rest.split(",") if p and not p.startswith("eps=")]
    return f"{kind}:" + ",".join([f"eps={eps:g}"] + params)


def reference_value(spec: PlayerSpec, adversary: Adversary, aset: ActionSet, n: int, eta: float):
    """Closed-form regret when one is known for this pairing, else the minimax level."""
    try:
        if spec.player == "exp2" and spec.feedback == "full" and aset.kind == "exp2lb":
            if adversary.kind == "alternating" and n % 2 == 0:
                return exp2_alternating_regret(aset.d, n, eta)
            if adversary.kind == "epsskew":
                return exp2_epsskew_regret_exact(aset.d, n, eta, adversary.eps)
        return minimax_reference(aset.m, aset.d, n)
    except OracleError:
        return None


def _play(args):
    spec, set_spec, adv_spec, n, seed = args
    aset = build_action_set(set_spec)
    return run_game(spec, build_adversary(adv_spec, aset), aset, n, seed)


def sweep(config: SweepConfig, progress=None) -> list[dict]:
    """Run every (player, adversary) cell over all seeds and write the CSVs.

    Returns the summary rows in cell order.
    """
    if not config.seeds:
        raise ValueError("seed list is empty")
    if config.n < 1:
        raise ValueError("n must be at least 1")
    if not config.players or not config.adversaries:
        raise ValueError("need at least one player and one adversary")
    out = Path(config.output_dir) if config.output_dir else default_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    aset = build_action_set(config.set)
    cells = [(p, a) for p in config.players for a in config.adversaries]
    jobs = [(p, config.set, a, config.n, s) for p, a in cells for s in config.seeds]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            traces = list(pool.map(_play, jobs, chunksize=1))
    else:
        traces = []
        for job in jobs:
            traces.append(_play(job))
            if progress:
                progress(len(traces), len(jobs))
    k = len(config.seeds)
    rows, reports = [], []
    for c, (spec, adv_spec) in enumerate(cells):
        cell_id = f"c{c:03d}"
        adversary = build_adversary(adv_spec, aset)
        eta = spec.resolve_eta(aset, config.n)
        cell_traces = traces[c * k:(c + 1) * k]
        report = pseudo_regret(cell_traces, aset, adversary, spec.bound(aset, config.n))
        write_trace_csv(out / f"{cell_id}.csv", [
            (f"{cell_id}-s{tr.seed}", tr, curve) for tr, curve in zip(cell_traces, report.curves)
        ])
        rows.append({
            "cell_id": cell_id, "player": spec.descriptor(), "adversary": adversary.descriptor(),
            "eta": eta, "gamma": spec.gamma, "n": config.n, "seeds": k,
            "mean_regret": report.mean, "stderr": report.stderr, "bound": report.bound,
            "bound_satisfied": report.bound_satisfied,
            "reference": reference_value(spec, adversary, aset, config.n, eta),
        })
        reports.append(report)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for r in rows:
            w.writerow([r[f] if isinstance(r[f], str) else fmt(r[f]) for f in SUMMARY_FIELDS])
    if config.figures:
        from .plotting import plot_regret_curves, plot_summary

        for r, report in zip(rows, reports):
            plot_regret_curves(report, out / f"{r['cell_id']}.png",
                               title=f"{r['player']} vs {r['adversary']}")
        plot_summary(rows, out / "summary.png")
    return rows
