"""Seeded multi-run experiment execution.

One experiment = one system (drawn once from the base seed), `runs`
disturbance realizations, and a fixed set of algorithms that all consume
the identical per-run disturbance stream, so cross-algorithm comparisons
are paired. Within a round the order is: observe state, act, suffer the
stage cost, transition, then learn from information available through
the previous round.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from dynaboost.boosting import DynaBoost
from dynaboost.controllers import (
    GpcController,
    LqrController,
    Observation,
    RecurrentController,
    WeakController,
    ZeroController,
    solve_dare,
)
from dynaboost.core import BallSet, RngStream, Window
from dynaboost.dynamics import (
    IidGaussianDisturbance,
    PendulumSystem,
    RandomWalkDisturbance,
    SinusoidalDisturbance,
    Trajectory,
    disturbance_hash,
    random_lds,
)
from dynaboost.harness.config import ExperimentConfig
from dynaboost.harness.stats import SeriesStats, aggregate
from dynaboost.losses import (
    CurvatureBounds,
    LinearResidualLoss,
    ProxyLoss,
    QuadraticCost,
    derive_curvature_bounds,
)

# Fixed substream layout under the base seed: child 0 draws the system,
# child 1 the per-run disturbances, child 2 the per-run controller inits.
_SYSTEM_STREAM = 0
_DISTURBANCE_STREAM = 1
_CONTROLLER_STREAM = 2


def build_system(cfg: ExperimentConfig):
    """Returns (system, cost); the system depends only on env config and seed."""
    if cfg.env.kind == "pendulum":
        system = PendulumSystem()
        return system, QuadraticCost.identity(2, 1)
    rng = RngStream(cfg.seed).child(_SYSTEM_STREAM)
    system = random_lds(rng, cfg.env.k, cfg.env.d, cfg.env.rho)
    return system, QuadraticCost.identity(cfg.env.k, cfg.env.d)


def make_disturbance(cfg: ExperimentConfig, dim: int, rng: RngStream):
    d = cfg.disturbance
    if d.kind == "iid_gaussian":
        return IidGaussianDisturbance(dim, d.std, rng)
    if d.kind == "random_walk":
        return RandomWalkDisturbance(dim, d.std, d.clip_lo, d.clip_hi, rng)
    return SinusoidalDisturbance(dim)


def draw_disturbances(cfg: ExperimentConfig, dim: int, run_index: int) -> np.ndarray:
    rng = RngStream(cfg.seed).child(_DISTURBANCE_STREAM).child(run_index)
    gen = make_disturbance(cfg, dim, rng)
    return np.stack([gen.generate(t) for t in range(cfg.T)])


def disturbance_bound(cfg: ExperimentConfig, dim: int) -> float:
    # Bound W of the stream, needed for curvature constants; the generator
    # itself is stateless to query so build a throwaway instance.
    return make_disturbance(cfg, dim, RngStream(0)).bound


def linearized_lds(system):
    """(A, B) used for LQR and curvature purposes; exact for linear systems."""
    if hasattr(system, "linearization"):
        return system.linearization()
    return system.A, system.B


class _LinearizedView:
    """Wraps (A, B) so curvature derivation sees a linear system."""

    def __init__(self, A, B):
        self.A = A
        self.B = B


def booster_curvature(cfg: ExperimentConfig, system, cost) -> CurvatureBounds | None:
    if cfg.booster.variant != "dynaboost2":
        return None
    A, B = linearized_lds(system)
    derived = derive_curvature_bounds(
        _LinearizedView(A, B),
        cost,
        cfg.H,
        W=disturbance_bound(cfg, system.state_dim),
        R_u=cfg.action_radius,
    )
    alpha = cfg.booster.alpha if cfg.booster.alpha is not None else derived.alpha
    beta = cfg.booster.beta if cfg.booster.beta is not None else derived.beta
    return CurvatureBounds(alpha=alpha, beta=beta, bound=derived.bound)


def make_weak_controller(
    cfg: ExperimentConfig, state_dim: int, ball: BallSet, rng: RngStream
) -> WeakController:
    w = cfg.weak
    if w.kind == "gpc":
        return GpcController(
            state_dim, cfg.H, ball, R_M=w.R_M, lr=w.lr, lr_schedule=w.lr_schedule
        )
    return RecurrentController(
        state_dim,
        cfg.H,
        ball,
        rng,
        hidden_dim=w.hidden,
        lr=w.lr,
        cell=w.cell,
        clip_norm=w.clip_norm,
        lr_schedule=w.lr_schedule,
        weight_radius=w.weight_radius,
    )


def recurrent_parameter_count(k: int, d: int, hidden: int, cell: str) -> int:
    if cell == "lstm":
        core = 4 * hidden * (k + hidden + 1)
    else:
        core = hidden * (k + hidden + 1)
    return core + d * hidden + d


def overparam_hidden(k: int, d: int, hidden: int, cell: str, N: int) -> int:
    """Smallest hidden size whose parameter count reaches N small nets."""
    target = N * recurrent_parameter_count(k, d, hidden, cell)
    h = hidden
    while recurrent_parameter_count(k, d, h, cell) < target:
        h += 1
    return h


class _BoostedPolicy:
    name = "boosted"

    def __init__(self, booster: DynaBoost):
        self.booster = booster

    def act(self, obs: Observation):
        return self.booster.act(obs)

    def update(self, window_loss, w_history):
        self.booster.update(window_loss, w_history)


class _SelfTaughtPolicy:
    """One weak controller doing plain gradient steps on its own window."""

    def __init__(self, name: str, ctrl: WeakController, H: int):
        self.name = name
        self.ctrl = ctrl
        self.window = Window(H, ctrl.action_ball.dim)

    def act(self, obs: Observation):
        u = self.ctrl.act(obs)
        self.window.push(u)
        return u

    def update(self, window_loss, w_history):
        grads = window_loss.gradients(self.window.view())
        self.ctrl.receive_loss(LinearResidualLoss(grads), w_history)


class _StaticPolicy:
    def __init__(self, name: str, ctrl: WeakController):
        self.name = name
        self.ctrl = ctrl

    def act(self, obs: Observation):
        return self.ctrl.act(obs)

    def update(self, window_loss, w_history):
        pass


def _lqr_controller(system, cost, ball: BallSet) -> LqrController:
    A, B = linearized_lds(system)
    P, K = solve_dare(A, B, cost.Q, cost.R)
    return LqrController(K, ball, P=P)


def build_policies(cfg: ExperimentConfig, system, cost, run_index: int) -> list:
    ball = BallSet(cfg.action_radius, system.action_dim)
    base = RngStream(cfg.seed).child(_CONTROLLER_STREAM).child(run_index)
    curvature = booster_curvature(cfg, system, cost)
    learners = [
        make_weak_controller(cfg, system.state_dim, ball, base.child(0).child(i))
        for i in range(cfg.N)
    ]
    policies = [
        _BoostedPolicy(
            DynaBoost(learners, cfg.H, variant=cfg.booster.variant, curvature=curvature)
        )
    ]
    for name in cfg.baselines:
        if name == "single":
            ctrl = make_weak_controller(cfg, system.state_dim, ball, base.child(1))
            policies.append(_SelfTaughtPolicy("single", ctrl, cfg.H))
        elif name == "zero":
            policies.append(_StaticPolicy("zero", ZeroController(ball)))
        elif name == "lqr":
            policies.append(_StaticPolicy("lqr", _lqr_controller(system, cost, ball)))
        elif name == "overparam":
            hidden = overparam_hidden(
                system.state_dim, system.action_dim, cfg.weak.hidden, cfg.weak.cell, cfg.N
            )
            ctrl = RecurrentController(
                system.state_dim,
                cfg.H,
                ball,
                base.child(2),
                hidden_dim=hidden,
                lr=cfg.weak.lr if cfg.weak.lr is not None else 0.05,
                cell=cfg.weak.cell,
                clip_norm=cfg.weak.clip_norm,
                lr_schedule=cfg.weak.lr_schedule,
                weight_radius=cfg.weak.weight_radius,
            )
            policies.append(_SelfTaughtPolicy("overparam", ctrl, cfg.H))
        else:
            raise ValueError(f"unknown baseline {name!r}")
    return policies


def run_episode(system, cost, cfg: ExperimentConfig, policy, w_seq: np.ndarray, run_index: int) -> Trajectory:
    T = w_seq.shape[0]
    k = system.state_dim
    d = system.action_dim
    H = cfg.H
    states = np.zeros((T + 1, k))
    actions = np.zeros((T, d))
    costs = np.zeros(T)
    hist = Window(2 * H - 1, k)
    x = np.zeros(k)
    diverged = False
    t_end = T
    full_hash = disturbance_hash(w_seq)
    for t in range(T):
        obs = Observation(x, hist.view()[H - 1 :])
        u = np.asarray(policy.act(obs), dtype=np.float64).reshape(d)
        c = cost.value(x, u)
        x_next = system.step(x, u, w_seq[t])
        actions[t] = u
        costs[t] = c
        finite = bool(np.all(np.isfinite(x_next))) and math.isfinite(c)
        if not finite or float(np.linalg.norm(x_next)) > cfg.divergence_threshold:
            diverged = True
            if finite:
                states[t + 1] = x_next
                t_end = t + 1
            else:
                t_end = t
            break
        states[t + 1] = x_next
        window_loss = ProxyLoss(system, cost, H, hist.view()[H:])
        policy.update(window_loss, hist.view())
        hist.push(w_seq[t])
        x = x_next
    return Trajectory(
        states=states[: t_end + 1],
        actions=actions[:t_end],
        disturbances=w_seq[:t_end].copy(),
        costs=costs[:t_end],
        algorithm=policy.name,
        seed=run_index,
        w_hash=full_hash,
        diverged=diverged,
    )


def _run_one(cfg: ExperimentConfig, run_index: int) -> dict:
    system, cost = build_system(cfg)
    w_seq = draw_disturbances(cfg, system.state_dim, run_index)
    out = {}
    for policy in build_policies(cfg, system, cost, run_index):
        out[policy.name] = run_episode(system, cost, cfg, policy, w_seq, run_index)
    return out


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trajectories: dict[str, list[Trajectory]]
    stats: dict[str, SeriesStats]
    w_hashes: list[str]
    diverged: dict[str, set] = field(default_factory=dict)

    @property
    def algorithms(self) -> list[str]:
        return sorted(self.trajectories)

    def boosted_diverged(self) -> bool:
        return bool(self.diverged.get("boosted"))

    def final_averages(self, algorithm: str) -> np.ndarray:
        """Final running-average cost of each run, in run order."""
        return np.array(
            [t.running_average()[-1] for t in self.trajectories[algorithm]]
        )


def run_experiment(cfg: ExperimentConfig, parallel: int = 1) -> ExperimentResult:
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as ex:
            futures = [ex.submit(_run_one, cfg, r) for r in range(cfg.runs)]
            per_run = [f.result() for f in futures]
    else:
        per_run = [_run_one(cfg, r) for r in range(cfg.runs)]

    algorithms = list(per_run[0])
    trajectories = {alg: [run[alg] for run in per_run] for alg in algorithms}
    w_hashes = []
    for r, run in enumerate(per_run):
        hashes = {run[alg].w_hash for alg in algorithms}
        if len(hashes) != 1:
            raise RuntimeError(f"run {r}: algorithms consumed different disturbance streams")
        w_hashes.append(hashes.pop())
    diverged = {
        alg: {t.seed for t in trajs if t.diverged} for alg, trajs in trajectories.items()
    }
    stats = {}
    for alg in algorithms:
        if diverged[alg]:
            continue
        stats[alg] = aggregate([t.running_average() for t in trajectories[alg]])
    return ExperimentResult(
        config=cfg,
        trajectories=trajectories,
        stats=stats,
        w_hashes=w_hashes,
        diverged=diverged,
    )
