"""Finite-difference verification of every analytic gradient in the package.

Central differences with h = 1e-5 against: window-loss slot gradients
(linear and pendulum rollouts), the GPC parameter gradient, recurrent
backpropagation through time (both cells), and the comparator's adjoint
gradient. Used by the CLI and by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dynaboost.controllers import GpcController, RecurrentController, _slot_windows
from dynaboost.core import BallSet, RngStream, project_to_ball, projection_jacobian
from dynaboost.dynamics import LinearSystem, PendulumSystem
from dynaboost.harness.comparator import evaluate_fixed_gpc, fixed_gpc_gradient
from dynaboost.losses import LinearResidualLoss, ProxyLoss, QuadraticCost, QuadraticResidualLoss

FD_STEP = 1e-5
TOL_DEFAULT = 1e-5
TOL_RNN = 1e-4


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_rel_err: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.max_rel_err <= self.tol

    def line(self) -> str:
        status = "ok" if self.ok else "FAIL"
        return f"{status:4s} {self.name:32s} max rel err {self.max_rel_err:.3e} (tol {self.tol:.0e})"


def _central_fd(f, x0: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    g = np.zeros_like(x0)
    for i in range(x0.size):
        e = np.zeros_like(x0)
        e[i] = h
        g[i] = (f(x0 + e) - f(x0 - e)) / (2.0 * h)
    return g


def _rel_err(analytic: np.ndarray, fd: np.ndarray) -> float:
    return float(np.abs(analytic - fd).max() / max(1.0, np.abs(fd).max()))


def _random_residual(rng, H, d, kind: str):
    grads = rng.normal(size=(H, d))
    if kind == "linear":
        return LinearResidualLoss(grads)
    return QuadraticResidualLoss(
        grads, anchors=0.5 * rng.normal(size=(H, d)), coefficient=0.5 + rng.uniform()
    )


def check_window_loss(system, name: str, points: int = 100, scale: float = 0.5) -> CheckResult:
    rng = np.random.default_rng(101)
    cost = QuadraticCost.identity(system.state_dim, system.action_dim)
    worst = 0.0
    for _ in range(points):
        H = int(rng.integers(1, 6))
        w = scale * rng.normal(size=(H - 1, system.state_dim))
        ctx = ProxyLoss(system, cost, H, w)
        U0 = scale * rng.normal(size=(H, system.action_dim))
        analytic = ctx.gradients(U0).ravel()
        fd = _central_fd(lambda v: ctx.value(v.reshape(U0.shape)), U0.ravel().copy())
        worst = max(worst, _rel_err(analytic, fd))
    return CheckResult(name, worst, TOL_DEFAULT)


def check_gpc_gradient(points: int = 100) -> CheckResult:
    rng = np.random.default_rng(202)
    worst = 0.0
    for p in range(points):
        k = int(rng.integers(1, 4))
        d = int(rng.integers(1, 4))
        H = int(rng.integers(1, 5))
        radius = 0.6 if p % 2 else 50.0  # exercise both projection regimes
        ball = BallSet(radius, d)
        gpc = GpcController(k, H, ball, lr=0.0, lr_schedule="constant")
        gpc.M = rng.normal(size=(H, d, k))
        wh = rng.normal(size=(2 * H - 1, k))
        loss = _random_residual(rng, H, d, "linear" if p % 3 else "quadratic")
        windows = _slot_windows(wh, H, k)
        raws = np.stack(
            [np.einsum("mdk,mk->d", gpc.M, windows[j][::-1]) for j in range(H)]
        )
        acts = np.stack([project_to_ball(r, ball) for r in raws])
        g = loss.slot_gradients(acts)
        g = np.stack([projection_jacobian(raws[j], ball).T @ g[j] for j in range(H)])
        G = np.einsum("jd,jmk->mdk", g, windows[:, ::-1, :]).ravel()

        def composed(vec):
            M = vec.reshape(H, d, k)
            U = np.stack(
                [
                    project_to_ball(
                        np.einsum("mdk,mk->d", M, windows[j][::-1]), ball
                    )
                    for j in range(H)
                ]
            )
            return loss.value(U)

        fd = _central_fd(composed, gpc.M.ravel().copy())
        worst = max(worst, _rel_err(G, fd))
    return CheckResult("gpc parameter gradient", worst, TOL_DEFAULT)


def check_rnn_gradient(cell: str, points: int = 100) -> CheckResult:
    rng = np.random.default_rng(303)
    worst = 0.0
    for p in range(points):
        k = int(rng.integers(1, 3))
        d = int(rng.integers(1, 3))
        H = int(rng.integers(1, 5))
        radius = 0.5 if p % 2 else 50.0
        ball = BallSet(radius, d)
        ctrl = RecurrentController(
            k, H, ball, RngStream(404).child(p), hidden_dim=3, cell=cell
        )
        # The output head initializes to zero; check at a random small theta
        # so every parameter block sees a nontrivial gradient.
        ctrl.set_parameter_vector(0.4 * rng.normal(size=ctrl.parameter_vector().size))
        wh = rng.normal(size=(2 * H - 1, k))
        loss = _random_residual(rng, H, d, "linear" if p % 3 else "quadratic")
        cg, og = ctrl.loss_gradients(loss, wh)
        analytic = np.concatenate(
            [v.ravel() for v in cg.values()] + [v.ravel() for v in og.values()]
        )
        theta0 = ctrl.parameter_vector()
        windows = _slot_windows(wh, H, k)
        # The update trains the raw outputs against the loss gradients
        # frozen at the played actions, so that is the objective to
        # differentiate here.
        raw0, _, _ = ctrl._raw_batch(windows)
        g0 = loss.slot_gradients(np.stack([project_to_ball(r, ball) for r in raw0]))

        def composed(theta):
            ctrl.set_parameter_vector(theta)
            raw, _, _ = ctrl._raw_batch(windows)
            return float(np.sum(g0 * raw))

        fd = _central_fd(composed, theta0.copy())
        ctrl.set_parameter_vector(theta0)
        worst = max(worst, _rel_err(analytic, fd))
    return CheckResult(f"{cell} backprop through time", worst, TOL_RNN)


def check_comparator_gradient(points: int = 20) -> CheckResult:
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(points):
        k = int(rng.integers(1, 3))
        d = int(rng.integers(1, 3))
        H = int(rng.integers(1, 4))
        T = int(rng.integers(5, 30))
        A = rng.normal(size=(k, k))
        A *= 0.8 / max(1e-9, np.abs(np.linalg.eigvals(A)).max())
        system = LinearSystem(A, rng.normal(size=(k, d)))
        cost = QuadraticCost.identity(k, d)
        W = rng.normal(size=(T, k))
        M0 = rng.normal(size=(H, d, k))
        analytic = fixed_gpc_gradient(W, M0, system, cost, H).ravel()
        fd = _central_fd(
            lambda v: evaluate_fixed_gpc(W, v.reshape(H, d, k), system, cost, H),
            M0.ravel().copy(),
        )
        worst = max(worst, _rel_err(analytic, fd))
    return CheckResult("comparator adjoint gradient", worst, TOL_DEFAULT)


def run_all(points: int = 100) -> list[CheckResult]:
    lds = LinearSystem([[0.6, 0.2], [0.0, 0.5]], [[1.0, 0.0], [0.3, 1.0]])
    return [
        check_window_loss(lds, "window loss gradients (linear)", points=points),
        check_window_loss(PendulumSystem(), "window loss gradients (pendulum)", points=points),
        check_gpc_gradient(points=points),
        check_rnn_gradient("elman", points=points),
        check_rnn_gradient("lstm", points=points),
        check_comparator_gradient(),
    ]
