"""Stage costs, the truncated-memory window loss, and residual losses.

The window loss evaluates the stage cost at the counterfactual state
reached from zero by replaying the last H-1 actions and disturbances,
so it depends on only the last H actions. Its per-slot gradients are
what the booster hands to weak learners, either raw (linear residual)
or wrapped in a proximal quadratic (quadratic residual).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dynaboost.core import Array, as_matrix, as_vector


def _check_psd(M: Array, name: str) -> None:
    # Cholesky with a tiny diagonal lift accepts PSD-with-nullspace matrices
    # while still rejecting indefinite ones.
    if not np.allclose(M, M.T, atol=1e-10):
        raise ValueError(f"{name} must be symmetric")
    scale = max(1.0, float(np.abs(M).max()))
    try:
        np.linalg.cholesky(M + 1e-10 * scale * np.eye(M.shape[0]))
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive semidefinite") from None


class QuadraticCost:
    """c(x, u) = x'Qx + u'Ru with Q, R symmetric PSD."""

    def __init__(self, Q, R):
        self.Q = as_matrix(Q)
        self.R = as_matrix(R)
        if self.Q.shape[0] != self.Q.shape[1] or self.R.shape[0] != self.R.shape[1]:
            raise ValueError("Q and R must be square")
        _check_psd(self.Q, "Q")
        _check_psd(self.R, "R")
        self.state_dim = self.Q.shape[0]
        self.action_dim = self.R.shape[0]

    @classmethod
    def identity(cls, state_dim: int, action_dim: int) -> "QuadraticCost":
        return cls(np.eye(state_dim), np.eye(action_dim))

    def value(self, x, u) -> float:
        x = as_vector(x, self.state_dim)
        u = as_vector(u, self.action_dim)
        return float(x @ self.Q @ x + u @ self.R @ u)

    def grad_x(self, x) -> Array:
        return 2.0 * (self.Q @ as_vector(x, self.state_dim))

    def grad_u(self, u) -> Array:
        return 2.0 * (self.R @ as_vector(u, self.action_dim))


@dataclass
class ProxyLoss:
    """Window loss of the last H actions at one round.

    Holds the system, the stage cost, and the H-1 disturbances that pair
    with the first H-1 window actions. value() replays those pairs from
    the zero state and charges the stage cost at the resulting state with
    the final window action as the control.
    """

    system: object
    cost: QuadraticCost
    horizon: int
    disturbances: Array  # (H-1, k), oldest first

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("memory length must be >= 1")
        if hasattr(self.disturbances, "view"):
            self.disturbances = self.disturbances.view()
        w = np.asarray(self.disturbances, dtype=np.float64)
        if self.horizon == 1:
            w = w.reshape(0, self.system.state_dim)
        w = np.atleast_2d(w)
        if w.shape != (self.horizon - 1, self.system.state_dim):
            raise ValueError(
                f"need {self.horizon - 1} disturbances of dim {self.system.state_dim}, "
                f"got shape {w.shape}"
            )
        self.disturbances = w

    def _window(self, actions) -> Array:
        if hasattr(actions, "view"):
            actions = actions.view()
        U = np.atleast_2d(np.asarray(actions, dtype=np.float64))
        if U.shape != (self.horizon, self.system.action_dim):
            raise ValueError(
                f"need {self.horizon} actions of dim {self.system.action_dim}, got {U.shape}"
            )
        return U

    def truncated_state(self, actions) -> Array:
        U = self._window(actions)
        x = np.zeros(self.system.state_dim)
        for j in range(self.horizon - 1):
            x = self.system.f(x, U[j]) + self.disturbances[j]
        return x

    def value(self, actions) -> float:
        U = self._window(actions)
        return self.cost.value(self.truncated_state(U), U[-1])

    def gradients(self, actions) -> Array:
        """(H, d) array of per-slot gradients, via forward sensitivity.

        Slot j < H-1 only influences the replayed state; the final slot
        only enters the control cost.
        """
        U = self._window(actions)
        H = self.horizon
        x = np.zeros(self.system.state_dim)
        jacs = []
        for j in range(H - 1):
            jacs.append(self.system.jacobians(x, U[j]))
            x = self.system.f(x, U[j]) + self.disturbances[j]
        grads = np.zeros((H, self.system.action_dim))
        grads[H - 1] = self.cost.grad_u(U[-1])
        v = self.cost.grad_x(x)
        for j in range(H - 2, -1, -1):
            Jx, Ju = jacs[j]
            grads[j] = Ju.T @ v
            v = Jx.T @ v
        return grads


@dataclass
class LinearResidualLoss:
    """l(u_1..u_H) = sum_j g_j'u_j with g_j the window-loss gradients."""

    gradients: Array  # (H, d)

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.gradients, dtype=np.float64))
        if not np.all(np.isfinite(g)):
            raise ValueError("residual gradients must be finite")
        self.gradients = g

    @property
    def horizon(self) -> int:
        return self.gradients.shape[0]

    @property
    def action_dim(self) -> int:
        return self.gradients.shape[1]

    def _check(self, actions) -> Array:
        U = np.atleast_2d(np.asarray(actions, dtype=np.float64))
        if U.shape != self.gradients.shape:
            raise ValueError(f"expected action window {self.gradients.shape}, got {U.shape}")
        return U

    def value(self, actions) -> float:
        return float(np.sum(self.gradients * self._check(actions)))

    def slot_gradients(self, actions) -> Array:
        self._check(actions)
        return self.gradients.copy()


@dataclass
class QuadraticResidualLoss:
    """Proximal residual: sum_j c||u_j - a_j||^2 + g_j'(u_j - a_j).

    Anchors a_j are the previous boosting level's window; the coefficient
    c is half the step-length-scaled smoothness constant, so the loss is
    2c-strongly convex in the whole window.
    """

    gradients: Array  # (H, d)
    anchors: Array  # (H, d)
    coefficient: float

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.gradients, dtype=np.float64))
        a = np.atleast_2d(np.asarray(self.anchors, dtype=np.float64))
        if g.shape != a.shape:
            raise ValueError(f"gradient/anchor shape mismatch: {g.shape} vs {a.shape}")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(a))):
            raise ValueError("residual gradients and anchors must be finite")
        if not self.coefficient > 0:
            raise ValueError(f"curvature coefficient must be positive, got {self.coefficient}")
        self.gradients = g
        self.anchors = a

    @property
    def horizon(self) -> int:
        return self.gradients.shape[0]

    @property
    def action_dim(self) -> int:
        return self.gradients.shape[1]

    def _check(self, actions) -> Array:
        U = np.atleast_2d(np.asarray(actions, dtype=np.float64))
        if U.shape != self.gradients.shape:
            raise ValueError(f"expected action window {self.gradients.shape}, got {U.shape}")
        return U

    def value(self, actions) -> float:
        D = self._check(actions) - self.anchors
        return float(self.coefficient * np.sum(D * D) + np.sum(self.gradients * D))

    def slot_gradients(self, actions) -> Array:
        D = self._check(actions) - self.anchors
        return 2.0 * self.coefficient * D + self.gradients


@dataclass(frozen=True)
class CurvatureBounds:
    """Loss-class constants used by the booster and its analysis.

    alpha lower-bounds the curvature of the window loss along the current
    action (through R); beta upper-bounds the largest Hessian eigenvalue
    over the whole window; bound caps |loss| over the admissible
    action/disturbance region.
    """

    alpha: float
    beta: float
    bound: float

    def __post_init__(self):
        if not 0 < self.alpha <= self.beta:
            raise ValueError(f"need 0 < alpha <= beta, got {self.alpha}, {self.beta}")
        if not self.bound > 0:
            raise ValueError("loss bound must be positive")


def derive_curvature_bounds(system, cost: QuadraticCost, H: int, W: float, R_u: float) -> CurvatureBounds:
    """Conservative (alpha, beta, G) for a linear system and quadratic cost.

    With S = sum_{j<H} ||A^j B||_2, the window Hessian splits into 2R on
    the final slot plus 2 J'QJ with ||J||_2 <= S, giving
    beta = 2 (lmax(R) + lmax(Q) S^2). The state norm inside the window is
    at most sum_{j<H-1} ||A^j||_2 (||B||_2 R_u + W), which bounds the loss.
    """
    if H < 1:
        raise ValueError("memory length must be >= 1")
    if W < 0 or R_u <= 0:
        raise ValueError("need W >= 0 and R_u > 0")
    A, B = system.A, system.B
    q_eigs = np.linalg.eigvalsh(cost.Q)
    r_eigs = np.linalg.eigvalsh(cost.R)
    alpha = float(r_eigs[0])
    if alpha <= 0:
        raise ValueError("R must be positive definite to certify strong convexity")
    S = 0.0
    T_A = 0.0
    P = np.eye(A.shape[0])
    for j in range(H):
        S += float(np.linalg.norm(P @ B, 2))
        if j < H - 1:
            T_A += float(np.linalg.norm(P, 2))
        P = A @ P
    beta = 2.0 * (float(r_eigs[-1]) + float(q_eigs[-1]) * S**2)
    x_bound = T_A * (float(np.linalg.norm(B, 2)) * R_u + W)
    G = float(q_eigs[-1]) * x_bound**2 + float(r_eigs[-1]) * R_u**2
    return CurvatureBounds(alpha=alpha, beta=beta, bound=G)
