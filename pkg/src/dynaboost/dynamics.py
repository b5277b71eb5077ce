"""Dynamical systems, disturbance generators, and counterfactual replay.

Systems expose the deterministic part f of x' = f(x, u) + w together with
its Jacobians, so the loss module can propagate forward sensitivities
through short rollouts without knowing the system family.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from dynaboost.core import Array, RngStream, as_matrix, as_vector, gaussian


def spectral_radius_estimate(A, tol: float = 1e-9, max_iter: int = 200) -> float:
    """Estimate the spectral radius via matrix powers.

    Uses rho(A) = lim ||A^m||^(1/m) with repeated squaring and per-step
    normalisation, which is robust to complex dominant eigenvalue pairs
    where plain vector power iteration oscillates.
    """
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got {M.shape}")
    log_scale = 0.0  # log ||A^(2^j)||_F accumulated across squarings
    power = 1.0
    prev = None
    for _ in range(max_iter):
        n = float(np.linalg.norm(M))
        if n == 0.0 or not math.isfinite(n):
            return 0.0 if n == 0.0 else float("nan")
        log_scale += math.log(n)
        est = math.exp(log_scale / power)
        if prev is not None and abs(est - prev) <= tol * max(1.0, est):
            return est
        prev = est
        M = (M / n) @ (M / n)
        log_scale *= 2.0
        power *= 2.0
    raise RuntimeError(f"spectral radius estimate did not converge within {max_iter} squarings")


class LinearSystem:
    """x' = A x + B u (+ w)."""

    def __init__(self, A, B):
        self.A = as_matrix(A)
        if self.A.shape[0] != self.A.shape[1]:
            raise ValueError(f"A must be square, got {self.A.shape}")
        self.k = self.A.shape[0]
        self.B = as_matrix(B, rows=self.k)
        self.d = self.B.shape[1]
        rho = spectral_radius_estimate(self.A)
        if not rho < 1.0:
            warnings.warn(
                f"open-loop spectral radius {rho:.4f} >= 1; the K=0 configuration "
                "needs a stable A for bounded memory",
                stacklevel=2,
            )

    @property
    def state_dim(self) -> int:
        return self.k

    @property
    def action_dim(self) -> int:
        return self.d

    def f(self, x, u) -> Array:
        return self.A @ as_vector(x, self.k) + self.B @ as_vector(u, self.d)

    def jacobians(self, x, u) -> tuple[Array, Array]:
        return self.A, self.B

    def step(self, x, u, w) -> Array:
        return self.f(x, u) + as_vector(w, self.k)


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    return math.pi - (math.pi - theta) % (2.0 * math.pi)


@dataclass
class PendulumSystem:
    """Torque-controlled inverted pendulum, fixed-step discrete dynamics.

    State is (theta, theta_dot) with theta measured from upright and wrapped
    to (-pi, pi]; the action is a scalar torque clipped to +-max_torque, and
    the angular velocity is clipped to +-max_speed. The additive disturbance
    w lands on both state coordinates after the deterministic step.
    """

    g: float = 10.0
    m: float = 1.0
    l: float = 1.0
    dt: float = 0.05
    max_torque: float = 2.0
    max_speed: float = 8.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_torque <= 0 or self.max_speed <= 0:
            raise ValueError("torque and speed caps must be positive")

    @property
    def state_dim(self) -> int:
        return 2

    @property
    def action_dim(self) -> int:
        return 1

    def f(self, x, u) -> Array:
        x = as_vector(x, 2)
        u = as_vector(u, 1)
        theta, theta_dot = float(x[0]), float(x[1])
        torque = min(max(float(u[0]), -self.max_torque), self.max_torque)
        accel = 3.0 * self.g / (2.0 * self.l) * math.sin(theta) + 3.0 / (self.m * self.l**2) * torque
        new_dot = theta_dot + accel * self.dt
        new_dot = min(max(new_dot, -self.max_speed), self.max_speed)
        new_theta = wrap_angle(theta + new_dot * self.dt)
        return np.array([new_theta, new_dot])

    def jacobians(self, x, u) -> tuple[Array, Array]:
        # Clip saturation zeroes the corresponding sensitivity; the angle
        # wrap has unit derivative almost everywhere.
        x = as_vector(x, 2)
        u = as_vector(u, 1)
        theta, theta_dot = float(x[0]), float(x[1])
        torque_active = abs(float(u[0])) <= self.max_torque
        accel = (
            3.0 * self.g / (2.0 * self.l) * math.sin(theta)
            + 3.0 / (self.m * self.l**2) * min(max(float(u[0]), -self.max_torque), self.max_torque)
        )
        pre_dot = theta_dot + accel * self.dt
        speed_active = abs(pre_dot) <= self.max_speed
        d_dot_d_theta = 3.0 * self.g / (2.0 * self.l) * math.cos(theta) * self.dt if speed_active else 0.0
        d_dot_d_dot = 1.0 if speed_active else 0.0
        d_dot_d_u = (
            3.0 / (self.m * self.l**2) * self.dt if (speed_active and torque_active) else 0.0
        )
        Jx = np.array(
            [
                [1.0 + self.dt * d_dot_d_theta, self.dt * d_dot_d_dot],
                [d_dot_d_theta, d_dot_d_dot],
            ]
        )
        Ju = np.array([[self.dt * d_dot_d_u], [d_dot_d_u]])
        return Jx, Ju

    def step(self, x, u, w) -> Array:
        return self.f(x, u) + as_vector(w, 2)

    def linearization(self) -> tuple[Array, Array]:
        """(A, B) of the discrete map at the upright equilibrium."""
        return self.jacobians(np.zeros(2), np.zeros(1))


def random_lds(rng: RngStream, k: int, d: int, rho_target: float) -> LinearSystem:
    """Random system with i.i.d. normal entries, A rescaled to the target spectral radius."""
    if not 0.0 < rho_target < 1.0:
        raise ValueError(f"rho_target must lie in (0, 1), got {rho_target}")
    A = rng.standard_normal((k, k))
    rho = spectral_radius_estimate(A)
    if rho == 0.0:
        raise RuntimeError("drew a nilpotent A; cannot rescale to a positive spectral radius")
    A = A * (rho_target / rho)
    B = rng.standard_normal((k, d)) / math.sqrt(d)
    return LinearSystem(A, B)


class DisturbanceGenerator:
    """Base for w_t sources. Draws must be requested with increasing t."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("disturbance dim must be >= 1")
        self.dim = dim
        self._last_t: int | None = None

    @property
    def bound(self) -> float:
        """A computable bound W with ||w_t||_2 <= W for every emitted w_t."""
        raise NotImplementedError

    def generate(self, t: int) -> Array:
        if t < 0:
            raise ValueError(f"round index must be >= 0, got {t}")
        if self._last_t is not None and t <= self._last_t:
            raise ValueError(f"round index must increase across calls, got {t} after {self._last_t}")
        self._last_t = t
        return self._draw(t)

    def _draw(self, t: int) -> Array:
        raise NotImplementedError


class IidGaussianDisturbance(DisturbanceGenerator):
    """Zero-mean i.i.d. Gaussian noise, L2-capped so a finite bound W exists.

    The default cap of 10 std sqrt(dim) is far in the tail and does not
    measurably distort the sample statistics.
    """

    def __init__(self, dim: int, std: float, rng: RngStream, cap: float | None = None):
        super().__init__(dim)
        if std < 0:
            raise ValueError("std must be nonnegative")
        self.std = std
        self.rng = rng
        self.cap = 10.0 * std * math.sqrt(dim) if cap is None else cap

    @property
    def bound(self) -> float:
        return self.cap

    def _draw(self, t: int) -> Array:
        w = gaussian(self.rng, np.zeros(self.dim), self.std)
        n = float(np.linalg.norm(w))
        if self.cap > 0 and n > self.cap:
            w = w * (self.cap / n)
        return w


class RandomWalkDisturbance(DisturbanceGenerator):
    """Gaussian random walk clipped componentwise to [clip_lo, clip_hi]."""

    def __init__(self, dim: int, std: float, clip_lo: float, clip_hi: float, rng: RngStream):
        super().__init__(dim)
        if std < 0:
            raise ValueError("std must be nonnegative")
        if not clip_lo < clip_hi:
            raise ValueError(f"need clip_lo < clip_hi, got [{clip_lo}, {clip_hi}]")
        self.std = std
        self.clip_lo = clip_lo
        self.clip_hi = clip_hi
        self.rng = rng
        self.prev = np.zeros(dim)

    @property
    def bound(self) -> float:
        return max(abs(self.clip_lo), abs(self.clip_hi)) * math.sqrt(self.dim)

    def _draw(self, t: int) -> Array:
        w = np.clip(gaussian(self.rng, self.prev, self.std), self.clip_lo, self.clip_hi)
        self.prev = w
        return w


class SinusoidalDisturbance(DisturbanceGenerator):
    """Every coordinate equals sin(t) / (2 pi) at integer round index t."""

    @property
    def bound(self) -> float:
        return math.sqrt(self.dim) / (2.0 * math.pi)

    def _draw(self, t: int) -> Array:
        return np.full(self.dim, math.sin(t) / (2.0 * math.pi))


def infer_disturbance(system, x, u, x_next) -> Array:
    """Recover w from an observed transition: w = x_next - f(x, u)."""
    return as_vector(x_next, system.state_dim) - system.f(x, u)


def counterfactual_state(system, x_start, actions, disturbances) -> Array:
    """Fold f over aligned action/disturbance pairs starting from x_start."""
    if hasattr(actions, "view"):
        actions = actions.view()
    if hasattr(disturbances, "view"):
        disturbances = disturbances.view()
    acts = np.atleast_2d(np.asarray(actions, dtype=np.float64))
    dists = np.atleast_2d(np.asarray(disturbances, dtype=np.float64))
    if acts.size == 0 and dists.size == 0:
        return as_vector(x_start, system.state_dim).copy()
    if acts.shape[0] != dists.shape[0]:
        raise ValueError(
            f"misaligned windows: {acts.shape[0]} actions vs {dists.shape[0]} disturbances"
        )
    x = as_vector(x_start, system.state_dim)
    for u, w in zip(acts, dists):
        x = system.f(x, u) + as_vector(w, system.state_dim)
    return x


def disturbance_hash(w_sequence: Array) -> str:
    """Stable digest of a disturbance stream, for paired-comparison checks."""
    w = np.ascontiguousarray(np.asarray(w_sequence, dtype=np.float64))
    return hashlib.sha256(w.tobytes()).hexdigest()


@dataclass
class Trajectory:
    """Per-step record of one episode.

    Replaying (states[0], actions, disturbances) through the system must
    reproduce the recorded states.
    """

    states: Array  # (T+1, k)
    actions: Array  # (T, d)
    disturbances: Array  # (T, k)
    costs: Array  # (T,)
    algorithm: str = ""
    seed: int = 0
    w_hash: str = ""
    diverged: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        T = self.actions.shape[0]
        if self.states.shape[0] != T + 1 or self.disturbances.shape[0] != T or self.costs.shape[0] != T:
            raise ValueError("trajectory arrays have inconsistent lengths")

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    def total_cost(self) -> float:
        return float(np.sum(self.costs))

    def running_average(self) -> Array:
        return np.cumsum(self.costs) / np.arange(1, self.horizon + 1)

    def replay_error(self, system) -> float:
        """Max abs deviation when re-running the recorded actions and disturbances."""
        worst = 0.0
        x = self.states[0]
        for t in range(self.horizon):
            x = system.step(x, self.actions[t], self.disturbances[t])
            worst = max(worst, float(np.max(np.abs(x - self.states[t + 1]))))
            x = self.states[t + 1]
        return worst
