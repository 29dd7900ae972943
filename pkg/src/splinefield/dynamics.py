"""Autonomous dynamical system tracking a spline through its distance field.

The velocity field blends attraction down the distance gradient with motion
along the curve at the projected point; an inverse barrier on the distance
trades the two off, so far states are pulled in and near states flow along
the trajectory.  Energy (half the squared distance) never increases along
continuous solutions, which is what makes the system stable.
"""

from __future__ import annotations

import warnings
import weakref
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import DivergenceError, DomainError, IntegrationError
from .field import FieldQuery, UnionField, query, union_query
from .spline import QuadraticSpline

# Guard: a state this many scales away from the field aborts the rollout.
DIVERGENCE_FACTOR = 1e3
_warned_fields: "weakref.WeakSet" = weakref.WeakSet()


@dataclass
class DynamicsConfig:
    """Gains and integrator settings.

    step_size, convergence_distance, and convergence_speed default to
    0.01 * scale, 1e-3 * scale, and 1e-3 * scale of the field they run
    against (resolved at rollout time when left as None).
    """

    lam: float = 1.0
    step_size: float | None = None
    integrator: str = "euler"
    max_steps: int = 10_000
    convergence_distance: float | None = None
    convergence_speed: float | None = None
    attraction_only: bool = False
    speed_cap: float | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"lambda must be > 0, got {self.lam}")
        if self.step_size is not None and not self.step_size > 0:
            raise DomainError(f"step_size must be > 0, got {self.step_size}")
        if self.integrator not in ("euler", "rk4"):
            raise DomainError(f"integrator must be 'euler' or 'rk4', got {self.integrator!r}")
        if self.max_steps < 1:
            raise DomainError(f"max_steps must be >= 1, got {self.max_steps}")

    def resolved(self, scale: float) -> "DynamicsConfig":
        """Fill scale-relative defaults against a concrete field."""
        return DynamicsConfig(
            lam=self.lam,
            step_size=self.step_size if self.step_size is not None else 0.01 * scale,
            integrator=self.integrator,
            max_steps=self.max_steps,
            convergence_distance=(
                self.convergence_distance
                if self.convergence_distance is not None
                else 1e-3 * scale
            ),
            convergence_speed=(
                self.convergence_speed if self.convergence_speed is not None else 1e-3 * scale
            ),
            attraction_only=self.attraction_only,
            speed_cap=self.speed_cap,
        )


@dataclass
class RolloutTrace:
    """State history of one rollout."""

    states: np.ndarray
    distances: np.ndarray
    lyapunov: np.ndarray
    phases: np.ndarray
    converged: bool
    steps_taken: int
    perturbations: dict = dataclass_field(default_factory=dict)


def gains(distance: float, lam: float) -> tuple[float, float]:
    """Inverse-barrier blend: beta = 1/(1 + lam*d), alpha = 1 - beta.

    Always a convex pair: alpha + beta == 1, both in [0, 1].  On the curve
    the motion is purely tangential; far away it is purely attractive.
    """
    if distance < 0:
        raise DomainError(f"distance must be >= 0, got {distance}")
    beta = 1.0 / (1.0 + lam * distance)
    return 1.0 - beta, beta


def _query_any(field, x, backend=None):
    if isinstance(field, UnionField):
        q, idx = union_query(field, x, backend)
        return q, field.members[idx]
    return query(field, x, backend), field


def _warn_if_free_endpoint(member: QuadraticSpline) -> None:
    if member.terminal_zero_velocity or member in _warned_fields:
        return
    _warned_fields.add(member)
    warnings.warn(
        "spline endpoint has non-zero velocity; the trajectory end is not an "
        "equilibrium of the dynamical system (fit with terminal_zero_velocity=True)",
        RuntimeWarning,
        stacklevel=3,
    )


def velocity(field, x, lam: float, attraction_only: bool = False, speed_cap: float | None = None) -> np.ndarray:
    """Blended velocity at x: attraction down the gradient plus curve following.

    attraction_only drops the tangential term while keeping the
    barrier-modulated attraction gain (used to probe the energy argument).
    """
    x = np.asarray(x, dtype=float)
    q, member = _query_any(field, x)
    _warn_if_free_endpoint(member)
    alpha, beta = gains(q.distance, lam)
    v = -alpha * q.gradient
    if not attraction_only:
        v = v + beta * member.derivative(q.segment_index + q.t_local)
    if speed_cap is not None:
        speed = float(np.linalg.norm(v))
        if speed > speed_cap > 0:
            v = v * (speed_cap / speed)
    return v


def step(field, x, config: DynamicsConfig) -> np.ndarray:
    """One deterministic integration step (euler or classical rk4)."""
    cfg = config if config.step_size is not None else config.resolved(_scale_of(field))
    h = cfg.step_size

    def f(state):
        return velocity(field, state, cfg.lam, cfg.attraction_only, cfg.speed_cap)

    x = np.asarray(x, dtype=float)
    if cfg.integrator == "euler":
        x_next = x + h * f(x)
    else:
        k1 = f(x)
        k2 = f(x + 0.5 * h * k1)
        k3 = f(x + 0.5 * h * k2)
        k4 = f(x + h * k3)
        x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise IntegrationError(f"non-finite state after step from {x}")
    return x_next


def lyapunov_value(field, x) -> float:
    """Energy of the state: half the squared distance to the curve."""
    q, _ = _query_any(field, x)
    return 0.5 * q.distance * q.distance


def _scale_of(field) -> float:
    return field.scale


class RolloutSession:
    """Stepwise rollout with mid-flight perturbation, used by the service.

    Records the state BEFORE each step; `advance` applies any pending
    perturbation, then integrates one step.
    """

    def __init__(self, field, x0, config: DynamicsConfig):
        self.field = field
        self.config = config.resolved(_scale_of(field))
        self.x = np.array(x0, dtype=float)
        if self.x.ndim != 1 or self.x.shape[0] != field.dim:
            raise DomainError(f"start state must be a {field.dim}-vector")
        if not np.all(np.isfinite(self.x)):
            raise DomainError("start state must be finite")
        self.steps_taken = 0
        self.converged = False

    def measure(self) -> tuple[FieldQuery, np.ndarray]:
        """Query and velocity at the current state, without stepping."""
        q, member = _query_any(self.field, self.x)
        alpha, beta = gains(q.distance, self.config.lam)
        v = -alpha * q.gradient
        if not self.config.attraction_only:
            v = v + beta * member.derivative(q.segment_index + q.t_local)
        if self.config.speed_cap is not None:
            speed = float(np.linalg.norm(v))
            if speed > self.config.speed_cap > 0:
                v = v * (self.config.speed_cap / speed)
        return q, v

    def perturb(self, delta) -> np.ndarray:
        """Displace the state between steps; the rollout continues from there."""
        delta = np.asarray(delta, dtype=float)
        if not np.all(np.isfinite(delta)):
            raise DomainError("perturbation must be finite")
        self.x = self.x + delta
        return self.x

    def advance(self) -> None:
        self.x = step(self.field, self.x, self.config)
        self.steps_taken += 1


def rollout(field, x0, config: DynamicsConfig, perturbations: dict | None = None) -> RolloutTrace:
    """Integrate until convergence (small distance AND small speed) or max_steps.

    perturbations maps step index -> delta, applied to the state just before
    that step is taken.  Trace entry k is the (possibly perturbed) state
    before step k, so entry 0 is the start and the last entry is the final
    state.  A state drifting beyond DIVERGENCE_FACTOR * scale aborts with
    the partial trace attached.
    """
    scale = _scale_of(field)
    cfg = config.resolved(scale)
    session = RolloutSession(field, x0, cfg)
    if isinstance(field, UnionField):
        for m in field.members:
            _warn_if_free_endpoint(m)
    else:
        _warn_if_free_endpoint(field)
    perturbations = perturbations or {}

    states: list[np.ndarray] = []
    distances: list[float] = []
    phases: list[float] = []
    converged = False
    for k in range(cfg.max_steps + 1):
        if k in perturbations:
            session.perturb(perturbations[k])
        q, v = session.measure()
        states.append(session.x.copy())
        distances.append(q.distance)
        phases.append(q.phase)
        if q.distance > DIVERGENCE_FACTOR * max(scale, 1e-300):
            raise DivergenceError(
                f"state {session.x} reached distance {q.distance:.3g} "
                f"(> {DIVERGENCE_FACTOR:g} * scale); step size too large?",
                trace=_build_trace(states, distances, phases, False, session, perturbations),
            )
        speed = float(np.linalg.norm(v))
        if q.distance < cfg.convergence_distance and speed < cfg.convergence_speed:
            converged = True
            break
        if k == cfg.max_steps:
            break
        session.advance()
    return _build_trace(states, distances, phases, converged, session, perturbations)


def _build_trace(states, distances, phases, converged, session, perturbations) -> RolloutTrace:
    distances = np.asarray(distances)
    return RolloutTrace(
        states=np.asarray(states),
        distances=distances,
        lyapunov=distances**2 / 2.0,
        phases=np.asarray(phases),
        converged=converged,
        steps_taken=session.steps_taken,
        perturbations=dict(perturbations),
    )


def perturb(session: RolloutSession, delta) -> np.ndarray:
    """Apply a displacement to a rollout in progress (see RolloutSession.perturb)."""
    return session.perturb(delta)
