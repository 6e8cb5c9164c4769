"""Hybrid benchmark systems: the spring-mass hopper and the school-term SIR model.

Both simulators use classical fixed-step RK4 and record on a fixed grid. The
hopper switches on the state guard ``y = 1`` (located by bisection); the SIR
model switches transmission rate on calendar boundaries, which always fall on
integration-step boundaries.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

GUARD_TOL = 1e-10
BLOWUP = 1e6

FLIGHT = "flight"
COMPRESSION = "compression"
SESSION = "session"
BREAK = "break"


@dataclass(frozen=True)
class TrajectorySet:
    """Concatenated fixed-step trajectories with exact derivatives.

    ``boundaries`` holds the first row index of every trajectory. ``labels``
    is ground truth for evaluation only; identification code never reads it.
    """

    times: np.ndarray
    X: np.ndarray
    dX: np.ndarray
    boundaries: tuple[int, ...]
    labels: np.ndarray
    dt: float
    state_names: tuple[str, ...] = ()

    def __post_init__(self):
        m = len(self.times)
        if self.X.shape[0] != m or self.dX.shape[0] != m or len(self.labels) != m:
            raise ValueError("times, X, dX and labels must have the same number of rows")
        if self.X.shape != self.dX.shape:
            raise ValueError("X and dX must have the same shape")
        if not self.boundaries or self.boundaries[0] != 0:
            raise ValueError("boundaries must start at row 0")
        for arr in (self.times, self.X, self.dX, self.labels):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def n_trajectories(self) -> int:
        return len(self.boundaries)

    def trajectory_ids(self) -> np.ndarray:
        ids = np.zeros(self.m, dtype=int)
        for k, b in enumerate(self.boundaries[1:], start=1):
            ids[b:] = k
        return ids

    def trajectory_end(self, row: int) -> int:
        """One past the last row of the trajectory containing ``row``."""
        for b in self.boundaries:
            if b > row:
                return b
        return self.m

    def trajectory(self, k: int) -> slice:
        ends = list(self.boundaries[1:]) + [self.m]
        return slice(self.boundaries[k], ends[k])

    def select_states(self, columns: Sequence[int]) -> "TrajectorySet":
        columns = list(columns)
        names = tuple(self.state_names[c] for c in columns) if self.state_names else ()
        return replace(self, X=self.X[:, columns].copy(), dX=self.dX[:, columns].copy(),
                       state_names=names)


def concatenate(sets: Sequence[TrajectorySet]) -> TrajectorySet:
    if not sets:
        raise ValueError("nothing to concatenate")
    boundaries, offset = [], 0
    for s in sets:
        boundaries.extend(b + offset for b in s.boundaries)
        offset += s.m
    return TrajectorySet(
        times=np.concatenate([s.times for s in sets]),
        X=np.vstack([s.X for s in sets]),
        dX=np.vstack([s.dX for s in sets]),
        boundaries=tuple(boundaries),
        labels=np.concatenate([s.labels for s in sets]),
        dt=sets[0].dt,
        state_names=sets[0].state_names,
    )


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, x: np.ndarray, h: float):
    k1 = f(t, x)
    k2 = f(t + h / 2, x + h / 2 * k1)
    k3 = f(t + h / 2, x + h / 2 * k2)
    k4 = f(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_finite(x, t, system):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > BLOWUP:
        raise FloatingPointError(f"{system} state diverged at t={t:.6g}: {x}")


# -- hopper -----------------------------------------------------------------

@dataclass(frozen=True)
class Hopper:
    """Nondimensional spring-mass hopper.

    ``form="printed"`` uses compression dynamics ``y'' = 1 - kappa (y - 1)``;
    ``form="physical"`` uses ``y'' = -kappa (y - 1) - 1``, the form obtained by
    nondimensionalising the dimensional model with gravity acting downward in
    both charts.
    """

    kappa: float = 10.0
    form: str = "printed"

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.form not in ("printed", "physical"):
            raise ValueError(f"unknown hopper form {self.form!r}")

    @property
    def compression_offset(self) -> float:
        return 1.0 if self.form == "printed" else -1.0

    def rhs(self, chart: str) -> Callable[[float, np.ndarray], np.ndarray]:
        if chart == FLIGHT:
            return lambda t, x: np.array([x[1], -1.0])
        c, kappa = self.compression_offset, self.kappa
        return lambda t, x: np.array([x[1], c - kappa * (x[0] - 1.0)])

    def true_coefficients(self, library) -> dict[str, np.ndarray]:
        """Ground-truth coefficient matrices on ``library`` (states y, y')."""
        index = {e: l for l, e in enumerate(library.terms)}
        flight = np.zeros((library.p, 2))
        flight[index[(0, 1)], 0] = 1.0
        flight[index[(0, 0)], 1] = -1.0
        comp = np.zeros((library.p, 2))
        comp[index[(0, 1)], 0] = 1.0
        comp[index[(0, 0)], 1] = self.compression_offset + self.kappa
        comp[index[(1, 0)], 1] = -self.kappa
        return {FLIGHT: flight, COMPRESSION: comp}


def _hopper_advance(system: Hopper, t: float, x: np.ndarray, chart: str, h: float):
    """Advance one RK4 step, splitting it at every guard crossing."""
    events = []
    remaining = h
    while remaining > 0:
        f = system.rhs(chart)
        x_new = rk4_step(f, t, x, remaining)
        crossed = x_new[0] > 1.0 if chart == COMPRESSION else x_new[0] < 1.0
        if not crossed:
            return t + remaining, x_new, chart, events
        lo, hi = 0.0, remaining
        x_event = x_new
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            x_mid = rk4_step(f, t, x, mid)
            g = x_mid[0] - 1.0
            mid_crossed = g > 0 if chart == COMPRESSION else g < 0
            if mid_crossed:
                hi, x_event = mid, x_mid
            else:
                lo = mid
                x_event = x_mid
            # bisect to round-off: the event time error feeds straight into the
            # velocity jump, so stopping at GUARD_TOL costs ~1e-9 downstream
            if g == 0 or hi - lo <= 1e-15 * max(1.0, t):
                break
        if abs(x_event[0] - 1.0) > GUARD_TOL:
            raise FloatingPointError(f"failed to localise guard crossing near t={t:.6g}")
        s = mid
        t, x = t + s, x_event
        remaining -= s
        chart = FLIGHT if chart == COMPRESSION else COMPRESSION
        events.append((t, x.copy()))
    return t, x, chart, events


def simulate_hopper(initial_state, kappa: float = 10.0, dt: float = 0.033, t_end: float = 5.0,
                    substeps: int = 10, form: str = "printed", return_events: bool = False):
    """Simulate the hopper on the grid ``0, dt, 2 dt, ... <= t_end``.

    Each recording interval is split into ``substeps`` RK4 steps. Returns a
    single-trajectory TrajectorySet (and the event list if requested).
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    system = Hopper(kappa, form)
    n_samples = int(math.floor(t_end / dt + 1e-9)) + 1
    h = dt / substeps
    x = np.asarray(initial_state, dtype=float).copy()
    chart = FLIGHT if x[0] > 1.0 else COMPRESSION
    X = np.empty((n_samples, 2))
    dX = np.empty((n_samples, 2))
    labels = np.empty(n_samples, dtype=object)
    events = []
    t = 0.0
    for i in range(n_samples):
        if i > 0:
            for s in range(substeps):
                t_target = (i - 1) * dt + (s + 1) * h
                _, x, chart, ev = _hopper_advance(system, t, x, chart, t_target - t)
                t = t_target
                events.extend(ev)
            _check_finite(x, t, "hopper")
        X[i] = x
        dX[i] = system.rhs(chart)(t, x)
        labels[i] = chart
    out = TrajectorySet(
        times=np.arange(n_samples) * dt, X=X, dX=dX, boundaries=(0,),
        labels=labels.astype(str), dt=dt, state_names=("y", "v"),
    )
    return (out, events) if return_events else out


# -- SIR --------------------------------------------------------------------

@dataclass(frozen=True)
class SirCalendar:
    """Annual school calendar as ``(start_day, end_day, in_session)`` rows."""

    sessions: tuple[tuple[float, float, bool], ...] = (
        (0, 35, False), (35, 155, True), (155, 225, False), (225, 365, True),
    )
    period: float = 365.0

    def __post_init__(self):
        if not self.sessions:
            raise ValueError("calendar needs at least one session")
        if self.sessions[0][0] != 0 or self.sessions[-1][1] != self.period:
            raise ValueError("sessions must cover [0, period)")
        for (a0, a1, _), (b0, _, _) in zip(self.sessions, self.sessions[1:]):
            if a1 != b0:
                raise ValueError(f"sessions must be contiguous, gap or overlap at day {a1}")
        for a0, a1, _ in self.sessions:
            if not a1 > a0:
                raise ValueError("sessions must have positive length")

    def in_session(self, t: float) -> bool:
        day = t % self.period
        for start, end, flag in self.sessions:
            if start <= day < end:
                return bool(flag)
        return bool(self.sessions[-1][2])

    def session_starts(self) -> list[float]:
        return [s[0] for s in self.sessions]

    def is_session_start(self, t: float) -> bool:
        return any(math.isclose(t % self.period, s, abs_tol=1e-9) for s in self.session_starts())


@dataclass(frozen=True)
class SirParams:
    nu: float = 1 / 365
    d: float = 1 / 365
    N: float = 1000.0
    gamma: float = 1 / 5
    beta_hat: float = 9.336
    b: float = 0.8
    calendar: SirCalendar = field(default_factory=SirCalendar)

    def true_coefficients(self, library, in_session: bool) -> np.ndarray:
        """Ground-truth (S', I') coefficients on a library over (S, I)."""
        index = {e: l for l, e in enumerate(library.terms)}
        beta = self.beta_hat * (1 + self.b) if in_session else self.beta_hat / (1 + self.b)
        xi = np.zeros((library.p, 2))
        xi[index[(0, 0)], 0] = self.nu * self.N
        xi[index[(1, 0)], 0] = -self.d
        xi[index[(1, 1)], 0] = -beta / self.N
        xi[index[(1, 1)], 1] = beta / self.N
        xi[index[(0, 1)], 1] = -(self.gamma + self.d)
        return xi


def beta_of_t(t: float, beta_hat: float, b: float, calendar: SirCalendar | None = None) -> float:
    """Transmission rate: ``beta_hat (1 + b)`` in session, ``beta_hat / (1 + b)`` otherwise."""
    if calendar is None:
        calendar = SirCalendar()
    return beta_hat * (1 + b) if calendar.in_session(t) else beta_hat / (1 + b)


def sir_rhs(x: np.ndarray, beta: float, p: SirParams) -> np.ndarray:
    S, I, R = x
    infection = beta / p.N * I * S
    return np.array([
        p.nu * p.N - infection - p.d * S,
        infection - (p.gamma + p.d) * I,
        p.gamma * I - p.d * R,
    ])


def simulate_sir(initial_state, params: SirParams | None = None, years: int = 5,
                 seed: int | None = 0, perturb: bool = True, substeps: int = 10,
                 record_dt: float = 1.0) -> TrajectorySet:
    """Simulate the school-term SIR model, recording every ``record_dt`` days.

    At every session start after t = 0, S, I and R are independently shifted
    by a uniform draw from {-2, -1, 0, 1, 2} (when ``perturb``). Negative
    populations after a shift are clamped to zero.
    """
    p = params or SirParams()
    x = np.asarray(initial_state, dtype=float).copy()
    if x.shape != (3,):
        raise ValueError("SIR initial state must be (S, I, R)")
    if not math.isclose(x.sum(), p.N, rel_tol=1e-9):
        raise ValueError(f"S + I + R = {x.sum()} must equal N = {p.N}")
    if years < 1:
        raise ValueError("years must be >= 1")
    steps_per_record = int(round(record_dt * substeps))
    n_samples = int(round(years * p.calendar.period / record_dt))
    h = record_dt / substeps
    rng = np.random.default_rng(seed)
    X = np.empty((n_samples, 3))
    dX = np.empty((n_samples, 3))
    labels = np.empty(n_samples, dtype=object)
    t = 0.0
    for i in range(n_samples):
        t_rec = i * record_dt
        if i > 0:
            for s in range(steps_per_record):
                t0 = t_rec - record_dt + s * h
                beta = beta_of_t(t0, p.beta_hat, p.b, p.calendar)
                x = rk4_step(lambda tt, xx: sir_rhs(xx, beta, p), t0, x, h)
            _check_finite(x, t_rec, "SIR")
            if perturb and p.calendar.is_session_start(t_rec):
                x = x + rng.integers(-2, 3, size=3)
                if np.any(x < 0):
                    logger.warning("negative population %s at day %g clamped to 0", x, t_rec)
                    x = np.maximum(x, 0.0)
        beta = beta_of_t(t_rec, p.beta_hat, p.b, p.calendar)
        X[i] = x
        dX[i] = sir_rhs(x, beta, p)
        labels[i] = SESSION if p.calendar.in_session(t_rec) else BREAK
    return TrajectorySet(
        times=np.arange(n_samples) * record_dt, X=X, dX=dX, boundaries=(0,),
        labels=labels.astype(str), dt=record_dt, state_names=("S", "I", "R"),
    )


# -- measurement noise --------------------------------------------------------

def add_noise(data: TrajectorySet, eps: float, seed: int = 0) -> TrajectorySet:
    """Add i.i.d. N(0, eps^2) noise to the states; derivatives stay exact.

    Each trajectory draws from its own child of ``SeedSequence(seed)``, so the
    result does not depend on the order trajectories are processed.
    """
    if eps < 0:
        raise ValueError("noise level must be non-negative")
    if eps == 0:
        return data
    children = np.random.SeedSequence(seed).spawn(data.n_trajectories)
    X = data.X.copy()
    for k, child in enumerate(children):
        rows = data.trajectory(k)
        rng = np.random.default_rng(child)
        X[rows] += eps * rng.standard_normal(X[rows].shape)
    return replace(data, X=X)
