"""The dissipative kicked "typical map" and its dynamical diagnostics.

One map period applies T kicks with fixed phases theta_1..theta_T:

    y' = eta * y + k * sin(x + theta_t)
    x' = (x + y') mod 2*pi

x lives on [0, 2*pi) and is wrapped every step; y is left unwrapped during
a period and reduced into [-pi, pi) only at period boundaries. Two built-in
phase sets are provided (T10 and T20), together with the per-period
dissipation rate gamma_c = -T*ln(eta) and contraction factor Gamma_c = eta^T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels

TWO_PI = 2.0 * math.pi

_THETA_OVER_2PI_T10 = (
    0.562579, 0.279666, 0.864585, 0.654365, 0.821395,
    0.981145, 0.478149, 0.834115, 0.180307, 0.15902,
)

_THETA_OVER_2PI_T20 = (
    0.415733267627, 0.310795551489, 0.632094907846, 0.749488203411,
    0.924301928270, 0.635937571045, 0.118768635110, 0.647524548037,
    0.651928927275, 0.952312529146, 0.370553510280, 0.810837257644,
    0.814808044380, 0.834758628241, 0.993694010264, 0.702057578688,
    0.828693568678, 0.855421638697, 0.278538720979, 0.653773338142,
)


class MapState(NamedTuple):
    """A phase-space point: x in [0, 2*pi), y unwrapped mid-period."""

    x: float
    y: float


@dataclass(frozen=True)
class PhaseSet:
    """Map parameters: period T, kick phases (radians), strength k, dissipation eta."""

    T: int
    theta: tuple[float, ...]
    k: float
    eta: float

    def __post_init__(self) -> None:
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
        if len(self.theta) != self.T:
            raise ValueError(f"expected {self.T} phases, got {len(self.theta)}")
        for t in self.theta:
            if not 0.0 <= t < TWO_PI:
                raise ValueError(f"phase {t} outside [0, 2*pi)")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")
        if self.k < 0.0:
            raise ValueError(f"k must be >= 0, got {self.k}")

    @property
    def gamma_c(self) -> float:
        """Per-period dissipation rate -T*ln(eta)."""
        return -self.T * math.log(self.eta)

    @property
    def Gamma_c(self) -> float:
        """Per-period phase-space contraction eta^T."""
        return self.eta ** self.T

    def with_params(self, k: float | None = None, eta: float | None = None) -> "PhaseSet":
        """Same phases with k and/or eta overridden."""
        changes = {}
        if k is not None:
            changes["k"] = k
        if eta is not None:
            changes["eta"] = eta
        return replace(self, **changes) if changes else self

    @property
    def theta_array(self) -> np.ndarray:
        return np.array(self.theta, dtype=np.float64)


def phase_set_t10(k: float = 0.22, eta: float = 0.99) -> PhaseSet:
    """The built-in 10-phase set."""
    return PhaseSet(T=10, theta=tuple(TWO_PI * v for v in _THETA_OVER_2PI_T10), k=k, eta=eta)


def phase_set_t20(k: float = 0.3, eta: float = 0.97) -> PhaseSet:
    """The built-in 20-phase set."""
    return PhaseSet(T=20, theta=tuple(TWO_PI * v for v in _THETA_OVER_2PI_T20), k=k, eta=eta)


def wrap_x(x: float) -> float:
    x = x % TWO_PI
    if x == TWO_PI:  # floor-mod can round up to the divisor itself
        x = 0.0
    return x


def wrap_y(y: float) -> float:
    if -math.pi <= y < math.pi:  # keep in-range values bit-exact
        return y
    y = (y + math.pi) % TWO_PI - math.pi
    if y == math.pi:
        y = -math.pi
    return y


def step(state: MapState, theta_t: float, k: float, eta: float) -> MapState:
    """One kick: y is not wrapped here, only x."""
    y = eta * state.y + k * math.sin(state.x + theta_t)
    x = wrap_x(state.x + y)
    return MapState(x, y)


def iterate_period(state: MapState, ps: PhaseSet) -> MapState:
    """Apply all T kicks in order, then reduce y into [-pi, pi)."""
    for theta_t in ps.theta:
        state = step(state, theta_t, ps.k, ps.eta)
    return MapState(state.x, wrap_y(state.y))


def ks_entropy_theory(k: float) -> float:
    """Chirikov's estimate 0.29 * k^(2/3) for the entropy per iteration."""
    if k < 0.0:
        raise ValueError(f"k must be >= 0, got {k}")
    return 0.29 * k ** (2.0 / 3.0)


def dimension_estimate(gamma_c: float, T: int, h: float) -> float:
    """Attractor dimension 2 - gamma_c / (T*h)."""
    if h <= 0.0:
        raise ValueError(f"entropy must be positive, got {h}")
    return 2.0 - gamma_c / (T * h)


@dataclass(frozen=True)
class LyapunovResult:
    h: float
    h_theory: float
    d_estimate: float
    n_iterations: int
    n_transient: int
    converged: bool
    drift: float


def lyapunov_entropy(
    ps: PhaseSet,
    n_iterations: int = 10_000_000,
    n_transient: int | None = None,
    seed: int = 0,
    drift_tol: float = 1e-3,
) -> LyapunovResult:
    """Largest Lyapunov exponent per iteration via the tangent map.

    The tangent vector is renormalized every T steps; counts are in map
    iterations (steps), not periods. n_transient defaults to 1000 periods.
    Convergence is judged by the drift of the running estimate over the
    last 10% of iterations; a drift beyond drift_tol only clears the
    converged flag, it does not raise.
    """
    if n_transient is None:
        n_transient = 1000 * ps.T
    if n_iterations <= n_transient:
        raise ValueError("n_iterations must exceed n_transient")

    rng = np.random.default_rng(seed)
    x0 = rng.uniform(0.0, TWO_PI)
    y0 = rng.uniform(-math.pi, math.pi)

    n_periods = n_iterations // ps.T
    n_transient_periods = n_transient // ps.T
    log_sum, log_sum_mark, mark = _kernels.lyapunov_sums(
        ps.theta_array, ps.k, ps.eta, n_periods, n_transient_periods, x0, y0
    )
    h = log_sum / (n_periods * ps.T)
    if mark > 0:
        drift = abs(h - log_sum_mark / (mark * ps.T))
    else:
        drift = math.inf
    h_theory = ks_entropy_theory(ps.k)
    d = dimension_estimate(ps.gamma_c, ps.T, h) if h > 0.0 else math.nan
    return LyapunovResult(
        h=h,
        h_theory=h_theory,
        d_estimate=d,
        n_iterations=n_periods * ps.T,
        n_transient=n_transient_periods * ps.T,
        converged=drift <= drift_tol,
        drift=drift,
    )


@dataclass(frozen=True)
class BifurcationWindow:
    label: str
    start: int  # record periods p with start < p <= stop
    stop: int
    n_traj: int


@dataclass(frozen=True)
class BifurcationSample:
    k: float
    y_values: np.ndarray  # shape (n_traj, stop - start)
    window: BifurcationWindow


def bifurcation_scan(
    ps_template: PhaseSet,
    k_values: Sequence[float],
    n_traj: int = 10,
    early_window: tuple[int, int] = (100, 110),
    late_window: tuple[int, int] = (10_000, 10_100),
    seed: int = 0,
) -> list[BifurcationSample]:
    """Attractor y-values per k, recorded at period boundaries in two windows.

    Each k launches n_traj trajectories from seeded uniform-random positions;
    windows are half-open period ranges (start, stop].
    """
    for name, (a, b) in (("early_window", early_window), ("late_window", late_window)):
        if not 0 <= a < b:
            raise ValueError(f"{name} must satisfy 0 <= start < stop, got {(a, b)}")
    rng = np.random.default_rng(seed)
    samples: list[BifurcationSample] = []
    for k in k_values:
        ps = ps_template.with_params(k=float(k))
        x0s = rng.uniform(0.0, TWO_PI, size=n_traj)
        y0s = rng.uniform(-math.pi, math.pi, size=n_traj)
        for label, (a, b) in (("early", early_window), ("late", late_window)):
            ys = _kernels.record_window_y(x0s, y0s, ps.theta_array, ps.k, ps.eta, a, b)
            samples.append(
                BifurcationSample(
                    k=ps.k,
                    y_values=ys,
                    window=BifurcationWindow(label=label, start=a, stop=b, n_traj=n_traj),
                )
            )
    return samples


def save_phase_set(ps: PhaseSet, path: str) -> None:
    """Plain-text config: T=, k=, eta=, then one theta_over_2pi= line per phase."""
    lines = [f"T={ps.T}", f"k={ps.k!r}", f"eta={ps.eta!r}"]
    lines += [f"theta_over_2pi={t / TWO_PI!r}" for t in ps.theta]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_phase_set(path: str) -> PhaseSet:
    T = None
    k = None
    eta = None
    over: list[float] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key = key.strip()
            value = value.strip()
            try:
                if key == "T":
                    T = int(value)
                elif key == "k":
                    k = float(value)
                elif key == "eta":
                    eta = float(value)
                elif key == "theta_over_2pi":
                    over.append(float(value))
                else:
                    raise ValueError(f"unknown key {key!r}")
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if T is None or k is None or eta is None:
        raise ValueError(f"{path}: missing one of T=, k=, eta=")
    return PhaseSet(T=T, theta=tuple(TWO_PI * v for v in over), k=k, eta=eta)
