"""Resonantly driven, damped two-level system: transport and thermodynamics.

The state is the pair (<s_z>, <s_+>), with <s_-> the conjugate of <s_+> and
s_z carrying levels +-1/2.  On resonance (drive frequency equal to the
level splitting) the second-order transport equations read

    d<s_z>/dt = 2 Omega Im<s_+> - 2 Re f(t, beta) <s_z> - Re f(t)
    d<s_+>/dt = -2i Omega <s_z> - f(t, beta) <s_+>

with the bath kernels of :mod:`releq.bath`.  The maximum-entropy state for
a Bloch vector of half-length X = sqrt(|<s_+>|**2 + <s_z>**2) < 1/2 gives
multipliers through R(X) = arctanh(2X)/X and the entropy in closed form;
X = 1/2 marks pure states where the multipliers diverge.

The free-evolution operator coefficients for a general detuned drive are
also provided for propagator checks.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bath import REGIMES, BathParams, kernel_pair
from .odeint import OdeProblem, integrate
from .oscillator import InvariantViolationError
from .specfun import arctanh_ratio

__all__ = [
    "REGIMES",
    "BoundaryStateError",
    "BoundaryStateWarning",
    "ResonanceError",
    "ValidityWarning",
    "TlsState",
    "TlsParams",
    "TlsMultipliers",
    "TlsRun",
    "rhs",
    "multipliers",
    "entropy",
    "inverse_temperature",
    "evolution_coeffs",
    "simulate",
]

_BOUNDARY_TOL = 1e-12


class BoundaryStateError(ValueError):
    """Pure state: the Bloch vector sits on the boundary, multipliers diverge."""


class BoundaryStateWarning(UserWarning):
    """Limit value returned for a state at the Bloch-ball boundary."""


class ResonanceError(ValueError):
    """The transport equations hold only for a resonant drive."""


class ValidityWarning(UserWarning):
    """Parameters outside the weak-drive window the equations assume."""


@dataclass(frozen=True)
class TlsState:
    """Population imbalance <s_z> and coherence <s_+>."""

    mean_sz: float
    mean_sp: complex

    def __post_init__(self):
        if not math.isfinite(self.mean_sz):
            raise ValueError(f"mean_sz must be finite, got {self.mean_sz}")

    @property
    def bloch_radius(self) -> float:
        """Half-length X of the Bloch vector; X <= 1/2, pure states at 1/2."""
        return math.hypot(abs(self.mean_sp), self.mean_sz)


@dataclass(frozen=True)
class TlsParams:
    """Level splitting, drive frequency, drive amplitude, and bath."""

    omega0: float
    omegaL: float
    Omega: float
    bath: BathParams

    def __post_init__(self):
        for name in ("omega0", "omegaL", "Omega"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.omega0 <= 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.Omega > 0.5 * self.omega0:
            warnings.warn(
                f"drive amplitude {self.Omega} exceeds half the level splitting "
                f"{self.omega0}; the transport equations assume a weak drive",
                ValidityWarning,
                stacklevel=2,
            )

    @property
    def detuning(self) -> float:
        return self.omegaL - self.omega0

    def require_resonance(self):
        if abs(self.detuning) > 1e-12 * self.omega0:
            raise ResonanceError(
                f"transport equations require omegaL == omega0, got detuning "
                f"{self.detuning:.3e}"
            )


@dataclass(frozen=True)
class TlsMultipliers:
    """Multipliers conjugate to (s_+, s_z, s_-) plus the ratio R used."""

    F1: complex
    F2: float
    F3: complex
    R: float


def rhs(t: float, state: TlsState, params: TlsParams, regime: str = "non_markovian"):
    """Time derivatives (d<s_z>/dt, d<s_+>/dt); the first is real exactly."""
    params.require_resonance()
    f, f_beta = kernel_pair(t, params.bath, regime)
    d_sz = 2.0 * params.Omega * state.mean_sp.imag - 2.0 * f_beta.real * state.mean_sz - f.real
    d_sp = -2j * params.Omega * state.mean_sz - f_beta * state.mean_sp
    return d_sz, d_sp


def multipliers(state: TlsState) -> TlsMultipliers:
    """Multipliers of the maximum-entropy state matching ``state``."""
    x = state.bloch_radius
    if x >= 0.5 - _BOUNDARY_TOL:
        raise BoundaryStateError(
            f"Bloch radius X = {x!r} at the pure-state boundary; multipliers diverge"
        )
    ratio = arctanh_ratio(x)
    f1 = -state.mean_sp.conjugate() * ratio
    return TlsMultipliers(
        F1=f1,
        F2=-2.0 * state.mean_sz * ratio,
        F3=f1.conjugate(),
        R=ratio,
    )


def entropy(state: TlsState) -> float:
    """Entropy -2 X**2 R + ln 2 - ln(1 - 4 X**2) / 2 of the state.

    Identical to the binary entropy of the level populations 1/2 +- X.
    States at the boundary return the pure-state limit 0 with a warning.
    """
    x = state.bloch_radius
    if x >= 0.5 - _BOUNDARY_TOL:
        warnings.warn(
            f"Bloch radius X = {x!r}; returning the pure-state entropy 0",
            BoundaryStateWarning,
            stacklevel=2,
        )
        return 0.0
    ratio = arctanh_ratio(x)
    return -2.0 * x * x * ratio + math.log(2.0) - 0.5 * math.log1p(-4.0 * x * x)


def inverse_temperature(state: TlsState, omega0: float) -> float:
    """Effective inverse temperature F2 / omega0 of the state."""
    return multipliers(state).F2 / omega0


def evolution_coeffs(t: float, t_prime: float, params: TlsParams):
    """Coefficients (c, d, k) of the free evolution operator.

    k = sqrt(Omega**2 + detuning**2) is the generalized drive frequency; c
    and d are the diagonal and off-diagonal amplitudes over [t_prime, t].
    At k = 0 the rotation degenerates to the bare phase, handled in closed
    form.  Unitarity fixes |c|**2 + |d|**2 = 1.
    """
    tau = t - t_prime
    k = math.hypot(params.Omega, params.detuning)
    if k == 0.0:
        return cmath.exp(-0.5j * tau * params.omegaL), 0j, k
    c = cmath.exp(-0.5j * tau * params.omegaL) * (
        math.cos(0.5 * k * tau) + 1j * params.detuning / k * math.sin(0.5 * k * tau)
    )
    d = (
        params.Omega
        / (1j * k)
        * cmath.exp(0.5j * (t + t_prime) * params.omegaL)
        * math.sin(0.5 * k * tau)
    )
    return c, d, k


@dataclass(frozen=True)
class TlsRun:
    """Sampled trajectory with the derived thermodynamic series."""

    times: np.ndarray
    mean_sz: np.ndarray
    mean_sp: np.ndarray
    entropy: np.ndarray
    beta: np.ndarray


def simulate(
    initial: TlsState,
    params: TlsParams,
    regime: str,
    t_max: float,
    dt_out: float = 0.01,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-12,
) -> TlsRun:
    """Integrate the transport equations and derive entropy and temperature.

    Trajectories must stay inside the Bloch ball (X <= 1/2 within 1e-9);
    leaving it aborts with the time and radius at fault.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    if t_max <= 0 or dt_out <= 0:
        raise ValueError("t_max and dt_out must be positive")
    params.require_resonance()

    def vector_rhs(t, y):
        state = TlsState(mean_sz=float(y[0].real), mean_sp=complex(y[1]))
        d_sz, d_sp = rhs(t, state, params, regime)
        return np.array([d_sz, d_sp], dtype=complex)

    n_samples = int(math.floor(t_max / dt_out + 1e-9))
    times = np.arange(n_samples + 1) * dt_out
    problem = OdeProblem(
        dimension=2,
        rhs=vector_rhs,
        t_span=(0.0, float(times[-1])),
        y0=np.array([initial.mean_sz, initial.mean_sp], dtype=complex),
        rel_tol=rel_tol,
        abs_tol=abs_tol,
        max_step=0.01 / params.omega0,
    )
    trajectory = integrate(problem, times)

    mean_sz = trajectory.states[:, 0].real
    mean_sp = trajectory.states[:, 1]
    radius = np.hypot(np.abs(mean_sp), mean_sz)
    if np.any(radius > 0.5 + 1e-9):
        bad = int(np.argmax(radius > 0.5 + 1e-9))
        raise InvariantViolationError(
            f"Bloch radius X = {radius[bad]!r} > 1/2 at t = {times[bad]:.6g}; "
            "the trajectory left the Bloch ball"
        )

    entropy_series = np.empty(times.size)
    beta_series = np.empty(times.size)
    for k in range(times.size):
        state = TlsState(mean_sz=float(mean_sz[k]), mean_sp=complex(mean_sp[k]))
        entropy_series[k] = entropy(state)
        beta_series[k] = inverse_temperature(state, params.omega0)
    return TlsRun(
        times=times,
        mean_sz=mean_sz,
        mean_sp=mean_sp,
        entropy=entropy_series,
        beta=beta_series,
    )
