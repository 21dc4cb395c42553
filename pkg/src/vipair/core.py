"""Exact nondimensional dynamics of a harmonically forced vibro-impact pair.

A ball moves freely inside a forced capsule and impacts the capsule ends
instantaneously with restitution r.  In relative coordinates the state between
impacts follows

    Zdd = A*cos(pi*t + psi) + gbar,      -d/2 <= Z <= d/2,

with closed-form quadrature between impacts.  The bottom wall is at
Z = +d/2 (side "B", hit with Zdot > 0), the top wall at Z = -d/2
(side "T", hit with Zdot < 0).  Impact-to-impact propagation has no closed
form, so `next_impact` locates wall crossings numerically: march with a fixed
step, bracket the first directional sign change, refine by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PI = math.pi

SIDE_B = "B"
SIDE_T = "T"

# Event-solver defaults: fixed march step, bracketing offset after an impact,
# search horizon (20 forcing periods), bisection time tolerance, and the
# velocity magnitude below which a crossing is treated as grazing.
SCAN_STEP = 1e-3
START_OFFSET = 1e-9
HORIZON = 40.0
TIME_TOL = 1e-12
RESIDUAL_TOL = 1e-10
GRAZING_TOL = 1e-8

_SCAN_CHUNK = 2048


class DegenerateParamsError(ValueError):
    """Physical parameters that collapse the nondimensionalization."""


class NoImpactWithinHorizon(RuntimeError):
    """No wall crossing found in (t_j, t_j + horizon]."""


class GrazingImpact(RuntimeError):
    """A wall crossing with |Zdot| below the grazing tolerance."""


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional parameters of the pair.

    ball_mass is carried for documentation only; the dynamics assume the
    capsule mass dominates (M >> m).
    """

    capsule_mass: float           # M, kg
    capsule_length: float         # s, m
    forcing_frequency: float      # omega, rad/s
    forcing_norm: float           # ||F||, N
    incline: float                # beta, rad
    restitution: float            # r
    gravity: float = 9.8          # m/s^2
    ball_mass: float = 0.0        # m, kg (unused by the reduced model)

    def __post_init__(self):
        if self.capsule_mass <= 0 or self.capsule_length <= 0:
            raise DegenerateParamsError("capsule mass and length must be positive")
        if self.forcing_frequency <= 0 or self.forcing_norm <= 0:
            raise DegenerateParamsError("forcing frequency and norm must be positive")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError(f"restitution must be in [0, 1], got {self.restitution}")
        if not 0.0 <= self.incline <= PI / 2:
            raise ValueError(f"incline must be in [0, pi/2], got {self.incline}")


@dataclass(frozen=True)
class NondimParams:
    """Nondimensional parameter set: restitution, length, gravity term, phase."""

    restitution: float            # r
    length: float                 # d
    gravity_term: float           # gbar
    general_phase: float = 0.0    # psi, rad

    def __post_init__(self):
        if self.length <= 0:
            raise DegenerateParamsError(f"dimensionless length must be positive, got {self.length}")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError(f"restitution must be in [0, 1], got {self.restitution}")
        if self.gravity_term < 0:
            raise ValueError(f"gravity term must be nonnegative, got {self.gravity_term}")

    def replace(self, **kw) -> "NondimParams":
        from dataclasses import replace as _replace
        return _replace(self, **kw)


# Baseline parameterization used throughout the study: r = 0.5, ||F|| = 5 N,
# M = 124.5 g, omega = 5*pi, beta = pi/3, g = 9.8; d is set directly.
BASE_GRAVITY_TERM = 0.1245 * 9.8 * math.sin(PI / 3) / 5.0


def baseline_params(d: float, psi: float = 0.0) -> NondimParams:
    """Nondimensional parameters of the baseline setup at dimensionless length d."""
    return NondimParams(restitution=0.5, length=d, gravity_term=BASE_GRAVITY_TERM,
                        general_phase=psi)


def nondimensionalize(p: PhysicalParams, psi: float = 0.0) -> NondimParams:
    """Map physical parameters to the nondimensional set.

    d = s*M*omega^2 / (||F||*pi^2),  gbar = M*g*sin(beta) / ||F||.
    """
    d = p.capsule_length * p.capsule_mass * p.forcing_frequency**2 / (p.forcing_norm * PI**2)
    gbar = p.capsule_mass * p.gravity * math.sin(p.incline) / p.forcing_norm
    return NondimParams(restitution=p.restitution, length=d, gravity_term=gbar,
                        general_phase=psi)


def forcing_antiderivatives(t, psi: float = 0.0, amplitude: float = 1.0):
    """Forcing and its first/second antiderivatives at dimensionless time t.

    F  = A*cos(pi*t + psi)
    F1 = A*sin(pi*t + psi)/pi
    F2 = -A*cos(pi*t + psi)/pi^2

    `amplitude` exists so tests can switch the forcing off (A = 0).
    """
    arg = PI * np.asarray(t, dtype=float) + psi
    f = amplitude * np.cos(arg)
    f1 = amplitude * np.sin(arg) / PI
    f2 = -amplitude * np.cos(arg) / PI**2
    return f, f1, f2


def apply_impact_law(velocity_in, restitution: float):
    """Instantaneous impact law: Zdot_plus = -r * Zdot_minus."""
    return -restitution * velocity_in


def impact_phase(t, psi: float = 0.0):
    """Forcing phase mod(pi*t + psi, 2*pi) at time t; result in [0, 2*pi)."""
    return np.mod(PI * np.asarray(t, dtype=float) + psi, 2.0 * PI)


@dataclass(frozen=True)
class ImpactEvent:
    """One impact: wall side, absolute time, signed pre-impact velocity, phase.

    Sign convention: side "B" events have velocity_in > 0, side "T" events
    velocity_in < 0.
    """

    side: str
    time: float
    velocity_in: float
    phase: float

    def __post_init__(self):
        if self.side not in (SIDE_B, SIDE_T):
            raise ValueError(f"side must be 'B' or 'T', got {self.side!r}")


@dataclass(frozen=True)
class FlowSample:
    """Relative displacement/velocity at one time along the between-impact flow."""

    displacement: float
    velocity: float
    time: float


def event_on_b(v: float, phase: float, p: NondimParams) -> ImpactEvent:
    """A bottom-wall event with pre-impact velocity v at the given forcing phase.

    The representative absolute time is (phase - psi)/pi; the dynamics depend
    on time only through the phase, so any representative is equivalent.
    """
    if v <= 0:
        raise ValueError(f"a B-side event needs velocity_in > 0, got {v}")
    t0 = (phase - p.general_phase) / PI
    return ImpactEvent(side=SIDE_B, time=t0, velocity_in=v,
                       phase=float(impact_phase(t0, p.general_phase)))


def _flow(z0, vplus, t0, tau, p: NondimParams, amplitude: float):
    """Closed-form Z and Zdot at t0 + tau given post-impact state (z0, vplus)."""
    t = t0 + tau
    _, f1_t, f2_t = forcing_antiderivatives(t, p.general_phase, amplitude)
    _, f1_0, f2_0 = forcing_antiderivatives(t0, p.general_phase, amplitude)
    zdot = vplus + p.gravity_term * tau + f1_t - f1_0
    z = (z0 + vplus * tau + 0.5 * p.gravity_term * tau**2
         + f2_t - f2_0 - f1_0 * tau)
    return z, zdot


def flow_between_impacts(event: ImpactEvent, tau, p: NondimParams,
                         amplitude: float = 1.0) -> FlowSample:
    """Evaluate the between-impact flow a time tau >= 0 after an impact.

    Applies the impact law to event.velocity_in and integrates the forced
    free flight from Z = +d/2 (side B) or -d/2 (side T).  Validity past the
    next impact is the caller's concern.  tau may be an array.
    """
    z0 = 0.5 * p.length if event.side == SIDE_B else -0.5 * p.length
    vplus = apply_impact_law(event.velocity_in, p.restitution)
    z, zdot = _flow(z0, vplus, event.time, np.asarray(tau, dtype=float), p, amplitude)
    if np.ndim(tau) == 0:
        return FlowSample(displacement=float(z), velocity=float(zdot),
                          time=event.time + float(tau))
    return FlowSample(displacement=z, velocity=zdot, time=event.time + np.asarray(tau))


def next_impact_batch(sides, times, velocities, p: NondimParams, *,
                      amplitude: float = 1.0, scan_step: float = SCAN_STEP,
                      horizon: float = HORIZON, grazing_tol: float = GRAZING_TOL):
    """Vectorized impact-to-impact step for a batch of events.

    Args:
        sides: int array, +1 for side B, -1 for side T.
        times, velocities: impact times and signed pre-impact velocities.

    Returns:
        (new_sides, new_times, new_velocities, status) with status 0 = ok,
        1 = no impact within horizon, 2 = grazing crossing.
    """
    sides = np.asarray(sides, dtype=np.int8)
    t0 = np.asarray(times, dtype=float)
    vin = np.asarray(velocities, dtype=float)
    n = t0.shape[0]
    half = 0.5 * p.length
    gbar = p.gravity_term
    psi = p.general_phase

    z0 = np.where(sides > 0, half, -half)
    vplus = -p.restitution * vin
    arg0 = PI * t0 + psi
    f1_0 = amplitude * np.sin(arg0) / PI
    f2_0 = -amplitude * np.cos(arg0) / PI**2
    # Z(t0 + tau) = c0 + c1*tau + (gbar/2)*tau^2 - A*cos(pi*(t0+tau)+psi)/pi^2
    c0 = z0 - f2_0
    c1 = vplus - f1_0

    def z_at(rows, tau):
        return (c0[rows] + c1[rows] * tau + 0.5 * gbar * tau**2
                - amplitude * np.cos(arg0[rows] + PI * tau) / PI**2)

    def zdot_at(rows, tau):
        return (vplus[rows] + gbar * tau
                + amplitude * np.sin(arg0[rows] + PI * tau) / PI - f1_0[rows])

    out_side = np.zeros(n, dtype=np.int8)
    out_t = np.full(n, np.nan)
    out_v = np.full(n, np.nan)
    status = np.ones(n, dtype=np.int8)  # assume no-impact until found

    active = np.arange(n)
    base = 0.0
    prev_z = None
    n_steps = int(math.ceil(horizon / scan_step))
    done_steps = 0
    chunk = 256
    while active.size and done_steps < n_steps:
        m = min(chunk, n_steps - done_steps)
        chunk = min(2 * chunk, _SCAN_CHUNK)
        offs = START_OFFSET + (base + scan_step * np.arange(m + 1))
        z = z_at(active[:, None], offs[None, :])
        if prev_z is not None:
            z = np.concatenate([prev_z[:, None], z], axis=1)
            taus = np.concatenate([[offs[0] - scan_step], offs])
        else:
            taus = offs

        up_b = (z[:, :-1] < half) & (z[:, 1:] >= half)
        down_t = (z[:, :-1] > -half) & (z[:, 1:] <= -half)
        hit = up_b | down_t
        rows = hit.any(axis=1)
        if rows.any():
            ridx = np.flatnonzero(rows)
            cols = hit[ridx].argmax(axis=1)
            ev_rows = active[ridx]
            is_b = up_b[ridx, cols]
            lo = taus[cols]
            hi = taus[cols + 1]
            target = np.where(is_b, half, -half)
            g_lo = z_at(ev_rows, lo) - target
            for _ in range(45):  # 1e-3 / 2^45 << TIME_TOL
                mid = 0.5 * (lo + hi)
                g_mid = z_at(ev_rows, mid) - target
                bracket_lo = g_lo * g_mid <= 0
                hi = np.where(bracket_lo, mid, hi)
                lo = np.where(bracket_lo, lo, mid)
                g_lo = np.where(bracket_lo, g_lo, g_mid)
            t_star = 0.5 * (lo + hi)
            zdot = zdot_at(ev_rows, t_star)
            out_side[ev_rows] = np.where(is_b, 1, -1)
            out_t[ev_rows] = t0[ev_rows] + t_star
            out_v[ev_rows] = zdot
            graze = np.abs(zdot) < grazing_tol
            status[ev_rows] = np.where(graze, 2, 0).astype(np.int8)
            keep = ~rows
            active = active[keep]
            prev_z = z[keep, -1] if active.size else None
        else:
            prev_z = z[:, -1]
        base += scan_step * m
        done_steps += m

    return out_side, out_t, out_v, status


def next_impact(event: ImpactEvent, p: NondimParams, *, amplitude: float = 1.0,
                scan_step: float = SCAN_STEP, horizon: float = HORIZON,
                grazing_tol: float = GRAZING_TOL) -> ImpactEvent:
    """Earliest impact after `event`: side, time, signed pre-impact velocity, phase.

    Raises:
        NoImpactWithinHorizon: no wall crossing in (t_j, t_j + horizon].
        GrazingImpact: the first crossing has |Zdot| < grazing_tol.
    """
    side_code = np.array([1 if event.side == SIDE_B else -1])
    s, t, v, st = next_impact_batch(side_code, [event.time], [event.velocity_in], p,
                                    amplitude=amplitude, scan_step=scan_step,
                                    horizon=horizon, grazing_tol=grazing_tol)
    if st[0] == 1:
        raise NoImpactWithinHorizon(
            f"no impact within {horizon} time units after t={event.time}")
    if st[0] == 2:
        raise GrazingImpact(
            f"grazing crossing (|Zdot|={abs(v[0]):.2e}) at t={t[0]}")
    return ImpactEvent(side=SIDE_B if s[0] > 0 else SIDE_T, time=float(t[0]),
                       velocity_in=float(v[0]),
                       phase=float(impact_phase(t[0], p.general_phase)))
