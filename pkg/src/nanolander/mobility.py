"""Single-lander surface mobility.

Two locomotion modes are modelled:

* propelled ballistic hops: thrust along the body +z axis, attitude held by
  a PD law driving three orthogonal reaction wheels, uniform gravity;
* reaction-wheel tumbling and hopping: a planar body pivoting on one spike
  (the stride phase), spun up slowly and then braked, leaving the ground
  when the pivot normal force would turn negative, and landing on a
  spring-damper / Coulomb-friction contact.

Units are SI throughout. Angles are radians.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

G0 = 9.80665  # standard gravity for specific impulse, m/s^2
DEFAULT_G = 0.001  # m/s^2


class MobilityError(ValueError):
    pass


class InsufficientPropellantError(MobilityError):
    pass


class InsufficientTorqueError(MobilityError):
    pass


class SaturationError(MobilityError):
    pass


class EscapeWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# Parameters
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LanderBody:
    """Rigid lander pivoting on a spike.

    ``I_s`` is the body inertia about its centre of mass; the stride-phase
    inertia about the pivot is ``I_s + m_s * l**2``. ``alpha + beta`` is the
    rest angle of the CoM-pivot line from vertical.
    """

    m_s: float = 1.0
    I_s: float = 1.0 / 600.0  # 1 kg, 10 cm cube
    l: float = 0.1
    alpha: float = math.pi / 4
    beta: float = 0.0
    eta: float = 0.9

    def __post_init__(self):
        if not (self.m_s > 0 and self.I_s > 0 and self.l > 0):
            raise MobilityError("m_s, I_s and l must be positive")
        if not 0.0 <= self.alpha + self.beta < math.pi / 2:
            raise MobilityError(f"alpha + beta must lie in [0, pi/2), got {self.alpha + self.beta}")
        if not 0.0 < self.eta <= 1.0:
            raise MobilityError(f"eta must lie in (0, 1], got {self.eta}")

    @property
    def rest_angle(self) -> float:
        return self.alpha + self.beta

    @property
    def pivot_inertia(self) -> float:
        return self.I_s + self.m_s * self.l**2


@dataclass(frozen=True)
class ReactionWheel:
    I_r: float = 0.5 * 0.1 * 0.043**2  # 100 g disk, 4.3 cm radius
    tau_max: float = 0.01  # N m
    omega_max: float = 2.0 * math.pi * 6000.0 / 60.0  # rad/s
    mass: float = 0.1
    radius: float = 0.043

    def __post_init__(self):
        if not (self.I_r > 0 and self.tau_max > 0 and self.omega_max > 0):
            raise MobilityError("I_r, tau_max and omega_max must be positive")

    @classmethod
    def disk(cls, mass: float, radius: float, **kw) -> "ReactionWheel":
        return cls(I_r=0.5 * mass * radius**2, mass=mass, radius=radius, **kw)


@dataclass(frozen=True)
class PropulsionUnit:
    thrust: float = 0.0445  # N
    isp: float = 370.0  # s
    propellant_mass: float = 0.01  # kg

    def __post_init__(self):
        if not (self.thrust > 0 and self.isp > 0 and self.propellant_mass >= 0):
            raise MobilityError("thrust and isp must be positive, propellant_mass non-negative")

    @property
    def mass_flow(self) -> float:
        return self.thrust / (self.isp * G0)

    def burn_time_for(self, burned: float) -> float:
        """Constant-thrust burn duration that consumes ``burned`` kg."""
        return burned / self.mass_flow


@dataclass(frozen=True)
class AttitudeController:
    K_p: float = 0.005
    K_d: float = 0.005
    e_des: tuple[float, float, float] = (0.0, 0.0, 0.0)
    omega_des: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (self.K_p > 0 and self.K_d > 0):
            raise MobilityError("PD gains must be positive")


@dataclass(frozen=True)
class ContactParams:
    k_n: float = 1000.0
    c_n: float = 2.0 * math.sqrt(1000.0 * 1.0)
    mu_f: float = 0.5

    def __post_init__(self):
        if not (self.k_n > 0 and self.c_n >= 0 and self.mu_f >= 0):
            raise MobilityError("invalid contact parameters")

    @classmethod
    def critically_damped(cls, body: LanderBody, k_n: float = 1000.0, mu_f: float = 0.5) -> "ContactParams":
        return cls(k_n=k_n, c_n=2.0 * math.sqrt(k_n * body.m_s), mu_f=mu_f)


# --------------------------------------------------------------------------
# Trajectory container
# --------------------------------------------------------------------------

CSV_COLUMNS = ["t", "x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw", "wx", "wy", "wz"]


@dataclass
class HopTrajectory:
    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray
    euler: np.ndarray
    omega: np.ndarray
    range: float
    max_speed: float
    propellant_burned: float = 0.0
    escaped: bool = False
    info: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "range_m": float(self.range),
            "max_speed_m_s": float(self.max_speed),
            "propellant_kg": float(self.propellant_burned),
            "escaped": bool(self.escaped),
        }

    def write_csv(self, path: str | Path) -> None:
        table = np.column_stack([self.t, self.position, self.velocity, self.euler, self.omega])
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for row in table:
                w.writerow([repr(float(v)) for v in row])

    def write_summary(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


class _Recorder:
    def __init__(self):
        self.rows: list[tuple] = []

    def add(self, t, pos, vel, eul, om):
        if self.rows and t <= self.rows[-1][0]:
            return
        self.rows.append((t, *pos, *vel, *eul, *om))

    def extend(self, block: np.ndarray):
        if self.rows:
            block = block[block[:, 0] > self.rows[-1][0]]
        self.rows.extend(map(tuple, block))

    def arrays(self):
        a = np.array(self.rows, dtype=float).reshape(-1, 13)
        return a[:, 0], a[:, 1:4], a[:, 4:7], a[:, 7:10], a[:, 10:13]


# --------------------------------------------------------------------------
# Propelled hop
# --------------------------------------------------------------------------

def pd_torque(ctrl: AttitudeController, e_act: Sequence[float], omega_act: Sequence[float],
              tau_max: float | None = None) -> np.ndarray:
    """Stabilising PD law ``K_p (e_des - e) + K_d (w_des - w)``, clamped per axis."""
    tau = (ctrl.K_p * (np.asarray(ctrl.e_des, dtype=float) - np.asarray(e_act, dtype=float))
           + ctrl.K_d * (np.asarray(ctrl.omega_des, dtype=float) - np.asarray(omega_act, dtype=float)))
    if tau_max is not None:
        tau = np.clip(tau, -tau_max, tau_max)
    return tau


def rocket_delta_v(prop: PropulsionUnit, m0: float, burned: float) -> float:
    """Ideal velocity change from the rocket equation."""
    if not 0.0 <= burned < m0:
        raise MobilityError(f"burned mass must satisfy 0 <= burned < m0, got {burned} of {m0}")
    return prop.isp * G0 * math.log(m0 / (m0 - burned))


def body_z_axis(euler: Sequence[float]) -> np.ndarray:
    """World direction of body +z for ZYX (yaw-pitch-roll) Euler angles given as (roll, pitch, yaw)."""
    r, p, y = euler
    return np.array([
        math.cos(r) * math.sin(p) * math.cos(y) + math.sin(r) * math.sin(y),
        math.cos(r) * math.sin(p) * math.sin(y) - math.sin(r) * math.cos(y),
        math.cos(r) * math.cos(p),
    ])


def _euler_rates(e: np.ndarray, w: np.ndarray) -> np.ndarray:
    r, p, _ = e
    sr, cr = math.sin(r), math.cos(r)
    cp = math.cos(p)
    tp = math.tan(p)
    return np.array([
        w[0] + (w[1] * sr + w[2] * cr) * tp,
        w[1] * cr - w[2] * sr,
        (w[1] * sr + w[2] * cr) / cp,
    ])


class _Attitude:
    """PD-held attitude of an isotropic body with three wheels; semi-implicit Euler."""

    def __init__(self, body: LanderBody, ctrl: AttitudeController, wheel: ReactionWheel, euler0):
        self.body, self.ctrl, self.wheel = body, ctrl, wheel
        self.e = np.array(euler0, dtype=float)
        self.w = np.zeros(3)
        self.wheel_speed = np.zeros(3)
        self.max_wheel_torque = 0.0
        self.max_wheel_speed = 0.0

    def step(self, dt: float) -> None:
        tau = pd_torque(self.ctrl, self.e, self.w, self.wheel.tau_max)
        new_speed = self.wheel_speed - tau / self.wheel.I_r * dt
        sat = np.abs(new_speed) > self.wheel.omega_max
        tau[sat] = 0.0
        self.wheel_speed = np.where(sat, self.wheel_speed, new_speed)
        self.max_wheel_torque = max(self.max_wheel_torque, float(np.abs(tau).max()))
        self.max_wheel_speed = max(self.max_wheel_speed, float(np.abs(self.wheel_speed).max()))
        self.w = self.w + tau / self.body.I_s * dt
        self.e = self.e + _euler_rates(self.e, self.w) * dt

    def settled(self) -> bool:
        err = np.abs(np.asarray(self.ctrl.e_des) - self.e).max()
        rate = np.abs(self.w).max()
        return err < 1e-12 and rate < 1e-12 and not np.any(self.ctrl.omega_des)


def ballistic_arc(p0: Sequence[float], v0: Sequence[float], g: float, z_land: float = 0.0):
    """Closed-form flight under uniform gravity along -z.

    Returns ``(t_land, p_land, v_land)`` for the descending crossing of
    ``z == z_land``, or ``None`` if the arc never reaches it.
    """
    p0 = np.asarray(p0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    dz = p0[2] - z_land
    disc = v0[2] ** 2 + 2.0 * g * dz
    if g <= 0 or disc < 0:
        return None
    t = (v0[2] + math.sqrt(disc)) / g
    if t <= 0:
        return None
    p = p0 + v0 * t
    p[2] = z_land
    v = v0.copy()
    v[2] -= g * t
    return t, p, v


def propelled_hop(body: LanderBody, prop: PropulsionUnit, ctrl: AttitudeController, g: float,
                  burn_time: float, dt: float, *, wheel: ReactionWheel | None = None,
                  euler0: Sequence[float] = (0.0, 0.0, 0.0), v_esc: float | None = None) -> HopTrajectory:
    """Constant-thrust burn along body +z followed by a ballistic coast to z = 0.

    The burn is integrated with semi-implicit Euler; the coast uses the
    closed-form parabola sampled every ``dt`` while the PD loop keeps
    stepping the attitude. Range is the horizontal distance between the
    lift-off point and the touchdown point.
    """
    if not g > 0:
        raise MobilityError("g must be positive")
    if not dt > 0:
        raise MobilityError("dt must be positive")
    if burn_time < 0:
        raise MobilityError("burn_time must be non-negative")
    wheel = wheel or ReactionWheel()
    mdot = prop.mass_flow
    needed = mdot * burn_time
    if needed > prop.propellant_mass * (1.0 + 1e-12):
        raise InsufficientPropellantError(
            f"burn of {burn_time:.6g} s needs {needed:.6g} kg, only {prop.propellant_mass:.6g} kg loaded")
    if needed >= body.m_s:
        raise InsufficientPropellantError("burn would consume the entire lander mass")

    att = _Attitude(body, ctrl, wheel, euler0)
    rec = _Recorder()
    pos = np.zeros(3)
    vel = np.zeros(3)
    t = 0.0
    lifted = False
    liftoff = pos.copy()
    rec.add(t, pos, vel, att.e, att.w)
    while t < burn_time - 1e-12:
        h = min(dt, burn_time - t)
        m = body.m_s - mdot * t
        acc = prop.thrust / m * body_z_axis(att.e) - np.array([0.0, 0.0, g])
        att.step(h)
        if not lifted and acc[2] <= 0.0:
            vel[:] = 0.0  # ground supports the lander until thrust beats gravity
        else:
            if not lifted:
                liftoff = pos.copy()
            lifted = True
            vel = vel + acc * h
            pos = pos + vel * h
            if pos[2] < 0.0:
                pos[2] = 0.0
                vel[:] = 0.0
                lifted = False
        t += h
        rec.add(t, pos, vel, att.e, att.w)

    burned = mdot * burn_time
    escaped = False
    land = ballistic_arc(pos, vel, g) if (pos[2] > 0 or vel[2] > 0) else None
    if land is None:
        touchdown = pos.copy()
    else:
        t_fl, touchdown, _ = land
        p0, v0, t0 = pos.copy(), vel.copy(), t
        steps = int(math.floor(t_fl / dt))
        for k in range(1, steps + 1):
            att.step(dt)
            tau_k = k * dt
            if tau_k >= t_fl:
                break
            p = p0 + v0 * tau_k
            p[2] -= 0.5 * g * tau_k**2
            v = v0.copy()
            v[2] -= g * tau_k
            rec.add(t0 + tau_k, p, v, att.e, att.w)
            if att.settled():
                # attitude frozen: emit the remaining samples in one block
                ks = np.arange(k + 1, steps + 1) * dt
                ks = ks[ks < t_fl]
                if len(ks):
                    P = p0 + np.outer(ks, v0)
                    P[:, 2] -= 0.5 * g * ks**2
                    V = np.tile(v0, (len(ks), 1))
                    V[:, 2] -= g * ks
                    E = np.tile(att.e, (len(ks), 1))
                    W = np.tile(att.w, (len(ks), 1))
                    rec.extend(np.column_stack([t0 + ks, P, V, E, W]))
                break
        rem = t_fl - (rec.rows[-1][0] - t0)
        if rem > 0:
            att.step(rem)
        rec.add(t0 + t_fl, touchdown, land[2], att.e, att.w)

    ts, P, V, E, W = rec.arrays()
    speeds = np.linalg.norm(V, axis=1)
    vmax = float(speeds.max())
    rng = float(np.hypot(*(touchdown[:2] - liftoff[:2])))
    if v_esc is not None and vmax > v_esc:
        escaped = True
        warnings.warn(f"peak speed {vmax:.4g} m/s exceeds escape speed {v_esc:.4g} m/s", EscapeWarning)
    return HopTrajectory(ts, P, V, E, W, range=rng, max_speed=vmax, propellant_burned=burned,
                         escaped=escaped,
                         info={"max_wheel_torque": att.max_wheel_torque,
                               "max_wheel_speed": att.max_wheel_speed,
                               "burn_time": burn_time})


# --------------------------------------------------------------------------
# Reaction-wheel tumbling / hopping: closed-form relations
# --------------------------------------------------------------------------

def min_tumble_torque(body: LanderBody, g: float) -> float:
    """Smallest steady torque that starts a tumble from rest."""
    if g < 0:
        raise MobilityError("g must be non-negative")
    return body.m_s * g * body.l * math.sin(body.rest_angle)


def hop_wheel_speed_threshold(body: LanderBody, wheel: ReactionWheel, g: float) -> float:
    """Wheel speed whose braked energy (efficiency eta) lifts the CoM over the pivot."""
    return math.sqrt(2.0 * body.m_s * g * body.l * (1.0 - math.cos(body.rest_angle)) / (body.eta * wheel.I_r))


def wheel_speed_for_range(body: LanderBody, d_h: float, g: float) -> float:
    """Wheel speed for a ballistic range ``d_h`` in the infinite-brake-torque limit."""
    s = math.sin(2.0 * body.rest_angle)
    if not d_h > 0:
        raise MobilityError("d_h must be positive")
    if s <= 1e-15:
        raise MobilityError("launch angle degenerate: alpha + beta must lie strictly inside (0, pi/2)")
    return math.sqrt(d_h * g / (body.eta**2 * body.l**2 * s))


def braked_wheel_speed_for_range(body: LanderBody, wheel: ReactionWheel, d_h: float, g: float) -> float:
    """Wheel speed that gives range ``d_h`` when an impulsive brake hands the body eta of the wheel energy.

    Equals :func:`wheel_speed_for_range` when ``I_r == eta * pivot_inertia``.
    """
    return wheel_speed_for_range(body, d_h, g) * math.sqrt(body.eta * body.pivot_inertia / wheel.I_r)


def hop_launch(body: LanderBody, wheel: ReactionWheel, omega_r: float, tau: float, g: float) -> tuple[float, float]:
    """Launch angle and ballistic range after braking a wheel at ``omega_r`` with torque ``tau``.

    ``tau`` may be ``math.inf`` for an ideal impulsive brake.
    """
    if not g > 0:
        raise MobilityError("g must be positive")
    t_min = min_tumble_torque(body, g)
    if not tau > t_min:
        raise InsufficientTorqueError(f"brake torque {tau:.4g} N m does not exceed tumbling torque {t_min:.4g} N m")
    a = body.rest_angle
    lag = body.eta * wheel.I_r * omega_r**2 / tau  # 0 when tau is infinite
    theta_h = a - 0.5 * lag
    d_h = math.sin(2.0 * a - lag) * (body.eta * body.l * omega_r) ** 2 / g
    return theta_h, d_h


def hop_torque_for_range(body: LanderBody, wheel: ReactionWheel, d_h: float, g: float) -> tuple[float, float]:
    """Smallest brake torque (and matching wheel speed) that hops ``d_h``.

    Along the family of (torque, wheel speed) pairs satisfying the launch
    relation, torque = I_r d g / (eta l^2 u (2a - asin u)) with
    u = d g / (eta l w)^2, so the minimum sits at the maximiser of
    u (2a - asin u), restricted to wheel speeds below saturation.
    """
    if not (d_h > 0 and g > 0):
        raise MobilityError("d_h and g must be positive")
    a = body.rest_angle
    u_hi = 1.0 if 2 * a >= math.pi / 2 else math.sin(2 * a)
    u_lo = d_h * g / (body.eta * body.l * wheel.omega_max) ** 2
    if u_lo >= u_hi:
        raise SaturationError(f"range {d_h} m needs a wheel faster than omega_max")
    res = minimize_scalar(lambda u: -u * (2 * a - math.asin(u)), bounds=(u_lo, u_hi), method="bounded",
                          options={"xatol": 1e-12})
    u = float(res.x)
    tau = wheel.I_r * d_h * g / (body.eta * body.l**2 * u * (2 * a - math.asin(u)))
    omega = math.sqrt(d_h * g / u) / (body.eta * body.l)
    return max(tau, min_tumble_torque(body, g)), omega


# --------------------------------------------------------------------------
# Stride phase
# --------------------------------------------------------------------------

def stride_accel(body: LanderBody, theta: float, tau: float, g: float) -> float:
    return (body.m_s * g * body.l * math.sin(theta) - tau) / body.pivot_inertia


def stride_step(body: LanderBody, theta: float, theta_dot: float, tau: float, g: float,
                dt: float) -> tuple[float, float]:
    """One semi-implicit Euler step of the pivoting body."""
    if not dt > 0:
        raise MobilityError("dt must be positive")
    theta_dot = theta_dot + stride_accel(body, theta, tau, g) * dt
    return theta + theta_dot * dt, theta_dot


def stride_energy(body: LanderBody, theta: float, theta_dot: float, g: float) -> float:
    return 0.5 * body.pivot_inertia * theta_dot**2 + body.m_s * g * body.l * math.cos(theta)


def pivot_normal_force(body: LanderBody, theta: float, theta_dot: float, theta_ddot: float, g: float) -> float:
    """Vertical ground reaction at the pivot spike; negative means the spike would lift off."""
    l = body.l
    return body.m_s * (g - l * math.sin(theta) * theta_ddot - l * math.cos(theta) * theta_dot**2)


@dataclass
class StrideResult:
    t: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    crossed_vertical: bool


def simulate_stride(body: LanderBody, tau: float, g: float, dt: float, t_max: float, *,
                    theta0: float | None = None, theta_dot0: float = 0.0, ground: bool = True,
                    stop_at_vertical: bool = True) -> StrideResult:
    """Integrate the pivoting body under a constant torque.

    With ``ground=True`` the rear spike prevents rotation past the rest
    angle. The run stops once the CoM crosses over the pivot (if
    ``stop_at_vertical``) or once the body is statically held by the ground.
    """
    rest = body.rest_angle
    th = rest if theta0 is None else float(theta0)
    thd = float(theta_dot0)
    ts, ths, thds = [0.0], [th], [thd]
    crossed = False
    t = 0.0
    n = int(math.ceil(t_max / dt))
    for _ in range(n):
        if ground and th >= rest and thd >= 0.0 and stride_accel(body, th, tau, g) >= 0.0:
            break  # pressed onto the rear spike, nothing will change
        th, thd = stride_step(body, th, thd, tau, g, dt)
        if ground and th > rest:
            th, thd = rest, 0.0
        t += dt
        ts.append(t)
        ths.append(th)
        thds.append(thd)
        if th <= 0.0:
            crossed = True
            if stop_at_vertical:
                break
    return StrideResult(np.array(ts), np.array(ths), np.array(thds), crossed)


# --------------------------------------------------------------------------
# Hybrid spin-up / brake hop (planar)
# --------------------------------------------------------------------------

def _spike_offsets(body: LanderBody) -> np.ndarray:
    """Spike tips relative to the CoM in the body frame (x forward, z up), front-bottom first."""
    a = body.rest_angle
    s, c, l = math.sin(a), math.cos(a), body.l
    return np.array([[s, -c], [-s, -c], [s, c], [-s, c]]) * l


def _rotate_cw(d: np.ndarray, phi) -> np.ndarray:
    """Rotate body-frame offsets clockwise (toward +x from +z) by ``phi``; broadcasts over phi."""
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(phi)[..., None], np.sin(phi)[..., None]
    return np.stack([d[:, 0] * c + d[:, 1] * s, -d[:, 0] * s + d[:, 1] * c], axis=-1)


def _planar_row(t, x, z, vx, vz, phi, om):
    return (t, x, 0.0, z, vx, 0.0, vz, 0.0, phi, 0.0, 0.0, om, 0.0)


def hybrid_control_hop(body: LanderBody, wheel: ReactionWheel, contact: ContactParams, target_omega: float,
                       g: float = DEFAULT_G, dt: float = 1e-3, *, settle_time: float = 30.0,
                       t_max: float = 5000.0, spin_samples: int = 50) -> HopTrajectory:
    """Spin a wheel up to ``target_omega``, brake it, and follow the body.

    Phases: slow spin-up (body static on two spikes, torque kept below the
    tumbling torque); brake at ``wheel.tau_max`` with the body pivoting on
    its front spike; flight once the pivot normal force turns negative;
    spring-damper / Coulomb contact from touchdown until the body rests.
    The brake hands the body ``eta`` of the wheel's kinetic energy. If the
    body never leaves the ground it either rocks back onto its rest spikes
    or tumbles onto the next spike (``info["mode"]`` tells which).

    The reported range runs from the starting pivot to the touchdown
    contact point (or the new pivot after a tumble).
    """
    if not dt > 0:
        raise MobilityError("dt must be positive")
    if target_omega < 0:
        raise MobilityError("target_omega must be non-negative")
    if target_omega > wheel.omega_max:
        raise SaturationError(f"target {target_omega:.4g} rad/s exceeds wheel saturation {wheel.omega_max:.4g} rad/s")

    a = body.rest_angle
    l, m, J = body.l, body.m_s, body.pivot_inertia
    tips = _spike_offsets(body)
    rec = _Recorder()
    com0 = (-l * math.sin(a), l * math.cos(a))
    info: dict = {"mode": "rest", "flight": False, "tumbled": False}

    def result(range_m: float, escaped: bool = False) -> HopTrajectory:
        ts, P, V, E, W = rec.arrays()
        info["max_wheel_speed"] = target_omega
        return HopTrajectory(ts, P, V, E, W, range=range_m,
                             max_speed=float(np.linalg.norm(V, axis=1).max()), escaped=escaped, info=info)

    rec.rows.append(_planar_row(0.0, com0[0], com0[1], 0.0, 0.0, 0.0, 0.0))
    if target_omega == 0.0:
        rec.rows.append(_planar_row(dt, com0[0], com0[1], 0.0, 0.0, 0.0, 0.0))
        return result(0.0)

    # spin-up: reaction torque presses the body onto its rear spike
    t_min = min_tumble_torque(body, g)
    spin_tau = min(wheel.tau_max, 0.5 * t_min) if t_min > 0 else 0.5 * wheel.tau_max
    t_spin = wheel.I_r * target_omega / spin_tau
    for ts in np.linspace(0.0, t_spin, spin_samples + 1)[1:]:
        rec.rows.append(_planar_row(ts, com0[0], com0[1], 0.0, 0.0, 0.0, 0.0))
    info["spin_up_time"] = t_spin
    info["spin_torque"] = spin_tau

    # brake + stride on the front spike
    k_transfer = math.sqrt(body.eta * J / wheel.I_r)  # body sees eta of the wheel energy
    w_wheel = target_omega
    th, thd = a, 0.0
    pivot_x = 0.0
    t = t_spin
    launched = False
    t_end = t_spin + t_max
    while t < t_end:
        tau_w = min(wheel.tau_max, wheel.I_r * w_wheel / dt) if w_wheel > 0 else 0.0
        tau_b = k_transfer * tau_w
        thdd = stride_accel(body, th, tau_b, g)
        # lift off once the brake is done, the pinned reaction turns tensile and the
        # freed spike would rise; a running brake keeps driving the front spike down
        if (w_wheel == 0.0 and pivot_normal_force(body, th, thd, thdd, g) < 0.0
                and l * math.cos(th) * thd**2 > g):
            launched = True
            break
        w_wheel = max(0.0, w_wheel - tau_w / wheel.I_r * dt)
        thd += thdd * dt
        th += thd * dt
        t += dt
        x_c = pivot_x - l * math.sin(th)
        rec.add(t, (x_c, 0.0, l * math.cos(th)), (-l * math.cos(th) * thd, 0.0, -l * math.sin(th) * thd),
                (0.0, a - th, 0.0), (0.0, -thd, 0.0))
        if th <= a - math.pi / 2:
            # next spike strikes the ground; the impact is taken as fully inelastic
            phi_end = math.pi / 2
            tip = _rotate_cw(tips[2:3], phi_end)[0]
            new_pivot = x_c + tip[0]
            info.update(mode="tumble", tumbled=True, new_pivot_x=new_pivot)
            return result(abs(new_pivot))
        if w_wheel == 0.0 and th >= a and thd >= 0.0:
            info.update(mode="rock")
            return result(0.0)
    if not launched:
        info.update(mode="timeout")
        return result(0.0)

    # flight: closed-form CoM parabola and constant spin
    info.update(mode="hop", flight=True, launch_time=t, launch_angle=th, launch_rate=thd)
    p0 = np.array([pivot_x - l * math.sin(th), l * math.cos(th)])
    v0 = np.array([-l * math.cos(th) * thd, -l * math.sin(th) * thd])
    phi0, om = a - th, -thd

    def tip_z(s: float, k: int) -> float:
        return p0[1] + v0[1] * s - 0.5 * g * s * s + _rotate_cw(tips[k:k + 1], phi0 + om * s)[0, 1]

    def tip_vz(s: float, k: int) -> float:
        d = _rotate_cw(tips[k:k + 1], phi0 + om * s)[0]
        return v0[1] - g * s - om * d[0]

    t_land = None
    chunk = 20000
    s0 = 0.0
    while t_land is None and s0 < t_max:
        ss = s0 + dt * np.arange(1, chunk + 1)
        zc = p0[1] + v0[1] * ss - 0.5 * g * ss**2
        dz = _rotate_cw(tips, phi0 + om * ss)[..., 1]  # (S, 4)
        below = (zc[:, None] + dz) < 0.0
        hit = np.nonzero(below.any(axis=1))[0]
        for i in hit:
            ks = [k for k in np.nonzero(below[i])[0] if tip_vz(ss[i], k) < 0.0]
            if ks:
                lo = ss[i - 1] if i > 0 else s0
                t_land, k_hit = min((brentq(tip_z, lo, ss[i], args=(k,), xtol=1e-14), k) for k in ks)
                break
        s0 = ss[-1]
    if t_land is None:
        info.update(mode="escape")
        return result(float("nan"), escaped=True)

    ss = np.arange(1, int(math.floor(t_land / dt)) + 1) * dt
    ss = np.append(ss[ss < t_land], t_land)
    n = len(ss)
    block = np.zeros((n, 13))
    block[:, 0] = t + ss
    block[:, 1] = p0[0] + v0[0] * ss
    block[:, 3] = p0[1] + v0[1] * ss - 0.5 * g * ss**2
    block[:, 4] = v0[0]
    block[:, 6] = v0[1] - g * ss
    block[:, 8] = phi0 + om * ss
    block[:, 11] = om
    rec.extend(block)
    land_tip = _rotate_cw(tips[k_hit:k_hit + 1], phi0 + om * t_land)[0]
    touchdown_x = block[-1, 1] + land_tip[0]
    info["touchdown_x"] = touchdown_x
    info["flight_time"] = t_land

    x, z, phi = block[-1, 1], block[-1, 3], block[-1, 8]
    vx, vz = block[-1, 4], block[-1, 6]
    final = _settle(body, contact, g, dt, tips, t + t_land, x, z, phi, vx, vz, om, settle_time, rec)
    info["rest_x"] = final
    return result(abs(touchdown_x))


def _settle(body, contact, g, dt, tips, t, x, z, phi, vx, vz, om, settle_time, rec, v_eps=1e-4) -> float:
    """Penalty contact: spring-damper normal force and regularised Coulomb friction per spike."""
    m, I = body.m_s, body.I_s
    k_n, c_n, mu = contact.k_n, contact.c_n, contact.mu_f
    offs = [tuple(d) for d in tips]
    quiet = 0.0
    t_stop = t + settle_time
    while t < t_stop:
        c, s = math.cos(phi), math.sin(phi)
        fx = 0.0
        fz = 0.0
        torque = 0.0
        touching = False
        for d0x, d0z in offs:
            dx = d0x * c + d0z * s
            dz = -d0x * s + d0z * c
            zt = z + dz
            if zt < 0.0:
                touching = True
                vtx = vx + om * dz
                vtz = vz - om * dx
                fn = k_n * (-zt) - c_n * vtz
                if fn <= 0.0:
                    continue
                ft = -mu * fn * max(-1.0, min(1.0, vtx / v_eps))
                fx += ft
                fz += fn
                torque += dz * ft - dx * fn
        vx += fx / m * dt
        vz += (fz / m - g) * dt
        om += torque / I * dt
        x += vx * dt
        z += vz * dt
        phi += om * dt
        t += dt
        rec.rows.append(_planar_row(t, x, z, vx, vz, phi, om))
        if touching and abs(vx) < 1e-5 and abs(vz) < 1e-5 and abs(om) < 1e-4:
            quiet += dt
            if quiet > 0.5:
                break
        else:
            quiet = 0.0
    return x
