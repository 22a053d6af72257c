"""Virtual-force coverage control for a planar swarm of landers.

Each lander feels three kinds of virtual force: global pairwise repulsion
(coverage), a spring pull toward its nearest neighbours while it has too
few communication links, and repulsion from obstacles. Motion follows a
damped second-order law integrated with semi-implicit Euler, all landers
updated synchronously from the pre-step state.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

MIN_DISTANCE = 1e-6  # below this the 1/r forces are capped
COLLISION_TRANSIENT = 10  # steps excluded from the run's minimum pair distance
DEFAULT_DEPLOY_SIDE = 10.0  # side of the square the swarm is dropped into
COM_LAWS = ("rest_length", "linear")


@dataclass(frozen=True)
class VirtualForceParams:
    C_cov: float = 1.0
    C_com: float = 0.2
    C_obs: float = 1.0
    R_c: float = 5.0
    R_s: float = 2.5
    D: int = 3
    m_i: float = 1.0
    mu_i: float = 2.0
    com_law: str = "rest_length"

    def __post_init__(self):
        checks = {
            "C_cov": self.C_cov > 0, "C_com": self.C_com >= 0, "C_obs": self.C_obs > 0,
            "R_c": self.R_c > 0, "R_s": self.R_s > 0, "D": self.D >= 0,
            "m_i": self.m_i > 0, "mu_i": self.mu_i > 0,
            "com_law": self.com_law in COM_LAWS,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise ValueError(f"invalid virtual-force parameters: {', '.join(bad)}")


@dataclass(frozen=True)
class SwarmState:
    """Positions and velocities of N landers plus point obstacles with a reporting radius."""

    positions: np.ndarray  # (N, 2)
    velocities: np.ndarray  # (N, 2)
    obstacles: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))  # (L, 2)
    obstacle_radii: np.ndarray = field(default_factory=lambda: np.zeros(0))  # (L,)
    t: int = 0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        vel = np.array(self.velocities, dtype=float).reshape(-1, 2)
        obs = np.array(self.obstacles, dtype=float).reshape(-1, 2)
        rad = np.array(self.obstacle_radii, dtype=float).reshape(-1)
        if len(pos) < 1:
            raise ValueError("a swarm needs at least one lander")
        if vel.shape != pos.shape:
            raise ValueError("velocities must match positions")
        if len(rad) == 0 and len(obs):
            rad = np.zeros(len(obs))
        if len(rad) != len(obs):
            raise ValueError("one radius per obstacle")
        for name, arr in (("positions", pos), ("velocities", vel), ("obstacles", obs), ("obstacle_radii", rad)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return len(self.positions)

    @classmethod
    def at_rest(cls, positions, obstacles=(), obstacle_radii=()) -> "SwarmState":
        pos = np.asarray(positions, dtype=float).reshape(-1, 2)
        return cls(pos, np.zeros_like(pos), np.asarray(obstacles, dtype=float).reshape(-1, 2),
                   np.asarray(obstacle_radii, dtype=float).reshape(-1))

    def with_obstacle(self, position: Sequence[float], radius: float = 0.0) -> "SwarmState":
        return replace(self, obstacles=np.vstack([self.obstacles, np.asarray(position, dtype=float)]),
                       obstacle_radii=np.append(self.obstacle_radii, radius))

    def without(self, indices: Sequence[int]) -> "SwarmState":
        keep = np.setdiff1d(np.arange(self.n), np.asarray(indices, dtype=int))
        return replace(self, positions=self.positions[keep], velocities=self.velocities[keep])


@dataclass
class CoverageMetrics:
    area: float
    mean_degree: float
    min_pair_dist: float
    settled: bool
    t_settle: int
    hops_total: int
    sensing_area: float = 0.0
    min_site_dist: float | None = None

    def to_dict(self) -> dict:
        d = {
            "area": float(self.area),
            "mean_degree": float(self.mean_degree),
            "t_settle": int(self.t_settle),
            "hops_total": int(self.hops_total),
            "min_pair_dist": float(self.min_pair_dist),
            "settled": bool(self.settled),
            "sensing_area": float(self.sensing_area),
        }
        if self.min_site_dist is not None:
            d["min_site_dist"] = float(self.min_site_dist)
        return d


# --------------------------------------------------------------------------
# Pairwise forces
# --------------------------------------------------------------------------

def _unit_and_dist(r_i, r_j):
    diff = np.asarray(r_i, dtype=float) - np.asarray(r_j, dtype=float)
    d = float(np.hypot(*diff))
    if d < MIN_DISTANCE:
        if d == 0.0:
            return np.zeros(2), MIN_DISTANCE
        return diff / d, MIN_DISTANCE
    return diff / d, d


def f_cov(r_i, r_j, C_cov: float) -> np.ndarray:
    """Coverage repulsion of magnitude C_cov / |r_ij|, pointing from j to i."""
    u, d = _unit_and_dist(r_i, r_j)
    return (C_cov / d) * u


def f_com(r_i, r_j, C_com: float, degree_i: int, D: int) -> np.ndarray:
    """Spring attraction C_com |r_ij| toward j, active only while lander i has fewer than D links."""
    if degree_i >= D:
        return np.zeros(2)
    diff = np.asarray(r_i, dtype=float) - np.asarray(r_j, dtype=float)
    return -C_com * diff


def f_obs(r_i, r_l, C_obs: float) -> np.ndarray:
    """Obstacle repulsion of magnitude C_obs / |r_il|, pointing away from the obstacle."""
    u, d = _unit_and_dist(r_i, r_l)
    return (C_obs / d) * u


# --------------------------------------------------------------------------
# Swarm-level quantities
# --------------------------------------------------------------------------

def _pair_geometry(pos: np.ndarray):
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return diff, dist


def _degrees_of(pos: np.ndarray, R_c: float) -> np.ndarray:
    _, dist = _pair_geometry(pos)
    np.fill_diagonal(dist, np.inf)
    return (dist <= R_c).sum(axis=1)


def degrees(state: SwarmState, R_c: float) -> np.ndarray:
    """Degree of every lander."""
    return _degrees_of(state.positions, R_c)


def degree(i: int, state: SwarmState, R_c: float) -> int:
    """Number of other landers within communication range of lander ``i``."""
    d = np.hypot(*(state.positions - state.positions[i]).T)
    d[i] = np.inf
    return int((d <= R_c).sum())


def _forces(pos: np.ndarray, params: VirtualForceParams, obs: np.ndarray, gains: np.ndarray,
            with_d2: bool = False):
    n = len(pos)
    x, y = pos[:, 0], pos[:, 1]
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    d2 = dx * dx + dy * dy
    np.fill_diagonal(d2, np.inf)
    w = params.C_cov / np.maximum(d2, MIN_DISTANCE**2)
    F = np.empty((n, 2))
    F[:, 0] = (w * dx).sum(axis=1)
    F[:, 1] = (w * dy).sum(axis=1)

    if params.C_com > 0 and params.D > 0 and n > 1:
        deg = (d2 <= params.R_c**2).sum(axis=1)
        needy = np.nonzero(deg < params.D)[0]
        if len(needy):
            k = min(params.D, n - 1)
            rows = needy[:, None]
            nearest = np.argpartition(d2[needy], k - 1, axis=1)[:, :k]
            px, py = dx[rows, nearest], dy[rows, nearest]
            if params.com_law == "rest_length":
                dd = np.sqrt(d2[rows, nearest])
                scale = np.maximum(dd - params.R_c, 0.0) / np.maximum(dd, MIN_DISTANCE)
                px, py = px * scale, py * scale
            F[needy, 0] -= params.C_com * px.sum(axis=1)
            F[needy, 1] -= params.C_com * py.sum(axis=1)

    if len(obs):
        ox = x[:, None] - obs[None, :, 0]
        oy = y[:, None] - obs[None, :, 1]
        ow = gains[None, :] / np.maximum(ox * ox + oy * oy, MIN_DISTANCE**2)
        F[:, 0] += (ow * ox).sum(axis=1)
        F[:, 1] += (ow * oy).sum(axis=1)
    return (F, d2) if with_d2 else F


def _obstacle_set(state: SwarmState, params: VirtualForceParams, extra_obstacles=None, extra_gains=None):
    obs = state.obstacles
    gains = np.full(len(obs), params.C_obs)
    if extra_obstacles is not None and len(extra_obstacles):
        obs = np.vstack([obs, np.asarray(extra_obstacles, dtype=float).reshape(-1, 2)])
        gains = np.concatenate([gains, np.asarray(extra_gains, dtype=float).reshape(-1)])
    return obs, gains


def net_forces(state: SwarmState, params: VirtualForceParams, extra_obstacles: np.ndarray | None = None,
               extra_gains: np.ndarray | None = None) -> np.ndarray:
    """Net virtual force on every lander, (N, 2).

    The communication spring of a lander with fewer than D links acts only
    toward its D nearest neighbours. Under ``com_law="linear"`` each pull has
    magnitude C_com |r_ij|; under the default ``"rest_length"`` it is
    C_com (|r_ij| - R_c) for neighbours beyond R_c and zero inside, which
    keeps the force continuous as links form so the swarm can come to rest.
    """
    obs, gains = _obstacle_set(state, params, extra_obstacles, extra_gains)
    return _forces(state.positions, params, obs, gains)


def net_force(i: int, state: SwarmState, params: VirtualForceParams) -> np.ndarray:
    return net_forces(state, params)[i]


def residual_forces(state: SwarmState, params: VirtualForceParams, area_side: float | None = None) -> np.ndarray:
    """Net force minus the wall reaction: outward components at a wall are dropped."""
    F = net_forces(state, params).copy()
    if area_side is not None:
        half = 0.5 * area_side
        pos = state.positions
        F[(pos >= half) & (F > 0)] = 0.0
        F[(pos <= -half) & (F < 0)] = 0.0
    return F


def _confine(pos: np.ndarray, vel: np.ndarray, half: float) -> None:
    """Keep landers inside [-half, half]^2: clamp to the wall and drop the outward velocity."""
    over = pos > half
    pos[over] = half
    vel[over] = np.minimum(vel[over], 0.0)
    under = pos < -half
    pos[under] = -half
    vel[under] = np.maximum(vel[under], 0.0)


def step(state: SwarmState, params: VirtualForceParams, dt: float, *, area_side: float | None = None,
         forces: np.ndarray | None = None, extra_obstacles=None, extra_gains=None) -> SwarmState:
    """Advance every lander by one semi-implicit Euler step of m a + mu v = F."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    F = net_forces(state, params, extra_obstacles, extra_gains) if forces is None else forces
    vel = state.velocities + dt * (F - params.mu_i * state.velocities) / params.m_i
    pos = state.positions + dt * vel
    if area_side is not None:
        _confine(pos, vel, 0.5 * area_side)
    return replace(state, positions=pos, velocities=vel, t=state.t + 1)


# --------------------------------------------------------------------------
# Area metrics
# --------------------------------------------------------------------------

def coverage_area(positions) -> float:
    """Shoelace area of the polygon through all landers, ordered by angle about their centroid."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        return 0.0
    c = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    order = np.lexsort((np.hypot(*(pts - c).T), ang))
    x, y = pts[order, 0], pts[order, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def sensing_area(positions, R_s: float, resolution: float = 0.1) -> float:
    """Area of the union of sensing disks, rasterised at ``resolution``."""
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    lo = pts.min(axis=0) - R_s
    hi = pts.max(axis=0) + R_s
    xs = np.arange(lo[0] + 0.5 * resolution, hi[0], resolution)
    ys = np.arange(lo[1] + 0.5 * resolution, hi[1], resolution)
    covered = np.zeros((len(xs), len(ys)), dtype=bool)
    r2 = R_s * R_s
    for px, py in pts:
        ix = slice(np.searchsorted(xs, px - R_s), np.searchsorted(xs, px + R_s))
        iy = slice(np.searchsorted(ys, py - R_s), np.searchsorted(ys, py + R_s))
        gx, gy = np.meshgrid(xs[ix] - px, ys[iy] - py, indexing="ij")
        covered[ix, iy] |= gx * gx + gy * gy <= r2
    return float(covered.sum()) * resolution * resolution


def min_pair_distance(positions) -> float:
    pts = np.asarray(positions, dtype=float).reshape(-1, 2)
    if len(pts) < 2:
        return math.inf
    _, dist = _pair_geometry(pts)
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


# --------------------------------------------------------------------------
# Runs
# --------------------------------------------------------------------------

@dataclass
class SwarmTrace:
    positions: np.ndarray  # (T+1, N, 2)
    degrees: np.ndarray  # (T+1, N)

    def write_csv(self, path: str | Path) -> None:
        """Rows ``t,lander_id,x,y,degree``."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "lander_id", "x", "y", "degree"])
            for t in range(len(self.positions)):
                for i, (x, y) in enumerate(self.positions[t]):
                    w.writerow([t, i, repr(float(x)), repr(float(y)), int(self.degrees[t, i])])

    @property
    def areas(self) -> np.ndarray:
        return np.array([coverage_area(p) for p in self.positions])


@dataclass(frozen=True)
class SettleRule:
    eps: float = 1e-3
    window: int = 10
    hop_length: float = 1.0


def _run(initial: SwarmState, params: VirtualForceParams, dt: float, max_steps: int, area_side: float | None,
         rule: SettleRule, record: bool, extra_obstacles=None, extra_gains=None):
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    if not dt > 0:
        raise ValueError("dt must be positive")
    obs, gains = _obstacle_set(initial, params, extra_obstacles, extra_gains)
    pos = initial.positions.copy()
    vel = initial.velocities.copy()
    half = None if area_side is None else 0.5 * area_side
    path = np.zeros(len(pos))
    min_d2 = math.inf
    quiet = 0
    settled = False
    t_settle = max_steps
    pos_hist = [pos.copy()] if record else None
    k = 0
    for k in range(1, max_steps + 1):
        F, d2 = _forces(pos, params, obs, gains, with_d2=True)
        if k - 1 >= COLLISION_TRANSIENT and len(pos) > 1:
            min_d2 = min(min_d2, float(d2.min()))
        vel += dt * (F - params.mu_i * vel) / params.m_i
        new = pos + dt * vel
        if half is not None:
            _confine(new, vel, half)
        disp = np.hypot(*(new - pos).T)
        path += disp
        pos = new
        if record:
            pos_hist.append(pos.copy())
        quiet = quiet + 1 if disp.max() < rule.eps else 0
        if quiet >= rule.window:
            settled = True
            t_settle = k
            break
    state = replace(initial, positions=pos, velocities=vel, t=initial.t + k)
    final_min = min_pair_distance(pos)
    hops = int(np.ceil(path / rule.hop_length - 1e-12).sum())
    metrics = CoverageMetrics(
        area=coverage_area(pos),
        mean_degree=float(degrees(state, params.R_c).mean()),
        min_pair_dist=min(final_min, math.sqrt(min_d2)),
        settled=settled,
        t_settle=t_settle,
        hops_total=hops,
        sensing_area=sensing_area(pos, params.R_s),
    )
    trace = None
    if record:
        hist = np.array(pos_hist)
        trace = SwarmTrace(hist, np.array([_degrees_of(p, params.R_c) for p in hist]))
    return state, trace, metrics


def run_coverage(initial: SwarmState, params: VirtualForceParams, dt: float = 0.1, max_steps: int = 1000, *,
                 area_side: float | None = 30.0, rule: SettleRule = SettleRule(), record: bool = True):
    """Iterate the coverage dynamics until the swarm settles or ``max_steps`` runs out.

    ``metrics.min_pair_dist`` is the closest approach between any two
    landers from step 10 onward (the final configuration if the run is
    shorter), so it doubles as the collision check.

    The swarm has settled once the largest per-step displacement stays below
    ``rule.eps`` for ``rule.window`` consecutive steps; ``t_settle`` is the
    step at which that happens (``max_steps`` and ``settled=False`` if never).

    Returns:
        (final_state, trace, metrics); ``trace`` is None when ``record`` is False.
    """
    return _run(initial, params, dt, max_steps, area_side, rule, record)


EXCLUSION_GAIN = 10.0  # impact-site strength relative to C_obs
EXCLUSION_RADIUS = 2.0


def run_exclusion(initial: SwarmState, impact_site: Sequence[float], params: VirtualForceParams, dt: float = 0.1,
                  max_steps: int = 1000, *, area_side: float | None = 30.0, rule: SettleRule = SettleRule(),
                  record: bool = True, gain: float = EXCLUSION_GAIN):
    """Coverage run with the impact site acting as an extra obstacle of strength ``gain * C_obs``."""
    site = np.asarray(impact_site, dtype=float).reshape(1, 2)
    final, trace, metrics = _run(initial, params, dt, max_steps, area_side, rule, record,
                                 extra_obstacles=site, extra_gains=np.array([gain * params.C_obs]))
    metrics.min_site_dist = float(np.hypot(*(final.positions - site).T).min())
    return final, trace, metrics


def random_deployment(n: int, rng: np.random.Generator | int | None, deploy_side: float = DEFAULT_DEPLOY_SIDE,
                      center: Sequence[float] = (0.0, 0.0), obstacles=(), obstacle_radii=()) -> SwarmState:
    """Landers dropped uniformly at random in a square of side ``deploy_side``."""
    rng = np.random.default_rng(rng)
    pos = np.asarray(center, dtype=float) + (rng.random((n, 2)) - 0.5) * deploy_side
    return SwarmState.at_rest(pos, obstacles, obstacle_radii)


def write_metrics(path: str | Path, metrics: CoverageMetrics) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
