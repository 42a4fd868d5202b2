"""Piecewise-quadratic trajectory segments between keyframes.

A segment between two keyframes is, per joint, a pair of parabolic arcs with
one switch time. Boundary positions and velocities are met exactly; the free
parameters are resolved by choosing equal-magnitude accelerations on the two
arcs. If the requested duration violates the velocity or acceleration limit,
the whole segment is uniformly stretched by the smallest feasible factor and
that factor is reported on the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

_EPS = 1e-12
_LIMIT_TOL = 1e-9


class SplineError(Exception):
    pass


@dataclass
class JointSegment:
    """One joint's two-parabola arc over [0, duration] (segment-local time)."""
    duration: float
    q0: float
    v0: float
    q1: float
    v1: float
    t_switch: float
    a1: float
    a2: float

    def sample(self, t: float) -> tuple[float, float]:
        """Position and velocity at segment-local time t in [0, duration]."""
        if t <= self.t_switch:
            return (self.q0 + self.v0 * t + 0.5 * self.a1 * t * t,
                    self.v0 + self.a1 * t)
        ts = self.t_switch
        qs = self.q0 + self.v0 * ts + 0.5 * self.a1 * ts * ts
        vs = self.v0 + self.a1 * ts
        u = t - ts
        return qs + vs * u + 0.5 * self.a2 * u * u, vs + self.a2 * u

    @property
    def peak_velocity(self) -> float:
        vs = self.v0 + self.a1 * self.t_switch
        return max(abs(self.v0), abs(self.v1), abs(vs))

    @property
    def peak_acceleration(self) -> float:
        return max(abs(self.a1), abs(self.a2))


@dataclass
class Segment:
    """Multi-joint segment; duration is shared, time_scale >= 1 is reported."""
    duration: float
    time_scale: float
    joints: dict[str, JointSegment] = field(default_factory=dict)

    def sample(self, t: float) -> dict[str, tuple[float, float]]:
        return {name: js.sample(t) for name, js in self.joints.items()}


def _solve_joint(q0: float, v0: float, q1: float, v1: float,
                 T: float) -> JointSegment:
    """Resolve the two-parabola family with |a1| = |a2| for a fixed duration."""
    dq = q1 - q0
    dv = v1 - v0
    D = dq - v0 * T

    if abs(dv) < _EPS:
        # symmetric bang-bang: switch at midpoint, a from the position gap
        a = 4.0 * D / (T * T)
        return JointSegment(T, q0, v0, q1, v1, 0.5 * T, a, -a)

    # a2 = -a1 with a1 = dv / (2 ts - T); ts from the position constraint:
    #   dv ts^2 + 2(D - T dv) ts + (T^2 dv / 2 - T D) = 0
    A = dv
    B = 2.0 * (D - T * dv)
    C = 0.5 * T * T * dv - T * D
    disc = B * B - 4.0 * A * C
    candidates = []
    if disc >= 0.0:
        # cancellation-stable quadratic roots
        qf = -0.5 * (B + math.copysign(math.sqrt(disc), B))
        roots = [qf / A] if qf == 0.0 else [qf / A, C / qf]
        for ts in roots:
            if not (-_EPS <= ts <= T + _EPS):
                continue
            ts = min(max(ts, 0.0), T)
            # a satisfies both dv = a (2 ts - T) and
            # D = a (0.5 T (2 ts - T) + ts (T - ts)); recover it from the
            # better-conditioned one (the velocity form cancels when the
            # switch sits near the midpoint, the position form when the
            # switch sits near T (1 - sqrt(2)/2))
            den_v = 2.0 * ts - T
            den_p = 0.5 * T * den_v + ts * (T - ts)
            if abs(den_v) * T >= abs(den_p):
                if abs(den_v) <= _EPS * max(T, 1.0):
                    continue
                a = dv / den_v
            else:
                a = D / den_p
            candidates.append(JointSegment(T, q0, v0, q1, v1, ts, a, -a))
    # same-sign pair a1 = a2 (single parabola) when it meets both boundaries
    a_lin = dv / T
    if abs(D - 0.5 * a_lin * T * T) <= 1e-9 * max(1.0, abs(D)):
        candidates.append(JointSegment(T, q0, v0, q1, v1, 0.5 * T, a_lin, a_lin))
    if not candidates:
        # no equal-magnitude pair exists at this duration; fall back to the
        # unique unequal pair switching at the midpoint (boundaries still exact)
        a1 = (4.0 * dq - T * (3.0 * v0 + v1)) / (T * T)
        a2 = (-4.0 * dq + T * (v0 + 3.0 * v1)) / (T * T)
        return JointSegment(T, q0, v0, q1, v1, 0.5 * T, a1, a2)
    return min(candidates, key=lambda s: (s.peak_acceleration, s.t_switch))


def _feasible(js: JointSegment, v_max: float, a_max: float) -> bool:
    return (js.peak_acceleration <= a_max + _LIMIT_TOL
            and js.peak_velocity <= v_max + _LIMIT_TOL)


def _min_duration(q0, v0, q1, v1, T_req, v_max, a_max) -> float:
    """Smallest duration >= T_req whose solution respects both limits."""
    if _feasible(_solve_joint(q0, v0, q1, v1, T_req), v_max, a_max):
        return T_req
    T_hi = T_req
    for _ in range(80):
        T_hi *= 1.5
        if _feasible(_solve_joint(q0, v0, q1, v1, T_hi), v_max, a_max):
            break
    else:
        raise SplineError(
            f"no feasible duration for q {q0}->{q1}, v {v0}->{v1} "
            f"(v_max={v_max}, a_max={a_max})")
    T_lo = T_req
    for _ in range(200):
        mid = 0.5 * (T_lo + T_hi)
        if _feasible(_solve_joint(q0, v0, q1, v1, mid), v_max, a_max):
            T_hi = mid
        else:
            T_lo = mid
        if T_hi - T_lo < 1e-12 * T_hi:
            break
    return T_hi


def plan_segment(start: dict[str, tuple[float, float]],
                 end: dict[str, tuple[float, float]],
                 duration: float,
                 v_max: dict[str, float] | float,
                 a_max: dict[str, float] | float) -> Segment:
    """Plan one keyframe-to-keyframe segment for a set of joints.

    start/end map joint name -> (position, velocity); duration is the
    requested keyframe time gap. Limits may be scalars or per-joint maps.
    """
    if duration <= 0.0:
        raise SplineError(f"keyframe times must strictly increase (dt={duration})")
    if set(start) != set(end):
        raise SplineError("start and end keyframes cover different joints")

    def limit(limits, name, default):
        if isinstance(limits, dict):
            return limits.get(name, default)
        return limits

    T = duration
    for name in start:
        q0, v0 = start[name]
        q1, v1 = end[name]
        vm = limit(v_max, name, math.inf)
        am = limit(a_max, name, math.inf)
        if abs(v0) > vm + _LIMIT_TOL or abs(v1) > vm + _LIMIT_TOL:
            raise SplineError(f"{name}: keyframe velocity exceeds limit {vm}")
        T = max(T, _min_duration(q0, v0, q1, v1, duration, vm, am))

    seg = Segment(duration=T, time_scale=T / duration)
    for name in start:
        q0, v0 = start[name]
        q1, v1 = end[name]
        seg.joints[name] = _solve_joint(q0, v0, q1, v1, T)
    return seg
