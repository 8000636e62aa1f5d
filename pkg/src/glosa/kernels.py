"""Scalar hot kernels: vehicle physics, fuel, roll-outs and the planning loop.

Everything here works on plain floats and float64 arrays so the same code
runs under numba or as ordinary Python (see ``_jit``). Vehicle and road
constants travel as one packed vector ``p`` and planner settings as ``c``;
the index constants below define both layouts.
"""

import math

import numpy as np

from ._jit import njit

# packed vehicle + road vector
M = 0
ETA = 1
BETA = 2
PMAX = 3
AF = 4
CD = 5
CH = 6
RHO = 7
CR0 = 8
CR1 = 9
CR2 = 10
MTA = 11
MU = 12
A0 = 13
A1 = 14
A2 = 15
G = 16
GRADE = 17
VLIM = 18
VFLOOR = 19
N_P = 20

# packed planner settings
DT = 0
JERK = 1
MAX_BRAKE = 2
X_STOP = 3
X_END = 4
V_DES = 5
EXIT_PENALTY = 6
SAFETY_MARGIN = 7
MAX_ROLLOUT = 8
RISK_AWARE = 9
N_C = 10

THROTTLE = 0
BRAKE = 1

# rollout status
OK = 0
INFEASIBLE = 1
PRUNED = 2

EPS = 1e-9
TIE_RTOL = 1e-9
MAX_CANDIDATES = 64


@njit
def resistance(v, p):
    vk = 3.6 * v
    aero = p[RHO] / 25.91 * p[CD] * p[CH] * p[AF] * vk * vk
    rolling = p[M] * p[G] * p[CR0] / 1000.0 * (p[CR1] * vk + p[CR2])
    return aero + rolling + p[M] * p[G] * p[GRADE]


@njit
def tire_limit(p):
    return p[MTA] * p[M] * p[G] * p[MU]


@njit
def tractive(f, v, p):
    vk = max(3.6 * v, p[VFLOOR])
    return min(3600.0 * f * p[ETA] * p[BETA] * p[PMAX] / vk, tire_limit(p))


@njit
def raw_accel(kind, value, v, p):
    if kind == BRAKE:
        return value
    return (tractive(value, v, p) - resistance(v, p)) / p[M]


@njit
def step(x, v, kind, value, dt, p):
    """One explicit step; returns (x', v', effective accel)."""
    a = raw_accel(kind, value, v, p)
    vn = v + a * dt
    if vn < 0.0:
        vn = 0.0
    if vn > p[VLIM]:
        vn = p[VLIM]
    return x + 0.5 * (v + vn) * dt, vn, (vn - v) / dt


@njit
def power(v, a, r, p):
    return (r + 1.04 * p[M] * a) / (3600.0 * p[ETA]) * (3.6 * v)


@njit
def fuel_rate(pw, p):
    if pw < 0.0:
        return p[A0]
    return p[A0] + p[A1] * pw + p[A2] * pw * pw


@njit
def interval_fuel(v, a, dt, p):
    return fuel_rate(power(v, a, resistance(v, p), p), p) * dt


@njit
def throttle_for_accel(a_target, v, p):
    """Throttle that yields ``a_target`` at speed ``v``; -1 if none does."""
    force = p[M] * a_target + resistance(v, p)
    tire = tire_limit(p)
    # tolerate rounding at the coasting and tire-limit edges
    if force < -1e-9 * tire or force > tire * (1.0 + 1e-12):
        return -1.0
    force = min(max(force, 0.0), tire)
    vk = max(3.6 * v, p[VFLOOR])
    f = force * vk / (3600.0 * p[ETA] * p[BETA] * p[PMAX])
    if f > 1.0 + 1e-12:
        return -1.0
    return min(f, 1.0)


@njit
def critical_distance(v, max_brake):
    return v * v / (2.0 * abs(max_brake))


@njit
def stop_distance(v, dt, max_brake, p):
    """Distance the discrete dynamics need to stop at full braking."""
    d = 0.0
    for _ in range(100000):
        if v <= 0.0:
            break
        vn = v + max_brake * dt
        if vn < 0.0:
            vn = 0.0
        d += 0.5 * (v + vn) * dt
        v = vn
    return d


@njit
def exit_penalty(v_exit, p, c):
    """Fuel-equivalent of the kinetic energy still missing at the exit."""
    if c[EXIT_PENALTY] <= 0.0 or v_exit >= c[V_DES]:
        return 0.0
    deficit_kj = 1.04 * p[M] * (c[V_DES] ** 2 - v_exit * v_exit) / (2000.0 * p[ETA])
    per_kj = p[A1] + 2.0 * math.sqrt(p[A0] * p[A2])
    return c[EXIT_PENALTY] * deficit_kj * per_kj


@njit
def upstream_rollout(x, v, t, kind, value, t_pred, bound, p, c):
    """Hold one control until the predicted switch.

    The hold is infeasible if it crosses the bar before the predicted switch.
    With the risk-aware flag it is also infeasible once it leaves the vehicle
    unable to stop short of the bar while the light is still predicted red.
    Returns (status, fuel, x, v, t) at the end of the hold.
    """
    dt = c[DT]
    n = int(math.ceil((t_pred - t) / dt - EPS))
    if n < 1:
        n = 1
    limit = int(c[MAX_ROLLOUT])
    if n > limit:
        n = limit
    fuel = 0.0
    for k in range(n):
        xn, vn, an = step(x, v, kind, value, dt, p)
        fuel += interval_fuel(v, an, dt, p)
        if xn >= c[X_STOP] and x < c[X_STOP]:
            t_cross = t + dt * (c[X_STOP] - x) / (xn - x)
            if t_cross < t_pred - EPS:
                return INFEASIBLE, fuel, xn, vn, t + dt
        # a hold that would trip the risk rule before the predicted green is
        # not a plan the vehicle could actually follow
        if c[RISK_AWARE] > 0.0 and t < t_pred - EPS and \
                c[X_STOP] - xn - stop_distance(vn, dt, c[MAX_BRAKE], p) < c[SAFETY_MARGIN]:
            return INFEASIBLE, fuel, xn, vn, t + dt
        t = t + dt
        x = xn
        v = vn
        if fuel > bound:
            return PRUNED, fuel, x, v, t
    return OK, fuel, x, v, t


@njit
def downstream_rollout(x, v, kind, value, bound, p, c):
    """Hold one control until the course end; inf when it stalls or is pruned."""
    dt = c[DT]
    x_end = c[X_END]
    fuel = 0.0
    if x >= x_end:
        return exit_penalty(v, p, c)
    for k in range(int(c[MAX_ROLLOUT])):
        xn, vn, an = step(x, v, kind, value, dt, p)
        f = interval_fuel(v, an, dt, p)
        if xn >= x_end:
            frac = (x_end - x) / (xn - x)
            v_exit = v + (vn - v) * frac
            return fuel + f * frac + exit_penalty(v_exit, p, c)
        if vn <= 0.0 and v <= 0.0:
            return np.inf
        fuel += f
        if fuel > bound:
            return np.inf
        x = xn
        v = vn
    return np.inf


@njit
def best_downstream(x, v, bound, thr_grid, p, c):
    best = np.inf
    for j in range(thr_grid.shape[0]):
        b = min(bound, best)
        d = downstream_rollout(x, v, THROTTLE, thr_grid[j], b, p, c)
        if d < best:
            best = d
    return best


@njit
def _realize(a_target, v, p, c):
    """Control that commands ``a_target``: (kind, value) or kind -1."""
    coast = -resistance(v, p) / p[M]
    if a_target >= coast:
        f = throttle_for_accel(a_target, v, p)
        if f >= 0.0:
            return THROTTLE, f
        return -1, 0.0
    if c[MAX_BRAKE] <= a_target <= 0.0:
        return BRAKE, a_target
    return -1, 0.0


@njit
def ramp_down_gain(a, slew, dt):
    """Speed still gained while ``a`` is reduced by ``slew`` per step to zero."""
    gain = 0.0
    a = a - slew
    while a > 0.0:
        gain += a * dt
        a -= slew
    return gain


@njit
def _try_add(kind, value, x, v, a_prev, jerk_free, red, p, c, n, ck, cv, cx, cvn, ca):
    if kind < 0:
        return n
    for i in range(n):
        if ck[i] == kind and abs(cv[i] - value) < 1e-12:
            return n
    dt = c[DT]
    if kind == THROTTLE and value > 0.0:
        if v + raw_accel(kind, value, v, p) * dt > p[VLIM] + EPS:
            return n
    xn, vn, an = step(x, v, kind, value, dt, p)
    if not jerk_free and abs(an - a_prev) > c[JERK] * dt + EPS:
        return n
    # the acceleration must be able to wind down within the jerk band before
    # the speed limit is reached, or the next step has no admissible control
    if vn + ramp_down_gain(an, c[JERK] * dt, dt) > p[VLIM] + EPS:
        return n
    # likewise a deceleration must be unwound before the speed reaches zero
    if not jerk_free and vn - ramp_down_gain(-an, c[JERK] * dt, dt) < -EPS:
        return n
    if red:
        if c[X_STOP] - xn - stop_distance(vn, dt, c[MAX_BRAKE], p) < c[SAFETY_MARGIN]:
            return n
    if n >= ck.shape[0]:
        return n
    ck[n] = kind
    cv[n] = value
    cx[n] = xn
    cvn[n] = vn
    ca[n] = an
    return n + 1


@njit
def candidates(x, v, a_prev, jerk_free, red, thr_grid, brk_grid, p, c, ck, cv, cx, cvn, ca):
    """Fill the admissible control set; returns its size.

    Grid levels are joined by the speed-holding control and the two controls
    sitting exactly on the jerk bound. A successor must leave room to unwind
    its acceleration within the jerk band before hitting the speed limit or
    standstill. While red, successors that could no longer stop before the
    bar are dropped.
    """
    n = 0
    for i in range(thr_grid.shape[0]):
        n = _try_add(THROTTLE, thr_grid[i], x, v, a_prev, jerk_free, red, p, c, n, ck, cv, cx, cvn, ca)
    for i in range(brk_grid.shape[0]):
        n = _try_add(BRAKE, brk_grid[i], x, v, a_prev, jerk_free, red, p, c, n, ck, cv, cx, cvn, ca)
    k, val = _realize(0.0, v, p, c)
    n = _try_add(k, val, x, v, a_prev, jerk_free, red, p, c, n, ck, cv, cx, cvn, ca)
    if not jerk_free:
        jd = c[JERK] * c[DT]
        k, val = _realize(a_prev + jd * (1.0 - 1e-12), v, p, c)
        n = _try_add(k, val, x, v, a_prev, jerk_free, red, p, c, n, ck, cv, cx, cvn, ca)
        k, val = _realize(a_prev - jd * (1.0 - 1e-12), v, p, c)
        n = _try_add(k, val, x, v, a_prev, jerk_free, red, p, c, n, ck, cv, cx, cvn, ca)
    return n


@njit
def _policy_distance(kind, value, cur_kind, cur_value):
    if cur_kind < 0:
        return 0.0
    if kind == cur_kind:
        return abs(value - cur_value)
    return 1e3


@njit
def select_control(x, v, t, a_prev, cur_kind, cur_value, jerk_free, red, t_pred,
                   thr_grid, brk_grid, p, c, costs_u, costs_d):
    """One receding-horizon decision.

    Returns (kind, value, forced, n_candidates, chosen_index); per-candidate
    upstream/downstream costs are left in ``costs_u``/``costs_d``.
    """
    ck = np.empty(MAX_CANDIDATES, dtype=np.int64)
    cv = np.empty(MAX_CANDIDATES)
    cx = np.empty(MAX_CANDIDATES)
    cvn = np.empty(MAX_CANDIDATES)
    ca = np.empty(MAX_CANDIDATES)
    # an emergency stop, once begun, holds until standstill or green
    if red and v > 0.0 and (jerk_free or c[X_STOP] - x <= critical_distance(v, c[MAX_BRAKE])):
        return BRAKE, c[MAX_BRAKE], True, 0, -1
    n = candidates(x, v, a_prev, jerk_free, red, thr_grid, brk_grid, p, c, ck, cv, cx, cvn, ca)
    if n == 0:
        if red:
            return BRAKE, c[MAX_BRAKE], True, 0, -1
        # jerk band unreachable: least-violating coast
        return THROTTLE, 0.0, False, 0, -1

    # evaluate the candidate nearest the current policy first for a tight bound
    dist = np.empty(n)
    order = np.empty(n, dtype=np.int64)
    for i in range(n):
        dist[i] = _policy_distance(ck[i], cv[i], cur_kind, cur_value)
        order[i] = i
    for i in range(1, n):
        j = i
        while j > 0 and dist[order[j]] < dist[order[j - 1]]:
            tmp = order[j]
            order[j] = order[j - 1]
            order[j - 1] = tmp
            j -= 1

    best = np.inf
    for i in range(n):
        costs_u[i] = np.inf
        costs_d[i] = np.inf
    for r in range(n):
        i = order[r]
        bound = best + TIE_RTOL * abs(best) + 1e-15 if best < np.inf else np.inf
        if red:
            status, u, xs, vs, ts = upstream_rollout(x, v, t, ck[i], cv[i], t_pred, bound, p, c)
            if status != OK:
                continue
            d = best_downstream(xs, vs, bound - u, thr_grid, p, c)
            costs_u[i] = u
            costs_d[i] = d
        else:
            d = downstream_rollout(x, v, ck[i], cv[i], bound, p, c)
            costs_u[i] = 0.0
            costs_d[i] = d
        total = costs_u[i] + costs_d[i]
        if total < best:
            best = total

    if best == np.inf:
        # nothing finite: strongest deceleration on red, strongest push on green
        pick = 0
        for i in range(1, n):
            if red and ca[i] < ca[pick]:
                pick = i
            elif not red and ca[i] > ca[pick]:
                pick = i
        return ck[pick], cv[pick], False, n, pick

    tol = TIE_RTOL * abs(best) + 1e-15
    pick = -1
    for i in range(n):
        total = costs_u[i] + costs_d[i]
        if total > best + tol:
            continue
        if pick < 0:
            pick = i
            continue
        if dist[i] < dist[pick] - 1e-12:
            pick = i
        elif abs(dist[i] - dist[pick]) <= 1e-12 and ca[i] < ca[pick]:
            pick = i
    return ck[pick], cv[pick], False, n, pick


@njit
def plan(v0, t_switch, preds, thr_grid, brk_grid, p, c, max_steps,
         out_t, out_x, out_v, out_a, out_kind, out_val, out_forced,
         out_pred, out_u, out_d, out_fuel):
    """Run the receding-horizon loop; returns (n_states, hit_step_cap)."""
    dt = c[DT]
    costs_u = np.empty(MAX_CANDIDATES)
    costs_d = np.empty(MAX_CANDIDATES)
    x = 0.0
    v = v0
    a = 0.0
    cur_kind = -1
    cur_val = 0.0
    prev_forced = False
    out_t[0] = 0.0
    out_x[0] = 0.0
    out_v[0] = v0
    out_a[0] = 0.0
    out_kind[0] = -1
    out_val[0] = np.nan
    out_forced[0] = False
    out_pred[0] = np.nan
    out_u[0] = np.nan
    out_d[0] = np.nan
    out_fuel[0] = 0.0
    for k in range(max_steps):
        if x >= c[X_END]:
            return k + 1, False
        t = k * dt
        red = t < t_switch - EPS
        t_pred = preds[k] if red else np.nan
        kind, val, forced, n, pick = select_control(
            x, v, t, a, cur_kind, cur_val, prev_forced, red, t_pred,
            thr_grid, brk_grid, p, c, costs_u, costs_d)
        xn, vn, an = step(x, v, kind, val, dt, p)
        out_fuel[k + 1] = interval_fuel(v, an, dt, p) / dt
        out_t[k + 1] = (k + 1) * dt
        out_x[k + 1] = xn
        out_v[k + 1] = vn
        out_a[k + 1] = an
        out_kind[k + 1] = kind
        out_val[k + 1] = val
        out_forced[k + 1] = forced
        out_pred[k + 1] = t_pred
        if pick >= 0:
            out_u[k + 1] = costs_u[pick]
            out_d[k + 1] = costs_d[pick]
        else:
            out_u[k + 1] = np.nan
            out_d[k + 1] = np.nan
        x = xn
        v = vn
        a = an
        cur_kind = kind
        cur_val = val
        prev_forced = forced
    return max_steps + 1, x < c[X_END]
