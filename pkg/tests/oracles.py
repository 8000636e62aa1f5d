"""Independent reference implementations used as test oracles.

Written from the model equations with plain floats and no shared code with
the package, so agreement is evidence rather than tautology.
"""

import math

SRX = dict(m=2388.0, eta=0.92, beta=1.0, pmax=229.7, af=3.33, cd=0.39, ch=0.95, rho=1.2256,
           cr0=1.75, cr1=0.0328, cr2=4.55, mta=0.54, mu=0.6, a0=7.89e-4, a1=-5.77e-19,
           a2=2.27e-6, g=9.8066)


def kmh(v_mps):
    return v_mps * 3.6


def resistance(v_mps, grade, k=SRX):
    vk = kmh(v_mps)
    aero = k["rho"] / 25.91 * k["cd"] * k["ch"] * k["af"] * vk ** 2
    rolling = k["m"] * k["g"] * k["cr0"] / 1000.0 * (k["cr1"] * vk + k["cr2"])
    return aero + rolling + k["m"] * k["g"] * grade


def tractive(f, v_mps, k=SRX):
    vk = max(kmh(v_mps), 5.0)
    engine = 3600.0 * f * k["eta"] * k["beta"] * k["pmax"] / vk
    tire = k["mta"] * k["m"] * k["g"] * k["mu"]
    return min(engine, tire)


def power(v_mps, a, r_n, k=SRX):
    return (r_n + 1.04 * k["m"] * a) * kmh(v_mps) / (3600.0 * k["eta"])


def fuel_rate(p_kw, k=SRX):
    if p_kw < 0:
        return k["a0"]
    return k["a0"] + k["a1"] * p_kw + k["a2"] * p_kw * p_kw


def pipeline(v_mps, a, grade, k=SRX):
    """Resistance, then power, then fuel rate."""
    return fuel_rate(power(v_mps, a, resistance(v_mps, grade, k), k), k)


def critical_distance(v, brake=-6.0):
    return v * v / (2.0 * abs(brake))


def normal_quantile(q):
    """Inverse normal CDF by bisection on math.erf."""
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * (1.0 + math.erf(mid / math.sqrt(2.0))) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def simulate(v0, controls, dt, grade, vlim=17.88, k=SRX):
    """Step a control sequence with the documented update rule.

    Returns (positions, speeds, accels, fuel); fuel uses rate(v_k, a_k+1)*dt.
    Controls are ("throttle", f) or ("brake", decel).
    """
    x, v = 0.0, v0
    xs, vs, acc = [x], [v], [0.0]
    fuel = 0.0
    for kind, val in controls:
        r = resistance(v, grade, k)
        if kind == "throttle":
            a_raw = (tractive(val, v, k) - r) / k["m"]
        else:
            a_raw = val
        vn = min(max(v + a_raw * dt, 0.0), vlim)
        a = (vn - v) / dt
        fuel += fuel_rate(power(v, a, r, k), k) * dt
        x += 0.5 * (v + vn) * dt
        v = vn
        xs.append(x); vs.append(v); acc.append(a)
    return xs, vs, acc, fuel


def brute_force_two_phase(v0, ttg, grade, dt, levels, x_bar=250.0, x_end=430.0, max_steps=400):
    """Cheapest policy of the form: hold c1 for n steps, then hold c2 to the end.

    A policy is admissible when the vehicle is short of the bar at every
    instant before ``ttg``. Fuel is counted to ``x_end`` with the crossing
    step prorated. Returns (fuel, (c1, n, c2)).
    """
    best = (math.inf, None)
    for c1 in levels:
        for n in range(0, max_steps):
            if n * dt > ttg + 60.0:
                break
            for c2 in levels:
                fuel = _two_phase_fuel(v0, c1, n, c2, ttg, grade, dt, x_bar, x_end, max_steps)
                if fuel < best[0]:
                    best = (fuel, (c1, n, c2))
    return best


def _two_phase_fuel(v0, c1, n, c2, ttg, grade, dt, x_bar, x_end, max_steps):
    x, v, t, fuel = 0.0, v0, 0.0, 0.0
    for k in range(max_steps):
        kind, val = c1 if k < n else c2
        xs, vs, acc, f = simulate(v, [(kind, val)], dt, grade)
        xn = x + xs[1]
        # crossing instant must not precede the switch
        if xn >= x_bar > x:
            t_cross = t + dt * (x_bar - x) / (xn - x)
            if t_cross < ttg:
                return math.inf
        if xn >= x_end:
            return fuel + f * (x_end - x) / (xn - x)
        if vs[1] <= 0.0 and v <= 0.0 and k >= n:
            return math.inf
        fuel += f
        x, v, t = xn, vs[1], t + dt
    return math.inf
