"""Leafwise walker kernels: numba versions and lock-step numpy versions.

State of one walker: transverse representative ``z``, chart ``c`` (0 = C1,
1 = C2), cylinder coordinates ``(u, v)`` and the cached fiber lengths
``(L1, L2)`` of the pants over ``z``.

One time step is Euler-Maruyama for the generator y^2 (d_u^2 + d_y^2) in the
half-plane coordinate y = exp(L_c - v):

    u' = u + sqrt(2 h) y N1,      y' = y (1 + sqrt(2 h) N2),

so v' = v - log(1 + sqrt(2 h) N2). The chart-space segment from (u, v) to
(u', v') is then resolved against the slit, the u-seam and the three
boundaries. In ``foliated`` mode boundaries are crossed with the holonomy
rules (the glued metric is smooth there, so the rest of the segment is
carried over); in first-exit mode the walk stops on the boundary.
"""
import math

import numpy as np

from ._accel import njit
from .rng import STREAM_WALK, normals2_uniforms2, normals2_uniforms2_np

try:
    from numba import prange
except ImportError:  # pragma: no cover
    prange = range

MAX_SEG = 64
MAX_HALVINGS = 40
TWO_PI = 2.0 * math.pi

# status codes
OK = 0
UNDERFLOW = 1
TOO_MANY_EVENTS = 2
SEGMENT_OVERFLOW = 3
NOT_EXITED = 4

# event kinds
EV_D3 = 1
EV_D1 = 2
EV_D2 = 3
EV_SLIT = 4

# first-exit codes
EXIT_D1 = 0
EXIT_D2 = 1
EXIT_D3 = 2


# ---------------------------------------------------------------------------
# scalar kernels (compiled by numba when available)
# ---------------------------------------------------------------------------

@njit
def g_recip(kind, a, tab, theta):
    if kind == 0:
        return 0.5
    if kind == 1:
        return 0.5 * (1.0 + a * np.sin(TWO_PI * theta))
    n = tab.size
    x = (theta % 1.0) * n
    j = int(np.floor(x))
    f = x - j
    j = j % n
    return (1.0 - f) * tab[j] + f * tab[(j + 1) % n]


@njit
def fiber_lengths(kind, a, tab, z):
    return (-np.log(g_recip(kind, a, tab, z)),
            -np.log(g_recip(kind, a, tab, (z + 0.5) % 1.0)))


@njit
def _move(z, c, u, v, L1, L2, du, dv, eps, kind, a, tab, foliated, ev):
    """Resolve the chart segment (u, v) -> (u + du, v + dv).

    Returns (z, c, u, v, L1, L2, n_events, exit_code, status). Events are
    written to rows of ``ev`` as (kind, theta_exit, z_before, z_after).
    """
    u0 = u
    v0 = v
    u1 = u + du
    v1 = v + dv
    n_ev = 0
    for _ in range(MAX_SEG):
        L = L1 if c == 0 else L2
        s = 2.0
        hit = 0
        if v1 < 0.0:
            sc = v0 / (v0 - v1)
            if sc < s:
                s = sc
                hit = 1
        if v1 > L:
            sc = (L - v0) / (v1 - v0)
            if sc < s:
                s = sc
                hit = 2
        if u1 >= 1.0 and u0 < 1.0:
            sc = (1.0 - u0) / (u1 - u0)
            if sc < s:
                s = sc
                hit = 3
        if u1 < 0.0:
            sc = u0 / (u0 - u1)
            if sc < s:
                s = sc
                hit = 4
        if hit == 0:
            if u1 >= 1.0:
                u1 -= 1.0
            return z, c, u1, v1, L1, L2, n_ev, -1, OK
        ux = u0 + s * (u1 - u0)
        vx = v0 + s * (v1 - v0)
        rem_u = (1.0 - s) * (u1 - u0)
        rem_v = (1.0 - s) * (v1 - v0)
        if hit >= 3:
            if vx < eps:
                c_new = 1 - c
                L_new = L2 if c_new == 1 else L1
                scale = np.exp(L_new - L)
                u0 = 0.0 if hit == 3 else 1.0
                u1 = u0 + rem_u * scale
                c = c_new
                if n_ev < ev.shape[0]:
                    ev[n_ev, 0] = EV_SLIT
                    ev[n_ev, 1] = vx
                    ev[n_ev, 2] = z
                    ev[n_ev, 3] = z
                n_ev += 1
            else:
                u0 = 0.0 if hit == 3 else 1.0
                u1 = u0 + rem_u
            v0 = vx
            v1 = vx + rem_v
            continue
        if not foliated:
            code = EXIT_D3 if hit == 1 else (EXIT_D1 if c == 0 else EXIT_D2)
            return z, c, ux % 1.0, (0.0 if hit == 1 else L), L1, L2, n_ev, code, OK
        if hit == 1:
            # out through D3: planar angle, then the gluing rotation by z
            e1 = np.exp(-L1)
            arc = ux * e1 if c == 0 else e1 + ux * np.exp(-L2)
            theta = (arc - (0.5 * e1 - 0.25)) % 1.0
            z_new = (2.0 * z) % 1.0
            u_new = (theta + z) % 1.0
            L1n, L2n = fiber_lengths(kind, a, tab, z_new)
            if n_ev < ev.shape[0]:
                ev[n_ev, 0] = EV_D3
                ev[n_ev, 1] = theta
                ev[n_ev, 2] = z
                ev[n_ev, 3] = z_new
            n_ev += 1
            scale = np.exp(-L)  # chart u-units at v = 0 -> arclength = D1 u-units
            z = z_new
            L1 = L1n
            L2 = L2n
            c = 0
            u0 = u_new
            u1 = u_new + rem_u * scale
            v0 = L1
            v1 = L1 + rem_v
        else:
            # in through D1 (or D2 = D1 over z + 1/2)
            zz = z if c == 0 else (z + 0.5) % 1.0
            w = 0.5 * zz
            theta = (ux - w) % 1.0
            L1n, L2n = fiber_lengths(kind, a, tab, w)
            e1 = np.exp(-L1n)
            arc = (theta + 0.5 * e1 - 0.25) % 1.0
            if n_ev < ev.shape[0]:
                ev[n_ev, 0] = EV_D1 if c == 0 else EV_D2
                ev[n_ev, 1] = ux
                ev[n_ev, 2] = z
                ev[n_ev, 3] = w
            n_ev += 1
            if arc < e1:
                c = 0
                u_new = arc * np.exp(L1n)
                L_new = L1n
            else:
                c = 1
                u_new = (arc - e1) * np.exp(L2n)
                L_new = L2n
            if u_new >= 1.0:
                u_new = 0.0
            z = w
            L1 = L1n
            L2 = L2n
            u0 = u_new
            u1 = u_new + rem_u * np.exp(L_new)
            v0 = 0.0
            v1 = rem_v
    return z, c, u1 % 1.0, v1, L1, L2, n_ev, -1, SEGMENT_OVERFLOW


@njit
def _cone_guard(c, u, v, L1, L2, eps, guard):
    """Reflect off the disc of radius ``guard`` around the cone point."""
    L = L1 if c == 0 else L2
    du = u if u < 0.5 else u - 1.0
    sx = du * np.exp(v - L)
    sy = v - eps
    r = np.hypot(sx, sy)
    if r >= guard:
        return u, v
    if r == 0.0:
        return u, eps + guard
    f = (2.0 * guard - r) / r
    u_new = (sx * f * np.exp(L - v)) % 1.0
    return u_new, eps + sy * f


@njit
def _euler_increment(c, v, L1, L2, h, n1, n2):
    """(du, dv, h_used, status) for one step with rejection-and-halving on y' > 0."""
    L = L1 if c == 0 else L2
    k = 0
    sig = np.sqrt(2.0 * h)
    f = 1.0 + sig * n2
    while f <= 0.0:
        h *= 0.5
        k += 1
        if k > MAX_HALVINGS:
            return 0.0, 0.0, h, UNDERFLOW
        sig = np.sqrt(2.0 * h)
        f = 1.0 + sig * n2
    y = np.exp(L - v)
    return sig * y * n1, -np.log(f), h, OK


@njit
def walk_path(z, c, u, v, t_end, dt, seed, path, kind, a, tab, eps, guard, max_events):
    """Evolve one foliated walker to time t_end.

    Returns (z, c, u, v, n_out, n_in, n_slit, status).
    """
    ev = np.empty((MAX_SEG, 4))
    L1, L2 = fiber_lengths(kind, a, tab, z)
    nsteps = int(np.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    n_out = 0
    n_in = 0
    n_slit = 0
    for k in range(nsteps):
        h = dt if k < nsteps - 1 else t_end - (nsteps - 1) * dt
        n1, n2, _, _ = normals2_uniforms2(seed, STREAM_WALK, path, k)
        du, dv, h, st = _euler_increment(c, v, L1, L2, h, n1, n2)
        if st != OK:
            return z, c, u, v, n_out, n_in, n_slit, st
        z, c, u, v, L1, L2, n_ev, _, st = _move(z, c, u, v, L1, L2, du, dv, eps,
                                                kind, a, tab, True, ev)
        if st != OK:
            return z, c, u, v, n_out, n_in, n_slit, st
        for j in range(min(n_ev, MAX_SEG)):
            e = ev[j, 0]
            if e == EV_D3:
                n_out += 1
            elif e == EV_SLIT:
                n_slit += 1
            else:
                n_in += 1
        u, v = _cone_guard(c, u, v, L1, L2, eps, guard)
        if max_events > 0 and n_out + n_in > max_events:
            return z, c, u, v, n_out, n_in, n_slit, TOO_MANY_EVENTS
    return z, c, u, v, n_out, n_in, n_slit, OK


@njit(parallel=True)
def walk_ensemble_nb(z, c, u, v, t_end, dt, seed, offset, kind, a, tab, eps, guard,
                     max_events, counts, status):
    """In-place evolution of arrays of walkers; path i uses counter ``offset + i``."""
    for i in prange(z.size):
        zi, ci, ui, vi, no, ni, ns, st = walk_path(z[i], c[i], u[i], v[i], t_end, dt, seed,
                                                   offset + i, kind, a, tab, eps, guard,
                                                   max_events)
        z[i] = zi
        c[i] = ci
        u[i] = ui
        v[i] = vi
        counts[i, 0] = no
        counts[i, 1] = ni
        counts[i, 2] = ns
        status[i] = st


@njit
def record_path(z, c, u, v, t_end, dt, seed, path, kind, a, tab, eps, guard, max_events,
                samples, events):
    """One walker with full logging.

    ``samples`` rows: (t, z, chart, u, v, n_events_this_step); ``events`` rows:
    (t, kind, theta_exit, z_before, z_after). Returns (n_samples, n_events, status).
    """
    ev = np.empty((MAX_SEG, 4))
    L1, L2 = fiber_lengths(kind, a, tab, z)
    nsteps = int(np.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    t = 0.0
    samples[0, 0] = 0.0
    samples[0, 1] = z
    samples[0, 2] = c
    samples[0, 3] = u
    samples[0, 4] = v
    samples[0, 5] = 0
    n_s = 1
    n_e = 0
    n_cross = 0
    for k in range(nsteps):
        h = dt if k < nsteps - 1 else t_end - (nsteps - 1) * dt
        n1, n2, _, _ = normals2_uniforms2(seed, STREAM_WALK, path, k)
        du, dv, h, st = _euler_increment(c, v, L1, L2, h, n1, n2)
        if st != OK:
            return n_s, n_e, st
        z, c, u, v, L1, L2, n_ev, _, st = _move(z, c, u, v, L1, L2, du, dv, eps,
                                                kind, a, tab, True, ev)
        if st != OK:
            return n_s, n_e, st
        t += h
        for j in range(min(n_ev, MAX_SEG)):
            if n_e < events.shape[0]:
                events[n_e, 0] = t
                events[n_e, 1] = ev[j, 0]
                events[n_e, 2] = ev[j, 1]
                events[n_e, 3] = ev[j, 2]
                events[n_e, 4] = ev[j, 3]
            n_e += 1
            if ev[j, 0] != EV_SLIT:
                n_cross += 1
        u, v = _cone_guard(c, u, v, L1, L2, eps, guard)
        if n_s < samples.shape[0]:
            samples[n_s, 0] = t
            samples[n_s, 1] = z
            samples[n_s, 2] = c
            samples[n_s, 3] = u
            samples[n_s, 4] = v
            samples[n_s, 5] = n_ev
        n_s += 1
        if max_events > 0 and n_cross > max_events:
            return n_s, n_e, TOO_MANY_EVENTS
    return n_s, n_e, OK


@njit
def first_exit_path(c, u, v, L1, L2, eps, dt, seed, path, max_steps, bridge, guard):
    """Run one walker in a fixed pants until it first reaches the boundary.

    Returns (exit_code, phi_exit, phi_raw, t_exit, status): phi_exit is phi at
    the boundary point, phi_raw = exp(-v) at the end of the stopping step
    before projection. ``bridge`` adds the Brownian-bridge test for
    excursions of v across 0 or L between grid times.
    """
    ev = np.empty((MAX_SEG, 4))
    tab = np.zeros(1)
    t = 0.0
    for k in range(max_steps):
        n1, n2, b0, b1 = normals2_uniforms2(seed, STREAM_WALK, path, k)
        du, dv, h, st = _euler_increment(c, v, L1, L2, dt, n1, n2)
        if st != OK:
            return -1, np.nan, np.nan, t, st
        v_start = v
        phi_raw = np.exp(-(v + dv))
        _, c, u, v, _, _, _, code, st = _move(0.0, c, u, v, L1, L2, du, dv, eps,
                                              0, 0.0, tab, False, ev)
        t += h
        if st != OK:
            return -1, np.nan, np.nan, t, st
        if code >= 0:
            return code, np.exp(-v), phi_raw, t, OK
        if bridge:
            L = L1 if c == 0 else L2
            if b0 < np.exp(-v_start * v / h):
                return EXIT_D3, 1.0, phi_raw, t, OK
            if b1 < np.exp(-(L - v_start) * (L - v) / h):
                return (EXIT_D1 if c == 0 else EXIT_D2), np.exp(-L), phi_raw, t, OK
        u, v = _cone_guard(c, u, v, L1, L2, eps, guard)
    return -1, np.nan, np.nan, t, NOT_EXITED


@njit(parallel=True)
def first_exit_ensemble_nb(c0, u0, v0, L1, L2, eps, dt, seed, offset, max_steps, bridge,
                           guard, code, phi_exit, phi_raw, t_exit, status):
    for i in prange(c0.size):
        r = first_exit_path(c0[i], u0[i], v0[i], L1, L2, eps, dt, seed, offset + i,
                            max_steps, bridge, guard)
        code[i] = r[0]
        phi_exit[i] = r[1]
        phi_raw[i] = r[2]
        t_exit[i] = r[3]
        status[i] = r[4]


# ---------------------------------------------------------------------------
# numpy lock-step versions
# ---------------------------------------------------------------------------

def g_recip_np(kind, a, tab, theta):
    theta = np.asarray(theta, dtype=float)
    if kind == 0:
        return np.full(theta.shape, 0.5)
    if kind == 1:
        return 0.5 * (1.0 + a * np.sin(TWO_PI * theta))
    n = tab.size
    x = np.mod(theta, 1.0) * n
    j = np.floor(x).astype(np.int64)
    f = x - j
    j = j % n
    return (1.0 - f) * tab[j] + f * tab[(j + 1) % n]


def fiber_lengths_np(kind, a, tab, z):
    return (-np.log(g_recip_np(kind, a, tab, z)),
            -np.log(g_recip_np(kind, a, tab, np.mod(z + 0.5, 1.0))))


def move_np(z, c, u, v, L1, L2, du, dv, eps, kind, a, tab, foliated):
    """Vectorised ``_move``. Inputs are modified copies; returns
    (z, c, u, v, L1, L2, counts[n, 3] = (out, in, slit), exit_code, status)."""
    z, u, v, L1, L2 = (np.array(x, dtype=float) for x in (z, u, v, L1, L2))
    c = np.array(c, dtype=np.int64)
    n = z.size
    u0, v0 = u.copy(), v.copy()
    u1, v1 = u + du, v + dv
    counts = np.zeros((n, 3), dtype=np.int64)
    exit_code = np.full(n, -1, dtype=np.int64)
    status = np.zeros(n, dtype=np.int64)
    idx = np.arange(n)
    for _ in range(MAX_SEG):
        if idx.size == 0:
            break
        cc = c[idx]
        L = np.where(cc == 0, L1[idx], L2[idx])
        a0, b0, a1, b1 = u0[idx], v0[idx], u1[idx], v1[idx]
        s = np.full(idx.size, 2.0)
        hit = np.zeros(idx.size, dtype=np.int64)
        with np.errstate(divide="ignore", invalid="ignore"):
            for code_, cond, sc in (
                    (1, b1 < 0.0, b0 / (b0 - b1)),
                    (2, b1 > L, (L - b0) / (b1 - b0)),
                    (3, (a1 >= 1.0) & (a0 < 1.0), (1.0 - a0) / (a1 - a0)),
                    (4, a1 < 0.0, a0 / (a0 - a1))):
                better = cond & (sc < s)
                s = np.where(better, sc, s)
                hit = np.where(better, code_, hit)
        done = hit == 0
        if done.any():
            d = idx[done]
            uu = u1[d]
            u[d] = np.where(uu >= 1.0, uu - 1.0, uu)
            v[d] = v1[d]
        ux = a0 + s * (a1 - a0)
        vx = b0 + s * (b1 - b0)
        rem_u = (1.0 - s) * (a1 - a0)
        rem_v = (1.0 - s) * (b1 - b0)

        seam = hit >= 3
        if seam.any():
            sl = seam & (vx < eps)
            k = idx[seam]
            c_new = np.where(sl, 1 - cc, cc)[seam]
            L_new = np.where(c_new == 0, L1[k], L2[k])
            scale = np.where(sl[seam], np.exp(L_new - L[seam]), 1.0)
            start = np.where(hit[seam] == 3, 0.0, 1.0)
            u0[k] = start
            u1[k] = start + rem_u[seam] * scale
            v0[k] = vx[seam]
            v1[k] = vx[seam] + rem_v[seam]
            c[k] = c_new
            counts[k, 2] += sl[seam]

        bnd = (hit == 1) | (hit == 2)
        if bnd.any() and not foliated:
            k = idx[bnd]
            hb = hit[bnd]
            exit_code[k] = np.where(hb == 1, 2, np.where(cc[bnd] == 0, 0, 1))
            u[k] = np.mod(ux[bnd], 1.0)
            v[k] = np.where(hb == 1, 0.0, L[bnd])
        elif bnd.any():
            down = hit == 1
            if down.any():
                k = idx[down]
                e1 = np.exp(-L1[k])
                arc = np.where(cc[down] == 0, ux[down] * e1, e1 + ux[down] * np.exp(-L2[k]))
                theta = np.mod(arc - (0.5 * e1 - 0.25), 1.0)
                z_new = np.mod(2.0 * z[k], 1.0)
                u_new = np.mod(theta + z[k], 1.0)
                L1n, L2n = fiber_lengths_np(kind, a, tab, z_new)
                scale = np.exp(-L[down])
                z[k], L1[k], L2[k], c[k] = z_new, L1n, L2n, 0
                u0[k] = u_new
                u1[k] = u_new + rem_u[down] * scale
                v0[k] = L1n
                v1[k] = L1n + rem_v[down]
                counts[k, 0] += 1
            up = hit == 2
            if up.any():
                k = idx[up]
                zz = np.where(cc[up] == 0, z[k], np.mod(z[k] + 0.5, 1.0))
                w = 0.5 * zz
                theta = np.mod(ux[up] - w, 1.0)
                L1n, L2n = fiber_lengths_np(kind, a, tab, w)
                e1 = np.exp(-L1n)
                arc = np.mod(theta + 0.5 * e1 - 0.25, 1.0)
                first = arc < e1
                u_new = np.where(first, arc * np.exp(L1n), (arc - e1) * np.exp(L2n))
                u_new = np.where(u_new >= 1.0, 0.0, u_new)
                L_new = np.where(first, L1n, L2n)
                z[k], L1[k], L2[k] = w, L1n, L2n
                c[k] = np.where(first, 0, 1)
                u0[k] = u_new
                u1[k] = u_new + rem_u[up] * np.exp(L_new)
                v0[k] = 0.0
                v1[k] = rem_v[up]
                counts[k, 1] += 1
        keep = seam | (bnd if foliated else np.zeros_like(bnd))
        idx = idx[keep]
    if idx.size:
        status[idx] = SEGMENT_OVERFLOW
        u[idx] = np.mod(u1[idx], 1.0)
        v[idx] = v1[idx]
    return z, c, u, v, L1, L2, counts, exit_code, status


def euler_increment_np(c, v, L1, L2, h, n1, n2):
    h = np.broadcast_to(np.asarray(h, dtype=float), v.shape).copy()
    status = np.zeros(v.shape, dtype=np.int64)
    sig = np.sqrt(2.0 * h)
    f = 1.0 + sig * n2
    bad = f <= 0.0
    k = 0
    while bad.any():
        k += 1
        if k > MAX_HALVINGS:
            status[bad] = UNDERFLOW
            f[bad] = 1.0
            break
        h[bad] *= 0.5
        sig[bad] = np.sqrt(2.0 * h[bad])
        f[bad] = 1.0 + sig[bad] * n2[bad]
        bad = f <= 0.0
    L = np.where(c == 0, L1, L2)
    y = np.exp(L - v)
    return sig * y * n1, -np.log(f), h, status


def cone_guard_np(c, u, v, L1, L2, eps, guard):
    L = np.where(c == 0, L1, L2)
    du = np.where(u < 0.5, u, u - 1.0)
    sx = du * np.exp(v - L)
    sy = v - eps
    r = np.hypot(sx, sy)
    near = r < guard
    if not near.any():
        return u, v
    u, v = u.copy(), v.copy()
    rn = r[near]
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(rn > 0, (2.0 * guard - rn) / rn, 0.0)
    v_new = np.where(rn > 0, eps + sy[near] * f, eps + guard)
    u_new = np.where(rn > 0, np.mod(sx[near] * f * np.exp(L[near] - v[near]), 1.0), u[near])
    u[near], v[near] = u_new, v_new
    return u, v


def walk_ensemble_np(z, c, u, v, t_end, dt, seed, offset, kind, a, tab, eps, guard,
                     max_events, counts, status):
    n = z.size
    paths = offset + np.arange(n, dtype=np.uint64)
    nsteps = int(np.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    L1, L2 = fiber_lengths_np(kind, a, tab, z)
    zz, cc, uu, vv = z.copy(), c.astype(np.int64), u.copy(), v.copy()
    cnt = np.zeros((n, 3), dtype=np.int64)
    st = np.zeros(n, dtype=np.int64)
    live = np.ones(n, dtype=bool)
    for k in range(nsteps):
        h = dt if k < nsteps - 1 else t_end - (nsteps - 1) * dt
        idx = np.nonzero(live)[0]
        if idx.size == 0:
            break
        n1, n2, _, _ = normals2_uniforms2_np(seed, STREAM_WALK, paths[idx], k)
        du, dv, _, s1 = euler_increment_np(cc[idx], vv[idx], L1[idx], L2[idx], h, n1, n2)
        res = move_np(zz[idx], cc[idx], uu[idx], vv[idx], L1[idx], L2[idx], du, dv, eps,
                      kind, a, tab, True)
        zn, cn, un, vn, L1n, L2n, cts, _, s2 = res
        un, vn = cone_guard_np(cn, un, vn, L1n, L2n, eps, guard)
        ok = (s1 == OK)
        zz[idx] = np.where(ok, zn, zz[idx])
        cc[idx] = np.where(ok, cn, cc[idx])
        uu[idx] = np.where(ok, un, uu[idx])
        vv[idx] = np.where(ok, vn, vv[idx])
        L1[idx] = np.where(ok, L1n, L1[idx])
        L2[idx] = np.where(ok, L2n, L2[idx])
        cnt[idx] += cts * ok[:, None]
        bad = np.where(s1 != OK, s1, s2)
        if max_events > 0:
            bad = np.where((bad == OK) & (cnt[idx, 0] + cnt[idx, 1] > max_events),
                           TOO_MANY_EVENTS, bad)
        st[idx] = bad
        live[idx] = bad == OK
    z[:], c[:], u[:], v[:] = zz, cc, uu, vv
    counts[:] = cnt
    status[:] = st


def first_exit_ensemble_np(c0, u0, v0, L1, L2, eps, dt, seed, offset, max_steps, bridge,
                           guard, code, phi_exit, phi_raw, t_exit, status):
    n = c0.size
    paths = offset + np.arange(n, dtype=np.uint64)
    c, u, v = c0.astype(np.int64).copy(), u0.copy(), v0.copy()
    L1a, L2a = np.full(n, L1), np.full(n, L2)
    code[:] = -1
    phi_exit[:] = np.nan
    phi_raw[:] = np.nan
    status[:] = NOT_EXITED
    t = np.zeros(n)
    live = np.arange(n)
    tab = np.zeros(1)
    for k in range(max_steps):
        if live.size == 0:
            break
        n1, n2, b0, b1 = normals2_uniforms2_np(seed, STREAM_WALK, paths[live], k)
        du, dv, h, s1 = euler_increment_np(c[live], v[live], L1a[live], L2a[live], dt, n1, n2)
        v_start = v[live]
        raw = np.exp(-(v_start + dv))
        res = move_np(np.zeros(live.size), c[live], u[live], v_start, L1a[live], L2a[live],
                      du, dv, eps, 0, 0.0, tab, False)
        _, cn, un, vn, _, _, _, ex, s2 = res
        t[live] += h
        finished = ex >= 0
        if bridge:
            Lc = np.where(cn == 0, L1, L2)
            bot = (~finished) & (b0 < np.exp(-v_start * vn / h))
            top = (~finished) & (~bot) & (b1 < np.exp(-(Lc - v_start) * (Lc - vn) / h))
            ex = np.where(bot, EXIT_D3, ex)
            ex = np.where(top, np.where(cn == 0, EXIT_D1, EXIT_D2), ex)
            vn = np.where(bot, 0.0, np.where(top, Lc, vn))
            finished = ex >= 0
        un, vn2 = cone_guard_np(cn, un, vn, L1a[live], L2a[live], eps, guard)
        vn = np.where(finished, vn, vn2)
        errs = (s1 != OK) | (s2 != OK)
        c[live], u[live], v[live] = cn, un, vn
        fin = live[finished & ~errs]
        code[fin] = ex[finished & ~errs]
        phi_exit[fin] = np.exp(-vn[finished & ~errs])
        phi_raw[fin] = raw[finished & ~errs]
        t_exit[fin] = t[fin]
        status[fin] = OK
        bad = live[errs]
        status[bad] = np.where(s1[errs] != OK, s1[errs], s2[errs])
        live = live[~(finished | errs)]
    t_exit[live] = t[live]
