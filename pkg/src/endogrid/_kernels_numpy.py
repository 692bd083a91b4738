"""Pure-numpy kernels.

Every function here has a line-for-line twin in ``_kernels_numba``. The two
backends must produce bit-identical results, which constrains the style:

* all randomness enters as pre-drawn arrays and is consumed by index, never
  by "draw on demand", so control flow cannot desynchronise the streams;
* floating-point expressions keep the same association as the scalar loop
  (running positions are built with ``cumsum`` of the per-step increments,
  which is the same left fold the numba loop performs);
* decisions are made from the same scalar quantities in the same order.

The numpy versions vectorise over chunks between decision points instead of
looping step by step; decisions themselves are re-derived scalar-wise, so
chunking changes speed only.
"""

from __future__ import annotations

import math

import numpy as np

from ._codes import KIND_EXIT, KIND_JUMP, KIND_STEP, OBS_DIFFUSION, OBS_JUMP

_CHUNK = 512
# Crossing-time fractions are clamped into the open unit interval so event
# times stay strictly between the surrounding step knots.
_FRAC_LO = 1e-9
_FRAC_HI = 1.0 - 1e-9


def hermite_uniform(x0, dx, vals, slopes, q):
    """Cubic Hermite table evaluation on a uniform knot grid.

    ``vals``/``slopes`` are knot values and derivatives (monotone slopes in
    practice, but nothing here requires that). Out-of-range queries ride the
    end panels; callers keep ``q`` in range.
    """
    q = np.asarray(q, dtype=np.float64)
    pos = (q - x0) / dx
    j = pos.astype(np.int64)
    np.clip(j, 0, vals.shape[0] - 2, out=j)
    t = pos - j
    t2 = t * t
    t3 = t2 * t
    return (vals[j] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + slopes[j] * dx * (t3 - 2.0 * t2 + t)
            + vals[j + 1] * (-2.0 * t3 + 3.0 * t2)
            + slopes[j + 1] * dx * (t3 - t2))


def exit_scan(xi, mv, qvals, qslopes, dm, m_min, m_cap, tail_a, tail_b,
              budget, out_cum):
    """Turn exit-law uniforms into successive durations until a time budget.

    The caller pre-transforms its uniforms once, with numpy, into
    ``xi = -log1p(-u)`` and ``mv = log(xi)`` so both backends consume the
    exact same floats. The quantile table lives on a uniform grid in ``mv``
    (smooth at both ends); beyond ``m_cap`` the quantile is the analytic
    one-term tail ``tail_a*xi + tail_b``. Cumulative sums go to ``out_cum``.
    Returns the number of exits that fit inside ``budget``;
    ``out_cum[:n+1]`` is valid when ``n < len(xi)``, else ``out_cum[:n]``.
    """
    n = xi.shape[0]
    dur = hermite_uniform(m_min, dm, qvals, qslopes, mv)
    tail = mv >= m_cap
    if tail.any():
        dur[tail] = tail_a * xi[tail] + tail_b
    np.cumsum(dur, out=out_cum[:n])
    return int(np.searchsorted(out_cum[:n], budget, side="right"))


def _emit(out_t, out_v, out_k, ne, t, v, kind):
    if ne >= out_t.shape[0]:
        return ne, 1
    out_t[ne] = t
    out_v[ne] = v
    out_k[ne] = kind
    return ne + 1, 0


def euler_cells(x0, lo0, hi0, w, snap, t_knots, mu, sd, normals, u2,
                jump_size, jump_flag, out_t, out_v, out_k, out_jleft):
    """Advance one Euler chunk, recording step samples, cell exits and jumps.

    Step k moves from ``t_knots[k]`` to ``t_knots[k+1]`` with increment
    ``mu[k] + sd[k]*normals[k]``. Cells are tracked as integer grid lines
    ``(lo, hi)``; an endpoint within ``snap`` of a line counts as a crossing.
    Interior crossings of the straddled line use linear interpolation in
    time; non-straddling steps fire a same-side touch with the Brownian
    bridge probability, reusing the deciding uniform for the crossing time.
    ``jump_flag[k]`` marks steps whose right knot is a jump time; the jump is
    applied after the diffusion move and re-evaluates the cell.

    Returns ``(n_events, n_jumps, x_end, lo_end, hi_end, status)`` with
    ``status=1`` when an output buffer overflowed (caller retries bigger).
    """
    n = mu.shape[0]
    lo = lo0
    hi = hi0
    ne = 0
    nj = 0
    status = 0

    # Positions at the knots. Jumps restart the fold, so the tail is rebuilt
    # whenever one lands; cumsum is the same left fold the scalar loop does.
    inc = mu + sd * normals
    xs = np.cumsum(np.concatenate(((x0,), inc)))

    k = 0
    while k < n:
        kk = min(k + _CHUNK, n)
        hi_b = hi * w
        lo_b = lo * w
        starts = xs[k:kk]
        ends = xs[k + 1:kk + 1]
        sg = sd[k:kk]
        s2d = sg * sg
        strad = (ends >= hi_b - snap) | (ends <= lo_b + snap)
        # Detection only: the small bias keeps a vectorised-exp rounding
        # difference from hiding a touch the scalar decision would take.
        pu = np.exp(-2.0 * (hi_b - starts) * (hi_b - ends) / s2d) + 5e-16
        pl = np.exp(-2.0 * (starts - lo_b) * (ends - lo_b) / s2d) + 5e-16
        fire = (u2[k:kk, 1] < pu) | (u2[k:kk, 0] < pl)
        ev = strad | fire | (jump_flag[k:kk] != 0)
        hit = np.flatnonzero(ev)

        if hit.shape[0] == 0:
            cnt = kk - k
            if ne + cnt > out_t.shape[0]:
                status = 1
                break
            out_t[ne:ne + cnt] = t_knots[k + 1:kk + 1]
            out_v[ne:ne + cnt] = ends
            out_k[ne:ne + cnt] = KIND_STEP
            ne += cnt
            k = kk
            continue

        m = k + int(hit[0])
        cnt = m - k
        if cnt > 0:
            if ne + cnt > out_t.shape[0]:
                status = 1
                break
            out_t[ne:ne + cnt] = t_knots[k + 1:m + 1]
            out_v[ne:ne + cnt] = xs[k + 1:m + 1]
            out_k[ne:ne + cnt] = KIND_STEP
            ne += cnt

        # Scalar processing of the decision step m.
        t_a = t_knots[m]
        t_b = t_knots[m + 1]
        x_a = xs[m]
        x_b = xs[m + 1]
        seg_t = t_a
        seg_x = x_a
        exited = False
        while True:
            hi_b = hi * w
            lo_b = lo * w
            up_hit = x_b >= hi_b - snap
            dn_hit = x_b <= lo_b + snap
            if up_hit or dn_hit:
                bi = hi if up_hit else lo
                b = bi * w
                den = x_b - seg_x
                frac = (b - seg_x) / den if den != 0.0 else 1.0
                if frac < _FRAC_LO:
                    frac = _FRAC_LO
                elif frac > _FRAC_HI:
                    frac = _FRAC_HI
                ne, bad = _emit(out_t, out_v, out_k, ne,
                                seg_t + frac * (t_b - seg_t), b, KIND_EXIT)
                if bad:
                    status = 1
                    break
                lo = bi - 1
                hi = bi + 1
                seg_t = seg_t + frac * (t_b - seg_t)
                seg_x = b
                exited = True
                continue
            if not exited:
                s2 = sd[m] * sd[m]
                p_up = math.exp(-2.0 * (hi_b - x_a) * (hi_b - x_b) / s2)
                p_dn = math.exp(-2.0 * (x_a - lo_b) * (x_b - lo_b) / s2)
                uu = u2[m, 1]
                ul = u2[m, 0]
                f_up = uu < p_up
                f_dn = ul < p_dn
                if f_up and f_dn:
                    # Both boundaries fire on one step: keep the likelier one.
                    if p_up >= p_dn:
                        f_dn = False
                    else:
                        f_up = False
                if f_up or f_dn:
                    bi = hi if f_up else lo
                    b = bi * w
                    uv = uu / p_up if f_up else ul / p_dn
                    if uv < _FRAC_LO:
                        uv = _FRAC_LO
                    elif uv > _FRAC_HI:
                        uv = _FRAC_HI
                    t_star = t_a + uv * (t_b - t_a)
                    ne, bad = _emit(out_t, out_v, out_k, ne, t_star, b, KIND_EXIT)
                    if bad:
                        status = 1
                        break
                    lo = bi - 1
                    hi = bi + 1
                    seg_t = t_star
                    seg_x = b
                    exited = True
                    continue
            break
        if status:
            break

        if jump_flag[m]:
            left = x_b
            x_after = left + jump_size[m]
            ne, bad = _emit(out_t, out_v, out_k, ne, t_b, x_after, KIND_JUMP)
            if bad:
                status = 1
                break
            if nj >= out_jleft.shape[0]:
                status = 1
                break
            out_jleft[nj] = left
            nj += 1
            if x_after >= hi * w - snap or x_after <= lo * w + snap:
                r = math.floor(x_after / w + 0.5)
                if abs(x_after - r * w) <= snap:
                    lo = int(r) - 1
                    hi = int(r) + 1
                else:
                    f = int(math.floor(x_after / w))
                    # the division can land one line off; trust the products
                    if f * w > x_after:
                        f -= 1
                    elif (f + 1) * w <= x_after:
                        f += 1
                    lo = f
                    hi = f + 1
            # Jump moved the path: rebuild the fold from the new start.
            if m + 1 < n:
                xs[m + 1:] = np.cumsum(
                    np.concatenate(((x_after,), inc[m + 1:])))
            else:
                xs[m + 1] = x_after
        else:
            ne, bad = _emit(out_t, out_v, out_k, ne, t_b, x_b, KIND_STEP)
            if bad:
                status = 1
                break
        k = m + 1

    return ne, nj, xs[n], lo, hi, status


def walk_observations(times, values, kinds, w, snap, lo0, hi0,
                      out_i, out_v, out_c):
    """Replay a path through the cell automaton, collecting observations.

    A sample on or beyond the current cell boundary is an observation:
    diffusion samples observe the crossed line itself, jump samples observe
    the landing value and re-derive the cell from it. Jump samples strictly
    inside the cell observe nothing and leave the cell alone.

    Returns ``(n_obs, lo_end, hi_end, status)``.
    """
    n = values.shape[0]
    lo = lo0
    hi = hi0
    no = 0
    status = 0
    i = 0
    while i < n:
        kk = min(i + _CHUNK, n)
        v = values[i:kk]
        ev = (v >= hi * w - snap) | (v <= lo * w + snap)
        hit = np.flatnonzero(ev)
        if hit.shape[0] == 0:
            i = kk
            continue
        m = i + int(hit[0])
        val = values[m]
        if no >= out_i.shape[0]:
            status = 1
            break
        if kinds[m] == KIND_JUMP:
            out_i[no] = m
            out_v[no] = val
            out_c[no] = OBS_JUMP
            no += 1
            r = math.floor(val / w + 0.5)
            if abs(val - r * w) <= snap:
                lo = int(r) - 1
                hi = int(r) + 1
            else:
                f = int(math.floor(val / w))
                # the division can land one line off; trust the products
                if f * w > val:
                    f -= 1
                elif (f + 1) * w <= val:
                    f += 1
                lo = f
                hi = f + 1
        else:
            up = val >= hi * w - snap
            bi = hi if up else lo
            out_i[no] = m
            out_v[no] = bi * w
            out_c[no] = OBS_DIFFUSION
            no += 1
            lo = bi - 1
            hi = bi + 1
        i = m + 1
    return no, lo, hi, status
