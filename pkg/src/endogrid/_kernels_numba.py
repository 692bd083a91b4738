"""Numba kernels: line-for-line twins of ``_kernels_numpy``.

Same signatures, same floating-point association, same indexed consumption
of the pre-drawn random arrays; see the numpy module for the contracts.
Compiled lazily with ``cache=True`` so repeat runs skip compilation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ._codes import KIND_EXIT, KIND_JUMP, KIND_STEP, OBS_DIFFUSION, OBS_JUMP

_FRAC_LO = 1e-9
_FRAC_HI = 1.0 - 1e-9


@njit(cache=True, nogil=True)
def _hermite_scalar(x0, dx, vals, slopes, q):
    pos = (q - x0) / dx
    j = int(pos)
    if j < 0:
        j = 0
    elif j > vals.shape[0] - 2:
        j = vals.shape[0] - 2
    t = pos - j
    t2 = t * t
    t3 = t2 * t
    return (vals[j] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + slopes[j] * dx * (t3 - 2.0 * t2 + t)
            + vals[j + 1] * (-2.0 * t3 + 3.0 * t2)
            + slopes[j + 1] * dx * (t3 - t2))


@njit(cache=True, nogil=True)
def hermite_uniform(x0, dx, vals, slopes, q):
    out = np.empty(q.shape[0])
    for i in range(q.shape[0]):
        out[i] = _hermite_scalar(x0, dx, vals, slopes, q[i])
    return out


@njit(cache=True, nogil=True)
def exit_scan(xi, mv, qvals, qslopes, dm, m_min, m_cap, tail_a, tail_b,
              budget, out_cum):
    n = xi.shape[0]
    acc = 0.0
    for i in range(n):
        if mv[i] >= m_cap:
            dur = tail_a * xi[i] + tail_b
        else:
            dur = _hermite_scalar(m_min, dm, qvals, qslopes, mv[i])
        acc = acc + dur
        out_cum[i] = acc
        if acc > budget:
            return i
    return n


@njit(cache=True, nogil=True)
def euler_cells(x0, lo0, hi0, w, snap, t_knots, mu, sd, normals, u2,
                jump_size, jump_flag, out_t, out_v, out_k, out_jleft):
    n = mu.shape[0]
    cap = out_t.shape[0]
    lo = lo0
    hi = hi0
    ne = 0
    nj = 0
    status = 0
    x_a = x0

    for k in range(n):
        t_a = t_knots[k]
        t_b = t_knots[k + 1]
        x_b = x_a + (mu[k] + sd[k] * normals[k])
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
                if ne >= cap:
                    status = 1
                    break
                t_star = seg_t + frac * (t_b - seg_t)
                out_t[ne] = t_star
                out_v[ne] = b
                out_k[ne] = KIND_EXIT
                ne += 1
                lo = bi - 1
                hi = bi + 1
                seg_t = t_star
                seg_x = b
                exited = True
                continue
            if not exited:
                s2 = sd[k] * sd[k]
                p_up = math.exp(-2.0 * (hi_b - x_a) * (hi_b - x_b) / s2)
                p_dn = math.exp(-2.0 * (x_a - lo_b) * (x_b - lo_b) / s2)
                uu = u2[k, 1]
                ul = u2[k, 0]
                f_up = uu < p_up
                f_dn = ul < p_dn
                if f_up and f_dn:
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
                    if ne >= cap:
                        status = 1
                        break
                    t_star = t_a + uv * (t_b - t_a)
                    out_t[ne] = t_star
                    out_v[ne] = b
                    out_k[ne] = KIND_EXIT
                    ne += 1
                    lo = bi - 1
                    hi = bi + 1
                    seg_t = t_star
                    seg_x = b
                    exited = True
                    continue
            break
        if status:
            break

        if jump_flag[k]:
            left = x_b
            x_after = left + jump_size[k]
            if ne >= cap or nj >= out_jleft.shape[0]:
                status = 1
                break
            out_t[ne] = t_b
            out_v[ne] = x_after
            out_k[ne] = KIND_JUMP
            ne += 1
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
            x_b = x_after
        else:
            if ne >= cap:
                status = 1
                break
            out_t[ne] = t_b
            out_v[ne] = x_b
            out_k[ne] = KIND_STEP
            ne += 1
        x_a = x_b

    return ne, nj, x_a, lo, hi, status


@njit(cache=True, nogil=True)
def walk_observations(times, values, kinds, w, snap, lo0, hi0,
                      out_i, out_v, out_c):
    n = values.shape[0]
    cap = out_i.shape[0]
    lo = lo0
    hi = hi0
    no = 0
    status = 0
    for i in range(n):
        val = values[i]
        if val >= hi * w - snap or val <= lo * w + snap:
            if no >= cap:
                status = 1
                break
            if kinds[i] == KIND_JUMP:
                out_i[no] = i
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
                out_i[no] = i
                out_v[no] = bi * w
                out_c[no] = OBS_DIFFUSION
                no += 1
                lo = bi - 1
                hi = bi + 1
    return no, lo, hi, status
