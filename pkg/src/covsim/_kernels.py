"""Compiled quadrature kernels for importance-field integrals.

The nested adaptive Simpson scheme lives here twice over: once specialised
to the composite importance field (parameter vector, see
importance.PARAMS_LEN) so numba can inline the evaluator into the hot
loop, and a pure-Python mirror in integration.py for arbitrary callables.
Both must implement the identical algorithm; tests cross-check them.

If numba is unavailable the decorators degrade to plain Python and these
kernels stay correct, just slow.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


# Statuses returned by the kernels.
OK = 0
DEPTH_EXCEEDED = 1
STACK_OVERFLOW = 2

_STACK_ROWS = 96


@njit(cache=True)
def eval_phi(p, x, y):
    """Composite field value at (x, y) for a packed parameter vector."""
    total = p[8]
    if p[0] != 0.0:
        dx = x - p[1]
        dy = y - p[2]
        bump = math.exp(-(dx * dx * p[3] + dy * dy * p[4]))
        if p[5] != 0.0:
            t = p[6] * (y - p[7])
            if t >= 0.0:
                bump *= 1.0 / (1.0 + math.exp(-t))
            else:
                e = math.exp(t)
                bump *= e / (1.0 + e)
        total += bump
    if p[9] != 0.0:
        dx = x - p[10]
        dy = y - p[11]
        u = (dx * dx + dy * dy) * p[12]
        a = 1.0 - u * u * u
        if a > 0.0:
            total += a
    return total * p[13]


@njit(cache=True)
def _weight(code, x, y, x0, y0, px, py):
    # 0: mass, 1: x-moment about x0, 2: y-moment about y0, 3: quadratic loss
    if code == 0:
        return 1.0
    if code == 1:
        return x - x0
    if code == 2:
        return y - y0
    dx = x - px
    dy = y - py
    return 0.5 * (dx * dx + dy * dy)


@njit(cache=True)
def _inner_fixed(p, code, x, ya, yb, x0, y0, px, py, n):
    """Composite Simpson with n (even) fixed intervals; coarse anchor only."""
    if yb <= ya:
        return 0.0
    h = (yb - ya) / n
    s = _weight(code, x, ya, x0, y0, px, py) * eval_phi(p, x, ya)
    s += _weight(code, x, yb, x0, y0, px, py) * eval_phi(p, x, yb)
    for i in range(1, n):
        y = ya + i * h
        c = 4.0 if i % 2 == 1 else 2.0
        s += c * _weight(code, x, y, x0, y0, px, py) * eval_phi(p, x, y)
    return s * h / 3.0


@njit(cache=True)
def _inner_single(p, code, x, ya, yb, x0, y0, px, py, eps, min_depth, max_depth, stack):
    """Adaptive Simpson of weight*phi along the slice at x. -> (value, status)"""
    if yb <= ya:
        return 0.0, OK
    fa = _weight(code, x, ya, x0, y0, px, py) * eval_phi(p, x, ya)
    fb = _weight(code, x, yb, x0, y0, px, py) * eval_phi(p, x, yb)
    m0 = 0.5 * (ya + yb)
    fm = _weight(code, x, m0, x0, y0, px, py) * eval_phi(p, x, m0)
    stack[0, 0] = ya
    stack[0, 1] = yb
    stack[0, 2] = fa
    stack[0, 3] = fm
    stack[0, 4] = fb
    stack[0, 5] = (yb - ya) / 6.0 * (fa + 4.0 * fm + fb)
    stack[0, 6] = eps
    stack[0, 7] = 0.0
    top = 1
    total = 0.0
    while top > 0:
        top -= 1
        a = stack[top, 0]
        b = stack[top, 1]
        fa = stack[top, 2]
        fm = stack[top, 3]
        fb = stack[top, 4]
        s = stack[top, 5]
        e = stack[top, 6]
        depth = stack[top, 7]
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = _weight(code, x, lm, x0, y0, px, py) * eval_phi(p, x, lm)
        frm = _weight(code, x, rm, x0, y0, px, py) * eval_phi(p, x, rm)
        sl = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        sr = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = sl + sr - s
        if depth >= min_depth and abs(err) <= 15.0 * e:
            total += sl + sr + err / 15.0
        elif depth >= max_depth:
            return np.nan, DEPTH_EXCEEDED
        else:
            if top + 2 > stack.shape[0]:
                return np.nan, STACK_OVERFLOW
            stack[top, 0] = a
            stack[top, 1] = m
            stack[top, 2] = fa
            stack[top, 3] = flm
            stack[top, 4] = fm
            stack[top, 5] = sl
            stack[top, 6] = 0.5 * e
            stack[top, 7] = depth + 1.0
            top += 1
            stack[top, 0] = m
            stack[top, 1] = b
            stack[top, 2] = fm
            stack[top, 3] = frm
            stack[top, 4] = fb
            stack[top, 5] = sr
            stack[top, 6] = 0.5 * e
            stack[top, 7] = depth + 1.0
            top += 1
    return total, OK


@njit(cache=True)
def _limits(xk, ytv, ybv, j, x):
    t = (x - xk[j]) / (xk[j + 1] - xk[j])
    yt = ytv[j] + t * (ytv[j + 1] - ytv[j])
    yb = ybv[j] + t * (ybv[j + 1] - ybv[j])
    return yb, yt


@njit(cache=True)
def coarse_single(xk, ytv, ybv, p, code, x0, y0, px, py):
    """Cheap fixed-rule estimate used to anchor absolute tolerances."""
    total = 0.0
    for j in range(xk.shape[0] - 1):
        a = xk[j]
        b = xk[j + 1]
        if b <= a:
            continue
        m = 0.5 * (a + b)
        ya, yt = _limits(xk, ytv, ybv, j, a)
        fa = _inner_fixed(p, code, a, ya, yt, x0, y0, px, py, 16)
        ya, yt = _limits(xk, ytv, ybv, j, m)
        fm = _inner_fixed(p, code, m, ya, yt, x0, y0, px, py, 16)
        ya, yt = _limits(xk, ytv, ybv, j, b)
        fb = _inner_fixed(p, code, b, ya, yt, x0, y0, px, py, 16)
        total += (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return total


@njit(cache=True)
def outer_single(
    xk, ytv, ybv, p, code, x0, y0, px, py,
    eps_abs, inner_eps, min_outer, min_inner, max_depth,
):
    """Nested adaptive Simpson of one weighted integrand. -> (value, status)"""
    big_w = xk[xk.shape[0] - 1] - xk[0]
    inner_stack = np.empty((_STACK_ROWS, 8))
    stack = np.empty((_STACK_ROWS, 8))
    total = 0.0
    for j in range(xk.shape[0] - 1):
        a = xk[j]
        b = xk[j + 1]
        if b <= a:
            continue
        eps_p = eps_abs * (b - a) / big_w
        m0 = 0.5 * (a + b)
        ya, yt = _limits(xk, ytv, ybv, j, a)
        fa, st = _inner_single(
            p, code, a, ya, yt, x0, y0, px, py, inner_eps, min_inner, max_depth, inner_stack
        )
        if st != OK:
            return np.nan, st
        ya, yt = _limits(xk, ytv, ybv, j, m0)
        fm, st = _inner_single(
            p, code, m0, ya, yt, x0, y0, px, py, inner_eps, min_inner, max_depth, inner_stack
        )
        if st != OK:
            return np.nan, st
        ya, yt = _limits(xk, ytv, ybv, j, b)
        fb, st = _inner_single(
            p, code, b, ya, yt, x0, y0, px, py, inner_eps, min_inner, max_depth, inner_stack
        )
        if st != OK:
            return np.nan, st

        stack[0, 0] = a
        stack[0, 1] = b
        stack[0, 2] = fa
        stack[0, 3] = fm
        stack[0, 4] = fb
        stack[0, 5] = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        stack[0, 6] = eps_p
        stack[0, 7] = 0.0
        top = 1
        while top > 0:
            top -= 1
            ia = stack[top, 0]
            ib = stack[top, 1]
            fa = stack[top, 2]
            fm = stack[top, 3]
            fb = stack[top, 4]
            s = stack[top, 5]
            e = stack[top, 6]
            depth = stack[top, 7]
            im = 0.5 * (ia + ib)
            lm = 0.5 * (ia + im)
            rm = 0.5 * (im + ib)
            ya, yt = _limits(xk, ytv, ybv, j, lm)
            flm, st = _inner_single(
                p, code, lm, ya, yt, x0, y0, px, py, inner_eps, min_inner, max_depth, inner_stack
            )
            if st != OK:
                return np.nan, st
            ya, yt = _limits(xk, ytv, ybv, j, rm)
            frm, st = _inner_single(
                p, code, rm, ya, yt, x0, y0, px, py, inner_eps, min_inner, max_depth, inner_stack
            )
            if st != OK:
                return np.nan, st
            sl = (im - ia) / 6.0 * (fa + 4.0 * flm + fm)
            sr = (ib - im) / 6.0 * (fm + 4.0 * frm + fb)
            err = sl + sr - s
            if depth >= min_outer and abs(err) <= 15.0 * e:
                total += sl + sr + err / 15.0
            elif depth >= max_depth:
                return np.nan, DEPTH_EXCEEDED
            else:
                if top + 2 > stack.shape[0]:
                    return np.nan, STACK_OVERFLOW
                stack[top, 0] = ia
                stack[top, 1] = im
                stack[top, 2] = fa
                stack[top, 3] = flm
                stack[top, 4] = fm
                stack[top, 5] = sl
                stack[top, 6] = 0.5 * e
                stack[top, 7] = depth + 1.0
                top += 1
                stack[top, 0] = im
                stack[top, 1] = ib
                stack[top, 2] = fm
                stack[top, 3] = frm
                stack[top, 4] = fb
                stack[top, 5] = sr
                stack[top, 6] = 0.5 * e
                stack[top, 7] = depth + 1.0
                top += 1
    return total, OK


@njit(cache=True)
def _inner_fused(p, x, ya, yb, ycen, eps0, epsy, min_depth, max_depth, stack):
    """Slice integrals of phi and (y-ycen)*phi sharing evaluations.

    -> (I0, Iy, status)
    """
    if yb <= ya:
        return 0.0, 0.0, OK
    fa = eval_phi(p, x, ya)
    fb = eval_phi(p, x, yb)
    m0 = 0.5 * (ya + yb)
    fm = eval_phi(p, x, m0)
    stack[0, 0] = ya
    stack[0, 1] = yb
    stack[0, 2] = fa
    stack[0, 3] = fm
    stack[0, 4] = fb
    stack[0, 5] = (yb - ya) / 6.0 * (fa + 4.0 * fm + fb)
    stack[0, 6] = (yb - ya) / 6.0 * (
        (ya - ycen) * fa + 4.0 * (m0 - ycen) * fm + (yb - ycen) * fb
    )
    stack[0, 7] = eps0
    stack[0, 8] = epsy
    stack[0, 9] = 0.0
    top = 1
    tot0 = 0.0
    toty = 0.0
    while top > 0:
        top -= 1
        a = stack[top, 0]
        b = stack[top, 1]
        fa = stack[top, 2]
        fm = stack[top, 3]
        fb = stack[top, 4]
        s0 = stack[top, 5]
        sy = stack[top, 6]
        e0 = stack[top, 7]
        ey = stack[top, 8]
        depth = stack[top, 9]
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = eval_phi(p, x, lm)
        frm = eval_phi(p, x, rm)
        h1 = (m - a) / 6.0
        h2 = (b - m) / 6.0
        s0l = h1 * (fa + 4.0 * flm + fm)
        s0r = h2 * (fm + 4.0 * frm + fb)
        syl = h1 * ((a - ycen) * fa + 4.0 * (lm - ycen) * flm + (m - ycen) * fm)
        syr = h2 * ((m - ycen) * fm + 4.0 * (rm - ycen) * frm + (b - ycen) * fb)
        err0 = s0l + s0r - s0
        erry = syl + syr - sy
        if depth >= min_depth and abs(err0) <= 15.0 * e0 and abs(erry) <= 15.0 * ey:
            tot0 += s0l + s0r + err0 / 15.0
            toty += syl + syr + erry / 15.0
        elif depth >= max_depth:
            return np.nan, np.nan, DEPTH_EXCEEDED
        else:
            if top + 2 > stack.shape[0]:
                return np.nan, np.nan, STACK_OVERFLOW
            stack[top, 0] = a
            stack[top, 1] = m
            stack[top, 2] = fa
            stack[top, 3] = flm
            stack[top, 4] = fm
            stack[top, 5] = s0l
            stack[top, 6] = syl
            stack[top, 7] = 0.5 * e0
            stack[top, 8] = 0.5 * ey
            stack[top, 9] = depth + 1.0
            top += 1
            stack[top, 0] = m
            stack[top, 1] = b
            stack[top, 2] = fm
            stack[top, 3] = frm
            stack[top, 4] = fb
            stack[top, 5] = s0r
            stack[top, 6] = syr
            stack[top, 7] = 0.5 * e0
            stack[top, 8] = 0.5 * ey
            stack[top, 9] = depth + 1.0
            top += 1
    return tot0, toty, OK


@njit(cache=True)
def moments_fused(
    xk, ytv, ybv, p, x0, y0,
    eps_m, eps_x, eps_y, inner_eps0, inner_epsy,
    min_outer, min_inner, max_depth,
):
    """Mass plus both first moments about (x0, y0) in one adaptive pass.

    -> (mass, mx, my, status) with mx = integral of (x-x0)*phi and my of
    (y-y0)*phi; sharing the subdivision tree costs ~1.3x one pass instead
    of 3x.
    """
    nk = xk.shape[0]
    big_w = xk[nk - 1] - xk[0]
    inner_stack = np.empty((_STACK_ROWS, 10))
    stack = np.empty((_STACK_ROWS, 15))
    mass = 0.0
    mx = 0.0
    my = 0.0
    for j in range(nk - 1):
        a = xk[j]
        b = xk[j + 1]
        if b <= a:
            continue
        share = (b - a) / big_w
        em = eps_m * share
        ex = eps_x * share
        ey = eps_y * share
        m0 = 0.5 * (a + b)
        ya, yt = _limits(xk, ytv, ybv, j, a)
        f0a, fya, st = _inner_fused(
            p, a, ya, yt, y0, inner_eps0, inner_epsy, min_inner, max_depth, inner_stack
        )
        if st != OK:
            return np.nan, np.nan, np.nan, st
        ya, yt = _limits(xk, ytv, ybv, j, m0)
        f0m, fym, st = _inner_fused(
            p, m0, ya, yt, y0, inner_eps0, inner_epsy, min_inner, max_depth, inner_stack
        )
        if st != OK:
            return np.nan, np.nan, np.nan, st
        ya, yt = _limits(xk, ytv, ybv, j, b)
        f0b, fyb, st = _inner_fused(
            p, b, ya, yt, y0, inner_eps0, inner_epsy, min_inner, max_depth, inner_stack
        )
        if st != OK:
            return np.nan, np.nan, np.nan, st

        h = (b - a) / 6.0
        stack[0, 0] = a
        stack[0, 1] = b
        stack[0, 2] = f0a
        stack[0, 3] = f0m
        stack[0, 4] = f0b
        stack[0, 5] = fya
        stack[0, 6] = fym
        stack[0, 7] = fyb
        stack[0, 8] = h * (f0a + 4.0 * f0m + f0b)
        stack[0, 9] = h * ((a - x0) * f0a + 4.0 * (m0 - x0) * f0m + (b - x0) * f0b)
        stack[0, 10] = h * (fya + 4.0 * fym + fyb)
        stack[0, 11] = em
        stack[0, 12] = ex
        stack[0, 13] = ey
        stack[0, 14] = 0.0
        top = 1
        while top > 0:
            top -= 1
            ia = stack[top, 0]
            ib = stack[top, 1]
            f0a = stack[top, 2]
            f0m = stack[top, 3]
            f0b = stack[top, 4]
            fya = stack[top, 5]
            fym = stack[top, 6]
            fyb = stack[top, 7]
            sm = stack[top, 8]
            sx = stack[top, 9]
            sy = stack[top, 10]
            em_l = stack[top, 11]
            ex_l = stack[top, 12]
            ey_l = stack[top, 13]
            depth = stack[top, 14]
            im = 0.5 * (ia + ib)
            lm = 0.5 * (ia + im)
            rm = 0.5 * (im + ib)
            ya, yt = _limits(xk, ytv, ybv, j, lm)
            f0lm, fylm, st = _inner_fused(
                p, lm, ya, yt, y0, inner_eps0, inner_epsy, min_inner, max_depth, inner_stack
            )
            if st != OK:
                return np.nan, np.nan, np.nan, st
            ya, yt = _limits(xk, ytv, ybv, j, rm)
            f0rm, fyrm, st = _inner_fused(
                p, rm, ya, yt, y0, inner_eps0, inner_epsy, min_inner, max_depth, inner_stack
            )
            if st != OK:
                return np.nan, np.nan, np.nan, st
            h1 = (im - ia) / 6.0
            h2 = (ib - im) / 6.0
            sml = h1 * (f0a + 4.0 * f0lm + f0m)
            smr = h2 * (f0m + 4.0 * f0rm + f0b)
            sxl = h1 * ((ia - x0) * f0a + 4.0 * (lm - x0) * f0lm + (im - x0) * f0m)
            sxr = h2 * ((im - x0) * f0m + 4.0 * (rm - x0) * f0rm + (ib - x0) * f0b)
            syl = h1 * (fya + 4.0 * fylm + fym)
            syr = h2 * (fym + 4.0 * fyrm + fyb)
            errm = sml + smr - sm
            errx = sxl + sxr - sx
            erry = syl + syr - sy
            if (
                depth >= min_outer
                and abs(errm) <= 15.0 * em_l
                and abs(errx) <= 15.0 * ex_l
                and abs(erry) <= 15.0 * ey_l
            ):
                mass += sml + smr + errm / 15.0
                mx += sxl + sxr + errx / 15.0
                my += syl + syr + erry / 15.0
            elif depth >= max_depth:
                return np.nan, np.nan, np.nan, DEPTH_EXCEEDED
            else:
                if top + 2 > stack.shape[0]:
                    return np.nan, np.nan, np.nan, STACK_OVERFLOW
                stack[top, 0] = ia
                stack[top, 1] = im
                stack[top, 2] = f0a
                stack[top, 3] = f0lm
                stack[top, 4] = f0m
                stack[top, 5] = fya
                stack[top, 6] = fylm
                stack[top, 7] = fym
                stack[top, 8] = sml
                stack[top, 9] = sxl
                stack[top, 10] = syl
                stack[top, 11] = 0.5 * em_l
                stack[top, 12] = 0.5 * ex_l
                stack[top, 13] = 0.5 * ey_l
                stack[top, 14] = depth + 1.0
                top += 1
                stack[top, 0] = im
                stack[top, 1] = ib
                stack[top, 2] = f0m
                stack[top, 3] = f0rm
                stack[top, 4] = f0b
                stack[top, 5] = fym
                stack[top, 6] = fyrm
                stack[top, 7] = fyb
                stack[top, 8] = smr
                stack[top, 9] = sxr
                stack[top, 10] = syr
                stack[top, 11] = 0.5 * em_l
                stack[top, 12] = 0.5 * ex_l
                stack[top, 13] = 0.5 * ey_l
                stack[top, 14] = depth + 1.0
                top += 1
    return mass, mx, my, OK


def warmup() -> None:
    """Force JIT compilation of all kernels on a trivial profile."""
    xk = np.array([0.0, 0.5, 1.0])
    yt = np.array([1.0, 1.0, 1.0])
    yb = np.array([0.0, 0.0, 0.0])
    p = np.zeros(14)
    p[8] = 1.0
    p[13] = 1.0
    coarse_single(xk, yt, yb, p, 0, 0.0, 0.0, 0.0, 0.0)
    outer_single(xk, yt, yb, p, 3, 0.0, 0.0, 0.5, 0.5, 1e-6, 1e-8, 2, 2, 30)
    moments_fused(
        xk, yt, yb, p, 0.5, 0.5, 1e-6, 1e-6, 1e-6, 1e-8, 1e-8, 2, 2, 30
    )
