"""Exact proximal operator of the anchored fused penalty on a chain.

Solves, for data z in R^k and weights a, b >= 0,

    min_x  1/2 sum_i (x_i - z_i)^2
           + a * ( |x_1| + sum_{i>=2} |x_i - x_{i-1}| )
           + b * sum_i |x_i|

by dynamic programming over the derivative of the forward value
function. The derivative is a nondecreasing piecewise-linear curve whose
only vertical jumps sit at zero (from the absolute-value node terms), so
it is stored as knot lists where duplicated positions encode a jump.
Each fusion edge clips the curve to [-a, a]; the clip points are the
backtracking bounds. Everything is exact up to floating point.
"""

from __future__ import annotations


def _insert_zero_jump(xs: list, vs: list, slope_l: float, slope_r: float, b: float) -> None:
    """Add the derivative jump of b|x| at position 0, in place."""
    if b == 0.0:
        return
    # base value of the curve at 0 before the jump
    if 0.0 < xs[0]:
        v0 = vs[0] + slope_l * (0.0 - xs[0])
        left = right = -1  # all knots lie right of 0
    elif 0.0 > xs[-1]:
        v0 = vs[-1] + slope_r * (0.0 - xs[-1])
        left = right = len(xs) - 1
    else:
        left = -1
        for j, x in enumerate(xs):
            if x <= 0.0:
                left = j
            else:
                break
        right = left
        if xs[left] == 0.0:
            # walk back over an existing jump at 0: 'left' is its right copy
            first = left
            while first > 0 and xs[first - 1] == 0.0:
                first -= 1
            v_left = vs[first]
            v_right = vs[left]
            for j in range(len(xs)):
                if xs[j] < 0.0:
                    vs[j] -= b
                elif xs[j] > 0.0:
                    vs[j] += b
            for j in range(first, left + 1):
                vs[j] = vs[j] - b if j == first else vs[j] + b
            if first == left:
                xs.insert(left + 1, 0.0)
                vs.insert(left + 1, v_right + b)
                vs[first] = v_left - b
            return
        nxt = left + 1
        v0 = vs[left] + (vs[nxt] - vs[left]) * (0.0 - xs[left]) / (xs[nxt] - xs[left])
    for j in range(len(xs)):
        if xs[j] < 0.0:
            vs[j] -= b
        elif xs[j] > 0.0:
            vs[j] += b
    xs.insert(left + 1, 0.0)
    vs.insert(left + 1, v0 - b)
    xs.insert(left + 2, 0.0)
    vs.insert(left + 2, v0 + b)


def _clip(xs: list, vs: list, slope_l: float, slope_r: float, a: float):
    """Clip the curve to [-a, a]; returns (xs, vs, lo, hi) with flat tails."""
    # lower clip point: first x with value >= -a
    if vs[0] >= -a:
        if slope_l > 0.0:
            lo = xs[0] - (vs[0] + a) / slope_l
        else:
            lo = float("-inf")
    else:
        lo = None
        for j in range(1, len(xs)):
            if vs[j] >= -a:
                if xs[j] == xs[j - 1] or vs[j] == vs[j - 1]:
                    lo = xs[j]
                else:
                    lo = xs[j - 1] + (xs[j] - xs[j - 1]) * (-a - vs[j - 1]) / (vs[j] - vs[j - 1])
                break
        if lo is None:
            lo = xs[-1] + (-a - vs[-1]) / slope_r if slope_r > 0.0 else float("inf")
    # upper clip point: last x with value <= a
    if vs[-1] <= a:
        if slope_r > 0.0:
            hi = xs[-1] + (a - vs[-1]) / slope_r
        else:
            hi = float("inf")
    else:
        hi = None
        for j in range(len(xs) - 2, -1, -1):
            if vs[j] <= a:
                if xs[j] == xs[j + 1] or vs[j] == vs[j + 1]:
                    hi = xs[j]
                else:
                    hi = xs[j] + (xs[j + 1] - xs[j]) * (a - vs[j]) / (vs[j + 1] - vs[j])
                break
        if hi is None:
            hi = xs[0] + (a - vs[0]) / slope_l if slope_l > 0.0 else float("-inf")
    if hi < lo:  # a jump crosses the whole band at one point
        mid = 0.5 * (hi + lo)
        lo = hi = mid

    new_xs = [lo]
    new_vs = [-a]
    for j in range(len(xs)):
        if -a < vs[j] < a:
            new_xs.append(xs[j])
            new_vs.append(vs[j])
    new_xs.append(hi)
    new_vs.append(a)
    return new_xs, new_vs, lo, hi


def _root(xs: list, vs: list, slope_l: float, slope_r: float) -> float:
    """Position where the nondecreasing curve crosses zero."""
    if vs[0] > 0.0:
        return xs[0] - vs[0] / slope_l if slope_l > 0.0 else xs[0]
    for j in range(1, len(xs)):
        if vs[j] >= 0.0:
            if vs[j] == 0.0:
                return xs[j]
            if xs[j] == xs[j - 1] or vs[j] == vs[j - 1]:
                return xs[j]
            return xs[j - 1] + (xs[j] - xs[j - 1]) * (0.0 - vs[j - 1]) / (vs[j] - vs[j - 1])
    return xs[-1] - vs[-1] / slope_r if slope_r > 0.0 else xs[-1]


def _soft(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def chain_prox(z, a: float, b: float) -> list:
    """Exact minimizer of the anchored fused-penalty prox problem (see module docstring)."""
    k = len(z)
    if k == 0:
        return []
    if a == 0.0:
        return [_soft(float(v), b) for v in z]

    # derivative of the anchor edge a|x_1 - 0|: a jump at 0, flat tails
    xs = [0.0, 0.0]
    vs = [-a, a]
    slope_l = slope_r = 0.0
    lo_hist = []
    hi_hist = []
    for i in range(k):
        zi = float(z[i])
        for j in range(len(xs)):
            vs[j] += xs[j] - zi
        slope_l += 1.0
        slope_r += 1.0
        _insert_zero_jump(xs, vs, slope_l, slope_r, b)
        if i < k - 1:
            xs, vs, lo, hi = _clip(xs, vs, slope_l, slope_r, a)
            slope_l = slope_r = 0.0
            lo_hist.append(lo)
            hi_hist.append(hi)

    x_last = _root(xs, vs, slope_l, slope_r)
    out = [x_last]
    for i in range(k - 2, -1, -1):
        nxt = out[-1]
        out.append(min(max(nxt, lo_hist[i]), hi_hist[i]))
    out.reverse()
    return out
