"""Argument-principle root counting for transcendental characteristic functions.

The characteristic functions handled here are entire, so the number of
zeros inside a closed rectangle equals the winding number of the image of
its boundary around the origin.  Edges are sampled adaptively until every
phase increment is small, which keeps the count reliable even when a root
sits close to the contour.
"""

import numpy as np

from .errors import NumericError

_PHASE_CAP = 0.8  # max accepted phase step between adjacent samples (rad)
_MAG_CAP = 1.2  # max accepted |log| magnitude step; catches dives past a zero


def winding_number(fn, corners, density: float = 8.0, max_pass: int = 200,
                   max_points: int = 4_000_000) -> int:
    """Winding number of ``fn`` along the closed polygon through ``corners``.

    ``fn`` must accept a complex ndarray and return the complex values.
    ``density`` is the initial sample count per unit of edge length.
    Segments are split until both the phase step and the magnitude ratio
    between neighbours are small; the phase cap alone can alias over a near
    zero whose dip sits between two samples of similar argument.
    """
    pts = []
    closed = list(corners) + [corners[0]]
    for za, zb in zip(closed[:-1], closed[1:]):
        n = max(16, int(abs(zb - za) * density))
        t = np.linspace(0.0, 1.0, n, endpoint=False)
        pts.append(za + (zb - za) * t)
    z = np.concatenate(pts)
    z = np.append(z, z[0])
    v = fn(z)

    for _ in range(max_pass):
        if np.any(v == 0):
            raise NumericError("characteristic root lies on the counting contour")
        steps = np.angle(v[1:] / v[:-1])
        seglen = np.abs(z[1:] - z[:-1])
        scale = np.finfo(float).tiny + np.abs(z[1:]) + np.abs(z[:-1])
        bad = (np.abs(steps) > _PHASE_CAP) | (
            (np.abs(np.log(np.abs(v[1:] / v[:-1]))) > _MAG_CAP)
            & (seglen > 1e-13 * scale)
        )
        if not bad.any():
            total = steps.sum()
            count = int(round(total / (2.0 * np.pi)))
            if abs(total / (2.0 * np.pi) - count) > 0.05:
                raise NumericError(f"winding number not integral: {total / (2 * np.pi):.4f}")
            return count
        if z.size > max_points:
            raise NumericError("contour refinement exceeded point budget")
        idx = np.nonzero(bad)[0]
        mids = 0.5 * (z[idx] + z[idx + 1])
        vm = fn(mids)
        z = np.insert(z, idx + 1, mids)
        v = np.insert(v, idx + 1, vm)
    raise NumericError("contour refinement did not settle")


def count_right_half_roots(fn, radius: float, density: float = 8.0) -> int:
    """Zeros of ``fn`` with positive real part, given they all satisfy
    ``|lambda| <= radius`` there (use an a-priori root bound)."""
    corners = [
        complex(0.0, -radius),
        complex(radius, -radius),
        complex(radius, radius),
        complex(0.0, radius),
    ]
    return winding_number(fn, corners, density=density)


def count_rect_roots(fn, re_lo, re_hi, im_lo, im_hi, density: float = 8.0) -> int:
    """Zeros inside an arbitrary axis-aligned rectangle."""
    corners = [
        complex(re_lo, im_lo),
        complex(re_hi, im_lo),
        complex(re_hi, im_hi),
        complex(re_lo, im_hi),
    ]
    return winding_number(fn, corners, density=density)


def first_unstable_kappa(count_at, kappa_lo: float, kappa_hi: float,
                         rel_tol: float = 1e-8):
    """Bisect the smallest gain at which right-half-plane roots appear.

    ``count_at(kappa)`` returns the right-half-plane root count; it must be
    zero at ``kappa_lo`` and positive at ``kappa_hi``.  Returns the final
    bracketing pair ``(stable_side, unstable_side)``.
    """
    if count_at(kappa_lo) != 0:
        raise NumericError(f"lower bracket kappa={kappa_lo} is not stable")
    if count_at(kappa_hi) == 0:
        raise NumericError(f"upper bracket kappa={kappa_hi} has no unstable roots")
    lo, hi = kappa_lo, kappa_hi
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if count_at(mid) == 0:
            lo = mid
        else:
            hi = mid
    return lo, hi
