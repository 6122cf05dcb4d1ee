"""Interval Krawczyk tests over box slices of an analytic system.

Two verifiers live here.  ``krawczyk_test`` proves that over a whole base
box the system has, for every base point, a unique fiber solution within
``rho * fiber_radius`` of the fiber center: that is the certificate every
exported patch carries.  ``refine_fiber_root`` is its square cousin for a
single base point, shrinking a bracket around one fiber root and proving
the root exists; its output enclosures feed the coverage bookkeeping, so
they are rigorous rather than best-effort.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CertificationError, RefinementStalledError
from .intervals import (
    Interval,
    IntervalBox,
    IntervalMatrix,
    add_up,
    div_up,
    mul_down,
    sub_down,
)
from .linalg import approx_inverse

__all__ = ["KrawczykResult", "krawczyk_test", "refine_fiber_root", "graph_lipschitz"]


@dataclass(frozen=True, slots=True)
class KrawczykResult:
    """Outcome of one contraction test, all bounds outward rounded."""

    passed: bool
    norm_k: float  # upper bound on |K|_inf
    threshold: float  # lower bound on rho * fiber_radius
    margin: float  # lower bound on threshold - |K|_inf; positive iff passed
    k_box: IntervalBox


def krawczyk_test(
    system,
    base_box: IntervalBox,
    fiber_center: Sequence[float],
    fiber_radius: float,
    a: np.ndarray,
    rho: float,
) -> KrawczykResult:
    """Contraction test for the fiber map over a full base box.

    K = -A F(I, c) + (Id - A Jsub(I, J)) (J - c) with J the fiber box of
    radius ``fiber_radius`` around ``fiber_center``.  When |K|_inf is
    strictly below rho * fiber_radius (comparison done on outward-rounded
    floats), every base point in I has exactly one fiber solution in J,
    and that solution lies within rho * fiber_radius of the center.
    """
    m = system.m
    fiber_center = [float(c) for c in fiber_center]
    if len(fiber_center) != m or len(base_box) != system.d:
        raise ValueError("base/fiber split does not match the system")
    if not (0.0 < rho <= 1.0):
        raise ValueError(f"rho must be in (0, 1], got {rho}")
    if not fiber_radius > 0.0:
        raise ValueError(f"fiber radius must be positive, got {fiber_radius}")
    fiber_box = IntervalBox.from_center_radii(fiber_center, [fiber_radius] * m)

    ia = IntervalMatrix.from_floats(a)
    fval = _slice_value_enclosure(system, base_box, fiber_center)
    first = ia.matvec(fval)
    mid = IntervalMatrix.identity(m) - ia.matmul(
        system.jacobian_sub_box(base_box, fiber_box)
    )
    second = mid.matvec(fiber_box.sub_point(fiber_center))
    k_box = IntervalBox([s - f for s, f in zip(second.parts, first.parts)])

    norm_k = k_box.norm_up()
    threshold = mul_down(rho, fiber_radius)
    margin = sub_down(threshold, norm_k)
    return KrawczykResult(
        passed=norm_k < threshold,
        norm_k=norm_k,
        threshold=threshold,
        margin=margin,
        k_box=k_box,
    )


def _slice_value_enclosure(
    system, base_box: IntervalBox, fiber_center: Sequence[float]
) -> IntervalBox:
    """Enclosure of {F(b, c) : b in base_box} at the fixed fiber center.

    Intersects the natural extension with a mean-value form around the
    base center.  The natural form is tight when the frame happens to be
    axis aligned; the mean-value form survives rotated frames, where the
    natural evaluation wraps the tilted slice in a far larger box.  Both
    enclose the true range, so the intersection does too.
    """
    fiber_point = IntervalBox.point(fiber_center)
    direct = system.eval_box(base_box.concat(fiber_point))
    base_mid = base_box.midpoint()
    thin = system.eval_box(IntervalBox.point(base_mid).concat(fiber_point))
    jb = system.jacobian_base_box(base_box, fiber_point)
    spread = jb.matvec(base_box.sub_point(base_mid))
    mean_value = IntervalBox([t + s for t, s in zip(thin.parts, spread.parts)])
    out = direct.intersect(mean_value)
    if out.is_empty:
        # both are enclosures of one nonempty set; empty intersection can
        # only come from a contract violation upstream
        raise CertificationError("inconsistent slice enclosures")
    return out


# ---------------------------------------------------------------------------
# single-slice refinement


def _slice_point_box(base_point: Sequence[float], fiber: IntervalBox) -> IntervalBox:
    return IntervalBox.point(base_point).concat(fiber)


def refine_fiber_root(
    system,
    base_point: Sequence[float],
    fiber_box: IntervalBox,
    accuracy: float,
    max_iter: int = 60,
) -> tuple[list[float], IntervalBox]:
    """Shrink a bracket around the fiber root above one base point.

    Returns (center, enclosure) where the enclosure provably contains a
    root of the slice map y -> F(base_point, y) and that root is unique in
    the original bracket.  The enclosure only ever shrinks, so any root of
    the bracket survives into the result.  Raises RefinementStalledError
    when existence cannot be established or the bracket empties out.
    """
    m = system.m
    base_point = [float(x) for x in base_point]
    if len(base_point) != system.d or len(fiber_box) != m:
        raise ValueError("base/fiber split does not match the system")
    if fiber_box.is_empty:
        raise ValueError("empty starting bracket")

    scale = max(1.0, fiber_box.norm_up())
    accuracy = max(float(accuracy), 1e-13 * scale)

    current = fiber_box
    proven = False
    prev_radius = None
    for _ in range(max_iter):
        center = current.midpoint()
        a = approx_inverse(
            np.asarray(system.jacobian_point(base_point + center))[:, system.d :]
        )
        ia = IntervalMatrix.from_floats(a)
        fval = system.eval_box(_slice_point_box(base_point, IntervalBox.point(center)))
        newton = ia.matvec(fval)
        jsub = system.jacobian_sub_box(IntervalBox.point(base_point), current)
        mid = IntervalMatrix.identity(m) - ia.matmul(jsub)
        spread = mid.matvec(current.sub_point(center))
        k_parts = [
            Interval.point(c) - nw + sp
            for c, nw, sp in zip(center, newton.parts, spread.parts)
        ]
        k_box = IntervalBox(k_parts)

        if all(cur.strictly_contains(k) for cur, k in zip(current.parts, k_box.parts)):
            proven = True
        nxt = current.intersect(k_box)
        if nxt.is_empty:
            raise RefinementStalledError(
                "fiber bracket emptied out; no zero on this slice"
            )
        current = nxt
        radius = max(current.radii_up())
        if proven and radius <= accuracy:
            return current.midpoint(), current
        if prev_radius is not None and radius > 0.97 * prev_radius:
            break
        prev_radius = radius

    if proven:
        # converged as far as float precision allows; the enclosure is valid
        if max(current.radii_up()) <= 64.0 * accuracy:
            return current.midpoint(), current
        raise RefinementStalledError(
            f"fiber enclosure stalled at radius {max(current.radii_up()):.3e}"
        )
    raise RefinementStalledError("could not establish a fiber root in the bracket")


# ---------------------------------------------------------------------------
# implicit-graph slope bound


def graph_lipschitz(
    system,
    base_box: IntervalBox,
    fiber_box: IntervalBox,
    a: np.ndarray,
) -> float:
    """Upper bound on the inf-norm slope of the implicit fiber graph.

    Over base_box x fiber_box the implicit function y(x) satisfies
    dy/dx = -Jy^{-1} Jx, and with A approximately inverting Jy,
    |Jy^{-1} Jx| <= |A Jx| / (1 - |Id - A Jy|) whenever the denominator
    defect stays below one.  All norms are inf-norms rounded up.
    """
    ia = IntervalMatrix.from_floats(a)
    num = ia.matmul(system.jacobian_base_box(base_box, fiber_box)).norm_inf_up()
    defect = (
        IntervalMatrix.identity(system.m)
        - ia.matmul(system.jacobian_sub_box(base_box, fiber_box))
    ).norm_inf_up()
    if not defect < 1.0:
        raise CertificationError(
            f"fiber Jacobian not dominated (defect {defect:.3e}); box too large"
        )
    return div_up(num, -add_up(defect, -1.0))
