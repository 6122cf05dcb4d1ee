"""Tangent-aligned coordinate frames and oriented box geometry.

A frame at a point z is an orthogonal matrix V whose first d columns span
the (approximate) tangent plane of the zero set and whose last m columns
span the row space of the Jacobian, plus the matching equation mixer U.
Frames are float data chosen heuristically; every rigorous statement made
in frame coordinates goes through the interval enclosure of V^{-1} so the
rounding in V itself is accounted for.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .intervals import Interval, IntervalBox, IntervalMatrix
from .linalg import orthogonal_inverse_enclosure, svd_factor

__all__ = [
    "CoordinateFrame",
    "OrientedBox",
    "tangent_align",
    "obox_contains",
    "obox_disjoint",
]


@dataclass(frozen=True, eq=False, slots=True)
class CoordinateFrame:
    """Affine chart x = center + V z with tangent coordinates first."""

    center: tuple
    v: np.ndarray
    u: np.ndarray
    sigma: tuple
    v_inv: IntervalMatrix

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def d(self) -> int:
        return self.n - len(self.sigma)

    def to_world(self, z) -> np.ndarray:
        return np.asarray(self.center) + self.v @ np.asarray(z, dtype=float)

    def world_to_local_box(self, world_box: IntervalBox) -> IntervalBox:
        """Rigorous enclosure of V^{-1} (w - center) over the given box."""
        delta = world_box.sub_point(self.center)
        return self.v_inv.matvec(delta)


def tangent_align(system, z_hat) -> tuple[CoordinateFrame, "object"]:
    """Build the tangent frame at z_hat and the system rewritten in it.

    The returned system G(z) = U^T F(z_hat + V z) has, at z = 0, a Jacobian
    of the form [0 | diag(sigma)] up to float noise: base directions first,
    fiber directions carrying the singular values.
    """
    z_hat = [float(x) for x in z_hat]
    jac = system.jacobian_point(z_hat)
    u, sigma, vt = svd_factor(jac)
    m = system.m
    # kernel columns (tangent) first, then row-space columns
    v = np.hstack([vt[m:].T, vt[:m].T])
    frame = CoordinateFrame(
        center=tuple(z_hat),
        v=v,
        u=u,
        sigma=tuple(float(s) for s in sigma),
        v_inv=orthogonal_inverse_enclosure(v),
    )
    return frame, system.transform(u, v, shift=z_hat)


@dataclass(frozen=True, eq=False, slots=True)
class OrientedBox:
    """World-space box {center + V z : |z_i| <= radii_i} with cached V^{-1}.

    Radii are per-axis, ordered like the frame columns (base axes first).
    """

    center: tuple
    v: np.ndarray
    radii: tuple
    v_inv: IntervalMatrix = field(repr=False)
    # rigorous axis-aligned hull, ((lo, hi), ...), for fast disjointness
    aabb: tuple = field(repr=False)

    @staticmethod
    def make(center, v, radii, v_inv: IntervalMatrix | None = None) -> "OrientedBox":
        v = np.asarray(v, dtype=float)
        if v_inv is None:
            v_inv = orthogonal_inverse_enclosure(v)
        center = tuple(float(c) for c in center)
        radii = tuple(float(r) for r in radii)
        local = IntervalBox([Interval(-r, r) for r in radii])
        spread = IntervalMatrix.from_floats(v).matvec(local)
        aabb = tuple(
            ((Interval.point(c) + s).lo, (Interval.point(c) + s).hi)
            for c, s in zip(center, spread.parts)
        )
        return OrientedBox(
            center=center, v=v, radii=radii, v_inv=v_inv, aabb=aabb
        )

    @property
    def n(self) -> int:
        return len(self.center)

    def local_box(self) -> IntervalBox:
        return IntervalBox([Interval(-r, r) for r in self.radii])

    def world_hull(self) -> IntervalBox:
        spread = IntervalMatrix.from_floats(self.v).matvec(self.local_box())
        return IntervalBox(
            [Interval.point(c) + s for c, s in zip(self.center, spread.parts)]
        )

    def local_coords_enclosure(self, world_point) -> IntervalBox:
        delta = IntervalBox.point(world_point).sub_point(self.center)
        return self.v_inv.matvec(delta)

    def contains_world_point(self, world_point) -> bool:
        """True only if the point is provably inside (conservative)."""
        local = self.local_coords_enclosure(world_point)
        return all(
            -r <= p.lo and p.hi <= r for r, p in zip(self.radii, local.parts)
        )


def _inner_local_image(outer: OrientedBox, inner: OrientedBox) -> IntervalBox:
    """Enclosure of inner's region expressed in outer's local coordinates."""
    mixed = outer.v_inv.matmul(IntervalMatrix.from_floats(inner.v))
    spread = mixed.matvec(inner.local_box())
    shifted = IntervalBox.point(inner.center).sub_point(outer.center)
    offset = outer.v_inv.matvec(shifted)
    return IntervalBox([o + s for o, s in zip(offset.parts, spread.parts)])


def obox_contains(
    outer: OrientedBox,
    inner: OrientedBox,
    skip_axis: int | None = None,
    axes: tuple[int, ...] | None = None,
) -> bool:
    """True only if inner is provably a subset of outer.

    ``skip_axis`` exempts one outer coordinate from the check (used when a
    plane constraint pins that coordinate separately); ``axes`` restricts
    the check to the listed outer coordinates.
    """
    image = _inner_local_image(outer, inner)
    idx = range(outer.n) if axes is None else axes
    for i in idx:
        if i == skip_axis:
            continue
        p = image.parts[i]
        r = outer.radii[i]
        if not (-r <= p.lo and p.hi <= r):
            return False
    return True


def _axis_projection(w: np.ndarray, box: OrientedBox) -> Interval:
    """Rigorous interval enclosing {w . x : x in box}."""
    iw = IntervalMatrix.from_floats([w])
    center = iw.matvec(IntervalBox.point(box.center)).parts[0]
    coeffs = iw.matmul(IntervalMatrix.from_floats(box.v)).rows[0]
    total = center
    for c, r in zip(coeffs, box.radii):
        total = total + c * Interval(-r, r)
    return total


def obox_disjoint(a: OrientedBox, b: OrientedBox) -> bool:
    """True only if the two boxes are provably disjoint (conservative).

    Separating-axis candidates: world axes (via the cached hulls), both
    frames' columns, and in dimension 3 all 9 pairwise cross products.
    Candidate axes are float guesses, but each projection is an interval
    enclosure, so a reported separation is always genuine.
    """
    for (alo, ahi), (blo, bhi) in zip(a.aabb, b.aabb):
        if ahi < blo or bhi < alo:
            return True
    axes = [a.v[:, j] for j in range(a.n)] + [b.v[:, j] for j in range(b.n)]
    if a.n == 3:
        for i in range(3):
            for j in range(3):
                w = np.cross(a.v[:, i], b.v[:, j])
                if np.max(np.abs(w)) > 1e-12:
                    axes.append(w)
    for w in axes:
        pa = _axis_projection(np.asarray(w, dtype=float), a)
        pb = _axis_projection(np.asarray(w, dtype=float), b)
        if pa.hi < pb.lo or pb.hi < pa.lo:
            return True
    return False
