"""Certified surface patches and the same-sheet / disjoint-sheet predicates.

A patch is a tangent-aligned box certificate: over the base square of
half-width r, the system has exactly one fiber solution per base point
within r (uniqueness) and that solution stays within rho * r of the
center plane (enclosure).  ``inclusion_test`` proves two overlapping
patches describe the same sheet by walking a certified point of one into
the other's slab; ``component_test`` settles overlap questions in both
directions, refining the slabs until the pieces either provably meet or
provably miss each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    CertificationError,
    LinearAlgebraError,
    RefinementStalledError,
)
from .frames import CoordinateFrame, OrientedBox, obox_disjoint, tangent_align
from .graph_cover import cover_graph
from .intervals import Interval, IntervalBox, IntervalMatrix, add_up, mul_up
from .krawczyk import KrawczykResult, krawczyk_test, refine_fiber_root
from .linalg import approx_inverse

__all__ = [
    "CertifiedPatch",
    "SlabPiece",
    "newton_polish",
    "certify_box",
    "inclusion_test",
    "component_test",
]

_R_FLOOR_FACTOR = 2.0**-40


@dataclass(frozen=True, eq=False, slots=True)
class CertifiedPatch:
    """Tangent-aligned certified box around one surface point."""

    frame: CoordinateFrame
    aligned: object  # the system rewritten in frame coordinates
    a: np.ndarray
    r: float
    r_fiber: float  # upper bound on rho * r
    rho: float
    cert: KrawczykResult

    @property
    def n(self) -> int:
        return self.frame.n

    @property
    def d(self) -> int:
        return self.frame.d

    @property
    def m(self) -> int:
        return self.n - self.d

    def enclosure_box(self) -> OrientedBox:
        """Thin slab provably containing the sheet over the base square."""
        return OrientedBox.make(
            self.frame.center,
            self.frame.v,
            (self.r,) * self.d + (self.r_fiber,) * self.m,
            v_inv=self.frame.v_inv,
        )

    def uniqueness_box(self) -> OrientedBox:
        """Full box in which the sheet is the only solution per base point."""
        return OrientedBox.make(
            self.frame.center,
            self.frame.v,
            (self.r,) * (self.d + self.m),
            v_inv=self.frame.v_inv,
        )


def newton_polish(
    system, start, *, tol: float = 1e-12, max_iter: int = 50
) -> list[float]:
    """Least-squares Newton onto the zero set; raises if it does not land."""
    x = np.asarray([float(v) for v in start], dtype=float)
    if x.shape != (system.n,):
        raise ValueError(f"start point has {x.shape[0]} coords, system has {system.n}")
    scale = max(1.0, float(np.max(np.abs(x))))
    best = None
    for _ in range(max_iter):
        f = system.eval_point(list(x))
        resid = float(np.max(np.abs(f)))
        if not np.isfinite(resid):
            break
        if best is None or resid < best:
            best = resid
        if resid <= tol * scale:
            return [float(v) for v in x]
        jac = system.jacobian_point(list(x))
        step, *_ = np.linalg.lstsq(jac, f, rcond=None)
        x = x - step
        if not np.all(np.isfinite(x)):
            break
    raise CertificationError(
        f"start point did not converge onto the zero set (residual {best})"
    )


def certify_box(
    system,
    start,
    r_initial: float,
    rho: float,
    *,
    polish: bool = True,
) -> CertifiedPatch:
    """Certify a tangent-aligned box at (near) the given surface point.

    Halves the base radius until the contraction test passes; gives up
    with CertificationError once the radius drops below 2^-40 of the
    starting value.
    """
    if not r_initial > 0.0:
        raise ValueError(f"r_initial must be positive, got {r_initial}")
    z = newton_polish(system, start) if polish else [float(v) for v in start]
    frame, gsys = tangent_align(system, z)
    d, m = system.d, system.m
    a = approx_inverse(gsys.jacobian_point([0.0] * system.n)[:, d:])
    zero_fiber = [0.0] * m
    r = float(r_initial)
    floor = r_initial * _R_FLOOR_FACTOR
    last = None
    while r > floor:
        base = IntervalBox([Interval(-r, r) for _ in range(d)])
        res = krawczyk_test(gsys, base, zero_fiber, r, a, rho)
        if res.passed:
            return CertifiedPatch(
                frame=frame,
                aligned=gsys,
                a=a,
                r=r,
                r_fiber=mul_up(rho, r),
                rho=float(rho),
                cert=res,
            )
        last = res
        r = 0.5 * r
    raise CertificationError(
        f"no certifiable radius above {floor:.3e} at {tuple(z)}"
        + (f" (last |K| = {last.norm_k:.3e})" if last else "")
    )


# ---------------------------------------------------------------------------
# same-sheet and disjointness predicates


def _world_point_box(frame: CoordinateFrame, local_box: IntervalBox) -> IntervalBox:
    spread = IntervalMatrix.from_floats(frame.v).matvec(local_box)
    return IntervalBox(
        [Interval.point(c) + s for c, s in zip(frame.center, spread.parts)]
    )


def _base_overlap_in(a: CertifiedPatch, b: CertifiedPatch) -> list[Interval] | None:
    """Overlap of b's slab with a's base square, in a's base coordinates."""
    image = a.frame.world_to_local_box(b.enclosure_box().world_hull())
    out = []
    for k in range(a.d):
        piece = image.parts[k].intersect(Interval(-a.r, a.r))
        if piece.is_empty:
            return None
        out.append(piece)
    return out


def inclusion_test(a: CertifiedPatch, b: CertifiedPatch) -> bool:
    """True only if a's sheet provably passes through b's slab.

    Picks base points of a inside the overlap with b, encloses a's sheet
    point there, and checks the enclosure lands inside b's slab.  Inside
    the slab it must coincide with b's unique sheet, so True means the two
    patches carry the same sheet.  False is silence, not a disproof.

    The first probe is the projection of b's center (a point on b's sheet)
    clamped into the overlap: for genuinely overlapping slabs it sits deep
    inside b's footprint, where curvature has the least room to push a's
    sheet enclosure out of b's thin slab.
    """
    overlap = _base_overlap_in(a, b)
    if overlap is None:
        return False
    b_center_in_a = a.frame.world_to_local_box(IntervalBox.point(b.frame.center))
    projected = [
        min(max(part.midpoint(), piece.lo), piece.hi)
        for part, piece in zip(b_center_in_a.parts, overlap)
    ]
    midpoint = [piece.midpoint() for piece in overlap]
    probes = [projected] if projected == midpoint else [projected, midpoint]
    accuracy = max(b.r_fiber * b.r_fiber, 1e-14 * max(1.0, b.r))
    bounds = (b.r,) * b.d + (b.r_fiber,) * b.m
    for x_hat in probes:
        try:
            _, encl = refine_fiber_root(
                a.aligned,
                x_hat,
                IntervalBox([Interval(-a.r_fiber, a.r_fiber)] * a.m),
                accuracy,
            )
        except (RefinementStalledError, LinearAlgebraError, CertificationError):
            continue
        world = _world_point_box(a.frame, IntervalBox.point(x_hat).concat(encl))
        local_b = b.frame.world_to_local_box(world)
        if all(-r <= p.lo and p.hi <= r for p, r in zip(local_b.parts, bounds)):
            return True
    return False


@dataclass(frozen=True, eq=False, slots=True)
class SlabPiece:
    """One piece of a patch's refined sheet cover.

    ``rect`` is the piece's base rectangle in the owning patch's frame;
    ``box`` is the world oriented slab certified to contain the sheet over
    that rectangle.
    """

    box: OrientedBox
    rect: tuple
    fiber_center: tuple

    @property
    def half_width(self) -> float:
        return max((hi - lo) / 2.0 for lo, hi in self.rect)


def _whole_slab_piece(patch: CertifiedPatch) -> SlabPiece:
    return SlabPiece(
        box=patch.enclosure_box(),
        rect=((-patch.r, patch.r),) * patch.d,
        fiber_center=(0.0,) * patch.m,
    )


def _split_piece(patch: CertifiedPatch, piece: SlabPiece) -> list[SlabPiece] | None:
    """Replace a piece by a finer certified cover of its own rectangle.

    Slab thickness scales with cell size through the K-norm enclosures, so
    halving the cell-radius cap tightens the pieces; rho stays at the patch
    value to keep per-cell certification shallow.  None when the local
    cover cannot be built (caller keeps the coarse piece).
    """
    cap = piece.half_width / 2.0
    try:
        cover = cover_graph(
            patch.aligned,
            list(piece.rect),
            IntervalBox([Interval(-patch.r, patch.r)] * patch.m),
            patch.rho,
            max_cell_radius=cap,
            max_cells=4096,
            max_depth=60,
        )
    except (CertificationError, LinearAlgebraError):
        return None
    out = []
    for cell in cover.cells:
        local_center = list(cell.center) + list(cell.fiber_center)
        radii = list(cell.half_widths) + [cell.fiber_enclosure] * patch.m
        out.append(
            SlabPiece(
                box=_local_obox_to_world(patch.frame, local_center, radii),
                rect=cell.bounds,
                fiber_center=cell.fiber_center,
            )
        )
    return out


def _local_obox_to_world(
    frame: CoordinateFrame, local_center, radii
) -> OrientedBox:
    """Oriented box at a frame-local center, float rounding absorbed.

    The world center is rounded to floats; the radii grow by a rigorous
    bound on that rounding displacement so the box still covers the exact
    region.
    """
    exact = _world_point_box(frame, IntervalBox.point(local_center))
    center = exact.midpoint()
    margin = 0.0
    for c, p in zip(center, exact.parts):
        margin = max(margin, add_up(p.hi, -c), add_up(c, -p.lo))
    return OrientedBox.make(
        center,
        frame.v,
        [add_up(float(r), margin) for r in radii],
        v_inv=frame.v_inv,
    )


def _witness_shared_point(
    src: CertifiedPatch, dst: CertifiedPatch, piece: SlabPiece
) -> bool:
    """Certify a sheet point of src above a piece center inside dst's slab."""
    x_hat = [Interval(lo, hi).midpoint() for lo, hi in piece.rect]
    try:
        _, encl = refine_fiber_root(
            src.aligned,
            x_hat,
            IntervalBox([Interval(-src.r, src.r)] * src.m),
            max(dst.r_fiber * dst.r_fiber, 1e-14 * max(1.0, dst.r)),
        )
    except (RefinementStalledError, LinearAlgebraError, CertificationError):
        return False
    world = _world_point_box(src.frame, IntervalBox.point(x_hat).concat(encl))
    local = dst.frame.world_to_local_box(world)
    bounds = (dst.r,) * dst.d + (dst.r_fiber,) * dst.m
    return all(-r <= p.lo and p.hi <= r for p, r in zip(local.parts, bounds))


_MAX_PIECES = 20_000


def component_test(
    a: CertifiedPatch, b: CertifiedPatch, *, max_rounds: int = 30
) -> tuple[bool, list[OrientedBox], list[OrientedBox]]:
    """Decide whether two patches carry the same sheet where they overlap.

    Returns (verdict, refinement_a, refinement_b).  True: a certified
    point witnesses the sheets coinciding.  False: the two sheet pieces
    are provably disjoint, and each refinement list is a certified cover
    of its patch's sheet with every cross pair of pieces provably disjoint
    (so the caller may replace a patch by its refinement).  Raises
    CertificationError when neither can be shown within the round budget.

    Each round refines only contested pieces (those still touching a piece
    of the other patch), so the covers carry mixed resolutions and the
    work stays proportional to the contested area.
    """
    pieces_a = [_whole_slab_piece(a)]
    pieces_b = [_whole_slab_piece(b)]
    boxes = lambda pieces: [p.box for p in pieces]  # noqa: E731

    if obox_disjoint(pieces_a[0].box, pieces_b[0].box):
        return False, boxes(pieces_a), boxes(pieces_b)
    if inclusion_test(a, b) or inclusion_test(b, a):
        return True, boxes(pieces_a), boxes(pieces_b)

    for _ in range(max_rounds):
        contested = [
            (pa, pb)
            for pa in pieces_a
            for pb in pieces_b
            if not obox_disjoint(pa.box, pb.box)
        ]
        if not contested:
            return False, boxes(pieces_a), boxes(pieces_b)
        # alternate sides when probing for a shared certified point
        for pa, pb in contested[:8]:
            if _witness_shared_point(a, b, pa) or _witness_shared_point(
                b, a, pb
            ):
                return True, boxes(pieces_a), boxes(pieces_b)
        marked_a = {id(pa) for pa, _ in contested}
        marked_b = {id(pb) for _, pb in contested}
        progressed = False
        for pieces, marked, patch in (
            (pieces_a, marked_a, a),
            (pieces_b, marked_b, b),
        ):
            replacement: list[SlabPiece] = []
            for piece in pieces:
                if id(piece) not in marked:
                    replacement.append(piece)
                    continue
                finer = _split_piece(patch, piece)
                if finer is None:
                    replacement.append(piece)
                else:
                    replacement.extend(finer)
                    progressed = True
            pieces[:] = replacement
        if not progressed:
            break
        if len(pieces_a) + len(pieces_b) > _MAX_PIECES:
            break
    raise CertificationError(
        f"component question between patches at {a.frame.center} and"
        f" {b.frame.center} undecided after {max_rounds} rounds"
    )
