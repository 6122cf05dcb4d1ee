"""Cover serialization: JSONL records, independent re-checking, OBJ meshes.

Every record carries the data needed to re-run its contraction test from
scratch.  Variables and equation sources travel in the header line; each
patch or cell line holds its frame or bounds, radii, and the certificate
numbers that were claimed at build time.  Verification rebuilds the
system from the header, repeats the test, and accepts a record only when
the fresh test passes and still supports every stored claim.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CertificationError, IntervalDomainError, LinearAlgebraError
from .expr import to_source
from .intervals import Interval, IntervalBox
from .krawczyk import krawczyk_test
from .linalg import approx_inverse
from .system import AnalyticSystem

__all__ = [
    "VerifyReport",
    "read_jsonl",
    "verify_jsonl",
    "write_graph_jsonl",
    "write_surface_jsonl",
    "write_surface_obj",
]

FORMAT_VERSION = 1

_CHECK_ERRORS = (
    CertificationError,
    IntervalDomainError,
    LinearAlgebraError,
    ValueError,
    KeyError,
    TypeError,
)


def _system_fields(system) -> dict:
    names = list(system.variables)
    return {
        "variables": names,
        "equations": [to_source(e, names) for e in system.equations],
    }


def _system_from_header(header: dict) -> AnalyticSystem:
    lines = ["variables = " + " ".join(header["variables"])]
    lines.extend(f"{eq} = 0" for eq in header["equations"])
    return AnalyticSystem.from_source("\n".join(lines) + "\n")


def _cert_fields(cert) -> dict:
    return {
        "norm_k": cert.norm_k,
        "threshold": cert.threshold,
        "margin": cert.margin,
    }


def write_surface_jsonl(run, path) -> int:
    """Write one header line plus one line per live patch; returns the count."""
    patches = run.live_patches()
    header = {
        "record": "header",
        "format_version": FORMAT_VERSION,
        "mode": "surface",
        "count": len(patches),
        "n": run.system.n,
        "d": run.system.d,
        **_system_fields(run.system),
        "rho": run.rho,
        "r_initial": run.r_initial,
        "natural": run.natural,
        "truncated": run.truncated,
        "domain": None
        if run.domain is None
        else [[p.lo, p.hi] for p in run.domain.parts],
    }
    lines = [json.dumps(header, allow_nan=False)]
    for pid, patch in patches:
        rec = {
            "record": "patch",
            "id": pid,
            "center": [float(c) for c in patch.frame.center],
            "frame_v": [[float(x) for x in row] for row in patch.frame.v],
            "frame_u": [[float(x) for x in row] for row in patch.frame.u],
            "r": patch.r,
            "r_fiber": patch.r_fiber,
            "rho": patch.rho,
            "color_tag": run.color_tags[pid],
            "truncated": run.truncated,
            "certificate": _cert_fields(patch.cert),
            "exclusions": [
                [[lo, hi] for lo, hi in region]
                for region in run.exclusions.get(pid, [])
            ],
        }
        lines.append(json.dumps(rec, allow_nan=False))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return len(patches)


def write_graph_jsonl(system, cover, path) -> int:
    """Write a graph cover as a header line plus one line per cell."""
    header = {
        "record": "header",
        "format_version": FORMAT_VERSION,
        "mode": "graph",
        "count": len(cover.cells),
        "n": system.n,
        "d": system.d,
        **_system_fields(system),
        "rho": cover.rho,
        "sheets": cover.sheets,
        "base_bounds": [[lo, hi] for lo, hi in cover.base_bounds],
    }
    lines = [json.dumps(header, allow_nan=False)]
    for k, cell in enumerate(cover.cells):
        rec = {
            "record": "cell",
            "id": k,
            "bounds": [[lo, hi] for lo, hi in cell.bounds],
            "depth": cell.depth,
            "sheet": cell.sheet,
            "fiber_center": [float(y) for y in cell.fiber_center],
            "fiber_radius": cell.fiber_radius,
            "fiber_enclosure": cell.fiber_enclosure,
            "certificate": _cert_fields(cell.cert),
        }
        lines.append(json.dumps(rec, allow_nan=False))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return len(cover.cells)


def read_jsonl(path) -> tuple[dict, list[dict]]:
    """Read a cover file back as (header, records)."""
    with open(path) as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    if not rows or rows[0].get("record") != "header":
        raise ValueError(f"{path}: first line is not a header record")
    return rows[0], rows[1:]


@dataclass
class VerifyReport:
    """Outcome of re-checking every record in a cover file."""

    ok: bool
    checked: int
    failures: list[str] = field(default_factory=list)

    def summary(self) -> str:
        status = "all certificates hold" if self.ok else "verification FAILED"
        return f"{status}: {self.checked} records checked, {len(self.failures)} failures"


def _verify_patch(system, rec: dict) -> list[str]:
    problems: list[str] = []
    label = f"patch {rec.get('id', '?')}"
    stored = rec["certificate"]
    if not float(stored["margin"]) > 0.0:
        problems.append(f"{label}: stored margin is not positive")
    try:
        v = np.asarray(rec["frame_v"], dtype=float)
        u = np.asarray(rec["frame_u"], dtype=float)
        r = float(rec["r"])
        rho = float(rec["rho"])
        gsys = system.transform(u, v, shift=[float(c) for c in rec["center"]])
        d, m = system.d, system.m
        a = approx_inverse(np.asarray(gsys.jacobian_point([0.0] * system.n))[:, d:])
        base = IntervalBox([Interval(-r, r) for _ in range(d)])
        res = krawczyk_test(gsys, base, [0.0] * m, r, a, rho)
    except _CHECK_ERRORS as exc:
        problems.append(f"{label}: re-check could not run ({exc})")
        return problems
    if not res.passed:
        problems.append(f"{label}: contraction test fails on re-run")
    elif not float(rec["r_fiber"]) >= res.norm_k:
        # the slab claim needs the fiber half-width to cover the proven
        # enclosure of the sheet around the center
        problems.append(f"{label}: stored fiber radius is below the proven bound")
    return problems


def _verify_cell(system, header: dict, rec: dict) -> list[str]:
    problems: list[str] = []
    label = f"cell {rec.get('id', '?')}"
    stored = rec["certificate"]
    if not float(stored["margin"]) > 0.0:
        problems.append(f"{label}: stored margin is not positive")
    try:
        base = IntervalBox([Interval(lo, hi) for lo, hi in rec["bounds"]])
        y = [float(c) for c in rec["fiber_center"]]
        r2 = float(rec["fiber_radius"])
        rho = float(header["rho"])
        center = base.midpoint()
        d = system.d
        a = approx_inverse(
            np.asarray(system.jacobian_point(list(center) + y))[:, d:]
        )
        res = krawczyk_test(system, base, y, r2, a, rho)
    except _CHECK_ERRORS as exc:
        problems.append(f"{label}: re-check could not run ({exc})")
        return problems
    if not res.passed:
        problems.append(f"{label}: contraction test fails on re-run")
    elif not float(rec["fiber_enclosure"]) >= res.norm_k:
        problems.append(f"{label}: stored enclosure is below the proven bound")
    return problems


def verify_jsonl(path) -> VerifyReport:
    """Re-run every certificate in a cover file against a rebuilt system.

    Nothing from the stored certificates is trusted: the system is parsed
    back from the header, the contraction test is repeated with the stored
    frame or bounds, and each record must both pass afresh and have claimed
    no more than the fresh run proves.  Raises for files whose header
    cannot be read at all; record-level problems land in the report.
    """
    failures: list[str] = []
    header, records = read_jsonl(path)
    try:
        system = _system_from_header(header)
    except KeyError as exc:
        raise ValueError(f"{path}: header is missing field {exc}") from exc
    mode = header.get("mode")
    expected = {"surface": "patch", "graph": "cell"}.get(mode)
    if expected is None:
        raise ValueError(f"{path}: unknown mode {mode!r}")
    if header.get("count") != len(records):
        failures.append(
            f"header claims {header.get('count')} records, file has {len(records)}"
        )
    for rec in records:
        if rec.get("record") != expected:
            failures.append(f"unexpected record type {rec.get('record')!r}")
            continue
        if mode == "surface":
            failures.extend(_verify_patch(system, rec))
        else:
            failures.extend(_verify_cell(system, header, rec))
    return VerifyReport(ok=not failures, checked=len(records), failures=failures)


# ---------------------------------------------------------------------------
# OBJ meshes

# vertex k has sign bits (k>>2, k>>1, k>>0) over the local axes; each face
# lists its quad corners counterclockwise seen from outside for det(V) > 0
_CUBE_FACES = (
    (4, 6, 7, 5),
    (0, 1, 3, 2),
    (2, 3, 7, 6),
    (0, 4, 5, 1),
    (1, 5, 7, 3),
    (0, 2, 6, 4),
)

_MTL_SOURCE = """newmtl seed
Kd 0.85 0.15 0.15
newmtl grown
Kd 0.62 0.62 0.62
"""


def write_surface_obj(run, path) -> int:
    """Write the live uniqueness cubes as an OBJ mesh; returns the box count.

    The starting patch is tagged with the ``seed`` material, everything
    else with ``grown``.  A sibling .mtl file provides both materials.
    """
    if run.system.n != 3:
        raise ValueError("OBJ export needs an ambient dimension of 3")
    mtl_path = os.path.splitext(path)[0] + ".mtl"
    with open(mtl_path, "w") as fh:
        fh.write(_MTL_SOURCE)
    lines = [f"mtllib {os.path.basename(mtl_path)}"]
    offset = 0
    for pid, patch in run.live_patches():
        center = np.asarray(patch.frame.center)
        v = patch.frame.v
        mirrored = float(np.linalg.det(v)) < 0.0
        lines.append(f"o patch_{pid}")
        tag = run.color_tags[pid]
        lines.append("usemtl seed" if tag == "initial" else "usemtl grown")
        for k in range(8):
            signs = np.array(
                [1.0 if k & bit else -1.0 for bit in (4, 2, 1)]
            )
            corner = center + v @ (signs * patch.r)
            lines.append("v " + " ".join(repr(float(c)) for c in corner))
        for a, b, c, d in _CUBE_FACES:
            tris = ((a, b, c), (a, c, d))
            for t0, t1, t2 in tris:
                if mirrored:
                    t1, t2 = t2, t1
                lines.append(f"f {offset + t0 + 1} {offset + t1 + 1} {offset + t2 + 1}")
        offset += 8
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return offset // 8
