"""Line-oriented mesh text format (see docs/mesh_format.md for the grammar).

    vemmesh <dim> <k>
    vertex <id> <x> <y> [<z>]
    curve <id> arc <cx> <cy> <r> <a0> <a1>
    curve <id> polyline <x0> <y0> <x1> <y1> ...
    surface <id> sphere <cx> <cy> <cz> <r>
    elem2d <id> <v0> <v1> ...
    edgecurve <local-edge-index> <curve-id>      (attaches to the preceding elem2d)
    face <id> <v0> <v1> ...
    elem3d <id> <f0> <f1> ...
    facesurface <local-face-index> <surface-id>  (attaches to the preceding elem3d)
    btag edge <va> <vb> <dirichlet|neumann>
    btag face <face-id> <dirichlet|neumann>

Unknown records are rejected.  The k field in the header is a placeholder
recording the degree the mesh was produced for; the solver takes its own.
"""
from __future__ import annotations

import numpy as np

from .curves import Curve
from .mesh import DIRICHLET, NEUMANN, Element2D, Element3D, Mesh
from .polyhedron import SpherePatch


class MeshFormatError(ValueError):
    pass


def read_mesh(path) -> Mesh:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_mesh(fh.read())


def parse_mesh(text: str) -> Mesh:
    dim = None
    vertex_ids: dict[int, int] = {}
    vertices: list[list[float]] = []
    curves: dict[int, Curve] = {}
    surfaces: dict[int, SpherePatch] = {}
    faces: dict[int, tuple[int, ...]] = {}
    elements: list = []
    tags: dict = {}
    last_elem = None

    def vref(tok: str) -> int:
        vid = int(tok)
        if vid not in vertex_ids:
            raise MeshFormatError(f"unknown vertex id {vid}")
        return vertex_ids[vid]

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0]
        try:
            if kind == "vemmesh":
                dim = int(tok[1])
                if dim not in (2, 3):
                    raise MeshFormatError(f"unsupported dimension {dim}")
            elif kind == "vertex":
                vid = int(tok[1])
                coords = [float(x) for x in tok[2:]]
                if dim is None or len(coords) != dim:
                    raise MeshFormatError("vertex before header or wrong coordinate count")
                vertex_ids[vid] = len(vertices)
                vertices.append(coords)
            elif kind == "curve":
                cid = int(tok[1])
                if tok[2] == "arc":
                    cx, cy, r, a0, a1 = (float(x) for x in tok[3:8])
                    curves[cid] = Curve.arc((cx, cy), r, a0, a1)
                elif tok[2] == "polyline":
                    vals = [float(x) for x in tok[3:]]
                    curves[cid] = Curve.polyline(np.asarray(vals).reshape(-1, 2))
                else:
                    raise MeshFormatError(f"unknown curve kind {tok[2]!r}")
            elif kind == "surface":
                sid = int(tok[1])
                if tok[2] != "sphere":
                    raise MeshFormatError(f"unknown surface kind {tok[2]!r}")
                cx, cy, cz, r = (float(x) for x in tok[3:7])
                surfaces[sid] = SpherePatch((cx, cy, cz), r)
            elif kind == "elem2d":
                el = Element2D(tuple(vref(t) for t in tok[2:]))
                elements.append(el)
                last_elem = el
            elif kind == "edgecurve":
                if not isinstance(last_elem, Element2D):
                    raise MeshFormatError("edgecurve without a preceding elem2d")
                idx, cid = int(tok[1]), int(tok[2])
                a, b = last_elem.edge_vertices(idx)
                curve = curves[cid]
                if not curve.matches_endpoints(vertices[a], vertices[b]):
                    curve = curve.reversed()
                last_elem.curves[idx] = curve
            elif kind == "face":
                faces[int(tok[1])] = tuple(vref(t) for t in tok[2:])
            elif kind == "elem3d":
                el = Element3D([faces[int(t)] for t in tok[2:]])
                el._face_ids = [int(t) for t in tok[2:]]
                elements.append(el)
                last_elem = el
            elif kind == "facesurface":
                if not isinstance(last_elem, Element3D):
                    raise MeshFormatError("facesurface without a preceding elem3d")
                last_elem.curved_face = int(tok[1])
                last_elem.sphere = surfaces[int(tok[2])]
            elif kind == "btag":
                tag = tok[-1]
                if tag not in (DIRICHLET, NEUMANN):
                    raise MeshFormatError(f"unknown boundary tag {tag!r}")
                if tok[1] == "edge":
                    key = tuple(sorted((vref(tok[2]), vref(tok[3]))))
                elif tok[1] == "face":
                    key = tuple(sorted(faces[int(tok[2])]))
                else:
                    raise MeshFormatError(f"unknown btag entity {tok[1]!r}")
                tags[key] = tag
            else:
                raise MeshFormatError(f"unknown record {kind!r}")
        except MeshFormatError:
            raise
        except Exception as exc:
            raise MeshFormatError(f"line {ln}: cannot parse {raw!r}: {exc}") from exc

    if dim is None:
        raise MeshFormatError("missing vemmesh header")
    return Mesh(dim, np.asarray(vertices), elements, tags)


def write_mesh(mesh: Mesh, path, k: int = 1) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_mesh(mesh, k))


def format_mesh(mesh: Mesh, k: int = 1) -> str:
    lines = [f"vemmesh {mesh.dim} {k}"]
    for i, v in enumerate(mesh.vertices):
        coords = " ".join(repr(float(x)) for x in v)
        lines.append(f"vertex {i} {coords}")
    if mesh.dim == 2:
        curve_id = 0
        curve_lines = []
        elem_lines = []
        for eid, el in enumerate(mesh.elements):
            if el.fem:
                raise MeshFormatError("ribbon (fem) cells are built programmatically, not serialized")
            elem_lines.append(f"elem2d {eid} " + " ".join(str(v) for v in el.vertex_ids))
            for li, c in el.curves.items():
                if c.kind != "arc":
                    raise MeshFormatError("only arc curves are serialized")
                curve_lines.append(
                    f"curve {curve_id} arc {c.center[0]!r} {c.center[1]!r} "
                    f"{c.radius!r} {c.angle0!r} {c.angle1!r}")
                elem_lines.append(f"edgecurve {li} {curve_id}")
                curve_id += 1
        lines += curve_lines + elem_lines
        for (a, b), tag in sorted(mesh.boundary_tags.items()):
            lines.append(f"btag edge {a} {b} {tag}")
    else:
        face_ids: dict[tuple, int] = {}
        face_lines = []
        elem_lines = []
        surf_lines = []
        surf_ids: dict[tuple, int] = {}
        for eid, el in enumerate(mesh.elements):
            fids = []
            for i, f in enumerate(el.faces):
                key = tuple(sorted(f))
                if key not in face_ids:
                    face_ids[key] = len(face_ids)
                    face_lines.append(f"face {face_ids[key]} " + " ".join(str(v) for v in f))
                fids.append(face_ids[key])
            elem_lines.append(f"elem3d {eid} " + " ".join(str(f) for f in fids))
            if el.curved_face is not None and el.sphere is not None:
                skey = (tuple(el.sphere.center), el.sphere.radius)
                if skey not in surf_ids:
                    surf_ids[skey] = len(surf_ids)
                    c = el.sphere.center
                    surf_lines.append(
                        f"surface {surf_ids[skey]} sphere {c[0]!r} {c[1]!r} {c[2]!r} "
                        f"{el.sphere.radius!r}")
                elem_lines.append(f"facesurface {el.curved_face} {surf_ids[skey]}")
        lines += surf_lines + face_lines + elem_lines
        for key, tag in sorted(mesh.boundary_tags.items()):
            lines.append(f"btag face {face_ids[key]} {tag}")
    return "\n".join(lines) + "\n"
