"""3D virtual elements on polyhedra, with one optional curved (sphere-patch) face.

Face dofs live in canonical per-face frames shared by both incident elements,
and the face energy projector is the 2D machinery run in that frame.  The
volume projector's boundary term replaces unavailable face moments by the
face projections; a curved face is handled through the polynomial surrogate
p* reconstructed from the element's other dofs (square unisolvent system on
tetra-like elements, least squares otherwise).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import vem2d
from .curved2d import plain_lstsq
from .geometry.mesh import DIRICHLET, NEUMANN, Mesh
from .geometry.polygon import Polygon2D
from .geometry.polyhedron import Polyhedron3D
from .geometry.quadrature import QuadratureRule, segment_rule
from .polybasis import ScaledMonomialBasis, space_dim
from .projectors import (
    BoundaryPiece,
    LocalSpace,
    dofi_projector,
    grad_l2_projector,
    h1_projector,
)
from .solver import LinearSystem


def canonical_loop(loop: tuple[int, ...]) -> tuple[int, ...]:
    """Rotation/direction-normalized vertex loop (identical for both elements)."""
    n = len(loop)
    i = loop.index(min(loop))
    fwd = tuple(loop[(i + j) % n] for j in range(n))
    bwd = tuple(loop[(i - j) % n] for j in range(n))
    return fwd if fwd[1] <= bwd[1] else bwd


@dataclass
class FaceEntity:
    """Canonical shared face: frame, in-frame polygon, dof layout, projector."""

    key: tuple
    loop: tuple[int, ...]
    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    normal: np.ndarray          # canonical loop traversal normal
    poly: Polygon2D             # in-frame, with sphere-intersection arcs
    moment_dof_ids: np.ndarray
    k: int
    ctx: vem2d.ElementContext = None
    build: vem2d.LocalBuild = None
    pinabla: np.ndarray = None

    @property
    def n_dofs(self) -> int:
        return self.ctx.n_dofs

    def to3d(self, pts2) -> np.ndarray:
        return self.origin + pts2[:, 0:1] * self.e1 + pts2[:, 1:2] * self.e2

    def ensure_built(self):
        if self.build is None:
            self.build = vem2d.build_local(self.ctx)
            self.pinabla = h1_projector(self.build.space)


@dataclass
class Element3DContext:
    index: int
    poly: Polyhedron3D
    k: int
    faces: list                 # (FaceEntity | None for sigma, sign, cols ndarray)
    sigma_face: int | None      # local face index of the curved face
    edge_cols: list             # (global edge key, 3d endpoints lo/hi, cols)
    vertex_ids: tuple
    interior_cols: np.ndarray
    n_dofs: int


@dataclass
class DofMap3D:
    mesh: Mesh
    k: int
    n_dofs: int
    vertex_dof: np.ndarray
    edge_dofs: dict
    face_entities: dict
    contexts: list[Element3DContext]
    element_maps: list[np.ndarray]


def enumerate_dofs_3d(mesh: Mesh, k: int) -> DofMap3D:
    """Vertex values, canonical edge moments <= k-2, canonical flat-face
    moments <= k-2, interior moments <= k-2; curved faces and their rim edges
    carry no dofs (their traces are slaved to the rest)."""
    if k < 1:
        raise ValueError("degree k must be >= 1")
    nv = mesh.vertices.shape[0]
    vertex_dof = np.arange(nv)
    next_dof = nv
    edge_dofs: dict = {}
    face_entities: dict = {}
    contexts = []
    element_maps = []
    n_face_mom = space_dim(2, k - 2)
    n_int = space_dim(3, k - 2)

    for e, el in enumerate(mesh.elements):
        poly = mesh.polyhedron(e)
        vids = el.vertex_ids
        local_of = {v: i for i, v in enumerate(vids)}
        gmap: list[int] = [int(vertex_dof[v]) for v in vids]
        col = len(vids)
        sigma_edges = set()
        if el.curved_face is not None:
            loop = el.faces[el.curved_face]
            sigma_edges = {tuple(sorted((loop[i], loop[(i + 1) % len(loop)])))
                           for i in range(len(loop))}

        # edge moments (k >= 2), canonical direction lower->higher vertex id
        edge_cols = []
        if k >= 2:
            seen = set()
            for f in el.faces:
                for i in range(len(f)):
                    key = tuple(sorted((f[i], f[(i + 1) % len(f)])))
                    if key in seen or key in sigma_edges:
                        continue
                    seen.add(key)
                    if key not in edge_dofs:
                        edge_dofs[key] = np.arange(next_dof, next_dof + k - 1)
                        next_dof += k - 1
                    cols = np.arange(col, col + k - 1)
                    col += k - 1
                    gmap.extend(edge_dofs[key])
                    lo, hi = mesh.vertices[key[0]], mesh.vertices[key[1]]
                    edge_cols.append((key, lo, hi, cols))

        faces = []
        for i, f in enumerate(el.faces):
            if i == el.curved_face:
                faces.append((None, 1, np.zeros(0, dtype=int)))
                continue
            key = el.face_key(i)
            if key not in face_entities:
                face_entities[key] = _build_face_entity(mesh, e, i, k, next_dof)
                if k >= 2:
                    next_dof += n_face_mom
            ent = face_entities[key]
            sign = 1 if _same_cycle(f, ent.loop) else -1
            cols = _face_extraction_cols(ent, local_of, edge_cols, k)
            # face moment dofs come last in the face layout
            if k >= 2:
                mcols = np.arange(col, col + n_face_mom)
                col += n_face_mom
                gmap.extend(ent.moment_dof_ids)
                cols = np.concatenate([cols, mcols])
            faces.append((ent, sign, cols))
        interior_cols = np.arange(col, col + n_int)
        col += n_int
        gmap.extend(range(next_dof, next_dof + n_int))
        next_dof += n_int

        contexts.append(Element3DContext(e, poly, k, faces, el.curved_face,
                                         edge_cols, vids, interior_cols, col))
        element_maps.append(np.asarray(gmap, dtype=int))
    return DofMap3D(mesh, k, next_dof, vertex_dof, edge_dofs, face_entities,
                    contexts, element_maps)


def _build_face_entity(mesh: Mesh, e: int, i: int, k: int, next_dof: int) -> FaceEntity:
    """Canonical face frame, in-frame polygon structure and 2D dof context."""
    el = mesh.elements[e]
    loop = canonical_loop(el.faces[i])
    key = el.face_key(i)
    # frame from the canonical loop so both elements agree bit-for-bit
    from .geometry.polyhedron import plane_frame

    pts = mesh.vertices[list(loop)]
    origin, e1, e2, nrm = plane_frame(pts)
    # edges on the curved-face rim: in-plane arcs (sphere/plane intersection),
    # or straight polyline stand-ins when the declared-curved face is flat
    rim = set()
    if el.curved_face is not None:
        sig = {tuple(sorted(kk)) for kk in _loop_edges(el.faces[el.curved_face])}
        rim = {kk for kk in _loop_edges(el.faces[i], sort=True) if kk in sig}
    uv = np.stack([(pts - origin) @ e1, (pts - origin) @ e2], axis=1)
    curves = {}
    if rim:
        from .geometry.curves import Curve

        c_uv, rp = None, 0.0
        if el.sphere is not None:
            d = float((el.sphere.center - origin) @ nrm)
            r2 = el.sphere.radius**2 - d * d
            if r2 > 0:
                c3 = el.sphere.center - d * nrm
                c_uv = np.array([(c3 - origin) @ e1, (c3 - origin) @ e2])
                rp = np.sqrt(r2)
        n = len(loop)
        for j in range(n):
            kk = tuple(sorted((loop[j], loop[(j + 1) % n])))
            if kk not in rim:
                continue
            if c_uv is not None:
                va, vb = uv[j] - c_uv, uv[(j + 1) % n] - c_uv
                a0 = np.arctan2(va[1], va[0])
                a1 = np.arctan2(vb[1], vb[0])
                delta = (a1 - a0 + np.pi) % (2 * np.pi) - np.pi
                curves[j] = Curve.arc(c_uv, rp, a0, a0 + delta)
            else:
                curves[j] = Curve.polyline([uv[j], uv[(j + 1) % n]])
    poly = Polygon2D(uv, curves)

    # 2D dof context on the face: vertices, straight-edge moments, face moments
    n = len(loop)
    edges = []
    colp = n
    for j in range(n):
        va, vb = loop[j], loop[(j + 1) % n]
        curve = curves.get(j)
        if curve is not None:
            edges.append(vem2d.EdgeLayout(va, vb, j, (j + 1) % n,
                                          np.zeros(0, dtype=int), flip=va > vb,
                                          curve=curve, kind="subset"))
        else:
            mcols = np.arange(colp, colp + (k - 1)) if k >= 2 else np.zeros(0, dtype=int)
            colp += len(mcols)
            edges.append(vem2d.EdgeLayout(va, vb, j, (j + 1) % n, mcols,
                                          flip=va > vb, curve=None, kind="straight"))
    n_mom = space_dim(2, k - 2)
    interior_cols = np.arange(colp, colp + n_mom)
    colp += n_mom
    ctx = vem2d.ElementContext(-1, poly, poly, k, k - 2, edges, interior_cols, colp)
    mom_ids = np.arange(next_dof, next_dof + n_mom) if k >= 2 else np.zeros(0, dtype=int)
    return FaceEntity(key, loop, origin, e1, e2, nrm, poly, mom_ids, k, ctx=ctx)


def _loop_edges(loop, sort=False):
    n = len(loop)
    for i in range(n):
        kk = (loop[i], loop[(i + 1) % n])
        yield tuple(sorted(kk)) if sort else kk


def _same_cycle(f, loop) -> bool:
    n = len(loop)
    i = list(f).index(loop[0])
    fwd = tuple(f[(i + j) % n] for j in range(n))
    return fwd == tuple(loop)


def _face_extraction_cols(ent: FaceEntity, local_of, edge_cols, k):
    """Element-local columns of the face's dofs, in face-local order
    (vertices of the canonical loop, then straight-edge moments)."""
    cols = [local_of[v] for v in ent.loop]
    if k >= 2:
        by_key = {key: c for key, _, _, c in edge_cols}
        for edge in ent.ctx.edges:
            if edge.kind != "straight":
                continue
            key = tuple(sorted((edge.va, edge.vb)))
            cols.extend(by_key[key])
    return np.asarray(cols, dtype=int)


# ---------------------------------------------------------------------------
# local build
# ---------------------------------------------------------------------------

@dataclass
class LocalBuild3D:
    ctx: Element3DContext
    basis: ScaledMonomialBasis
    space: LocalSpace
    D: np.ndarray
    sigma_solver: np.ndarray | None = None   # dofs -> p* coefficients
    sigma_rule: QuadratureRule | None = None


def build_local_3d(ctx: Element3DContext) -> LocalBuild3D:
    k = ctx.k
    poly = ctx.poly
    basis = ScaledMonomialBasis(poly.centroid, poly.diameter, k, 3)
    order = 2 * k + 2
    dom = poly.quadrature(order)
    nk = len(basis)

    D = np.zeros((ctx.n_dofs, nk))
    verts3 = poly.vertices  # local coordinates array equals mesh slice
    # careful: ctx.poly vertex order matches ctx.vertex_ids
    D[: len(ctx.vertex_ids)] = basis.eval(verts3)

    for key, lo, hi, cols in ctx.edge_cols:
        mid = 0.5 * (lo + hi)
        h = float(np.linalg.norm(hi - lo))
        tang = (hi - lo) / h
        rule = segment_rule(lo, hi, order)
        xi = ((rule.points - mid) @ tang) / h
        V = np.vander(xi, k - 1, increasing=True)
        D[cols] = (V.T * rule.weights) @ basis.eval(rule.points) / h

    pieces: list[BoundaryPiece] = []
    for li, (ent, sign, cols) in enumerate(ctx.faces):
        if ent is None:
            continue
        ent.ensure_built()
        if k >= 2:
            rule2 = ent.poly.quadrature(order)
            pts3 = ent.to3d(rule2.points)
            f2basis = ent.build.basis.lower(k - 2)
            Vf = f2basis.eval(rule2.points)
            mcols = cols[-space_dim(2, k - 2):]
            D[mcols] = (Vf.T * rule2.weights) @ basis.eval(pts3) / ent.poly.measure

    if len(ctx.interior_cols):
        low = basis.lower(k - 2)
        Vl = low.eval(dom.points)
        D[ctx.interior_cols] = (Vl.T @ (dom.weights[:, None] * basis.eval(dom.points))) \
            / poly.measure

    # curved-face surrogate: p* from vertices, straight-edge/flat-face moments,
    # interior moments up to k-3 only
    sigma_solver = None
    sigma_rule = None
    if ctx.sigma_face is not None:
        rows = list(range(len(ctx.vertex_ids)))
        for _, _, _, cols in ctx.edge_cols:
            rows.extend(cols)
        for ent, sign, cols in ctx.faces:
            if ent is not None and k >= 2:
                rows.extend(cols[-space_dim(2, k - 2):])
        rows.extend(ctx.interior_cols[: space_dim(3, k - 3)])
        rows = np.asarray(rows, dtype=int)
        A = D[rows]
        rhs = np.eye(ctx.n_dofs)[rows]
        if A.shape[0] == nk:
            sigma_solver = np.linalg.solve(A, rhs)   # tetra-like: unisolvent
        else:
            sigma_solver = plain_lstsq(A, rhs, require_rank=nk)

    # boundary pieces: flat faces through their energy projectors, sigma via p*
    for li, (ent, sign, cols) in enumerate(ctx.faces):
        if ent is None:
            surf, normals = ctx.poly.face_surface_rule(li, order)
            if ctx.poly.sphere is None:
                # declared-curved but geometrically flat: normals follow storage
                pass
            trace = basis.eval(surf.points) @ sigma_solver
            pieces.append(BoundaryPiece(surf.points, surf.weights, normals, trace))
            sigma_rule = surf
            continue
        rule2 = ent.poly.quadrature(order)
        pts3 = ent.to3d(rule2.points)
        normals = np.tile(sign * ent.normal, (rule2.points.shape[0], 1))
        Tface = ent.build.basis.eval(rule2.points) @ ent.pinabla   # (q, n_face_dofs)
        trace = np.zeros((rule2.points.shape[0], ctx.n_dofs))
        trace[:, cols] = Tface
        pieces.append(BoundaryPiece(pts3, rule2.weights, normals, trace))

    space = LocalSpace(basis, pieces, ctx.interior_cols, k - 2, poly.measure,
                       dom.points, dom.weights, ctx.n_dofs, D=D)
    return LocalBuild3D(ctx, basis, space, D, sigma_solver, sigma_rule)


@dataclass
class ElementMatrices3D:
    stiffness: np.ndarray
    consistency: np.ndarray
    stability: np.ndarray
    build: LocalBuild3D
    pinabla: np.ndarray | None = None
    grad_proj: list | None = None


def local_stiffness_3d(build: LocalBuild3D, consistency: str = "pinabla",
                       stab: str = "dofi", stab_coeff: float = 1.0) -> ElementMatrices3D:
    """Volume stiffness; the dofi stabilization is scaled by h_P so it matches
    the 3D scaling of the energy.  Boundary-integral stabilizations would need
    pointwise face traces that the 3D dof set does not control, so only dofi
    is admitted here."""
    if stab != "dofi":
        raise ValueError("3D stabilization supports 'dofi' only")
    space = build.space
    ctx = build.ctx
    P = h1_projector(space)
    if consistency == "pinabla":
        Kc = P.T @ space.stiffness_gram() @ P
    elif consistency == "grad-l2":
        comps = grad_l2_projector(space)
        H = space.mass_gram(ctx.k - 1)
        Kc = sum(Pc.T @ H @ Pc for Pc in comps)
    else:
        raise ValueError(f"unknown consistency variant {consistency!r}")
    R = np.eye(ctx.n_dofs) - build.D @ P
    Ks = stab_coeff * ctx.poly.diameter * (R.T @ R)
    K = Kc + Ks
    K = 0.5 * (K + K.T)
    em = ElementMatrices3D(K, Kc, Ks, build, pinabla=P)
    if consistency == "grad-l2":
        em.grad_proj = comps
    return em


def local_load_3d(build: LocalBuild3D, f, order: int | None = None) -> np.ndarray:
    ctx = build.ctx
    k = ctx.k
    load = np.zeros(ctx.n_dofs)
    if f is None:
        return load
    rule = ctx.poly.quadrature(order or 2 * k + 2)
    fv = np.asarray(f(rule.points), dtype=float)
    resid = fv
    if k >= 2:
        low = build.basis.lower(k - 2)
        Vl = low.eval(rule.points)
        gram = Vl.T @ (rule.weights[:, None] * Vl)
        coeffs = np.linalg.solve(gram, Vl.T @ (rule.weights * fv))
        load[ctx.interior_cols] = ctx.poly.measure * coeffs
        resid = fv - Vl @ coeffs
    PD = dofi_projector(build.D)
    load += PD.T @ (build.basis.eval(rule.points).T @ (rule.weights * resid))
    return load


def neumann_face_rhs(build: LocalBuild3D, local_face: int, g) -> np.ndarray:
    """<g_N, v> on one boundary face, assembled through the face projection
    (or the p* surrogate on the curved face).  Pieces are in face order."""
    piece = build.space.pieces[local_face]
    gv = np.asarray(g(piece.points), dtype=float)
    return piece.trace.T @ (piece.weights * gv)


def interpolate_3d(dofmap: DofMap3D, u) -> np.ndarray:
    mesh = dofmap.mesh
    k = dofmap.k
    out = np.zeros(dofmap.n_dofs)
    out[: mesh.vertices.shape[0]] = np.asarray(u(mesh.vertices), dtype=float)
    done = set()
    for ctx, gmap in zip(dofmap.contexts, dofmap.element_maps):
        for key, lo, hi, cols in ctx.edge_cols:
            if key in done:
                continue
            done.add(key)
            mid = 0.5 * (lo + hi)
            h = float(np.linalg.norm(hi - lo))
            tang = (hi - lo) / h
            rule = segment_rule(lo, hi, 2 * k + 4)
            xi = ((rule.points - mid) @ tang) / h
            V = np.vander(xi, k - 1, increasing=True)
            out[gmap[cols]] = (V.T @ (rule.weights * np.asarray(u(rule.points)))) / h
        for ent, sign, cols in ctx.faces:
            if ent is None or k < 2 or ent.key in done:
                continue
            done.add(ent.key)
            ent.ensure_built()
            rule2 = ent.poly.quadrature(2 * k + 2)
            pts3 = ent.to3d(rule2.points)
            Vf = ent.build.basis.lower(k - 2).eval(rule2.points)
            mcols = cols[-space_dim(2, k - 2):]
            out[gmap[mcols]] = (Vf.T @ (rule2.weights * np.asarray(u(pts3)))) \
                / ent.poly.measure
        if len(ctx.interior_cols):
            rule = ctx.poly.quadrature(2 * k + 2)
            low = ScaledMonomialBasis(ctx.poly.centroid, ctx.poly.diameter, k - 2, 3)
            out[gmap[ctx.interior_cols]] = low.eval(rule.points).T \
                @ (rule.weights * np.asarray(u(rule.points))) / ctx.poly.measure
    return out


def assemble_3d(mesh: Mesh, dofmap: DofMap3D, consistency: str = "pinabla",
                stab: str = "dofi", stab_coeff: float = 1.0, f=None, g_neumann=None):
    rows, cols_, vals = [], [], []
    rhs = np.zeros(dofmap.n_dofs)
    builds: list[ElementMatrices3D] = []
    counts = mesh.face_counts()
    for ctx, gmap in zip(dofmap.contexts, dofmap.element_maps):
        build = build_local_3d(ctx)
        em = local_stiffness_3d(build, consistency, stab, stab_coeff)
        builds.append(em)
        load = local_load_3d(build, f)
        el = mesh.elements[ctx.index]
        if g_neumann is not None:
            for li in range(len(el.faces)):
                key = el.face_key(li)
                if counts[key] == 1 and mesh.boundary_tags.get(key) == NEUMANN:
                    piece = build.space.pieces[li]
                    gv = np.asarray(g_neumann(piece.points), dtype=float)
                    load += piece.trace.T @ (piece.weights * gv)
        idx = gmap
        rows.append(np.repeat(idx, len(idx)))
        cols_.append(np.tile(idx, len(idx)))
        vals.append(em.stiffness.ravel())
        np.add.at(rhs, idx, load)
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols_))),
                      shape=(dofmap.n_dofs, dofmap.n_dofs)).tocsr()
    return LinearSystem(A, rhs), builds


def dirichlet_constraints_3d(dofmap: DofMap3D, g) -> dict[int, float]:
    mesh = dofmap.mesh
    k = dofmap.k
    out: dict[int, float] = {}
    counts = mesh.face_counts()
    for ctx, gmap in zip(dofmap.contexts, dofmap.element_maps):
        el = mesh.elements[ctx.index]
        for li, (ent, sign, cols) in enumerate(ctx.faces):
            key = el.face_key(li)
            if counts[key] != 1 or mesh.boundary_tags.get(key) != DIRICHLET:
                continue
            if ent is None:
                raise ValueError("curved faces must lie on the Neumann boundary")
            for v in ent.loop:
                out[int(dofmap.vertex_dof[v])] = float(
                    np.asarray(g(mesh.vertices[v][None, :])).ravel()[0])
            if k >= 2:
                for key2, lo, hi, ecols in ctx.edge_cols:
                    if key2[0] in ent.loop and key2[1] in ent.loop:
                        pair = set(key2)
                        onface = any(set(kk) == pair for kk in _loop_edges(ent.loop, sort=True))
                        if not onface:
                            continue
                        mid = 0.5 * (lo + hi)
                        h = float(np.linalg.norm(hi - lo))
                        tang = (hi - lo) / h
                        rule = segment_rule(lo, hi, 2 * k + 6)
                        xi = ((rule.points - mid) @ tang) / h
                        V = np.vander(xi, k - 1, increasing=True)
                        mom = (V.T @ (rule.weights * np.asarray(g(rule.points)))) / h
                        for j, c in enumerate(ecols):
                            out[int(gmap[c])] = float(mom[j])
                rule2 = ent.poly.quadrature(2 * k + 4)
                pts3 = ent.to3d(rule2.points)
                ent.ensure_built()
                Vf = ent.build.basis.lower(k - 2).eval(rule2.points)
                mom = Vf.T @ (rule2.weights * np.asarray(g(pts3))) / ent.poly.measure
                mcols = cols[-space_dim(2, k - 2):]
                for j, c in enumerate(mcols):
                    out[int(gmap[c])] = float(mom[j])
    return out


def compute_errors_3d(dofmap: DofMap3D, builds: list[ElementMatrices3D],
                      u_dofs: np.ndarray, u_exact, grad_exact) -> tuple[float, float]:
    l2 = 0.0
    h1 = 0.0
    for em, gmap in zip(builds, dofmap.element_maps):
        build = em.build
        ctx = build.ctx
        loc = u_dofs[gmap]
        rule = ctx.poly.quadrature(2 * ctx.k + 2)
        uv = np.asarray(u_exact(rule.points), dtype=float) if u_exact else 0.0
        try:
            PD = dofi_projector(build.D)
        except ValueError:
            PD = em.pinabla
        c = PD @ loc
        vals = build.basis.eval(rule.points) @ c
        comps = em.grad_proj or grad_l2_projector(build.space)
        low = build.basis.lower(ctx.k - 1)
        Vl = low.eval(rule.points)
        grads = np.stack([Vl @ (Pc @ loc) for Pc in comps], axis=1)
        l2 += float(rule.weights @ (vals - uv) ** 2)
        gv = np.asarray(grad_exact(rule.points), dtype=float) if grad_exact is not None else 0.0
        h1 += float(rule.weights @ np.sum((grads - gv) ** 2, axis=1))
    return float(np.sqrt(l2)), float(np.sqrt(h1))


def pin_vertex_dof_3d(dofmap: DofMap3D, which: int = 0) -> int:
    bverts = sorted({v for _, _, key in dofmap.mesh.boundary_faces() for v in key})
    return int(dofmap.vertex_dof[bverts[which % len(bverts)]])
