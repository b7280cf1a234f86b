"""Closed triangle meshes and 3D constrained tetrahedral complexes.

A TriangleMesh3 is a watertight, consistently oriented triangle surface
(possibly with several components, e.g. an internal cavity).  Building
a ConstrainedComplex3 takes a tetrahedrization that conforms to the
mesh, marks every tet face lying on the mesh as constrained, and
classifies each tet as material or complement by a parity ray against
the surface.  The tetrahedrization only needs to cover the convex hull
of the shape: a front escaping through an uncovered hull facet has
nothing left to contact, so exhaustion is read as an unbounded value.

For convex meshes a tetrahedrization is built in place by coning every
surface triangle to the centroid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom import orient3d
from .values import CellClass

__all__ = [
    "MeshError",
    "ConformityError",
    "TriangleMesh3",
    "ConstrainedComplex3",
    "point_in_mesh",
    "read_node_file",
    "read_ele_file",
]


class MeshError(ValueError):
    """Invalid surface mesh (open, non-manifold, inconsistent, degenerate)."""


class ConformityError(ValueError):
    """Tetrahedrization does not conform to the surface mesh."""


def _ekey(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def _fkey(a: int, b: int, c: int) -> tuple[int, int, int]:
    return tuple(sorted((a, b, c)))


# Deterministic fallback directions for parity rays that graze the
# mesh; irrational components keep them off any input plane in practice.
_RAY_DIRECTIONS = [
    (0.5772156649015329, 0.2718281828459045, 0.7071067811865476),
    (-0.3141592653589793, 0.6180339887498949, 0.4142135623730951),
    (0.8660254037844386, -0.1614213562373095, 0.3331779264038094),
    (0.2236067977499790, 0.5477225575051661, -0.6457513110645906),
    (-0.7320508075688772, -0.4494897427831781, 0.2360679774997897),
]


@dataclass
class TriangleMesh3:
    """Closed oriented triangle surface: vertices and outward triangles.

    Validation requires every directed edge to appear exactly once (so
    the surface is closed, edge-manifold and consistently oriented),
    every vertex umbrella to be a single fan, no degenerate triangles,
    and positive total enclosed volume (outward orientation).
    """

    verts: np.ndarray
    tris: list[tuple[int, int, int]]

    @classmethod
    def from_arrays(cls, verts, tris) -> "TriangleMesh3":
        verts = np.asarray(verts, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise MeshError(f"vertex array must be (n, 3), got {verts.shape}")
        mesh = cls(verts, [tuple(int(v) for v in t) for t in tris])
        mesh.validate()
        return mesh

    def validate(self) -> None:
        n = len(self.verts)
        if not self.tris:
            raise MeshError("mesh has no triangles")
        scale = self.bbox_diagonal()
        if scale == 0.0:
            raise MeshError("mesh bounding box is degenerate")
        directed: set[tuple[int, int]] = set()
        for ti, (a, b, c) in enumerate(self.tris):
            if len({a, b, c}) != 3:
                raise MeshError(f"triangle {ti} repeats a vertex")
            if not all(0 <= v < n for v in (a, b, c)):
                raise MeshError(f"triangle {ti} references a missing vertex")
            area2 = np.linalg.norm(
                np.cross(self.verts[b] - self.verts[a], self.verts[c] - self.verts[a])
            )
            if area2 <= 1e-14 * scale * scale:
                raise MeshError(f"triangle {ti} is degenerate")
            for u, v in ((a, b), (b, c), (c, a)):
                if (u, v) in directed:
                    raise MeshError(f"directed edge ({u}, {v}) appears twice")
                directed.add((u, v))
        for u, v in directed:
            if (v, u) not in directed:
                raise MeshError(f"surface is open along edge ({u}, {v})")
        self._check_umbrellas()
        if self.signed_volume() <= 0.0:
            raise MeshError("total enclosed volume is not positive; orient outward")

    def _check_umbrellas(self) -> None:
        at_vertex: dict[int, list[int]] = {}
        for ti, tri in enumerate(self.tris):
            for v in tri:
                at_vertex.setdefault(v, []).append(ti)
        edge_tris: dict[tuple[int, int], list[int]] = {}
        for ti, (a, b, c) in enumerate(self.tris):
            for u, v in ((a, b), (b, c), (c, a)):
                edge_tris.setdefault(_ekey(u, v), []).append(ti)
        for v, tids in at_vertex.items():
            seen = {tids[0]}
            stack = [tids[0]]
            while stack:
                ti = stack.pop()
                tri = self.tris[ti]
                for w in tri:
                    if w == v:
                        continue
                    for other in edge_tris[_ekey(v, w)]:
                        if other not in seen:
                            seen.add(other)
                            stack.append(other)
            if len(seen) != len(tids):
                raise MeshError(f"vertex {v} joins two surface sheets (non-manifold)")

    def tri_points(self, ti: int) -> np.ndarray:
        a, b, c = self.tris[ti]
        return self.verts[[a, b, c]]

    def signed_volume(self) -> float:
        total = 0.0
        for a, b, c in self.tris:
            pa, pb, pc = self.verts[a], self.verts[b], self.verts[c]
            total += float(np.dot(pa, np.cross(pb, pc)))
        return total / 6.0

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.verts.min(axis=0), self.verts.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def is_convex(self, rel_tol: float = 1e-9) -> bool:
        tol = rel_tol * self.bbox_diagonal()
        for a, b, c in self.tris:
            pa = self.verts[a]
            normal = np.cross(self.verts[b] - pa, self.verts[c] - pa)
            norm = float(np.linalg.norm(normal))
            if norm == 0.0:
                return False
            normal = normal / norm
            if np.max((self.verts - pa) @ normal) > tol:
                return False
        return True

    def components(self) -> list[set[int]]:
        """Connected components of the surface, as sets of triangle ids."""
        edge_tris: dict[tuple[int, int], list[int]] = {}
        for ti, (a, b, c) in enumerate(self.tris):
            for u, v in ((a, b), (b, c), (c, a)):
                edge_tris.setdefault(_ekey(u, v), []).append(ti)
        remaining = set(range(len(self.tris)))
        out: list[set[int]] = []
        while remaining:
            seed = min(remaining)
            comp = {seed}
            stack = [seed]
            remaining.discard(seed)
            while stack:
                ti = stack.pop()
                a, b, c = self.tris[ti]
                for u, v in ((a, b), (b, c), (c, a)):
                    for other in edge_tris[_ekey(u, v)]:
                        if other in remaining:
                            remaining.discard(other)
                            comp.add(other)
                            stack.append(other)
            out.append(comp)
        return out


# ----------------------------------------------------------------------
# parity classification


def _ray_crossing_parity(origin: np.ndarray, direction: np.ndarray, verts: np.ndarray, tris: np.ndarray) -> int | None:
    """Crossings of a ray with a triangle set; None if any hit is degenerate.

    Vectorised Moeller-Trumbore.  A hit counts when it is strictly in
    front of the origin and strictly inside a triangle; hits too close
    to an edge, a plane parallel to the ray, or the origin itself are
    reported as degenerate so the caller can retry another direction.
    """
    a = verts[tris[:, 0]]
    e1 = verts[tris[:, 1]] - a
    e2 = verts[tris[:, 2]] - a
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    scale = np.sqrt(np.abs(np.einsum("ij,ij->i", e1, e1) * np.einsum("ij,ij->i", e2, e2)))
    near_parallel = np.abs(det) <= 1e-12 * scale
    safe_det = np.where(near_parallel, 1.0, det)
    tvec = origin - a
    u = np.einsum("ij,ij->i", tvec, pvec) / safe_det
    qvec = np.cross(tvec, e1)
    v = np.einsum("j,ij->i", direction, qvec) / safe_det
    t = np.einsum("ij,ij->i", e2, qvec) / safe_det
    eps = 1e-10
    inside = (u > eps) & (v > eps) & (u + v < 1.0 - eps) & (t > eps)
    grazing = (
        ~near_parallel
        & (u > -eps)
        & (v > -eps)
        & (u + v < 1.0 + eps)
        & (t > -eps)
        & ~inside
    )
    plane_parallel = near_parallel & (np.abs(np.einsum("ij,ij->i", tvec, np.cross(e1, e2))) <= eps * scale * np.linalg.norm(origin - a, axis=-1).clip(min=1.0))
    if bool(np.any(grazing)) or bool(np.any(plane_parallel)):
        return None
    return int(np.count_nonzero(inside))


def point_in_mesh(p, verts: np.ndarray, tris, tie_eps: float = 1e-9) -> bool:
    """Even-odd material test against a closed mesh.

    Degenerate ray hits are retried along perturbed directions; the
    perturbation scale follows the tie tolerance so the answer is
    deterministic for a given input.
    """
    p = np.asarray(p, dtype=float)
    tris = np.asarray(tris, dtype=int)
    base = np.asarray(_RAY_DIRECTIONS[0])
    for i, d in enumerate(_RAY_DIRECTIONS):
        direction = np.asarray(d)
        if i > 0:
            direction = direction + tie_eps * base
        direction = direction / np.linalg.norm(direction)
        parity = _ray_crossing_parity(p, direction, verts, tris)
        if parity is not None:
            return parity % 2 == 1
    raise MeshError("parity ray grazed the mesh in every fallback direction")


# ----------------------------------------------------------------------
# tetgen-style files


def _data_lines(path: str) -> list[list[str]]:
    out: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                out.append(line.split())
    return out


def read_node_file(path: str) -> tuple[np.ndarray, dict[int, int]]:
    """Read a .node file: points plus a label -> row mapping.

    The header is ``count dim attrs markers``; each point line starts
    with its label.  Labels may be 0- or 1-based (or sparse); callers
    resolve references through the returned mapping.
    """
    lines = _data_lines(path)
    if not lines:
        raise MeshError(f"{path}: empty node file")
    header = lines[0]
    count = int(header[0])
    dim = int(header[1]) if len(header) > 1 else 3
    if dim != 3:
        raise MeshError(f"{path}: expected 3D points, got dimension {dim}")
    body = lines[1:]
    if len(body) != count:
        raise MeshError(f"{path}: header promises {count} points, found {len(body)}")
    points = np.zeros((count, 3), dtype=float)
    label_to_row: dict[int, int] = {}
    for row, parts in enumerate(body):
        if len(parts) < 4:
            raise MeshError(f"{path}: point line {row + 1} is too short")
        label = int(parts[0])
        if label in label_to_row:
            raise MeshError(f"{path}: duplicate point label {label}")
        label_to_row[label] = row
        points[row] = [float(parts[1]), float(parts[2]), float(parts[3])]
    return points, label_to_row


def read_ele_file(path: str, label_to_row: dict[int, int]) -> list[tuple[int, int, int, int]]:
    """Read a .ele file of 4-node tets, resolving node labels to rows."""
    lines = _data_lines(path)
    if not lines:
        raise MeshError(f"{path}: empty element file")
    header = lines[0]
    count = int(header[0])
    per = int(header[1]) if len(header) > 1 else 4
    if per != 4:
        raise MeshError(f"{path}: expected 4-node tets, got {per} nodes per element")
    body = lines[1:]
    if len(body) != count:
        raise MeshError(f"{path}: header promises {count} tets, found {len(body)}")
    tets: list[tuple[int, int, int, int]] = []
    for row, parts in enumerate(body):
        if len(parts) < 5:
            raise MeshError(f"{path}: element line {row + 1} is too short")
        labels = [int(x) for x in parts[1:5]]
        try:
            tets.append(tuple(label_to_row[x] for x in labels))
        except KeyError as exc:
            raise MeshError(f"{path}: element line {row + 1} references missing node {exc}") from None
    return tets


# ----------------------------------------------------------------------
# constrained complex


@dataclass
class ConstrainedComplex3:
    """Tetrahedrized volume with constrained (surface) faces.

    Tets are stored positively oriented.  Constrained faces keep the
    mesh orientation (outward normal on the complement side), remember
    the source mesh triangle, and survive splits through the children
    table.  Free faces with a single tet lie on the cover boundary
    (the convex hull); reaching one means the front escaped.
    """

    points: list[np.ndarray] = field(default_factory=list)
    tet_verts: dict[int, tuple[int, int, int, int]] = field(default_factory=dict)
    tet_class: dict[int, CellClass] = field(default_factory=dict)
    con_faces: dict[int, tuple[int, int, int]] = field(default_factory=dict)
    con_source: dict[int, int] = field(default_factory=dict)
    con_children: dict[int, tuple[int, ...]] = field(default_factory=dict)
    con_root: dict[int, int] = field(default_factory=dict)
    edge_verts: dict[int, tuple[int, int]] = field(default_factory=dict)
    edge_children: dict[int, tuple[int, int]] = field(default_factory=dict)
    edge_root: dict[int, int] = field(default_factory=dict)
    model_bbox: tuple[np.ndarray, np.ndarray] | None = None
    surface_convex: bool = False
    interior_volume_built: float = 0.0

    _next_tet: int = 0
    _next_con: int = 0
    _next_edge: int = 0
    _face_tets: dict[tuple[int, int, int], list[int]] = field(default_factory=dict)
    _vertex_tets: dict[int, set[int]] = field(default_factory=dict)
    _con_by_key: dict[tuple[int, int, int], int] = field(default_factory=dict)
    _con_at_vertex: dict[int, set[int]] = field(default_factory=dict)
    _con_at_edge: dict[tuple[int, int], set[int]] = field(default_factory=dict)
    _edge_id_by_key: dict[tuple[int, int], int] = field(default_factory=dict)

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def from_tets(cls, mesh: TriangleMesh3, node_points: np.ndarray, tets, rel_tol: float = 1e-9) -> "ConstrainedComplex3":
        """Build from an external tetrahedrization conforming to the mesh.

        Every mesh triangle must appear as a union of tet faces; exact
        vertex matches are found first, remaining triangles by
        coplanarity and containment.  Tet cells are classified by a
        parity ray from their centroid against the mesh.
        """
        cplx = cls()
        node_points = np.asarray(node_points, dtype=float)
        scale = mesh.bbox_diagonal()
        tol = rel_tol * scale

        for p in node_points:
            cplx._add_point(p)
        mesh_vid: list[int] = []
        for p in mesh.verts:
            d2 = np.einsum("ij,ij->i", node_points - p, node_points - p)
            row = int(np.argmin(d2))
            if d2[row] > tol * tol:
                raise ConformityError(
                    f"mesh vertex at {tuple(float(x) for x in p)} has no matching node"
                )
            mesh_vid.append(row)

        for t in tets:
            cplx._add_tet(tuple(int(v) for v in t))

        cplx._match_surface(mesh, mesh_vid, tol)
        cplx._classify(mesh)
        cplx.model_bbox = mesh.bbox()
        cplx.surface_convex = mesh.is_convex(rel_tol)
        cplx.interior_volume_built = cplx.interior_volume()
        vol = mesh.signed_volume()
        if abs(cplx.interior_volume_built - vol) > 1e-9 * max(abs(vol), scale**3):
            raise ConformityError(
                f"interior tets enclose volume {cplx.interior_volume_built:.12g}, "
                f"mesh encloses {vol:.12g}"
            )
        return cplx

    @classmethod
    def from_convex_mesh(cls, mesh: TriangleMesh3, rel_tol: float = 1e-9) -> "ConstrainedComplex3":
        """Tetrahedrize a convex mesh by coning triangles to the centroid."""
        if not mesh.is_convex(rel_tol):
            raise ConformityError(
                "mesh is not convex; supply a tetrahedrization covering its hull"
            )
        centroid = mesh.verts.mean(axis=0)
        node_points = np.vstack([mesh.verts, centroid[None, :]])
        cid = len(mesh.verts)
        tets = [(a, b, c, cid) for (a, b, c) in mesh.tris]
        return cls.from_tets(mesh, node_points, tets, rel_tol)

    def _add_point(self, p) -> int:
        self.points.append(np.asarray(p, dtype=float).copy())
        vid = len(self.points) - 1
        self._vertex_tets.setdefault(vid, set())
        return vid

    def _add_tet(self, verts: tuple[int, int, int, int]) -> int:
        a, b, c, d = verts
        if len({a, b, c, d}) != 4:
            raise ConformityError(f"tet {verts} repeats a vertex")
        s = orient3d(self.points[a], self.points[b], self.points[c], self.points[d])
        if s == 0:
            raise ConformityError(f"tet {verts} is degenerate")
        if s < 0:
            verts = (a, b, d, c)
        tid = self._next_tet
        self._next_tet += 1
        self.tet_verts[tid] = verts
        for key in self._tet_face_keys(verts):
            self._face_tets.setdefault(key, []).append(tid)
            if len(self._face_tets[key]) > 2:
                raise ConformityError(f"face {key} is shared by more than two tets")
        for v in verts:
            self._vertex_tets.setdefault(v, set()).add(tid)
        return tid

    @staticmethod
    def _tet_face_keys(verts: tuple[int, int, int, int]):
        a, b, c, d = verts
        return (_fkey(a, b, c), _fkey(a, b, d), _fkey(a, c, d), _fkey(b, c, d))

    def _remove_tet(self, tid: int) -> None:
        verts = self.tet_verts.pop(tid)
        self.tet_class.pop(tid, None)
        for key in self._tet_face_keys(verts):
            lst = self._face_tets[key]
            lst.remove(tid)
            if not lst:
                del self._face_tets[key]
        for v in verts:
            self._vertex_tets[v].discard(tid)

    def _register_constrained(self, tri: tuple[int, int, int], source: int, root: int | None = None) -> int:
        fid = self._next_con
        self._next_con += 1
        self.con_faces[fid] = tri
        self.con_source[fid] = source
        self.con_root[fid] = fid if root is None else root
        self._con_by_key[_fkey(*tri)] = fid
        for v in tri:
            self._con_at_vertex.setdefault(v, set()).add(fid)
        a, b, c = tri
        for u, v in ((a, b), (b, c), (c, a)):
            key = _ekey(u, v)
            self._con_at_edge.setdefault(key, set()).add(fid)
            if key not in self._edge_id_by_key:
                eid = self._next_edge
                self._next_edge += 1
                self._edge_id_by_key[key] = eid
                self.edge_verts[eid] = key
                self.edge_root[eid] = eid
        return fid

    def _unregister_constrained(self, fid: int) -> None:
        tri = self.con_faces.pop(fid)
        del self._con_by_key[_fkey(*tri)]
        for v in tri:
            self._con_at_vertex[v].discard(fid)
        a, b, c = tri
        for u, v in ((a, b), (b, c), (c, a)):
            key = _ekey(u, v)
            self._con_at_edge[key].discard(fid)
            if not self._con_at_edge[key]:
                del self._con_at_edge[key]
                self._edge_id_by_key.pop(key, None)

    # ------------------------------------------------------------------
    # surface matching and classification

    def _match_surface(self, mesh: TriangleMesh3, mesh_vid: list[int], tol: float) -> None:
        claimed: set[tuple[int, int, int]] = set()
        exact_missing: list[int] = []
        for ti, (a, b, c) in enumerate(mesh.tris):
            tri = (mesh_vid[a], mesh_vid[b], mesh_vid[c])
            key = _fkey(*tri)
            if key in self._face_tets:
                self._register_constrained(tri, source=ti)
                claimed.add(key)
            else:
                exact_missing.append(ti)
        for ti in exact_missing:
            pieces = self._coplanar_contained_faces(mesh, ti, mesh_vid, tol, claimed)
            if pieces is None:
                a, b, c = mesh.tris[ti]
                raise ConformityError(
                    f"mesh triangle {ti} ({a}, {b}, {c}) is not a union of tet faces"
                )
            for tri in pieces:
                self._register_constrained(tri, source=ti)
                claimed.add(_fkey(*tri))

    def _coplanar_contained_faces(
        self,
        mesh: TriangleMesh3,
        ti: int,
        mesh_vid: list[int],
        tol: float,
        claimed: set[tuple[int, int, int]],
    ) -> list[tuple[int, int, int]] | None:
        a, b, c = (mesh.verts[v] for v in mesh.tris[ti])
        normal = np.cross(b - a, c - a)
        area = 0.5 * float(np.linalg.norm(normal))
        normal = normal / (2.0 * area)
        u0 = b - a
        u0 = u0 / np.linalg.norm(u0)
        v0 = np.cross(normal, u0)
        tri2 = np.array([[0.0, 0.0], [np.dot(b - a, u0), np.dot(b - a, v0)], [np.dot(c - a, u0), np.dot(c - a, v0)]])

        def inside2(q: np.ndarray) -> bool:
            for i in range(3):
                p1, p2 = tri2[i], tri2[(i + 1) % 3]
                e = p2 - p1
                if e[0] * (q[1] - p1[1]) - e[1] * (q[0] - p1[0]) < -tol:
                    return False
            return True

        pieces: list[tuple[int, int, int]] = []
        covered = 0.0
        for key, tids in self._face_tets.items():
            if key in claimed or key in self._con_by_key:
                continue
            pts = [self.points[v] for v in key]
            if any(abs(float(np.dot(p - a, normal))) > tol for p in pts):
                continue
            q2 = [np.array([np.dot(p - a, u0), np.dot(p - a, v0)]) for p in pts]
            if not all(inside2(q) for q in q2):
                continue
            # Orient the piece to match the mesh triangle's normal.
            pn = np.cross(pts[1] - pts[0], pts[2] - pts[0])
            tri = key if float(np.dot(pn, normal)) > 0 else (key[0], key[2], key[1])
            pieces.append(tri)
            covered += 0.5 * abs(
                (q2[1][0] - q2[0][0]) * (q2[2][1] - q2[0][1])
                - (q2[2][0] - q2[0][0]) * (q2[1][1] - q2[0][1])
            )
        if abs(covered - area) > tol * max(1.0, area):
            return None
        return pieces

    def _classify(self, mesh: TriangleMesh3) -> None:
        """Flood material/complement labels from one parity-tested seed.

        Labels flip exactly when crossing a constrained face; the mesh
        is closed, so the flood is globally consistent.  Components of
        the tet graph that are separated from the seed (possible when a
        cover is ragged) each get their own parity seed.
        """
        tris = np.asarray(mesh.tris, dtype=int)
        unvisited = set(self.tet_verts)
        while unvisited:
            seed = min(unvisited)
            centroid = self.tet_points(seed).mean(axis=0)
            inside = point_in_mesh(centroid, mesh.verts, tris)
            self.tet_class[seed] = CellClass.INTERIOR if inside else CellClass.EXTERIOR
            unvisited.discard(seed)
            stack = [seed]
            while stack:
                tid = stack.pop()
                cls = self.tet_class[tid]
                for key in self._tet_face_keys(self.tet_verts[tid]):
                    for other in self._face_tets[key]:
                        if other == tid or other not in unvisited:
                            continue
                        flip = key in self._con_by_key
                        self.tet_class[other] = (
                            (CellClass.INTERIOR if cls == CellClass.EXTERIOR else CellClass.EXTERIOR)
                            if flip
                            else cls
                        )
                        unvisited.discard(other)
                        stack.append(other)

    # ------------------------------------------------------------------
    # queries

    def vertex_point(self, vid: int) -> np.ndarray:
        return self.points[vid]

    def face_points(self, fid: int) -> np.ndarray:
        a, b, c = self.con_faces[fid]
        return np.stack([self.points[a], self.points[b], self.points[c]])

    def tet_points(self, tid: int) -> np.ndarray:
        return np.stack([self.points[v] for v in self.tet_verts[tid]])

    def edge_points(self, u: int, v: int) -> np.ndarray:
        return np.stack([self.points[u], self.points[v]])

    def cells_at_vertex(self, vid: int) -> set[int]:
        return self._vertex_tets.get(vid, set())

    def tets_of_face(self, a: int, b: int, c: int) -> list[int]:
        return self._face_tets.get(_fkey(a, b, c), [])

    def constrained_id(self, a: int, b: int, c: int) -> int | None:
        return self._con_by_key.get(_fkey(a, b, c))

    def constrained_at_vertex(self, vid: int) -> set[int]:
        return self._con_at_vertex.get(vid, set())

    def constrained_at_edge(self, u: int, v: int) -> set[int]:
        return self._con_at_edge.get(_ekey(u, v), set())

    def is_surface_edge(self, u: int, v: int) -> bool:
        return _ekey(u, v) in self._con_at_edge

    def surface_edges(self) -> list[tuple[int, int]]:
        return sorted(self._con_at_edge.keys())

    def surface_edge_id(self, u: int, v: int) -> int | None:
        return self._edge_id_by_key.get(_ekey(u, v))

    def live_surface_edge_ids(self) -> list[int]:
        return sorted(self._edge_id_by_key.values())

    def surface_edge_points(self, eid: int) -> np.ndarray:
        u, v = self.edge_verts[eid]
        return np.stack([self.points[u], self.points[v]])

    def live_edge_descendants(self, eid: int) -> list[int]:
        """Live surface edges descending from eid (eid itself if live)."""
        key = self.edge_verts[eid]
        if self._edge_id_by_key.get(key) == eid:
            return [eid]
        out: list[int] = []
        for child in self.edge_children.get(eid, ()):  # pragma: no branch
            out.extend(self.live_edge_descendants(child))
        return out

    def boundary_vertices(self) -> list[int]:
        return sorted(v for v, fs in self._con_at_vertex.items() if fs)

    def live_constrained(self) -> list[int]:
        return sorted(self.con_faces.keys())

    def tets_around_edge(self, u: int, v: int) -> set[int]:
        return {
            t for t in self._vertex_tets.get(u, set()) if v in self.tet_verts[t]
        }

    def bbox_diagonal(self) -> float:
        lo, hi = self.model_bbox
        return float(np.linalg.norm(hi - lo))

    def interior_volume(self) -> float:
        total = 0.0
        for tid, (a, b, c, d) in self.tet_verts.items():
            if self.tet_class.get(tid) != CellClass.INTERIOR:
                continue
            total += orient_volume(self.points[a], self.points[b], self.points[c], self.points[d])
        return total

    def flank_tet(self, fid: int, cls: CellClass) -> int | None:
        """The tet of the given class flanking a constrained face."""
        for tid in self.tets_of_face(*self.con_faces[fid]):
            if self.tet_class[tid] == cls:
                return tid
        return None

    def side_tet(self, fid: int, sign: int) -> int | None:
        """Tet flanking constrained face fid on its normal side (+1) or
        the opposite side (-1), by orientation of the fourth vertex."""
        a, b, c = self.con_faces[fid]
        pa, pb, pc = self.points[a], self.points[b], self.points[c]
        for tid in self.tets_of_face(a, b, c):
            far = next(w for w in self.tet_verts[tid] if w not in (a, b, c))
            if orient3d(pa, pb, pc, self.points[far]) == sign:
                return tid
        return None

    def sectors_at_vertex(self, vid: int, cls: CellClass) -> list[set[int]]:
        """Group the class-matching tets at vid into fans not separated
        by constrained faces incident at vid."""
        cells = [t for t in self.cells_at_vertex(vid) if self.tet_class[t] == cls]
        remaining = set(cells)
        sectors: list[set[int]] = []
        while remaining:
            seed = remaining.pop()
            sector = {seed}
            stack = [seed]
            while stack:
                tid = stack.pop()
                for key in self._tet_face_keys(self.tet_verts[tid]):
                    if vid not in key or key in self._con_by_key:
                        continue
                    for other in self._face_tets[key]:
                        if other in remaining:
                            remaining.discard(other)
                            sector.add(other)
                            stack.append(other)
            sectors.append(sector)
        return sectors

    def fan_at_vertex(self, vid: int) -> list[int]:
        """Surface neighbours of vid in radial order around the vertex.

        Walks the umbrella of constrained faces: consecutive entries
        share a face with vid, and the list closes cyclically.
        """
        faces = sorted(self._con_at_vertex.get(vid, set()))
        if not faces:
            raise ValueError(f"vertex {vid} is not on the surface")
        by_edge: dict[int, list[int]] = {}
        for fid in faces:
            tri = self.con_faces[fid]
            others = [w for w in tri if w != vid]
            for w in others:
                by_edge.setdefault(w, []).append(fid)
        for w, fs in by_edge.items():
            if len(fs) != 2:
                raise ValueError(f"surface edge ({vid}, {w}) has {len(fs)} faces")
        start = min(by_edge)
        order = [start]
        prev_face: int | None = None
        while True:
            w = order[-1]
            nxt_face = next(f for f in by_edge[w] if f != prev_face)
            tri = self.con_faces[nxt_face]
            nxt = next(x for x in tri if x != vid and x != w)
            if nxt == start:
                break
            order.append(nxt)
            prev_face = nxt_face
            if len(order) > len(by_edge):
                raise ValueError(f"vertex {vid} umbrella does not close")
        if len(order) != len(by_edge):
            raise ValueError(f"vertex {vid} joins two surface sheets")
        return order

    def fan_faces_between(self, vid: int, w1: int, w2: int) -> int:
        """The constrained face at vid spanned by consecutive fan
        neighbours w1, w2 (order-insensitive)."""
        common = self._con_at_vertex[vid]
        for fid in sorted(common):
            tri = set(self.con_faces[fid])
            if w1 in tri and w2 in tri:
                return fid
        raise ValueError(f"no face at {vid} spans ({w1}, {w2})")

    def surface_component_faces(self, fid: int) -> list[int]:
        """All constrained faces connected to fid through surface edges."""
        seen = {fid}
        stack = [fid]
        while stack:
            f = stack.pop()
            a, b, c = self.con_faces[f]
            for u, v in ((a, b), (b, c), (c, a)):
                for nxt in self._con_at_edge.get(_ekey(u, v), ()):  # pragma: no branch
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
        return sorted(seen)

    def component_encloses(self, fid: int, probe: np.ndarray, tie_eps: float = 1e-9) -> bool:
        """Whether the surface component through fid encloses the probe."""
        comp = self.surface_component_faces(fid)
        verts = np.asarray(self.points)
        tris = np.asarray([self.con_faces[f] for f in comp], dtype=int)
        return point_in_mesh(probe, verts, tris, tie_eps)

    # ------------------------------------------------------------------
    # mutation

    def split_face(self, fid: int, point: np.ndarray, snap_eps: float) -> tuple[str, int, tuple[int, ...]]:
        """Split a constrained face at an interior point.

        Points within snap_eps of a vertex snap there without a split;
        points within snap_eps of an edge split the edge (refining every
        face and tet around it); otherwise the face is replaced by three
        sub-faces and each incident tet is coned from the new vertex.
        Returns (kind, vertex id, new face ids) with kind one of
        "vertex", "edge", "face".
        """
        tri = self.con_faces[fid]
        pts = self.face_points(fid)
        point = np.asarray(point, dtype=float)
        for i, v in enumerate(tri):
            if float(np.linalg.norm(point - pts[i])) <= snap_eps:
                return ("vertex", v, ())
        a, b, c = tri
        for u, v in ((a, b), (b, c), (c, a)):
            pu, pv = self.points[u], self.points[v]
            ev = pv - pu
            t = float(np.dot(point - pu, ev) / np.dot(ev, ev))
            t = min(max(t, 0.0), 1.0)
            if float(np.linalg.norm(point - (pu + t * ev))) <= snap_eps:
                mid, faces = self.split_surface_edge(u, v, pu + t * ev)
                return ("edge", mid, faces)

        mid = self._add_point(point)
        for tid in list(self.tets_of_face(a, b, c)):
            verts = self.tet_verts[tid]
            far = next(w for w in verts if w not in tri)
            cls = self.tet_class[tid]
            self._remove_tet(tid)
            for u, v in ((a, b), (b, c), (c, a)):
                self.tet_class[self._add_tet((u, v, mid, far))] = cls
        source = self.con_source[fid]
        root = self.con_root[fid]
        self._unregister_constrained(fid)
        kids = tuple(
            self._register_constrained((u, v, mid), source, root) for u, v in ((a, b), (b, c), (c, a))
        )
        self.con_children[fid] = kids
        return ("face", mid, kids)

    def split_surface_edge(self, u: int, v: int, point: np.ndarray) -> tuple[int, tuple[int, ...]]:
        """Split surface edge (u, v) at a point on it.

        Every constrained face and every tet containing the edge is
        split in two; face children keep their source and root.
        Returns (new vertex id, new face ids).
        """
        if not self.is_surface_edge(u, v):
            raise ValueError(f"({u}, {v}) is not a surface edge")
        parent_eid = self._edge_id_by_key[_ekey(u, v)]
        mid = self._add_point(point)
        new_faces: list[int] = []
        for fid in sorted(self._con_at_edge[_ekey(u, v)]):
            tri = self.con_faces[fid]
            source = self.con_source[fid]
            root = self.con_root[fid]
            self._unregister_constrained(fid)
            t1 = tuple(mid if x == v else x for x in tri)
            t2 = tuple(mid if x == u else x for x in tri)
            k1 = self._register_constrained(t1, source, root)
            k2 = self._register_constrained(t2, source, root)
            self.con_children[fid] = (k1, k2)
            new_faces.extend((k1, k2))
        for tid in list(self.tets_around_edge(u, v)):
            verts = self.tet_verts[tid]
            cls = self.tet_class[tid]
            self._remove_tet(tid)
            t1 = tuple(mid if x == v else x for x in verts)
            t2 = tuple(mid if x == u else x for x in verts)
            self.tet_class[self._add_tet(t1)] = cls
            self.tet_class[self._add_tet(t2)] = cls
        kids = (self._edge_id_by_key[_ekey(u, mid)], self._edge_id_by_key[_ekey(mid, v)])
        self.edge_children[parent_eid] = kids
        for kid in kids:
            self.edge_root[kid] = self.edge_root[parent_eid]
        return mid, tuple(new_faces)

    def live_descendants(self, fid: int) -> list[int]:
        """Live constrained faces descending from fid (fid itself if live)."""
        if fid in self.con_faces:
            return [fid]
        out: list[int] = []
        for child in self.con_children.get(fid, ()):  # pragma: no branch
            out.extend(self.live_descendants(child))
        return out

    def move_vertex(self, vid: int, new_point: np.ndarray) -> bool:
        """Move a vertex if no incident tet flips or degenerates."""
        new_point = np.asarray(new_point, dtype=float)
        for tid in self.cells_at_vertex(vid):
            pts = [
                new_point if w == vid else self.points[w] for w in self.tet_verts[tid]
            ]
            if orient3d(*pts) <= 0:
                return False
        self.points[vid] = new_point.copy()
        return True

    def check(self) -> None:
        """Internal consistency assertions (used by tests)."""
        for tid, verts in self.tet_verts.items():
            pts = [self.points[v] for v in verts]
            assert orient3d(*pts) > 0, tid
            assert tid in self.tet_class, tid
        for key, tids in self._face_tets.items():
            assert 1 <= len(tids) <= 2, (key, tids)
            if len(tids) == 2:
                same = self.tet_class[tids[0]] == self.tet_class[tids[1]]
                if key in self._con_by_key:
                    assert not same, key
                else:
                    assert same, key
        for fid, tri in self.con_faces.items():
            assert self._con_by_key[_fkey(*tri)] == fid
            assert self.tets_of_face(*tri), fid
        for ekey, fids in self._con_at_edge.items():
            assert len(fids) == 2, (ekey, fids)
            assert ekey in self._edge_id_by_key, ekey
        for ekey, eid in self._edge_id_by_key.items():
            assert self.edge_verts[eid] == ekey
        vol = self.interior_volume()
        assert abs(vol - self.interior_volume_built) <= 1e-9 * max(1.0, abs(vol)), (
            vol,
            self.interior_volume_built,
        )


def orient_volume(a, b, c, d) -> float:
    """Signed volume of tet (a, b, c, d)."""
    return float(np.dot(np.cross(b - a, c - a), d - a)) / 6.0
