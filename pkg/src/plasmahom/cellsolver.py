"""Complex-valued scalar cell problem on the periodic unit-cell mesh.

For each in-plane direction j the corrector chi_j is the Y-periodic,
zero-mean potential satisfying, for every periodic test function psi,

    int_Y  eps (e_j + grad chi) . grad psi
  - eta * int_Sigma  (t . (e_j + grad chi)) (t . grad psi)  =  0,

with the surface admittance eta = sigma/(i omega).  Discretization uses
continuous piecewise-linear elements (the potential is continuous across the
sheet; the interface term only needs tangential derivatives along interface
segments).  Unknowns live on periodic vertex classes and the additive
constant is fixed by a zero-mean Lagrange multiplier, which keeps the
bordered system complex symmetric.

The out-of-plane direction never enters the 2D solve: nothing varies along
the invariant axis, so that corrector vanishes identically and its tensor
entries are evaluated in closed form elsewhere.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (AssemblyContractError, InvalidParameterError, SolverError,
                     UnsupportedDirectionError)
from .materials import MaterialSpec
from .meshing import Mesh


@dataclass
class OperatorParts:
    """Frequency-independent pieces of the cell operator on one mesh.

    volume: stiffness with the bulk permittivity folded in, plus forcing
    vectors for both in-plane directions.  surface: one unit-admittance
    tangential stiffness and forcing pair per interface component, to be
    scaled by -eta at assembly time.  mean: lumped L2 vertex weights used by
    the zero-mean constraint.
    """

    volume_matrix: sp.csr_matrix
    volume_forcing: np.ndarray          # (2, n_classes)
    surface_matrices: list
    surface_forcing: np.ndarray         # (n_components, 2, n_classes)
    mean_vector: np.ndarray
    areas: np.ndarray
    grads: np.ndarray                   # (n_triangles, 3, 2) P1 basis gradients
    eps_by_triangle: np.ndarray
    n_classes: int


def _p1_geometry(mesh: Mesh):
    p = mesh.vertices
    t = mesh.triangles
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    det = ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
           - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))
    areas = 0.5 * det
    grads = np.empty((len(t), 3, 2))
    grads[:, 0, 0] = b[:, 1] - c[:, 1]
    grads[:, 0, 1] = c[:, 0] - b[:, 0]
    grads[:, 1, 0] = c[:, 1] - a[:, 1]
    grads[:, 1, 1] = a[:, 0] - c[:, 0]
    grads[:, 2, 0] = a[:, 1] - b[:, 1]
    grads[:, 2, 1] = b[:, 0] - a[:, 0]
    grads /= det[:, None, None]
    return areas, grads


def _eps_per_triangle(mesh: Mesh, mat: MaterialSpec) -> np.ndarray:
    eps = mat.eps_bulk
    if callable(eps):
        centroids = mesh.vertices[mesh.triangles].mean(axis=1)
        return np.array([complex(eps(x, y)) for x, y in centroids])
    return np.full(mesh.n_triangles, complex(eps))


def build_operator_parts(mesh: Mesh, mat: MaterialSpec) -> OperatorParts:
    """Assemble all frequency-independent operator pieces over periodic
    vertex classes."""
    cls = mesh.vertex_class
    n = mesh.n_classes
    areas, grads = _p1_geometry(mesh)
    eps_t = _eps_per_triangle(mesh, mat)

    tri_cls = cls[mesh.triangles]                      # (M, 3)
    w = (eps_t * areas)[:, None, None]
    local = np.einsum("tid,tjd->tij", grads, grads) * w
    rows = np.repeat(tri_cls, 3, axis=1).ravel()
    cols = np.tile(tri_cls, (1, 3)).ravel()
    K = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    # volume forcing: -int eps e_j . grad(phi_a)
    fvol = np.zeros((2, n), dtype=complex)
    for j in range(2):
        contrib = -(eps_t * areas)[:, None] * grads[:, :, j]
        np.add.at(fvol[j], tri_cls.ravel(), contrib.ravel())

    lengths = mesh.segment_lengths()
    tangents = mesh.segment_tangents()
    seg_cls = cls[mesh.interface_segments]             # (S, 2)
    n_comp = int(mesh.segment_component.max()) + 1 if len(mesh.segment_component) else 1
    surf_mats, surf_force = [], np.zeros((n_comp, 2, n), dtype=complex)
    for comp in range(n_comp):
        sel = np.flatnonzero(mesh.segment_component == comp)
        # tangential stiffness: (d/dt phi_a)(d/dt phi_b) * |s|; nodal
        # derivatives along a segment are -1/L and +1/L
        sl = lengths[sel]
        sc = seg_cls[sel]
        loc = np.array([[1.0, -1.0], [-1.0, 1.0]])[None, :, :] / sl[:, None, None]
        r = np.repeat(sc, 2, axis=1).ravel()
        c = np.tile(sc, (1, 2)).ravel()
        S = sp.coo_matrix((loc.ravel(), (r, c)), shape=(n, n)).tocsr()
        surf_mats.append(S)
        # unit-admittance forcing: int (t . e_j)(t . grad phi_a) ds; the
        # nodal tangential derivatives integrate to -1 and +1 per segment
        for j in range(2):
            tv = tangents[sel, j]
            np.add.at(surf_force[comp, j], sc[:, 0], -tv)
            np.add.at(surf_force[comp, j], sc[:, 1], tv)

    mean = np.zeros(n)
    np.add.at(mean, tri_cls.ravel(),
              np.repeat(areas / 3.0, 3))

    return OperatorParts(volume_matrix=K, volume_forcing=fvol,
                         surface_matrices=surf_mats, surface_forcing=surf_force,
                         mean_vector=mean, areas=areas, grads=grads,
                         eps_by_triangle=eps_t, n_classes=n)


@dataclass
class CellSystem:
    """One assembled cell problem: operator, forcing and mean constraint."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    mean_vector: np.ndarray
    direction: int
    omega_tilde: float
    mesh: Mesh
    parts: OperatorParts = field(repr=False, default=None)

    @property
    def n_unknowns(self):
        return self.matrix.shape[0]

    def symmetry_defect(self) -> float:
        d = self.matrix - self.matrix.T
        return float(np.abs(d.data).max()) if d.nnz else 0.0


def assemble(mesh: Mesh, mat: MaterialSpec, omega_tilde: float, j: int,
             parts: OperatorParts | None = None) -> CellSystem:
    """Assemble the cell system for in-plane direction j (1 or 2).

    The invariant direction j = 3 is rejected: its corrector vanishes
    identically and the corresponding tensor entries have a closed form.
    Precomputed `parts` may be passed to amortize assembly over a frequency
    sweep on a fixed mesh.
    """
    if j == 3:
        raise UnsupportedDirectionError(
            "direction 3 is invariant: chi_3 = 0; use the closed-form entry")
    if j not in (1, 2):
        raise InvalidParameterError(f"direction must be 1 or 2, got {j}")
    if omega_tilde <= 0.0:
        raise InvalidParameterError(
            f"omega_tilde must be positive, got {omega_tilde}")
    if parts is None:
        parts = build_operator_parts(mesh, mat)
    if mat.n_sigma_components() not in (1, len(parts.surface_matrices)):
        raise AssemblyContractError(
            "material sigma components do not match mesh interface components")

    jj = j - 1
    A = parts.volume_matrix.astype(complex)
    rhs = parts.volume_forcing[jj].copy()
    for comp, S in enumerate(parts.surface_matrices):
        eta = mat.eta_surface(omega_tilde, comp if mat.n_sigma_components() > 1 else 0)
        if eta != 0.0:
            A = A - eta * S
            rhs = rhs + eta * parts.surface_forcing[comp, jj]
    return CellSystem(matrix=A.tocsr(), rhs=rhs, mean_vector=parts.mean_vector,
                      direction=j, omega_tilde=omega_tilde, mesh=mesh,
                      parts=parts)


@dataclass
class CorrectorField:
    """Corrector solution expanded to all mesh vertices."""

    direction: int
    nodal_values: np.ndarray
    mesh: Mesh
    residual: float = 0.0
    iterations: int = 0

    def class_values(self) -> np.ndarray:
        rep = np.zeros(self.mesh.n_classes, dtype=int)
        rep[self.mesh.vertex_class] = np.arange(self.mesh.n_vertices)
        return self.nodal_values[rep]


def solve(system: CellSystem, tol: float = 1e-10,
          method: str = "direct") -> CorrectorField:
    """Solve for the corrector; residual contract ||Ax-b|| <= tol * ||b||.

    `method` is "direct" (sparse LU) or "iterative" (GMRES with diagonal
    preconditioning) -- the latter is intended for meshes too large to
    factor.  A zero right-hand side short-circuits to the zero field.
    """
    if not 0.0 < tol <= 1e-6:
        raise InvalidParameterError(f"tol must lie in (0, 1e-6], got {tol}")
    n = system.n_unknowns
    bnorm = float(np.linalg.norm(system.rhs))
    if bnorm == 0.0:
        return CorrectorField(system.direction,
                              np.zeros(system.mesh.n_vertices, dtype=complex),
                              system.mesh)

    m = system.mean_vector
    A = sp.bmat([[system.matrix, m[:, None]], [m[None, :], None]],
                format="csc", dtype=complex)
    b = np.concatenate([system.rhs, [0.0]])

    t0 = time.perf_counter()
    iterations = 0
    if method == "direct":
        try:
            lu = spla.splu(A)
        except RuntimeError as exc:
            raise SolverError(f"sparse factorization failed: {exc}") from exc
        x = lu.solve(b)
    elif method == "iterative":
        # the bordered operator is indefinite, so a bare diagonal scaling
        # stalls; an incomplete factorization is the cheapest working
        # preconditioner at this scale
        try:
            ilu = spla.spilu(A, drop_tol=1e-5, fill_factor=20.0)
        except RuntimeError as exc:
            raise SolverError(f"incomplete factorization failed: {exc}") from exc
        precond = spla.LinearOperator(A.shape, ilu.solve)
        counter = {"n": 0}

        def cb(_):
            counter["n"] += 1

        x, info = spla.gmres(A, b, rtol=tol * 0.01, atol=0.0, restart=200,
                             maxiter=2000, M=precond,
                             callback=cb, callback_type="pr_norm")
        iterations = counter["n"]
        if info != 0:
            raise SolverError(
                f"gmres stalled after {iterations} iterations (info={info})")
    else:
        raise InvalidParameterError(f"unknown solve method {method!r}")

    residual = float(np.linalg.norm(A @ x - b) / bnorm)
    if residual > tol:
        raise SolverError(
            f"residual {residual:.3e} above tolerance {tol:.1e} "
            f"({method}, {time.perf_counter() - t0:.2f}s)")

    chi_cls = x[:n]
    mean = float(np.abs(m @ chi_cls))
    if mean > 1e2 * tol * max(1.0, float(np.abs(chi_cls).max())):
        raise SolverError(f"zero-mean constraint violated: |mean| = {mean:.3e}")
    chi = chi_cls[system.mesh.vertex_class]
    return CorrectorField(system.direction, chi, system.mesh,
                          residual=residual, iterations=iterations)


def corrector_gradient(field: CorrectorField) -> np.ndarray:
    """Piecewise-constant complex gradient per triangle, (M, 2)."""
    mesh = field.mesh
    _, grads = _p1_geometry(mesh)
    vals = field.nodal_values[mesh.triangles]          # (M, 3)
    return np.einsum("ti,tid->td", vals, grads)


def weak_residual(system: CellSystem, field: CorrectorField) -> float:
    """Max discrete weak-form residual against all nodal test functions,
    relative to the forcing norm (Galerkin consistency measure)."""
    cls_vals = np.zeros(system.n_unknowns, dtype=complex)
    cls_vals[system.mesh.vertex_class] = field.nodal_values
    r = system.matrix @ cls_vals - system.rhs
    # project out the mean-constraint component
    m = system.mean_vector
    r = r - m * (m @ r) / (m @ m)
    bnorm = float(np.linalg.norm(system.rhs))
    return float(np.linalg.norm(r) / bnorm) if bnorm else float(np.linalg.norm(r))


def export_corrector_csv(field: CorrectorField, path):
    """CSV dump: vertex_id, y1, y2, re_chi, im_chi."""
    mesh = field.mesh
    with open(path, "w") as f:
        f.write("vertex_id,y1,y2,re_chi,im_chi\n")
        for i, ((x, y), v) in enumerate(zip(mesh.vertices, field.nodal_values)):
            f.write(f"{i},{x:.17g},{y:.17g},{v.real:.17g},{v.imag:.17g}\n")
