"""Grid solver for the order-m energy with several point charges.

The multi-charge problem has no radial reduction, so this module minimizes
the discrete energy directly on a cubic grid over a box:

    I(u) = h^3 * sum_cells sum_{h<=m} (alpha_h / 2h) s_cell^h
           - sum_k a_k u(charge node),

where s_cell is the squared gradient magnitude of the cell, assembled as
the mean of the four squared edge differences per axis divided by h^2.
That choice is second-order consistent at cell centers, strictly convex in
the edge differences (no checkerboard null mode), and keeps the Dirac
pairing as a plain nodal value at the snapped charge node.

Boundary data is Dirichlet: either zero or the superposition of exact
single-charge tails recentered at each charge, which is what the field
looks like far from a compact charge cluster.  Minimization runs a
quasi-Newton descent (L-BFGS with line search) on the smooth convex
objective; the reported residual is the max-norm of the objective gradient
over interior nodes.

Grid solves are restricted to three dimensions; the radial module covers
general N for single charges.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .core import ChargeConfig, taylor_coefficients
from .quad import exact_radial_profile, shape_constant_A

__all__ = [
    "DiscreteProblem",
    "GridField",
    "ComparisonReport",
    "ExtremumRecord",
    "SegmentRecord",
    "GradientSupReport",
    "assemble_problem",
    "discrete_energy",
    "discrete_energy_gradient",
    "minimize_energy",
    "compare_solutions",
    "extremum_report",
    "segment_report",
    "gradient_sup",
]


# ---------------------------------------------------------------------------
# Problem assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteProblem:
    """Discretized multi-charge problem on a box with spacing h.

    ``shape`` counts nodes per axis.  ``charges`` holds (node index triple,
    strength) pairs after snapping (and merging of coincident snaps);
    ``snap_distances`` records how far each input charge moved.
    ``boundary_values`` is a full-grid array whose boundary entries carry
    the Dirichlet data (interior entries are zero).
    """

    config: ChargeConfig | None
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    h: float
    m: int
    shape: tuple[int, int, int]
    boundary_rule: str
    boundary_values: np.ndarray
    charges: tuple[tuple[tuple[int, int, int], float], ...]
    snap_distances: tuple[float, ...]

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[1:-1, 1:-1, 1:-1] = True
        return mask

    def node_position(self, idx: tuple[int, int, int]) -> np.ndarray:
        return np.asarray(self.lo) + self.h * np.asarray(idx, dtype=float)

    def initial_guess(self) -> np.ndarray:
        """Boundary data extended by zero into the interior."""
        return self.boundary_values.copy()


def _boundary_node_coords(shape, lo, h):
    """Coordinates of the boundary nodes, with their index arrays."""
    nx, ny, nz = shape
    ii, jj, kk = np.meshgrid(
        np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"
    )
    on_bd = (
        (ii == 0) | (ii == nx - 1) | (jj == 0) | (jj == ny - 1)
        | (kk == 0) | (kk == nz - 1)
    )
    idx = np.argwhere(on_bd)
    coords = np.asarray(lo) + h * idx
    return idx, coords


def _superposition_boundary(shape, lo, h, charges_pos, strengths):
    """Dirichlet data from exact single-charge tails recentered at charges."""
    idx, coords = _boundary_node_coords(shape, lo, h)
    values = np.zeros(len(idx))
    for pos, a in zip(charges_pos, strengths):
        dists = np.linalg.norm(coords - np.asarray(pos), axis=1)
        radii, inverse = np.unique(np.round(dists, 12), return_inverse=True)
        profile = exact_radial_profile(a, 3, radii, abs_tol=1e-11)
        values += profile.u[inverse]
    out = np.zeros(shape)
    out[idx[:, 0], idx[:, 1], idx[:, 2]] = values
    return out


def assemble_problem(
    config: ChargeConfig | None,
    box_lo,
    box_hi,
    h: float,
    m: int,
    boundary_rule: str = "radial-superposition",
) -> DiscreteProblem:
    """Build a DiscreteProblem, snapping charges to grid nodes.

    Validation: the spacing must divide every box edge; every charge must
    snap to a strictly interior node; with two or more charges the spacing
    must resolve at least 8 nodes between the closest snapped pair and the
    box must clear every charge by at least the minimum charge spacing
    (below twice that a truncation warning is issued).  Charges that snap
    onto the same node merge with summed strengths.  ``config=None``
    assembles a chargeless problem (boundary data only, zero-rule
    boundaries give the zero field).
    """
    lo = tuple(float(x) for x in np.broadcast_to(box_lo, (3,)))
    hi = tuple(float(x) for x in np.broadcast_to(box_hi, (3,)))
    h = float(h)
    if h <= 0:
        raise ValueError(f"grid spacing must be positive, got {h}")
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"order m must be an integer >= 1, got {m!r}")
    if boundary_rule not in ("zero", "radial-superposition"):
        raise ValueError(f"unknown boundary rule {boundary_rule!r}")
    counts = []
    for d in range(3):
        edge = hi[d] - lo[d]
        if edge <= 0:
            raise ValueError(f"box is empty along axis {d}")
        n = edge / h
        n_int = round(n)
        if n_int < 2 or abs(n - n_int) > 1e-9 * max(1.0, abs(n)):
            raise ValueError(
                f"spacing {h} does not divide the box edge {edge} along axis {d}"
            )
        counts.append(n_int)
    shape = (counts[0] + 1, counts[1] + 1, counts[2] + 1)

    snapped: dict[tuple[int, int, int], float] = {}
    snap_distances: list[float] = []
    positions: list[tuple[float, ...]] = []
    strengths: list[float] = []
    if config is not None:
        if config.dim != 3:
            raise ValueError("grid solves are restricted to dimension 3")
        for charge in config.charges:
            pos = np.asarray(charge.pos)
            rel = (pos - np.asarray(lo)) / h
            node = tuple(int(round(x)) for x in rel)
            if not all(0 < node[d] < shape[d] - 1 for d in range(3)):
                raise ValueError(
                    f"charge at {charge.pos} does not snap to a strictly "
                    "interior grid node"
                )
            snap = float(np.linalg.norm(pos - (np.asarray(lo) + h * np.asarray(node))))
            snap_distances.append(snap)
            if node in snapped:
                # degenerate input: the continuum model assumes distinct
                # charge points, so collisions collapse into one source
                warnings.warn(
                    f"charges coincide at node {node} after snapping; "
                    "strengths merged",
                    stacklevel=2,
                )
                snapped[node] += charge.strength
            else:
                snapped[node] = charge.strength
            positions.append(charge.pos)
            strengths.append(charge.strength)
        # resolution and clearance guards act on the snapped geometry
        nodes = list(snapped)
        if len(nodes) >= 2:
            min_spacing = h * min(
                math.dist(a, b)
                for i, a in enumerate(nodes)
                for b in nodes[i + 1 :]
            )
            if min_spacing / h < 8:
                raise ValueError(
                    f"spacing {h} is too coarse: fewer than 8 nodes between the "
                    f"closest charges (separation {min_spacing:g})"
                )
            warned_clearance = False
            for node in nodes:
                pos = np.asarray(lo) + h * np.asarray(node)
                bd_dist = min(
                    min(pos[d] - lo[d], hi[d] - pos[d]) for d in range(3)
                )
                if bd_dist < min_spacing:
                    raise ValueError(
                        f"box too small: charge node at "
                        f"{tuple(float(x) for x in pos)} clears the boundary "
                        f"by {bd_dist:g} < min charge spacing {min_spacing:g}"
                    )
                if not warned_clearance and bd_dist < 2.0 * min_spacing:
                    warnings.warn(
                        f"boundary clearance {bd_dist:g} is below twice the min "
                        f"charge spacing {min_spacing:g}; truncation effects grow",
                        stacklevel=2,
                    )
                    warned_clearance = True

    if boundary_rule == "zero" or config is None:
        boundary_values = np.zeros(shape)
    else:
        boundary_values = _superposition_boundary(
            shape, lo, h, positions, strengths
        )
        bound = sum(abs(a) ** 0.5 for a in strengths) * shape_constant_A(3)
        max_bd = float(np.max(np.abs(boundary_values)))
        if max_bd > bound * (1.0 + 1e-9):
            raise AssertionError(
                f"boundary data {max_bd:g} exceeds the central-value bound {bound:g}"
            )
    return DiscreteProblem(
        config=config,
        lo=lo,
        hi=hi,
        h=h,
        m=m,
        shape=shape,
        boundary_rule=boundary_rule,
        boundary_values=boundary_values,
        charges=tuple(sorted(snapped.items())),
        snap_distances=tuple(snap_distances),
    )


# ---------------------------------------------------------------------------
# Discrete energy and gradient
# ---------------------------------------------------------------------------


def _cell_s(U: np.ndarray, h: float):
    """Per-cell squared gradient magnitude and the raw edge differences."""
    dx = U[1:, :, :] - U[:-1, :, :]
    dy = U[:, 1:, :] - U[:, :-1, :]
    dz = U[:, :, 1:] - U[:, :, :-1]
    dx2, dy2, dz2 = dx * dx, dy * dy, dz * dz
    cx = 0.25 * (dx2[:, :-1, :-1] + dx2[:, 1:, :-1] + dx2[:, :-1, 1:] + dx2[:, 1:, 1:])
    cy = 0.25 * (dy2[:-1, :, :-1] + dy2[1:, :, :-1] + dy2[:-1, :, 1:] + dy2[1:, :, 1:])
    cz = 0.25 * (dz2[:-1, :-1, :] + dz2[1:, :-1, :] + dz2[:-1, 1:, :] + dz2[1:, 1:, :])
    s = (cx + cy + cz) / (h * h)
    return s, dx, dy, dz


def _density_and_sigma(s: np.ndarray, alphas: tuple[float, ...]):
    """W(s) = sum (alpha_h/2h) s^h and sigma(s) = 2 W'(s) by Horner."""
    W = np.zeros_like(s)
    sigma = np.zeros_like(s)
    for h in range(len(alphas), 0, -1):
        a = alphas[h - 1]
        W = W * s + a / (2 * h)
        sigma = sigma * s + a
    return W * s, sigma


def _sigma_prime(s: np.ndarray, alphas: tuple[float, ...]) -> np.ndarray:
    """sigma'(s) = sum_{h>=2} alpha_h (h-1) s^(h-2) by Horner."""
    out = np.zeros_like(s)
    for h in range(len(alphas), 1, -1):
        out = out * s + alphas[h - 1] * (h - 1)
    return out


def _scatter4_x(cells: np.ndarray, like: np.ndarray) -> np.ndarray:
    out = np.zeros_like(like)
    out[:, :-1, :-1] += cells
    out[:, 1:, :-1] += cells
    out[:, :-1, 1:] += cells
    out[:, 1:, 1:] += cells
    return out


def _scatter4_y(cells: np.ndarray, like: np.ndarray) -> np.ndarray:
    out = np.zeros_like(like)
    out[:-1, :, :-1] += cells
    out[1:, :, :-1] += cells
    out[:-1, :, 1:] += cells
    out[1:, :, 1:] += cells
    return out


def _scatter4_z(cells: np.ndarray, like: np.ndarray) -> np.ndarray:
    out = np.zeros_like(like)
    out[:-1, :-1, :] += cells
    out[1:, :-1, :] += cells
    out[:-1, 1:, :] += cells
    out[1:, 1:, :] += cells
    return out


def _gather4_x(edges: np.ndarray) -> np.ndarray:
    return edges[:, :-1, :-1] + edges[:, 1:, :-1] + edges[:, :-1, 1:] + edges[:, 1:, 1:]


def _gather4_y(edges: np.ndarray) -> np.ndarray:
    return edges[:-1, :, :-1] + edges[1:, :, :-1] + edges[:-1, :, 1:] + edges[1:, :, 1:]


def _gather4_z(edges: np.ndarray) -> np.ndarray:
    return edges[:-1, :-1, :] + edges[1:, :-1, :] + edges[:-1, 1:, :] + edges[1:, 1:, :]


def discrete_energy_hessp(
    problem: DiscreteProblem, U: np.ndarray, V: np.ndarray
) -> np.ndarray:
    """Action of the energy Hessian at U on a full-grid direction V.

    Per cell, with d the edge differences and w their counterparts for V,

        (H w)_e = (h/4) sigma(s) w_e + (h/(8 h^2)) sigma'(s) (d . w) d_e,

    assembled with the same scatter pattern as the gradient.  The charge
    term is linear and drops out.
    """
    h = problem.h
    alphas = taylor_coefficients(problem.m).alphas
    s, dx, dy, dz = _cell_s(U, h)
    _, sigma = _density_and_sigma(s, alphas)
    sp = _sigma_prime(s, alphas)
    vdx = V[1:, :, :] - V[:-1, :, :]
    vdy = V[:, 1:, :] - V[:, :-1, :]
    vdz = V[:, :, 1:] - V[:, :, :-1]
    # P = sum over the cell's 12 edges of d_e * w_e
    P = (
        _gather4_x(dx * vdx)
        + _gather4_y(dy * vdy)
        + _gather4_z(dz * vdz)
    )
    couple = sp * P / (8.0 * h)  # (h/(8 h^2)) sigma' P, cellwise
    fx = (h / 4.0) * _scatter4_x(sigma, dx) * vdx + _scatter4_x(couple, dx) * dx
    fy = (h / 4.0) * _scatter4_y(sigma, dy) * vdy + _scatter4_y(couple, dy) * dy
    fz = (h / 4.0) * _scatter4_z(sigma, dz) * vdz + _scatter4_z(couple, dz) * dz
    out = np.zeros_like(U)
    out[1:, :, :] += fx
    out[:-1, :, :] -= fx
    out[:, 1:, :] += fy
    out[:, :-1, :] -= fy
    out[:, :, 1:] += fz
    out[:, :, :-1] -= fz
    return out


def discrete_energy(problem: DiscreteProblem, U: np.ndarray) -> float:
    """Energy of a full-grid nodal array under the problem's order."""
    alphas = taylor_coefficients(problem.m).alphas
    s, _, _, _ = _cell_s(U, problem.h)
    W, _ = _density_and_sigma(s, alphas)
    energy = problem.h**3 * float(np.sum(W))
    for node, a in problem.charges:
        energy -= a * float(U[node])
    return energy


def discrete_energy_gradient(
    problem: DiscreteProblem, U: np.ndarray
) -> tuple[float, np.ndarray]:
    """Energy and its exact gradient with respect to every nodal value."""
    h = problem.h
    alphas = taylor_coefficients(problem.m).alphas
    s, dx, dy, dz = _cell_s(U, h)
    W, sigma = _density_and_sigma(s, alphas)
    energy = h**3 * float(np.sum(W))

    # Edge weights: sum of sigma over the (up to four) cells sharing the edge.
    fx = (h / 4.0) * _scatter4_x(sigma, dx) * dx
    fy = (h / 4.0) * _scatter4_y(sigma, dy) * dy
    fz = (h / 4.0) * _scatter4_z(sigma, dz) * dz
    grad = np.zeros_like(U)
    grad[1:, :, :] += fx
    grad[:-1, :, :] -= fx
    grad[:, 1:, :] += fy
    grad[:, :-1, :] -= fy
    grad[:, :, 1:] += fz
    grad[:, :, :-1] -= fz
    for node, a in problem.charges:
        energy -= a * float(U[node])
        grad[node] -= a
    return energy, grad


# ---------------------------------------------------------------------------
# Minimization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridField:
    """A (possibly non-converged) minimizer of the discrete energy."""

    problem: DiscreteProblem
    values: np.ndarray
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    tol: float

    def charge_values(self) -> list[float]:
        return [float(self.values[node]) for node, _ in self.problem.charges]


def minimize_energy(
    problem: DiscreteProblem,
    tol: float = 1e-9,
    max_iter: int = 5000,
    x0: np.ndarray | None = None,
) -> GridField:
    """Minimize the discrete energy over interior nodes, boundary fixed.

    The objective is smooth and strictly convex in the cell gradients, so
    the minimizer is unique and independent of the starting point; descent
    uses L-BFGS with line search.  On success ``grad_norm`` (max-norm of the
    objective gradient over interior nodes) is at most ``tol``.  On budget
    exhaustion the best iterate is returned with ``converged=False`` and the
    caller decides.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    interior = problem.interior_mask()
    U = problem.initial_guess()
    if x0 is not None:
        x_start = np.asarray(x0, dtype=float).ravel()
        if x_start.size != int(interior.sum()):
            raise ValueError("x0 must have one entry per interior node")
    else:
        x_start = U[interior].copy().ravel()

    def objective(x: np.ndarray):
        U[interior] = x
        energy, grad = discrete_energy_gradient(problem, U)
        return energy, grad[interior]

    result = _scipy_minimize(
        objective,
        x_start,
        jac=True,
        method="L-BFGS-B",
        options={
            "maxiter": max_iter,
            "maxfun": 10 * max_iter,
            "ftol": 1e-18,
            "gtol": 0.5 * tol,
            "maxcor": 20,
        },
    )
    iterations = int(result.nit)
    U[interior] = result.x
    energy, grad = discrete_energy_gradient(problem, U)

    # L-BFGS tends to stall within an order of magnitude of tight residual
    # targets; a few inexact Newton steps (CG on the exact Hessian action,
    # backtracking on the convex objective) finish the job.
    polish_budget = min(30, max_iter - iterations)
    for _ in range(max(0, polish_budget)):
        grad_norm = float(np.max(np.abs(grad[interior]))) if interior.any() else 0.0
        if grad_norm <= 0.3 * tol or not interior.any():
            break
        g_int = grad[interior]
        step = _cg_newton_step(problem, U, interior, g_int)
        if step is None:
            break
        alpha = 1.0
        x_cur = U[interior].copy()
        accepted = False
        slope = float(np.dot(g_int, step))
        for _ in range(30):
            U[interior] = x_cur + alpha * step
            e_new, g_new = discrete_energy_gradient(problem, U)
            if e_new <= energy + 1e-4 * alpha * slope:
                energy, grad = e_new, g_new
                iterations += 1
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            U[interior] = x_cur
            energy, grad = discrete_energy_gradient(problem, U)
            break

    grad_norm = float(np.max(np.abs(grad[interior]))) if interior.any() else 0.0
    return GridField(
        problem=problem,
        values=U.copy(),
        energy=float(energy),
        grad_norm=grad_norm,
        iterations=iterations,
        converged=bool(grad_norm <= tol),
        tol=tol,
    )


def _cg_newton_step(
    problem: DiscreteProblem,
    U: np.ndarray,
    interior: np.ndarray,
    g_int: np.ndarray,
) -> np.ndarray | None:
    """Inexact Newton direction: CG on H p = -g restricted to the interior."""
    shape = U.shape

    def hessp(p_int: np.ndarray) -> np.ndarray:
        V = np.zeros(shape)
        V[interior] = p_int
        return discrete_energy_hessp(problem, U, V)[interior]

    p = np.zeros_like(g_int)
    r = -g_int.copy()
    d = r.copy()
    rs = float(np.dot(r, r))
    target = max(1e-4 * rs, 0.0)
    for _ in range(400):
        if rs <= target:
            break
        Hd = hessp(d)
        dHd = float(np.dot(d, Hd))
        if dHd <= 0:
            break  # should not happen on a convex objective
        alpha = rs / dHd
        p += alpha * d
        r -= alpha * Hd
        rs_new = float(np.dot(r, r))
        d = r + (rs_new / rs) * d
        rs = rs_new
    if not np.any(p):
        return None
    return p


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonReport:
    """Ordered-source comparison: u2 <= u1 + sup_boundary(phi2 - phi1).

    ``max_excess`` is the max over nodes of u2 - u1 - boundary_gap; the
    check passes when it does not exceed ten times the coarser solve
    tolerance.
    """

    max_excess: float
    boundary_gap: float
    threshold: float
    passed: bool


def compare_solutions(f1: GridField, f2: GridField) -> ComparisonReport:
    """Check the discrete comparison principle for ordered charge vectors.

    Requires identical geometry/order and rho2 <= rho1 nodewise (charges
    missing on one side count as zero).
    """
    p1, p2 = f1.problem, f2.problem
    if (
        p1.shape != p2.shape
        or p1.lo != p2.lo
        or p1.hi != p2.hi
        or p1.h != p2.h
        or p1.m != p2.m
    ):
        raise ValueError("fields live on different grids or orders")
    a1 = dict(p1.charges)
    a2 = dict(p2.charges)
    for node in set(a1) | set(a2):
        if a2.get(node, 0.0) > a1.get(node, 0.0) + 1e-15:
            raise ValueError(
                f"sources are not ordered: rho2 > rho1 at node {node}"
            )
    bd = ~p1.interior_mask()
    boundary_gap = float(np.max(f2.values[bd] - f1.values[bd]))
    max_excess = float(np.max(f2.values - f1.values - boundary_gap))
    threshold = 10.0 * max(f1.tol, f2.tol)
    return ComparisonReport(
        max_excess=max_excess,
        boundary_gap=boundary_gap,
        threshold=threshold,
        passed=bool(max_excess <= threshold),
    )


@dataclass(frozen=True)
class ExtremumRecord:
    """Local extremum classification of one charge node."""

    node: tuple[int, int, int]
    strength: float
    kind: str  # "max", "min", or "neither"
    margin: float
    matches_charge_sign: bool


def extremum_report(field: GridField) -> list[ExtremumRecord]:
    """Classify every charge node against its 26 grid neighbors.

    A positive charge should be a strict local maximum of the field and a
    negative one a strict local minimum; ``margin`` is the smallest gap to
    a neighbor.  Refuses non-converged fields.
    """
    if not field.converged:
        raise ValueError("extremum classification requires a converged field")
    U = field.values
    out = []
    for node, a in field.problem.charges:
        i, j, k = node
        block = U[i - 1 : i + 2, j - 1 : j + 2, k - 1 : k + 2]
        center = U[i, j, k]
        neighbors = np.array(
            [
                block[di, dj, dk]
                for di in range(3)
                for dj in range(3)
                for dk in range(3)
                if (di, dj, dk) != (1, 1, 1)
            ]
        )
        if np.all(neighbors < center):
            kind = "max"
            margin = float(center - np.max(neighbors))
        elif np.all(neighbors > center):
            kind = "min"
            margin = float(np.min(neighbors) - center)
        else:
            kind = "neither"
            margin = 0.0
        expected = "max" if a > 0 else "min"
        out.append(
            ExtremumRecord(
                node=node,
                strength=a,
                kind=kind,
                margin=margin,
                matches_charge_sign=(kind == expected),
            )
        )
    return out


@dataclass(frozen=True)
class SegmentRecord:
    """Linearity diagnostics of the field along one charge-pair segment."""

    j: int
    l: int
    distance: float
    same_sign: bool
    chord_defect: float
    light_ratio: float
    near_light: bool


def _trilinear(U: np.ndarray, lo, h: float, points: np.ndarray) -> np.ndarray:
    rel = (points - np.asarray(lo)) / h
    base = np.floor(rel).astype(int)
    max_base = np.asarray(U.shape) - 2
    base = np.clip(base, 0, max_base)
    frac = rel - base
    out = np.zeros(len(points))
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                w = (
                    (frac[:, 0] if di else 1 - frac[:, 0])
                    * (frac[:, 1] if dj else 1 - frac[:, 1])
                    * (frac[:, 2] if dk else 1 - frac[:, 2])
                )
                out += w * U[base[:, 0] + di, base[:, 1] + dj, base[:, 2] + dk]
    return out


def segment_report(field: GridField) -> list[SegmentRecord]:
    """Per-pair chord diagnostics of the computed field.

    For each charge pair, samples the field along the joining segment by
    trilinear interpolation and reports the max deviation from the chord
    plus the light-ray ratio |u(x_j) - u(x_l)| / |x_j - x_l|.  A ratio
    within 10h of one flags NEAR-LIGHT-SEGMENT; same-sign pairs should
    never be flagged.
    """
    if not field.converged:
        raise ValueError("segment diagnostics require a converged field")
    problem = field.problem
    U = field.values
    charges = problem.charges
    out = []
    for j in range(len(charges)):
        for l in range(j + 1, len(charges)):
            (node_j, aj), (node_l, al) = charges[j], charges[l]
            pj = problem.node_position(node_j)
            pl = problem.node_position(node_l)
            dist = float(np.linalg.norm(pl - pj))
            uj, ul = float(U[node_j]), float(U[node_l])
            n_samples = max(17, 4 * int(dist / problem.h) + 1)
            t = np.linspace(0.0, 1.0, n_samples)
            points = pj[None, :] + t[:, None] * (pl - pj)[None, :]
            u_line = _trilinear(U, problem.lo, problem.h, points)
            chord = uj + t * (ul - uj)
            defect = float(np.max(np.abs(u_line - chord)))
            ratio = abs(uj - ul) / dist
            # The allowance 10h only separates light-like chords from the
            # rest when it stays below one; coarser grids cannot assert the
            # flag at all.
            threshold = 1.0 - 10.0 * problem.h
            out.append(
                SegmentRecord(
                    j=j,
                    l=l,
                    distance=dist,
                    same_sign=(aj * al > 0),
                    chord_defect=defect,
                    light_ratio=ratio,
                    near_light=bool(threshold > 0.0 and ratio > threshold),
                )
            )
    return out


@dataclass(frozen=True)
class GradientSupReport:
    """Largest cell gradient magnitude outside an exclusion radius."""

    sup: float
    argmax_distance: float
    exclusion_radius: float
    cells_considered: int


def gradient_sup(field: GridField, exclusion_radius: float = 0.0) -> GradientSupReport:
    """Max discrete gradient magnitude over cells away from the charges.

    Strictly spacelike fields keep this below one; the order-m minimizer
    only exceeds it inside the charge cells, so the sup is reported together
    with the distance (cell center to nearest charge) where it is attained.
    """
    problem = field.problem
    s, _, _, _ = _cell_s(field.values, problem.h)
    mag = np.sqrt(s)
    nx, ny, nz = s.shape
    centers = (
        np.stack(
            np.meshgrid(
                np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"
            ),
            axis=-1,
        ).reshape(-1, 3)
        + 0.5
    ) * problem.h + np.asarray(problem.lo)
    if problem.charges:
        dmin = np.full(len(centers), np.inf)
        for node, _ in problem.charges:
            cpos = problem.node_position(node)
            dmin = np.minimum(dmin, np.linalg.norm(centers - cpos, axis=1))
    else:
        dmin = np.full(len(centers), np.inf)
    flat = mag.ravel()
    mask = dmin > exclusion_radius
    if not mask.any():
        return GradientSupReport(0.0, math.nan, exclusion_radius, 0)
    masked = np.where(mask, flat, -np.inf)
    arg = int(np.argmax(masked))
    return GradientSupReport(
        sup=float(flat[arg]),
        argmax_distance=float(dmin[arg]),
        exclusion_radius=float(exclusion_radius),
        cells_considered=int(mask.sum()),
    )
