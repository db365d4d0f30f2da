"""Dimension-reduction quadrature driver.

The driver recasts the interface defined by the input polynomial level sets
as the graph of a multi-valued height function along a chosen axis.  One
build pass per level assembles the polynomials bounding the base domain one
dimension down (face restrictions, pseudo-discriminants and pairwise
resultants, each guarded and filtered by masks); evaluation then recurses
through the resulting plan, placing 1-D quadrature nodes on every interface
subinterval of every vertical line.  Plans are immutable and reusable across
node counts and scheme choices.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .bernstein import (
    BoxMap,
    TensorPoly,
    _line_restrict_coeffs,
    differentiate,
    evaluate,
    face_restrict,
)
from .errors import DegenerateGeometryError
from .masks import (
    Mask,
    collapse_mask,
    face_restriction_mask,
    full_mask,
    intersection_mask,
    nonzero_mask,
)
from .quad1d import nodes_weights
from .resultants import pseudo_discriminant, resultant
from .roots import roots

__all__ = [
    "PhiMasked",
    "EngineConfig",
    "QuadRule",
    "Plan",
    "build_plan",
    "choose_height_direction",
    "build_volume",
    "f_eval",
    "build_surface",
    "build_rule",
    "simplex_volume",
    "cluster_by_signs",
]

_MODES = ("volume", "surface", "surface_flux")

# Mechanism-1 surface integration needs |d_k phi| / |grad phi| bounded away
# from zero so the Jacobian factor stays well-behaved.
_JACOBIAN_FLOOR = 0.01

# Auto scheme policy: tanh-sinh only pays off beyond moderate node counts.
_AUTO_TS_MIN_Q = 11


@dataclass(frozen=True)
class PhiMasked:
    """A level-set polynomial together with its subcell mask."""

    poly: TensorPoly
    mask: Mask

    def __post_init__(self):
        if self.poly.dims != self.mask.dims:
            raise ValueError("polynomial and mask dims differ")


@dataclass(frozen=True)
class EngineConfig:
    """Quadrature configuration.

    ``schemes`` is "auto" or a sequence of per-level kinds ("gl" | "ts"),
    outermost integral first.  ``mask_cells`` is the mask resolution (a power
    of two).  ``use_masks=False`` disables all mask-based elimination and
    filtering; results change only at roundoff level, at the price of
    superfluous subdivisions."""

    q: int = 10
    schemes: str | tuple[str, ...] = "auto"
    mask_cells: int = 8
    mode: str = "volume"
    degenerate_interval_tol: float = 1e-12
    forced_height_axis: int | None = None
    use_masks: bool = True
    newton_cap: int = 12
    max_subdivisions: int = 4

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        m = self.mask_cells
        if m < 1 or m & (m - 1) != 0:
            raise ValueError("mask_cells must be a power of two")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if not isinstance(self.schemes, str):
            object.__setattr__(self, "schemes", tuple(self.schemes))
            if any(k not in ("gl", "ts") for k in self.schemes):
                raise ValueError("scheme kinds must be 'gl' or 'ts'")
        elif self.schemes != "auto":
            raise ValueError("schemes must be 'auto' or a sequence of kinds")


@dataclass(frozen=True)
class QuadRule:
    """Quadrature nodes with positive weights and per-node annotations.

    Volume rules carry scalar weights and the sign of every input polynomial
    at each node; surface rules carry vector (flux-form) weights and unit
    normals, so the non-flux surface integral of f is sum((w . n) f)."""

    nodes: np.ndarray
    weights: np.ndarray
    signs: np.ndarray | None
    normals: np.ndarray | None
    mode: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("nodes", "weights", "signs", "normals"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.ascontiguousarray(arr)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    def __len__(self):
        return self.nodes.shape[0]

    def integrate(self, f: Callable | None = None):
        """Apply the rule to an integrand; f=None integrates 1.

        Volume and flux rules return sum(w * f); for surface rules in
        non-flux use, see ``surface_integral``."""
        if f is None:
            return self.weights.sum(axis=0)
        vals = np.array([f(x) for x in self.nodes])
        if self.weights.ndim == 2:
            return (self.weights * vals[:, None]).sum(axis=0)
        return float(np.dot(self.weights, vals))

    def surface_integral(self, f: Callable | None = None) -> float:
        """Non-flux surface integral, contracting flux weights with normals."""
        if self.normals is None or self.weights.ndim != 2:
            raise ValueError("surface_integral requires a surface rule")
        scalar = np.sum(self.weights * self.normals, axis=1)
        if f is None:
            return float(scalar.sum())
        vals = np.array([f(x) for x in self.nodes])
        return float(np.dot(scalar, vals))


@dataclass(frozen=True)
class Plan:
    """One level of the immutable build tree (reusable across q/schemes)."""

    dims: int
    phis: tuple[PhiMasked, ...]
    k: int | None = None
    child: "Plan | None" = None
    branch_free: bool = True
    leaf_breaks: tuple[float, ...] | None = None
    axis_order: tuple[int, ...] = ()  # original axes, first-eliminated first


# ---------------------------------------------------------------------------
# Input normalisation
# ---------------------------------------------------------------------------

def _as_phi_list(phis, mask_cells: int) -> list[PhiMasked]:
    if isinstance(phis, (TensorPoly, PhiMasked)):
        phis = [phis]
    out = []
    for p in phis:
        if isinstance(p, PhiMasked):
            out.append(p)
        elif isinstance(p, TensorPoly):
            out.append(PhiMasked(p, full_mask(p.dims, mask_cells)))
        else:
            out.append(PhiMasked(TensorPoly(np.asarray(p, dtype=float)),
                                 full_mask(np.asarray(p).ndim, mask_cells)))
    if not out:
        raise ValueError("at least one dimension is required; pass dims via a polynomial")
    d = out[0].poly.dims
    if any(p.poly.dims != d for p in out):
        raise ValueError("all polynomials must share dims")
    return out


def _config(cfg: EngineConfig | None) -> EngineConfig:
    return cfg if cfg is not None else EngineConfig()


# ---------------------------------------------------------------------------
# Height direction
# ---------------------------------------------------------------------------

def _branch_mask(phi: PhiMasked, k: int, use_masks: bool) -> Mask:
    """Mask guarding the pseudo-discriminant of phi along k (shared roots of
    phi and its k-derivative)."""
    if not use_masks:
        return full_mask(phi.poly.dims, phi.mask.cells_per_axis)
    return intersection_mask(phi.poly, phi.mask, differentiate(phi.poly, k), phi.mask)


def _subcell_midpoints(mask: Mask) -> np.ndarray:
    idx = np.argwhere(mask.bits)
    return (idx + 0.5) / mask.cells_per_axis


def _height_scores(phis: Sequence[PhiMasked], nz_masks: Sequence[Mask]) -> np.ndarray:
    d = phis[0].poly.dims
    scores = np.zeros(d)
    for phi, nz in zip(phis, nz_masks):
        mids = _subcell_midpoints(nz)
        if mids.size == 0:
            continue
        grads = np.stack(
            [evaluate(differentiate(phi.poly, ax), mids) for ax in range(d)], axis=1
        )
        denom = np.abs(grads).sum(axis=1)
        ok = denom > 0.0
        if not ok.any():
            continue
        scores += (np.abs(grads[ok]) / denom[ok, None]).sum(axis=0)
    return scores


def choose_height_direction(phis, cfg: EngineConfig | None = None) -> int:
    """Pick the elimination axis: among directions provably free of height
    branching (all of them when none can be proven), maximise the mean
    alignment of interface normals with the axis; ties break low."""
    cfg = _config(cfg)
    phis = _as_phi_list(phis, cfg.mask_cells)
    if cfg.forced_height_axis is not None:
        return int(cfg.forced_height_axis)
    d = phis[0].poly.dims
    if d == 1:
        return 0
    nz = [nonzero_mask(p.poly, p.mask) if cfg.use_masks else p.mask for p in phis]
    active = [i for i, m in enumerate(nz) if m.nonempty]
    candidates = []
    if cfg.use_masks:
        for k in range(d):
            if all(not _branch_mask(phis[i], k, True).nonempty for i in active):
                candidates.append(k)
    if not candidates:
        candidates = list(range(d))
    if len(candidates) == 1:
        return candidates[0]
    scores = _height_scores([phis[i] for i in active], [nz[i] for i in active]) \
        if active else np.zeros(d)
    best = candidates[0]
    for k in candidates[1:]:
        if scores[k] > scores[best]:
            best = k
    return best


# ---------------------------------------------------------------------------
# Plan construction
# ---------------------------------------------------------------------------

def _squeeze_axis(p: TensorPoly, k: int) -> TensorPoly:
    return TensorPoly(np.take(p.coeffs, 0, axis=k))


def _leaf_breakpoints(phis: Sequence[PhiMasked], cfg: EngineConfig) -> tuple[float, ...]:
    breaks: list[float] = []
    for phi in phis:
        c = phi.poly.coeffs
        if np.abs(c).max() == 0.0:
            raise DegenerateGeometryError("identically zero polynomial at base level")
        if c.size == 1:
            continue
        rl = roots(c, newton_cap=cfg.newton_cap, max_depth=cfg.max_subdivisions)
        for y in rl:
            if phi.mask.bits[phi.mask.cell_of([y])]:
                breaks.append(y)
    return tuple(sorted(breaks))


def build_plan(phis, cfg: EngineConfig | None = None,
               forced_axis: int | None = None) -> Plan:
    """Run the per-level analysis down to the 1-D base case.

    The plan records, per level, the polynomials and masks in play, the
    elimination axis, whether the level is provably branch-free along it,
    and the child plan for the base domain one dimension down."""
    cfg = _config(cfg)
    phi_list = _as_phi_list(phis, cfg.mask_cells)
    return _build_level(phi_list, phi_list[0].poly.dims, cfg, forced_axis,
                        axis_order=())


def _build_level(phi_list: list[PhiMasked], d: int, cfg: EngineConfig,
                 forced_axis: int | None, axis_order: tuple[int, ...]) -> Plan:
    if d == 1:
        return Plan(dims=1, phis=tuple(phi_list), k=None, child=None,
                    leaf_breaks=_leaf_breakpoints(phi_list, cfg),
                    axis_order=axis_order)

    m_cells = cfg.mask_cells
    if cfg.use_masks:
        nz = [nonzero_mask(p.poly, p.mask) for p in phi_list]
        keep = [i for i, mm in enumerate(nz) if mm.nonempty]
        phi_list = [phi_list[i] for i in keep]
        nz = [nz[i] for i in keep]
    else:
        nz = [p.mask for p in phi_list]

    if forced_axis is not None:
        k = int(forced_axis)
    else:
        k = _choose_axis_from_analysis(phi_list, nz, cfg, d)

    psi: list[PhiMasked] = []
    branch_free = True
    derivs = [differentiate(p.poly, k) for p in phi_list]
    const_k = [np.abs(dk.coeffs).max() == 0.0 for dk in derivs]
    for phi, dk, is_const in zip(phi_list, derivs, const_k):
        # Face restrictions bound the base domain wherever the interface
        # crosses the lower or upper face.
        for side in (0, 1):
            face = face_restrict(phi.poly, k, side)
            if np.abs(face.coeffs).max() == 0.0:
                raise DegenerateGeometryError(
                    "interface lies exactly in a cell face"
                )
            fmask = face_restriction_mask(phi.mask, k, side)
            fm = nonzero_mask(face, fmask) if cfg.use_masks else fmask
            if fm.nonempty:
                psi.append(PhiMasked(face, fm))
        # Branch points (vertical tangents and vertical interface pieces).
        if cfg.use_masks:
            guard = intersection_mask(phi.poly, phi.mask, dk, phi.mask)
        else:
            guard = full_mask(d, m_cells)
        if guard.nonempty:
            if is_const:
                # Constant along k: the whole line is interface wherever the
                # squeezed polynomial vanishes; no tangential branching.
                psi.append(PhiMasked(_squeeze_axis(phi.poly, k),
                                     collapse_mask(guard, k)))
            else:
                branch_free = False
                psi.append(PhiMasked(pseudo_discriminant(phi.poly, k),
                                     collapse_mask(guard, k)))
    for i in range(len(phi_list)):
        for j in range(i + 1, len(phi_list)):
            pi, pj = phi_list[i], phi_list[j]
            if const_k[i] and const_k[j]:
                continue  # both handled by their squeezed polynomials
            if cfg.use_masks:
                guard = intersection_mask(pi.poly, pi.mask, pj.poly, pj.mask)
            else:
                guard = full_mask(d, m_cells)
            if guard.nonempty:
                psi.append(PhiMasked(resultant(pi.poly, pj.poly, k),
                                     collapse_mask(guard, k)))

    child = _build_level(psi, d - 1, cfg, None, axis_order)
    return Plan(dims=d, phis=tuple(phi_list), k=k, child=child,
                branch_free=branch_free,
                axis_order=axis_order + (k,))


def _choose_axis_from_analysis(phi_list, nz, cfg, d: int) -> int:
    if not phi_list:
        return 0
    candidates = []
    if cfg.use_masks:
        for k in range(d):
            if all(not _branch_mask(p, k, True).nonempty for p in phi_list):
                candidates.append(k)
    if not candidates:
        candidates = list(range(d))
    if len(candidates) == 1:
        return candidates[0]
    scores = _height_scores(phi_list, nz)
    best = candidates[0]
    for k in candidates[1:]:
        if scores[k] > scores[best]:
            best = k
    return best


# ---------------------------------------------------------------------------
# Scheme resolution
# ---------------------------------------------------------------------------

def _resolve_schemes(plan: Plan, cfg: EngineConfig, q: int) -> list[str]:
    """Per-level scheme kinds indexed by dims-1 (index 0 = outermost).

    Explicit configuration wins.  In auto mode, a level's line integrals see
    endpoint singularities only where its parent level has (unproven absence
    of) height branching; those levels get tanh-sinh for large q."""
    d_top = plan.dims
    if cfg.schemes != "auto":
        kinds = list(cfg.schemes)
        if len(kinds) != d_top:
            raise ValueError(
                f"schemes must list {d_top} kinds (outermost first), got {kinds}"
            )
        return kinds
    kinds = ["gl"] * d_top
    level = plan
    while level.dims > 1:
        # The child level integrates this level's functional.
        child_index = level.dims - 2
        if not level.branch_free and q >= _AUTO_TS_MIN_Q:
            kinds[child_index] = "ts"
        level = level.child
    return kinds


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _accepted_breakpoints(level: Plan, x: np.ndarray, cfg: EngineConfig) -> list[float]:
    out = [0.0, 1.0]
    k = level.k if level.k is not None else 0
    for phi in level.phis:
        if level.dims == 1:
            break
        c = _line_restrict_coeffs(phi.poly.coeffs, x, k)
        if np.abs(c).max() == 0.0:
            raise DegenerateGeometryError(
                "vertical line restriction is identically zero"
            )
        if c.size == 1:
            continue
        rl = roots(c, newton_cap=cfg.newton_cap, max_depth=cfg.max_subdivisions)
        if not len(rl):
            continue
        point = np.empty(level.dims)
        point[:k] = x[:k]
        point[k + 1:] = x[k:]
        for y in rl:
            point[k] = y
            if phi.mask.bits[phi.mask.cell_of(point)]:
                out.append(y)
    if level.dims == 1:
        out.extend(level.leaf_breaks)
    out.sort()
    return out


def _line_emitter(level: Plan, nw, cfg: EngineConfig, emit_arrays: bool,
                  inner: Callable):
    """Functional performing the 1-D quadrature along this level's axis.

    ``inner`` receives lifted points one dimension up: per point when
    emit_arrays is false, else as (points, weights) arrays."""
    k = level.k if level.k is not None else 0
    dims = level.dims
    tol = cfg.degenerate_interval_tol
    ref_nodes, ref_weights = nw.nodes, nw.weights
    q = ref_nodes.size

    def functional(x: np.ndarray, w: float) -> None:
        breaks = _accepted_breakpoints(level, x, cfg)
        for a, b in zip(breaks[:-1], breaks[1:]):
            if b - a <= tol:
                continue
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            ys = mid + half * ref_nodes
            ws = (w * half) * ref_weights
            if emit_arrays:
                pts = np.empty((q, dims))
                pts[:, :k] = x[:k]
                pts[:, k] = ys
                pts[:, k + 1:] = x[k:]
                inner(pts, ws)
            else:
                point = np.empty(dims)
                point[:k] = x[:k]
                point[k + 1:] = x[k:]
                for y, wy in zip(ys, ws):
                    point[k] = y
                    inner(point.copy(), wy)

    return functional


def _surface_emitter(level: Plan, cfg: EngineConfig, grad_polys, sink):
    """Top-level functional for surface modes: evaluates interface points on
    the vertical line above each base point and hands (point, weight,
    poly index, gradient) to the sink."""
    k = level.k
    dims = level.dims

    def functional(x: np.ndarray, w: float) -> None:
        point = np.empty(dims)
        point[:k] = x[:k]
        point[k + 1:] = x[k:]
        for i, phi in enumerate(level.phis):
            c = _line_restrict_coeffs(phi.poly.coeffs, x, k)
            if np.abs(c).max() == 0.0:
                raise DegenerateGeometryError(
                    "vertical line restriction is identically zero"
                )
            if c.size == 1:
                continue
            rl = roots(c, newton_cap=cfg.newton_cap, max_depth=cfg.max_subdivisions)
            for y in rl:
                point[k] = y
                if not phi.mask.bits[phi.mask.cell_of(point)]:
                    continue
                grad = np.array([evaluate(g, point) for g in grad_polys[i]])
                sink(point.copy(), w, i, grad)

    return functional


def _drive(plan: Plan, cfg: EngineConfig, q: int, top_functional) -> None:
    """Wrap the plan levels below the top into nested line integrals and run."""
    kinds = _resolve_schemes(plan, cfg, q)
    g = top_functional
    level = plan.child if plan.dims > 1 else None
    chain = []
    while level is not None:
        chain.append(level)
        level = level.child
    for level in chain:
        nw = nodes_weights(kinds[level.dims - 1], q)
        g = _line_emitter(level, nw, cfg, emit_arrays=False, inner=g)
    g(np.empty(0), 1.0)


def _volume_emit(plan: Plan, cfg: EngineConfig, q: int, sink) -> None:
    """Run the full volume recursion, emitting (points, weights) arrays."""
    kinds = _resolve_schemes(plan, cfg, q)
    nw = nodes_weights(kinds[plan.dims - 1], q)
    top = _line_emitter(plan, nw, cfg, emit_arrays=True, inner=sink)
    if plan.dims == 1:
        top(np.empty(0), 1.0)
        return
    _drive(plan, cfg, q, top)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def f_eval(x, k: int, phis, cfg: EngineConfig | None = None,
           inner_integrand: Callable | None = None) -> float:
    """Vertical line integral above base point x in direction k.

    The line is split at every mask-accepted interface crossing; each
    non-degenerate subinterval gets the level's q-point rule applied to
    ``inner_integrand`` (default 1) at the lifted points."""
    cfg = _config(cfg)
    phi_list = _as_phi_list(phis, cfg.mask_cells)
    d = phi_list[0].poly.dims
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if d == 1:
        level = Plan(dims=1, phis=tuple(phi_list), k=None,
                     leaf_breaks=_leaf_breakpoints(phi_list, cfg))
    else:
        level = Plan(dims=d, phis=tuple(phi_list), k=k)
    kind = cfg.schemes[d - 1] if cfg.schemes != "auto" else "gl"
    total = 0.0

    def sink(point, w):
        nonlocal total
        total += w * (1.0 if inner_integrand is None else inner_integrand(point))

    _line_emitter(level, nodes_weights(kind, cfg.q), cfg,
                  emit_arrays=False, inner=sink)(x, 1.0)
    return total


def build_volume(phis, cfg: EngineConfig | None = None,
                 integrand: Callable | None = None,
                 box: BoxMap | None = None,
                 plan: Plan | None = None) -> float:
    """Integral of ``integrand`` over the box minus the interface.

    With a BoxMap, the integrand receives physical coordinates and the
    result carries the box Jacobian."""
    cfg = _config(cfg)
    if plan is None:
        plan = build_plan(phis, cfg)
    total = 0.0
    jac = box.jacobian if box is not None else 1.0

    if integrand is None:
        def sink(pts, ws):
            nonlocal total
            total += ws.sum()
    else:
        def sink(pts, ws):
            nonlocal total
            xs = box.to_physical(pts) if box is not None else pts
            total += sum(w * integrand(x) for x, w in zip(xs, ws))

    _volume_emit(plan, cfg, cfg.q, sink)
    return total * jac


def _gradient_polys(plan: Plan) -> list[list[TensorPoly]]:
    d = plan.dims
    return [[differentiate(phi.poly, ax) for ax in range(d)] for phi in plan.phis]


def _mechanism_one_axis(phi_list: list[PhiMasked], cfg: EngineConfig) -> int | None:
    """Return an elimination axis for single-direction surface integration,
    or None when no direction is provably branch-free with well-behaved
    Jacobian factors."""
    if not cfg.use_masks:
        return None
    d = phi_list[0].poly.dims
    if d < 2:
        return None
    nz = [nonzero_mask(p.poly, p.mask) for p in phi_list]
    active = [i for i, m in enumerate(nz) if m.nonempty]
    if not active:
        return None
    candidates = [
        k for k in range(d)
        if all(not _branch_mask(phi_list[i], k, True).nonempty for i in active)
    ]
    if not candidates:
        return None
    scores = _height_scores([phi_list[i] for i in active], [nz[i] for i in active])
    for k in sorted(candidates, key=lambda k: -scores[k]):
        ok = True
        for i in active:
            mids = _subcell_midpoints(nz[i])
            if mids.size == 0:
                continue
            grads = np.stack(
                [evaluate(differentiate(phi_list[i].poly, ax), mids) for ax in range(d)],
                axis=1,
            )
            norms = np.linalg.norm(grads, axis=1)
            good = norms > 0
            if not good.any():
                continue
            ratio = np.abs(grads[good, k]) / norms[good]
            if ratio.min() <= _JACOBIAN_FLOOR:
                ok = False
                break
        if ok:
            return k
    return None


def _surface_rule_events(phis, cfg: EngineConfig, box: BoxMap | None):
    """Run the surface machinery and return per-node arrays in flux form:
    (nodes_ref, flux_weights_phys, normals_phys, poly_index)."""
    cfg = _config(cfg)
    phi_list = _as_phi_list(phis, cfg.mask_cells)
    d = phi_list[0].poly.dims
    if d < 2:
        raise ValueError("surface integration requires dims >= 2")
    widths = box.widths if box is not None else np.ones(d)
    jac = float(np.prod(widths))

    nodes, wvecs, normals, indices = [], [], [], []

    def run(forced_k: int, mech_one: bool):
        plan = build_plan(phi_list, cfg, forced_axis=forced_k)
        grad_polys = _gradient_polys(plan)
        k = forced_k

        def sink(point, w, i, grad):
            gphys = grad / widths
            norm = np.linalg.norm(gphys)
            if grad[k] == 0.0 or norm == 0.0:
                # Exact tangency directly on a quadrature line: the sign term
                # vanishes and so does the point's contribution.  Under
                # mechanism 1 this contradicts the well-behaved-Jacobian
                # precondition and is a genuine failure.
                if mech_one:
                    raise DegenerateGeometryError(
                        "vanishing vertical gradient component on the interface"
                    )
                return
            if mech_one:
                wvec = (w * jac / abs(grad[k])) * (grad / widths)
            else:
                wvec = np.zeros(d)
                wvec[k] = w * np.sign(grad[k]) * jac / widths[k]
            nodes.append(point.copy())
            wvecs.append(wvec)
            normals.append(gphys / norm)
            indices.append(i)

        top = _surface_emitter(plan, cfg, grad_polys, sink)
        _drive(plan, cfg, cfg.q, top)

    mech_axis = None
    if cfg.mode == "surface":
        mech_axis = _mechanism_one_axis(phi_list, cfg)
    if mech_axis is not None:
        run(mech_axis, mech_one=True)
        mechanism = f"single-direction (axis {mech_axis})"
    else:
        for k in range(d):
            run(k, mech_one=False)
        mechanism = "aggregated"

    if nodes:
        nodes_arr = np.array(nodes)
        w_arr = np.array(wvecs)
        n_arr = np.array(normals)
        i_arr = np.array(indices)
    else:
        nodes_arr = np.zeros((0, d))
        w_arr = np.zeros((0, d))
        n_arr = np.zeros((0, d))
        i_arr = np.zeros((0,), dtype=int)
    return nodes_arr, w_arr, n_arr, i_arr, mechanism


def build_surface(phis, cfg: EngineConfig | None = None,
                  integrand: Callable | None = None,
                  box: BoxMap | None = None):
    """Surface integral over the interface inside the box.

    mode "surface" returns the scalar integral of ``integrand``; mode
    "surface_flux" returns the vector integral of integrand times the unit
    normal (pointing from negative to positive level-set values)."""
    cfg = _config(cfg)
    if cfg.mode == "volume":
        cfg = replace(cfg, mode="surface")
    nodes, wvecs, normals, _, _ = _surface_rule_events(phis, cfg, box)
    if integrand is None:
        vals = np.ones(len(nodes))
    else:
        xs = box.to_physical(nodes) if box is not None else nodes
        vals = np.array([integrand(x) for x in xs])
    if cfg.mode == "surface_flux":
        return (wvecs * vals[:, None]).sum(axis=0) if len(nodes) else np.zeros(wvecs.shape[1])
    scalar = np.sum(wvecs * normals, axis=1)
    return float(np.dot(scalar, vals)) if len(nodes) else 0.0


def build_rule(phis, cfg: EngineConfig | None = None,
               box: BoxMap | None = None,
               plan: Plan | None = None) -> QuadRule:
    """Materialise the quadrature rule as arrays in physical coordinates.

    Volume rules attach the per-polynomial sign at every node; surface rules
    are emitted in flux form (vector weights) with unit normals attached."""
    cfg = _config(cfg)
    phi_list = _as_phi_list(phis, cfg.mask_cells)
    d = phi_list[0].poly.dims

    if cfg.mode in ("surface", "surface_flux"):
        nodes, wvecs, normals, _, mechanism = _surface_rule_events(phi_list, cfg, box)
        phys = box.to_physical(nodes) if box is not None else nodes
        meta = {"q": cfg.q, "mode": cfg.mode, "mechanism": mechanism,
                "schemes": cfg.schemes}
        return QuadRule(np.atleast_2d(phys), wvecs, None, normals, cfg.mode, meta)

    if plan is None:
        plan = build_plan(phi_list, cfg)
    pts_list, w_list = [], []

    def sink(pts, ws):
        pts_list.append(pts)
        w_list.append(ws)

    _volume_emit(plan, cfg, cfg.q, sink)
    if pts_list:
        nodes = np.vstack(pts_list)
        weights = np.concatenate(w_list)
    else:
        nodes = np.zeros((0, d))
        weights = np.zeros(0)
    signs = np.ones((nodes.shape[0], len(phi_list)), dtype=np.int8)
    for j, phi in enumerate(phi_list):
        if nodes.shape[0]:
            signs[:, j] = np.where(evaluate(phi.poly, nodes) < 0.0, -1, 1)
    jac = box.jacobian if box is not None else 1.0
    phys = box.to_physical(nodes) if box is not None else nodes
    meta = {"q": cfg.q, "mode": "volume", "schemes": cfg.schemes,
            "axes": plan.axis_order}
    return QuadRule(np.atleast_2d(phys), weights * jac, signs, None, "volume", meta)


def cluster_by_signs(rule: QuadRule, predicate) -> QuadRule:
    """Subset of a volume rule selected by a predicate on the per-node sign
    vector (weights untouched)."""
    if rule.signs is None:
        raise ValueError("sign clustering requires a volume rule with signs")
    keep = np.array([bool(predicate(s)) for s in rule.signs])
    return QuadRule(rule.nodes[keep], rule.weights[keep], rule.signs[keep],
                    None, rule.mode, dict(rule.meta))


def _simplex_outside_cells(dims: int, m: int) -> np.ndarray:
    """Subcells of the mask grid strictly outside the unit simplex (with a
    one-cell safety margin so no legitimate breakpoint is ever filtered)."""
    grids = np.indices((m,) * dims).reshape(dims, -1).T
    return (grids.sum(axis=1) >= m + 1).reshape((m,) * dims)


def simplex_volume(phis, cfg: EngineConfig | None = None,
                   integrand: Callable | None = None) -> float:
    """Integral over the standard unit simplex minus the interface.

    The simplex is carved out of the unit box by appending the diagonal
    plane as an extra level set, clearing masks in subcells strictly outside
    the simplex, and discarding emitted nodes beyond the diagonal."""
    cfg = _config(cfg)
    phi_list = _as_phi_list(phis, cfg.mask_cells)
    d = phi_list[0].poly.dims
    rule = simplex_rule(phi_list, cfg)
    if integrand is None:
        return float(rule.weights.sum())
    return float(sum(w * integrand(x) for x, w in zip(rule.nodes, rule.weights)))


def simplex_rule(phis, cfg: EngineConfig | None = None) -> QuadRule:
    cfg = _config(cfg)
    phi_list = _as_phi_list(phis, cfg.mask_cells)
    d = phi_list[0].poly.dims
    m = cfg.mask_cells
    outside = _simplex_outside_cells(d, m)
    # psi(x) = -1 + sum(x): negative inside the simplex.
    mono = np.zeros((2,) * d)
    mono[(0,) * d] = -1.0
    for ax in range(d):
        idx = [0] * d
        idx[ax] = 1
        mono[tuple(idx)] = 1.0
    from .bernstein import from_monomial

    psi = from_monomial(mono)
    trimmed = []
    for phi in phi_list + [PhiMasked(psi, full_mask(d, m))]:
        bits = phi.mask.bits & ~outside
        trimmed.append(PhiMasked(phi.poly, Mask(bits)))
    rule = build_rule(trimmed, cfg)
    keep = evaluate(psi, rule.nodes) <= 0.0
    return QuadRule(rule.nodes[keep], rule.weights[keep],
                    rule.signs[keep][:, : len(phi_list)], None, "volume",
                    dict(rule.meta))
