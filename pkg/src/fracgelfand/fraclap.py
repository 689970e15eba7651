"""Radial collocation discretization of the fractional Laplacian on the unit ball.

For radial u the principal-value integral reduces to one dimension,

    (-Delta)^s u(r) = c_{n,s} PV int_0^inf (u(r) - u(rho)) K(r, rho) drho,

where K(r, rho) = rho^{n-1} k(r, rho) and k is the integral of
|r e_1 - rho w|^{-(n+2s)} over unit directions w.  The angular factor has the
closed form

    k(r, rho) = |S^{n-1}| M^{-(n+2s)} (1-z)^{-(1+2s)} 2F1(-s, n/2-s-1; n/2; z),

with M = max(r, rho) and z = (min/max)^2; the hypergeometric factor is bounded
on [0, 1], so the only singularity is the |r - rho|^{-(1+2s)} line.

Discretization (per collocation row r_i):

* the two panels touching r_i are integrated against the parabola through
  (r_{i-1}, r_i, r_{i+1});  the symmetric core (-h, h), h = min of the two
  panel widths, is evaluated with Gauss-Jacobi moments of weight delta^{1-2s}
  (the odd/even split makes the principal value exact), the leftover one-sided
  sliver with Gauss-Legendre;
* all other panels inside the ball use per-panel Gauss-Legendre against a
  piecewise-quadratic 3-node Lagrange interpolant of u (a parallel linear-hat
  coupling table is accumulated in the same sweep and feeds the symmetric
  stability form);
* the exterior integral uses a per-row grid on (1, 2] geometrically refined
  toward 1 at the row's distance to the boundary, plus rho = 2/t with dyadic
  panels in t for (2, inf).  The stored (rho_q, weight*kernel) table evaluates
  both the tail mass and any exterior datum with the same sums, so constants
  are annihilated exactly.

The origin node is eliminated by the even-quadratic extrapolation
u_0 = e1*u_1 + e2*u_2 consistent with u'(0) = 0; the boundary node carries the
exterior datum's limit g(1).  ``apply`` evaluates the operator in difference
form (couplings times u_i - u_j), which keeps the constant-annihilation
property at roundoff level even where the tail mass is ~ dist^{-2s} large.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import hyp2f1, roots_jacobi

from .constants import DomainError, ProblemParams, operator_normalization
from .specfun import log_gamma

__all__ = [
    "RadialGrid",
    "TailKind",
    "TailSpec",
    "RadialFunction",
    "OperatorMatrix",
    "sphere_area",
    "angular_kernel",
    "assemble",
    "apply",
    "quadratic_form",
]

_TAIL_SEG_A_ORDER = 12     # Gauss order per panel on (1, 2]
_TAIL_SEG_B_ORDER = 8      # Gauss order per dyadic panel beyond 2
_SLIVER_ORDER = 8


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n: 2 pi^{n/2} / Gamma(n/2)."""
    return math.exp(math.log(2.0) + 0.5 * n * math.log(math.pi) - log_gamma(n / 2.0))


# ----------------------------------------------------------------------
# grid


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing nodes r_0 = 0 < ... < r_N = 1 on the unit radius.

    ``grading`` records the clustering exponent used to build the nodes
    (>= 1; 1 is uniform), ``panel_order`` the Gauss order used on each panel
    during assembly.
    """

    nodes: np.ndarray
    grading: float = 2.0
    panel_order: int = 6

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 17:
            raise DomainError("grid needs at least 16 panels (17 nodes)")
        if nodes[0] != 0.0 or nodes[-1] != 1.0:
            raise DomainError("grid must span [0, 1] with r_0 = 0 and r_N = 1")
        if not np.all(np.diff(nodes) > 0.0):
            raise DomainError("grid nodes must increase strictly")
        if not self.grading >= 1.0:
            raise DomainError(f"grading exponent must be >= 1, got {self.grading}")
        if not (isinstance(self.panel_order, int) and self.panel_order >= 1):
            raise DomainError(f"panel order must be a positive integer, got {self.panel_order}")

    @property
    def n_panels(self) -> int:
        return self.nodes.size - 1

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @classmethod
    def graded(cls, n_panels: int, grading: float = 2.0, panel_order: int = 6) -> "RadialGrid":
        """Algebraically graded grid clustering nodes at both r=0 and r=1.

        Uses the rational map t^p / (t^p + (1-t)^p), which gives spacing
        ~ (1/N)^p at both ends and ~ p/N in the middle.
        """
        if n_panels < 16:
            raise DomainError(f"need at least 16 panels, got {n_panels}")
        t = np.linspace(0.0, 1.0, n_panels + 1)
        p = float(grading)
        tp = t**p
        omp = (1.0 - t) ** p
        nodes = tp / (tp + omp)
        nodes[0], nodes[-1] = 0.0, 1.0
        return cls(nodes=nodes, grading=p, panel_order=panel_order)

    def to_dict(self) -> dict:
        return {
            "nodes": [float(x) for x in self.nodes],
            "grading": float(self.grading),
            "panel_order": int(self.panel_order),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RadialGrid":
        return cls(
            nodes=np.asarray(data["nodes"], dtype=float),
            grading=float(data["grading"]),
            panel_order=int(data["panel_order"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RadialGrid":
        return cls.from_dict(json.loads(text))


def origin_fold_weights(grid: RadialGrid) -> tuple[float, float]:
    """Weights (e1, e2) with u(0) = e1 u(r_1) + e2 u(r_2).

    Even-quadratic extrapolation: exact for u = a + b r^2 (radial smoothness
    forces u'(0) = 0) and exact for constants (e1 + e2 = 1).
    """
    r1, r2 = grid.nodes[1], grid.nodes[2]
    denom = r2 * r2 - r1 * r1
    return r2 * r2 / denom, -r1 * r1 / denom


# ----------------------------------------------------------------------
# exterior data


class TailKind(enum.Enum):
    ZERO = "zero"
    POWER = "power"
    LOG_POWER = "log_power"


@dataclass(frozen=True)
class TailSpec:
    """Analytic description of the function outside the unit ball.

    zero: 0;  power: coeff * r^{-alpha} (alpha >= 0; alpha = 0 is the constant
    tail used by the PV-consistency test);  log_power: coeff * log r^{-2s}.
    """

    kind: TailKind
    alpha: float = 0.0
    coeff: float = 0.0

    def __post_init__(self) -> None:
        if self.kind is TailKind.POWER:
            if not (math.isfinite(self.alpha) and self.alpha >= 0.0):
                raise DomainError(f"power tail requires alpha >= 0, got {self.alpha}")
        if not math.isfinite(self.coeff):
            raise DomainError("tail coefficient must be finite")

    @classmethod
    def zero(cls) -> "TailSpec":
        return cls(TailKind.ZERO)

    @classmethod
    def power(cls, alpha: float, coeff: float = 1.0) -> "TailSpec":
        return cls(TailKind.POWER, alpha=float(alpha), coeff=float(coeff))

    @classmethod
    def log_power(cls, coeff: float = 1.0) -> "TailSpec":
        return cls(TailKind.LOG_POWER, coeff=float(coeff))

    def values(self, rho: np.ndarray, s: float) -> np.ndarray:
        """Evaluate the exterior datum at radii rho > 1."""
        rho = np.asarray(rho, dtype=float)
        if self.kind is TailKind.ZERO:
            return np.zeros_like(rho)
        if self.kind is TailKind.POWER:
            return self.coeff * rho ** (-self.alpha)
        return -2.0 * s * self.coeff * np.log(rho)

    def boundary_value(self, s: float) -> float:
        """Limit of the exterior datum as r -> 1+ (carried by the boundary node)."""
        if self.kind is TailKind.POWER:
            return self.coeff
        return 0.0

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "alpha": float(self.alpha), "coeff": float(self.coeff)}

    @classmethod
    def from_dict(cls, data: dict) -> "TailSpec":
        return cls(TailKind(data["kind"]), alpha=float(data.get("alpha", 0.0)), coeff=float(data.get("coeff", 0.0)))


@dataclass
class RadialFunction:
    """Nodal values on a radial grid plus the exterior datum.

    Values must be finite at every node; the origin node alone may be
    non-finite when ``singular_at_origin`` is set (profiles like r^{-a} or
    log 1/r).  The operator never evaluates such functions at r = 0.
    """

    grid: RadialGrid
    values: np.ndarray
    tail: TailSpec = field(default_factory=TailSpec.zero)
    singular_at_origin: bool = False

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise DomainError(
                f"values shape {values.shape} does not match grid with {self.grid.nodes.size} nodes"
            )
        check = values[1:] if self.singular_at_origin else values
        if not np.all(np.isfinite(check)):
            raise DomainError("nodal values must be finite (except r_0 when flagged singular)")
        self.values = values

    @classmethod
    def from_callable(cls, grid: RadialGrid, fn, tail: TailSpec | None = None,
                      singular_at_origin: bool = False) -> "RadialFunction":
        tail = tail if tail is not None else TailSpec.zero()
        nodes = grid.nodes
        values = np.empty_like(nodes)
        if singular_at_origin:
            values[0] = np.inf
            values[1:] = [fn(r) for r in nodes[1:]]
        else:
            values[:] = [fn(r) for r in nodes]
        return cls(grid=grid, values=values, tail=tail, singular_at_origin=singular_at_origin)

    @property
    def interior(self) -> np.ndarray:
        return self.values[1:-1]

    def to_dict(self) -> dict:
        vals = [None if not math.isfinite(v) else float(v) for v in self.values]
        return {
            "grid": self.grid.to_dict(),
            "values": vals,
            "tail": self.tail.to_dict(),
            "singular_at_origin": bool(self.singular_at_origin),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RadialFunction":
        vals = np.array([np.inf if v is None else float(v) for v in data["values"]])
        return cls(
            grid=RadialGrid.from_dict(data["grid"]),
            values=vals,
            tail=TailSpec.from_dict(data["tail"]),
            singular_at_origin=bool(data["singular_at_origin"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "RadialFunction":
        return cls.from_dict(json.loads(text))


# ----------------------------------------------------------------------
# angular kernel


def _hyp_factor(p: ProblemParams, z: np.ndarray) -> np.ndarray:
    """2F1(-s, n/2 - s - 1; n/2; z), bounded on z in [0, 1]."""
    return hyp2f1(-p.s, 0.5 * p.n - p.s - 1.0, 0.5 * p.n, z)


def _kernel_full(p: ProblemParams, r: float, rho: np.ndarray, area: float) -> np.ndarray:
    """K(r, rho) = rho^{n-1} k(r, rho) including the singular |r-rho| factor.

    Factored as (rho/M)^{n-1} * (M / ((r+rho)|r-rho|))^{1+2s} * Phi so the
    power terms stay O(1) even for dimension-sized exponents at large radii.
    """
    rho = np.asarray(rho, dtype=float)
    big = np.maximum(r, rho)
    small = np.minimum(r, rho)
    z = (small / big) ** 2
    expo = 1.0 + 2.0 * p.s
    return (
        area
        * (rho / big) ** (p.n - 1)
        * (big / ((r + rho) * np.abs(r - rho))) ** expo
        * _hyp_factor(p, z)
    )


def _kernel_regular(p: ProblemParams, r: float, rho: np.ndarray, area: float) -> np.ndarray:
    """G(rho) = K(r, rho) * |r - rho|^{1+2s}, smooth off the diagonal kink."""
    rho = np.asarray(rho, dtype=float)
    big = np.maximum(r, rho)
    small = np.minimum(r, rho)
    z = (small / big) ** 2
    return (
        area
        * (rho / big) ** (p.n - 1)
        * (big / (r + rho)) ** (1.0 + 2.0 * p.s)
        * _hyp_factor(p, z)
    )


def angular_kernel(p: ProblemParams, r: float, rho: float) -> float:
    """Angular reduction k(r, rho) of the Riesz kernel; symmetric in (r, rho).

    For n = 1 this is |r-rho|^{-(1+2s)} + (r+rho)^{-(1+2s)}; for r = 0 it is
    |S^{n-1}| rho^{-(n+2s)}.  Coincident radii are rejected (the diagonal is
    handled by the principal-value assembly, not here).
    """
    r, rho = float(r), float(rho)
    if r < 0.0 or rho <= 0.0:
        raise DomainError(f"need r >= 0 and rho > 0, got r={r}, rho={rho}")
    if r == rho:
        raise DomainError("coincident radii: kernel is singular on the diagonal")
    area = sphere_area(p.n)
    big, small = max(r, rho), min(r, rho)
    z = (small / big) ** 2
    expo = 1.0 + 2.0 * p.s
    k = (
        area
        * big ** (2.0 + 2.0 * p.s - p.n)
        * ((r + rho) * abs(r - rho)) ** -expo
        * float(_hyp_factor(p, np.array([z]))[0])
    )
    return float(k)


# ----------------------------------------------------------------------
# operator


@dataclass
class OperatorMatrix:
    """Assembled collocation operator on a grid's interior nodes.

    ``matrix`` is the dense interior action A (the operator applied to
    functions vanishing at the boundary node and outside);  the full action on
    a RadialFunction with exterior datum g is A u - response(g).  ``apply``
    evaluates the same numbers in difference form for exact constant
    annihilation.  ``couple_*`` tables are the nonnegative-kernel couplings
    (quadratic interpolant for the operator, linear hats for the symmetric
    stability form), ``tail_rho``/``tail_wk`` the per-row exterior quadrature,
    ``weights`` the radial hat masses |S^{n-1}| int phi_i r^{n-1} dr.
    """

    params: ProblemParams
    grid: RadialGrid
    normalization: float
    couple_quad: np.ndarray       # (Ni, Ni) interior couplings, origin fold applied
    couple_quad_bnd: np.ndarray   # (Ni,) coupling to the boundary node
    tail_rho: np.ndarray          # (Ni, nt) padded exterior quadrature radii
    tail_wk: np.ndarray           # (Ni, nt) weight * kernel products (0 padding)
    tail_mass: np.ndarray         # (Ni,) row sums of tail_wk
    weights: np.ndarray           # (Ni,) radial hat masses
    _stability_form: np.ndarray | None = None
    _responses: dict = field(default_factory=dict)

    @property
    def n_interior(self) -> int:
        return self.couple_quad.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Dense interior matrix A with A@1 = constant-tail response."""
        total = self.couple_quad.sum(axis=1) + self.couple_quad_bnd + self.tail_mass
        return self.normalization * (np.diag(total) - self.couple_quad)

    def tail_response(self, tail: TailSpec) -> np.ndarray:
        """Response vector: c * (sum_q W_iq g(rho_q) + C_iB g(1)); cached per tail."""
        key = (tail.kind, tail.alpha, tail.coeff)
        cached = self._responses.get(key)
        if cached is not None:
            return cached
        s = self.params.s
        g_vals = tail.values(self.tail_rho, s)
        resp = (self.tail_wk * g_vals).sum(axis=1)
        resp += self.couple_quad_bnd * tail.boundary_value(s)
        resp = self.normalization * resp
        self._responses[key] = resp
        return resp

    def apply_interior(self, u_int: np.ndarray, tail: TailSpec) -> np.ndarray:
        """Difference-form action at interior nodes.

        Every term multiplies a pointwise difference, so a globally constant
        function (matching constant tail) yields exact zeros instead of the
        cancellation of ~dist^{-2s} terms a matvec would incur.
        """
        u_int = np.asarray(u_int, dtype=float)
        diff = u_int[:, None] - u_int[None, :]
        out = (self.couple_quad * diff).sum(axis=1)
        g1 = tail.boundary_value(self.params.s)
        out += self.couple_quad_bnd * (u_int - g1)
        g_vals = tail.values(self.tail_rho, self.params.s)
        out += (self.tail_wk * (u_int[:, None] - g_vals)).sum(axis=1)
        return self.normalization * out

    def apply(self, u: RadialFunction) -> RadialFunction:
        if u.grid.nodes.shape != self.grid.nodes.shape or not np.array_equal(u.grid.nodes, self.grid.nodes):
            raise DomainError("function grid does not match operator grid")
        out_int = self.apply_interior(u.interior, u.tail)
        values = np.empty_like(u.values)
        values[1:-1] = out_int
        # Endpoint rows are not collocated; fill with extrapolations so the
        # result is a plottable RadialFunction.  The origin value is flagged
        # singular when the input was (the operator output then blows up too).
        if u.singular_at_origin:
            values[0] = np.inf
        else:
            e1, e2 = origin_fold_weights(self.grid)
            values[0] = e1 * out_int[0] + e2 * out_int[1]
        r = self.grid.nodes
        slope = (out_int[-1] - out_int[-2]) / (r[-2] - r[-3])
        values[-1] = out_int[-1] + slope * (r[-1] - r[-2])
        return RadialFunction(grid=self.grid, values=values, tail=TailSpec.zero(),
                              singular_at_origin=u.singular_at_origin)

    @property
    def stability_form(self) -> np.ndarray:
        """Symmetric PSD matrix S of the zero-tail energy form.

        Assembled as the Galerkin double integral of the difference kernel
        over piecewise-linear hats (built lazily, cached).  Every quadrature
        contribution is a nonnegative multiple of an outer product, so the
        matrix is positive semidefinite by construction, which a weighted
        symmetrization of the collocation rows does not guarantee once the
        radial masses near the origin differ by many orders of magnitude.
        """
        if self._stability_form is None:
            self._stability_form = _assemble_energy(self.params, self.grid)
        return self._stability_form


def _hat_masses(grid: RadialGrid, n: int, area: float) -> np.ndarray:
    """Exact |S^{n-1}| int phi_i(r) r^{n-1} dr for interior hats."""
    r = grid.nodes
    rn = r ** n
    rn1 = r ** (n + 1)
    h = np.diff(r)

    def seg_rising(a_idx, b_idx):
        # int_{r_a}^{r_b} (rho - r_a)/h * rho^{n-1} drho
        ha = r[b_idx] - r[a_idx]
        return ((rn1[b_idx] - rn1[a_idx]) / (n + 1) - r[a_idx] * (rn[b_idx] - rn[a_idx]) / n) / ha

    def seg_falling(a_idx, b_idx):
        # int_{r_a}^{r_b} (r_b - rho)/h * rho^{n-1} drho
        hb = r[b_idx] - r[a_idx]
        return (r[b_idx] * (rn[b_idx] - rn[a_idx]) / n - (rn1[b_idx] - rn1[a_idx]) / (n + 1)) / hb

    idx = np.arange(1, r.size - 1)
    return area * (seg_rising(idx - 1, idx) + seg_falling(idx, idx + 1))


def _tail_quadrature(p: ProblemParams, r_i: float, area: float,
                     gl_a: tuple[np.ndarray, np.ndarray],
                     gl_b: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Per-row exterior quadrature: (radii, weight*kernel) arrays."""
    xs_a, ws_a = gl_a
    xs_b, ws_b = gl_b
    d = 1.0 - r_i
    # (1, 2]: geometric refinement toward 1 at the scale of the row's
    # boundary distance (the kernel varies on that scale).
    breaks = [1.0]
    k = 1
    while breaks[-1] < 2.0:
        breaks.append(min(2.0, 1.0 + d * (2.0**k - 1.0)))
        k += 1
    rho_chunks = []
    wk_chunks = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        rho = mid + half * xs_a
        rho_chunks.append(rho)
        wk_chunks.append(half * ws_a * _kernel_full(p, r_i, rho, area))
    # (2, inf): rho = 2/t with dyadic panels in t; the integrand decays like
    # t^{2s-1}, so the panel depth is adapted to s for ~1e-15 truncation.
    depth = min(400, int(25.0 / p.s) + 8)
    t_hi = 1.0
    for _ in range(depth):
        t_lo = 0.5 * t_hi
        mid, half = 0.5 * (t_lo + t_hi), 0.5 * (t_hi - t_lo)
        t = mid + half * xs_b
        rho = 2.0 / t
        jac = 2.0 / t**2
        rho_chunks.append(rho)
        wk_chunks.append(half * ws_b * jac * _kernel_full(p, r_i, rho, area))
        t_hi = t_lo
    return np.concatenate(rho_chunks), np.concatenate(wk_chunks)


def assemble(p: ProblemParams, grid: RadialGrid) -> OperatorMatrix:
    """Assemble the dense radial operator for (n, s) on the grid.

    Rejects s = 1 (classical limit is out of the singular-integral scheme's
    scope) and grids below 16 panels (enforced by RadialGrid).
    """
    if not 0.0 < p.s < 1.0:
        raise DomainError(f"discretized operator requires 0 < s < 1, got s={p.s}")
    n, s = p.n, p.s
    area = sphere_area(n)
    c = operator_normalization(p)
    r = grid.nodes
    npan = grid.n_panels
    ni = npan - 1
    e1, e2 = origin_fold_weights(grid)

    q_far = grid.panel_order
    xs_far, ws_far = leggauss(q_far)
    q_near = max(8, 2 * grid.panel_order)
    xj, wj = roots_jacobi(q_near, 0.0, 1.0 - 2.0 * s)
    xs_sl, ws_sl = leggauss(_SLIVER_ORDER)
    gl_a = leggauss(_TAIL_SEG_A_ORDER)
    gl_b = leggauss(_TAIL_SEG_B_ORDER)

    # Grid-wide far-panel quadrature: nodes, weights and interpolation tables
    # are row-independent; only the kernel values change per row.
    mid = 0.5 * (r[:-1] + r[1:])
    half = 0.5 * np.diff(r)
    rho_far = mid[:, None] + half[:, None] * xs_far[None, :]          # (npan, q)
    w_far = half[:, None] * ws_far[None, :]                           # (npan, q)
    stencil = np.stack([np.arange(npan) - 1, np.arange(npan), np.arange(npan) + 1], axis=1)
    stencil[0] = [0, 1, 2]
    x0, x1, x2 = r[stencil[:, 0], None], r[stencil[:, 1], None], r[stencil[:, 2], None]
    lag = np.empty((npan, q_far, 3))
    lag[:, :, 0] = (rho_far - x1) * (rho_far - x2) / ((x0 - x1) * (x0 - x2))
    lag[:, :, 1] = (rho_far - x0) * (rho_far - x2) / ((x1 - x0) * (x1 - x2))
    lag[:, :, 2] = (rho_far - x0) * (rho_far - x1) / ((x2 - x0) * (x2 - x1))

    cq = np.zeros((ni, npan + 1))

    # Far field, processed in row blocks to bound the kernel-matrix memory.
    block = max(1, min(ni, int(4.0e6 // (npan * q_far)) or 1))
    for lo in range(0, ni, block):
        hi_b = min(ni, lo + block)
        rows = np.arange(lo + 1, hi_b + 1)
        kmat = np.empty((rows.size, npan, q_far))
        for b, i in enumerate(rows):
            kmat[b] = _kernel_full(p, r[i], rho_far, area)
            kmat[b, i - 1] = 0.0   # panels adjacent to r_i belong to the near field
            kmat[b, i] = 0.0
        wk = kmat * w_far[None, :, :]
        contrib_q = np.einsum("bpq,pqs->bps", wk, lag)
        flat_q = cq[lo:hi_b].reshape(-1)
        base = (np.arange(rows.size) * (npan + 1))[:, None, None]
        np.add.at(flat_q, (base + stencil[None, :, :]).ravel(), contrib_q.ravel())
        cq[lo:hi_b] = flat_q.reshape(hi_b - lo, npan + 1)

    # Near field and exterior, row by row.
    tail_rows = []
    for i in range(1, npan):
        ri = r[i]
        h_l = ri - r[i - 1]
        h_r = r[i + 1] - ri
        hm = min(h_l, h_r)
        wa_r = h_l / (h_r * (h_l + h_r))
        wa_l = h_r / (h_l * (h_l + h_r))
        wb_r = 1.0 / (h_r * (h_l + h_r))
        wb_l = -1.0 / (h_l * (h_l + h_r))

        delta = 0.5 * hm * (1.0 + xj)
        gp = _kernel_regular(p, ri, ri + delta, area)
        gm = _kernel_regular(p, ri, ri - delta, area)
        scale = (0.5 * hm) ** (2.0 - 2.0 * s)
        j1 = scale * float(np.dot(wj, (gp - gm) / delta))
        j2 = scale * float(np.dot(wj, gp + gm))
        c_right = j1 * wa_r + j2 * wb_r
        c_left = -(j1 * wa_l + j2 * wb_l)

        # One-sided leftover of the wider adjacent panel, integrated against
        # the same parabola (regular there: distance >= hm from r_i).
        if h_r > hm or h_l > hm:
            if h_r > hm:
                a_edge, b_edge = ri + hm, r[i + 1]
            else:
                a_edge, b_edge = r[i - 1], ri - hm
            midp, halfp = 0.5 * (a_edge + b_edge), 0.5 * (b_edge - a_edge)
            rho_sl = midp + halfp * xs_sl
            delta_sl = rho_sl - ri
            k_sl = halfp * ws_sl * _kernel_full(p, ri, rho_sl, area)
            c_right += float(np.dot(k_sl, delta_sl * (wa_r + wb_r * delta_sl)))
            c_left += -float(np.dot(k_sl, delta_sl * (wa_l + wb_l * delta_sl)))

        cq[i - 1, i + 1] += c_right
        cq[i - 1, i - 1] += c_left

        tail_rows.append(_tail_quadrature(p, ri, area, gl_a, gl_b))

    # Fold the origin column onto nodes 1 and 2:  C(u_i - u_0) =
    # C e1 (u_i - u_1) + C e2 (u_i - u_2)  since e1 + e2 = 1.
    cq[:, 1] += e1 * cq[:, 0]
    cq[:, 2] += e2 * cq[:, 0]

    nt = max(row[0].size for row in tail_rows)
    tail_rho = np.full((ni, nt), 2.0)
    tail_wk = np.zeros((ni, nt))
    for b, (rho_row, wk_row) in enumerate(tail_rows):
        tail_rho[b, : rho_row.size] = rho_row
        tail_wk[b, : wk_row.size] = wk_row

    return OperatorMatrix(
        params=p,
        grid=grid,
        normalization=c,
        couple_quad=cq[:, 1:npan].copy(),
        couple_quad_bnd=cq[:, npan].copy(),
        tail_rho=tail_rho,
        tail_wk=tail_wk,
        tail_mass=tail_wk.sum(axis=1),
        weights=_hat_masses(grid, n, area),
    )


def _assemble_energy(p: ProblemParams, grid: RadialGrid) -> np.ndarray:
    """Galerkin matrix of the energy form over interior piecewise-linear hats.

    Uses the symmetric double-integral identity

        Q(eta, zeta) = (1/2) cns |S| iint (eta(r)-eta(rho)) (zeta(r)-zeta(rho))
                                         r^{n-1} rho^{n-1} k(r, rho) dr drho,

    valid for functions vanishing outside the ball.  Same-panel pairs reduce
    exactly to |r-rho|^{1-2s} times a smooth factor (hat differences are
    linear in r-rho there) and use Gauss-Jacobi in the gap variable; panel
    pairs sharing a corner use a Duffy split; separated pairs use tensor
    Gauss-Legendre; the exterior region contributes a local nonnegative
    density.  The origin hat is folded with the even-quadratic weights, the
    boundary hat is dropped (Dirichlet), so the result is PSD by construction.
    """
    n, s = p.n, p.s
    area = sphere_area(n)
    pref = operator_normalization(p) * area
    r = grid.nodes
    npan = grid.n_panels
    h = np.diff(r)
    smat = np.zeros((npan + 1, npan + 1))

    def kap_full(rv: np.ndarray, pv: np.ndarray) -> np.ndarray:
        return pref * rv ** (n - 1) * _kernel_full(p, rv, pv, area)

    def kap_reg(rv: np.ndarray, pv: np.ndarray) -> np.ndarray:
        return pref * rv ** (n - 1) * _kernel_regular(p, rv, pv, area)

    # --- separated panel pairs (gap of at least one panel), tensor Gauss.
    q = max(4, grid.panel_order - 1)
    xg, wg = leggauss(q)
    mid = 0.5 * (r[:-1] + r[1:])
    half = 0.5 * h
    pts = mid[:, None] + half[:, None] * xg[None, :]      # (npan, q)
    wts = half[:, None] * wg[None, :]
    fall = (r[1:, None] - pts) / h[:, None]               # phi_p on panel p
    rise = (pts - r[:-1, None]) / h[:, None]              # phi_{p+1} on panel p
    for off in range(2, npan):
        pi = np.arange(0, npan - off)
        pj = pi + off
        tmat = (wts[pi, :, None] * wts[pj, None, :]) * kap_full(
            pts[pi, :, None], pts[pj, None, :]
        )
        row_m = tmat.sum(axis=2)     # rho integrated out
        col_m = tmat.sum(axis=1)     # r integrated out
        fa, fb = fall[pi], rise[pi]
        ga, gb = fall[pj], rise[pj]
        smat[pi, pi] += (fa * fa * row_m).sum(axis=1)
        smat[pi, pi + 1] += (fa * fb * row_m).sum(axis=1)
        smat[pi + 1, pi + 1] += (fb * fb * row_m).sum(axis=1)
        smat[pj, pj] += (ga * ga * col_m).sum(axis=1)
        smat[pj, pj + 1] += (ga * gb * col_m).sum(axis=1)
        smat[pj + 1, pj + 1] += (gb * gb * col_m).sum(axis=1)
        smat[pi, pj] -= np.einsum("mq,mqp,mp->m", fa, tmat, ga)
        smat[pi, pj + 1] -= np.einsum("mq,mqp,mp->m", fa, tmat, gb)
        smat[pi + 1, pj] -= np.einsum("mq,mqp,mp->m", fb, tmat, ga)
        smat[pi + 1, pj + 1] -= np.einsum("mq,mqp,mp->m", fb, tmat, gb)

    # --- same-panel pairs: hat differences are slope*(r-rho) exactly, so the
    # pair energy is a single edge weight times the graph-Laplacian block.
    qj, qg = 10, 6
    xj, wj = roots_jacobi(qj, 0.0, 1.0 - 2.0 * s)
    xgi, wgi = leggauss(qg)
    for pnl in range(npan):
        a, b, hp = r[pnl], r[pnl + 1], h[pnl]
        u_gap = 0.5 * hp * (1.0 + xj)
        inner = np.empty(qj)
        for jq, u in enumerate(u_gap):
            wdt = 0.5 * (hp - u)
            rg = a + wdt * (1.0 + xgi)
            inner[jq] = wdt * float(np.dot(wgi, kap_reg(rg, rg + u)))
        edge = (0.5 * hp) ** (2.0 - 2.0 * s) * float(np.dot(wj, inner)) / hp**2
        smat[pnl, pnl] += edge
        smat[pnl, pnl + 1] -= edge
        smat[pnl + 1, pnl + 1] += edge

    # --- corner-sharing pairs: Duffy coordinates xi = t v, chi = t (1-v)
    # around the shared node; the net t-power is 2-2s (Jacobi) on t < min width.
    qt = 8
    xt, wt = leggauss(qt)
    xj2, wj2 = roots_jacobi(qj, 0.0, 2.0 - 2.0 * s)
    for pnl in range(npan - 1):
        a, b = h[pnl], h[pnl + 1]
        rc = r[pnl + 1]
        m = min(a, b)

        def accumulate(tvals, tweights, tpow_in_weights: bool):
            for tq, t in enumerate(tvals):
                vlo = max(0.0, 1.0 - b / t)
                vhi = min(1.0, a / t)
                if vhi <= vlo:
                    continue
                vm, vh = 0.5 * (vhi + vlo), 0.5 * (vhi - vlo)
                v = vm + vh * xgi
                wv = vh * wgi
                xi, chi = t * v, t * (1.0 - v)
                kv = kap_reg(rc - xi, rc + chi)
                d0 = v / a
                d1 = (1.0 - v) / b - v / a
                d2 = -(1.0 - v) / b
                base = tweights[tq] * (t ** (2.0 - 2.0 * s) if not tpow_in_weights else 1.0)
                smat[pnl, pnl] += base * float(np.dot(wv, kv * d0 * d0))
                smat[pnl, pnl + 1] += base * float(np.dot(wv, kv * d0 * d1))
                smat[pnl, pnl + 2] += base * float(np.dot(wv, kv * d0 * d2))
                smat[pnl + 1, pnl + 1] += base * float(np.dot(wv, kv * d1 * d1))
                smat[pnl + 1, pnl + 2] += base * float(np.dot(wv, kv * d1 * d2))
                smat[pnl + 2, pnl + 2] += base * float(np.dot(wv, kv * d2 * d2))

        # t in (0, m): Jacobi weight t^{2-2s} after the area Jacobian and the
        # two linear hat-difference factors.
        accumulate(0.5 * m * (1.0 + xj2), (0.5 * m) ** (3.0 - 2.0 * s) * wj2, True)
        # t in (m, a+b): regular, plain Gauss with explicit t^{2-2s}.
        tm, th = 0.5 * (m + a + b), 0.5 * (a + b - m)
        accumulate(tm + th * xt, th * wt, False)

    # --- exterior region: local nonnegative density tau(r) integrated
    # against hat products on each panel.
    q_tail = 6
    xq, wq = leggauss(q_tail)
    gl_a = leggauss(_TAIL_SEG_A_ORDER)
    gl_b = leggauss(_TAIL_SEG_B_ORDER)
    for pnl in range(npan):
        mid_p, half_p = 0.5 * (r[pnl] + r[pnl + 1]), 0.5 * h[pnl]
        rq = mid_p + half_p * xq
        tau = np.empty(q_tail)
        for iq, rv in enumerate(rq):
            _, wk = _tail_quadrature(p, rv, area, gl_a, gl_b)
            tau[iq] = pref * rv ** (n - 1) * wk.sum()
        wtau = half_p * wq * tau
        fa = (r[pnl + 1] - rq) / h[pnl]
        fb = (rq - r[pnl]) / h[pnl]
        smat[pnl, pnl] += float(np.dot(wtau, fa * fa))
        smat[pnl, pnl + 1] += float(np.dot(wtau, fa * fb))
        smat[pnl + 1, pnl + 1] += float(np.dot(wtau, fb * fb))

    smat = np.triu(smat) + np.triu(smat, 1).T
    e1, e2 = origin_fold_weights(grid)
    smat[1, :] += e1 * smat[0, :]
    smat[2, :] += e2 * smat[0, :]
    smat[:, 1] += e1 * smat[:, 0]
    smat[:, 2] += e2 * smat[:, 0]
    return smat[1:npan, 1:npan].copy()


def apply(op: OperatorMatrix, u: RadialFunction) -> RadialFunction:
    """Operator action (-Delta)^s u at interior nodes (module-level form)."""
    return op.apply(u)


def quadratic_form(op: OperatorMatrix, eta: RadialFunction, zeta: RadialFunction) -> float:
    """Energy pairing int_0^1 eta (-Delta)^s zeta |S^{n-1}| r^{n-1} dr.

    Test functions must vanish outside the ball (zero tails); values at the
    boundary node are taken as zero.  Exactly symmetric by construction.
    """
    for fn in (eta, zeta):
        if fn.tail.kind is not TailKind.ZERO:
            raise DomainError("quadratic form requires zero-tail test functions")
        if fn.grid.nodes.shape != op.grid.nodes.shape or not np.array_equal(fn.grid.nodes, op.grid.nodes):
            raise DomainError("function grid does not match operator grid")
    smat = op.stability_form
    return float(eta.interior @ smat @ zeta.interior)
