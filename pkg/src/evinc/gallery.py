"""Plasticity block systems on a one-dimensional slab.

Fields depend on the through-thickness coordinate only, but tensors keep the
full symmetric 3x3 algebra (Mandel 6-vectors per node) so that the trace-free
saturation relation stays nontrivial: a purely scalar reduction would collapse
it to the zero relation. Velocity and temperature carry Dirichlet conditions
through the closed-support stencils; the dual fields get the natural zero on
the opposite face. All spatial operators are exact transposes of one another,
so the assembled first-order block is skew to machine precision.

State layouts are field blocks in order, node-major inside each block:
thermoplastic slab (v, T, theta, q), viscoplastic slab (v, w, T).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConditionCheckError, ContractViolation
from .materials import ConditionsReport, MaterialFamily, check_conditions
from .relations import (
    BallSaturation,
    DeviatoricSaturation,
    MonotoneRelation,
    NodewiseRelation,
    NormSubdifferential,
    SlotEmbedded,
    StructuredSum,
)
from .tensors import TRACE_VECTOR, deviatoric_basis

__all__ = [
    "SlabGrid",
    "SpatialOperators",
    "Coefficient",
    "build_slab_operators",
    "build_thermoplasticity",
    "build_viscoplasticity",
    "GalleryModel",
]


@dataclass(frozen=True)
class SlabGrid:
    """m interior cells of width dx; fields depend on x1 only."""

    m: int
    dx: float

    def __post_init__(self):
        if self.m < 2:
            raise ContractViolation("need at least 2 cells")
        if not self.dx > 0:
            raise ContractViolation("dx must be positive")


@dataclass(frozen=True)
class SpatialOperators:
    """First-order staggered stencils with exact discrete adjointness."""

    grad_c: np.ndarray   # scalar gradient with Dirichlet closure, m x m
    div: np.ndarray      # -grad_c^T, m x m
    Grad_c: np.ndarray   # symmetrized vector gradient, 6m x 3m (Mandel)
    Div: np.ndarray      # -Grad_c^T, 3m x 6m
    trace_op: np.ndarray  # node-wise tensor trace, m x 6m


def build_slab_operators(g: SlabGrid) -> SpatialOperators:
    m, dx = g.m, g.dx
    # backward difference with an implicit zero at the clamped face
    D = (np.eye(m) - np.eye(m, k=-1)) / dx
    grad_c = D
    div = -grad_c.T
    # sym(d1 v ⊗ e1) in Mandel components: T11 = d1 v1, T13 = d1 v3 / sqrt2,
    # T12 = d1 v2 / sqrt2 (the sqrt2 Mandel scaling is already included)
    B = np.zeros((6, 3))
    B[0, 0] = 1.0
    B[4, 2] = 1.0 / np.sqrt(2.0)
    B[5, 1] = 1.0 / np.sqrt(2.0)
    Grad_c = np.kron(D, B)
    Div = -Grad_c.T
    trace_op = np.kron(np.eye(m), TRACE_VECTOR[None, :])
    return SpatialOperators(grad_c=grad_c, div=div, Grad_c=Grad_c, Div=Div, trace_op=trace_op)


@dataclass(frozen=True)
class Coefficient:
    """Scalar time-sampled coefficient base*(1 + amplitude*sin(frequency*t)).

    Carries analytic bounds so the structural constants can be claimed
    without sampling slack; |amplitude| < 1 keeps it uniformly positive.
    """

    base: float
    amplitude: float = 0.0
    frequency: float = 1.0

    def __post_init__(self):
        if self.base <= 0:
            raise ContractViolation("coefficient base must be positive")
        if not abs(self.amplitude) < 1.0:
            raise ContractViolation("coefficient amplitude must have magnitude < 1")

    def __call__(self, t: float) -> float:
        return self.base * (1.0 + self.amplitude * np.sin(self.frequency * t))

    @property
    def lower(self) -> float:
        return self.base * (1.0 - abs(self.amplitude))

    @property
    def upper(self) -> float:
        return self.base * (1.0 + abs(self.amplitude))

    @property
    def lip(self) -> float:
        return self.base * abs(self.amplitude) * abs(self.frequency)

    @property
    def constant(self) -> bool:
        return self.amplitude == 0.0


@dataclass(frozen=True)
class GalleryModel:
    """Assembled slab system: coefficients, relation and spatial structure."""

    name: str
    family: MaterialFamily
    relation: MonotoneRelation
    operators: SpatialOperators
    slots: dict
    skew_block: np.ndarray
    conditions: ConditionsReport
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.family.dim

    def summary(self) -> str:
        lines = [f"model = {self.name}", f"state_dim = {self.dim}"]
        for name, (a, b) in self.slots.items():
            lines.append(f"slot_{name} = {a}:{b}")
        lines.append(f"kernel_dim = {self.family.kernel_basis.shape[1]}")
        for key in ("c0", "c1", "lip_M0", "sup_M1"):
            lines.append(f"{key} = {getattr(self.family, key):.17g}")
        for key, val in self.meta.items():
            lines.append(f"{key} = {val}")
        lines.append("")
        lines.append(self.conditions.to_text())
        return "\n".join(lines)


def _measure_constants(m0_fn, m1_fn, kb, rb, window, samples=129):
    if window[0] == window[1]:
        ts = np.array([window[0]])
    else:
        ts = np.linspace(window[0], window[1], samples)
    c0 = np.inf
    c1 = np.inf
    sup1 = 0.0
    lip = 0.0
    prev = None
    for t in ts:
        M0 = m0_fn(t)
        M1 = m1_fn(t)
        if rb.shape[1]:
            c0 = min(c0, float(np.min(np.linalg.eigvalsh(rb.T @ M0 @ rb))))
        if kb.shape[1]:
            c1 = min(c1, float(np.min(np.linalg.eigvalsh(kb.T @ (0.5 * (M1 + M1.T)) @ kb))))
        sup1 = max(sup1, float(np.linalg.norm(M1, 2)))
        if prev is not None:
            lip = max(lip, float(np.linalg.norm(M0 - prev, 2)) / (ts[1] - ts[0]))
        prev = M0
    if not np.isfinite(c1):
        c1 = 1.0  # empty kernel: the condition is vacuous
    return c0, c1, sup1, lip


def build_thermoplasticity(
    g: SlabGrid,
    M: Coefficient = Coefficient(1.0),
    C: Coefficient = Coefficient(1.0),
    w: Coefficient = Coefficient(1.0),
    kappa: Coefficient = Coefficient(1.0),
    c: float = 1.0,
    tau0: float = 1.0,
    s0: float = 1.0,
    time_window=(0.0, 10.0),
) -> GalleryModel:
    """Coupled heat/momentum system with a saturating trace-free flow relation.

    State (v, T, theta, q); the flux block of the selfadjoint part is zero, so
    the kernel is exactly the q slot and the zeroth-order heat-conduction term
    provides the coercivity there.
    """
    if c <= 0 or tau0 <= 0 or s0 <= 0:
        raise ContractViolation("c, tau0 and s0 must be positive")
    ops = build_slab_operators(g)
    m = g.m
    nv, nT, nth, nq = 3 * m, 6 * m, m, m
    dim = nv + nT + nth + nq
    slots = {
        "v": (0, nv),
        "T": (nv, nv + nT),
        "theta": (nv + nT, nv + nT + nth),
        "q": (nv + nT + nth, dim),
    }
    tv = TRACE_VECTOR
    trace_star = np.kron(np.eye(m), tv[:, None])

    def m0_at(t: float) -> np.ndarray:
        out = np.zeros((dim, dim))
        sl_v, sl_T, sl_th, _ = (slice(*slots[k]) for k in ("v", "T", "theta", "q"))
        out[sl_v, sl_v] = M(t) * np.eye(nv)
        cinv = 1.0 / C(t)
        out[sl_T, sl_T] = cinv * np.eye(nT)
        coupling = c * cinv * trace_star
        out[sl_T, sl_th] = coupling
        out[sl_th, sl_T] = coupling.T
        out[sl_th, sl_th] = (c * w(t) / tau0 + 3.0 * c * c * cinv) * np.eye(nth)
        return out

    def m1_at(t: float) -> np.ndarray:
        out = np.zeros((dim, dim))
        sl_q = slice(*slots["q"])
        out[sl_q, sl_q] = (tau0 / (c * kappa(t))) * np.eye(nq)
        return out

    kb = np.zeros((dim, nq))
    kb[slots["q"][0] :, :] = np.eye(nq)
    rb = np.zeros((dim, dim - nq))
    rb[: dim - nq, :] = np.eye(dim - nq)

    window = (time_window[0], time_window[0]) if all(
        co.constant for co in (M, C, w, kappa)
    ) else time_window
    c0, c1, sup1, lip = _measure_constants(m0_at, m1_at, kb, rb, window)
    # analytic bounds where available, measured elsewhere
    c1 = min(c1, tau0 / (c * kappa.upper))
    sup1 = max(sup1, tau0 / (c * kappa.lower))
    constant = all(co.constant for co in (M, C, w, kappa))

    family = MaterialFamily(
        dim=dim,
        M0_at=m0_at,
        M1_at=m1_at,
        lip_M0=lip * (1.0 + 1e-3) + 1e-12,
        sup_M1=sup1,
        c0=c0 * (1.0 - 1e-9),
        c1=c1 * (1.0 - 1e-9),
        kernel_basis=kb,
        range_basis=rb,
        constant=constant,
    )

    K = np.zeros((dim, dim))
    sl_v, sl_T, sl_th, sl_q = (slice(*slots[k]) for k in ("v", "T", "theta", "q"))
    K[sl_v, sl_T] = ops.Grad_c.T      # -Div
    K[sl_T, sl_v] = -ops.Grad_c
    K[sl_th, sl_q] = ops.grad_c.T     # -div
    K[sl_q, sl_th] = -ops.grad_c
    flow = SlotEmbedded(NodewiseRelation(DeviatoricSaturation(radius=s0), m), slots["T"][0], dim)
    relation = StructuredSum(K, flow)

    sample_ts = [window[0]] if constant else np.linspace(*window, 17)
    report = check_conditions(family, sample_ts)
    if not report.passed:
        raise ConditionCheckError(
            f"thermoplastic assembly rejected; failing conditions: {report.failing()}"
        )
    return GalleryModel(
        name="thermoplasticity",
        family=family,
        relation=relation,
        operators=ops,
        slots=slots,
        skew_block=K,
        conditions=report,
        meta={"m": m, "dx": g.dx, "c": c, "tau0": tau0, "s0": s0},
    )


def build_viscoplasticity(
    g: SlabGrid,
    M: Coefficient = Coefficient(1.0),
    D: Coefficient = Coefficient(1.0),
    L: Coefficient = Coefficient(1.0),
    N: int = 5,
    coupling: np.ndarray = None,
    relation_kind: str = "soft_threshold",
    relation_param: float = 1.0,
    time_window=(0.0, 10.0),
) -> GalleryModel:
    """Internal-variable system; the selfadjoint block has an empty kernel.

    Positivity of the (w, T) block is equivalent to positivity of the
    decoupled creep/elasticity moduli (a symmetric Gauss step), which is the
    assembly gate here.
    """
    if not 1 <= N <= 5:
        raise ContractViolation("N must be between 1 and 5 (deviatoric basis size)")
    if min(D.lower, L.lower, M.lower) <= 0:
        raise ConditionCheckError(
            "viscoplastic assembly rejected: creep/elastic moduli must be "
            "uniformly positive definite for the block to stay positive"
        )
    ops = build_slab_operators(g)
    m = g.m
    B = deviatoric_basis()[:, :N] if coupling is None else np.asarray(coupling, dtype=float)
    if B.shape != (6, N):
        raise ContractViolation(f"coupling matrix must be 6 x {N}")
    nv, nw, nT = 3 * m, N * m, 6 * m
    dim = nv + nw + nT
    slots = {"v": (0, nv), "w": (nv, nv + nw), "T": (nv + nw, dim)}
    BBt = B @ B.T
    B_nodes = np.kron(np.eye(m), B)

    def m0_at(t: float) -> np.ndarray:
        out = np.zeros((dim, dim))
        sl_v, sl_w, sl_T = (slice(*slots[k]) for k in ("v", "w", "T"))
        linv = 1.0 / L(t)
        out[sl_v, sl_v] = M(t) * np.eye(nv)
        out[sl_w, sl_w] = linv * np.eye(nw)
        out[sl_w, sl_T] = -linv * B_nodes.T
        out[sl_T, sl_w] = -linv * B_nodes
        out[sl_T, sl_T] = (1.0 / D(t)) * np.eye(nT) + linv * np.kron(np.eye(m), BBt)
        return out

    def m1_at(t: float) -> np.ndarray:
        return np.zeros((dim, dim))

    kb = np.zeros((dim, 0))
    rb = np.eye(dim)
    constant = all(co.constant for co in (M, D, L))
    window = (time_window[0], time_window[0]) if constant else time_window
    c0, c1, sup1, lip = _measure_constants(m0_at, m1_at, kb, rb, window)
    if c0 <= 0:
        raise ConditionCheckError(
            "viscoplastic assembly rejected: assembled block is not positive definite"
        )
    family = MaterialFamily(
        dim=dim,
        M0_at=m0_at,
        M1_at=m1_at,
        lip_M0=lip * (1.0 + 1e-3) + 1e-12,
        sup_M1=0.0,
        c0=c0 * (1.0 - 1e-9),
        c1=1.0,  # kernel empty, condition vacuous
        kernel_basis=kb,
        range_basis=rb,
        constant=constant,
    )

    K = np.zeros((dim, dim))
    sl_v, sl_w, sl_T = (slice(*slots[k]) for k in ("v", "w", "T"))
    K[sl_v, sl_T] = ops.Grad_c.T      # -Div
    K[sl_T, sl_v] = -ops.Grad_c
    if relation_kind == "soft_threshold":
        base = NormSubdifferential(N, weight=relation_param)
    elif relation_kind == "ball_saturation":
        base = BallSaturation(N, radius=relation_param)
    else:
        raise ContractViolation(f"unknown internal-variable relation {relation_kind!r}")
    internal = SlotEmbedded(NodewiseRelation(base, m), slots["w"][0], dim)
    relation = StructuredSum(K, internal)

    sample_ts = [window[0]] if constant else np.linspace(*window, 17)
    report = check_conditions(family, sample_ts)
    if not report.passed:
        raise ConditionCheckError(
            f"viscoplastic assembly rejected; failing conditions: {report.failing()}"
        )
    return GalleryModel(
        name="viscoplasticity",
        family=family,
        relation=relation,
        operators=ops,
        slots=slots,
        skew_block=K,
        conditions=report,
        meta={"m": m, "dx": g.dx, "N": N, "relation": relation_kind},
    )


def raw_viscoplastic_block(D_val: float, L_val: float, B: np.ndarray) -> np.ndarray:
    """The per-node (w, T) block assembled verbatim, for positivity cross-checks."""
    N = B.shape[1]
    linv = 1.0 / L_val
    top = np.hstack([linv * np.eye(N), -linv * B.T])
    bottom = np.hstack([-linv * B, (1.0 / D_val) * np.eye(6) + linv * (B @ B.T)])
    return np.vstack([top, bottom])
