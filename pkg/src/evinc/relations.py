"""Maximal monotone relations defined through their resolvents.

A relation A is accessed exclusively via resolve(lam, y), the unique x with
(x, (y-x)/lam) in A; set-valuedness stays exact without any set representation
because every construction downstream (Yosida surrogates, per-step solves,
Lipschitz-perturbed sums) consumes resolvents only.

Catalog members ship closed-form resolvents derived by case analysis and are
cross-checked by the surjectivity scan in the tests. Structural hooks used by
the stepper:

- ``split()`` returns ``(linear_matrix_or_None, tail_or_None)`` with
  A = linear + tail;
- single-valued tails expose ``apply`` and a cocoercivity constant
  (projection-type maps are 1-cocoercive), which decides between
  forward-backward and Douglas-Rachford in the per-step engines;
- ``graph_distance(x, v)`` measures dist(v, A(x)) for brute-force oracles.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation, ResolventFailure
from .tensors import mandel_dev

__all__ = [
    "MonotoneRelation",
    "ZeroRelation",
    "LinearRelation",
    "NormSubdifferential",
    "BallSaturation",
    "DeviatoricSaturation",
    "NodewiseRelation",
    "SlotEmbedded",
    "StructuredSum",
    "YosidaRelation",
    "resolvent",
    "yosida",
    "lift",
    "LiftedRelation",
    "minty_scan",
    "MintyReport",
    "sum_with_lipschitz",
    "relation_from_config",
]

PICARD_TOL = 1e-12
PICARD_MAX_ITER = 10_000


class MonotoneRelation:
    """Base: a maximal monotone relation on R^dim accessed via its resolvent."""

    dim: int
    contains_origin: bool = True
    bounded: bool = False
    single_valued: bool = False
    #: largest c with <A(x)-A(y), x-y> >= c |A(x)-A(y)|^2 (0.0 if unknown/none)
    cocoercivity: float = 0.0
    #: Lipschitz bound when single-valued (None if unknown)
    lipschitz: float | None = None

    def resolve(self, lam: float, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} is not single-valued")

    def split(self):
        """Decompose A = linear + tail for the step engines."""
        return None, self

    def graph_distance(self, x: np.ndarray, v: np.ndarray) -> float:
        """dist(v, A(x)); NaN when the relation cannot evaluate its graph."""
        if self.single_valued:
            return float(np.linalg.norm(v - self.apply(x)))
        return float("nan")

    def has_eval(self) -> bool:
        return self.single_valued or type(self).graph_distance is not MonotoneRelation.graph_distance

    # batch forms over row-stacked inputs; the defaults just loop
    def resolve_block(self, lam: float, ys: np.ndarray) -> np.ndarray:
        return np.stack([self.resolve(lam, y) for y in np.asarray(ys, dtype=float)])

    def apply_block(self, xs: np.ndarray) -> np.ndarray:
        return np.stack([self.apply(x) for x in np.asarray(xs, dtype=float)])


class ZeroRelation(MonotoneRelation):
    """A(x) = {0}; its resolvent is the identity."""

    def __init__(self, dim: int):
        self.dim = dim
        self.bounded = True
        self.single_valued = True
        self.cocoercivity = float("inf")
        self.lipschitz = 0.0

    def resolve(self, lam, y):
        return np.array(y, dtype=float)

    def apply(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def resolve_block(self, lam, ys):
        return np.array(ys, dtype=float)

    def apply_block(self, xs):
        return np.zeros_like(np.asarray(xs, dtype=float))

    def split(self):
        return None, None


class LinearRelation(MonotoneRelation):
    """A(x) = G x with a monotone matrix G (positive semidefinite symmetric part)."""

    def __init__(self, matrix: np.ndarray):
        G = np.array(matrix, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ContractViolation("linear relation needs a square matrix")
        sym = 0.5 * (G + G.T)
        lo = float(np.min(np.linalg.eigvalsh(sym)))
        nrm = float(np.linalg.norm(G, 2))
        if lo < -1e-12 * max(nrm, 1.0):
            raise ContractViolation(f"matrix is not monotone (min sym eig {lo:.3e})")
        self.matrix = G
        self.dim = G.shape[0]
        self.bounded = True
        self.single_valued = True
        self.lipschitz = nrm
        self.cocoercivity = max(lo, 0.0) / nrm**2 if nrm > 0 else float("inf")

    def resolve(self, lam, y):
        return np.linalg.solve(np.eye(self.dim) + lam * self.matrix, np.asarray(y, dtype=float))

    def apply(self, x):
        return self.matrix @ np.asarray(x, dtype=float)

    def resolve_block(self, lam, ys):
        A = np.eye(self.dim) + lam * self.matrix
        return np.linalg.solve(A, np.asarray(ys, dtype=float).T).T

    def apply_block(self, xs):
        return np.asarray(xs, dtype=float) @ self.matrix.T

    def split(self):
        return self.matrix, None


class NormSubdifferential(MonotoneRelation):
    """Subdifferential of x -> weight*|x|_2: the sign relation in one dimension.

    Set-valued at the origin (the whole ball of radius ``weight``); the
    resolvent is the block soft threshold.
    """

    def __init__(self, dim: int, weight: float = 1.0):
        if weight <= 0:
            raise ContractViolation("weight must be positive")
        self.dim = dim
        self.weight = float(weight)
        self.bounded = True
        self.single_valued = False

    def resolve(self, lam, y):
        y = np.asarray(y, dtype=float)
        r = np.linalg.norm(y)
        th = lam * self.weight
        if r <= th:
            return np.zeros_like(y)
        return y * (1.0 - th / r)

    def resolve_block(self, lam, ys):
        ys = np.asarray(ys, dtype=float)
        r = np.linalg.norm(ys, axis=1, keepdims=True)
        th = lam * self.weight
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(r > th, 1.0 - th / np.where(r > 0, r, 1.0), 0.0)
        return ys * factor

    def graph_distance(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        r = np.linalg.norm(x)
        if r == 0.0:
            return max(float(np.linalg.norm(v)) - self.weight, 0.0)
        return float(np.linalg.norm(v - self.weight * x / r))


class BallSaturation(MonotoneRelation):
    """A(x) = projection of x onto the ball of the given radius (single-valued)."""

    def __init__(self, dim: int, radius: float = 1.0):
        if radius <= 0:
            raise ContractViolation("radius must be positive")
        self.dim = dim
        self.radius = float(radius)
        self.bounded = True
        self.single_valued = True
        self.cocoercivity = 1.0  # projections are firmly nonexpansive
        self.lipschitz = 1.0

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        if r <= self.radius:
            return x.copy()
        return x * (self.radius / r)

    def resolve(self, lam, y):
        y = np.asarray(y, dtype=float)
        r = np.linalg.norm(y)
        if r <= self.radius * (1.0 + lam):
            return y / (1.0 + lam)
        return y * ((r - lam * self.radius) / r)

    def apply_block(self, xs):
        xs = np.asarray(xs, dtype=float)
        r = np.linalg.norm(xs, axis=1, keepdims=True)
        factor = np.where(r > self.radius, self.radius / np.where(r > 0, r, 1.0), 1.0)
        return xs * factor

    def resolve_block(self, lam, ys):
        ys = np.asarray(ys, dtype=float)
        r = np.linalg.norm(ys, axis=1, keepdims=True)
        inside = r <= self.radius * (1.0 + lam)
        saturated = ys * ((r - lam * self.radius) / np.where(r > 0, r, 1.0))
        return np.where(inside, ys / (1.0 + lam), saturated)


class DeviatoricSaturation(MonotoneRelation):
    """T -> projection of dev T onto a ball, on Mandel 6-vectors.

    Outputs are trace free; the spherical part of the input passes through the
    resolvent untouched.
    """

    BLOCK = 6

    def __init__(self, radius: float = 1.0):
        if radius <= 0:
            raise ContractViolation("radius must be positive")
        self.dim = self.BLOCK
        self.radius = float(radius)
        self.bounded = True
        self.single_valued = True
        self.cocoercivity = 1.0
        self.lipschitz = 1.0
        self._ball = BallSaturation(self.BLOCK, radius)

    def apply(self, x):
        return self._ball.apply(mandel_dev(np.asarray(x, dtype=float)))

    def resolve(self, lam, y):
        y = np.asarray(y, dtype=float)
        d = mandel_dev(y)
        sph = y - d
        return sph + self._ball.resolve(lam, d)

    def _dev_rows(self, xs):
        xs = np.asarray(xs, dtype=float)
        dev = xs.copy()
        dev[:, :3] -= xs[:, :3].mean(axis=1, keepdims=True)
        return dev

    def apply_block(self, xs):
        return self._ball.apply_block(self._dev_rows(xs))

    def resolve_block(self, lam, ys):
        ys = np.asarray(ys, dtype=float)
        dev = self._dev_rows(ys)
        return (ys - dev) + self._ball.resolve_block(lam, dev)


class NodewiseRelation(MonotoneRelation):
    """Block-diagonal repetition of a base relation across ``count`` nodes."""

    def __init__(self, base: MonotoneRelation, count: int):
        self.base = base
        self.count = count
        self.dim = base.dim * count
        self.bounded = base.bounded
        self.contains_origin = base.contains_origin
        self.single_valued = base.single_valued
        self.cocoercivity = base.cocoercivity
        self.lipschitz = base.lipschitz

    def _blocks(self, y):
        return np.asarray(y, dtype=float).reshape(self.count, self.base.dim)

    def resolve(self, lam, y):
        return self.base.resolve_block(lam, self._blocks(y)).ravel()

    def apply(self, x):
        return self.base.apply_block(self._blocks(x)).ravel()

    def resolve_block(self, lam, ys):
        ys = np.asarray(ys, dtype=float)
        rows = ys.reshape(ys.shape[0] * self.count, self.base.dim)
        return self.base.resolve_block(lam, rows).reshape(ys.shape)

    def apply_block(self, xs):
        xs = np.asarray(xs, dtype=float)
        rows = xs.reshape(xs.shape[0] * self.count, self.base.dim)
        return self.base.apply_block(rows).reshape(xs.shape)

    def graph_distance(self, x, v):
        dists = [
            self.base.graph_distance(xb, vb)
            for xb, vb in zip(self._blocks(x), self._blocks(v))
        ]
        return float(np.linalg.norm(dists))


class SlotEmbedded(MonotoneRelation):
    """Base relation acting on a contiguous slot of a larger state, zero elsewhere."""

    def __init__(self, base: MonotoneRelation, start: int, total_dim: int):
        if start < 0 or start + base.dim > total_dim:
            raise ContractViolation("slot does not fit in the state vector")
        self.base = base
        self.start = start
        self.stop = start + base.dim
        self.dim = total_dim
        self.bounded = base.bounded
        self.contains_origin = base.contains_origin
        self.single_valued = base.single_valued
        self.cocoercivity = base.cocoercivity
        self.lipschitz = base.lipschitz

    def resolve(self, lam, y):
        y = np.asarray(y, dtype=float)
        out = y.copy()
        out[self.start : self.stop] = self.base.resolve(lam, y[self.start : self.stop])
        return out

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        out[self.start : self.stop] = self.base.apply(x[self.start : self.stop])
        return out

    def graph_distance(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        d_slot = self.base.graph_distance(x[self.start : self.stop], v[self.start : self.stop])
        rest = np.delete(v, slice(self.start, self.stop))
        return float(np.hypot(d_slot, np.linalg.norm(rest)))


class StructuredSum(MonotoneRelation):
    """A = K + tail with K a monotone matrix; the stepper exploits the split.

    The full resolvent solves x + lam*K x + lam*tail(x) ∋ y by
    Douglas-Rachford between the (prefactorable) affine part and the tail
    resolvent, so it remains available for Yosida surrogates and scans.
    """

    def __init__(self, matrix: np.ndarray, tail: MonotoneRelation):
        K = np.array(matrix, dtype=float)
        if K.shape != (tail.dim, tail.dim):
            raise ContractViolation("matrix and tail dimensions disagree")
        sym = 0.5 * (K + K.T)
        lo = float(np.min(np.linalg.eigvalsh(sym)))
        if lo < -1e-12 * max(np.linalg.norm(K, 2), 1.0):
            raise ContractViolation(f"linear part is not monotone (min sym eig {lo:.3e})")
        self.matrix = K
        self.tail = tail
        self.dim = tail.dim
        self.bounded = True
        self.contains_origin = tail.contains_origin
        self.single_valued = tail.single_valued

    def split(self):
        return self.matrix, self.tail

    def apply(self, x):
        return self.matrix @ np.asarray(x, dtype=float) + self.tail.apply(x)

    def graph_distance(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.tail.graph_distance(x, v - self.matrix @ x)

    def resolve(self, lam, y):
        y = np.asarray(y, dtype=float)
        eye = np.eye(self.dim)
        affine = eye + lam * self.matrix
        m_lo = 1.0  # sym part of affine is >= I for monotone K
        big = 1.0 + lam * np.linalg.norm(self.matrix, 2)
        gamma = 1.0 / np.sqrt(m_lo * big)
        lhs = eye + gamma * affine
        scale = 1.0 + float(np.linalg.norm(y))
        z = y.copy()
        gap = None
        for it in range(PICARD_MAX_ITER):
            x = np.linalg.solve(lhs, z + gamma * y)
            w = self.tail.resolve(gamma * lam, 2.0 * x - z)
            gap = float(np.linalg.norm(w - x))
            z = z + (w - x)
            if gap <= PICARD_TOL * scale:
                return w
        raise ResolventFailure(
            "structured-sum resolvent did not converge",
            residual=gap,
            iterations=PICARD_MAX_ITER,
        )


class YosidaRelation(MonotoneRelation):
    """Single-valued Lipschitz surrogate A_lam = (1 - resolvent(lam))/lam.

    Monotone, (1/lam)-Lipschitz and lam-cocoercive; its own resolvent comes
    from the exact identity
    resolve(gamma, y) = (lam*y + gamma*base.resolve(lam+gamma, y))/(lam+gamma).
    """

    def __init__(self, base: MonotoneRelation, lam: float):
        if lam <= 0:
            raise ContractViolation("lam must be positive")
        self.base = base
        self.lam = float(lam)
        self.dim = base.dim
        self.bounded = base.bounded
        self.contains_origin = base.contains_origin
        self.single_valued = True
        self.cocoercivity = self.lam
        self.lipschitz = 1.0 / self.lam

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        return (x - self.base.resolve(self.lam, x)) / self.lam

    def resolve(self, gamma, y):
        y = np.asarray(y, dtype=float)
        total = self.lam + gamma
        return (self.lam * y + gamma * self.base.resolve(total, y)) / total


def resolvent(a: MonotoneRelation, lam: float, y: np.ndarray) -> np.ndarray:
    """(1 + lam A)^{-1} y; nonexpansive in y, defined for every y."""
    if lam <= 0:
        raise ContractViolation(f"resolvent parameter must be positive, got {lam}")
    return a.resolve(lam, np.asarray(y, dtype=float))


def yosida(a: MonotoneRelation, lam: float, y: np.ndarray) -> np.ndarray:
    """(y - resolvent(a, lam, y)) / lam; monotone with Lipschitz bound 1/lam."""
    y = np.asarray(y, dtype=float)
    return (y - resolvent(a, lam, y)) / lam


class LiftedRelation:
    """Node-wise extension of a relation to weighted signals on a grid.

    Acting independently at every time node, the lift commutes with
    translations wherever both sides are defined.
    """

    def __init__(self, base: MonotoneRelation, grid, rho: float):
        self.base = base
        self.grid = grid
        self.rho = rho

    def resolve_signal(self, lam, u):
        return u.with_values(self.base.resolve_block(lam, u.values))

    def yosida_signal(self, lam, u):
        res = self.resolve_signal(lam, u)
        return u.with_values((u.values - res.values) / lam)

    def apply_signal(self, u):
        return u.with_values(self.base.apply_block(u.values))


def lift(a: MonotoneRelation, grid, rho: float) -> LiftedRelation:
    return LiftedRelation(a, grid, rho)


class MintyReport:
    """Outcome of a surjectivity/nonexpansiveness scan (a smoke test, not a proof)."""

    def __init__(self, samples, inclusion_checked, inclusion_failures,
                 nonexpansive_failures, max_residual, max_expansion_slack):
        self.samples = samples
        self.inclusion_checked = inclusion_checked
        self.inclusion_failures = inclusion_failures
        self.nonexpansive_failures = nonexpansive_failures
        self.max_residual = max_residual
        self.max_expansion_slack = max_expansion_slack

    @property
    def passed(self) -> bool:
        return self.inclusion_failures == 0 and self.nonexpansive_failures == 0

    def __repr__(self):
        return (
            f"MintyReport(samples={self.samples}, passed={self.passed}, "
            f"inclusion_failures={self.inclusion_failures}, "
            f"nonexpansive_failures={self.nonexpansive_failures}, "
            f"max_residual={self.max_residual:.3e}, "
            f"max_expansion_slack={self.max_expansion_slack:.3e})"
        )


def minty_scan(a: MonotoneRelation, lam: float, samples: int, radius: float,
               seed: int = 0, residual_tol: float = 1e-8) -> MintyReport:
    """Sample targets in a ball, run the resolvent, verify the defining inclusion.

    For each y the pair (x, (y-x)/lam) must lie in the graph (checked through
    ``graph_distance`` when the relation can evaluate it), and consecutive
    resolvent outputs must be nonexpansive in the inputs.
    """
    if lam <= 0:
        raise ContractViolation("lam must be positive")
    rng = np.random.default_rng(seed)
    has_eval = a.has_eval()
    incl_fail = 0
    nonexp_fail = 0
    max_res = 0.0
    max_slack = 0.0
    prev_y = prev_x = None
    for _ in range(samples):
        direction = rng.standard_normal(a.dim)
        nrm = np.linalg.norm(direction)
        if nrm == 0.0:
            continue
        y = direction / nrm * radius * rng.uniform() ** (1.0 / a.dim)
        x = a.resolve(lam, y)
        if has_eval:
            res = a.graph_distance(x, (y - x) / lam)
            if np.isfinite(res):
                max_res = max(max_res, res)
                if res > residual_tol:
                    incl_fail += 1
            else:
                incl_fail += 1
        if prev_y is not None:
            slack = np.linalg.norm(x - prev_x) - np.linalg.norm(y - prev_y)
            max_slack = max(max_slack, slack)
            if slack > 1e-12 * (1.0 + np.linalg.norm(y - prev_y)):
                nonexp_fail += 1
        prev_y, prev_x = y, x
    return MintyReport(samples, has_eval, incl_fail, nonexp_fail, max_res, max_slack)


class _LipschitzPerturbedSum(MonotoneRelation):
    def __init__(self, a, b_map, lip_b):
        self.a = a
        self.b_map = b_map
        self.lip_b = float(lip_b)
        self.dim = a.dim
        self.bounded = False
        zero = np.zeros(a.dim)
        self.contains_origin = a.contains_origin and bool(
            np.allclose(b_map(zero), 0.0, atol=1e-14)
        )
        self.single_valued = False

    def resolve(self, lam, y):
        if lam * self.lip_b >= 1.0:
            raise ContractViolation(
                f"need lam*Lip(B) < 1 for the Picard resolvent, got {lam * self.lip_b:.3g}"
            )
        y = np.asarray(y, dtype=float)
        u = y.copy()
        scale = 1.0 + float(np.linalg.norm(y))
        step = None
        for _ in range(PICARD_MAX_ITER):
            u_new = self.a.resolve(lam, y - lam * self.b_map(u))
            step = float(np.linalg.norm(u_new - u))
            u = u_new
            if step <= PICARD_TOL * scale:
                return u
        raise ResolventFailure(
            "Picard iteration for the perturbed sum did not converge",
            residual=step,
            iterations=PICARD_MAX_ITER,
        )

    def graph_distance(self, x, v):
        x = np.asarray(x, dtype=float)
        return self.a.graph_distance(x, np.asarray(v, dtype=float) - self.b_map(x))


def sum_with_lipschitz(a: MonotoneRelation, b_map, lip_b: float) -> MonotoneRelation:
    """Realize A + B as a resolvent-defined relation, B Lipschitz with bound lip_b.

    The resolvent at parameter lam is the fixed point of
    u -> resolvent(a, lam, y - lam*B(u)), which contracts when lam*lip_b < 1.
    """
    if not np.isfinite(lip_b) or lip_b < 0:
        raise ContractViolation("lip_b must be a finite nonnegative bound")
    return _LipschitzPerturbedSum(a, b_map, lip_b)


def relation_from_config(kind: str, dim: int, **params) -> MonotoneRelation:
    """Catalog factory used by config files; identifiers are stable names."""
    kind = kind.strip().lower()
    if kind == "zero":
        return ZeroRelation(dim)
    if kind == "linear":
        matrix = params.get("matrix")
        if matrix is None:
            gain = float(params.get("gain", 1.0))
            matrix = gain * np.eye(dim)
        return LinearRelation(np.asarray(matrix, dtype=float).reshape(dim, dim))
    if kind == "soft_threshold":
        return NormSubdifferential(dim, weight=float(params.get("weight", 1.0)))
    if kind == "ball_saturation":
        return BallSaturation(dim, radius=float(params.get("radius", 1.0)))
    if kind == "deviatoric_saturation":
        if dim % 6 != 0:
            raise ContractViolation("deviatoric saturation needs dim divisible by 6")
        base = DeviatoricSaturation(radius=float(params.get("radius", 1.0)))
        if dim == 6:
            return base
        return NodewiseRelation(base, dim // 6)
    raise ContractViolation(f"unknown relation kind {kind!r}")
