"""Randomized verification campaigns for the solver's quantitative guarantees.

Each check runs over seeded trials: causality and weight-independence compare
solutions bit for bit (the march is deterministic and causal, so anything
weaker would hide bugs); the Lipschitz and monotonicity checks compare against
their closed-form bounds; the oracle check cross-validates the stepper against
an independent branch-enumeration solver that never touches a resolvent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import CatalogProblem
from .errors import ContractViolation, StepFailure
from .relations import (
    BallSaturation,
    LinearRelation,
    NormSubdifferential,
    ZeroRelation,
)
from .signals import WeightedSignal, weighted_inner, weighted_norm
from .solver import InclusionProblem, lipschitz_bound, lipschitz_certificate, solve

__all__ = [
    "PropertyCampaign",
    "CampaignReport",
    "run_campaign",
    "random_forcing",
    "oracle_trajectory",
    "fixed_point_iterates",
    "monotonicity_margin",
]

ALL_CHECKS = (
    "causality",
    "lipschitz",
    "monotonicity_bound",
    "rho_independence",
    "yosida_agreement",
    "oracle_match",
)


def random_forcing(template: CatalogProblem, rng: np.random.Generator) -> WeightedSignal:
    """Node-wise standard normal values scaled to unit weighted norm."""
    vals = rng.standard_normal((template.grid.n, template.dim))
    sig = template.signal(vals)
    nrm = weighted_norm(sig)
    if nrm == 0.0:
        return sig
    return template.signal(vals / nrm)


@dataclass(frozen=True)
class PropertyCampaign:
    """Seed-determined batch of checks over a catalog template."""

    template: CatalogProblem
    trials: int
    seed: int
    checks: tuple = ALL_CHECKS
    fp_tol: float = 1e-10

    def __post_init__(self):
        unknown = set(self.checks) - set(ALL_CHECKS)
        if unknown:
            raise ContractViolation(f"unknown checks: {sorted(unknown)}")
        if "oracle_match" in self.checks and not self.template.oracle_capable:
            raise ContractViolation(
                f"template {self.template.name!r} has no branch-enumeration oracle"
            )


@dataclass
class CampaignReport:
    """One row per (trial, check); rows are ordered, so serialization is stable."""

    campaign_name: str
    seed: int
    rows: list = field(default_factory=list)  # (trial, check, passed, margin, seed)

    def add(self, trial, check, passed, margin, seed):
        # + 0.0 folds negative zero so serialized margins are sign-stable
        self.rows.append((trial, check, bool(passed), float(margin) + 0.0, int(seed)))

    @property
    def failures(self):
        return [r for r in self.rows if not r[2]]

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        out = {}
        for check in sorted({r[1] for r in self.rows}):
            rows = [r for r in self.rows if r[1] == check]
            out[check] = {
                "trials": len(rows),
                "passes": sum(1 for r in rows if r[2]),
                "worst_margin": min(r[3] for r in rows),
                "failing_seeds": [r[4] for r in rows if not r[2]],
            }
        return out

    def to_csv(self) -> str:
        lines = ["trial,check,passed,margin,seed"]
        for trial, check, passed, margin, seed in sorted(self.rows, key=lambda r: (r[0], r[1])):
            lines.append(f"{trial},{check},{int(passed)},{margin:.17g},{seed}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        lines = [f"campaign = {self.campaign_name}", f"seed = {self.seed}"]
        for check, info in self.summary().items():
            lines.append(f"{check}.trials = {info['trials']}")
            lines.append(f"{check}.passes = {info['passes']}")
            lines.append(f"{check}.worst_margin = {info['worst_margin']:.17g}")
            if info["failing_seeds"]:
                lines.append(
                    f"{check}.failing_seeds = {' '.join(str(s) for s in info['failing_seeds'])}"
                )
        lines.append(f"passed = {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def monotonicity_margin(template: CatalogProblem, u: WeightedSignal) -> float:
    """Slack of the discrete coercivity inequality for the material part.

    Compares Re<(D(M0 u) + M1 u, u>_rho against the kernel/range bracket with
    eps = (c1 - c_tilde)/2, allowing the implicit-scheme correction
    10*(rho^2 + lip)*max_k|u_k| * dt * |u|^2. Nonnegative margin means pass.
    """
    fam = template.family
    grid = u.grid
    dt = grid.dt
    rho = u.rho
    vals = u.values
    n = grid.n
    m0u = np.empty_like(vals)
    m1u = np.empty_like(vals)
    for k in range(n):
        t = grid.t0 + k * dt
        m0u[k] = np.asarray(fam.M0_at(t), dtype=float) @ vals[k]
        m1u[k] = np.asarray(fam.M1_at(t), dtype=float) @ vals[k]
    d_m0u = np.diff(m0u, axis=0, prepend=np.zeros((1, vals.shape[1]))) / dt
    lhs = weighted_inner(u.with_values(d_m0u + m1u), u)
    eps = 0.5 * (fam.c1 - template.c_tilde)
    bracket = rho * fam.c0 - 0.5 * fam.lip_M0 - fam.sup_M1 - fam.sup_M1**2 / eps
    range_part = u.with_values(vals @ fam.range_basis @ fam.range_basis.T)
    kernel_part = u.with_values(vals @ fam.kernel_basis @ fam.kernel_basis.T)
    rhs = bracket * weighted_inner(range_part, range_part) + (
        fam.c1 - eps
    ) * weighted_inner(kernel_part, kernel_part)
    sup_u = float(np.max(np.linalg.norm(vals, axis=1)))
    allowance = 10.0 * (rho**2 + fam.lip_M0) * sup_u * dt * weighted_inner(u, u)
    return float(lhs - rhs + allowance)


# ---------------------------------------------------------------------------
# independent branch-enumeration oracle (no resolvents, no shared step code)


def _cramer_solve(S: np.ndarray, b: np.ndarray) -> np.ndarray:
    if S.shape == (1, 1):
        return np.array([b[0] / S[0, 0]])
    det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    return np.array(
        [
            (b[0] * S[1, 1] - S[0, 1] * b[1]) / det,
            (S[0, 0] * b[1] - b[0] * S[1, 0]) / det,
        ]
    )


def _bisect_radius(phi, lo, hi, iters=200):
    flo = phi(lo)
    fhi = phi(hi)
    expand = 0
    while flo * fhi > 0 and expand < 60:
        hi *= 2.0
        fhi = phi(hi)
        expand += 1
    if flo * fhi > 0:
        return None
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = phi(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _oracle_step(relation, S: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    """Solve S u + A(u) ∋ b by exhaustive branch enumeration plus bisection."""
    scale = 1.0 + float(np.linalg.norm(b))

    def residual(u, a_val):
        return float(np.linalg.norm(S @ u + a_val - b))

    if isinstance(relation, ZeroRelation):
        u = _cramer_solve(S, b)
        if residual(u, 0.0 * u) <= tol * scale:
            return u
        raise StepFailure("oracle: linear branch residual too large", step=-1)

    if isinstance(relation, LinearRelation):
        u = _cramer_solve(S + relation.matrix, b)
        if residual(u, relation.matrix @ u) <= tol * scale:
            return u
        raise StepFailure("oracle: linear branch residual too large", step=-1)

    if isinstance(relation, NormSubdifferential):
        wgt = relation.weight
        if S.shape == (1, 1):
            s = S[0, 0]
            # three branches of the sign relation
            for u_val, a_val, ok in (
                ((b[0] - wgt) / s, wgt, lambda x: x > 0),
                ((b[0] + wgt) / s, -wgt, lambda x: x < 0),
                (0.0, b[0], lambda x: abs(b[0]) <= wgt + tol),
            ):
                if ok(u_val):
                    u = np.array([u_val])
                    res = abs(s * u_val + (a_val if u_val != 0.0 else 0.0) - b[0])
                    if u_val == 0.0:
                        res = max(abs(b[0]) - wgt, 0.0)
                    if res <= tol * scale:
                        return u
            raise StepFailure("oracle: no sign branch admits a solution", step=-1)
        # planar: zero branch, else radial equation on the smooth branch
        if np.linalg.norm(b) <= wgt * (1.0 + 1e-14):
            return np.zeros(2)

        def phi(r):
            u = _cramer_solve(S + (wgt / r) * np.eye(2), b)
            return float(np.linalg.norm(u)) - r

        hi = (np.linalg.norm(b) + wgt) / max(_min_sym_eig(S), 1e-12) + 1.0
        root = _bisect_radius(phi, 1e-14, hi)
        if root is None:
            raise StepFailure("oracle: radial bisection failed", step=-1)
        u = _cramer_solve(S + (wgt / root) * np.eye(2), b)
        if residual(u, wgt * u / np.linalg.norm(u)) <= tol * scale:
            return u
        raise StepFailure("oracle: smooth branch residual too large", step=-1)

    if isinstance(relation, BallSaturation):
        s0 = relation.radius
        eye = np.eye(S.shape[0])
        u = _cramer_solve(S + eye, b)  # unsaturated branch: A(u) = u
        if np.linalg.norm(u) <= s0 * (1.0 + 1e-14):
            if residual(u, u) <= tol * scale:
                return u

        def phi(r):
            v = _cramer_solve(S + (s0 / r) * eye, b)
            return float(np.linalg.norm(v)) - r

        hi = (np.linalg.norm(b) + s0) / max(_min_sym_eig(S), 1e-12) + 1.0
        root = _bisect_radius(phi, s0, hi)
        if root is None:
            raise StepFailure("oracle: no saturation branch admits a solution", step=-1)
        u = _cramer_solve(S + (s0 / root) * eye, b)
        if residual(u, s0 * u / np.linalg.norm(u)) <= tol * scale:
            return u
        raise StepFailure("oracle: saturated branch residual too large", step=-1)

    raise ContractViolation(f"no oracle branches for relation {type(relation).__name__}")


def _min_sym_eig(S):
    sym = 0.5 * (S + S.T)
    if sym.shape == (1, 1):
        return float(sym[0, 0])
    tr = sym[0, 0] + sym[1, 1]
    det = sym[0, 0] * sym[1, 1] - sym[0, 1] * sym[1, 0]
    disc = np.sqrt(max(tr * tr / 4.0 - det, 0.0))
    return float(tr / 2.0 - disc)


def oracle_trajectory(problem, forcing: WeightedSignal = None,
                      tol: float = 1e-12) -> WeightedSignal:
    """Ground-truth trajectory via per-step branch enumeration (dim <= 2 only).

    Accepts either a catalog template plus a forcing signal, or an assembled
    inclusion problem. The per-step solves enumerate the relation's branches
    and bisect the radial equations; no resolvents, no step-engine code.
    """
    if isinstance(problem, InclusionProblem):
        family, relation = problem.family, problem.relation
        if forcing is None:
            forcing = problem.forcing
        name = "problem"
        capable = True
    else:
        family, relation = problem.family, problem.relation
        name = problem.name
        capable = problem.oracle_capable
        if forcing is None:
            raise ContractViolation("a forcing signal is required with a template")
    dim = family.dim
    if dim > 2:
        raise ContractViolation("oracle is restricted to dim <= 2")
    if not capable:
        raise ContractViolation(f"{name!r} has no oracle")
    grid = forcing.grid
    dt = grid.dt
    vals = forcing.values
    out = np.empty_like(vals)
    prev_m0u = np.zeros(dim)
    for k in range(grid.n):
        t = grid.t0 + k * dt
        S = np.asarray(family.M0_at(t), dtype=float) / dt + np.asarray(
            family.M1_at(t), dtype=float
        )
        b = vals[k] + prev_m0u / dt
        u = _oracle_step(relation, S, b, tol)
        out[k] = u
        prev_m0u = np.asarray(family.M0_at(t), dtype=float) @ u
    return forcing.with_values(out)


def fixed_point_iterates(f_map, g_map, x: np.ndarray, n_iter: int,
                         lip_f: float, lip_g: float, y0=None):
    """Iterates y_{n+1} = F(x - G(y_n)) from y_0 (zero by default).

    Requires lip_f * lip_g < 1; the tail of the sequence then contracts at
    that rate toward the unique fixed point, whatever the starting point.
    """
    if lip_f * lip_g >= 1.0:
        raise ContractViolation(
            f"contraction product must be < 1, got {lip_f * lip_g:.3g}"
        )
    x = np.asarray(x, dtype=float)
    y = np.zeros_like(x) if y0 is None else np.asarray(y0, dtype=float).copy()
    iterates = [y.copy()]
    for _ in range(n_iter):
        y = np.asarray(f_map(x - g_map(y)), dtype=float)
        iterates.append(y.copy())
    return iterates


# ---------------------------------------------------------------------------
# campaign driver


def _check_causality(template, rng, fp_tol):
    n = template.grid.n
    f = random_forcing(template, rng)
    g = random_forcing(template, rng)
    cut = int(rng.integers(1, n - 1))
    g_vals = g.values.copy()
    g_vals[:cut] = f.values[:cut]
    g = template.signal(g_vals)
    rep_f = solve(template.problem(f, fp_tol=fp_tol))
    rep_g = solve(template.problem(g, fp_tol=fp_tol))
    if not (rep_f.converged and rep_g.converged):
        return False, float("-inf")
    diff = np.max(
        np.abs(rep_f.solution.values[:cut] - rep_g.solution.values[:cut]), initial=0.0
    )
    return diff == 0.0, -float(diff)


def _check_lipschitz(template, rng, fp_tol):
    f = random_forcing(template, rng)
    g = random_forcing(template, rng)
    prob = template.problem(f, fp_tol=fp_tol)
    ratio = lipschitz_certificate(prob, g)
    bound = lipschitz_bound(prob)
    return ratio <= bound, float(bound - ratio)


def _check_monotonicity(template, rng, fp_tol):
    u = random_forcing(template, rng)
    margin = monotonicity_margin(template, u)
    return margin >= 0.0, margin


def _check_rho_independence(template, rng, fp_tol):
    f = random_forcing(template, rng)
    rho_a, rho_b = template.admissible_rho_pair()
    rep_a = solve(template.problem(template.signal(f.values, rho_a), rho=rho_a, fp_tol=fp_tol))
    rep_b = solve(template.problem(template.signal(f.values, rho_b), rho=rho_b, fp_tol=fp_tol))
    if not (rep_a.converged and rep_b.converged):
        return False, float("-inf")
    diff = np.max(np.abs(rep_a.solution.values - rep_b.solution.values), initial=0.0)
    return diff == 0.0, -float(diff)


def _check_yosida(template, rng, fp_tol):
    f = random_forcing(template, rng)
    direct = solve(template.problem(f, fp_tol=fp_tol))
    path = solve(template.problem(f, mode="yosida_path", fp_tol=fp_tol))
    if not (direct.converged and path.converged):
        return False, float("-inf")
    lam_min = path.lambda_trace[-1][0]
    tol = 10.0 * fp_tol + 5.0 * lam_min
    err = float(
        np.max(np.abs(direct.solution.values - path.solution.values), initial=0.0)
    )
    norms = [nrm for _, nrm in path.lambda_trace]
    ratio_ok = all(
        b <= 2.0 * a + 10.0 * fp_tol for a, b in zip(norms, norms[1:])
    )
    return (err <= tol) and ratio_ok, float(tol - err)


def _check_oracle(template, rng, fp_tol):
    f = random_forcing(template, rng)
    rep = solve(template.problem(f, fp_tol=fp_tol))
    if not rep.converged:
        return False, float("-inf")
    ref = oracle_trajectory(template, f)
    err = float(np.max(np.abs(rep.solution.values - ref.values), initial=0.0))
    tol = 10.0 * fp_tol
    return err <= tol, float(tol - err)


_CHECK_FNS = {
    "causality": _check_causality,
    "lipschitz": _check_lipschitz,
    "monotonicity_bound": _check_monotonicity,
    "rho_independence": _check_rho_independence,
    "yosida_agreement": _check_yosida,
    "oracle_match": _check_oracle,
}


def replay_check(template: CatalogProblem, check: str, seed: int,
                 fp_tol: float = 1e-10):
    """Re-run one trial check from its recorded seed; returns (passed, margin)."""
    rng = np.random.default_rng([int(seed), ALL_CHECKS.index(check)])
    return _CHECK_FNS[check](template, rng, fp_tol)


def run_campaign(campaign: PropertyCampaign) -> CampaignReport:
    """Run every selected check over seeded trials; failures never abort."""
    master = np.random.default_rng(campaign.seed)
    trial_seeds = master.integers(0, 2**63 - 1, size=max(campaign.trials, 0))
    report = CampaignReport(campaign_name=campaign.template.name, seed=campaign.seed)
    for trial, seed in enumerate(trial_seeds):
        for check in campaign.checks:
            try:
                passed, margin = replay_check(
                    campaign.template, check, seed, campaign.fp_tol
                )
            except Exception:
                passed, margin = False, float("-inf")
            report.add(trial, check, passed, margin, seed)
    return report
