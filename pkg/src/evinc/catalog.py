"""Named desk-scale problems used by campaigns, the CLI and the acceptance suite.

Each entry fixes a material family, a relation, a grid and an admissible
weight, and builds inclusion problems for caller-supplied forcing. The scalar
and planar entries have independent branch-enumeration oracles; the slab
entries exercise the assembled block systems at m = 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .gallery import SlabGrid, build_thermoplasticity, build_viscoplasticity
from .materials import MaterialFamily, constant_family, rho_zero
from .relations import (
    BallSaturation,
    LinearRelation,
    MonotoneRelation,
    NormSubdifferential,
    ZeroRelation,
)
from .signals import TimeGrid, WeightedSignal
from .solver import InclusionProblem

__all__ = ["CatalogProblem", "catalog_names", "make_catalog_problem"]


@dataclass(frozen=True)
class CatalogProblem:
    """A reusable problem template: everything but the forcing."""

    name: str
    family: MaterialFamily
    relation: MonotoneRelation
    grid: TimeGrid
    c_tilde: float
    rho: float
    oracle_capable: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.family.dim

    def signal(self, values: np.ndarray, rho: float = None) -> WeightedSignal:
        return WeightedSignal(self.grid, values, self.rho if rho is None else rho)

    def problem(
        self,
        forcing: WeightedSignal,
        mode: str = "direct",
        rho: float = None,
        fp_tol: float = 1e-10,
        fp_max_iter: int = 200_000,
        lambda_schedule=None,
    ) -> InclusionProblem:
        rho = self.rho if rho is None else rho
        if forcing.rho != rho:
            forcing = WeightedSignal(forcing.grid, forcing.values, rho)
        return InclusionProblem(
            family=self.family,
            relation=self.relation,
            forcing=forcing,
            rho=rho,
            c_tilde=self.c_tilde,
            mode=mode,
            fp_tol=fp_tol,
            fp_max_iter=fp_max_iter,
            lambda_schedule=lambda_schedule,
        )

    def admissible_rho_pair(self):
        """Two distinct admissible weights, for independence checks."""
        rho0 = rho_zero(self.family, self.c_tilde)
        return rho0 * 1.01 + 0.1, rho0 * 1.5 + 1.0


def _grid(n, dt, t0=0.0):
    return TimeGrid(t0=t0, dt=dt, n=n)


def catalog_names():
    return [
        "scalar_ode",
        "degenerate_plane",
        "sign_scalar",
        "saturation_plane",
        "thermoplastic_slab",
        "viscoplastic_slab",
    ]


def make_catalog_problem(name: str, n: int = None, dt: float = None, t0: float = 0.0) -> CatalogProblem:
    """Build a catalog template; n/dt default to per-problem desk-scale values."""
    name = name.strip().lower()
    if name == "scalar_ode":
        fam = constant_family([[1.0]], [[0.0]])
        c_tilde = 0.5
        rho = rho_zero(fam, c_tilde) * 1.01 + 0.1
        return CatalogProblem(
            name=name,
            family=fam,
            relation=LinearRelation([[1.0]]),
            grid=_grid(n or 2001, dt or 1e-3, t0),
            c_tilde=c_tilde,
            rho=rho,
            oracle_capable=True,
        )
    if name == "degenerate_plane":
        fam = constant_family([[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]])
        c_tilde = 0.5
        rho = rho_zero(fam, c_tilde) * 1.01 + 0.1
        return CatalogProblem(
            name=name,
            family=fam,
            relation=ZeroRelation(2),
            grid=_grid(n or 1201, dt or 1e-3, t0),
            c_tilde=c_tilde,
            rho=rho,
            oracle_capable=True,
        )
    if name == "sign_scalar":
        fam = constant_family([[1.0]], [[0.0]])
        c_tilde = 0.5
        rho = rho_zero(fam, c_tilde) * 1.01 + 0.1
        return CatalogProblem(
            name=name,
            family=fam,
            relation=NormSubdifferential(1, weight=1.0),
            grid=_grid(n or 2001, dt or 1e-3, t0),
            c_tilde=c_tilde,
            rho=rho,
            oracle_capable=True,
        )
    if name == "saturation_plane":
        # planar reduction of the trace-free saturation: on the deviatoric
        # plane the relation is exactly a ball projection
        fam = constant_family(np.eye(2), np.zeros((2, 2)))
        c_tilde = 0.5
        rho = rho_zero(fam, c_tilde) * 1.01 + 0.1
        return CatalogProblem(
            name=name,
            family=fam,
            relation=BallSaturation(2, radius=1.0),
            grid=_grid(n or 1201, dt or 1e-3, t0),
            c_tilde=c_tilde,
            rho=rho,
            oracle_capable=True,
        )
    if name == "thermoplastic_slab":
        model = build_thermoplasticity(SlabGrid(m=2, dx=0.5))
        c_tilde = 0.5 * model.family.c1
        rho = rho_zero(model.family, c_tilde) * 1.01 + 0.1
        return CatalogProblem(
            name=name,
            family=model.family,
            relation=model.relation,
            grid=_grid(n or 201, dt or 1e-3, t0),
            c_tilde=c_tilde,
            rho=rho,
            meta={"model": model},
        )
    if name == "viscoplastic_slab":
        model = build_viscoplasticity(SlabGrid(m=2, dx=0.5))
        c_tilde = 0.5 * model.family.c1
        rho = rho_zero(model.family, c_tilde) * 1.01 + 0.1
        return CatalogProblem(
            name=name,
            family=model.family,
            relation=model.relation,
            grid=_grid(n or 201, dt or 1e-3, t0),
            c_tilde=c_tilde,
            rho=rho,
            meta={"model": model},
        )
    raise ContractViolation(f"unknown catalog problem {name!r}")
