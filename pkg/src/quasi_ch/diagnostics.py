"""Per-step conservation, thermodynamic and constraint monitors."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from . import constitutive as cst
from . import fields as fd
from .constitutive import MaterialParams
from .solver import MOBILITY_MEAN, State, chemical_potential

_TINY = 1e-300


@dataclass
class DiagnosticsRecord:
    """One row of run diagnostics.

    Rate-based entries (``mass_change`` onward except the constraint and
    assumption monitors) are ``None`` when no previous state was supplied.
    ``entropy_production`` includes the stored heat-flux entropy
    ``-(delta + G)|q|**2 / (kappa0 theta)``; ``entropy_production_classical``
    uses the equilibrium entropy alone.
    """

    t: float
    total_mass: float
    c_min: float
    c_max: float
    kinetic_energy: float
    internal_energy: float
    free_energy: float
    lyapunov: float
    constraint_residual: float
    assumption_violation_fraction: float
    mass_scale: float
    mass_change: float | None = None
    lyapunov_change: float | None = None
    entropy_production: float | None = None
    entropy_production_classical: float | None = None
    energy_residual: float | None = None

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> tuple:
        return astuple(self)


def gradient_energy_density(c, rho, grid: fd.Grid):
    """Per-cell ``rho |grad c|**2`` from face differences (matches ``mu``)."""
    return fd.flux_dissipation(rho, c, grid)


def lyapunov_functional(state: State, params: MaterialParams) -> float:
    """``int rho [theta0 F(c) + gamma/2 |grad c|**2] dv``."""
    grid, c = state.grid, state.c
    rho = cst.density(c, params)
    return grid.integrate(
        rho * params.theta0 * cst.double_well_F(c) + 0.5 * params.gamma * gradient_energy_density(c, rho, grid)
    )


def internal_energy(state: State, params: MaterialParams) -> float:
    grid, c = state.grid, state.c
    rho = cst.density(c, params)
    zero = np.zeros((1, *grid.shape))
    e = cst.internal_energy_density(state.theta, c, zero, params)
    return grid.integrate(rho * e + 0.5 * params.gamma * gradient_energy_density(c, rho, grid))


def free_energy(state: State, params: MaterialParams) -> float:
    grid, c = state.grid, state.c
    rho = cst.density(c, params)
    zero = np.zeros((1, *grid.shape))
    psi = cst.free_energy_density(state.theta, c, zero, state.q, params)
    return grid.integrate(rho * psi + 0.5 * params.gamma * gradient_energy_density(c, rho, grid))


def kinetic_energy(state: State, params: MaterialParams) -> float:
    rho = cst.density(state.c, params)
    return state.grid.integrate(0.5 * rho * np.sum(state.v**2, axis=0))


def _constraint_residual(state: State, rate_state: State, params: MaterialParams) -> float:
    grid, c = rate_state.grid, rate_state.c
    rho = cst.density(c, params)
    mu = chemical_potential(rate_state, params)
    c_dot = fd.divergence_flux(cst.mobility(c, params), mu, grid, MOBILITY_MEAN) / rho
    res = cst.density_derivative(c, params) * c_dot + rho * fd.divergence(state.v, grid)
    return math.sqrt(grid.integrate(res**2))


def _assumption_violation(state: State, params: MaterialParams) -> float:
    grid, c = state.grid, state.c
    mu = chemical_potential(state, params)
    rho = cst.density(c, params)
    gc = fd.gradient(c, grid)
    D = fd.full_symmetric_gradient(state.v, grid)
    stretch = np.einsum("i...,ij...,j...->...", gc, D, gc)
    value = fd.flux_dissipation(cst.mobility(c, params), mu, grid, MOBILITY_MEAN) + params.gamma * rho * stretch
    return float(np.mean(value < 0))


def _log_mean(a, b):
    """Logarithmic mean and ``ln(b/a)``, accurate for ``a ~ b``."""
    dlog = np.log1p((b - a) / a)
    close = np.abs(b - a) <= 1e-12 * a
    safe = np.where(close, 1.0, dlog)
    return np.where(close, 0.5 * (a + b), (b - a) / safe), dlog


def entropy_production(state: State, prev: State, params: MaterialParams) -> tuple[float, float]:
    """Discrete Clausius-Duhem surplus between ``prev`` and ``state``.

    ``Sigma = int rho eta' - int rho h / theta - int q . grad(theta) / theta**2``
    with ``rho h`` taken from the first-law heat absorption.  Temperatures in
    the denominators are logarithmic means, so the specific-heat parts of
    ``rho eta'`` and ``rho h / theta`` cancel exactly.  The heat-flux term
    pairs the new ``q`` with the old temperature, as the Cattaneo update does.

    Returns ``(extended, classical)``.
    """
    grid = state.grid
    dt = state.t - prev.t
    if not dt > 0:
        raise ValueError("state must be later than prev")
    c0, c1 = prev.c, state.c
    rho = cst.density(c0, params)
    theta_l, dlog = _log_mean(prev.theta, state.theta)
    dG = cst.coupling_G(c1) - cst.coupling_G(c0)

    L = fd.velocity_gradient(state.v, grid)
    D = 0.5 * (L + np.swapaxes(L, 0, 1))
    mu = chemical_potential(prev, params)
    diss = (
        cst.viscosity_sigma(c0, params) * np.trace(L) ** 2
        + 2.0 * cst.viscosity_nu(c0, params) * np.sum(D * D, axis=(0, 1))
        + fd.flux_dissipation(cst.mobility(c0, params), mu, grid, MOBILITY_MEAN)
    )
    u = theta_l + np.sum(state.q**2, axis=0) / params.kappa0

    eta_rate = rho * (params.C * dlog - dG) / dt
    # rho C (theta1 - theta0) / theta_l == rho C dlog
    heat_over_theta = rho * params.C * dlog / dt - (diss + rho * u * dG / dt) / theta_l
    flux_term = np.sum(state.q * fd.gradient(prev.theta, grid), axis=0) / prev.theta**2
    classical = grid.integrate(eta_rate - heat_over_theta - flux_term)

    stored1 = cst.heat_flux_energy(c1, state.q, params) / state.theta
    stored0 = cst.heat_flux_energy(c0, prev.q, params) / prev.theta
    extended = classical - grid.integrate(stored1 - stored0) / dt
    return extended, classical


def record(state: State, params: MaterialParams, prev_state: State | None = None) -> DiagnosticsRecord:
    """Diagnostics of ``state``; rate entries need ``prev_state``."""
    grid = state.grid
    if prev_state is not None and prev_state.grid != grid:
        raise ValueError("prev_state lives on a different grid")
    rho = cst.density(state.c, params)
    mass = grid.integrate(rho * state.c)
    scale = grid.integrate(rho * np.abs(state.c))
    ke = kinetic_energy(state, params)
    ie = internal_energy(state, params)
    lyap = lyapunov_functional(state, params)
    rec = DiagnosticsRecord(
        t=float(state.t),
        total_mass=mass,
        c_min=float(np.min(state.c)),
        c_max=float(np.max(state.c)),
        kinetic_energy=ke,
        internal_energy=ie,
        free_energy=free_energy(state, params),
        lyapunov=lyap,
        constraint_residual=_constraint_residual(state, prev_state or state, params),
        assumption_violation_fraction=_assumption_violation(state, params),
        mass_scale=scale,
    )
    if prev_state is None:
        return rec

    prev = prev_state
    dt = state.t - prev.t
    rho0 = cst.density(prev.c, params)
    mass0 = grid.integrate(rho0 * prev.c)
    rec.mass_change = (mass - mass0) / max(scale, _TINY)
    lyap0 = lyapunov_functional(prev, params)
    rec.lyapunov_change = (lyap - lyap0) / max(abs(lyap0), _TINY)
    rec.entropy_production, rec.entropy_production_classical = entropy_production(state, prev, params)
    power = grid.integrate(rho0 * np.sum(prev.b * state.v, axis=0)) + grid.integrate(rho0 * prev.r)
    energy_rate = (ke + ie - kinetic_energy(prev, params) - internal_energy(prev, params)) / dt
    rec.energy_residual = energy_rate - power
    return rec


# -- thresholds ------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdPolicy:
    mass_drift: float = 1e-11
    c_overshoot: float = 1e-3
    entropy_floor: float = -1e-9
    lyapunov_tol: float = 1e-10
    check_lyapunov: bool = False


@dataclass(frozen=True)
class Violation:
    name: str
    t: float
    value: float
    limit: float

    def __str__(self):
        return f"{self.name} at t={self.t:.6g}: {self.value:.6g} (limit {self.limit:.3g})"


def check_thresholds(rec: DiagnosticsRecord, policy: ThresholdPolicy = ThresholdPolicy()) -> list[Violation]:
    """Named violations of ``policy``; an empty list certifies the step."""
    out = []
    if rec.mass_change is not None and abs(rec.mass_change) > policy.mass_drift:
        out.append(Violation("mass", rec.t, rec.mass_change, policy.mass_drift))
    if rec.c_min < -1.0 - policy.c_overshoot:
        out.append(Violation("c-range", rec.t, rec.c_min, -1.0 - policy.c_overshoot))
    if rec.c_max > 1.0 + policy.c_overshoot:
        out.append(Violation("c-range", rec.t, rec.c_max, 1.0 + policy.c_overshoot))
    if rec.entropy_production is not None and rec.entropy_production < policy.entropy_floor:
        out.append(Violation("second-law", rec.t, rec.entropy_production, policy.entropy_floor))
    if policy.check_lyapunov and rec.lyapunov_change is not None and rec.lyapunov_change > policy.lyapunov_tol:
        out.append(Violation("lyapunov", rec.t, rec.lyapunov_change, policy.lyapunov_tol))
    return out
