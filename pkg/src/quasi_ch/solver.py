"""Operator-split time integration of the velocity / concentration /
temperature / heat-flux system.

One step applies, in order: chemical potential, concentration update,
momentum update (per coupling mode), Cattaneo heat-flux relaxation and the
explicit temperature update.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import constitutive as cst
from . import fields as fd
from .constitutive import InvalidStateError, MaterialParams
from .fields import Grid

logger = logging.getLogger(__name__)

COUPLING_MODES = ("zero_velocity", "constitutive_pressure", "constrained_divergence")
ADVECTION_SCHEMES = ("upwind", "centered")
SOLVE_TOL = 1e-10
MAX_HALVINGS = 5
# Face mobility.  The geometric mean is zero next to a pure cell, so no flux
# can push c past +-1 there.
MOBILITY_MEAN = "geometric"


class StepFailure(RuntimeError):
    """A time step could not be completed; retrying with smaller dt may help."""

    def __init__(self, message, field=None, step=None):
        self.field = field
        self.step = step
        where = []
        if step is not None:
            where.append(f"step {step}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass
class State:
    """Discrete fields at time ``t`` on one grid.

    ``v``, ``q`` and ``b`` are vector fields, ``c``, ``theta`` and ``r``
    scalar fields (see :mod:`quasi_ch.fields` for the array layout).
    """

    grid: Grid
    t: float
    v: np.ndarray
    c: np.ndarray
    theta: np.ndarray
    q: np.ndarray
    b: np.ndarray = None
    r: np.ndarray = None

    def __post_init__(self):
        g = self.grid
        if self.b is None:
            self.b = g.vector()
        if self.r is None:
            self.r = g.scalar()
        self.v = fd.check_vector(g, self.v, "v")
        self.q = fd.check_vector(g, self.q, "q")
        self.b = fd.check_vector(g, self.b, "b")
        self.c = fd.check_scalar(g, self.c, "c")
        self.theta = fd.check_scalar(g, self.theta, "theta")
        self.r = fd.check_scalar(g, self.r, "r")
        if np.any(self.theta <= 0):
            raise InvalidStateError("theta must be > 0 everywhere")

    @classmethod
    def uniform(cls, grid: Grid, c=0.0, theta=1.0, t=0.0) -> "State":
        return cls(grid, t, grid.vector(), grid.scalar(c), grid.scalar(theta), grid.vector())

    def copy(self, **changes) -> "State":
        arrays = {k: np.array(getattr(self, k)) for k in ("v", "c", "theta", "q", "b", "r")}
        arrays.update(changes)
        return replace(self, **arrays)


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1.0e-5
    t_end: float = 0.02
    coupling_mode: str = "constitutive_pressure"
    advection_scheme: str = "upwind"
    ch_stabilization: float = 1.0
    snapshot_every: int = 0
    rng_seed: int = 0
    isothermal: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError("dt must be > 0")
        if not (self.t_end >= 0 and np.isfinite(self.t_end)):
            raise ValueError("t_end must be >= 0")
        if not self.ch_stabilization >= 0:
            raise ValueError("ch_stabilization must be >= 0")
        if self.coupling_mode not in COUPLING_MODES:
            raise ValueError(f"coupling_mode must be one of {', '.join(COUPLING_MODES)}")
        if self.advection_scheme not in ADVECTION_SCHEMES:
            raise ValueError(f"advection_scheme must be one of {', '.join(ADVECTION_SCHEMES)}")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")


@dataclass
class StepReport:
    dt_used: float
    max_dc: float
    cfl_advection: float
    cfl_conduction: float
    cfl_cahn_hilliard: float
    halvings: int = 0
    flags: list = field(default_factory=list)


# -- sub-steps -------------------------------------------------------------------


def chemical_potential(state: State, params: MaterialParams) -> np.ndarray:
    """``mu = -(gamma/rho) div(rho grad c) + theta0 F'(c) + u G'(c)``."""
    grid, c = state.grid, state.c
    if np.any(state.theta <= 0):
        raise InvalidStateError("theta must be > 0 everywhere")
    rho = cst.density(c, params)
    u = cst.generalized_temperature(state.theta, state.q, params)
    return (
        -params.gamma / rho * fd.divergence_flux(rho, c, grid)
        + params.theta0 * cst.double_well_F_prime(c)
        + u * cst.coupling_G_prime(c)
    )


def _moving(state, config):
    return config.coupling_mode != "zero_velocity" and np.any(state.v != 0)


def concentration_update(state: State, params: MaterialParams, config: SolverConfig, mu=None):
    """Return ``(c_new, mu_eff)`` for one concentration step.

    The order-parameter mass ``m = rho(c) c`` is advanced by face fluxes
    ``M(c) grad mu_eff``, so its domain integral changes only by roundoff.
    ``mu_eff = mu - A gamma laplacian(c_new - c)`` carries the implicit
    stabilisation; the linear system uses ``dm/dc`` frozen at the old state.
    """
    grid, c, dt = state.grid, state.c, config.dt
    if mu is None:
        mu = chemical_potential(state, params)
    mob = cst.mobility(c, params)
    m = cst.order_parameter_mass(c, params)
    transport = 0.0
    if _moving(state, config):
        transport = fd.conservative_transport(m, state.v, grid, config.advection_scheme)

    shift = config.ch_stabilization * params.gamma
    mu_eff = mu
    if shift > 0 and np.any(mob > 0):
        K = fd.flux_matrix(mob, grid, MOBILITY_MEAN)
        L = fd.laplacian_matrix(grid)
        weight = cst.order_parameter_mass_derivative(c, params).ravel() / dt
        A = (sp.diags(weight) + shift * (K @ L)).tocsc()
        rhs = (fd.divergence_flux(mob, mu, grid, MOBILITY_MEAN) - transport).ravel()
        dc = spla.spsolve(A, rhs)
        resid = np.linalg.norm(A @ dc - rhs)
        if not np.all(np.isfinite(dc)) or resid > SOLVE_TOL * max(np.linalg.norm(rhs), 1e-300):
            raise StepFailure("implicit Cahn-Hilliard solve did not converge", field="c")
        mu_eff = mu - shift * (L @ dc).reshape(grid.shape)
    dm = dt * (fd.divergence_flux(mob, mu_eff, grid, MOBILITY_MEAN) - transport)
    # cells with no net flux keep their value bit for bit
    c_new = np.where(dm == 0.0, c, cst.concentration_from_mass(m + dm, params))
    if not np.all(np.isfinite(c_new)):
        raise StepFailure("non-finite concentration", field="c")
    return c_new, mu_eff


def step_concentration(state: State, params: MaterialParams, config: SolverConfig, mu=None) -> np.ndarray:
    """Concentration at ``t + dt``; see :func:`concentration_update`."""
    return concentration_update(state, params, config, mu)[0]


def stress_divergence(state: State, params: MaterialParams, include_pressure=True) -> np.ndarray:
    """Divergence of the full stress plus body force, per unit volume."""
    grid, c, v = state.grid, state.c, state.v
    rho = cst.density(c, params)
    gc = fd.gradient(c, grid)
    capillary = -params.gamma * rho * gc[:, None] * gc[None, :]
    L = fd.velocity_gradient(v, grid)
    D = 0.5 * (L + np.swapaxes(L, 0, 1))
    div_v = np.trace(L)
    viscous = 2.0 * cst.viscosity_nu(c, params) * D
    bulk = cst.viscosity_sigma(c, params) * div_v
    for i in range(grid.dim):
        viscous[i, i] += bulk
    force = fd.tensor_divergence(capillary + viscous, grid) + rho * state.b
    if include_pressure:
        force -= fd.gradient(cst.pressure(c, params), grid)
    return force


@lru_cache(maxsize=8)
def _projection_solver(grid: Grid):
    D = fd.divergence_matrix(grid)
    A = (D @ D.T).tocsc()[1:, 1:]
    return D, spla.splu(A.tocsc())


def project_velocity(v, target_div, grid: Grid) -> np.ndarray:
    """Return ``v - D^T phi`` whose discrete divergence equals ``target_div``.

    ``D`` is the matrix of :func:`quasi_ch.fields.divergence`.  The Gram
    system ``D D^T phi = div v - target`` is singular only on constants,
    removed by pinning ``phi[0] = 0``; the right side must integrate to 0.
    """
    D, lu = _projection_solver(grid)
    flat = v.reshape(grid.dim, -1).ravel()
    rhs = D @ flat - target_div.ravel()
    phi = np.zeros(grid.size)
    phi[1:] = lu.solve(rhs[1:])
    out = flat - D.T @ phi
    resid = np.linalg.norm(D @ out - target_div.ravel())
    if not np.isfinite(resid) or resid > SOLVE_TOL * max(np.linalg.norm(target_div), np.linalg.norm(rhs), 1.0):
        raise StepFailure("velocity projection did not converge", field="v")
    return out.reshape(v.shape)


def step_momentum(state: State, params: MaterialParams, config: SolverConfig, mu=None) -> np.ndarray:
    """Explicit momentum update; projected in ``constrained_divergence`` mode."""
    grid = state.grid
    if config.coupling_mode == "zero_velocity":
        return grid.vector()
    constrained = config.coupling_mode == "constrained_divergence"
    rho = cst.density(state.c, params)
    if np.any(rho <= 0):
        raise InvalidStateError("density must be > 0")
    force = stress_divergence(state, params, include_pressure=not constrained)
    accel = force / rho - fd.advect_vector(state.v, state.v, grid, config.advection_scheme)
    v_new = state.v + config.dt * accel
    if constrained:
        if mu is None:
            mu = chemical_potential(state, params)
        flux_div = fd.divergence_flux(cst.mobility(state.c, params), mu, grid, MOBILITY_MEAN)
        v_new = project_velocity(v_new, cst.specific_volume_slope(params) * flux_div, grid)
    if not np.all(np.isfinite(v_new)):
        raise StepFailure("non-finite velocity", field="v")
    return v_new


def step_heat_flux(state: State, params: MaterialParams, config: SolverConfig) -> np.ndarray:
    """Pointwise implicit Cattaneo relaxation ``-2(delta+G) q' = q + kappa grad theta``."""
    grid, dt = state.grid, config.dt
    kappa = cst.thermal_conductivity(state.theta, params)
    tau = 2.0 * (params.delta + cst.coupling_G(state.c)) / dt
    q_old = state.q
    if _moving(state, config):
        q_old = q_old - dt * fd.advect_vector(state.q, state.v, grid, config.advection_scheme)
    return (tau * q_old - kappa * fd.gradient(state.theta, grid)) / (tau + 1.0)


def heat_sources(state: State, params: MaterialParams, config: SolverConfig, c_new, q_new, v_new, mu=None):
    """Right-hand side of ``rho C theta' = ...`` split by term.

    Returns a dict with keys ``viscous``, ``coupling``, ``chemical``,
    ``conduction`` and ``supply``; all are per-cell power densities.  ``mu``
    should be the potential whose flux actually moved ``c`` (the ``mu_eff``
    of :func:`concentration_update`).
    """
    grid, c, dt = state.grid, state.c, config.dt
    if mu is None:
        mu = chemical_potential(state, params)
    rho = cst.density(c, params)
    L = fd.velocity_gradient(v_new, grid)
    D = 0.5 * (L + np.swapaxes(L, 0, 1))
    div_v = np.trace(L)
    viscous = cst.viscosity_sigma(c, params) * div_v**2 + 2.0 * cst.viscosity_nu(c, params) * np.sum(
        D * D, axis=(0, 1)
    )
    c_dot = (c_new - c) / dt
    if _moving(state, config):
        c_dot = c_dot + fd.advect(c, state.v, grid, config.advection_scheme)
    u = cst.generalized_temperature(state.theta, state.q, params)
    return {
        "viscous": viscous,
        "coupling": rho * u * cst.coupling_G_prime(c) * c_dot,
        "chemical": fd.flux_dissipation(cst.mobility(c, params), mu, grid, MOBILITY_MEAN),
        "conduction": -fd.divergence(q_new, grid),
        "supply": rho * state.r,
    }


def step_temperature(
    state: State, params: MaterialParams, config: SolverConfig, c_new=None, q_new=None, v_new=None, mu=None
) -> np.ndarray:
    """Explicit temperature update with conduction entering through ``-div q``."""
    grid, dt = state.grid, config.dt
    c_new = state.c if c_new is None else c_new
    q_new = state.q if q_new is None else q_new
    v_new = state.v if v_new is None else v_new
    src = heat_sources(state, params, config, c_new, q_new, v_new, mu)
    rho_C = cst.density(state.c, params) * params.C
    theta_dot = sum(src.values()) / rho_C
    if _moving(state, config):
        theta_dot = theta_dot - fd.advect(state.theta, state.v, grid, config.advection_scheme)
    theta_new = state.theta + dt * theta_dot
    if not np.all(np.isfinite(theta_new)) or np.any(theta_new <= 0):
        raise StepFailure("temperature became non-positive", field="theta")
    return theta_new


# -- composition -----------------------------------------------------------------


def cfl_numbers(state: State, params: MaterialParams, dt: float) -> tuple[float, float, float]:
    """Advection, conduction and Cahn-Hilliard stability numbers."""
    grid = state.grid
    h = min(grid.h)
    rho = cst.density(state.c, params)
    speed = float(np.max(np.abs(state.v))) if state.v.size else 0.0
    diffusivity = cst.thermal_conductivity(state.theta, params) / (rho * params.C)
    return (
        dt * speed / h,
        dt * float(np.max(diffusivity)) / h**2,
        dt * float(np.max(cst.mobility(state.c, params))) * params.gamma * float(np.max(1.0 / rho)) / h**4,
    )


def step(state: State, params: MaterialParams, config: SolverConfig) -> tuple[State, StepReport]:
    """Advance one step of size ``config.dt``."""
    try:
        mu = chemical_potential(state, params)
    except InvalidStateError as exc:
        raise StepFailure(str(exc), field="theta") from exc
    c_new, mu_eff = concentration_update(state, params, config, mu)
    v_new = step_momentum(state, params, config, mu)
    if config.isothermal:
        q_new, theta_new = state.q.copy(), state.theta.copy()
    else:
        q_new = step_heat_flux(state, params, config)
        theta_new = step_temperature(state, params, config, c_new, q_new, v_new, mu_eff)
    new = State(state.grid, state.t + config.dt, v_new, c_new, theta_new, q_new, state.b.copy(), state.r.copy())
    cfl = cfl_numbers(state, params, config.dt)
    report = StepReport(config.dt, float(np.max(np.abs(c_new - state.c))), *cfl)
    report.flags = _stability_flags(cfl, config)
    return new, report


def _stability_flags(cfl, config: SolverConfig) -> list[str]:
    # explicit-part limits; the stabilised CH step only matters when A == 0
    adv, cond, ch = cfl
    flags = []
    if config.coupling_mode != "zero_velocity" and adv > 1.0:
        flags.append("advection")
    if not config.isothermal and cond > 0.5:
        flags.append("conduction")
    if config.ch_stabilization == 0 and ch > 1.0 / 32.0:
        flags.append("cahn_hilliard")
    return flags


def run(initial: State, params: MaterialParams, config: SolverConfig, sinks=()) -> State:
    """Integrate from ``initial`` to ``config.t_end``.

    Each sink is called as ``sink(step_index, state, record, report)``;
    index 0 carries the initial state with ``report=None``.  A failing step
    is retried with half the time step, at most :data:`MAX_HALVINGS` times
    over the run; the reduced step is kept afterwards.
    """
    from .diagnostics import record as make_record

    state = initial
    rec = make_record(state, params, None)
    for sink in sinks:
        sink(0, state, rec, None)

    dt = config.dt
    halvings = 0
    index = 0
    t_stop = initial.t + config.t_end
    tol = 1e-9 * dt
    while t_stop - state.t > tol:
        index += 1
        while True:
            dt_step = min(dt, t_stop - state.t)
            cfg = replace(config, dt=dt_step)
            try:
                new, report = step(state, params, cfg)
                break
            except (StepFailure, InvalidStateError) as exc:
                if halvings >= MAX_HALVINGS:
                    name = getattr(exc, "field", None)
                    raise StepFailure(f"giving up after {halvings} dt halvings: {exc}", name, index) from exc
                halvings += 1
                dt *= 0.5
                logger.warning("step %d failed (%s); retrying with dt=%g", index, exc, dt)
        if abs(t_stop - new.t) <= tol:
            new.t = t_stop
        report.halvings = halvings
        rec = make_record(new, params, state)
        for sink in sinks:
            sink(index, new, rec, report)
        state = new
    return state
