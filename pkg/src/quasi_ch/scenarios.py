"""Initial-state presets."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .config import RunConfig
from .rng import SplitMix64
from .solver import State


def scenario_grid(cfg: RunConfig):
    spec = cfg.grid
    if cfg.scenario.name == "spinodal_2d" and not spec.ny:
        spec = replace(spec, ny=spec.nx)
    return spec.build()


def build_scenario(cfg: RunConfig) -> State:
    """Initial state for ``cfg.scenario``."""
    s, params = cfg.scenario, cfg.material
    grid = scenario_grid(cfg)
    x = grid.mesh()
    zero_v = grid.vector()

    if s.name in ("spinodal_1d", "spinodal_2d"):
        noise = SplitMix64(cfg.solver.rng_seed).symmetric(grid.size, s.amplitude)
        c = noise.reshape(grid.shape)
        theta = grid.scalar(s.u_target)
        return State(grid, 0.0, zero_v, c, theta, grid.vector())

    if s.name == "heat_pulse":
        centre = [0.5 * L for L in grid.length]
        r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, centre))
        theta = s.theta_bar + s.pulse_amplitude * np.exp(-r2 / (2.0 * s.pulse_width**2))
        return State(grid, 0.0, zero_v, grid.scalar(s.c_uniform), theta, grid.vector())

    if s.name == "flux_induced_mixing":
        lx = grid.length[0]
        c = np.tanh((x[0] - 0.5 * lx) / s.interface_width)
        band = (x[0] >= s.band_lo * lx) & (x[0] <= s.band_hi * lx)
        q = grid.vector()
        q[0] = np.where(band, s.q_magnitude, 0.0)
        return State(grid, 0.0, zero_v, c, grid.scalar(s.theta_bar), q)

    raise ValueError(f"unknown scenario {s.name!r}")


def generalized_temperature_field(state: State, params) -> np.ndarray:
    return state.theta + np.sum(state.q**2, axis=0) / params.kappa0
