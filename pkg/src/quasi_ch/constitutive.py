"""Pointwise material laws for the quasi-incompressible binary mixture.

Every function here is pure and vectorised: scalar or ndarray inputs are
accepted and the result has the broadcast shape.  Concentration ``c`` is the
order parameter ``(rho_1 - rho_2) / rho``; ``c = +1`` is pure fluid 1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np


class InvalidStateError(ValueError):
    """Raised when a state violates a physical admissibility condition."""


@dataclass(frozen=True)
class MaterialParams:
    """Constitutive constants of the mixture.

    Parameters
    ----------
    rho10, rho20 : float
        Intrinsic mass densities of pure fluids 1 and 2.
    gamma : float
        Capillarity coefficient; sets the interface thickness.
    theta0 : float
        Reference temperature in the double-well term.
    kappa0 : float
        Conduction constant, ``kappa(theta) = kappa0 / theta``.
    delta : float
        Heat-flux relaxation constant.
    M0 : float
        Mobility scale.
    nu1, nu2, sigma1, sigma2 : float
        Shear and bulk viscosities of the pure fluids.
    C : float
        Specific heat, internal energy ``e0 = C * theta``.
    p0 : float
        Barotropic pressure constant, ``p = p0 * rho``.
    """

    rho10: float = 1.0
    rho20: float = 0.5
    gamma: float = 1.0e-3
    theta0: float = 1.0
    kappa0: float = 1.0
    delta: float = 0.05
    M0: float = 1.0
    nu1: float = 0.01
    nu2: float = 0.01
    sigma1: float = 0.0
    sigma2: float = 0.0
    C: float = 10.0
    p0: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value):
                raise ValueError(f"{f.name} must be finite")
        positive = ("rho10", "rho20", "theta0", "kappa0", "delta", "C")
        nonnegative = ("gamma", "M0", "nu1", "nu2", "sigma1", "sigma2")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in nonnegative:
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")

    def replace(self, **changes) -> "MaterialParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


def _clamp(c):
    return np.clip(c, -1.0, 1.0)


def _require_positive_temperature(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(~(theta > 0)):
        raise InvalidStateError("absolute temperature must be > 0")
    return theta


# -- density -----------------------------------------------------------------


def density(c, params: MaterialParams):
    """Mixture density ``rho(c)``, extended as a constant outside ``[-1, 1]``."""
    a, b = params.rho10, params.rho20
    return 2.0 * a * b / ((a + b) - _clamp(c) * (a - b))


def density_derivative(c, params: MaterialParams):
    """``d rho / d c``; zero outside ``[-1, 1]`` where the density is flat."""
    a, b = params.rho10, params.rho20
    c = np.asarray(c, dtype=float)
    denom = (a + b) - _clamp(c) * (a - b)
    out = 2.0 * a * b * (a - b) / denom**2
    return np.where(np.abs(c) > 1.0, 0.0, out)


def specific_volume_slope(params: MaterialParams) -> float:
    """Constant ``d(1/rho)/dc = -rho_c / rho**2`` on ``[-1, 1]``."""
    return 0.5 / params.rho10 - 0.5 / params.rho20


def order_parameter_mass(c, params: MaterialParams):
    """Order-parameter mass per unit volume, ``m = rho(c) * c``.

    ``m`` is strictly increasing in ``c`` so :func:`concentration_from_mass`
    inverts it exactly.
    """
    return density(c, params) * np.asarray(c, dtype=float)


def order_parameter_mass_derivative(c, params: MaterialParams):
    """``dm/dc = rho + c * rho_c`` (equals ``rho`` outside ``[-1, 1]``)."""
    return density(c, params) + np.asarray(c, dtype=float) * density_derivative(c, params)


def concentration_from_mass(m, params: MaterialParams):
    """Inverse of :func:`order_parameter_mass`."""
    a, b = params.rho10, params.rho20
    m = np.asarray(m, dtype=float)
    inner = m * (a + b) / (2.0 * a * b + m * (a - b))
    return np.where(m > a, m / a, np.where(m < -b, m / b, inner))


# -- double well and coupling --------------------------------------------------


def double_well_F(c):
    c = np.asarray(c, dtype=float)
    return (c * c - 1.0) ** 2


def double_well_F_prime(c):
    c = np.asarray(c, dtype=float)
    return 4.0 * c * (c * c - 1.0)


def coupling_G(c):
    """``c**2 / 2`` inside ``[-1, 1]`` and the plateau value ``1/2`` outside."""
    c = np.asarray(c, dtype=float)
    return np.where(np.abs(c) <= 1.0, 0.5 * c * c, 0.5)


def coupling_G_prime(c):
    # |c| == 1 takes the interior limit +-1
    c = np.asarray(c, dtype=float)
    return np.where(np.abs(c) <= 1.0, c, 0.0)


def mobility(c, params: MaterialParams):
    """Degenerate mobility ``M0 (c**2 - 1)**2`` on the clamped concentration."""
    return params.M0 * double_well_F(_clamp(c))


def thermal_conductivity(theta, params: MaterialParams):
    theta = _require_positive_temperature(theta)
    return params.kappa0 / theta


def viscosity_nu(c, params: MaterialParams):
    c = _clamp(c)
    return 0.5 * params.nu1 * (1.0 + c) + 0.5 * params.nu2 * (1.0 - c)


def viscosity_sigma(c, params: MaterialParams):
    c = _clamp(c)
    return 0.5 * params.sigma1 * (1.0 + c) + 0.5 * params.sigma2 * (1.0 - c)


# -- pressure ------------------------------------------------------------------


def pressure(c, params: MaterialParams):
    """Barotropic pressure ``p = p0 * rho(c)``."""
    return params.p0 * density(c, params)


def pressure_potential_from_density(rho, params: MaterialParams):
    """``P(rho) = p0 ln(rho)``, so that ``rho**2 dP/drho = p``."""
    return params.p0 * np.log(rho)


def pressure_potential_P(c, params: MaterialParams):
    return pressure_potential_from_density(density(c, params), params)


# -- energies ----------------------------------------------------------------


def _sq_norm(v):
    """Squared Euclidean norm over the leading (component) axis."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return v * v
    return np.sum(v * v, axis=0)


def generalized_temperature(theta, q, params: MaterialParams):
    """``u = theta + |q|**2 / kappa0``."""
    return np.asarray(theta, dtype=float) + _sq_norm(q) / params.kappa0


def psi0(theta, params: MaterialParams):
    theta = _require_positive_temperature(theta)
    return params.C * theta * (1.0 - np.log(theta))


def free_energy_density(theta, c, grad_c, q, params: MaterialParams):
    """Helmholtz free energy per unit mass.

    Vector arguments carry their components on axis 0; a scalar is treated
    as a one-component vector.
    """
    theta = _require_positive_temperature(theta)
    q2 = _sq_norm(q)
    return (
        params.theta0 * double_well_F(c)
        + (theta + q2 / params.kappa0) * coupling_G(c)
        + 0.5 * params.gamma * _sq_norm(grad_c)
        + pressure_potential_P(c, params)
        + params.delta / params.kappa0 * q2
        + psi0(theta, params)
    )


def entropy_density(theta, c, params: MaterialParams):
    """Entropy per unit mass, ``-d psi / d theta = C ln(theta) - G(c)``."""
    theta = _require_positive_temperature(theta)
    return params.C * np.log(theta) - coupling_G(c)


def heat_flux_energy(c, q, params: MaterialParams):
    """Stored heat-flux energy ``(delta + G(c)) |q|**2 / kappa0``."""
    return (params.delta + coupling_G(c)) * _sq_norm(q) / params.kappa0


def internal_energy_density(theta, c, grad_c, params: MaterialParams, q=None):
    """Internal energy per unit mass.

    Without ``q`` this is ``C theta + theta0 F + gamma/2 |grad c|**2 + P``.
    Passing ``q`` adds :func:`heat_flux_energy`, which is what makes
    ``psi = e - theta * eta`` hold for states carrying a heat flux.
    """
    theta = _require_positive_temperature(theta)
    e = (
        params.C * theta
        + params.theta0 * double_well_F(c)
        + 0.5 * params.gamma * _sq_norm(grad_c)
        + pressure_potential_P(c, params)
    )
    if q is not None:
        e = e + heat_flux_energy(c, q, params)
    return e


# -- miscibility gap -----------------------------------------------------------


def well_potential(c, u, params: MaterialParams):
    """``W(c; u) = theta0 F(c) + u G(c)``."""
    return params.theta0 * double_well_F(c) + u * coupling_G(c)


def well_minima(u, params: MaterialParams) -> tuple[float, ...]:
    """Minimisers of ``W(.; u)``: ``(0,)`` above ``4 theta0``, else ``(-c+, c+)``."""
    if u < 0:
        raise ValueError("generalized temperature u must be >= 0")
    threshold = 4.0 * params.theta0
    if u >= threshold:
        return (0.0,)
    cp = float(np.sqrt(1.0 - u / threshold))
    return (-cp, cp)
