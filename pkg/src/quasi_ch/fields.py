"""Uniform cell-centred grids and finite-difference operators.

Scalar fields are arrays of shape ``grid.shape``; vector fields carry the
component on a leading axis, shape ``(grid.dim, *grid.shape)``.  Axis ``k``
of a scalar array is the ``k``-th spatial direction.

Boundaries use ghost cells.  ``EVEN`` ghosts mirror the adjacent interior
value (homogeneous Neumann); ``ODD`` ghosts mirror it with a sign flip, so
the field vanishes on the boundary face (no-slip / zero normal flux).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

EVEN = 1.0
ODD = -1.0


@dataclass(frozen=True)
class Grid:
    """Uniform 1D or 2D structured grid of ``n`` cells per axis."""

    n: tuple[int, ...]
    h: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(k) for k in self.n))
        object.__setattr__(self, "h", tuple(float(k) for k in self.h))
        if len(self.n) not in (1, 2) or len(self.h) != len(self.n):
            raise ValueError("grid must be 1D or 2D with one spacing per axis")
        if any(k < 8 for k in self.n):
            raise ValueError("grid needs at least 8 cells per axis")
        if any(not (k > 0 and np.isfinite(k)) for k in self.h):
            raise ValueError("grid spacing must be > 0")

    @classmethod
    def uniform(cls, n, length=1.0) -> "Grid":
        """Grid with ``n`` cells (int or tuple) over ``length`` per axis."""
        n = (n,) if np.ndim(n) == 0 else tuple(n)
        length = (length,) * len(n) if np.ndim(length) == 0 else tuple(length)
        return cls(n, tuple(L / k for L, k in zip(length, n)))

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def length(self) -> tuple[float, ...]:
        return tuple(k * d for k, d in zip(self.n, self.h))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    def centers(self) -> list[np.ndarray]:
        """Cell-centre coordinates per axis (1D arrays)."""
        return [(np.arange(k) + 0.5) * d for k, d in zip(self.n, self.h)]

    def mesh(self) -> list[np.ndarray]:
        """Cell-centre coordinates broadcast to ``shape``."""
        return np.meshgrid(*self.centers(), indexing="ij")

    def scalar(self, value=0.0) -> np.ndarray:
        return np.full(self.shape, value, dtype=float)

    def vector(self, value=0.0) -> np.ndarray:
        return np.full((self.dim, *self.shape), value, dtype=float)

    def integrate(self, f) -> float:
        """Midpoint quadrature: cell sum times cell volume."""
        return float(np.sum(f) * self.cell_volume)


def check_scalar(grid: Grid, f, name="field") -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"{name} has shape {f.shape}, expected {grid.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{name} contains non-finite values")
    return f


def check_vector(grid: Grid, u, name="field") -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.dim, *grid.shape):
        raise ValueError(f"{name} has shape {u.shape}, expected {(grid.dim, *grid.shape)}")
    if not np.all(np.isfinite(u)):
        raise ValueError(f"{name} contains non-finite values")
    return u


def _pad(f, axis, parity):
    lo = parity * np.take(f, [0], axis=axis)
    hi = parity * np.take(f, [-1], axis=axis)
    return np.concatenate([lo, f, hi], axis=axis)


def _shifted(fp, axis, offset, n):
    idx = [slice(None)] * fp.ndim
    idx[axis] = slice(1 + offset, 1 + offset + n)
    return fp[tuple(idx)]


def central_difference(f, grid: Grid, axis: int, parity=EVEN) -> np.ndarray:
    """Centred first derivative along ``axis`` with ghost cells of ``parity``."""
    n = f.shape[axis]
    fp = _pad(f, axis, parity)
    return (_shifted(fp, axis, 1, n) - _shifted(fp, axis, -1, n)) / (2.0 * grid.h[axis])


def gradient(f, grid: Grid, parity=EVEN) -> np.ndarray:
    """Gradient of a scalar field; Neumann (mirror) ghosts by default."""
    return np.stack([central_difference(f, grid, k, parity) for k in range(grid.dim)])


def divergence(u, grid: Grid) -> np.ndarray:
    """Divergence with zero normal component on boundary faces.

    Face values are averages of adjacent cells, so the cell sum telescopes
    to zero.  In the interior this is the centred difference.
    """
    return sum(central_difference(u[k], grid, k, ODD) for k in range(grid.dim))


def _face_flux_divergence(flux, grid, axis):
    # flux holds the n-1 interior face values along axis; boundary faces are 0
    pad = [(0, 0)] * flux.ndim
    pad[axis] = (1, 1)
    full = np.pad(flux, pad)
    n = grid.n[axis]
    idx_hi = [slice(None)] * flux.ndim
    idx_lo = [slice(None)] * flux.ndim
    idx_hi[axis] = slice(1, n + 1)
    idx_lo[axis] = slice(0, n)
    return (full[tuple(idx_hi)] - full[tuple(idx_lo)]) / grid.h[axis]


def _face_pairs(f, axis):
    n = f.shape[axis]
    return np.take(f, np.arange(n - 1), axis=axis), np.take(f, np.arange(1, n), axis=axis)


FACE_MEANS = ("arithmetic", "geometric")


def face_coefficient(a, grid: Grid, axis: int, mean="arithmetic") -> np.ndarray:
    """Values of ``a`` on the interior faces normal to ``axis``.

    ``geometric`` vanishes whenever either neighbour does, which keeps a
    degenerate coefficient from carrying flux into a cell where it is zero.
    """
    a = np.broadcast_to(np.asarray(a, dtype=float), grid.shape)
    a_lo, a_hi = _face_pairs(a, axis)
    if mean == "arithmetic":
        return 0.5 * (a_lo + a_hi)
    if mean == "geometric":
        return np.sqrt(np.maximum(a_lo, 0.0) * np.maximum(a_hi, 0.0))
    raise ValueError(f"unknown face mean {mean!r}; expected one of {FACE_MEANS}")


def divergence_flux(a, f, grid: Grid, mean="arithmetic") -> np.ndarray:
    """Conservative ``div(a grad f)`` with face-averaged ``a`` and zero-flux walls."""
    out = np.zeros(grid.shape)
    for k in range(grid.dim):
        f_lo, f_hi = _face_pairs(f, k)
        flux = face_coefficient(a, grid, k, mean) * (f_hi - f_lo) / grid.h[k]
        out += _face_flux_divergence(flux, grid, k)
    return out


def laplacian(f, grid: Grid) -> np.ndarray:
    return divergence_flux(1.0, f, grid)


def velocity_gradient(v, grid: Grid) -> np.ndarray:
    """``L[i, j] = d v_i / d x_j`` for a no-slip velocity (odd ghosts)."""
    return np.stack([gradient(v[i], grid, ODD) for i in range(grid.dim)])


def symmetric_gradient(v, grid: Grid) -> np.ndarray:
    """Independent entries of ``D = (grad v + grad v^T) / 2``.

    Returns ``(D_xx,)`` in 1D and ``(D_xx, D_yy, D_xy)`` in 2D.
    """
    L = velocity_gradient(v, grid)
    if grid.dim == 1:
        return L[0, 0][None]
    return np.stack([L[0, 0], L[1, 1], 0.5 * (L[0, 1] + L[1, 0])])


def full_symmetric_gradient(v, grid: Grid) -> np.ndarray:
    """``D`` as a ``(dim, dim, *shape)`` tensor."""
    L = velocity_gradient(v, grid)
    return 0.5 * (L + np.swapaxes(L, 0, 1))


def advect(f, v, grid: Grid, scheme="upwind", parity=EVEN) -> np.ndarray:
    """``v . grad f``; first-order upwind or centred differences."""
    out = np.zeros(grid.shape)
    for k in range(grid.dim):
        n = grid.n[k]
        if scheme == "centered":
            out += v[k] * central_difference(f, grid, k, parity)
            continue
        if scheme != "upwind":
            raise ValueError(f"unknown advection scheme {scheme!r}")
        fp = _pad(f, k, parity)
        back = (f - _shifted(fp, k, -1, n)) / grid.h[k]
        fwd = (_shifted(fp, k, 1, n) - f) / grid.h[k]
        out += np.where(v[k] > 0, v[k] * back, v[k] * fwd)
    return out


def advect_vector(u, v, grid: Grid, scheme="upwind", parity=ODD) -> np.ndarray:
    return np.stack([advect(u[i], v, grid, scheme, parity) for i in range(grid.dim)])


def conservative_transport(m, v, grid: Grid, scheme="upwind") -> np.ndarray:
    """``div(m v)`` with face velocities averaged and zero on the walls."""
    out = np.zeros(grid.shape)
    for k in range(grid.dim):
        m_lo, m_hi = _face_pairs(m, k)
        v_lo, v_hi = _face_pairs(v[k], k)
        vf = 0.5 * (v_lo + v_hi)
        if scheme == "upwind":
            mf = np.where(vf > 0, m_lo, m_hi)
        elif scheme == "centered":
            mf = 0.5 * (m_lo + m_hi)
        else:
            raise ValueError(f"unknown advection scheme {scheme!r}")
        out += _face_flux_divergence(vf * mf, grid, k)
    return out


def tensor_divergence(T, grid: Grid) -> np.ndarray:
    """Row-wise divergence ``(div T)_i = d_j T_ij`` with mirror ghosts."""
    return np.stack(
        [sum(central_difference(T[i, j], grid, j, EVEN) for j in range(grid.dim)) for i in range(grid.dim)]
    )


# -- sparse operators ----------------------------------------------------------


def _neumann_1d(n, h):
    main = np.full(n, -2.0)
    main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)


def _divergence_1d(n, h):
    # odd ghosts: row 0 is (v1 + v0) / 2h, row n-1 is -(v_{n-2} + v_{n-1}) / 2h
    off = np.ones(n - 1)
    D = sp.diags([-off, off], [-1, 1], format="lil")
    D[0, 0] = 1.0
    D[n - 1, n - 1] = -1.0
    return D.tocsr() / (2.0 * h)


def _kron_axis(op, grid, axis):
    mats = [sp.identity(k, format="csr") for k in grid.n]
    mats[axis] = op
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out


@lru_cache(maxsize=16)
def laplacian_matrix(grid: Grid) -> sp.csr_matrix:
    """Sparse matrix of :func:`laplacian` acting on C-ordered flattened fields."""
    return sum(_kron_axis(_neumann_1d(grid.n[k], grid.h[k]), grid, k) for k in range(grid.dim)).tocsr()


@lru_cache(maxsize=16)
def divergence_matrix(grid: Grid) -> sp.csr_matrix:
    """Sparse :func:`divergence` acting on the stacked, flattened components."""
    blocks = [_kron_axis(_divergence_1d(grid.n[k], grid.h[k]), grid, k) for k in range(grid.dim)]
    return sp.hstack(blocks, format="csr")


def flux_dissipation(a, f, grid: Grid, mean="arithmetic") -> np.ndarray:
    """Per-cell ``a |grad f|**2`` assembled from face differences.

    Each face contributes ``a_face (df/h)**2`` split evenly between its two
    cells, so ``integrate(flux_dissipation(a, f)) == -integrate(f *
    divergence_flux(a, f))`` to roundoff.  Non-negative when ``a >= 0``.
    """
    out = np.zeros(grid.shape)
    for k in range(grid.dim):
        f_lo, f_hi = _face_pairs(f, k)
        w = face_coefficient(a, grid, k, mean) * ((f_hi - f_lo) / grid.h[k]) ** 2
        pad = [(0, 0)] * w.ndim
        pad[k] = (1, 1)
        full = np.pad(w, pad)
        n = grid.n[k]
        lo = [slice(None)] * w.ndim
        hi = [slice(None)] * w.ndim
        lo[k] = slice(0, n)
        hi[k] = slice(1, n + 1)
        out += 0.5 * (full[tuple(lo)] + full[tuple(hi)])
    return out


@lru_cache(maxsize=16)
def _face_differences(grid: Grid):
    """Per axis, the interior face-difference matrix (faces x cells, scaled by 1/h)."""
    ops = []
    for k in range(grid.dim):
        n, h = grid.n[k], grid.h[k]
        ones = np.ones(n - 1)
        diff = sp.diags([-ones, ones], [0, 1], shape=(n - 1, n), format="csr") / h
        ops.append(_kron_axis(diff, grid, k))
    return ops


def flux_matrix(a, grid: Grid, mean="arithmetic") -> sp.csr_matrix:
    """Sparse matrix of ``f -> divergence_flux(a, f, mean=mean)`` for fixed ``a``."""
    out = sp.csr_matrix((grid.size, grid.size))
    for k, G in enumerate(_face_differences(grid)):
        out = out - G.T @ sp.diags(face_coefficient(a, grid, k, mean).ravel()) @ G
    return out.tocsr()
