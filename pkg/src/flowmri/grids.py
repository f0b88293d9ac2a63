"""Discrete differential operators and energies on 2D pixel grids.

All fields are plain numpy arrays of shape (n1, n2), row-major. Vector
fields are stacked as shape (2, n1, n2) with the x-difference plane first
(differences along axis 0) and the y-difference plane second (axis 1).
"""

from __future__ import annotations

import numpy as np

Array = np.ndarray

#: Upper bound on the operator norm of ``grad`` (8 = spectral bound of the
#: discrete Laplacian with unit spacing), used for PDHG step sizes.
GRAD_NORM_BOUND = np.sqrt(8.0)


def check_field(f: Array, name: str = "field") -> Array:
    """Validate a scalar field: 2D, both dims >= 2, all entries finite."""
    f = np.asarray(f)
    if f.ndim != 2 or f.shape[0] < 2 or f.shape[1] < 2:
        raise ValueError(f"{name} must be 2D with both dimensions >= 2, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{name} contains non-finite entries")
    return f


def grad(f: Array) -> Array:
    """Forward differences with Neumann boundary (zero at the last row/column).

    Works for real and complex fields alike.
    """
    f = np.asarray(f)
    g = np.zeros((2,) + f.shape, dtype=f.dtype)
    g[0, :-1, :] = f[1:, :] - f[:-1, :]
    g[1, :, :-1] = f[:, 1:] - f[:, :-1]
    return g


def grad_adjoint(y: Array) -> Array:
    """Exact algebraic adjoint of :func:`grad` (negative divergence).

    Satisfies <grad f, y> = <f, grad_adjoint y> in exact arithmetic for the
    matching boundary stencil.
    """
    y = np.asarray(y)
    yx, yy = y[0], y[1]
    out = np.zeros(yx.shape, dtype=y.dtype)
    if yx.shape[0] > 1:
        # adjoint of forward difference along axis 0
        out[0, :] -= yx[0, :]
        out[1:-1, :] += yx[:-2, :] - yx[1:-1, :]
        out[-1, :] += yx[-2, :]
    if yy.shape[1] > 1:
        # adjoint of forward difference along axis 1
        out[:, 0] -= yy[:, 0]
        out[:, 1:-1] += yy[:, :-2] - yy[:, 1:-1]
        out[:, -1] += yy[:, -2]
    return out


def pointwise_norm(y: Array) -> Array:
    """Per-pixel Euclidean norm of a vector field.

    Accepts (2, n1, n2) or, more generally, (k, n1, n2); complex planes
    contribute their modulus squared.
    """
    y = np.asarray(y)
    return np.sqrt(np.sum(np.abs(y) ** 2, axis=0))


def tv(f: Array, weight: float = 1.0) -> float:
    """Isotropic total variation: weight * sum of pointwise gradient norms."""
    if weight < 0:
        raise ValueError("tv weight must be nonnegative")
    return float(weight * np.sum(pointwise_norm(grad(f))))


def phase_double_difference(phi1: Array, phi2: Array, phi3: Array, phi4: Array) -> Array:
    """(phi1 - phi2) - (phi3 - phi4), the flow-encoding phase combination."""
    return (phi1 - phi2) - (phi3 - phi4)


def phase_coupling_energy(
    phi1: Array, phi2: Array, phi3: Array, phi4: Array, eta: float, tau: float
) -> float:
    """Quadratic smoothing energy coupling the four channel phases.

    (1/2 tau) * ( eta * ||grad((phi1-phi2)-(phi3-phi4))||^2 + sum_l ||phi_l||^2 )
    with squared two-norms throughout.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    d = phase_double_difference(phi1, phi2, phi3, phi4)
    smooth = eta * np.sum(grad(d) ** 2)
    ridge = sum(np.sum(p**2) for p in (phi1, phi2, phi3, phi4))
    return float((smooth + ridge) / (2.0 * tau))
