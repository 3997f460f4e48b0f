"""9-node Lagrange quadrilateral shape functions, Gauss quadrature and the
isoparametric forward/inverse maps."""

from __future__ import annotations

import numpy as np

# reference coordinates of the 9 local nodes: corners, mid-sides, centre
LOCAL_NODES = np.array([
    (-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0),
    (0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0),
    (0.0, 0.0),
])

# local node triples of the four element edges, ordered along increasing
# edge coordinate (x for S/N, y for W/E on an axis-aligned element)
EDGE_NODES = {0: (0, 4, 1), 1: (1, 5, 2), 2: (3, 6, 2), 3: (0, 7, 3)}


def _lag1d(x: float) -> np.ndarray:
    """Quadratic Lagrange values at nodes (-1, 0, 1)."""
    return np.array([0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)])


def _dlag1d(x: float) -> np.ndarray:
    return np.array([x - 0.5, -2.0 * x, x + 0.5])


_IDX = {-1.0: 0, 0.0: 1, 1.0: 2}


def shape(xi: float, eta: float) -> np.ndarray:
    """Shape function values N_i(xi, eta), i = 0..8."""
    lx, ly = _lag1d(xi), _lag1d(eta)
    return np.array([lx[_IDX[a]] * ly[_IDX[b]] for a, b in LOCAL_NODES])


def dshape(xi: float, eta: float) -> np.ndarray:
    """Shape function gradients w.r.t. (xi, eta); shape (9, 2)."""
    lx, ly = _lag1d(xi), _lag1d(eta)
    dlx, dly = _dlag1d(xi), _dlag1d(eta)
    out = np.empty((9, 2))
    for i, (a, b) in enumerate(LOCAL_NODES):
        ia, ib = _IDX[a], _IDX[b]
        out[i, 0] = dlx[ia] * ly[ib]
        out[i, 1] = lx[ia] * dly[ib]
    return out


def shape1d(xi: float) -> np.ndarray:
    """Quadratic edge trace values at nodes ordered (end, mid, end)."""
    l = _lag1d(xi)
    return np.array([l[0], l[1], l[2]])


def gauss1d(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gauss2d(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor-product rule on the reference square; points (n*n, 2)."""
    x, w = np.polynomial.legendre.leggauss(n)
    pts = np.array([(a, b) for b in x for a in x])
    wts = np.array([wa * wb for wb in w for wa in w])
    return pts, wts


def forward_map(coords: np.ndarray, xi: float, eta: float) -> np.ndarray:
    """Global position of a reference point; coords is (9, 2)."""
    return shape(xi, eta) @ coords


def jacobian(coords: np.ndarray, xi: float, eta: float) -> np.ndarray:
    """Jacobian dx/dxi, shape (2, 2)."""
    return dshape(xi, eta).T @ coords


def inverse_map(coords: np.ndarray, point, tol: float = 1e-12,
                max_iter: int = 60) -> np.ndarray:
    """Newton iteration for the reference coordinates of a global point.

    Converges when the position residual drops below ``tol`` metres; the
    result must land in [-1, 1] up to 1e-10 slack.
    """
    point = np.asarray(point, dtype=float)
    box_lo = coords.min(axis=0) - 1e-9
    box_hi = coords.max(axis=0) + 1e-9
    if np.any(point < box_lo) or np.any(point > box_hi):
        raise ValueError(f"point {point} outside element bounding box")
    xi = np.zeros(2)
    for _ in range(max_iter):
        r = forward_map(coords, xi[0], xi[1]) - point
        if np.linalg.norm(r) < tol:
            break
        J = jacobian(coords, xi[0], xi[1])
        xi = xi - np.linalg.solve(J, r)
    else:
        r = forward_map(coords, xi[0], xi[1]) - point
        if np.linalg.norm(r) >= tol:
            raise RuntimeError(f"inverse map did not converge for point {point}")
    if np.any(np.abs(xi) > 1.0 + 1e-10):
        raise RuntimeError(f"mapped point {xi} falls outside the reference square")
    return xi
