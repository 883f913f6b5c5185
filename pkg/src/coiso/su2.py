"""Closed-form SU(2) numerics in exponential coordinates.

Basis: T_j = -(i/2) sigma_j, so [T_j, T_k] = eps_{jkl} T_l and the adjoint
action of the algebra is the cross product, ad_s = [s]_x.  The invariant
frames and coframes then have the same closed forms as for SO(3):

* left-invariant fields:   X_j(s)  = Jr(s)^{-1} e_j   (flow g exp(t T_j))
* right-invariant fields:  Y_j(s)  = Jl(s)^{-1} e_j   (flow exp(t T_j) g)
* left coframe theta_j / right coframe eta_j: rows of Jr(s) / Jl(s)

with Jr/Jl the right/left Jacobians of the exponential map.  The derived
Maurer-Cartan convention, recorded by the structure-equation self test, is

    d theta^j = -(1/2) eps_{jkl} theta^k ^ theta^l.

The exponential chart is restricted to |s| < pi - margin; the closed forms
are regular there (the Jacobians only degenerate at |s| = 2 pi).
"""

import numpy as np

SIGMA = (
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)


def generator(j):
    """T_j = -(i/2) sigma_j."""
    return -0.5j * SIGMA[j]


def hat(s):
    """Cross-product matrix [s]_x, the adjoint of s in this basis."""
    s = np.asarray(s, dtype=float)
    return np.array([
        [0.0, -s[2], s[1]],
        [s[2], 0.0, -s[0]],
        [-s[1], s[0], 0.0],
    ])


def exp_su2(s):
    """Group element exp(s_j T_j) as a 2x2 unitary."""
    s = np.asarray(s, dtype=float)
    theta = np.linalg.norm(s)
    if theta < 1e-300:
        return np.eye(2, dtype=complex)
    n = s / theta
    return (np.cos(theta / 2.0) * np.eye(2, dtype=complex)
            - 1.0j * np.sin(theta / 2.0) * (n[0] * SIGMA[0] + n[1] * SIGMA[1] + n[2] * SIGMA[2]))


def log_su2(g):
    """Exponential coordinates of g (principal branch, |s| < 2 pi)."""
    g = np.asarray(g, dtype=complex)
    w = float(np.real(g[0, 0] + g[1, 1])) / 2.0
    v = np.array([
        -float(np.imag(g[0, 1])),
        -float(np.real(g[0, 1])),
        -float(np.imag(g[0, 0] - g[1, 1])) / 2.0,
    ])
    nv = np.linalg.norm(v)
    theta = 2.0 * np.arctan2(nv, w)
    if nv < 1e-14:
        return np.zeros(3)
    return theta * v / nv


def rodrigues(s):
    """Ad(exp(s)) = exp([s]_x), a rotation matrix."""
    s = np.asarray(s, dtype=float)
    theta = np.linalg.norm(s)
    k = hat(s)
    if theta < 1e-8:
        return np.eye(3) + k + 0.5 * (k @ k)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * k + b * (k @ k)


def jac_right(s):
    """Right Jacobian Jr(s) of the exponential map."""
    s = np.asarray(s, dtype=float)
    theta = np.linalg.norm(s)
    k = hat(s)
    if theta < 1e-8:
        return np.eye(3) - 0.5 * k + (k @ k) / 6.0
    a = (1.0 - np.cos(theta)) / theta**2
    b = (theta - np.sin(theta)) / theta**3
    return np.eye(3) - a * k + b * (k @ k)


def jac_right_inv(s):
    """Inverse right Jacobian, regular for |s| < 2 pi."""
    s = np.asarray(s, dtype=float)
    theta = np.linalg.norm(s)
    k = hat(s)
    if theta < 1e-8:
        return np.eye(3) + 0.5 * k + (k @ k) / 12.0
    c = 1.0 / theta**2 - (1.0 + np.cos(theta)) / (2.0 * theta * np.sin(theta))
    return np.eye(3) + 0.5 * k + c * (k @ k)


def jac_left(s):
    return jac_right(-np.asarray(s, dtype=float))


def jac_left_inv(s):
    return jac_right_inv(-np.asarray(s, dtype=float))


def left_frame(s):
    """Columns: left-invariant vector fields X_j in d/ds components."""
    return jac_right_inv(s)


def right_frame(s):
    """Columns: right-invariant vector fields Y_j in d/ds components."""
    return jac_left_inv(s)


def left_coframe(s):
    """Rows: left-invariant one-forms theta_j in ds components."""
    return jac_right(s)


def right_coframe(s):
    """Rows: right-invariant one-forms eta_j in ds components."""
    return jac_left(s)


def theta_of_right_frame(s):
    """Matrix A with A[k, j] = theta_k(Y_j) = Ad(exp(-s))[k, j]."""
    return rodrigues(-np.asarray(s, dtype=float))
