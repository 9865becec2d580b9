"""Shared independent oracles for the test suite.

Everything here is deliberately built on different machinery than the package:
Bessel-function reductions, adaptive quadrature and direct sphere-mesh
discretizations, so oracle and implementation never share a code path.
"""
import numpy as np
from numpy.polynomial.legendre import leggauss, legval
from scipy.integrate import quad
from scipy.special import ive


def lambda_exact_builtin(s: float, cross_weight: float = 1.0) -> float:
    """Exact Lambda(0, m - s) for the cosine model, phi == 1, either channel.

    u(t, 0) = (1 + c) eps(t) and 1/(x) = int_0^inf e^{-x y} dy reduce the torus
    integral to (2 pi)^3 int_0^inf e^{-s y} [e^{-(1+c) y} I0((1+c) y)]^3 dy.
    """
    c = 1.0 + cross_weight

    def f(y):
        return np.exp(-s * y) * ive(0, c * y) ** 3

    val, err = quad(f, 0.0, np.inf, limit=400)
    assert err < 1e-6 * max(val, 1e-30)
    return (2 * np.pi) ** 3 * val


def richardson_1_over_n(ns, values) -> float:
    """Least-squares intercept of values ~ a + b/n."""
    ns = np.asarray(ns, dtype=float)
    A = np.stack([np.ones_like(ns), 1.0 / ns], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.asarray(values, dtype=float), rcond=None)
    return float(coef[0])


def sphere_mesh(n_theta: int = 16, n_phi: int = 32):
    """Gauss-Legendre x uniform-azimuth product mesh on S^2 with weights."""
    c, wc = leggauss(n_theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2 * np.pi / n_phi
    st = np.sqrt(1.0 - c ** 2)
    pts = np.stack([
        np.outer(st, np.cos(phi)).ravel(),
        np.outer(st, np.sin(phi)).ravel(),
        np.outer(c, np.ones(n_phi)).ravel(),
    ], axis=1)
    w = np.outer(wc, np.full(n_phi, wphi)).ravel()
    return pts, w


def sphere_nystrom_count(params, lam: float, mu: float,
                         n_theta: int = 16, n_phi: int = 32) -> int:
    """n(mu, Shat(lambda)) from a direct product-mesh discretization.

    Builds the cross block on the mesh (kernel of the Fourier-transformed
    Sobolev kernel) and counts singular values above mu; the +/- block spectrum
    makes that the count of eigenvalues above mu.
    """
    pts, w = sphere_mesh(n_theta, n_phi)
    t = np.clip(pts @ pts.T, -1.0, 1.0)
    b = np.pi - np.arccos(params.s12 * t)
    if lam < 1e-8:
        ratio = b / np.pi
    else:
        ratio = np.exp(lam * (b - np.pi)) * (-np.expm1(-2 * lam * b)) \
            / (-np.expm1(-2 * lam * np.pi))
    kernel = params.u12 / (2 * np.pi) * ratio / np.sqrt(1.0 - params.s12 ** 2 * t ** 2)
    sw = np.sqrt(w)
    A = sw[:, None] * kernel * sw[None, :]
    sv = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(sv > mu))


def legendre_projection(fn, ell: int, npts: int = 400) -> float:
    """2 pi int_-1^1 P_ell(t) fn(t) dt by dense Gauss-Legendre (oracle grade)."""
    x, w = leggauss(npts)
    P = legval(x, np.eye(ell + 1)[ell])
    return float(2 * np.pi * np.sum(w * P * fn(x)))
