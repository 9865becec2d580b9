"""Three-body machinery: the sandwich (Birman-Schwinger) operator T(z), counting
N(z) = n(1, T(z)), a direct dense Hamiltonian oracle, the essential-spectrum
scan and Hilbert-Schmidt diagnostics.

T(z) has zero diagonal blocks and cross kernel

    T12(q, t) = sqrt(mu1 mu2) Delta1(q,z)^{-1/2} phi2(q) phi1(t)
                Delta2(t,z)^{-1/2} / (u(t, q) - z),

discretized by weight-symmetrized Nystrom on the shifted grid, so eigenvalue
counts match dense-Hamiltonian counts exactly at matched discretization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import svds

from .errors import (InvalidSpectralPointError, ModelDataError,
                     OutOfDomainError, ResourceCapError)
from .model import HessianData, ModelSpec, pair_matrix
from .reports import CountReport, EssentialSpectrumReport

# dense materialization / direct-Hamiltonian caps
DENSE_BS_DIM_CAP = 16384
DIRECT_DIM_CAP = 50000
# eigenvalues this close to the counting threshold (relative to ||B||) count as below
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class BSMatrix:
    """Nystrom discretization of T(z): symmetric, zero diagonal blocks."""

    z: float
    block12: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return 2 * self.block12.shape[0]

    def full(self) -> np.ndarray:
        N = self.block12.shape[0]
        out = np.zeros((2 * N, 2 * N))
        out[:N, N:] = self.block12
        out[N:, :N] = self.block12.T
        return out

    def hs_norm(self) -> float:
        return float(np.sqrt(2.0) * np.linalg.norm(self.block12))


class _BSWorkspace:
    """Reusable buffers for a z-sweep on one model: u-matrix plus one scratch block."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.N = spec.grid.size
        self.U = pair_matrix(spec)              # u(t_i, q_j), rows = first slot
        self.B = np.empty_like(self.U)
        self.f1 = spec.phi_values(1)
        self.f2 = spec.phi_values(2)
        self.w = spec.grid.weight

    def determinants(self, z: float) -> tuple[np.ndarray, np.ndarray]:
        """Delta_alpha(p, z) on all grid nodes; requires z < every u value."""
        np.subtract(self.U, z, out=self.B)
        if self.B.min() <= 0.0:
            raise OutOfDomainError(f"z = {z} is not below the grid spectrum of u")
        np.reciprocal(self.B, out=self.B)
        lam1 = self.w * np.einsum("i,ij->j", self.f1 ** 2, self.B)
        lam2 = self.w * np.einsum("j,ij->i", self.f2 ** 2, self.B)
        return 1.0 - self.spec.mu1 * lam1, 1.0 - self.spec.mu2 * lam2

    def block12_into(self, z: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Overwrite the scratch block with T12(z); returns (block, d1, d2)."""
        d1, d2 = self.determinants(z)
        if d1.min() <= 0.0 or d2.min() <= 0.0:
            raise InvalidSpectralPointError(
                f"nonpositive determinant at z = {z} "
                f"(min d1 = {d1.min():.3e}, min d2 = {d2.min():.3e}); "
                f"z is not below the channel branches")
        # B currently holds 1/(u - z); scale rows (spectator of channel 1) and
        # columns (spectator of channel 2).  Row index = second slot of u, so
        # the resolvent factor is B.T; transpose in place via the scaled view.
        scale = np.sqrt(self.spec.mu1 * self.spec.mu2) * self.w
        row = scale * self.f2 / np.sqrt(d1)
        col = self.f1 / np.sqrt(d2)
        self.B *= col[:, None]      # t-index scaling on rows of B (first slot)
        self.B *= row[None, :]      # q-index scaling on columns of B
        return self.B.T, d1, d2


def assemble_bs_matrix(spec: ModelSpec, z: float) -> BSMatrix:
    """Build the symmetric Nystrom matrix of T(z) (cross block materialized).

    Requires z < m and positive determinants at every node; raises the
    resource-cap error when the full matrix would exceed the dense cap.
    """
    if z >= spec.m:
        raise OutOfDomainError(f"z = {z} is not below the threshold m = {spec.m}")
    if 2 * spec.grid.size > DENSE_BS_DIM_CAP:
        raise ResourceCapError(
            f"dense T(z) would have dimension {2 * spec.grid.size} > {DENSE_BS_DIM_CAP}; "
            f"use count_eigenvalues_below / count_report, which work blockwise")
    ws = _BSWorkspace(spec)
    block, _, _ = ws.block12_into(z)
    return BSMatrix(z=float(z), block12=block.copy())


def count_above(matrix: np.ndarray, lam: float) -> int:
    """Number of eigenvalues of a symmetric matrix strictly above lam.

    Eigenvalues within TIE_RTOL * ||B|| of lam count as not above.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"need a square matrix, got shape {matrix.shape}")
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0
    if not np.allclose(matrix, matrix.T, atol=1e-12 * max(1.0, scale), rtol=0.0):
        raise ValueError("matrix is not symmetric")
    if matrix.size == 0:
        return 0
    ev = np.linalg.eigvalsh(matrix)
    tie = TIE_RTOL * max(np.abs(ev[0]), np.abs(ev[-1]))
    return int(np.sum(ev > lam + tie))


def _count_block_singular_above(block: np.ndarray, mu: float, k0: int = 8,
                                seed: int = 0) -> int:
    """#{singular values of block > mu} via Lanczos with adaptive k."""
    N = min(block.shape)
    fro = float(np.linalg.norm(block))
    if fro <= mu:            # sigma_max <= Frobenius norm
        return 0
    if N <= 600:
        sv = np.linalg.svd(block, compute_uv=False)
        tie = TIE_RTOL * sv[0]
        return int(np.sum(sv > mu + tie))
    k = k0
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(block.shape[1])
    while True:
        k_eff = min(k, N - 1)
        sv = svds(block, k=k_eff, v0=v0, return_singular_vectors=False, tol=1e-10)
        tie = TIE_RTOL * sv.max()
        cnt = int(np.sum(sv > mu + tie))
        if cnt < len(sv) or k_eff == N - 1:
            return cnt
        k *= 2


def count_eigenvalues_below(spec: ModelSpec, z: float,
                            workspace: Optional[_BSWorkspace] = None) -> int:
    """N(z) = n(1, T(z)): eigenvalues of H below z, via the sandwich operator.

    Dimension 2 n^3 <= DENSE_BS_DIM_CAP runs the dense symmetric count; larger
    grids count block singular values iteratively (same integers, the spectrum
    of T is +/- the singular values of the cross block).
    """
    if z >= spec.m:
        raise OutOfDomainError(f"z = {z} is not below the threshold m = {spec.m}")
    ws = workspace if workspace is not None else _BSWorkspace(spec)
    if 2 * spec.grid.size <= 4096:
        block, _, _ = ws.block12_into(z)
        bs = BSMatrix(z=float(z), block12=block.copy())
        return count_above(bs.full(), 1.0)
    block, _, _ = ws.block12_into(z)
    return _count_block_singular_above(block, 1.0)


def assemble_direct_hamiltonian(spec: ModelSpec) -> np.ndarray:
    """Dense n^6 Hamiltonian: diag(u) minus the two Nystrom rank-n^3 potentials.

    The quadrature-weight normalization makes each potential the Nystrom image
    of phi (x) phi, so its eigenvalue counts match the sandwich-operator counts
    exactly on the same grid.
    """
    N = spec.grid.size
    if N * N > DIRECT_DIM_CAP:
        raise ResourceCapError(
            f"direct Hamiltonian dimension {N * N} exceeds cap {DIRECT_DIM_CAP}")
    U = pair_matrix(spec)
    H = np.diag(U.ravel())      # row-major: index = (t-slot, q-slot)
    w = spec.grid.weight
    f1 = spec.phi_values(1)
    f2 = spec.phi_values(2)
    H -= spec.mu1 * np.kron(w * np.outer(f1, f1), np.eye(N))
    H -= spec.mu2 * np.kron(np.eye(N), w * np.outer(f2, f2))
    return H


def direct_count_below(spec: ModelSpec, z_values) -> list[int]:
    """Eigenvalue counts of the dense Hamiltonian below each z (one eigensolve)."""
    ev = np.linalg.eigvalsh(assemble_direct_hamiltonian(spec))
    return [int(np.sum(ev < z)) for z in np.atleast_1d(z_values)]


def finite_dim_bs_identity_check(spec: ModelSpec, z: float) -> float:
    """Max residual of  I - mu_a Phi_a R0(z) Phi_a* = D_a(z)  at matched quadrature.

    The operators are materialized sparsely and multiplied out; the right side
    is the diagonal of determinant values from the channel module.  Exact up to
    rounding, for every z below the grid spectrum.
    """
    from .twobody import lambda_on_grid
    if z >= spec.m:
        raise OutOfDomainError(f"z = {z} is not below the threshold m = {spec.m}")
    N = spec.grid.size
    if N * N > 4_000_000:
        raise ResourceCapError(f"identity check materializes N^2 = {N * N} resolvent entries")
    U = pair_matrix(spec)
    sw = np.sqrt(spec.grid.weight)
    R0 = sp.diags(1.0 / (U.ravel() - z))
    worst = 0.0
    for alpha, f in ((1, spec.phi_values(1)), (2, spec.phi_values(2))):
        if alpha == 1:
            Phi = sp.kron(sp.csr_matrix(sw * f[None, :]), sp.eye(N), format="csr")
        else:
            Phi = sp.kron(sp.eye(N), sp.csr_matrix(sw * f[None, :]), format="csr")
        lhs = np.eye(N) - spec.mu(alpha) * (Phi @ R0 @ Phi.T).toarray()
        rhs = np.diag(1.0 - spec.mu(alpha) * lambda_on_grid(spec, alpha, z, pair_mat=U))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def essential_spectrum(spec: ModelSpec) -> EssentialSpectrumReport:
    """Band [m, M] plus the channel-eigenvalue branches over the p-grid.

    Only branch values strictly below m are reported: they are the part of the
    channel spectrum outside the band (and the only part that can move the
    lower edge).  Roots inside [m, M] are absorbed by the band and, on a grid,
    are dominated by the nodal-minimum quadrature spike anyway.
    """
    branches = {}
    for alpha in (1, 2):
        vals = np.full(spec.grid.size, np.nan)
        if spec.mu(alpha) > 0:
            vals = _channel_roots_on_grid(spec, alpha)
        branches[alpha] = vals
    finite = np.concatenate([b[np.isfinite(b)] for b in branches.values()])
    lower = float(min(spec.m, finite.min())) if finite.size else float(spec.m)
    return EssentialSpectrumReport(
        band=(float(spec.m), float(spec.M)), branch_values=branches,
        lower_edge=lower,
        meta={"grid_n": spec.grid.n, "mu1": spec.mu1, "mu2": spec.mu2})


def _channel_roots_on_grid(spec: ModelSpec, alpha: int) -> np.ndarray:
    """Vectorized bisection of Delta_alpha(p, .) = 0 below m, over all nodes p."""
    from .grids import TWO_PI
    U = pair_matrix(spec)
    if alpha == 2:
        U = np.ascontiguousarray(U.T)   # t-index along rows for both channels
    w = spec.grid.weight
    mu = spec.mu(alpha)
    phi2 = spec.phi_values(alpha) ** 2
    N = spec.grid.size
    step = max(1, (1 << 27) // (8 * N))

    def lam(zv):        # zv: (N,) spectator-wise z; chunked over the t-index
        acc = np.zeros(N)
        for i0 in range(0, N, step):
            i1 = min(N, i0 + step)
            acc += phi2[i0:i1] @ (1.0 / (U[i0:i1] - zv[None, :]))
        return w * acc

    vals_min = U.min(axis=0)
    # bracket top just below the three-body threshold: quadrature sums are
    # finite there (every node value exceeds m) and roots above m are not
    # reported (they sit inside the band)
    tiny = 1e-12 * max(1.0, abs(spec.m))
    top = np.full(N, spec.m - tiny)
    lo = vals_min - (spec.M - spec.m) - mu * TWO_PI ** 3 * float(phi2.max())
    has_root = 1.0 - mu * lam(top) < 0.0
    out = np.full(N, np.nan)
    if not has_root.any():
        return out
    a = lo.copy()
    b = top.copy()
    for _ in range(60):
        c = 0.5 * (a + b)
        pos = 1.0 - mu * lam(c) > 0.0
        a = np.where(pos, c, a)
        b = np.where(pos, b, c)
        if float(np.max(b - a)) < 1e-10:
            break
    out[has_root] = (0.5 * (a + b))[has_root]
    return out


def model_kernel_block(spec: ModelSpec, hess: HessianData, s: float,
                       delta: float = 1.0,
                       rows: slice | None = None) -> np.ndarray:
    """Nystrom block of the threshold model kernel T(delta; s), cross entry only.

    d0 chi(p) chi(q) (n1 (Up,p) + 2s)^{-1/4} (n2 (Uq,q) + 2s)^{-1/4}
       / (l1 (Up,p) + 2 l (Up,q) + l2 (Uq,q) + 2s),
    with chi the indicator of |U^{1/2} p| < delta and everything evaluated on
    the grid nodes (weight-symmetrized).
    """
    nodes = spec.grid.nodes
    r = nodes if rows is None else nodes[rows]
    Uh = hess.U
    d0 = np.sqrt(hess.detU) / (2 * np.pi ** 2) * (hess.l1 * hess.l2) ** 0.75
    quad_r = np.einsum("ij,jk,ik->i", r, Uh, r)
    quad_c = np.einsum("ij,jk,ik->i", nodes, Uh, nodes)
    chi_r = (quad_r < delta * delta).astype(float)
    chi_c = (quad_c < delta * delta).astype(float)
    num_r = chi_r * (hess.n1 * quad_r + 2 * s) ** -0.25
    num_c = chi_c * (hess.n2 * quad_c + 2 * s) ** -0.25
    cross = (r @ Uh) @ nodes.T
    den = (hess.l1 * quad_r[:, None] + 2 * hess.l * cross
           + hess.l2 * quad_c[None, :] + 2 * s)
    return spec.grid.weight * d0 * num_r[:, None] * num_c[None, :] / den


def hs_diagnostics(spec: ModelSpec, z: float, delta: float = 1.0,
                   hess: Optional[HessianData] = None,
                   workspace: Optional[_BSWorkspace] = None) -> tuple[float, float]:
    """(HS norm of T(z), HS norm of T(z) - T(delta; |m-z|)).

    The model kernel uses the Hessian structure at the minimum; extraction is
    done on demand when `hess` is not supplied.
    """
    from .model import hessian_at_minimum
    if z >= spec.m:
        raise OutOfDomainError(f"z = {z} is not below the threshold m = {spec.m}")
    hess = hess if hess is not None else hessian_at_minimum(spec)
    ws = workspace if workspace is not None else _BSWorkspace(spec)
    block, _, _ = ws.block12_into(z)
    hs = np.sqrt(2.0) * float(np.linalg.norm(block))
    s = spec.m - z
    acc = 0.0
    step = max(1, (1 << 27) // (8 * ws.N))
    for i0 in range(0, ws.N, step):
        rows = slice(i0, min(ws.N, i0 + step))
        Mblk = model_kernel_block(spec, hess, s, delta, rows=rows)
        acc += float(np.sum((block[rows] - Mblk) ** 2))
    return hs, float(np.sqrt(2.0 * acc))


def trust_floor(n: int) -> float:
    """Smallest trusted m - z on an n^3 grid: (2 pi / n)^2 / 10."""
    return (2 * np.pi / n) ** 2 / 10.0


def count_report(spec: ModelSpec, m_minus_z, delta: float = 1.0,
                 with_hs: bool = True,
                 hess: Optional[HessianData] = None) -> CountReport:
    """Sweep N(z), determinant minima and HS diagnostics over a z-list."""
    from .errors import NotProductFormError
    from .model import hessian_at_minimum
    s_list = np.sort(np.unique(np.asarray(m_minus_z, dtype=float)))[::-1]
    if s_list.size == 0 or s_list.min() <= 0:
        raise ModelDataError("m - z values must be positive and nonempty")
    ws = _BSWorkspace(spec)
    if with_hs and hess is None:
        try:
            hess = hessian_at_minimum(spec)
        except NotProductFormError:
            with_hs = False     # e.g. tabulated models: HS columns stay NaN
    counts = np.empty(s_list.size, dtype=int)
    detmin = np.empty(s_list.size)
    hs = np.full(s_list.size, np.nan)
    hsd = np.full(s_list.size, np.nan)
    floor = trust_floor(spec.grid.n)
    for i, s in enumerate(s_list):
        z = spec.m - s
        block, d1, d2 = ws.block12_into(z)
        detmin[i] = min(float(d1.min()), float(d2.min()))
        if with_hs:
            hs[i] = np.sqrt(2.0) * float(np.linalg.norm(block))
            acc = 0.0
            step = max(1, (1 << 27) // (8 * ws.N))
            for i0 in range(0, ws.N, step):
                rows = slice(i0, min(ws.N, i0 + step))
                Mblk = model_kernel_block(spec, hess, s, delta, rows=rows)
                acc += float(np.sum((block[rows] - Mblk) ** 2))
            hsd[i] = float(np.sqrt(2.0 * acc))
        if 2 * spec.grid.size <= 4096:
            counts[i] = count_above(BSMatrix(z=z, block12=block.copy()).full(), 1.0)
        else:
            counts[i] = _count_block_singular_above(block, 1.0)
    return CountReport(
        m_minus_z=s_list, counts=counts, det_min=detmin, hs_norm=hs, hs_diff=hsd,
        trusted=s_list >= floor,
        meta={"grid_n": spec.grid.n, "mu1": spec.mu1, "mu2": spec.mu2,
              "delta": delta, "trust_floor": floor, "tie_rtol": TIE_RTOL})
