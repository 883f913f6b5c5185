"""Pointwise rank and kernel analysis of a pre-symplectic 2-form."""

from dataclasses import dataclass, field

import numpy as np

from .geom import Chart, KForm


class RankError(RuntimeError):
    """Kernel rank is not constant over the sampled points."""


class FrameContinuationError(RuntimeError):
    """A kernel frame could not be continued along the sample path.

    The projection of the previous frame into the new kernel lost rank,
    which flags a topological obstruction (or points spaced too far apart).
    """


@dataclass
class PreSymplecticStructure:
    """A closed 2-form of constant (co)rank on a chart.

    ``rank_tol`` is relative to the largest singular value of omega at the
    evaluation point, so models with different physical scales behave
    uniformly.
    """

    chart: Chart
    omega: KForm
    rank_tol: float = 1e-8
    name: str = ""

    def __post_init__(self):
        if self.omega.degree != 2:
            raise ValueError("pre-symplectic structure needs a 2-form")
        if self.omega.chart != self.chart:
            raise ValueError("omega lives on a different chart")
        if not self.rank_tol > 0:
            raise ValueError("rank_tol must be positive")


@dataclass
class KernelFrame:
    """Orthonormal kernel bases over an ordered list of base points."""

    base_points: list
    frames: list
    rank: int


def _fix_signs(basis):
    """Deterministic column signs: largest-magnitude entry made positive."""
    basis = np.array(basis, dtype=float)
    for j in range(basis.shape[1]):
        col = basis[:, j]
        k = int(np.argmax(np.abs(col)))
        if col[k] < 0:
            basis[:, j] = -col
    return basis


def kernel_basis(S, p):
    """Kernel of omega(p) by SVD.

    Returns ``(rank, basis)`` where the basis columns are an orthonormal
    spanning set of the kernel (right-singular vectors below the relative
    rank tolerance).  Antisymmetry forces the rank to be even; this is
    asserted.
    """
    m = S.omega.matrix(p)
    if not np.all(np.isfinite(m)):
        raise ValueError(f"omega is non-finite at {np.asarray(p)}")
    _, sv, vt = np.linalg.svd(m)
    smax = sv[0] if sv.size else 0.0
    if smax == 0.0:
        return 0, _fix_signs(np.eye(S.chart.dim))
    cut = S.rank_tol * smax
    rank = int(np.sum(sv > cut))
    if rank % 2 != 0:
        raise RankError(
            f"odd numerical rank {rank} at {np.asarray(p)}; singular values {sv}"
        )
    basis = vt[rank:].T
    return rank, _fix_signs(basis)


@dataclass
class RankCertificate:
    passed: bool
    rank: int
    corank: int
    ranks: list
    gaps: list
    offending_point: object = None

    def __bool__(self):
        return self.passed


def constant_rank_certificate(S, points):
    """Check that the kernel dimension is identical at all sampled points.

    The per-point gap is the smallest retained singular value (the margin
    above the rank cut).
    """
    points = list(points)
    if len(points) < 2:
        raise ValueError("constant-rank certificate needs at least 2 points")
    ranks, gaps = [], []
    for p in points:
        m = S.omega.matrix(p)
        sv = np.linalg.svd(m, compute_uv=False)
        smax = sv[0] if sv.size else 0.0
        rank = int(np.sum(sv > S.rank_tol * smax)) if smax > 0 else 0
        ranks.append(rank)
        gaps.append(float(sv[rank - 1]) if rank > 0 else 0.0)
    base = ranks[0]
    for p, r in zip(points, ranks):
        if r != base:
            return RankCertificate(False, base, S.chart.dim - base, ranks, gaps, p)
    return RankCertificate(True, base, S.chart.dim - base, ranks, gaps)


def smooth_kernel_frame(S, points):
    """Continue an orthonormal kernel frame along an ordered path of points.

    The frame at point i+1 is the polar orthonormalization (Procrustes
    alignment) of the projection of frame i into ker omega(p_{i+1}), so the
    result is deterministic given the path and bit-reproduces on reruns.
    """
    points = [np.asarray(p, dtype=float) for p in points]
    cert = constant_rank_certificate(S, points) if len(points) >= 2 else None
    if cert is not None and not cert.passed:
        raise RankError(
            f"rank jump at {cert.offending_point}: ranks {set(cert.ranks)}"
        )
    frames = []
    prev = None
    r = None
    for p in points:
        _, basis = kernel_basis(S, p)
        if r is None:
            r = basis.shape[1]
        if basis.shape[1] != r:
            raise RankError(f"kernel dimension changed at {p}")
        if r == 0:
            frames.append(basis)
            continue
        if prev is None:
            frame = basis
        else:
            # project previous frame into the new kernel, re-orthonormalize
            m = basis @ (basis.T @ prev)
            u, sv, vt = np.linalg.svd(m, full_matrices=False)
            if sv[-1] < 1e-8:
                raise FrameContinuationError(
                    f"kernel frame cannot be continued at {p} "
                    f"(projection singular values {sv}); topology obstruction"
                )
            frame = u @ vt
        frames.append(frame)
        prev = frame
    return KernelFrame(points, frames, r if r is not None else 0)
