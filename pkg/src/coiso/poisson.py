"""Poisson bivectors from symplectic inversion: brackets, block splitting,
projection, and the curved-case anomaly.

Sign convention (fixed globally, asserted by tests):

    Lambda(q) = -(Omega(q))^{-1}   as matrices,

so that on a canonical chart (q, p) with Omega = dq ^ dp (that is,
Omega(e_q, e_p) = +1) the bracket is {q, p} = Lambda(dq, dp) = +1.  This is
the orientation that reproduces both the lattice-electrodynamics transverse
projector bracket and the monopole current algebra with positive structure
constants.  Equivalently ||Lambda . Omega + 1|| = 0.
"""

from dataclasses import dataclass, field

import numpy as np

from .geom import Bivector, DiffBackend, ScalarField

LAMBDA_SIGN = -1.0


class DegenerateInversionError(RuntimeError):
    """Omega too close to singular to invert; carries the condition number."""

    def __init__(self, message, cond):
        super().__init__(f"{message} (condition number {cond:.3e})")
        self.cond = cond


class ProjectionRefusedError(RuntimeError):
    """project() called without a passing projectability check."""


@dataclass
class PoissonStructure:
    chart: object
    Lambda: Bivector
    provenance: str  # "inverse_of_symplectic" | "projected"
    backend: DiffBackend = field(default_factory=DiffBackend)

    def bracket(self, f, g, p):
        return bracket(self, f, g, p)


def invert(E, p, degeneracy_rtol=1e-10, backend=None):
    """Poisson structure on the enlarged chart, Lambda = -Omega^{-1}.

    ``p`` is a probe point at which nondegeneracy is certified up front;
    every later evaluation re-checks conditioning and raises
    :class:`DegenerateInversionError` near singularities.
    """
    backend = E.backend if backend is None else backend

    def lam(q):
        M = E.Omega.matrix(q)
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[-1] <= degeneracy_rtol * sv[0]:
            raise DegenerateInversionError(
                f"Omega nearly singular at {np.asarray(q)}",
                sv[0] / max(sv[-1], 1e-300))
        return LAMBDA_SIGN * np.linalg.inv(M)

    lam(E.sigma0(E.tau(p)) if len(np.asarray(p)) == E.base.dim else p)
    return PoissonStructure(E.enlarged, Bivector(E.enlarged, lam, name="Lambda"),
                            "inverse_of_symplectic", backend)


def bracket(P, f, g, p):
    """{f, g}(p) = Lambda(df, dg), gradients from exact hooks or differences."""
    p = np.asarray(p, dtype=float)
    gf = P.backend.grad(f, p)
    gg = P.backend.grad(g, p)
    return float(gf @ P.Lambda.matrix(p) @ gg)


@dataclass
class BlockDecomposition:
    """Lambda = Lambda_W + Lambda_{K+K*} with Lambda_W = R Lambda R^T.

    R extends the horizontal projector by zero on the fiber directions, so
    Lambda_W carries only W ^ W components.
    """

    embedding: object
    poisson: PoissonStructure
    Lambda_W: Bivector
    Lambda_KKstar: Bivector
    cross_residual: float
    classification: str
    last_check: object = None

    def rhat(self, q):
        n = self.embedding.base.dim
        dim = self.embedding.enlarged.dim
        out = np.zeros((dim, dim))
        out[:n, :n] = np.eye(n) - self.embedding.C.matrix(np.asarray(q)[:n])
        return out


def block_decompose(P, C, E, points, classification, tol=1e-8):
    """Split Lambda into its W-block and its K+K* complement.

    In the CLOSED and FLAT cases the mixed polarizations must vanish and a
    residual above tolerance is an error; in the CURVED case the cross terms
    are reported on the returned decomposition, not fatal.
    """
    n = E.base.dim
    dim = E.enlarged.dim

    def rhat(q):
        out = np.zeros((dim, dim))
        out[:n, :n] = np.eye(n) - C.matrix(np.asarray(q, dtype=float)[:n])
        return out

    def lam_w(q):
        R = rhat(q)
        return R @ P.Lambda.matrix(q) @ R.T

    def lam_k(q):
        return P.Lambda.matrix(q) - lam_w(q)

    cross = 0.0
    for q in points:
        q = np.asarray(q, dtype=float)
        L = P.Lambda.matrix(q)
        R = rhat(q)
        Q = np.eye(dim) - R
        c = np.abs(R @ L @ Q.T + Q @ L @ R.T).max()
        cross = max(cross, c / max(1.0, np.abs(L).max()))
    if classification in ("CLOSED", "FLAT") and cross > tol:
        raise RuntimeError(
            f"block decomposition has cross terms {cross:.3e} > {tol:.1e} "
            f"in the {classification} case")
    return BlockDecomposition(
        E, P,
        Bivector(E.enlarged, lam_w, name="Lambda_W"),
        Bivector(E.enlarged, lam_k, name="Lambda_KKstar"),
        float(cross), classification)


@dataclass
class ProjectabilityReport:
    passed: bool
    residual: float
    per_mu: np.ndarray
    tol: float

    def __bool__(self):
        return self.passed


def projectability_check(B, points, tol=1e-6):
    """mu-independence of the W-block: d Lambda_W / d mu_j at sample points.

    This is the coordinate statement of the Schouten condition
    [Lambda_W, d/dmu_j] = 0 for the fiber coordinate fields.
    """
    E = B.embedding
    r = E.r
    n = E.base.dim
    h = B.poisson.backend.h
    per_mu = np.zeros(max(r, 1))
    for q in points:
        q = np.asarray(q, dtype=float)
        for j in range(r):
            qp = q.copy()
            qp[n + j] += h
            qm = q.copy()
            qm[n + j] -= h
            d = (B.Lambda_W.matrix(qp) - B.Lambda_W.matrix(qm)) / (2.0 * h)
            per_mu[j] = max(per_mu[j], np.abs(d).max())
    res = float(per_mu.max())
    report = ProjectabilityReport(res < tol, res, per_mu, tol)
    B.last_check = report
    return report


def project(B, E=None, check=None, jacobi_points=None, jacobi_tol=1e-5,
            seed=0, n_triples=5):
    """Push Lambda_W down to the base chart, evaluating at mu = 0.

    Refuses to run without a passing projectability check.  In the CLOSED
    and FLAT cases the mu = 0 evaluation is a canonical choice (any mu gives
    the same block).  The Jacobi identity of the projected bivector is
    asserted on seeded polynomial triples.
    """
    E = B.embedding if E is None else E
    check = B.last_check if check is None else check
    if check is None or not check.passed:
        raise ProjectionRefusedError(
            "projection refused: projectability check missing or failed "
            f"(residual {getattr(check, 'residual', None)})")
    n = E.base.dim

    def lam(p):
        q = E.sigma0(np.asarray(p, dtype=float))
        return B.Lambda_W.matrix(q)[:n, :n]

    proj = PoissonStructure(E.base, Bivector(E.base, lam, name="lambda_W"),
                            "projected", B.poisson.backend)
    if jacobi_points is not None:
        from .geom import jacobiator
        rng = np.random.default_rng(seed)
        worst = 0.0
        for p in jacobi_points:
            for _ in range(n_triples):
                fields = [_random_quadratic(E.base, rng) for _ in range(3)]
                worst = max(worst, abs(jacobiator(
                    proj.Lambda, *fields, p, proj.backend)))
        if worst > jacobi_tol:
            raise RuntimeError(
                f"projected bivector violates Jacobi: residual {worst:.3e}")
    return proj


def _random_quadratic(chart, rng):
    """Seeded quadratic polynomial scalar field with its exact gradient."""
    n = chart.dim
    lin = rng.normal(size=n)
    quad = rng.normal(size=(n, n)) / max(n, 1)
    quad = 0.5 * (quad + quad.T)

    def ev(p):
        return float(lin @ p + p @ quad @ p)

    def grad(p):
        return lin + 2.0 * (quad @ p)

    return ScalarField(chart, ev, exact_gradient=grad, name="poly")


@dataclass
class AnomalyRecord:
    base_part: ScalarField
    anomaly: ScalarField
    zero_section_residual: float


def anomaly(P, E, f, g, points, classification=None, tol=1e-8):
    """Split {f~, g~} = tau^* h + H for base observables f, g.

    h is the mu = 0 value; H the fiber-dependent remainder, which vanishes
    on the zero section (asserted at the sampled points).  Intended for the
    CURVED case; in the CLOSED case H is identically zero within tolerance.
    """
    if classification is not None and classification not in ("CURVED", "FLAT", "CLOSED"):
        raise ValueError(f"unknown classification {classification}")
    n = E.base.dim

    def lift(u):
        ev = lambda q: u.eval(np.asarray(q, dtype=float)[:n])
        grad = None
        if u.exact_gradient is not None:
            def grad(q):
                gq = np.zeros(E.enlarged.dim)
                gq[:n] = u.exact_gradient(np.asarray(q, dtype=float)[:n])
                return gq
        return ScalarField(E.enlarged, ev, exact_gradient=grad,
                           name=f"{u.name}~")

    ftil, gtil = lift(f), lift(g)

    def h_eval(p):
        return bracket(P, ftil, gtil, E.sigma0(p))

    base_part = ScalarField(E.base, h_eval, name=f"{{{f.name},{g.name}}}|0")

    def H_eval(q):
        q = np.asarray(q, dtype=float)
        return bracket(P, ftil, gtil, q) - h_eval(q[:n])

    anomaly_field = ScalarField(E.enlarged, H_eval, name="H")
    res = 0.0
    for p in points:
        p = np.asarray(p, dtype=float)
        base = p[:n] if p.size == E.enlarged.dim else p
        res = max(res, abs(H_eval(E.sigma0(base))))
    if res > tol:
        raise RuntimeError(
            f"anomaly does not vanish on the zero section: {res:.3e}")
    return AnomalyRecord(base_part, anomaly_field, float(res))
