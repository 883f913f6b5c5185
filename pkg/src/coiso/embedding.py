"""Coisotropic embedding of a pre-symplectic structure via a connection.

The enlarged chart appends one fiber coordinate mu_j per vertical frame
field V_j (fiber coordinates are components against the frame dual), and
carries the symplectic form assembled from three individually exposed
pieces:

    Omega = tau^* omega  +  sum_j d mu_j ^ P^j  +  sum_j mu_j d P^j

The zero section pulls Omega back to omega; the mu_j d P^j piece is exactly
what restores closedness when the connection forms are not closed.
"""

from dataclasses import dataclass, field

import numpy as np

from .geom import Chart, DiffBackend, DomainError, KForm


class EmbeddingError(RuntimeError):
    pass


class DegenerateOmegaError(RuntimeError):
    """Omega degenerate where nondegeneracy was required."""

    def __init__(self, message, cond=None, point=None):
        super().__init__(message)
        self.cond = cond
        self.point = None if point is None else np.asarray(point, dtype=float)


def _mu_names(base, r):
    names = [f"mu_{j + 1}" for j in range(r)]
    if set(names) & set(base.coord_names):
        names = [f"mu#{j + 1}" for j in range(r)]
    return tuple(names)


@dataclass
class CoisotropicEmbedding:
    base: Chart
    enlarged: Chart
    S: object
    C: object
    backend: DiffBackend
    Omega: KForm = None
    tau_star_omega: KForm = None
    pairing_term: KForm = None
    alpha_term: KForm = None
    mu_bound: float = None

    @property
    def r(self):
        return self.enlarged.dim - self.base.dim

    def tau(self, q):
        """Bundle projection: drop the mu block."""
        return np.asarray(q, dtype=float)[: self.base.dim]

    def sigma0(self, p):
        """Zero section: append mu = 0."""
        p = np.asarray(p, dtype=float)
        return np.concatenate([p, np.zeros(self.r)])

    def split(self, q):
        q = np.asarray(q, dtype=float)
        return q[: self.base.dim], q[self.base.dim:]


def build(S, C, backend=None, probe_points=None):
    """Assemble the enlarged chart and Omega from a validated connection.

    ``probe_points`` (default: none) are checked for frame/kernel dimension
    agreement before building.
    """
    backend = C.backend if backend is None else backend
    base = S.chart
    n = base.dim
    r = C.rank
    if C.chart != base:
        raise EmbeddingError("connection and structure live on different charts")
    for p in probe_points or []:
        sv = np.linalg.svd(S.omega.matrix(p), compute_uv=False)
        smax = sv[0] if sv.size else 0.0
        corank = n - (int(np.sum(sv > S.rank_tol * smax)) if smax > 0 else 0)
        if corank != r:
            raise EmbeddingError(
                f"kernel dimension {corank} at {np.asarray(p)} does not match "
                f"connection rank {r}"
            )

    pred = None
    if base.domain_predicate is not None:
        pred = lambda q: base.domain_predicate(np.asarray(q)[:n])
    enlarged = Chart(n + r, base.coord_names + _mu_names(base, r), pred)

    E = CoisotropicEmbedding(base, enlarged, S, C, backend)

    # cache for the stack of dP^j matrices at a base point (only needed when
    # evaluating away from the zero section)
    dP_cache = {}

    def dP_stack(p):
        key = p.tobytes()
        if key not in dP_cache:
            if len(dP_cache) > 8:
                dP_cache.clear()
            h = backend.h
            partials = np.empty((n, r, n))
            for i in range(n):
                qp = p.copy()
                qp[i] += h
                qm = p.copy()
                qm[i] -= h
                partials[i] = (C.form_rows(qp) - C.form_rows(qm)) / (2.0 * h)
            # dP^j_{ab} = d_a P^j_b - d_b P^j_a
            dP_cache[key] = partials.transpose(1, 0, 2) - partials.transpose(1, 2, 0)
        return dP_cache[key]

    def omega_mat(q):
        q = np.asarray(q, dtype=float)
        p, mu = q[:n], q[n:]
        M = np.zeros((n + r, n + r))
        M[:n, :n] = S.omega.matrix(p)
        if r:
            rows = C.form_rows(p)
            M[:n, n:] -= rows.T
            M[n:, :n] += rows
            if np.any(mu != 0.0):
                M[:n, :n] += np.einsum("j,jab->ab", mu, dP_stack(p))
        return M

    def omega_pair(q, X, Y):
        # scalar evaluation avoiding the dP matrix stack: directional
        # derivatives of the mu-weighted connection forms
        q = np.asarray(q, dtype=float)
        p, mu = q[:n], q[n:]
        Xb, Xm = X[:n], X[n:]
        Yb, Ym = Y[:n], Y[n:]
        val = S.omega(p, Xb, Yb)
        if r:
            rows = C.form_rows(p)
            val += Xm @ (rows @ Yb) - Ym @ (rows @ Xb)
            if np.any(mu != 0.0):
                def muP(v):
                    return lambda pp: mu @ (C.form_rows(pp) @ v)
                val += backend.directional(muP(Yb), p, Xb, base)
                val -= backend.directional(muP(Xb), p, Yb, base)
        return val

    E.Omega = KForm(enlarged, 2, matrix_fn=omega_mat, eval_fn=omega_pair,
                    name="Omega")

    def tso_mat(q):
        M = np.zeros((n + r, n + r))
        M[:n, :n] = S.omega.matrix(np.asarray(q, dtype=float)[:n])
        return M

    def pairing_mat(q):
        M = np.zeros((n + r, n + r))
        if r:
            rows = C.form_rows(np.asarray(q, dtype=float)[:n])
            M[:n, n:] -= rows.T
            M[n:, :n] += rows
        return M

    def alpha_mat(q):
        q = np.asarray(q, dtype=float)
        p, mu = q[:n], q[n:]
        M = np.zeros((n + r, n + r))
        if r and np.any(mu != 0.0):
            M[:n, :n] = np.einsum("j,jab->ab", mu, dP_stack(p))
        return M

    E.tau_star_omega = KForm(enlarged, 2, matrix_fn=tso_mat, name="tau*omega")
    E.pairing_term = KForm(enlarged, 2, matrix_fn=pairing_mat, name="dmu^P")
    E.alpha_term = KForm(enlarged, 2, matrix_fn=alpha_mat, name="mu dP")
    return E


@dataclass
class ClosednessReport:
    residual: float
    per_point: list
    tol: float = None

    @property
    def passed(self):
        return self.tol is None or self.residual < self.tol

    def __bool__(self):
        return self.passed


def certify_closed(E, points, n_triples=4, seed=0, tol=None, form=None):
    """Sup of |dOmega(X, Y, Z)| over points and random unit triples.

    ``form`` defaults to E.Omega; pass E.tau_star_omega + pairing to probe
    the non-closed truncation instead.
    """
    form = E.Omega if form is None else form
    dim = E.enlarged.dim
    rng = np.random.default_rng(seed)
    b = E.backend
    per_point = []
    worst = 0.0
    for q in points:
        q = np.asarray(q, dtype=float)
        local = 0.0
        for _ in range(n_triples):
            vecs = [rng.normal(size=dim) for _ in range(3)]
            vecs = [v / np.linalg.norm(v) for v in vecs]
            total = 0.0
            for m in range(3):
                others = [vecs[i] for i in range(3) if i != m]
                fn = lambda qq, o=others: form(qq, *o)
                total += (-1.0) ** m * b.directional(fn, q, vecs[m], E.enlarged)
            local = max(local, abs(total))
        per_point.append(local)
        worst = max(worst, local)
    return ClosednessReport(worst, per_point, tol)


@dataclass
class CoisotropyReport:
    pullback_residual: float
    mu_bracket_residual: float
    tol: float

    @property
    def passed(self):
        return (self.pullback_residual < self.tol
                and self.mu_bracket_residual < self.tol)

    def __bool__(self):
        return self.passed


def certify_coisotropic(E, Lambda, points, tol=1e-6):
    """Coisotropy of the zero section.

    (a) sigma0^* Omega = omega pointwise; (b) the brackets {mu_j, mu_k}
    vanish on the zero section (the vanishing ideal is closed under the
    bracket), read off as the mu-mu block of Lambda at mu = 0.
    """
    n = E.base.dim
    pull = 0.0
    mubr = 0.0
    for p in points:
        p = np.asarray(p, dtype=float)
        q = E.sigma0(p)
        M = E.Omega.matrix(q)
        pull = max(pull, np.abs(M[:n, :n] - E.S.omega.matrix(p)).max())
        if E.r:
            L = Lambda.matrix(q)
            mubr = max(mubr, np.abs(L[n:, n:]).max())
    return CoisotropyReport(pull, mubr, tol)


@dataclass
class TubularReport:
    mu_bound: float
    profile: list
    degeneracy_tol_log: float


def tubular_radius(E, base_points, mu_samples=6, rho_max=2.0, n_grid=16,
                   seed=0, degeneracy_rtol=1e-10):
    """Conservative nondegeneracy radius in the fiber.

    Scans an increasing rho grid; at each shell, seeded fiber directions of
    norm rho are tested for |det Omega| above the degeneracy floor (relative
    to the mu = 0 scale, via slogdet).  Returns the last fully passing rho;
    infinity when Omega has no fiber dependence (closed connections) or when
    there is no fiber at all.
    """
    r = E.r
    if r == 0:
        E.mu_bound = np.inf
        return TubularReport(np.inf, [], -np.inf)
    base_points = [np.asarray(p, dtype=float) for p in base_points]
    rng = np.random.default_rng(seed)

    # degeneracy floor: determinant may drop at most by degeneracy_rtol
    # relative to its zero-section value at the same base point (a raw
    # scale^dim floor misjudges high-dimensional determinants)
    logdets0 = []
    for p in base_points:
        M = E.Omega.matrix(E.sigma0(p))
        sv = np.linalg.svd(M, compute_uv=False)
        if sv[-1] <= degeneracy_rtol * sv[0]:
            raise DegenerateOmegaError(
                "Omega degenerate on the zero section; connection inconsistent "
                "with omega", cond=sv[0] / max(sv[-1], 1e-300), point=p)
        sign, ld = np.linalg.slogdet(M)
        logdets0.append(ld)
    floor = min(logdets0) + np.log(degeneracy_rtol)

    # fiber-independence: closed case has no mu dependence at all
    probe_mu = rng.normal(size=r)
    probe_mu *= rho_max / max(np.linalg.norm(probe_mu), 1e-300)
    p0 = base_points[0]
    M0 = E.Omega.matrix(E.sigma0(p0))
    M1 = E.Omega.matrix(np.concatenate([p0, probe_mu]))
    if np.abs(M1 - M0).max() <= 1e-13 * max(1.0, np.abs(M0).max()):
        E.mu_bound = np.inf
        return TubularReport(np.inf, [], floor)

    profile = []
    last_pass = 0.0
    for k in range(1, n_grid + 1):
        rho = rho_max * k / n_grid
        worst = np.inf
        ok = True
        for p in base_points:
            for _ in range(mu_samples):
                mu = rng.normal(size=r)
                mu *= rho / np.linalg.norm(mu)
                M = E.Omega.matrix(np.concatenate([p, mu]))
                sign, ld = np.linalg.slogdet(M)
                if sign == 0:
                    ld = -np.inf
                worst = min(worst, ld)
                if ld <= floor:
                    ok = False
        profile.append((rho, worst))
        if not ok:
            break
        last_pass = rho
    E.mu_bound = last_pass
    return TubularReport(last_pass, profile, floor)
