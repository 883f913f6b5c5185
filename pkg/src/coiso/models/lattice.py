"""Lattice gauge models: electrodynamics and Yang-Mills at desk scale.

Fields live on a periodic grid (n1, n2, n3) with N sites and a Lie algebra
of dimension L (L = 1 with zero structure constants for electrodynamics).
Site scalars are shaped (L, N), link fields (3, L, N); the discrete
covariant operators are

    (grad psi)^a_k(x)   = psi^a(x + e_k) - psi^a(x) + eps_abc psi^b(x) a^c_k(x)
    (div* p)_b(x)       = exact adjoint of grad (summation by parts holds
                          to machine precision on the periodic grid)
    laplacian(a)        = div* grad, symmetric positive semidefinite

with the Green solver inverting on the orthogonal complement of the
structural zero modes (the L constant scalars in the abelian case; none at
an irreducible connection).

The physical phase space is the Gauss-law surface {div*(a) p = 0}.  Its
chart is (a, c): all a components plus the coefficients c of p in a
smoothly continued orthonormal null-space basis B(a) of div*(a), obtained
by polar-projecting a reference basis (so p = B(a) c satisfies the
constraint identically).  The pre-symplectic form is the pullback of the
canonical pairing sum_x da ^ dp; at c = 0 it is exactly degenerate along
the gauge directions (grad psi, 0).

The connection is the Coulomb one: P^j(X) = <Q_j, laplacian^+ div* X_a>,
vertical frame V_j = (grad Q_j, [p, Q_j]-part), with Q an orthonormal basis
of gauge parameters.  Its forms are a-dependent through the Green function,
which is what makes the non-Abelian model CURVED while the abelian model
is CLOSED (constant forms).

Energy-sign note: the slice Hamiltonian is taken literally from the
covariant normalization (momenta conjugate to the field strength), so the
magnetic term enters the reduced Hamiltonian with a minus sign; none of
the constraint or bracket checks depend on that overall normalization.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..geom import Chart, DiffBackend, KForm, ScalarField, VectorField
from ..presympl import PreSymplecticStructure
from ..connection import Connection
from ..dynamics import HamiltonianSystem, Parametrization

PAIRS = ((0, 1), (0, 2), (1, 2))


class GreenSolveError(RuntimeError):
    """Covariant Laplacian singular beyond its structural zero modes.

    Raised for reducible configurations; perturb the connection sample.
    """


def _names(prefix, *dims):
    out = []
    for idx in np.ndindex(*dims):
        out.append(prefix + "_" + "_".join(str(i) for i in idx))
    return out


class LatticeGaugeModel:
    def __init__(self, grid, structure_constants=None, backend=None,
                 a_ref=None, name=""):
        self.grid = tuple(int(g) for g in grid)
        if len(self.grid) != 3 or any(g < 2 for g in self.grid):
            raise ValueError("grid must be three factors, each >= 2")
        eps = np.zeros((1, 1, 1)) if structure_constants is None \
            else np.asarray(structure_constants, dtype=float)
        if eps.ndim != 3 or len(set(eps.shape)) != 1:
            raise ValueError("structure constants must be a cubic array")
        if np.abs(eps + eps.transpose(1, 0, 2)).max() > 1e-14 or \
           np.abs(eps + eps.transpose(0, 2, 1)).max() > 1e-14:
            raise ValueError("structure constants must be totally antisymmetric")
        self.eps = eps
        self.L = eps.shape[0]
        self.N = int(np.prod(self.grid))
        self.abelian = bool(np.abs(eps).max() == 0.0)
        self.backend = DiffBackend() if backend is None else backend
        self.name = name or ("lattice-ed" if self.abelian else "lattice-ym")

        # shift tables
        idx = np.arange(self.N).reshape(self.grid)
        self._ip = [np.roll(idx, -1, axis=k).ravel() for k in range(3)]
        self._im = [np.roll(idx, +1, axis=k).ravel() for k in range(3)]

        self.na = 3 * self.L * self.N
        self.n_zero_modes = self.L if self.abelian else 0

        self.a_ref = np.zeros((3, self.L, self.N)) if a_ref is None \
            else np.asarray(a_ref, dtype=float).reshape(3, self.L, self.N)
        if not self.abelian and np.abs(self.a_ref).max() == 0.0:
            raise ValueError("non-Abelian model needs an irreducible a_ref")

        nab_ref = self.nabla_mat(self.a_ref)
        # gauge-parameter basis: complement of the structural zero modes
        w, V = np.linalg.eigh(nab_ref.T @ nab_ref)
        nz = self.n_zero_modes
        if nz and w[nz - 1] > 1e-10 * max(w[-1], 1.0):
            raise GreenSolveError("expected structural zero modes not found")
        if w[nz] < 1e-8 * max(w[-1], 1.0):
            raise GreenSolveError(
                "reference laplacian singular beyond structural zero modes; "
                "perturb a_ref")
        self.Q = V[:, nz:]                      # (LN, r)
        self.r = self.Q.shape[1]
        # reference null basis of div*(a_ref): complement of range(grad)
        u, sv, _ = np.linalg.svd(nab_ref, full_matrices=True)
        rank = self.L * self.N - nz
        self.B0 = u[:, rank:]                   # (3LN, nc)
        self.nc = self.B0.shape[1]

        self._b_cache = {}
        self._p_rows_cache = {}

        self.chart = Chart(
            self.na + self.nc,
            tuple(_names("a", 3, self.L, self.N)
                  + [f"c_{i}" for i in range(self.nc)]))
        self.structure = PreSymplecticStructure(
            self.chart, KForm(self.chart, 2, matrix_fn=self._omega_mat,
                              eval_fn=self._omega_pair, name="omega"),
            name=self.name)
        self.connection = self._build_connection()
        self.slice_chart = Chart(
            10 * self.L * self.N,
            tuple(_names("a0", self.L, self.N) + _names("a", 3, self.L, self.N)
                  + _names("p", 3, self.L, self.N)
                  + [f"b_{j}{k}_{l}_{x}" for (j, k) in PAIRS
                     for l in range(self.L) for x in range(self.N)]))
        self.slice_system = self._build_slice_system()
        self.surface_system = self._build_surface_system()
        self.observables = self._registry()

    # -- shaped lattice operators ----------------------------------------

    def shift_plus(self, f, k):
        return f[..., self._ip[k]]

    def shift_minus(self, f, k):
        return f[..., self._im[k]]

    def dgrad(self, psi):
        """Forward-difference gradient of a site scalar, (L,N) -> (3,L,N)."""
        return np.stack([self.shift_plus(psi, k) - psi for k in range(3)])

    def dgrad_t(self, v):
        """Adjoint of dgrad (negative discrete divergence)."""
        return sum(self.shift_minus(v[k], k) - v[k] for k in range(3))

    def nabla(self, a, psi):
        out = self.dgrad(psi)
        if not self.abelian:
            out += np.einsum("abc,bx,kcx->kax", self.eps, psi, a)
        return out

    def nabla_star(self, a, v):
        out = self.dgrad_t(v)
        if not self.abelian:
            out += np.einsum("abc,kcx,kax->bx", self.eps, a, v)
        return out

    def commutator(self, v, psi):
        """[v^k, psi]_a = eps_abc v^k_b psi^c, pointwise."""
        if self.abelian:
            return np.zeros_like(v)
        return np.einsum("abc,kbx,cx->kax", self.eps, v, psi)

    def fcurl(self, a):
        """Field strength F^{jk}_a = (D_j a_k - D_k a_j + eps a_j a_k)/2, j<k."""
        out = np.empty((3, self.L, self.N))
        for i, (j, k) in enumerate(PAIRS):
            term = (self.shift_plus(a[k], j) - a[k]
                    - (self.shift_plus(a[j], k) - a[j]))
            if not self.abelian:
                term = term + np.einsum("abc,bx,cx->ax", self.eps, a[j], a[k])
            out[i] = 0.5 * term
        return out

    def fcurl_adjoint(self, a, b):
        """Adjoint of the linearization of fcurl at a, applied to b."""
        out = np.zeros((3, self.L, self.N))
        for i, (j, k) in enumerate(PAIRS):
            w = b[i]
            out[k] += 0.5 * (self.shift_minus(w, j) - w)
            out[j] -= 0.5 * (self.shift_minus(w, k) - w)
            if not self.abelian:
                out[j] += 0.5 * np.einsum("abc,ax,cx->bx", self.eps, w, a[k])
                out[k] += 0.5 * np.einsum("abc,ax,bx->cx", self.eps, w, a[j])
        return out

    # -- dense operators and Green solver ---------------------------------

    def nabla_mat(self, a):
        """Dense (3LN, LN) matrix of the covariant gradient at a."""
        LN = self.L * self.N
        cols = np.empty((LN, 3 * self.L * self.N))
        basis = np.eye(LN)
        for i in range(LN):
            cols[i] = self.nabla(a, basis[i].reshape(self.L, self.N)).ravel()
        return cols.T

    def green(self, a):
        """Eigendecomposition of laplacian(a) with zero-mode bookkeeping."""
        nab = self.nabla_mat(a)
        delta = nab.T @ nab
        w, V = np.linalg.eigh(delta)
        nz = self.n_zero_modes
        if w[nz] < 1e-8 * max(w[-1], 1.0):
            raise GreenSolveError(
                "laplacian singular beyond structural zero modes at this "
                "configuration; perturb a")
        inv = np.zeros_like(w)
        inv[nz:] = 1.0 / w[nz:]
        return nab, V, inv

    def green_apply(self, green, rhs):
        """laplacian^+ rhs on the zero-mode complement; rhs (LN,) or (LN, m)."""
        _, V, inv = green
        if rhs.ndim == 2:
            return V @ (inv[:, None] * (V.T @ rhs))
        return V @ (inv * (V.T @ rhs))

    # -- constraint-surface chart -----------------------------------------

    def split(self, q):
        q = np.asarray(q, dtype=float)
        return (q[:self.na].reshape(3, self.L, self.N), q[self.na:])

    def join(self, a, c):
        return np.concatenate([np.ravel(a), np.ravel(c)])

    def b_basis(self, a):
        """Continued orthonormal null basis B(a) of div*(a), (3LN, nc)."""
        if self.abelian:
            return self.B0
        a = np.asarray(a, dtype=float).reshape(3, self.L, self.N)
        key = a.tobytes()
        hit = self._b_cache.get(key)
        if hit is not None:
            return hit
        green = self.green(a)
        nab = green[0]
        M = self.B0 - nab @ self.green_apply(green, nab.T @ self.B0)
        u, sv, vt = np.linalg.svd(M, full_matrices=False)
        if sv[-1] < 1e-8:
            raise GreenSolveError(
                "null-space continuation from the reference basis lost rank")
        B = u @ vt
        if len(self._b_cache) > 64:
            self._b_cache.clear()
        self._b_cache[key] = B
        return B

    def momentum(self, q):
        """The p field (3, L, N) at a chart point."""
        a, c = self.split(q)
        return (self.b_basis(a) @ c).reshape(3, self.L, self.N)

    def gauss_residual_surface(self, q):
        a, _ = self.split(q)
        return float(np.abs(self.nabla_star(a, self.momentum(q))).max())

    def _db_directional(self, a, c, da):
        """(d B(a)[da]) c by central differences through the continuation."""
        if self.abelian:
            return np.zeros(self.na)
        h = self.backend.h
        af = np.ravel(a)
        bp = self.b_basis((af + h * np.ravel(da)).reshape(3, self.L, self.N))
        bm = self.b_basis((af - h * np.ravel(da)).reshape(3, self.L, self.N))
        return (bp - bm) @ c / (2.0 * h)

    def _omega_pair(self, q, X, Y):
        a, c = self.split(q)
        B = self.b_basis(a)
        Xa, Xc = X[:self.na], X[self.na:]
        Ya, Yc = Y[:self.na], Y[self.na:]
        val = Xa @ (B @ Yc) - (B @ Xc) @ Ya
        if not self.abelian and np.any(c != 0.0):
            val += Xa @ self._db_directional(a, c, Ya)
            val -= self._db_directional(a, c, Xa) @ Ya
        return val

    def _omega_mat(self, q):
        a, c = self.split(q)
        B = self.b_basis(a)
        dim = self.chart.dim
        M = np.zeros((dim, dim))
        M[:self.na, self.na:] = B
        M[self.na:, :self.na] = -B.T
        if not self.abelian and np.any(c != 0.0):
            G = np.empty((self.na, self.na))
            eye = np.eye(self.na)
            for i in range(self.na):
                G[:, i] = self._db_directional(a, c, eye[i])
            M[:self.na, :self.na] = G - G.T
        return M

    # -- Coulomb connection -------------------------------------------------

    def _p_rows(self, a):
        """Stacked connection-form components, (r, dim): Q^T lap^+ div*."""
        a = np.asarray(a, dtype=float).reshape(3, self.L, self.N)
        key = a.tobytes()
        hit = self._p_rows_cache.get(key)
        if hit is not None:
            return hit
        green = self.green(a)
        nab = green[0]
        rows = np.zeros((self.r, self.chart.dim))
        rows[:, :self.na] = self.Q.T @ self.green_apply(green, nab.T)
        if len(self._p_rows_cache) > 64:
            self._p_rows_cache.clear()
        self._p_rows_cache[key] = rows
        return rows

    def gauge_kernel_field(self, psi):
        """The gauge direction (grad psi, [p, psi]) as a chart vector field.

        The momentum component is the chart projection of the pointwise
        commutator; at p = 0 (and everywhere in the abelian model) the
        field is exactly in the kernel of the surface 2-form.
        """
        psi = np.asarray(psi, dtype=float).reshape(self.L, self.N)

        def ev(q):
            a, c = self.split(q)
            da = self.nabla(a, psi).ravel()
            if np.any(c != 0.0):
                comm = self.commutator(self.momentum(q), psi).ravel()
                dc = self.b_basis(a).T @ (comm - self._db_directional(a, c, da))
            else:
                dc = np.zeros(self.nc)
            return np.concatenate([da, dc])

        return VectorField(self.chart, ev, name="X_gauge")

    def _build_connection(self):
        fields = []
        forms = []
        for j in range(self.r):
            vf = self.gauge_kernel_field(self.Q[:, j])
            vf.name = f"V{j}"
            fields.append(vf)

            def comps(q, j=j):
                a, _ = self.split(q)
                return self._p_rows(a)[j]

            forms.append(KForm(self.chart, 1, components_fn=comps, name=f"P{j}"))
        return Connection(self.chart, fields, forms, self.backend)

    # -- Hamiltonians --------------------------------------------------------

    def split_slice(self, q):
        q = np.asarray(q, dtype=float)
        LN = self.L * self.N
        a0 = q[:LN].reshape(self.L, self.N)
        a = q[LN:4 * LN].reshape(3, self.L, self.N)
        p = q[4 * LN:7 * LN].reshape(3, self.L, self.N)
        beta = q[7 * LN:].reshape(3, self.L, self.N)
        return a0, a, p, beta

    def join_slice(self, a0, a, p, beta):
        return np.concatenate([np.ravel(a0), np.ravel(a),
                               np.ravel(p), np.ravel(beta)])

    def slice_hamiltonian(self, q):
        a0, a, p, beta = self.split_slice(q)
        F = self.fcurl(a)
        return float(0.5 * np.sum(p * p) + 0.5 * np.sum(beta * beta)
                     + np.sum(p * self.nabla(a, a0)) + np.sum(beta * F))

    def slice_hamiltonian_grad(self, q):
        a0, a, p, beta = self.split_slice(q)
        F = self.fcurl(a)
        g_a0 = self.nabla_star(a, p)
        g_p = p + self.nabla(a, a0)
        g_beta = beta + F
        g_a = self.fcurl_adjoint(a, beta)
        if not self.abelian:
            g_a += np.einsum("abc,bx,kax->kcx", self.eps, a0, p)
        return self.join_slice(g_a0, g_a, g_p, g_beta)

    def _build_slice_system(self):
        LN = self.L * self.N
        dim = 10 * LN

        def omega_slice(q):
            M = np.zeros((dim, dim))
            ia = slice(LN, 4 * LN)
            ip = slice(4 * LN, 7 * LN)
            M[ia, ip] = np.eye(3 * LN)
            M[ip, ia] = -np.eye(3 * LN)
            return M

        S = PreSymplecticStructure(
            self.slice_chart,
            KForm(self.slice_chart, 2, matrix_fn=omega_slice,
                  name="omega_slice"),
            name=f"{self.name}-slice")
        H = ScalarField(self.slice_chart, self.slice_hamiltonian,
                        exact_gradient=self.slice_hamiltonian_grad, name="H")

        frame = []
        labels = []
        eye = np.eye(dim)
        for l in range(self.L):
            for x in range(self.N):
                i = l * self.N + x
                frame.append(VectorField(self.slice_chart,
                                         (lambda q, e=eye[i]: e),
                                         name=f"d/da0[{l},{x}]"))
                labels.append(f"a0[{l},{x}]")
        for i, (j, k) in enumerate(PAIRS):
            for l in range(self.L):
                for x in range(self.N):
                    idx = 7 * LN + (i * self.L + l) * self.N + x
                    frame.append(VectorField(self.slice_chart,
                                             (lambda q, e=eye[idx]: e),
                                             name=f"d/dbeta[{j}{k},{l},{x}]"))
                    labels.append(f"beta[{j}{k},{l},{x}]")
        return HamiltonianSystem(S, H, vertical_frame=frame,
                                 kernel_labels=labels, backend=self.backend)

    def surface_hamiltonian(self, q):
        a, c = self.split(q)
        F = self.fcurl(a)
        return float(0.5 * (c @ c) - 0.5 * np.sum(F * F))

    def surface_hamiltonian_grad(self, q):
        a, c = self.split(q)
        F = self.fcurl(a)
        g_a = -self.fcurl_adjoint(a, F)
        return np.concatenate([np.ravel(g_a), c])

    def _build_surface_system(self):
        H = ScalarField(self.chart, self.surface_hamiltonian,
                        exact_gradient=self.surface_hamiltonian_grad,
                        name="H_inf")
        fields = list(self.connection.vertical_frame)
        labels = [f"gauge[{j}]" for j in range(self.r)]
        return HamiltonianSystem(self.structure, H, vertical_frame=fields,
                                 kernel_labels=labels, backend=self.backend)

    def pca_parametrization(self):
        """Chart of the first constraint manifold inside the slice space.

        (a0, a, c) -> (a0, a, p = B(a) c, beta = -F(a)); the kernel frame of
        the reduced structure is the a0 directions plus the gauge fields.
        """
        LN = self.L * self.N
        red_chart = Chart(
            LN + self.na + self.nc,
            tuple(_names("a0", self.L, self.N)
                  + _names("a", 3, self.L, self.N)
                  + [f"c_{i}" for i in range(self.nc)]))

        def embed(qr):
            qr = np.asarray(qr, dtype=float)
            a0 = qr[:LN]
            a = qr[LN:LN + self.na].reshape(3, self.L, self.N)
            c = qr[LN + self.na:]
            p = self.b_basis(a) @ c
            beta = -self.fcurl(a)
            return np.concatenate([a0, np.ravel(a), p, np.ravel(beta)])

        frame = []
        labels = []
        eye = np.eye(red_chart.dim)
        for l in range(self.L):
            for x in range(self.N):
                i = l * self.N + x
                frame.append(VectorField(red_chart, (lambda q, e=eye[i]: e),
                                         name=f"d/da0[{l},{x}]"))
                labels.append(f"a0[{l},{x}]")
        for j in range(self.r):
            psi = self.Q[:, j].reshape(self.L, self.N)

            def ev(qr, psi=psi):
                qr = np.asarray(qr, dtype=float)
                sub = np.concatenate([qr[LN:LN + self.na], qr[LN + self.na:]])
                v = self.gauge_kernel_field(psi)(sub)
                return np.concatenate([np.zeros(LN), v])

            frame.append(VectorField(red_chart, ev, name=f"X_gauge[{j}]"))
            labels.append(f"gauge[{j}]")
        return Parametrization(red_chart, embed, vertical_frame=frame,
                               kernel_labels=labels, name="gauss-surface")

    # -- reference evaluators for constraint matching -----------------------

    def gauss_law(self, q):
        """div*(a) p at a slice point, the a0-direction constraint."""
        _, a, p, _ = self.split_slice(q)
        return self.nabla_star(a, p)

    def beta_elimination(self, q):
        """beta + F(a) at a slice point, the beta-direction constraint."""
        _, a, _, beta = self.split_slice(q)
        return beta + self.fcurl(a)

    # -- observables ---------------------------------------------------------

    def a_index(self, k, l, x, y, z):
        site = int(np.ravel_multi_index((x, y, z), self.grid))
        return (int(k) * self.L + int(l)) * self.N + site

    def a_observable(self, k, l, x, y, z):
        i = self.a_index(k, l, x, y, z)
        e = np.zeros(self.chart.dim)
        e[i] = 1.0
        return ScalarField(self.chart, lambda q: float(q[i]),
                           exact_gradient=lambda q, e=e: e,
                           name=f"a({k},{l},{x},{y},{z})")

    def p_observable(self, k, l, x, y, z):
        i = self.a_index(k, l, x, y, z)

        def ev(q):
            return float(self.momentum(q).ravel()[i])

        grad = None
        if self.abelian:
            g = np.zeros(self.chart.dim)
            g[self.na:] = self.B0[i]

            def grad(q, g=g):
                return g

        return ScalarField(self.chart, ev, exact_gradient=grad,
                           name=f"p({k},{l},{x},{y},{z})")

    def _registry(self):
        def a_acc(*args):
            return self.a_observable(*self._acc_args(args))

        def p_acc(*args):
            return self.p_observable(*self._acc_args(args))

        return {"a": a_acc, "p": p_acc}

    def _acc_args(self, args):
        args = [int(v) for v in args]
        if self.L == 1:
            if len(args) != 4:
                raise ValueError("abelian accessors take (k, x, y, z), 1-based k")
            k, x, y, z = args
            l = 1
        else:
            if len(args) != 5:
                raise ValueError("accessors take (k, lie, x, y, z), 1-based k/lie")
            k, l, x, y, z = args
        return k - 1, l - 1, x, y, z

    # -- oracle targets -------------------------------------------------------

    def transverse_projector(self):
        """B0 B0^T at the reference point; for the abelian model this is the
        projected-bracket matrix 1 - D lap^+ D^T."""
        return self.B0 @ self.B0.T

    # -- samplers -------------------------------------------------------------

    def sample_surface(self, count, seed, a_scale=1.0, c_scale=1.0,
                       around_ref=False, noise=1e-3):
        """Seeded chart points.

        The abelian model draws a and c at unit scale.  Non-Abelian sweeps
        default to the neighborhood of the irreducible reference
        configuration with small seeded noise; certification sweeps keep
        c_scale = 0, where the lattice preserves the continuum degeneracy
        structure exactly.
        """
        rng = np.random.default_rng(seed)
        pts = []
        for _ in range(count):
            if around_ref:
                a = self.a_ref + noise * rng.normal(size=(3, self.L, self.N))
            else:
                a = a_scale * rng.normal(size=(3, self.L, self.N))
            c = c_scale * rng.normal(size=self.nc) if c_scale else np.zeros(self.nc)
            pts.append(self.join(a, c))
        return pts

    def sample_slice(self, count, seed, scale=1.0):
        rng = np.random.default_rng(seed)
        dim = self.slice_chart.dim
        return [scale * rng.normal(size=dim) for _ in range(count)]


def default_su2_ref(grid, amp=0.9, seed=12):
    """Constant, maximally non-commuting su(2) reference configuration.

    Constant fields keep forward differences of the background zero (the
    lattice breaking of gauge covariance stays at noise level) while the
    three link directions exciting different algebra axes keep the
    covariant Laplacian safely away from the reducible locus.
    """
    N = int(np.prod(grid))
    rng = np.random.default_rng(seed)
    basis = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    a = np.zeros((3, 3, N))
    for k in range(3):
        a[k, :, :] = amp * basis[:, k][:, None]
    return a


def su2_structure_constants():
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = eps[j, k, i] = eps[k, i, j] = 1.0
        eps[j, i, k] = eps[i, k, j] = eps[k, j, i] = -1.0
    return eps


def build_lattice_ed(grid, backend=None):
    """Electrodynamics: the abelian model; (structure, connection, model)."""
    model = LatticeGaugeModel(grid, None, backend=backend, name="lattice-ed")
    return model.structure, model.connection, model


def build_lattice_ym(grid, structure_constants=None, backend=None,
                     a_ref=None, ref_amp=0.9, ref_seed=12):
    """Yang-Mills on the Gauss-law surface.

    Returns (structure, connection, system, model); zero structure
    constants reduce to the electrodynamics behavior.
    """
    eps = su2_structure_constants() if structure_constants is None \
        else np.asarray(structure_constants, dtype=float)
    if np.abs(eps).max() == 0.0:
        model = LatticeGaugeModel(grid, eps, backend=backend, name="lattice-ym")
        return model.structure, model.connection, model.surface_system, model
    if a_ref is None:
        if eps.shape[0] != 3:
            raise ValueError("default reference configuration is su(2) only")
        a_ref = default_su2_ref(grid, amp=ref_amp, seed=ref_seed)
    model = LatticeGaugeModel(grid, eps, backend=backend, a_ref=a_ref,
                              name="lattice-ym")
    return model.structure, model.connection, model.surface_system, model
