"""Magnetic-monopole model on the constrained cotangent bundle of SU(2).

The base chart is (s1, s2, s3, alpha1, alpha2): exponential coordinates on
the group plus two momentum coordinates, sitting on the surface where the
third momentum component is frozen at n.  The pre-symplectic form is the
pullback of the canonical structure,

    omega = (d a1 - a2 th3) ^ th1 + (d a2 + a1 th3) ^ th2 - n th1 ^ th2,

its kernel is spanned by the projected lift Xbar3 of the third invariant
field, and the connection is P = th3 (x) Xbar3.

Conventions.  The source material for this construction is ambiguous about
the orientation of the invariant (co)frames (its two structure-equation
statements differ by a sign), so the conventions here are pinned
empirically and self-tested at build time:

* the coframe th_j is the group coframe satisfying the derived structure
  equation d th^j = -(1/2) eps_{jkl} th^k ^ th^l (numerically this is the
  negated right-invariant coframe of :mod:`coiso.su2`, i.e. the
  left-invariant coframe of the inverse trivialization);
* with the package-wide bracket orientation (Lambda = -Omega^{-1}), the
  conserved currents of the lifted group action,

      J_k = beta_k - n th3^k = -(R(s)^T (a1, a2, n))_k,
      beta_k = -(R(s)^T (a1, a2, 0))_k,   th3^k = R(s)[3, k],

  with R(s) = Ad(exp(s)) the Rodrigues rotation, close exactly in the
  anomalous algebra {J~_j, J~_k} = eps_{jkl} (J~_l + mu th3^l) on the
  enlarged chart.  This is asserted to 1e-8 by the test suite.

The optional dynamics factor T*R+ adds (r, p_r) in front and the
Hamiltonian H = (p_r^2 + (a1^2 + a2^2)/r^2)/2.
"""

from dataclasses import dataclass, field

import numpy as np

from .. import su2
from ..geom import Chart, DiffBackend, KForm, ScalarField, VectorField
from ..presympl import PreSymplecticStructure
from ..connection import Connection
from ..dynamics import HamiltonianSystem


def _wedge_mat(u, v):
    return np.outer(u, v) - np.outer(v, u)


@dataclass
class MonopoleModel:
    n: float = 1.0
    s_margin: float = 0.2
    r_min: float = 0.2
    backend: DiffBackend = field(default_factory=DiffBackend)

    def __post_init__(self):
        smax = np.pi - self.s_margin

        def base_pred(p):
            return np.linalg.norm(p[:3]) < smax

        def sys_pred(p):
            return p[0] > self.r_min and np.linalg.norm(p[2:5]) < smax

        self.chart = Chart(5, ("s1", "s2", "s3", "alpha1", "alpha2"), base_pred)
        self.sys_chart = Chart(
            7, ("r", "p_r", "s1", "s2", "s3", "alpha1", "alpha2"), sys_pred)
        self.structure = PreSymplecticStructure(
            self.chart, KForm(self.chart, 2, matrix_fn=self._omega_mat,
                              name="omega"), name="monopole")
        self.kernel_field = VectorField(self.chart, self._xbar3, name="Xbar3")
        self.theta3_form = KForm(self.chart, 1, components_fn=self._theta3_comps,
                                 name="theta3")
        self.connection = Connection(self.chart, [self.kernel_field],
                                     [self.theta3_form], self.backend)
        self.system = self._build_system()
        self.mc_sign = self._maurer_cartan_self_test()
        self.observables = self._registry()

    # frames ------------------------------------------------------------

    def coframe_rows(self, s):
        """Rows th_j in ds components (3 x 3), derived-sign convention."""
        return -su2.right_coframe(s)

    def frame_cols(self, s):
        """Columns of the frame dual to the coframe."""
        return -su2.right_frame(s)

    def _theta_rows(self, s):
        rows = np.zeros((3, 5))
        rows[:, :3] = self.coframe_rows(s)
        return rows

    def _theta3_comps(self, p):
        return self._theta_rows(np.asarray(p)[:3])[2]

    def _xbar3(self, p):
        """Kernel generator: lift of the third frame field to the surface.

        Chart components (frame_3(s), alpha2, -alpha1); th3(Xbar3) = 1."""
        p = np.asarray(p, dtype=float)
        out = np.zeros(5)
        out[:3] = self.frame_cols(p[:3])[:, 2]
        out[3] = p[4]
        out[4] = -p[3]
        return out

    def adjoint(self, s):
        """R(s) = Ad(exp(s)), the rotation relating frames and momenta."""
        return su2.rodrigues(s)

    def opposite_lift(self, j):
        """Lift of the opposite-invariance frame field (zero momentum part)."""
        def ev(p, j=j):
            out = np.zeros(5)
            out[:3] = su2.left_frame(np.asarray(p)[:3])[:, j]
            return out
        return VectorField(self.chart, ev, name=f"Ybar{j + 1}")

    def z_field(self, j):
        """Z_j: opposite lift minus its vertical component, spans W with B."""
        Y = self.opposite_lift(j)

        def ev(p, j=j):
            p = np.asarray(p, dtype=float)
            y = Y(p)
            th3 = self._theta_rows(p[:3])[2]
            return y - float(th3 @ y) * self._xbar3(p)
        return VectorField(self.chart, ev, name=f"Z{j + 1}")

    def b_field(self, j):
        """B_j: momentum-space frame direction, projected to the chart."""
        def ev(p, j=j):
            A = -self.adjoint(np.asarray(p)[:3])
            out = np.zeros(5)
            out[3] = A[0, j]
            out[4] = A[1, j]
            return out
        return VectorField(self.chart, ev, name=f"B{j + 1}")

    def theta3_l(self, l):
        """The group function th3^l = R(s)[3, l]."""
        def ev(p, l=l):
            return self.adjoint(np.asarray(p)[:3])[2, l]
        return ScalarField(self.chart, ev, name=f"theta3_{l + 1}")

    # structures ----------------------------------------------------------

    def _omega_mat(self, p):
        p = np.asarray(p, dtype=float)
        a1, a2 = p[3], p[4]
        th = self._theta_rows(p[:3])
        da1 = np.zeros(5)
        da1[3] = 1.0
        da2 = np.zeros(5)
        da2[4] = 1.0
        return (_wedge_mat(da1 - a2 * th[2], th[0])
                + _wedge_mat(da2 + a1 * th[2], th[1])
                - self.n * _wedge_mat(th[0], th[1]))

    def _build_system(self):
        def omega_sys(p):
            p = np.asarray(p, dtype=float)
            M = np.zeros((7, 7))
            M[1, 0] = 1.0   # dp_r ^ dr
            M[0, 1] = -1.0
            M[2:, 2:] = self._omega_mat(p[2:])
            return M

        S = PreSymplecticStructure(
            self.sys_chart, KForm(self.sys_chart, 2, matrix_fn=omega_sys,
                                  name="omega_sys"), name="monopole-sys")

        def h_eval(p):
            r, pr, a1, a2 = p[0], p[1], p[5], p[6]
            return 0.5 * (pr**2 + (a1**2 + a2**2) / r**2)

        def h_grad(p):
            r, pr, a1, a2 = p[0], p[1], p[5], p[6]
            g = np.zeros(7)
            g[0] = -(a1**2 + a2**2) / r**3
            g[1] = pr
            g[5] = a1 / r**2
            g[6] = a2 / r**2
            return g

        H = ScalarField(self.sys_chart, h_eval, exact_gradient=h_grad, name="H")

        def xbar3_sys(p):
            out = np.zeros(7)
            out[2:] = self._xbar3(np.asarray(p)[2:])
            return out

        frame = [VectorField(self.sys_chart, xbar3_sys, name="Xbar3")]
        return HamiltonianSystem(S, H, vertical_frame=frame,
                                 kernel_labels=["Xbar3"], backend=self.backend)

    def sys_connection(self):
        def th3(p):
            out = np.zeros(7)
            out[2:] = self._theta3_comps(np.asarray(p)[2:])
            return out

        return Connection(
            self.sys_chart, self.system.vertical_frame,
            [KForm(self.sys_chart, 1, components_fn=th3, name="theta3")],
            self.backend)

    def _maurer_cartan_self_test(self, tol=1e-6):
        """Derive the structure-equation sign of the model coframe.

        Returns sgn with d th^j = sgn * (1/2) eps_{jkl} th^k ^ th^l; exactly
        one sign must match to ``tol`` or the model refuses to build."""
        rng = np.random.default_rng(7)
        h = self.backend.h
        eps = su2_eps()
        best = {+1.0: 0.0, -1.0: 0.0}
        for _ in range(4):
            s = rng.normal(size=3)
            s *= min(1.0, (np.pi - self.s_margin - 0.3) / np.linalg.norm(s))
            part = np.zeros((3, 3, 3))  # part[a, j, b] = d_a th^j_b
            for a in range(3):
                sp = s.copy()
                sp[a] += h
                sm = s.copy()
                sm[a] -= h
                part[a] = (self.coframe_rows(sp) - self.coframe_rows(sm)) / (2 * h)
            th = self.coframe_rows(s)
            for j in range(3):
                d_th = part[:, j, :]
                d_th = d_th - d_th.T
                target = 0.5 * np.einsum("kl,ka,lb->ab", eps[j], th, th)
                target = target - target.T
                for sgn in (+1.0, -1.0):
                    best[sgn] = max(best[sgn], np.abs(d_th - sgn * target).max())
        if best[-1.0] < tol:
            return -1.0
        if best[+1.0] < tol:
            return +1.0
        raise RuntimeError(
            f"Maurer-Cartan self test matched neither sign: {best}")

    # observables ---------------------------------------------------------

    def current(self, k):
        """Conserved current J_k = beta_k - n th3^k = -(R(s)^T (a1, a2, n))_k."""
        def ev(p, k=k):
            p = np.asarray(p, dtype=float)
            R = self.adjoint(p[:3])
            return -(R[0, k] * p[3] + R[1, k] * p[4] + R[2, k] * self.n)
        return ScalarField(self.chart, ev, name=f"J{k + 1}")

    def beta(self, k):
        """Momentum coordinate beta_k = -(R(s)^T (a1, a2, 0))_k."""
        def ev(p, k=k):
            p = np.asarray(p, dtype=float)
            R = self.adjoint(p[:3])
            return -(R[0, k] * p[3] + R[1, k] * p[4])
        return ScalarField(self.chart, ev, name=f"beta{k + 1}")

    def _registry(self):
        reg = {}
        for k in range(3):
            reg[f"J{k + 1}"] = self.current(k)
            reg[f"beta{k + 1}"] = self.beta(k)
            reg[f"theta3_{k + 1}"] = self.theta3_l(k)
        return reg

    # sampling ------------------------------------------------------------

    def sample_base(self, count, seed, alpha_max=2.0, s_max=None):
        """Seeded base points: s in the safe ball, momenta uniform."""
        rng = np.random.default_rng(seed)
        s_max = (np.pi - self.s_margin - 0.05) if s_max is None else s_max
        pts = []
        for _ in range(count):
            v = rng.normal(size=3)
            v /= np.linalg.norm(v)
            s = v * s_max * rng.uniform(0.05, 1.0) ** (1.0 / 3.0)
            a = rng.uniform(-alpha_max, alpha_max, size=2)
            pts.append(np.concatenate([s, a]))
        return pts

    def sample_enlarged(self, count, seed, mu_max=0.5, alpha_max=2.0):
        rng = np.random.default_rng(seed)
        base = self.sample_base(count, seed + 1, alpha_max=alpha_max)
        return [np.concatenate([p, [rng.uniform(-mu_max, mu_max)]]) for p in base]

    def sample_system(self, count, seed):
        rng = np.random.default_rng(seed)
        base = self.sample_base(count, seed + 1)
        pts = []
        for p in base:
            r = rng.uniform(0.8, 2.0)
            pr = rng.uniform(-1.0, 1.0)
            pts.append(np.concatenate([[r, pr], p]))
        return pts


def su2_eps():
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = eps[j, k, i] = eps[k, i, j] = 1.0
        eps[j, i, k] = eps[i, k, j] = eps[k, j, i] = -1.0
    return eps


def build_monopole(n=1.0, backend=None, **kw):
    """Model builder: (structure, connection, system, (J1, J2, J3), model)."""
    backend = DiffBackend() if backend is None else backend
    model = MonopoleModel(n=n, backend=backend, **kw)
    currents = tuple(model.current(k) for k in range(3))
    return model.structure, model.connection, model.system, currents, model
