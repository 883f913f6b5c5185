"""Pre-symplectic Hamiltonian systems: primary constraints, stabilization
steps of the constraint algorithm, and bracket-driven time evolution.
"""

from dataclasses import dataclass, field

import numpy as np

from .geom import Chart, DiffBackend, DomainError, KForm, ScalarField, VectorField
from .presympl import PreSymplecticStructure, kernel_basis, smooth_kernel_frame
from .poisson import LAMBDA_SIGN, DegenerateInversionError


class StabilizationError(RuntimeError):
    """The supplied parametrization does not respect the prior constraints."""


@dataclass
class HamiltonianSystem:
    """(omega, H) on a chart, optionally with a preferred kernel frame.

    When ``vertical_frame`` is supplied (model-level kernel fields with
    meaningful labels) the constraint sweep contracts dH against it;
    otherwise an SVD kernel frame is continued over the sample points.
    """

    structure: PreSymplecticStructure
    H: ScalarField
    vertical_frame: list = None
    kernel_labels: list = None
    backend: DiffBackend = field(default_factory=DiffBackend)

    @property
    def chart(self):
        return self.structure.chart


@dataclass
class Constraint:
    label: str
    sup_residual: float
    values: np.ndarray
    fieldfn: object  # point -> residual value

    def __call__(self, p):
        return float(self.fieldfn(np.asarray(p, dtype=float)))


@dataclass
class ConstraintReport:
    constraints: list
    stabilized: bool
    iterations: int
    all_directions: list = None  # (label, sup_residual) incl. the quiet ones
    tol: float = 1e-6


def primary_constraints(sys, points, tol=1e-6):
    """Contract dH against every kernel direction at the sampled points.

    Directions whose residual field exceeds ``tol`` somewhere become
    constraints; the report keeps the residual fields themselves so later
    stabilization steps can re-evaluate them on candidate surfaces.
    """
    points = [np.asarray(p, dtype=float) for p in points]
    if not points:
        raise ValueError("need at least one sample point")
    b = sys.backend

    if sys.vertical_frame is not None:
        frame_fields = list(sys.vertical_frame)
        labels = sys.kernel_labels or [f"ker[{i}]" for i in range(len(frame_fields))]
    else:
        kf = smooth_kernel_frame(sys.structure, points) if len(points) > 1 else None
        rank, basis0 = kernel_basis(sys.structure, points[0])
        r = basis0.shape[1]
        anchor = points[0]

        def make_field(i):
            def ev(p):
                p = np.asarray(p, dtype=float)
                if np.array_equal(p, anchor):
                    return basis0[:, i]
                frame = smooth_kernel_frame(sys.structure, [anchor, p]).frames[-1]
                return frame[:, i]
            return VectorField(sys.chart, ev, name=f"ker[{i}]")

        frame_fields = [make_field(i) for i in range(r)]
        labels = sys.kernel_labels or [f"ker[{i}]" for i in range(r)]

    grads = [b.grad(sys.H, p) for p in points]
    constraints = []
    all_dirs = []
    for i, V in enumerate(frame_fields):
        def residual(p, V=V):
            return float(b.grad(sys.H, p) @ V(p))

        vals = np.array([float(g @ V(p)) for g, p in zip(grads, points)])
        sup = float(np.abs(vals).max()) if vals.size else 0.0
        all_dirs.append((labels[i], sup))
        if sup >= tol:
            constraints.append(Constraint(labels[i], sup, vals, residual))
    return ConstraintReport(constraints, stabilized=(len(constraints) == 0),
                            iterations=0, all_directions=all_dirs, tol=tol)


@dataclass
class Parametrization:
    """User-supplied chart of a constraint surface.

    ``embed`` maps reduced chart points into the ambient chart; an optional
    reduced kernel frame (with labels) guides the next constraint sweep.
    """

    chart: Chart
    embed: object
    vertical_frame: list = None
    kernel_labels: list = None
    name: str = ""


def stabilization_step(sys, parametrization, points, prior=None, tol=1e-6,
                       surface_tol=None, rank_tol=1e-8):
    """One pass of the constraint algorithm through a parametrized surface.

    Pulls omega and H back through the parametrization, recomputes the
    kernel, and re-runs the primary-constraint sweep.  ``prior`` (the
    previous :class:`ConstraintReport`) is evaluated on the embedded points
    first; residuals above ``surface_tol`` mean the parametrization does not
    respect the constraints and raise :class:`StabilizationError`.

    Returns ``(report, reduced_system)`` so steps can be chained.
    """
    surface_tol = tol if surface_tol is None else surface_tol
    points = [np.asarray(p, dtype=float) for p in points]
    b = sys.backend
    emb = parametrization.embed

    if prior is not None:
        for q in points:
            x = emb(q)
            for c in prior.constraints:
                v = abs(c(x))
                if v >= surface_tol:
                    raise StabilizationError(
                        f"parametrized point violates constraint {c.label}: "
                        f"|{v:.3e}| >= {surface_tol:.1e}")

    def omega_red_mat(q):
        q = np.asarray(q, dtype=float)
        J = b.jacobian(lambda x: emb(x), q)
        M = sys.structure.omega.matrix(emb(q))
        return J.T @ M @ J

    omega_red = KForm(parametrization.chart, 2, matrix_fn=omega_red_mat,
                      name="omega_red")
    S_red = PreSymplecticStructure(parametrization.chart, omega_red,
                                   rank_tol=rank_tol)
    H_red = ScalarField(parametrization.chart,
                        lambda q: sys.H.eval(emb(np.asarray(q, dtype=float))),
                        name=f"{sys.H.name}|red")
    red = HamiltonianSystem(S_red, H_red,
                            vertical_frame=parametrization.vertical_frame,
                            kernel_labels=parametrization.kernel_labels,
                            backend=b)
    report = primary_constraints(red, points, tol=tol)
    report.iterations = (prior.iterations + 1) if prior is not None else 1
    return report, red


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    energies: np.ndarray

    @property
    def energy_drift(self):
        return float(np.abs(self.energies - self.energies[0]).max())


def solve_dynamics(source, p0, t_end, dt, H=None, backend=None,
                   degeneracy_rtol=1e-10):
    """Classical fixed-step RK4 on the bracket flow xdot = Lambda dH.

    ``source`` is either a PoissonStructure (H required) or a
    HamiltonianSystem, in which case Lambda = -omega^{-1} is formed
    pointwise and a degenerate omega along the trajectory raises
    :class:`DegenerateInversionError` carrying the exit point.
    """
    from .poisson import PoissonStructure

    if isinstance(source, PoissonStructure):
        if H is None:
            raise ValueError("PoissonStructure dynamics needs H")
        chart = source.chart
        b = source.backend if backend is None else backend
        lam = source.Lambda.matrix
    else:
        sys = source
        chart = sys.chart
        b = sys.backend if backend is None else backend
        H = sys.H if H is None else H

        def lam(q):
            M = sys.structure.omega.matrix(q)
            sv = np.linalg.svd(M, compute_uv=False)
            if sv[-1] <= degeneracy_rtol * sv[0]:
                raise DegenerateInversionError(
                    f"omega degenerate along trajectory at {q}",
                    sv[0] / max(sv[-1], 1e-300))
            return LAMBDA_SIGN * np.linalg.inv(M)

    def rhs(q):
        return lam(q) @ b.grad(H, q)

    n_steps = int(round(t_end / dt))
    p = np.asarray(p0, dtype=float).copy()
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, p.size))
    energies = np.empty(n_steps + 1)
    times[0], states[0], energies[0] = 0.0, p, H.eval(p)
    for k in range(n_steps):
        try:
            k1 = rhs(p)
            k2 = rhs(p + 0.5 * dt * k1)
            k3 = rhs(p + 0.5 * dt * k2)
            k4 = rhs(p + dt * k3)
        except DegenerateInversionError as exc:
            raise DegenerateInversionError(
                f"trajectory aborted at t={k * dt:.6g}: {exc}", exc.cond)
        p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        times[k + 1] = (k + 1) * dt
        states[k + 1] = p
        energies[k + 1] = H.eval(p)
    return Trajectory(times, states, energies)
