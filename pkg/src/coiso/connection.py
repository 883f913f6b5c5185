"""Connections on the characteristic bundle of a pre-symplectic structure.

A connection is the idempotent vertical projector P = sum_j P^j (x) V_j,
with V_j spanning the kernel of omega and P^j the dual 1-forms.  The
curvature trichotomy classifies dP^j:

    CLOSED:  dP^j = 0
    FLAT:    d_H P^j = dP^j((1-P) . , (1-P) . ) = 0 but dP^j != 0
    CURVED:  d_H P^j != 0

Classification is tolerance-based; defaults are 1e-6 for exact-derivative
backends and 1e-3 for finite differences.
"""

from dataclasses import dataclass, field

import numpy as np

from .geom import DiffBackend, KForm, VectorField

CLOSED = "CLOSED"
FLAT = "FLAT"
CURVED = "CURVED"


class ConnectionValidationError(RuntimeError):
    """A connection check exceeded tolerance; carries structured failures."""

    def __init__(self, failures):
        self.failures = failures
        lines = [
            f"{check} at {np.asarray(point)}: residual {res:.3e}"
            for (check, point, res) in failures[:4]
        ]
        more = "" if len(failures) <= 4 else f" (+{len(failures) - 4} more)"
        super().__init__("connection validation failed: " + "; ".join(lines) + more)


def default_classification_tol(backend):
    return 1e-6 if backend.mode == "user_exact" else 1e-3


@dataclass
class Connection:
    """P = sum_j P^j (x) V_j as vertical frame fields plus dual 1-forms."""

    chart: object
    vertical_frame: list
    p_forms: list
    backend: DiffBackend = field(default_factory=DiffBackend)
    name: str = ""

    def __post_init__(self):
        if len(self.vertical_frame) != len(self.p_forms):
            raise ValueError("need one dual 1-form per vertical frame field")
        for v in self.vertical_frame:
            if v.chart != self.chart:
                raise ValueError("vertical frame field on a different chart")
        for f in self.p_forms:
            if f.chart != self.chart or f.degree != 1:
                raise ValueError("connection forms must be 1-forms on the chart")

    @property
    def rank(self):
        return len(self.vertical_frame)

    def form_rows(self, p):
        """Stacked P^j components at p, shape (r, dim)."""
        return np.stack([np.asarray(f.components(p), dtype=float)
                         for f in self.p_forms])

    def frame_columns(self, p):
        """Stacked V_j values at p, shape (dim, r)."""
        return np.stack([v(p) for v in self.vertical_frame], axis=1)

    def matrix(self, p):
        """Pointwise matrix of P, dim x dim."""
        if self.rank == 0:
            return np.zeros((self.chart.dim, self.chart.dim))
        return self.frame_columns(p) @ self.form_rows(p)

    def apply(self, p, x):
        if self.rank == 0:
            return np.zeros(self.chart.dim)
        return self.frame_columns(p) @ (self.form_rows(p) @ np.asarray(x, dtype=float))


@dataclass
class ValidationReport:
    passed: bool
    worst: dict
    failures: list

    def __bool__(self):
        return self.passed


def validate(C, S, points, tol=None, invariance_directions=6, seed=0,
             raise_on_failure=False):
    """Check idempotence, verticality, kernel membership and kernel invariance.

    Kernel invariance is tested to first order through commutators: the
    bracket of horizontally projected coordinate fields with each V_j must
    stay horizontal up to tolerance.  On large charts only a seeded subset of
    coordinate directions is swept.
    """
    tol = default_classification_tol(C.backend) if tol is None else tol
    dim = C.chart.dim
    rng = np.random.default_rng(seed)
    if dim <= invariance_directions:
        dirs = list(range(dim))
    else:
        dirs = sorted(rng.choice(dim, size=invariance_directions, replace=False))
    failures = []
    worst = {"idempotence": 0.0, "verticality": 0.0, "kernel": 0.0,
             "frame_rank": 0.0, "invariance": 0.0}

    def note(check, point, res):
        worst[check] = max(worst[check], res)
        if res > tol:
            failures.append((check, np.asarray(point, dtype=float), float(res)))

    for p in points:
        P = C.matrix(p)
        scale = max(1.0, np.abs(P).max())
        note("idempotence", p, np.abs(P @ P - P).max() / scale)
        V = C.frame_columns(p) if C.rank else np.zeros((dim, 0))
        if C.rank:
            sv = np.linalg.svd(V, compute_uv=False)
            if sv[-1] < 1e-12 * max(sv[0], 1.0):
                note("frame_rank", p, 1.0)
            vs = max(1.0, np.abs(V).max())
            note("verticality", p, np.abs(P @ V - V).max() / vs)
            om = S.omega.matrix(p)
            oscale = max(np.abs(om).max(), 1.0)
            note("kernel", p, np.abs(om @ V).max() / (oscale * vs))
        # expected kernel dimension at this point
        sv = np.linalg.svd(S.omega.matrix(p), compute_uv=False)
        smax = sv[0] if sv.size else 0.0
        corank = dim - (int(np.sum(sv > S.rank_tol * smax)) if smax > 0 else 0)
        if corank != C.rank:
            note("frame_rank", p, abs(corank - C.rank))

    # first-order invariance along vertical flows, sampled at the first point
    if C.rank and len(points) and dim <= 400:
        p0 = np.asarray(points[0], dtype=float)
        jac_v = [C.backend.jacobian(Vj, p0) for Vj in C.vertical_frame]
        v_at = [Vj(p0) for Vj in C.vertical_frame]
        for i in dirs:
            def horiz(q, i=i):
                e = np.zeros(dim)
                e[i] = 1.0
                return e - C.apply(q, e)

            jac_h = C.backend.jacobian(VectorField(C.chart, horiz), p0)
            h0 = horiz(p0)
            for j in range(C.rank):
                br = jac_v[j] @ h0 - jac_h @ v_at[j]
                res = np.abs(C.apply(p0, br)).max() / max(1.0, np.abs(br).max())
                note("invariance", p0, res)

    report = ValidationReport(len(failures) == 0, worst, failures)
    if raise_on_failure and failures:
        raise ConnectionValidationError(failures)
    return report


def horizontal_projector(C):
    """Pointwise matrix evaluator of 1 - P (image = horizontal space W)."""
    dim = C.chart.dim

    def mat(p):
        return np.eye(dim) - C.matrix(p)

    return mat


@dataclass
class CurvatureReport:
    classification: str
    dP_norm: np.ndarray
    dHP_norm: np.ndarray
    dVP_norm: np.ndarray
    sample_points: list
    tol: float

    @property
    def dP_max(self):
        return float(self.dP_norm.max()) if self.dP_norm.size else 0.0

    @property
    def dHP_max(self):
        return float(self.dHP_norm.max()) if self.dHP_norm.size else 0.0

    @property
    def dVP_max(self):
        return float(self.dVP_norm.max()) if self.dVP_norm.size else 0.0


def _dP_values(C, p, x, y):
    """dP^j(x, y) for all j at once, constant vectors, two FD sweeps."""
    b = C.backend
    h = b.h
    p = np.asarray(p, dtype=float)

    def rows_dot(q, v):
        return C.form_rows(q) @ v

    out = np.zeros(C.rank)
    for v, w, sgn in ((x, y, 1.0), (y, x, -1.0)):
        qp = p + h * v
        qm = p - h * v
        b._check(C.chart, qp)
        b._check(C.chart, qm)
        out += sgn * (rows_dot(qp, w) - rows_dot(qm, w)) / (2.0 * h)
    return out


def curvature_decomposition(C, points, tol=None, n_pairs=6, seed=0):
    """Evaluate dP^j, d_H P^j, d_V P^j on sampled vector pairs and classify.

    d_H pairs horizontal projections, d_V vertical projections, both taken
    pointwise at the sample point (constant-vector polarization).
    """
    tol = default_classification_tol(C.backend) if tol is None else tol
    r = C.rank
    if r == 0:
        return CurvatureReport(CLOSED, np.zeros(0), np.zeros(0), np.zeros(0),
                               list(points), tol)
    dim = C.chart.dim
    rng = np.random.default_rng(seed)
    dP = np.zeros(r)
    dHP = np.zeros(r)
    dVP = np.zeros(r)
    for p in points:
        P = C.matrix(p)
        R = np.eye(dim) - P
        for _ in range(n_pairs):
            x = rng.normal(size=dim)
            y = rng.normal(size=dim)
            x /= np.linalg.norm(x)
            y /= np.linalg.norm(y)
            dP = np.maximum(dP, np.abs(_dP_values(C, p, x, y)))
            dHP = np.maximum(dHP, np.abs(_dP_values(C, p, R @ x, R @ y)))
            dVP = np.maximum(dVP, np.abs(_dP_values(C, p, P @ x, P @ y)))
    if dP.max(initial=0.0) < tol:
        cls = CLOSED
    elif dHP.max(initial=0.0) < tol:
        cls = FLAT
    else:
        cls = CURVED
    return CurvatureReport(cls, dP, dHP, dVP, list(points), tol)
