"""Chart-based exterior calculus: scalar/vector fields, k-forms and bivectors
evaluated pointwise on a single coordinate chart.

Conventions used throughout the package:

* k-form components are stored on strictly increasing index tuples and the
  evaluation convention is the determinant one, so ``(dx ^ dy)(e_x, e_y) = 1``.
* Exterior derivatives of forms are evaluated against *constant coefficient*
  vector arguments (the coordinate formula without bracket corrections);
  every certification sweep in this package contracts against such vectors.
* Differentiation is pluggable through :class:`DiffBackend`: second order
  central differences with a fixed step, or exact per-field hooks.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import itertools
import math

import numpy as np


class ChartMismatchError(ValueError):
    """Two objects living on different charts were combined."""


class DegreeError(ValueError):
    """Form degree out of range for the requested operation."""


class DomainError(ValueError):
    """Evaluation requested outside the chart domain.

    Carries the offending point in ``.point``.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = None if point is None else np.asarray(point, dtype=float)


class MaterializationError(RuntimeError):
    """Dense components of a high-degree form on a large chart were requested.

    Forms of degree >= 3 on charts with more than ``LAZY_DIM_CAP`` coordinates
    are only evaluated lazily on supplied argument tuples.
    """


LAZY_DIM_CAP = 20


@dataclass(frozen=True)
class Chart:
    """A named finite-dimensional coordinate domain.

    All fields and forms in this package are evaluated pointwise against a
    single chart; there is no atlas machinery.
    """

    dim: int
    coord_names: tuple
    domain_predicate: object = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("chart dimension must be >= 1")
        names = tuple(self.coord_names)
        if len(names) != self.dim:
            raise ValueError("need exactly one name per coordinate")
        if len(set(names)) != self.dim:
            raise ValueError("coordinate names must be distinct")
        object.__setattr__(self, "coord_names", names)

    def point(self, coords):
        """Validate and return a point of this chart as a float vector."""
        p = np.asarray(coords, dtype=float).reshape(-1)
        if p.shape != (self.dim,):
            raise ValueError(
                f"point has {p.size} coordinates, chart {self.coord_names} needs {self.dim}"
            )
        if not np.all(np.isfinite(p)):
            raise ValueError("point has non-finite coordinates")
        if self.domain_predicate is not None and not self.domain_predicate(p):
            raise DomainError(f"point {p} outside chart domain", p)
        return p

    def contains(self, p):
        p = np.asarray(p, dtype=float)
        if not np.all(np.isfinite(p)):
            return False
        return self.domain_predicate is None or bool(self.domain_predicate(p))

    def index(self, name):
        return self.coord_names.index(name)

    def __eq__(self, other):
        return (
            isinstance(other, Chart)
            and self.dim == other.dim
            and self.coord_names == other.coord_names
        )

    def __hash__(self):
        return hash((self.dim, self.coord_names))


def _same_chart(a, b):
    if a.chart != b.chart:
        raise ChartMismatchError(
            f"chart mismatch: {a.chart.coord_names} vs {b.chart.coord_names}"
        )
    return a.chart


@dataclass(frozen=True)
class DiffBackend:
    """Differentiation backend: central differences or exact per-field hooks.

    ``central_difference`` uses the symmetric second order stencil with step
    ``h``.  ``user_exact`` requires every differentiated field to carry an
    ``exact_gradient`` hook and refuses fields without one.
    """

    mode: str = "central_difference"
    h: float = 1e-5

    def __post_init__(self):
        if self.mode not in ("central_difference", "user_exact"):
            raise ValueError(f"unknown differentiation mode {self.mode!r}")
        if not self.h > 0:
            raise ValueError("step h must be positive")

    def _check(self, chart, q):
        if chart is not None and not chart.contains(q):
            raise DomainError(f"stencil point {q} left the chart domain", q)
        return q

    def grad_callable(self, fn, p, chart=None):
        """Gradient of a plain callable by central differences."""
        p = np.asarray(p, dtype=float)
        n = p.size
        g = np.empty(n)
        for i in range(n):
            qp = p.copy()
            qp[i] += self.h
            qm = p.copy()
            qm[i] -= self.h
            self._check(chart, qp)
            self._check(chart, qm)
            g[i] = (fn(qp) - fn(qm)) / (2.0 * self.h)
        return g

    def grad(self, f, p):
        """Gradient of a :class:`ScalarField`, honoring exact hooks."""
        if getattr(f, "exact_gradient", None) is not None:
            return np.asarray(f.exact_gradient(np.asarray(p, dtype=float)), dtype=float)
        if self.mode == "user_exact":
            raise ValueError(
                f"user_exact backend needs an exact_gradient on field {getattr(f, 'name', f)!r}"
            )
        return self.grad_callable(f.eval, p, f.chart)

    def directional(self, fn, p, v, chart=None):
        """Directional derivative of a callable along a constant vector."""
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        qp = p + self.h * v
        qm = p - self.h * v
        self._check(chart, qp)
        self._check(chart, qm)
        return (fn(qp) - fn(qm)) / (2.0 * self.h)

    def jacobian(self, vf, p):
        """Jacobian matrix J[i, j] = d(vf^i)/dx^j of a vector-valued map."""
        p = np.asarray(p, dtype=float)
        n = p.size
        cols = []
        for j in range(n):
            qp = p.copy()
            qp[j] += self.h
            qm = p.copy()
            qm[j] -= self.h
            self._check(getattr(vf, "chart", None), qp)
            self._check(getattr(vf, "chart", None), qm)
            fp = np.asarray(vf(qp) if callable(vf) else vf.eval(qp), dtype=float)
            fm = np.asarray(vf(qm) if callable(vf) else vf.eval(qm), dtype=float)
            cols.append((fp - fm) / (2.0 * self.h))
        return np.stack(cols, axis=1)


@dataclass
class ScalarField:
    """A real function on a chart, optionally with an exact gradient hook."""

    chart: Chart
    eval: object
    exact_gradient: object = None
    name: str = ""

    def __call__(self, p):
        return float(self.eval(np.asarray(p, dtype=float)))

    def gradient(self, p, backend):
        return backend.grad(self, p)


@dataclass
class VectorField:
    """A pointwise vector evaluator on a chart."""

    chart: Chart
    eval: object
    name: str = ""

    def __call__(self, p):
        return np.asarray(self.eval(np.asarray(p, dtype=float)), dtype=float)


@lru_cache(maxsize=None)
def increasing_tuples(dim, k):
    """All strictly increasing index tuples of length k in range(dim)."""
    return tuple(itertools.combinations(range(dim), k))


@lru_cache(maxsize=None)
def _tuple_position(dim, k):
    return {t: i for i, t in enumerate(increasing_tuples(dim, k))}


def _perm_parity(seq):
    """Parity sign of the permutation sorting ``seq`` (distinct entries)."""
    inv = 0
    n = len(seq)
    for i in range(n):
        for j in range(i + 1, n):
            if seq[i] > seq[j]:
                inv += 1
    return -1.0 if inv % 2 else 1.0


class KForm:
    """Alternating k-form on a chart.

    At least one of ``components_fn`` (packed components on increasing index
    tuples), ``matrix_fn`` (degree 2 only, full antisymmetric matrix) or
    ``eval_fn`` (value on a tuple of constant vectors) must be supplied; the
    missing representations are derived.
    """

    def __init__(self, chart, degree, components_fn=None, matrix_fn=None,
                 eval_fn=None, partials_fn=None, name=""):
        if not 0 <= degree <= chart.dim:
            raise DegreeError(f"degree {degree} out of range for dim {chart.dim}")
        if matrix_fn is not None and degree != 2:
            raise DegreeError("matrix_fn only makes sense for 2-forms")
        if components_fn is None and matrix_fn is None and eval_fn is None:
            raise ValueError("KForm needs at least one evaluator")
        self.chart = chart
        self.degree = degree
        self._components_fn = components_fn
        self._matrix_fn = matrix_fn
        self._eval_fn = eval_fn
        # optional exact-derivative hook: partials_fn(p)[i] = d(components)/dx^i
        self.partials_fn = partials_fn
        self.name = name

    def components(self, p):
        """Packed components on increasing index tuples at p."""
        p = np.asarray(p, dtype=float)
        if self._components_fn is not None:
            return np.asarray(self._components_fn(p), dtype=float)
        if self._matrix_fn is not None:
            m = np.asarray(self._matrix_fn(p), dtype=float)
            iu = np.triu_indices(self.chart.dim, k=1)
            return m[iu]
        if self.degree >= 3 and self.chart.dim > LAZY_DIM_CAP:
            raise MaterializationError(
                f"degree-{self.degree} form on a {self.chart.dim}-dim chart is "
                "evaluated lazily; call it on explicit vector tuples instead"
            )
        dim = self.chart.dim
        tuples = increasing_tuples(dim, self.degree)
        eye = np.eye(dim)
        return np.array([self._eval_fn(p, *(eye[list(t)])) for t in tuples])

    def matrix(self, p):
        """Full antisymmetric matrix of a 2-form at p."""
        if self.degree != 2:
            raise DegreeError("matrix() is for 2-forms")
        if self._matrix_fn is not None:
            return np.asarray(self._matrix_fn(p), dtype=float)
        dim = self.chart.dim
        m = np.zeros((dim, dim))
        iu = np.triu_indices(dim, k=1)
        c = self.components(p)
        m[iu] = c
        m -= m.T
        return m

    def __call__(self, p, *vectors):
        p = np.asarray(p, dtype=float)
        if len(vectors) != self.degree:
            raise DegreeError(
                f"degree-{self.degree} form called with {len(vectors)} vectors"
            )
        if self.degree == 0:
            if self._eval_fn is not None:
                return float(self._eval_fn(p))
            return float(self.components(p)[0])
        vecs = [np.asarray(v, dtype=float) for v in vectors]
        if self._eval_fn is not None:
            return float(self._eval_fn(p, *vecs))
        if self.degree == 2 and self._matrix_fn is not None:
            return float(vecs[0] @ self.matrix(p) @ vecs[1])
        comps = self.components(p)
        if self.degree == 1:
            return float(comps @ vecs[0])
        if self.degree == 2:
            return float(vecs[0] @ self.matrix(p) @ vecs[1])
        tuples = increasing_tuples(self.chart.dim, self.degree)
        vmat = np.stack(vecs, axis=1)  # dim x k
        total = 0.0
        for c, t in zip(comps, tuples):
            if c != 0.0:
                total += c * np.linalg.det(vmat[list(t), :])
        return float(total)

    def as_scalar_field(self):
        if self.degree != 0:
            raise DegreeError("only 0-forms convert to scalar fields")
        return ScalarField(self.chart, lambda p: self(p), name=self.name)


@dataclass
class Bivector:
    """Antisymmetric contravariant 2-tensor, stored as a matrix evaluator."""

    chart: Chart
    matrix_fn: object
    name: str = ""

    def matrix(self, p):
        return np.asarray(self.matrix_fn(np.asarray(p, dtype=float)), dtype=float)

    def pair(self, p, df, dg):
        """Contract with two covector arrays at p."""
        return float(np.asarray(df) @ self.matrix(p) @ np.asarray(dg))

    def check_antisymmetry(self, p, rtol=1e-12):
        m = self.matrix(p)
        scale = max(np.abs(m).max(), 1.0)
        return np.abs(m + m.T).max() <= rtol * scale


def coordinate_form(chart, name_or_index):
    """The coordinate 1-form dx^i as a KForm."""
    i = name_or_index if isinstance(name_or_index, int) else chart.index(name_or_index)
    e = np.zeros(chart.dim)
    e[i] = 1.0
    return KForm(chart, 1, components_fn=lambda p: e,
                 name=f"d{chart.coord_names[i]}")


def coordinate_field(chart, name_or_index):
    """The coordinate vector field d/dx^i."""
    i = name_or_index if isinstance(name_or_index, int) else chart.index(name_or_index)
    e = np.zeros(chart.dim)
    e[i] = 1.0
    return VectorField(chart, lambda p: e, name=f"e_{chart.coord_names[i]}")


def constant_form(chart, comps, degree=1):
    comps = np.asarray(comps, dtype=float)
    return KForm(chart, degree, components_fn=lambda p: comps)


@lru_cache(maxsize=None)
def _wedge_plan(dim, p, q):
    """Shuffle plan for the wedge of a p-form with a q-form.

    For every increasing (p+q)-tuple I, lists (sign, idxJ, idxK) over the
    splits I = J | K with |J| = p, where idxJ/idxK are packed positions.
    """
    posJ = _tuple_position(dim, p)
    posK = _tuple_position(dim, q)
    plan = []
    for big in increasing_tuples(dim, p + q):
        entries = []
        for sel in itertools.combinations(range(p + q), p):
            J = tuple(big[i] for i in sel)
            K = tuple(big[i] for i in range(p + q) if i not in sel)
            sign = _perm_parity(J + K)
            entries.append((sign, posJ[J], posK[K]))
        plan.append(entries)
    return tuple(plan)


def wedge(a, b):
    """Wedge product with the determinant normalization.

    ``wedge(dx, dy)(e_x, e_y) == 1`` and a ^ b = (-1)^{pq} b ^ a.
    """
    chart = _same_chart(a, b)
    p, q = a.degree, b.degree
    if p + q > chart.dim:
        raise DegreeError(f"wedge degree {p}+{q} exceeds chart dim {chart.dim}")
    if p == 0 or q == 0:
        scalar, form = (a, b) if p == 0 else (b, a)
        return KForm(chart, form.degree,
                     components_fn=lambda x: scalar(x) * form.components(x),
                     name=f"({a.name}^{b.name})")
    plan = _wedge_plan(chart.dim, p, q)

    def comps(x):
        ca = a.components(x)
        cb = b.components(x)
        return np.array([
            sum(s * ca[i] * cb[j] for (s, i, j) in entries) for entries in plan
        ])

    return KForm(chart, p + q, components_fn=comps, name=f"({a.name}^{b.name})")


def exterior_derivative(a, backend):
    """Exterior derivative by the alternating-partials coordinate formula.

    The returned form supports both packed components (small charts) and lazy
    evaluation on constant vector arguments (any chart size).
    """
    chart = a.chart
    k = a.degree
    if k >= chart.dim:
        raise DegreeError(f"cannot raise degree {k} on a dim-{chart.dim} chart")
    dim = chart.dim

    if backend.mode == "user_exact" and a.partials_fn is None and k > 0:
        raise ValueError(
            f"user_exact backend needs a partials_fn on form {a.name!r}")

    if k == 0:
        return KForm(chart, 1,
                     components_fn=lambda p: backend.grad_callable(a, p, chart),
                     name=f"d{a.name}")

    def partials_of(p):
        if a.partials_fn is not None:
            return np.asarray(a.partials_fn(p), dtype=float)
        partials = np.empty((dim, len(increasing_tuples(dim, k))))
        for i in range(dim):
            qp = p.copy()
            qp[i] += backend.h
            qm = p.copy()
            qm[i] -= backend.h
            backend._check(chart, qp)
            backend._check(chart, qm)
            partials[i] = (a.components(qp) - a.components(qm)) / (2.0 * backend.h)
        return partials

    def comps(p):
        p = np.asarray(p, dtype=float)
        partials = partials_of(p)
        pos = _tuple_position(dim, k)
        out = []
        for big in increasing_tuples(dim, k + 1):
            val = 0.0
            for m, im in enumerate(big):
                rest = big[:m] + big[m + 1:]
                val += (-1.0) ** m * partials[im, pos[rest]]
            out.append(val)
        return np.array(out)

    def ev(p, *vecs):
        # constant-coefficient vector arguments: d omega(v_0..v_k) equals the
        # alternating sum of directional derivatives of contractions
        total = 0.0
        for m in range(k + 1):
            others = vecs[:m] + vecs[m + 1:]
            fn = lambda q, o=others: a(q, *o)
            total += (-1.0) ** m * backend.directional(fn, p, vecs[m], chart)
        return total

    comps_fn = comps if (k + 1 < 3 or dim <= LAZY_DIM_CAP) else None
    return KForm(chart, k + 1, components_fn=comps_fn, eval_fn=ev,
                 name=f"d{a.name}")


def interior_product(X, a):
    """Contraction of a k-form on its first slot, k >= 1."""
    chart = _same_chart(X, a)
    k = a.degree
    if k < 1:
        raise DegreeError("interior product needs a form of degree >= 1")
    dim = chart.dim

    def ev(p, *vecs):
        return a(p, X(p), *vecs)

    def comps(p):
        ca = a.components(p)
        pos = _tuple_position(dim, k)
        xv = X(p)
        out = []
        for J in increasing_tuples(dim, k - 1):
            val = 0.0
            for i in range(dim):
                if i in J:
                    continue
                full = tuple(sorted((i,) + J))
                sign = _perm_parity((i,) + J)
                val += sign * xv[i] * ca[pos[full]]
            out.append(val)
        return np.array(out)

    comps_fn = comps if (k - 1 < 3 or dim <= LAZY_DIM_CAP) else None
    return KForm(chart, k - 1, components_fn=comps_fn, eval_fn=ev,
                 name=f"i_{X.name}{a.name}")


def lie_bracket(X, Y, backend):
    """Commutator [X, Y] via backend Jacobians."""
    chart = _same_chart(X, Y)

    def ev(p):
        jx = backend.jacobian(X, p)
        jy = backend.jacobian(Y, p)
        return jy @ X(p) - jx @ Y(p)

    return VectorField(chart, ev, name=f"[{X.name},{Y.name}]")


def jacobiator(L, f, g, h, p, backend):
    """Cyclic sum {f,{g,h}} + {g,{h,f}} + {h,{f,g}} of the bracket of L.

    This is the pointwise surrogate for the Schouten bracket of L with
    itself, contracted on (df, dg, dh).
    """
    def inner(u, v):
        def fn(q):
            return backend.grad(u, q) @ L.matrix(q) @ backend.grad(v, q)
        return fn

    def outer(w, uv_fn, q):
        gw = backend.grad(w, q)
        guv = backend.grad_callable(uv_fn, q, w.chart)
        return gw @ L.matrix(q) @ guv

    p = np.asarray(p, dtype=float)
    return float(
        outer(f, inner(g, h), p)
        + outer(g, inner(h, f), p)
        + outer(h, inner(f, g), p)
    )
