"""Command-line front door: build models, run the pipeline, emit reports.

Reports are JSON with a stable schema version; the human-readable rendering
is derived from the same dictionary, never a separate code path.  With a
fixed seed (and --no-timestamp) repeated runs produce byte-identical files.

Exit codes: 0 all certificates pass; 2 classification or certification
failure; 3 configuration error; 4 numerical failure (singularity).
"""

import argparse
import datetime
import json
import sys

import numpy as np

from . import connection as conn_mod
from . import dynamics as dyn_mod
from . import embedding as emb_mod
from . import poisson as poi_mod
from .geom import DiffBackend, ScalarField, jacobiator
from .models.lattice import (GreenSolveError, build_lattice_ed,
                             build_lattice_ym)
from .models.monopole import build_monopole
from .obs import CompileError, ParseError, compile_source
from .poisson import DegenerateInversionError, _random_quadratic

SCHEMA = "coiso-report/1"

EXIT_PASS = 0
EXIT_CERT = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4


class ConfigError(ValueError):
    pass


DEFAULT_TOL = {"rank": 1e-8, "curvature": None, "closed": 1e-4,
               "jacobi": 1e-5, "coisotropy": 1e-6}


def default_config():
    return {
        "model": None,
        "params": {},
        "points": 20,
        "seed": 0,
        "tol": dict(DEFAULT_TOL),
        "backend": {"mode": "central_difference", "h": 1e-5},
        "output": None,
    }


def load_config(args):
    cfg = default_config()
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        for key, val in file_cfg.items():
            if key in ("tol", "backend", "params") and isinstance(val, dict):
                cfg[key].update(val)
            else:
                cfg[key] = val
    if args.model:
        cfg["model"] = args.model
    if args.grid:
        try:
            cfg["params"]["grid"] = [int(v) for v in args.grid.split(",")]
        except ValueError:
            raise ConfigError(f"bad --grid {args.grid!r}; want a,b,c")
    if args.n is not None:
        cfg["params"]["n"] = args.n
    if args.group:
        cfg["params"]["group"] = args.group
    if args.points is not None:
        cfg["points"] = args.points
    if args.seed is not None:
        cfg["seed"] = args.seed
    for name in ("rank", "curvature", "closed", "jacobi"):
        val = getattr(args, f"tol_{name}", None)
        if val is not None:
            cfg["tol"][name] = val
    if args.backend:
        cfg["backend"]["mode"] = args.backend
    if args.h is not None:
        cfg["backend"]["h"] = args.h
    if args.output:
        cfg["output"] = args.output
    if cfg["model"] not in ("monopole", "lattice-ed", "lattice-ym"):
        raise ConfigError(f"unknown or missing model {cfg['model']!r}")
    return cfg


class ModelBundle:
    def __init__(self, cfg):
        self.cfg = cfg
        backend = DiffBackend(cfg["backend"]["mode"], cfg["backend"]["h"])
        name = cfg["model"]
        params = cfg["params"]
        seed = int(cfg["seed"])
        count = int(cfg["points"])
        if name == "monopole":
            n = float(params.get("n", 1.0))
            S, C, system, currents, model = build_monopole(n=n, backend=backend)
            self.base_points = model.sample_base(count, seed)
            self.enlarged_points = None  # appended after embedding build
            self.registry = dict(model.observables)
            self.invariance_tol = None
            self.system = system
        elif name == "lattice-ed":
            grid = params.get("grid", [3, 3, 3])
            S, C, model = build_lattice_ed(grid, backend=backend)
            self.base_points = model.sample_surface(count, seed)
            self.registry = dict(model.observables)
            self.invariance_tol = None
            self.system = model.surface_system
        else:
            grid = params.get("grid", [2, 2, 2])
            group = params.get("group", "su2")
            if group not in ("su2",):
                raise ConfigError(f"unknown group {group!r}")
            S, C, system, model = build_lattice_ym(grid, backend=backend)
            self.base_points = model.sample_surface(
                count, seed, around_ref=True, c_scale=0.0, noise=1e-5)
            self.registry = dict(model.observables)
            # first-order Coulomb equivariance holds only at lattice scale
            self.invariance_tol = 1.0
            self.system = system
        self.name = name
        self.S = S
        self.C = C
        self.model = model
        self.backend = backend
        self.seed = seed

    def mu_points(self, E, mu_scale=0.3):
        rng = np.random.default_rng(self.seed + 101)
        out = []
        for p in self.base_points:
            mu = mu_scale * rng.uniform(-1.0, 1.0, size=E.r)
            out.append(np.concatenate([p, mu]))
        return out


def _render(report, fh):
    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k in sorted(obj):
                walk(f"{prefix}{k}.", obj[k])
        elif isinstance(obj, list) and len(obj) > 6:
            print(f"{prefix[:-1]}: [{len(obj)} entries]", file=fh)
        else:
            print(f"{prefix[:-1]}: {obj}", file=fh)

    walk("", report)


def emit(report, output, no_timestamp):
    if not no_timestamp:
        report["timestamp"] = datetime.datetime.now(
            datetime.timezone.utc).isoformat()
    text = json.dumps(report, sort_keys=True, indent=2)
    if output:
        with open(output, "w") as fh:
            fh.write(text + "\n")
        _render(report, sys.stdout)
    else:
        print(text)


def _float(x):
    return float(x) if x is not None and np.isfinite(x) else (
        None if x is None else ("inf" if x > 0 else "-inf"))


def cmd_analyze(cfg, args):
    bundle = ModelBundle(cfg)
    report = {"schema": SCHEMA, "model": bundle.name, "config": cfg,
              "pass": False}
    stage = "validate"
    try:
        pts = bundle.base_points
        vrep = conn_mod.validate(bundle.C, bundle.S, pts[:5],
                                 tol=bundle.invariance_tol)
        report["residuals"] = {"validation": {k: _float(v) for k, v in
                                              vrep.worst.items()}}
        if not vrep.passed:
            report["failure_stage"] = stage
            return report, EXIT_CERT

        stage = "curvature"
        crep = conn_mod.curvature_decomposition(
            bundle.C, pts[:4], tol=cfg["tol"]["curvature"],
            seed=bundle.seed + 7)
        report["classification"] = crep.classification
        report["residuals"]["curvature"] = {
            "dP": _float(crep.dP_max), "dHP": _float(crep.dHP_max),
            "dVP": _float(crep.dVP_max), "tol": _float(crep.tol)}

        stage = "build"
        E = emb_mod.build(bundle.S, bundle.C, probe_points=pts[:2])

        stage = "certify_closed"
        qs = bundle.mu_points(E)
        crep2 = emb_mod.certify_closed(E, qs[:4], n_triples=3,
                                       seed=bundle.seed + 11,
                                       tol=cfg["tol"]["closed"])
        report["residuals"]["d_omega"] = _float(crep2.residual)
        if not crep2.passed:
            report["failure_stage"] = stage
            return report, EXIT_CERT

        stage = "certify_coisotropic"
        P = poi_mod.invert(E, E.sigma0(pts[0]))
        cois = emb_mod.certify_coisotropic(E, P.Lambda, pts[:5],
                                           tol=cfg["tol"]["coisotropy"])
        report["residuals"]["pullback"] = _float(cois.pullback_residual)
        report["residuals"]["mu_bracket"] = _float(cois.mu_bracket_residual)
        if not cois.passed:
            report["failure_stage"] = stage
            return report, EXIT_CERT

        stage = "tubular_radius"
        trep = emb_mod.tubular_radius(E, pts[:3], seed=bundle.seed + 13)
        report["tubular_radius"] = _float(trep.mu_bound)
        report["pass"] = True
        return report, EXIT_PASS
    except (DegenerateInversionError, GreenSolveError) as exc:
        report["failure_stage"] = stage
        report["error"] = str(exc)
        return report, EXIT_NUMERICAL


def cmd_bracket(cfg, args):
    bundle = ModelBundle(cfg)
    report = {"schema": SCHEMA, "model": bundle.name, "config": cfg,
              "pass": False, "brackets": []}
    try:
        crep = conn_mod.curvature_decomposition(
            bundle.C, bundle.base_points[:3], tol=cfg["tol"]["curvature"],
            seed=bundle.seed + 7)
        report["classification"] = crep.classification
        E = emb_mod.build(bundle.S, bundle.C)
        n = E.base.dim
        try:
            f = compile_source(args.f, bundle.S.chart, bundle.registry)
            g = compile_source(args.g, bundle.S.chart, bundle.registry)
        except (ParseError, CompileError) as exc:
            report["error"] = str(exc)
            return report, EXIT_CONFIG

        def lift(u):
            return ScalarField(E.enlarged,
                               lambda q, u=u: u.eval(np.asarray(q)[:n]),
                               name=u.name)

        fl, gl = lift(f), lift(g)
        if args.at:
            try:
                q = np.array([float(v) for v in args.at.split(",")])
            except ValueError:
                report["error"] = f"bad --at {args.at!r}"
                return report, EXIT_CONFIG
            if q.size == n:
                q = E.sigma0(q)
            if q.size != E.enlarged.dim:
                report["error"] = (f"--at needs {n} or {E.enlarged.dim} "
                                   "coordinates")
                return report, EXIT_CONFIG
            points = [q]
        else:
            points = bundle.mu_points(E)[: (args.random or 5)]
        P = poi_mod.invert(E, points[0])
        curved = crep.classification == "CURVED"
        for q in points:
            entry = {"point": [float(v) for v in q],
                     "value": poi_mod.bracket(P, fl, gl, q)}
            if curved:
                base = poi_mod.bracket(P, fl, gl, E.sigma0(E.tau(q)))
                entry["base_part"] = base
                entry["anomaly"] = entry["value"] - base
            report["brackets"].append(entry)
        report["pass"] = True
        return report, EXIT_PASS
    except (DegenerateInversionError, GreenSolveError) as exc:
        report["error"] = str(exc)
        return report, EXIT_NUMERICAL


def cmd_jacobi(cfg, args):
    bundle = ModelBundle(cfg)
    report = {"schema": SCHEMA, "model": bundle.name, "config": cfg,
              "pass": False}
    tol = cfg["tol"]["jacobi"]
    try:
        E = emb_mod.build(bundle.S, bundle.C)
        q0 = E.sigma0(bundle.base_points[0])
        P = poi_mod.invert(E, q0)
        lam = P.Lambda
        if args.corrupt:
            base_mat = lam.matrix_fn

            def corrupted(q, base_mat=base_mat):
                M = np.array(base_mat(q))
                M[0, 1] += 0.5 * float(q[0]) ** 2
                M[1, 0] -= 0.5 * float(q[0]) ** 2
                return M

            from .geom import Bivector
            lam = Bivector(lam.chart, corrupted, name="Lambda(corrupt)")
        rng = np.random.default_rng(bundle.seed + 23)
        triples = int(args.triples or 10)
        worst = 0.0
        qs = [q0] + bundle.mu_points(E)[:2]
        for t in range(triples):
            fields = [_random_quadratic(E.enlarged, rng) for _ in range(3)]
            q = qs[t % len(qs)]
            worst = max(worst, abs(jacobiator(lam, *fields, q, bundle.backend)))
        report["max_jacobiator"] = worst
        report["triples"] = triples
        report["tol"] = tol
        report["pass"] = bool(worst < tol)
        return report, EXIT_PASS if report["pass"] else EXIT_CERT
    except (DegenerateInversionError, GreenSolveError) as exc:
        report["error"] = str(exc)
        return report, EXIT_NUMERICAL


def cmd_pca(cfg, args):
    bundle = ModelBundle(cfg)
    report = {"schema": SCHEMA, "model": bundle.name, "config": cfg,
              "pass": False, "constraints": []}
    try:
        if bundle.name == "lattice-ym":
            sys_ = bundle.model.slice_system
            pts = bundle.model.sample_slice(3, bundle.seed + 31, scale=0.3)
            rep = dyn_mod.primary_constraints(sys_, pts, tol=1e-6)
            par = bundle.model.pca_parametrization()
            rng = np.random.default_rng(bundle.seed + 37)
            LN = bundle.model.L * bundle.model.N
            red_pts = []
            for _ in range(2):
                a0 = 0.3 * rng.normal(size=LN)
                a = (bundle.model.a_ref
                     + 1e-5 * rng.normal(size=(3, bundle.model.L,
                                               bundle.model.N))).ravel()
                red_pts.append(np.concatenate([a0, a,
                                               np.zeros(bundle.model.nc)]))
            rep2, _ = dyn_mod.stabilization_step(sys_, par, red_pts,
                                                 prior=rep, tol=1e-3)
            report["stabilized"] = bool(rep2.stabilized)
            report["iterations"] = rep2.iterations
            groups = {}
            for c in rep.constraints:
                key = c.label.split("[")[0]
                g = groups.setdefault(key, {"count": 0, "sup_residual": 0.0})
                g["count"] += 1
                g["sup_residual"] = max(g["sup_residual"], c.sup_residual)
            report["constraints"] = [
                {"family": k, **v} for k, v in sorted(groups.items())]
            report["pass"] = bool(rep2.stabilized)
        else:
            sys_ = bundle.system
            pts = (bundle.model.sample_system(4, bundle.seed + 31)
                   if bundle.name == "monopole" else bundle.base_points[:4])
            rep = dyn_mod.primary_constraints(sys_, pts, tol=1e-6)
            report["stabilized"] = bool(rep.stabilized)
            report["iterations"] = rep.iterations
            report["constraints"] = [
                {"label": c.label, "sup_residual": c.sup_residual}
                for c in rep.constraints]
            report["pass"] = bool(rep.stabilized)
        return report, EXIT_PASS if report["pass"] else EXIT_CERT
    except dyn_mod.StabilizationError as exc:
        report["error"] = str(exc)
        return report, EXIT_CERT
    except (DegenerateInversionError, GreenSolveError) as exc:
        report["error"] = str(exc)
        return report, EXIT_NUMERICAL


def cmd_dynamics(cfg, args):
    if cfg["model"] != "monopole":
        raise ConfigError("dynamics is exercised on the monopole model")
    bundle = ModelBundle(cfg)
    report = {"schema": SCHEMA, "model": bundle.name, "config": cfg,
              "pass": False}
    t_end = float(args.t_end or 10.0)
    dt = float(args.dt or 1e-3)
    try:
        model = bundle.model
        sys_ = model.system
        C = model.sys_connection()
        E = emb_mod.build(sys_.structure, C)
        P = poi_mod.invert(E, E.sigma0(model.sample_system(1, bundle.seed)[0]))

        def H_enl(q):
            return sys_.H.eval(np.asarray(q)[:7])

        def H_grad(q):
            g = np.zeros(8)
            g[:7] = sys_.H.exact_gradient(np.asarray(q)[:7])
            return g

        H = ScalarField(E.enlarged, H_enl, exact_gradient=H_grad, name="H")
        q0 = E.sigma0(model.sample_system(1, bundle.seed)[0])
        traj = dyn_mod.solve_dynamics(P, q0, t_end, dt, H=H)
        report["energy_drift"] = traj.energy_drift
        report["steps"] = len(traj.times) - 1
        if cfg.get("output"):
            with open(cfg["output"], "w") as fh:
                fh.write("t," + ",".join(E.enlarged.coord_names) + "\n")
                for t, row in zip(traj.times, traj.states):
                    fh.write(",".join(repr(float(v))
                                      for v in [t, *row]) + "\n")
            report["trajectory_file"] = cfg["output"]
            report["_output_is_trajectory"] = True
        report["pass"] = True
        return report, EXIT_PASS
    except DegenerateInversionError as exc:
        report["error"] = str(exc)
        return report, EXIT_NUMERICAL


def build_parser():
    ap = argparse.ArgumentParser(
        prog="coiso",
        description="coisotropic-embedding engine for pre-symplectic models")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=["monopole", "lattice-ed",
                                            "lattice-ym"])
    common.add_argument("--grid", help="a,b,c")
    common.add_argument("--n", type=float)
    common.add_argument("--group")
    common.add_argument("--points", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--tol-rank", dest="tol_rank", type=float)
    common.add_argument("--tol-curvature", dest="tol_curvature", type=float)
    common.add_argument("--tol-closed", dest="tol_closed", type=float)
    common.add_argument("--tol-jacobi", dest="tol_jacobi", type=float)
    common.add_argument("--backend", choices=["central_difference",
                                              "user_exact"])
    common.add_argument("--h", type=float)
    common.add_argument("--output")
    common.add_argument("--no-timestamp", action="store_true")
    common.add_argument("--config", help="JSON config file")

    sub.add_parser("analyze", parents=[common])
    pb = sub.add_parser("bracket", parents=[common])
    pb.add_argument("--f", required=True)
    pb.add_argument("--g", required=True)
    pb.add_argument("--at")
    pb.add_argument("--random", type=int)
    pj = sub.add_parser("jacobi", parents=[common])
    pj.add_argument("--triples", type=int)
    pj.add_argument("--corrupt", action="store_true")
    sub.add_parser("pca", parents=[common])
    pd = sub.add_parser("dynamics", parents=[common])
    pd.add_argument("--t-end", dest="t_end", type=float)
    pd.add_argument("--dt", type=float)
    return ap


COMMANDS = {"analyze": cmd_analyze, "bracket": cmd_bracket,
            "jacobi": cmd_jacobi, "pca": cmd_pca, "dynamics": cmd_dynamics}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report, code = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    output = cfg.get("output")
    if report.pop("_output_is_trajectory", False):
        output = None
    emit(report, output, args.no_timestamp)
    return code


if __name__ == "__main__":
    sys.exit(main())
