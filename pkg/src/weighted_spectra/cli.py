"""Command-line entry point: ``wspec eig | scan | verify | export``.

Settings come from built-in defaults, then an optional flat ``key=value``
config file (``--config``), then command-line flags.

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 solver failure.
"""
import argparse
import math
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import exactcalc as ec
from . import io as wio
from . import verify as vf
from ._accel import backend_name
from .density import (FamilyParams, build_family_density, compute_c0, compute_Cj,
                      constant_density, lemma3_roots)
from .eigsolve import EigenSolveError, solve_smallest
from .femassembly import build_problem
from .manifold import MeshError, build_hemisphere, build_icosphere, build_torus_grid

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
SUITES = ("reilly", "bochner", "lemma3", "hypothesis", "scale")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    manifold: str = "sphere"
    level: int = 5
    grid: int = 64
    alpha: float = 2.0
    j: int = 10
    j_min: int = 8
    j_max: int = 64
    n: int = 2
    kappa: float = 1.0
    basepoint: tuple = (0.0, 0.0, 1.0)
    rho: str = "const"
    rho_scale: float = 1.0
    count: int = 5
    eig_tol: float = 1e-8
    method: str = "auto"
    quadrature_n: int = 256
    output_dir: str = "."
    seed: int = 0
    vectors: bool = False

    def validate(self):
        if self.manifold not in ("sphere", "torus", "hemisphere"):
            raise ConfigError(f"unknown manifold {self.manifold!r}")
        if self.rho not in ("const", "family"):
            raise ConfigError(f"rho must be 'const' or 'family', got {self.rho!r}")
        if self.method not in ("auto", "dense", "iterative"):
            raise ConfigError(f"unknown method {self.method!r}")
        if len(self.basepoint) != 3 or abs(np.linalg.norm(self.basepoint) - 1) > 1e-9:
            raise ConfigError("basepoint must be a unit 3-vector")
        if not 0 < self.eig_tol <= 1e-4:
            raise ConfigError("eig_tol must lie in (0, 1e-4]")
        if not self.rho_scale > 0:
            raise ConfigError("rho_scale must be positive")
        if self.quadrature_n < 16:
            raise ConfigError("quadrature_n must be >= 16")
        if not os.path.isdir(self.output_dir):
            raise ConfigError(f"output directory {self.output_dir!r} does not exist")
        if not os.access(self.output_dir, os.W_OK):
            raise ConfigError(f"output directory {self.output_dir!r} is not writable")

    def provenance(self):
        d = asdict(self)
        d["basepoint"] = ",".join(wio.fmt(c) for c in self.basepoint)
        return d


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key, raw):
    kind = _TYPES[key]
    try:
        if kind in (int, "int"):
            return int(raw)
        if kind in (float, "float"):
            return float(raw)
        if kind in (bool, "bool"):
            if isinstance(raw, bool):
                return raw
            return str(raw).strip().lower() in ("1", "true", "yes", "on")
        if kind in (tuple, "tuple"):
            if isinstance(raw, str):
                raw = raw.replace(",", " ").split()
            return tuple(float(c) for c in raw)
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def read_config_file(path):
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ConfigError(f"{path}:{num}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def resolve_config(args):
    """Merge defaults, config file and flags; returns (config, explicitly set keys)."""
    values = read_config_file(args.config) if args.config else {}
    explicit = set(values)
    for key in _TYPES:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = _coerce(key, v)
            explicit.add(key)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg, explicit


def build_mesh(cfg):
    if cfg.manifold == "sphere":
        return build_icosphere(cfg.level)
    if cfg.manifold == "hemisphere":
        return build_hemisphere(cfg.level)
    return build_torus_grid(cfg.grid)


def build_field(cfg, mesh):
    if cfg.rho == "const":
        fld = constant_density(mesh, cfg.alpha)
    else:
        fld = build_family_density(mesh, FamilyParams(alpha=cfg.alpha, n=cfg.n, j=cfg.j, kappa=cfg.kappa),
                                   np.array(cfg.basepoint))
    return fld if cfg.rho_scale == 1 else fld.scaled(cfg.rho_scale)


def _out(cfg, name):
    return os.path.join(cfg.output_dir, name)


# commands


def cmd_eig(cfg, explicit):
    mesh = build_mesh(cfg)
    fld = build_field(cfg, mesh)
    problem = build_problem(mesh, fld)
    try:
        res = solve_smallest(problem, cfg.count, tol=cfg.eig_tol, method=cfg.method, seed=cfg.seed)
    except EigenSolveError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    payload = {"config": cfg.provenance(), "result": res.to_json(include_vectors=cfg.vectors)}
    wio.write_json(_out(cfg, "eig.json"), payload)
    rows = [{"index": k, "eigenvalue": v, "residual": r}
            for k, (v, r) in enumerate(zip(res.eigenvalues, res.residuals))]
    wio.write_csv(_out(cfg, "eig.csv"), ("index", "eigenvalue", "residual"), rows, cfg.provenance())
    for row in rows:
        print(f"lambda_{row['index']} = {wio.fmt(row['eigenvalue'])}  (residual {row['residual']:.2e})")
    return EXIT_OK


def cmd_scan(cfg, explicit):
    if cfg.manifold not in ("sphere", "hemisphere"):
        raise ConfigError("scan runs on the sphere or hemisphere only")
    if cfg.j_min < 2 or cfg.j_max < cfg.j_min:
        raise ConfigError(f"empty or invalid j range [{cfg.j_min}, {cfg.j_max}]")
    if not cfg.alpha > 1:
        raise ConfigError("alpha must exceed 1 for family runs")
    j0 = math.ceil(4 * cfg.alpha / cfg.kappa)
    print(f"alpha = {cfg.alpha:g}, kappa = {cfg.kappa:g}: j0 = ceil(4 alpha / kappa) = {j0}")
    report = vf.theorem1_scan(cfg.alpha, range(cfg.j_min, cfg.j_max + 1), mesh_level=cfg.level,
                              kappa=cfg.kappa, n=cfg.n, basepoint=np.array(cfg.basepoint),
                              tol=cfg.eig_tol, method=cfg.method, seed=cfg.seed, manifold=cfg.manifold)
    rows = [r.as_dict() for r in report.rows]
    wio.write_csv(_out(cfg, "scan.csv"), vf.CSV_COLUMNS, rows, cfg.provenance())
    wio.write_csv(_out(cfg, "scan_control.csv"), vf.CSV_COLUMNS, [report.control.as_dict()], cfg.provenance())
    wio.write_json(_out(cfg, "scan.json"), {
        "config": cfg.provenance(), "j0": j0, "control": report.control.as_dict(), "rows": rows})
    c = report.control
    print(f"control rho=1: lambda1 = {c.lambda1:.10f}, lambda_tilde = {c.lambda_tilde:.10f}")
    print(f"{'j':>4} {'lambda_tilde':>14} {'kappa*j/2':>10} {'2*kappa*j':>10} {'hyp.margin':>11}")
    for r in report.rows:
        if r.ok:
            print(f"{r.j:>4} {r.lambda_tilde:>14.8f} {r.bound_proof:>10.3f} {r.bound_stated:>10.3f} "
                  f"{r.hypothesis_margin:>11.4g}")
        else:
            print(f"{r.j:>4} failed: {r.error}")
    return EXIT_OK if any(r.ok for r in report.rows) else EXIT_SOLVER


def _suite_identity(cfg, kind):
    checks = vf.identity_suite(kind, seed=cfg.seed, n=cfg.quadrature_n)
    lines = []
    ok = True
    for c in checks:
        passed = c.passed(1e-8, relative=(kind == "reilly"))
        ok &= passed
        lines.append({"alpha": c.alpha, "residual": c.residual, "residual_2n": c.residual_2n,
                      "agreement": c.agreement, "scale": c.lhs, "passed": passed})
    worst = max(c.residual for c in checks)
    print(f"{kind}: {len(checks)} cases, max residual {worst:.3e}, "
          f"max N/2N disagreement {max(c.agreement for c in checks):.3e}")
    if kind == "bochner":
        classical = [vf.classical_bochner_residual(u, cfg.quadrature_n) for u, _ in vf.random_pairs(cfg.seed)]
        cw = max(c.residual for c in classical)
        ok &= all(c.passed(1e-9, relative=False) for c in classical)
        print(f"bochner (constant h, classical form): max residual {cw:.3e}")
        lines.append({"classical_max_residual": cw})
    return ok, {"cases": lines, "max_residual": worst}


def _lemma3_cases(cfg, explicit):
    alphas = [cfg.alpha] if "alpha" in explicit else [1.5, 2.0, 3.0]
    js = [cfg.j] if "j" in explicit else list(range(2, 101))
    return alphas, js


def _suite_lemma3(cfg, explicit):
    mesh = build_icosphere(cfg.level) if cfg.manifold != "hemisphere" else build_hemisphere(cfg.level)
    alphas, js = _lemma3_cases(cfg, explicit)
    ok = True
    out = []
    for a in alphas:
        for j in js:
            p = FamilyParams(alpha=a, n=cfg.n, j=j, kappa=cfg.kappa)
            rep = vf.lemma3_check(p, mesh, np.array(cfg.basepoint))
            c0 = compute_c0(p)
            surd_l = math.sqrt(4 / p.b + 1 / (j * c0) ** 2)
            surd_r = (2 * math.exp(a - 1) - 1 / j) / c0
            root_l = math.exp((1 + compute_Cj(p)) * (a - 1))
            u1, u2 = lemma3_roots(p)
            checks = {
                "i": rep.passed_i,
                "ii": rep.passed_ii,
                "ii_basepoint_equality": rep.basepoint_gap_ii <= 1e-10,
                "iii_flat": rep.margin_iii_flat >= -1e-12,
                "root_identity": abs(root_l - u2) <= 1e-12 * abs(u2),
                "surd_identity": abs(surd_l - surd_r) <= 1e-12 * abs(surd_r),
                "roots_signs": u1 < 0 < u2,
                "exp_h_below_u2": rep.exp_h_max <= u2 + 1e-12,
                "h_above_Cj": rep.h_minus_Cj_min > 0,
            }
            ok &= all(checks.values())
            out.append({"alpha": a, "j": j, "checks": checks, "margins": {
                "i": rep.margin_i, "ii": rep.margin_ii, "ii_basepoint_gap": rep.basepoint_gap_ii,
                "iii_flat": rep.margin_iii_flat, "iii_sphere": rep.margin_iii_sphere}})
            if len(alphas) * len(js) <= 4:
                print(f"alpha={a:g} j={j}: (i) margin {rep.margin_i:.6g}, (ii) margin {rep.margin_ii:.3e}, "
                      f"(ii) gap at basepoint {rep.basepoint_gap_ii:.3e}, (iii) flat margin "
                      f"{rep.margin_iii_flat:.3e}, (iii) sphere-form margin {rep.margin_iii_sphere:.3e}")
    worst = {k: min(o["margins"][k] for o in out) for k in ("i", "ii", "iii_flat", "iii_sphere")}
    print(f"lemma3: {len(out)} cases, worst margins " + ", ".join(f"{k}={v:.3e}" for k, v in worst.items()))
    print("lemma3: clause (iii) on the sphere quadratic form is informational")
    return ok, {"cases": out, "worst": worst}


def _suite_hypothesis(cfg, explicit):
    mesh = build_icosphere(cfg.level)
    alphas, js = _lemma3_cases(cfg, explicit)
    ok = True
    out = []
    for a in alphas:
        p0 = FamilyParams(alpha=a, n=cfg.n, j=2, kappa=cfg.kappa)
        for j in js:
            rep = vf.hypothesis_check(p0.with_j(j), mesh, basepoint=np.array(cfg.basepoint))
            # the growth proof claims the hypothesis for every j >= j0
            holds = rep.margin >= -1e-12 if j >= p0.j0 else None
            if holds is False:
                ok = False
            out.append({"alpha": a, "j": j, "j0": p0.j0, "margin": rep.margin, "margin_flat": rep.margin_flat,
                        "excluded_fraction": rep.excluded_fraction, "holds_for_j_ge_j0": holds})
    for a in alphas:
        sel = [o for o in out if o["alpha"] == a and o["j"] >= o["j0"]]
        worst = min((o["margin"] for o in sel), default=math.nan)
        print(f"hypothesis alpha={a:g}: j0={out[[o['alpha'] for o in out].index(a)]['j0']}, "
              f"worst margin over j >= j0: {worst:.6g}")
    return ok, {"cases": out}


def _suite_scale(cfg, explicit):
    mesh = build_mesh(cfg)
    fld = build_field(cfg, mesh)
    rep = vf.scale_invariance_check(mesh, fld, cfg.alpha, [0.1, 10.0], method=cfg.method)
    ok = rep.max_rel_deviation <= 1e-10 and rep.max_factor_deviation <= 1e-10
    print(f"scale: lambda_tilde = {rep.lambda_tilde:.12g}, max relative deviation {rep.max_rel_deviation:.3e}, "
          f"lambda_1 scaling-factor deviation {rep.max_factor_deviation:.3e}")
    return ok, asdict(rep)


def cmd_verify(cfg, explicit, which):
    if which in ("reilly", "bochner"):
        ok, detail = _suite_identity(cfg, which)
    else:
        ok, detail = {"lemma3": _suite_lemma3, "hypothesis": _suite_hypothesis,
                      "scale": _suite_scale}[which](cfg, explicit)
    wio.write_json(_out(cfg, f"verify_{which}.json"), {"config": cfg.provenance(), "suite": which,
                                                        "passed": ok, "detail": detail})
    print(f"{which}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_export(cfg, explicit, what):
    mesh = build_mesh(cfg)
    prov = cfg.provenance()
    if what == "mesh":
        wio.write_off(_out(cfg, "mesh.off"), mesh)
    elif what == "density":
        wio.write_density_csv(_out(cfg, "density.csv"), build_field(cfg, mesh), prov)
    else:
        problem = build_problem(mesh, build_field(cfg, mesh))
        note = " ".join(f"{k}={v}" for k, v in sorted(prov.items()))
        wio.write_matrix_market(_out(cfg, "stiffness.mtx"), problem.stiffness, note)
        wio.write_matrix_market(_out(cfg, "mass.mtx"), problem.mass, note)
    print(f"wrote {what} for {cfg.manifold} to {cfg.output_dir}")
    return EXIT_OK


def _add_common(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--manifold", choices=("sphere", "torus", "hemisphere"))
    p.add_argument("--level", type=int, help="icosphere subdivision level")
    p.add_argument("--grid", type=int, help="torus grid size per axis")
    p.add_argument("--alpha", type=float)
    p.add_argument("--j", type=int)
    p.add_argument("--j-min", dest="j_min", type=int)
    p.add_argument("--j-max", dest="j_max", type=int)
    p.add_argument("--n", type=int, help="dimension parameter in the scalar constants")
    p.add_argument("--kappa", type=float)
    p.add_argument("--basepoint", help="unit 3-vector, e.g. 0,0,1")
    p.add_argument("--rho", choices=("const", "family"))
    p.add_argument("--rho-scale", dest="rho_scale", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--eig-tol", dest="eig_tol", type=float)
    p.add_argument("--method", choices=("auto", "dense", "iterative"))
    p.add_argument("--quadrature-n", dest="quadrature_n", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--vectors", action="store_const", const=True, default=None,
                   help="include eigenvectors in eig.json")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def make_parser():
    parser = _Parser(prog="wspec", description="Weighted Laplacian eigenvalue laboratory")
    parser.add_argument("--backend", action="store_true", help="print the kernel backend and exit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    _add_common(sub.add_parser("eig", help="assemble and solve the smallest eigenpairs"))
    _add_common(sub.add_parser("scan", help="lambda_1 sweep over the h_j family"))
    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("which")
    _add_common(p)
    p = sub.add_parser("export", help="write mesh (OFF), operators (MatrixMarket) or density (CSV)")
    p.add_argument("what", choices=("mesh", "operators", "density"))
    _add_common(p)
    return parser


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    if args.backend:
        print(backend_name())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        cfg, explicit = resolve_config(args)
        if args.command == "eig":
            return cmd_eig(cfg, explicit)
        if args.command == "scan":
            return cmd_scan(cfg, explicit)
        if args.command == "verify":
            if args.which not in SUITES:
                raise ConfigError(f"unknown suite {args.which!r}; choose from {', '.join(SUITES)}")
            return cmd_verify(cfg, explicit, args.which)
        return cmd_export(cfg, explicit, args.what)
    except (ConfigError, MeshError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
