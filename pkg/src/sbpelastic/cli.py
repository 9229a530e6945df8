"""
Command-line entry point.

Subcommands:
    certify      run the 1D operator invariant battery and write a report
    convergence  manufactured-solution resolution sweep (Table-style CSV)
    audit        dense self-adjointness/definiteness audit of the operator
    simulate     time-domain run with point source, receivers and energy
    speeds       Christoffel wave speeds and slowness-surface polylines

Configuration lives in a single YAML file; command-line overrides
(--order, --stencil, --cfl, --beta, --seed, --out-dir) take precedence.
Every run writes a `manifest.json` with the resolved configuration and
package versions next to its outputs; all files are written atomically
(temporary file + rename).  Exit status: 0 success, 1 check failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import sys
import tempfile

import numpy as np
import yaml

from . import elasticity, mesh, sbp1d, timestepper, verify
from .discretization import ElasticOperator, constant_material

AUDIT_ASYMMETRY_TOL = 1e-13
AUDIT_EIG_TOL = 1e-10

DEFAULTS = {
    "geometry": {
        "n": 41,
        "radius": 0.3,
        "half_width": 1.0,
        "inner_bc": "displacement",
        "outer_bc": "robin",
    },
    "material": {
        "kind": "isotropic",       # isotropic | manufactured | random
        "lam": 1.0,
        "mu": 1.0,
        "rho": 1.0,
        "seed": 7,
    },
    "operator": {
        "order": 4,
        "stencil": "narrow",
        "beta": 1.0,
    },
    "run": {
        "t_final": 1.0,
        "cfl": 0.5,
        "energy_cadence": 1,
        "source": {
            "block": 0,
            "position": [0.5, 0.5],
            "force": [0.0, 1.0],
            "peak_frequency": 4.0,
            "delay": None,
        },
        "receivers": [[0, 0.75, 0.5]],
        "snapshots": True,
    },
    "convergence": {
        "kind": "anisotropic",
        "orders": [2, 4, 6],
        "resolutions": [40, 60, 80, 100, 120],
        "t_final": 1.0,
    },
    "certify": {
        "orders": [2, 4, 6],
        "sizes": [12, 24],
        "samples": 20,
    },
    "audit": {
        "orders": [2, 4, 6],
        "stencils": ["narrow"],
        "n": 35,
        "max_dofs": 40000,
    },
    "speeds": {
        "n_dirs": 360,
        "sample_point": [0.3, -0.2],
    },
}


class ConfigError(ValueError):
    """Unusable configuration (maps to exit status 2)."""


# ---------------------------------------------------------------------------
# Configuration handling.


def _merge(base, override, path="config"):
    if not isinstance(override, dict):
        raise ConfigError(f"{path} must be a mapping")
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown configuration key {path}.{key}")
        if isinstance(base[key], dict) and key != "source":
            out[key] = _merge(base[key], value, f"{path}.{key}")
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path=None):
    """Defaults, deep-merged with the YAML file at `path` if given."""
    if path is None:
        return copy.deepcopy(DEFAULTS)
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return _merge(DEFAULTS, data or {})


def _apply_overrides(cfg, args):
    if args.order is not None:
        cfg["operator"]["order"] = args.order
        for section in ("convergence", "certify", "audit"):
            cfg[section]["orders"] = [args.order]
    if args.orders is not None:
        try:
            orders = [int(tok) for tok in args.orders.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad --orders value {args.orders!r}") from exc
        for section in ("convergence", "certify", "audit"):
            cfg[section]["orders"] = orders
    if args.stencil is not None:
        cfg["operator"]["stencil"] = args.stencil
        cfg["audit"]["stencils"] = [args.stencil]
    if args.cfl is not None:
        cfg["run"]["cfl"] = args.cfl
    if args.beta is not None:
        cfg["operator"]["beta"] = args.beta
    if args.seed is not None:
        cfg["material"]["seed"] = args.seed
    for section in ("convergence", "certify", "audit"):
        for order in cfg[section]["orders"]:
            if order not in (2, 4, 6):
                raise ConfigError(f"unsupported order {order}")
    return cfg


# ---------------------------------------------------------------------------
# Output plumbing.


def _atomic_write(path, text):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    """Atomically write rows (sequences or dicts) under a fixed header."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        if isinstance(row, dict):
            row = [row[col] for col in header]
        wr.writerow([f"{v:.17g}" if isinstance(v, float) else v
                     for v in row])
    _atomic_write(path, buf.getvalue())


def _versions():
    import importlib.metadata
    import scipy
    import sympy
    try:
        own = importlib.metadata.version("sbpelastic")
    except importlib.metadata.PackageNotFoundError:
        own = "unpackaged"
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "sympy": sympy.__version__,
        "sbpelastic": own,
    }


def write_manifest(out_dir, subcommand, cfg, outputs):
    manifest = {
        "subcommand": subcommand,
        "config": cfg,
        "seed": cfg["material"]["seed"],
        "versions": _versions(),
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"),
                  json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Shared builders.


def material_from_config(cfg):
    mat = cfg["material"]
    if mat["kind"] == "isotropic":
        return constant_material(elasticity.isotropic_stiffness(
            float(mat["lam"]), float(mat["mu"]), rho=float(mat["rho"])))
    if mat["kind"] == "manufactured":
        return elasticity.mms_material
    if mat["kind"] == "random":
        seed = int(mat["seed"])
        return lambda points: elasticity.random_stiffness(seed, points)
    raise ConfigError(f"unknown material kind {mat['kind']!r}")


def domain_from_config(cfg):
    geo = cfg["geometry"]
    try:
        return mesh.build_reference_domain(
            int(geo["n"]), cfg["operator"]["order"],
            radius=float(geo["radius"]),
            half_width=float(geo["half_width"]),
            inner_bc=geo["inner_bc"], outer_bc=geo["outer_bc"])
    except (ValueError, mesh.FoldedMappingError) as exc:
        raise ConfigError(f"bad geometry: {exc}") from exc


def operator_from_config(cfg, domain, material):
    opc = cfg["operator"]
    if opc["stencil"] not in ("narrow", "wide"):
        raise ConfigError(f"unknown stencil {opc['stencil']!r}")
    return ElasticOperator(domain, material,
                           wide_stencil=(opc["stencil"] == "wide"),
                           beta=float(opc["beta"]))


def point_source_forcing(domain, source):
    """Ricker-in-time, discrete-delta-in-space body force.

    The returned callable dispatches on the identity of the node array
    it is handed, which is how the operator distinguishes blocks.
    """
    block = int(source["block"])
    if not 0 <= block < len(domain.blocks):
        raise ConfigError(f"source block {block} out of range")
    force = np.asarray(source["force"], dtype=float)
    freq = float(source["peak_frequency"])
    delay = source.get("delay")
    weights = {}
    for bi, blk in enumerate(domain.blocks):
        w = np.zeros(blk.grid.nodes.shape)
        if bi == block:
            for i, j, wt in timestepper.discrete_delta(
                    blk, tuple(source["position"])):
                w[i, j] += wt * force
        weights[id(blk.grid.nodes)] = w

    def forcing(t, X):
        return timestepper.ricker(t, freq, delay) * weights[id(X)]

    return forcing


def receiver_indices(domain, receivers):
    """Map (block, x1, x2) reference positions to nearest node indices."""
    out = []
    for entry in receivers:
        block, x1, x2 = int(entry[0]), float(entry[1]), float(entry[2])
        if not 0 <= block < len(domain.blocks):
            raise ConfigError(f"receiver block {block} out of range")
        if not (0.0 <= x1 <= 1.0 and 0.0 <= x2 <= 1.0):
            raise ConfigError(f"receiver {entry} outside the block")
        g = domain.blocks[block].grid
        out.append((block, int(round(x1 / g.h1)), int(round(x2 / g.h2))))
    return out


# ---------------------------------------------------------------------------
# Subcommands.  Each returns (exit status, list of written files).


def cmd_certify(cfg, out_dir):
    header = ["order", "n_points", "check", "residual", "tol", "passed"]
    rows = []
    ok = True
    for order in cfg["certify"]["orders"]:
        for size in cfg["certify"]["sizes"]:
            ops = sbp1d.build_operator_set(order, int(size),
                                           1.0 / (int(size) - 1))
            report = sbp1d.certify_operator_set(
                ops, n_coeff_samples=int(cfg["certify"]["samples"]),
                seed=cfg["material"]["seed"])
            ok = ok and report["passed"]
            for name, entry in report.items():
                if isinstance(entry, dict):
                    rows.append([order, size, name,
                                 float(entry["residual"]),
                                 float(entry["tol"]),
                                 int(entry["passed"])])
    path = os.path.join(out_dir, "certify.csv")
    write_csv(path, header, rows)
    status = "pass" if ok else "FAIL"
    print(f"certify: {status} ({len(rows)} checks)")
    return (0 if ok else 1), [path]


def cmd_convergence(cfg, out_dir):
    conv = cfg["convergence"]
    if conv["kind"] not in verify.KINDS:
        raise ConfigError(f"unknown manufactured-solution kind "
                          f"{conv['kind']!r}")
    header = ["h_inv", "ppwl", "order", "stencil", "log10_error", "rate"]
    rows = []
    ok = True
    for order in conv["orders"]:
        def progress(row):
            print(f"  order {row['order']} h_inv {row['h_inv']}: "
                  f"log10 error {row['log10_error']:.3f} "
                  f"rate {row['rate']:.2f}", file=sys.stderr)

        swept = verify.run_convergence(
            conv["kind"], order, resolutions=tuple(conv["resolutions"]),
            stencil=cfg["operator"]["stencil"], cfl=float(cfg["run"]["cfl"]),
            t_final=float(conv["t_final"]), progress=progress)
        ok = ok and all(np.isfinite(r["error"]) for r in swept)
        rows.extend(swept)
        print(f"order {order}: average rate {verify.average_rate(swept):.3f}")
    path = os.path.join(out_dir, "convergence.csv")
    write_csv(path, header, rows)
    return (0 if ok else 1), [path]


def cmd_audit(cfg, out_dir):
    aud = cfg["audit"]
    seed = int(cfg["material"]["seed"])
    header = ["order", "stencil", "asymmetry_rel", "max_eig_scaled",
              "spectral_radius"]
    rows = []
    ok = True
    for order in aud["orders"]:
        domain = verify.two_block_audit_domain(order, n=int(aud["n"]))
        for stencil in aud["stencils"]:
            op = ElasticOperator(
                domain, lambda pts: elasticity.random_stiffness(seed, pts),
                wide_stencil=(stencil == "wide"),
                beta=float(cfg["operator"]["beta"]))
            try:
                report = verify.audit_operator(
                    op, max_dofs=int(aud["max_dofs"]))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            passed = (report["asymmetry_rel"] <= AUDIT_ASYMMETRY_TOL
                      and report["max_eig_scaled"] <= AUDIT_EIG_TOL)
            ok = ok and passed
            rows.append([order, stencil, report["asymmetry_rel"],
                         report["max_eig_scaled"],
                         report["spectral_radius"]])
            print(f"order {order} {stencil}: asymmetry "
                  f"{report['asymmetry_rel']:.2e}, max eig "
                  f"{report['max_eig_scaled']:.2e} "
                  f"({'pass' if passed else 'FAIL'})")
    path = os.path.join(out_dir, "audit.csv")
    write_csv(path, header, rows)
    return (0 if ok else 1), [path]


def cmd_simulate(cfg, out_dir):
    run = cfg["run"]
    domain = domain_from_config(cfg)
    op = operator_from_config(cfg, domain, material_from_config(cfg))
    dt = timestepper.estimate_dt(op, cfl=float(run["cfl"]))
    n_steps, dt = timestepper.steps_for(float(run["t_final"]), dt)
    forcing = (point_source_forcing(domain, run["source"])
               if run["source"] else None)
    receivers = receiver_indices(domain, run["receivers"])
    u = op.zero_state()
    v = op.zero_state()
    try:
        u, v, trace = timestepper.rk4_advance(
            op, u, v, dt, n_steps, forcing=forcing,
            receivers=receivers, record_energy=True)
    except timestepper.UnstableRunError as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return 1, []

    outputs = []
    cadence = max(1, int(run["energy_cadence"]))
    path = os.path.join(out_dir, "energy.csv")
    write_csv(path,
              ["t", "kinetic", "strain", "remainder", "correction", "total"],
              [[trace.times[k]] + [trace.energy[k][key] for key in
                                   ("kinetic", "strain", "remainder",
                                    "correction", "total")]
               for k in range(0, n_steps + 1, cadence)])
    outputs.append(path)

    for r in range(len(receivers)):
        path = os.path.join(out_dir, f"receiver_{r}.csv")
        write_csv(path, ["t", "u1", "u2", "v1", "v2"],
                  [[trace.times[k]] + list(trace.receivers[k, r])
                   for k in range(n_steps + 1)])
        outputs.append(path)

    if run["snapshots"]:
        for bi, blk in enumerate(domain.blocks):
            path = os.path.join(out_dir, f"snapshot_block{bi}.csv")
            nodes = blk.grid.nodes
            write_csv(path, ["i", "j", "X1", "X2", "u1", "u2"],
                      [[i, j, nodes[i, j, 0], nodes[i, j, 1],
                        u[bi][0, i, j], u[bi][1, i, j]]
                       for i in range(nodes.shape[0])
                       for j in range(nodes.shape[1])])
            outputs.append(path)
    print(f"simulate: {n_steps} steps of dt {dt:.3e}, "
          f"final energy {trace.energy[-1]['total']:.6e}")
    return 0, outputs


def cmd_speeds(cfg, out_dir):
    mat = cfg["material"]
    point = np.asarray(cfg["speeds"]["sample_point"], dtype=float)
    field = material_from_config(cfg)(point)
    C, rho = field.C, float(field.rho)
    n_dirs = int(cfg["speeds"]["n_dirs"])
    path = os.path.join(out_dir, "slowness.csv")
    # dump_slowness_csv is not atomic; go through the common writer
    polys = elasticity.slowness_surface(C, rho, n_dirs)
    angles = np.append(np.linspace(0.0, 2 * np.pi, n_dirs, endpoint=False),
                       0.0)
    write_csv(path, ["branch", "angle", "s1", "s2"],
              [[b, ang, s1, s2]
               for b, poly in enumerate(polys)
               for ang, (s1, s2) in zip(angles, poly)])
    speeds = elasticity.christoffel_speeds(C, rho, np.array([1.0, 0.0]))
    print(f"speeds ({mat['kind']} at {point.tolist()}): "
          f"qS {speeds[0]:.6f}, qP {speeds[1]:.6f}")
    return 0, [path]


COMMANDS = {
    "certify": cmd_certify,
    "convergence": cmd_convergence,
    "audit": cmd_audit,
    "simulate": cmd_simulate,
    "speeds": cmd_speeds,
}


# ---------------------------------------------------------------------------
# Dispatch.


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sbpelastic",
        description="Multiblock SBP-SAT elastic wave solver")
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="YAML configuration file")
    parser.add_argument("--out-dir", default=".",
                        help="output directory (default: current)")
    parser.add_argument("--order", type=int, choices=(2, 4, 6))
    parser.add_argument("--orders",
                        help="comma-separated list, e.g. 2,4,6")
    parser.add_argument("--stencil", choices=("narrow", "wide"))
    parser.add_argument("--cfl", type=float)
    parser.add_argument("--beta", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int, default=None,
                        help="worker thread hint (numerics run in-process)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        out_dir = args.out_dir
        os.makedirs(out_dir, exist_ok=True)
        status, outputs = COMMANDS[args.subcommand](cfg, out_dir)
        write_manifest(out_dir, args.subcommand, cfg, outputs)
        return status
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
