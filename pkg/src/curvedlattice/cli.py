"""Command-line front end.

Subcommands

* ``spectrum`` — eigenvalues, residuals and a symmetry report per time slice
* ``ldos``     — LDOS grids on the real and/or imaginary energy axis, as CSV
  and optional cubehelix PPM heatmaps
* ``evolve``   — propagate an initial spinor field, write the norm trace and
  optional snapshots; ``--check-duality`` adds the flat-dual discrepancy
* ``classify`` — symmetry report only
* ``dump``     — the assembled matrix and the sampled metric tables

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  All
numeric output uses ``repr`` floats, so identical configs produce
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig
from .evolve import PropagationError, dual_propagate, propagate
from .heatmap import write_ppm
from .metric import MetricDomainError, distance_profile
from .observables import default_gamma, energy_grid, ldos_imag, ldos_real
from .operator import OperatorError, build, hermitian_residual
from .spectral import SpectralError, eig_general, eig_hermitian
from .symmetry import SymmetryError, classify


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _slice_suffix(times, t) -> str:
    return f"_t{t:g}" if len(times) > 1 else ""


def _decompose(H, tol):
    if hermitian_residual(H) <= tol:
        return eig_hermitian(H)
    return eig_general(H)


def _out(cfg, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def cmd_spectrum(cfg: RunConfig) -> list[str]:
    model = cfg.model()
    written = []
    for t in cfg.times:
        sample = model.sample(t)
        H = build(sample, cfg.M, cfg.a, cfg.bc)
        dec = _decompose(H, cfg.tol)
        suffix = _slice_suffix(cfg.times, t)
        path = _out(cfg, f"spectrum{suffix}.csv")
        _write_csv(
            path,
            "index,re_E,im_E,residual",
            (
                [str(j), _fmt(ev.real), _fmt(ev.imag), _fmt(dec.residuals[j])]
                for j, ev in enumerate(dec.eigenvalues)
            ),
        )
        written.append(path)
        report = classify(H, sample, tol=cfg.tol, decomposition=dec)
        jpath = _out(cfg, f"symmetry{suffix}.json")
        with open(jpath, "w") as fh:
            fh.write(report.to_json() + "\n")
        written.append(jpath)
    return written


def _grid_bounds(component: np.ndarray, gamma: float, cfg: RunConfig):
    if cfg.e_min is not None:
        return cfg.e_min, cfg.e_max
    lo, hi = float(component.min()), float(component.max())
    pad = max(0.05 * (hi - lo), 10.0 * gamma)
    return lo - pad, hi + pad


def cmd_ldos(cfg: RunConfig) -> list[str]:
    model = cfg.model()
    axes = ("real", "imaginary") if cfg.axis == "both" else (cfg.axis,)
    written = []
    meta = {}
    for t in cfg.times:
        sample = model.sample(t)
        H = build(sample, cfg.M, cfg.a, cfg.bc)
        dec = _decompose(H, cfg.tol)
        suffix = _slice_suffix(cfg.times, t)
        for axis in axes:
            gamma = cfg.gamma if cfg.gamma is not None else default_gamma(dec, axis)
            component = dec.eigenvalues.real if axis == "real" else dec.eigenvalues.imag
            lo, hi = _grid_bounds(component, gamma, cfg)
            grid = energy_grid(lo, hi, cfg.n_e)
            make = ldos_real if axis == "real" else ldos_imag
            ld = make(dec, grid, gamma)
            tag = "real" if axis == "real" else "imag"
            path = _out(cfg, f"ldos_{tag}{suffix}.csv")
            _write_csv(
                path,
                "site,energy,value",
                (
                    [str(n), _fmt(grid[e]), _fmt(ld.values[n, e])]
                    for n in range(ld.values.shape[0])
                    for e in range(grid.size)
                ),
            )
            written.append(path)
            meta[os.path.basename(path)] = {
                "t": t,
                "axis": axis,
                "gamma": gamma,
                "e_min": lo,
                "e_max": hi,
                "n_e": cfg.n_e,
                "normalized": ld.normalized,
            }
            if cfg.heatmap:
                ppm = _out(cfg, f"ldos_{tag}{suffix}.ppm")
                write_ppm(ppm, ld)
                written.append(ppm)
    mpath = _out(cfg, "ldos_meta.json")
    with open(mpath, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(mpath)
    return written


def _write_trace(path, trace, discrepancy=None):
    header = "t,norm,eta_norm"
    if discrepancy is not None:
        header += ",duality_discrepancy"
    rows = []
    for i, t in enumerate(trace.times):
        row = [_fmt(t), _fmt(trace.norms[i]), _fmt(trace.eta_norms[i])]
        if discrepancy is not None:
            row.append(_fmt(discrepancy[i]))
        rows.append(row)
    _write_csv(path, header, rows)


def _write_snapshots(cfg, trace, written):
    for snap in trace.snapshots:
        path = _out(cfg, f"snapshot_t{snap.t:g}.csv")
        vals = snap.values
        _write_csv(
            path,
            "site,re_0,im_0,re_1,im_1",
            (
                [
                    str(n),
                    _fmt(vals[2 * n].real),
                    _fmt(vals[2 * n].imag),
                    _fmt(vals[2 * n + 1].real),
                    _fmt(vals[2 * n + 1].imag),
                ]
                for n in range(vals.shape[0] // 2)
            ),
        )
        written.append(path)


def cmd_evolve(cfg: RunConfig) -> list[str]:
    model = cfg.model()
    psi0 = cfg.initial_state()
    written = []
    snap_times = list(cfg.snapshot_times)
    try:
        if cfg.check_duality:
            # snapshot every step so the discrepancy column covers the trace
            trace = propagate(
                model, cfg.M, psi0, cfg.t0, cfg.t1, cfg.dt, cfg.bc,
                snapshot_times="all",
            )
            dual = dual_propagate(
                model, cfg.M, psi0, cfg.t0, cfg.t1, cfg.dt, cfg.bc,
                snapshot_times="all",
            )
            disc = []
            for sa, sb in zip(trace.snapshots, dual.snapshots):
                na = np.linalg.norm(sa.values)
                disc.append(np.linalg.norm(sa.values - sb.values) / na if na > 0 else 0.0)
            path = _out(cfg, "trace.csv")
            _write_trace(path, trace, discrepancy=disc)
            written.append(path)
        else:
            trace = propagate(
                model, cfg.M, psi0, cfg.t0, cfg.t1, cfg.dt, cfg.bc,
                snapshot_times=snap_times,
            )
            path = _out(cfg, "trace.csv")
            _write_trace(path, trace)
            written.append(path)
            _write_snapshots(cfg, trace, written)
    except PropagationError as err:
        if err.partial is not None and err.partial.times.size:
            path = _out(cfg, "trace.csv")
            _write_trace(path, err.partial)
        raise
    return written


def cmd_classify(cfg: RunConfig) -> list[str]:
    model = cfg.model()
    t = cfg.times[0]
    sample = model.sample(t)
    H = build(sample, cfg.M, cfg.a, cfg.bc)
    report = classify(H, sample, tol=cfg.tol)
    path = _out(cfg, "symmetry.json")
    with open(path, "w") as fh:
        fh.write(report.to_json() + "\n")
    return [path]


def cmd_dump(cfg: RunConfig) -> list[str]:
    model = cfg.model()
    t = cfg.times[0]
    sample = model.sample(t)
    H = build(sample, cfg.M, cfg.a, cfg.bc)
    written = []
    mpath = _out(cfg, "matrix.csv")
    A = H.matrix
    rows, cols = np.nonzero(A)
    _write_csv(
        mpath,
        "row,col,re,im",
        (
            [str(i), str(j), _fmt(A[i, j].real), _fmt(A[i, j].imag)]
            for i, j in zip(rows, cols)
        ),
    )
    written.append(mpath)

    alpha, beta, dlog = sample.alpha, sample.beta, sample.dlog_beta_dt
    delta = distance_profile(sample)
    L = sample.L
    hop_f = np.zeros(L)
    hop_b = np.zeros(L)
    for n in range(L):
        j = 2 * n
        if n + 1 < L:
            hop_f[n] = abs(A[j, j + 2])
        if n - 1 >= 0:
            hop_b[n] = abs(A[j, j - 2])
    tpath = _out(cfg, "metric.csv")
    _write_csv(
        tpath,
        "n,x,alpha,beta,dlog_beta_dt,distance,hop_forward,hop_backward,onsite_mass,onsite_imag",
        (
            [
                str(n),
                _fmt(n * cfg.a),
                _fmt(alpha[n]),
                _fmt(beta[n]),
                _fmt(dlog[n]),
                _fmt(delta[n]),
                _fmt(hop_f[n]),
                _fmt(hop_b[n]),
                _fmt(cfg.M * alpha[n]),
                _fmt(-0.5 * dlog[n]),
            ]
            for n in range(L)
        ),
    )
    written.append(tpath)
    return written


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "ldos": cmd_ldos,
    "evolve": cmd_evolve,
    "classify": cmd_classify,
    "dump": cmd_dump,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--family", choices=(
        "flat", "rindler", "de_sitter", "anti_de_sitter", "weyl", "linear_conformal", "custom"))
    p.add_argument("--q", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--alpha", help="custom metric alpha(x, t) expression")
    p.add_argument("--beta", help="custom metric beta(x, t) expression")
    p.add_argument("--L", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--M", type=float)
    p.add_argument("--bc", choices=("open", "periodic"))
    p.add_argument("--tol", type=float)
    p.add_argument("--times", type=float, nargs="+")
    p.add_argument("--out-dir", dest="out_dir")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvedlattice",
        description="Lattice Dirac Hamiltonians for curved 1+1D spacetime metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("spectrum", "eigenvalues and symmetry report"),
        ("ldos", "local density of states grids"),
        ("evolve", "time evolution of a spinor field"),
        ("classify", "symmetry report only"),
        ("dump", "matrix and metric tables"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "ldos":
            p.add_argument("--axis", choices=("real", "imaginary", "both"))
            p.add_argument("--gamma", type=float)
            p.add_argument("--e-min", dest="e_min", type=float)
            p.add_argument("--e-max", dest="e_max", type=float)
            p.add_argument("--n-e", dest="n_e", type=int)
            p.add_argument("--heatmap", action="store_true", default=None)
        if name == "evolve":
            p.add_argument("--t0", type=float)
            p.add_argument("--t1", type=float)
            p.add_argument("--dt", type=float)
            p.add_argument("--k", type=float, help="plane-wave momentum")
            p.add_argument("--branch", type=int, choices=(1, -1))
            p.add_argument("--check-duality", action="store_true", default=None)
            p.add_argument("--snapshot-times", dest="snapshot_times", type=float, nargs="+")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    skip = {"command", "config", "k", "branch"}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        overrides[key] = value
    if args.command == "evolve" and (getattr(args, "k", None) is not None or getattr(args, "branch", None) is not None):
        overrides["initial"] = {
            "kind": "plane_wave",
            "k": getattr(args, "k", None) or 0.0,
            "branch": getattr(args, "branch", None) or 1,
        }
    if args.config:
        return RunConfig.from_file(args.config, overrides)
    return RunConfig.from_dict(overrides, apply_env="out_dir" not in overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    try:
        written = _COMMANDS[args.command](cfg)
    except (MetricDomainError, OperatorError, SpectralError, SymmetryError, PropagationError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
