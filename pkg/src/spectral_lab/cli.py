"""Command line front end: spectral-lab <subcommand> --config ...

Every run materializes its configuration (defaults included), executes
one experiment, persists plot-ready CSV/JSON artifacts under
``<out>/<subcommand>/<run-id>/`` and prints a machine-readable verdict
as the last stdout line.  Exit codes: 0 ok, 2 configuration error,
3 numerical non-convergence, 4 verdict FAIL.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import assembly, basis, config as cfgmod, enclosure, norms, phase_space
from .config import ConfigError, canonical_json
from .eigensolver import EigensolverConvergenceError, backend_name, eigenvalues
from .norms import NormsError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_FAIL = 4

_VERDICT_EXIT = {
    "PASS": EXIT_OK,
    "PASS-vacuous": EXIT_OK,
    "FLAGGED": EXIT_NUMERICAL,
    "FAIL": EXIT_FAIL,
}


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header: list, rows: list) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(canonical_json(payload) + "\n", encoding="utf-8")


class Runner:
    """Shared run-directory plumbing for all subcommands."""

    def __init__(self, name: str, cfg: dict, out_dir: str):
        self.name = name
        self.cfg = cfg
        self.rid = cfgmod.run_id(name, cfg)
        self.dir = Path(out_dir) / name / self.rid
        self.dir.mkdir(parents=True, exist_ok=True)
        self.timings = {}
        self._t0 = time.perf_counter()
        write_json(self.dir / "config.json", cfg)

    def stage(self, label: str):
        self.timings[label] = time.perf_counter() - self._t0
        self._t0 = time.perf_counter()

    def rng(self):
        return np.random.default_rng(self.cfg["seed"])

    def finish(self, verdict: str) -> int:
        digests = {}
        for path in sorted(self.dir.glob("*")):
            if path.name == "run_record.json":
                continue
            digests[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
        from . import __version__

        record = {
            "subcommand": self.name,
            "run_id": self.rid,
            "artifact_version": __version__,
            "eigensolver_backend": backend_name(),
            "timings_sec": self.timings,
            "output_digests": digests,
            "verdict": verdict,
        }
        write_json(self.dir / "run_record.json", record)
        print(f"run directory: {self.dir}")
        print(f"VERDICT {self.name} {verdict}")
        return _VERDICT_EXIT[verdict]


def _model_spec(cfg: dict) -> enclosure.ModelSpec:
    m = cfg["model"]
    return enclosure.ModelSpec(m["kind"], int(m["dim"]), float(m["b_field"]))


def _dim(cfg: dict) -> int:
    return int(cfg["model"]["dim"])


def _potentials(cfg: dict):
    dim = _dim(cfg)
    pots = cfg["potentials"]
    w = cfgmod.scalar_potential_from(pots["w"], dim)
    v1 = cfgmod.scalar_potential_from(pots["v1"], dim)
    a1 = cfgmod.vector_potential_from(pots["a1"], dim)
    return w, v1, a1


def cmd_spectrum(cfg: dict, out_dir: str) -> int:
    run = Runner("spectrum", cfg, out_dir)
    model = _model_spec(cfg)
    w, v1, a1 = _potentials(cfg)
    b, g = enclosure.build_model_basis(
        model,
        int(cfg["basis"]["size"]),
        float(cfg["basis"]["padding_factor"]),
        int(cfg["basis"]["landau_angular_ratio"]),
    )
    run.stage("basis")
    if model.kind == "pauli":
        plus, minus = assembly.assemble_pauli(model.b_field, w, a1, v1, b, g)
        mats = [("plus", plus), ("minus", minus)]
    else:
        mats = [("", assembly.assemble_full(model.assembly_kind, w, a1, v1, b, g))]
    run.stage("assembly")
    rows = []
    for tag, mat in mats:
        spec = eigenvalues(mat)
        for lam, res, conv in zip(spec.eigenvalues, spec.residuals, spec.converged):
            rows.append((lam.real, lam.imag, res, conv))
    run.stage("solve")
    write_csv(run.dir / "spectrum.csv", ["re", "im", "residual", "converged"], rows)
    summary = {
        "basis_size": b.size,
        "count": len(rows),
        "max_abs_imag": max((abs(r[1]) for r in rows), default=0.0),
        "n_converged": int(sum(1 for r in rows if r[3])),
    }
    write_json(run.dir / "summary.json", summary)
    return run.finish("PASS")


def cmd_enclosure(cfg: dict, out_dir: str) -> int:
    run = Runner("enclosure", cfg, out_dir)
    model = _model_spec(cfg)
    w, v1, a1 = _potentials(cfg)
    sweep = cfg["sweep"]
    ecfg = enclosure.EnclosureConfig(
        model=model,
        v1=v1,
        a1=a1,
        w=w,
        r=float(sweep["r"]),
        threshold_a=float(sweep["threshold_a"]),
        tau_ladder=tuple(float(t) for t in sweep["tau"]),
        scale_v1=bool(sweep["scale_v1"]),
        scale_a1=bool(sweep["scale_a1"]),
        basis_sizes=tuple(int(s) for s in cfg["basis"]["sizes"]),
        padding_factor=float(cfg["basis"]["padding_factor"]),
        landau_angular_ratio=int(cfg["basis"]["landau_angular_ratio"]),
        mu=float(sweep["mu"]),
        delta=float(sweep["delta"]),
        delta_prime=float(sweep["delta_prime"]),
        gate_rel_tol=float(sweep["gate_rel_tol"]),
        norm_grid_radius=float(sweep["norm_grid_radius"]),
        norm_grid_points=int(sweep["norm_grid_points"]),
    )
    if model.kind == "pauli":
        rep = enclosure.run_pauli_enclosure(ecfg)
        merged = rep.merged
        extra = {
            "rho_with_field_prefactor": rep.rho_with_field,
            "plus_verdict": rep.plus.verdict,
            "minus_verdict": rep.minus.verdict,
        }
    else:
        merged = enclosure.run_enclosure(ecfg)
        extra = {}
    run.stage("sweep")
    rows = [
        (r.tau, r.v1_norm_lr, r.max_im_z if r.max_im_z is not None else float("nan"), r.rho if r.rho is not None else float("nan"))
        for r in merged.rows
    ]
    write_csv(run.dir / "enclosure.csv", ["tau", "v1_norm_Lr", "max_im_z", "rho"], rows)
    payload = {
        "verdict": merged.verdict,
        "exponent": merged.exponent,
        "sup_rho": merged.sup_rho,
        "rho_slope": merged.rho_slope,
        "rho_slope_bound": merged.rho_slope_bound,
        "imz_slope": merged.imz_slope,
        "imz_slope_bound": merged.imz_slope_bound,
        "flags": merged.flags,
        "rows": [
            {
                "tau": r.tau,
                "v1_norm_lr": r.v1_norm_lr,
                "max_im_z": r.max_im_z,
                "rho": r.rho,
                "vacuous": r.vacuous,
                "n_converged": r.n_converged,
                "n_above_threshold": r.n_above_threshold,
                "n_unconverged_above": r.n_unconverged_above,
                "eigenvalues_above": [[v.real, v.imag] for v in r.eigenvalues_above],
                "eigenvalues_below_threshold": [
                    [v.real, v.imag] for v in r.eigenvalues_below
                ],
            }
            for r in merged.rows
        ],
        **extra,
    }
    write_json(run.dir / "enclosure.json", payload)
    return run.finish(merged.verdict)


def _scan_basis(cfg: dict):
    model = _model_spec(cfg)
    nc = cfg["norms"]
    if model.kind != "oscillator":
        raise ConfigError("model.kind: resolvent scans run on the oscillator model")
    return basis.build_hermite_basis(
        model.dim, int(nc["scan_size"]), padding_factor=float(nc["scan_padding"])
    )


def _auto_re_z(b: basis.BasisSpec, requested: float) -> float:
    if requested >= 0:
        return requested
    eigs = basis.model_eigenvalues(b)
    mid = 0.5 * (eigs.min() + eigs.max())
    return float(eigs[np.argmin(np.abs(eigs - mid))])


def cmd_resolvent_scan(cfg: dict, out_dir: str) -> int:
    run = Runner("resolvent-scan", cfg, out_dir)
    nc = cfg["norms"]
    b, g = _scan_basis(cfg)
    re_z = _auto_re_z(b, float(nc["re_z"]))
    run.stage("basis")
    out = norms.resolvent_scan(
        b,
        g,
        q=float(nc["q"]),
        re_z=re_z,
        im_ladder=[float(v) for v in nc["imz_ladder"]],
        rng=run.rng(),
        slope_tol=float(nc["slope_tol"]),
        slope_tol_22=float(nc["slope_tol_22"]),
        opnorm_kwargs={
            "maxiter": int(nc["opnorm_maxiter"]),
            "tol": float(nc["opnorm_tol"]),
        },
    )
    run.stage("scan")
    curves = ["qp_to_2", "qp_to_q", "2_to_2"]
    ladder = out["qp_to_2"].im_z
    rows = [
        (re_z, ladder[i], *(out[c].norms[i] for c in curves))
        for i in range(len(ladder))
    ]
    write_csv(
        run.dir / "scan.csv",
        ["re_z", "im_z", "norm_qprime_to_2", "norm_qprime_to_q", "norm_2_to_2"],
        rows,
    )
    summary = {
        "re_z": re_z,
        "q": float(nc["q"]),
        "basis_size": b.size,
        "curves": {
            c: {
                "slope": out[c].fit.slope,
                "predicted": out[c].fit.predicted,
                "tolerance": out[c].fit.tolerance,
                "stderr": out[c].fit.stderr,
                "verdict": out[c].fit.verdict,
                "converged": out[c].converged,
            }
            for c in curves
        },
    }
    verdict = "PASS" if all(out[c].fit.verdict == "PASS" for c in curves) else "FAIL"
    summary["verdict"] = verdict
    write_json(run.dir / "summary.json", summary)
    return run.finish(verdict)


def cmd_escape_check(cfg: dict, out_dir: str) -> int:
    run = Runner("escape-check", cfg, out_dir)
    ps = cfg["phase_space"]
    params = phase_space.EscapeFunctionParams(m0=float(ps["m0"]), mu=float(ps["mu"]))
    grid = phase_space.PhaseGrid(float(ps["radius"]), float(ps["spacing"]))
    cert = phase_space.check_escape_inequality(params, grid, c_min=float(ps["c_min"]))
    run.stage("certify")
    survives_r = survives_h = None
    if cert.verdict == "PASS":
        slack_r = phase_space.recheck_certificate(
            params, cert, phase_space.PhaseGrid(2.0 * grid.radius, grid.spacing)
        )
        slack_h = phase_space.recheck_certificate(
            params, cert, phase_space.PhaseGrid(grid.radius, grid.spacing / 2.0)
        )
        survives_r = slack_r >= 0.0
        survives_h = slack_h >= 0.0
    run.stage("recheck")
    if bool(cfg["output"]["write_margin_map"]):
        f = cert.margin_fields
        total = f["x"].size
        stride = max(1, int(np.ceil(total / float(ps["margin_map_max_rows"]))))
        sel = slice(None, None, stride)
        rows = list(
            zip(
                f["x"].ravel()[sel],
                f["xi"].ravel()[sel],
                f["lhs"].ravel()[sel],
                f["rhs"].ravel()[sel],
                f["margin"].ravel()[sel],
            )
        )
        write_csv(run.dir / "margin_map.csv", ["x", "xi", "L", "R_c", "margin"], rows)
    verdict = cert.verdict
    if verdict == "PASS" and not (survives_r and survives_h):
        verdict = "FAIL"
    summary = {
        "verdict": verdict,
        "c": cert.c,
        "C": cert.c_constant,
        "min_margin": cert.min_margin,
        "min_location": list(cert.min_location),
        "window_stable": cert.window_stable,
        "survives_radius_doubling": survives_r,
        "survives_spacing_halving": survives_h,
        "candidates": cert.candidates,
        "radius": grid.radius,
        "spacing": grid.spacing,
    }
    write_json(run.dir / "summary.json", summary)
    run.stage("write")
    return run.finish(verdict)


def cmd_projection(cfg: dict, out_dir: str) -> int:
    run = Runner("projection", cfg, out_dir)
    nc = cfg["norms"]
    model = _model_spec(cfg)
    if model.kind != "oscillator":
        raise ConfigError("model.kind: projection bounds run on the oscillator model")
    b, g = basis.build_hermite_basis(
        model.dim, int(nc["projection_size"]), padding_factor=2.0
    )
    rep = norms.projection_bound(
        b,
        g,
        range(int(nc["k_min"]), int(nc["k_max"]) + 1),
        q=float(nc["projection_q"]),
        rng=run.rng(),
        trend_tol=float(nc["trend_tol"]),
        opnorm_kwargs={
            "maxiter": int(nc["opnorm_maxiter"]),
            "tol": float(nc["opnorm_tol"]),
        },
    )
    run.stage("projections")
    rows = [
        (r.k, r.count, r.norm_2_to_q, r.norm_2_to_inf) for r in rep.rows
    ]
    write_csv(
        run.dir / "projection.csv",
        ["k", "count", "norm_2_to_q", "norm_2_to_inf"],
        rows,
    )
    ok = (
        rep.slope_2q is not None
        and rep.slope_2inf is not None
        and rep.slope_2q.slope <= float(nc["trend_tol"])
        and rep.slope_2inf.slope <= float(nc["trend_tol"])
    )
    verdict = "PASS" if ok else "FAIL"
    summary = {
        "verdict": verdict,
        "q": rep.q,
        "trend_slope_2_to_q": None if rep.slope_2q is None else rep.slope_2q.slope,
        "trend_slope_2_to_inf": None if rep.slope_2inf is None else rep.slope_2inf.slope,
        "trend_tol": float(nc["trend_tol"]),
        "basis_size": b.size,
    }
    write_json(run.dir / "summary.json", summary)
    return run.finish(verdict)


def _garding_symbol(name: str) -> phase_space.SymbolField:
    def bc(x, xi, v):
        return np.broadcast_to(np.asarray(v, float), np.broadcast(x, xi).shape).copy()

    if name == "oscillator":
        return phase_space.SymbolField(
            fn=lambda x, xi: np.asarray(x, float) ** 2 + np.asarray(xi, float) ** 2 + bc(x, xi, 0.0)
        )
    if name == "quartic_well":
        return phase_space.SymbolField(
            fn=lambda x, xi: (np.asarray(x, float) ** 2 + np.asarray(xi, float) ** 2 - 1.0) ** 2
            + bc(x, xi, 0.0)
        )
    if name == "zero":
        return phase_space.SymbolField(fn=lambda x, xi: bc(x, xi, 0.0))
    raise ConfigError(f"unknown garding symbol {name!r}")


def cmd_garding(cfg: dict, out_dir: str) -> int:
    run = Runner("garding", cfg, out_dir)
    ps = cfg["phase_space"]
    sym = _garding_symbol(ps["garding_symbol"])
    n = int(ps["weyl_points"])
    grid = phase_space.WeylGrid(n, float(ps["weyl_radius"]))
    grid2 = phase_space.WeylGrid(2 * n, float(ps["weyl_radius"]))
    cert = phase_space.garding_certificate(
        sym, grid, c_default=float(ps["garding_c_default"]), fraction=float(ps["bulk_fraction"])
    )
    run.stage("certify")
    cert2 = phase_space.garding_certificate(
        sym, grid2, c_default=float(ps["garding_c_default"]), fraction=float(ps["bulk_fraction"])
    )
    run.stage("doubled")
    drift = abs(cert.lambda_min - cert2.lambda_min)
    verdict = cert.verdict
    if verdict == "PASS" and drift > float(ps["garding_drift_tol"]):
        verdict = "FAIL"
    summary = {
        "verdict": verdict,
        "symbol": ps["garding_symbol"],
        "lambda_min": cert.lambda_min,
        "lambda_min_doubled": cert2.lambda_min,
        "resolution_drift": drift,
        "drift_tol": float(ps["garding_drift_tol"]),
        "c_default": cert.c_default,
        "bulk_dim": cert.subspace_dim,
        "n_points": n,
    }
    write_json(run.dir / "summary.json", summary)
    return run.finish(verdict)


def _moyal_pairs():
    def bc(x, xi, v):
        return np.broadcast_to(np.asarray(v, float), np.broadcast(x, xi).shape).copy()

    sym_x = phase_space.SymbolField(
        fn=lambda x, xi: bc(x, xi, x),
        grad_x=lambda x, xi: bc(x, xi, 1.0),
        grad_xi=lambda x, xi: bc(x, xi, 0.0),
    )
    sym_xi = phase_space.SymbolField(
        fn=lambda x, xi: bc(x, xi, xi),
        grad_x=lambda x, xi: bc(x, xi, 0.0),
        grad_xi=lambda x, xi: bc(x, xi, 1.0),
    )
    sym_x2 = phase_space.SymbolField(
        fn=lambda x, xi: bc(x, xi, np.asarray(x, float) ** 2),
        grad_x=lambda x, xi: bc(x, xi, 2.0 * np.asarray(x, float)),
        grad_xi=lambda x, xi: bc(x, xi, 0.0),
    )
    sym_xi2 = phase_space.SymbolField(
        fn=lambda x, xi: bc(x, xi, np.asarray(xi, float) ** 2),
        grad_x=lambda x, xi: bc(x, xi, 0.0),
        grad_xi=lambda x, xi: bc(x, xi, 2.0 * np.asarray(xi, float)),
    )

    def smooth_pair(s):
        a = phase_space.SymbolField(
            fn=lambda x, xi: np.sin(s * np.asarray(x, float))
            * np.exp(-0.01 * (s * np.asarray(xi, float)) ** 2)
            + bc(x, xi, 0.0)
        )
        b = phase_space.SymbolField(
            fn=lambda x, xi: np.cos(s * np.asarray(xi, float))
            / (1.0 + (s * np.asarray(x, float)) ** 2 / 50.0)
            + bc(x, xi, 0.0)
        )
        return a, b

    return sym_x, sym_xi, sym_x2, sym_xi2, smooth_pair


def cmd_moyal(cfg: dict, out_dir: str) -> int:
    run = Runner("moyal", cfg, out_dir)
    ps = cfg["phase_space"]
    grid = phase_space.WeylGrid(int(ps["weyl_points"]), float(ps["weyl_radius"]))
    frac = float(ps["bulk_fraction"])
    sym_x, sym_xi, sym_x2, sym_xi2, smooth_pair = _moyal_pairs()
    d_lin = phase_space.moyal_leading_check(sym_x, sym_xi, grid, frac)
    d_quad = phase_space.moyal_leading_check(sym_x2, sym_xi2, grid, frac)
    a1, b1 = smooth_pair(1.0)
    a2, b2 = smooth_pair(0.5)
    d_s1 = phase_space.moyal_leading_check(a1, b1, grid, frac)
    d_s2 = phase_space.moyal_leading_check(a2, b2, grid, frac)
    run.stage("defects")
    checks = {
        "linear_pair_d0_near_half": abs(d_lin.d0 - 0.5) <= 1e-6,
        "linear_pair_d1_small": d_lin.d1 <= 1e-6,
        "quadratic_pair_ordering": d_quad.d1 < d_quad.d0,
        "frequency_halving_decreases_d1": d_s2.d1 < d_s1.d1,
    }
    verdict = "PASS" if all(checks.values()) else "FAIL"
    summary = {
        "verdict": verdict,
        "checks": checks,
        "defects": {
            "x_xi": {"d0": d_lin.d0, "d1": d_lin.d1},
            "x2_xi2": {"d0": d_quad.d0, "d1": d_quad.d1},
            "smooth_s1": {"d0": d_s1.d0, "d1": d_s1.d1},
            "smooth_s05": {"d0": d_s2.d0, "d1": d_s2.d1},
        },
        "n_points": grid.n_points,
        "radius": grid.radius,
    }
    write_json(run.dir / "summary.json", summary)
    return run.finish(verdict)


def cmd_smoothing(cfg: dict, out_dir: str) -> int:
    run = Runner("smoothing", cfg, out_dir)
    nc = cfg["norms"]
    model = _model_spec(cfg)
    if model.kind != "oscillator":
        raise ConfigError("model.kind: smoothing checks run on the oscillator model")
    b, g = basis.build_hermite_basis(
        1,
        int(nc["smoothing_size"]),
        length_scale=float(nc["smoothing_length_scale"]),
        padding_factor=1.0,
    )
    run.stage("basis")
    out = norms.smoothing_check(
        b,
        g,
        mu=float(cfg["sweep"]["mu"]),
        re_z=float(nc["smoothing_re_z"]),
        im_ladder=[float(v) for v in nc["imz_ladder"]],
        rng=run.rng(),
        slope_tol=float(nc["smoothing_slope_tol"]),
    )
    run.stage("scan")
    names = ["smoothing_1", "smoothing_2", "smoothing_3", "smoothing_4"]
    ladder = out["smoothing_1"].im_z
    rows = [
        (float(nc["smoothing_re_z"]), ladder[i], *(out[n].norms[i] for n in names))
        for i in range(len(ladder))
    ]
    write_csv(run.dir / "smoothing.csv", ["re_z", "im_z"] + names, rows)
    adjoint = float(np.max(np.abs(out["smoothing_2"].norms - out["smoothing_3"].norms)))
    adjoint_ok = adjoint <= float(nc["adjoint_tol"])
    verdicts = {n: out[n].fit.verdict for n in names}
    ok = all(v == "PASS" for v in verdicts.values()) and adjoint_ok
    verdict = "PASS" if ok else "FAIL"
    summary = {
        "verdict": verdict,
        "adjoint_identity_max_diff": adjoint,
        "adjoint_tol": float(nc["adjoint_tol"]),
        "curves": {
            n: {
                "slope": out[n].fit.slope,
                "predicted": out[n].fit.predicted,
                "verdict": out[n].fit.verdict,
            }
            for n in names
        },
        "basis_size": b.size,
        "re_z": float(nc["smoothing_re_z"]),
    }
    write_json(run.dir / "summary.json", summary)
    return run.finish(verdict)


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "enclosure": cmd_enclosure,
    "resolvent-scan": cmd_resolvent_scan,
    "escape-check": cmd_escape_check,
    "projection": cmd_projection,
    "garding": cmd_garding,
    "moyal": cmd_moyal,
    "smoothing": cmd_smoothing,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-lab",
        description="desk-scale spectral experiments for magnetic Schrodinger operators",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="YAML configuration file")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a configuration key path",
        )
        p.add_argument("--out", default="runs", help="output directory root")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config)
        for assignment in args.overrides:
            cfgmod.apply_override(cfg, assignment)
        if args.seed is not None:
            cfg["seed"] = int(args.seed)
    except (ConfigError, OSError, yaml.YAMLError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.subcommand](cfg, args.out)
    except (ConfigError, enclosure.EnclosureError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NormsError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EigensolverConvergenceError,) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
