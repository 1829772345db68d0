"""Command-line surface: run, sweep, refine, verify, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load, normalize, with_overrides


def _default_config() -> RunConfig:
    return RunConfig(**normalize({}))


def _load_config(args) -> RunConfig:
    cfg = load(args.config) if args.config else _default_config()
    return with_overrides(
        cfg,
        horizon=getattr(args, "T", None),
        eps=getattr(args, "eps_override", None),
        grid_n=getattr(args, "grid", None),
        seed=getattr(args, "seed", None),
        out=getattr(args, "out", None),
        preset=getattr(args, "preset", None),
    )


def _out_dir(cfg: RunConfig, name: str) -> Path:
    from .experiments import output_root
    out = cfg.run.get("out") or ""
    return Path(out) if out else output_root() / name


def cmd_run(args) -> int:
    from .experiments import run_scenario
    cfg = _load_config(args)
    out = _out_dir(cfg, "run")
    result = run_scenario(cfg, out)
    man = result.manifest
    print(f"run complete: {len(result.trajectory.reports)} steps, "
          f"{man['rejections']} rejections, sup_u={man['sup_u']:.6g}, "
          f"clipped_mass={man['clipped_mass']:.3e}")
    for key in ("barenblatt_l1_error", "constant_preset_drift"):
        if key in man:
            print(f"{key} = {man[key]:.6e}")
    print(f"outputs in {out}")
    return 0


def cmd_sweep(args) -> int:
    from .experiments import eps_sweep
    cfg = _load_config(args)
    eps_values = [float(tok) for tok in args.eps.split(",")]
    out = _out_dir(cfg, "sweep")
    sweep = eps_sweep(cfg, eps_values, out, mollify_per_eps=args.mollify)
    print("eps_high,eps_low,distance")
    for i, d in enumerate(sweep.distances):
        print(f"{sweep.eps_values[i]:g},{sweep.eps_values[i+1]:g},{d:.6e}")
    print(f"cauchy: {'PASS' if sweep.cauchy else 'FAIL'}")
    return 0 if sweep.cauchy else 1


def cmd_refine(args) -> int:
    from .experiments import orders_csv, refinement_study
    records = refinement_study(levels=args.levels)
    text = orders_csv(records)
    sys.stdout.write(text)
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / "orders.csv").write_text(text)
    thresholds = {"logistic": 0.9, "consumption": 0.9, "heat": 1.9,
                  "barenblatt": 0.8, "weak_residual": 0.8}
    ok = True
    for rec in records:
        wanted = next(v for k, v in thresholds.items()
                      if rec.oracle.startswith(k))
        good = rec.exact or rec.observed_order >= wanted
        ok = ok and good
        label = "exact" if rec.exact else f"order {rec.observed_order:.2f}"
        print(f"{rec.oracle}: {label} (threshold {wanted}) "
              f"{'PASS' if good else 'FAIL'}")
    return 0 if ok else 1


def cmd_verify(args) -> int:
    from .suites import cutoff_suite, gns_suite, semigroup_suite
    kappas = ([float(tok) for tok in args.kappa.split(",")]
              if args.kappa else None)
    chosen = args.suite
    ok = True
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    if chosen in ("cutoff", "all"):
        res = cutoff_suite(kappas=kappas or (0.5, 0.2, 0.1, 0.05))
        for row in res.rows:
            print(f"cutoff dim={row['dim']} kappa={row['kappa']:g} "
                  f"gamma={row['gamma']:g} grad={row['gradient_margin']:.3f} "
                  f"hess={row['hessian_margin']:.3f} "
                  f"mass={row['scaled_mass']:.4g} "
                  f"comp={row['comparability']:.4g} "
                  f"lattice={row['lattice_sum']:.4g} "
                  f"{'PASS' if row['passed'] else 'FAIL'}")
        if out:
            (out / "cutoff_constants.csv").write_text(res.csv())
        ok = ok and res.passed
    if chosen in ("semigroup", "all"):
        res = semigroup_suite()
        for rep in res.reports:
            kind = "grad " if rep.gradient else ""
            print(f"semigroup {kind}p={rep.p:g} q={rep.q:g}: fitted "
                  f"{rep.fitted_exponent:+.3f} vs {rep.asserted_exponent:+.3f} "
                  f"C={rep.fitted_constant:.3g} "
                  f"{'PASS' if rep.passed else 'FAIL'}")
        print(f"semigroup contraction gap {res.contraction_gap:.2e}, "
              f"mass gap {res.mass_gap:.2e}, kernel mass gap "
              f"{res.kernel_mass_gap:.2e}")
        ok = ok and res.passed
    if chosen in ("gns", "all"):
        res = gns_suite(kappas=kappas or (0.2, 0.1))
        for row in res.rows:
            print(f"gns r={row['r']:g} delta={row['delta']:g} "
                  f"kappa={row['kappa']:g} C={row['constant']:.4g}")
        for (r, delta), ratio in res.stability.items():
            print(f"gns stability r={r:g} delta={delta:g}: factor {ratio:.3f}")
        if out:
            (out / "gns_constants.csv").write_text(res.csv())
        ok = ok and res.passed
    print("verify:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    ledger_path = run_dir / "ledger.csv"
    manifest_path = run_dir / "manifest.json"
    if not ledger_path.exists():
        print(f"no ledger.csv in {run_dir}", file=sys.stderr)
        return 1
    lines = ledger_path.read_text().strip().split("\n")
    names = lines[0].split(",")
    rows = [dict(zip(names, (float(v) for v in line.split(","))))
            for line in lines[1:]]
    sup_u = max(row["u_max"] for row in rows)
    sup_grad_v = max(row["grad_v_max"] for row in rows)
    v_monotone = all(r2["v_max"] <= r1["v_max"] + 1e-12
                     for r1, r2 in zip(rows, rows[1:]))
    print(f"snapshots: {len(rows)}")
    print(f"sup_t u_max = {sup_u:.6g}")
    print(f"sup_t grad_v_max = {sup_grad_v:.6g}")
    print(f"v_max non-increasing: {'PASS' if v_monotone else 'FAIL'}")
    for name in names:
        if name.startswith("supmass_") or name.startswith("graddiss_"):
            print(f"final {name} = {rows[-1][name]:.6g}")
    if manifest_path.exists():
        man = json.loads(manifest_path.read_text())
        echo_sup = man.get("sup_u")
        if echo_sup is not None:
            agree = abs(echo_sup - sup_u) <= 1e-9 * max(1.0, sup_u)
            print(f"manifest sup_u reproducible: "
                  f"{'PASS' if agree else 'FAIL'}")
            return 0 if (v_monotone and agree) else 1
    return 0 if v_monotone else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemopm",
        description="Simulator and estimate-verification harness for the "
                    "chemotaxis-consumption system with porous-medium "
                    "diffusion")
    parser.add_argument("--version", action="version",
                        version=f"chemopm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, include_eps=True):
        p.add_argument("--config", help="TOML scenario file")
        p.add_argument("--T", type=float, help="override horizon")
        if include_eps:
            p.add_argument("--eps", dest="eps_override", type=float,
                           help="override regularization")
        p.add_argument("--grid", type=int, help="override cells per axis")
        p.add_argument("--seed", type=int, help="override RNG seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--preset", help="override initial-data preset")

    p_run = sub.add_parser("run", help="execute one scenario")
    add_common(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="regularization sweep")
    add_common(p_sweep, include_eps=False)
    p_sweep.add_argument("--eps", required=True,
                         help="comma list, strictly decreasing")
    p_sweep.add_argument("--mollify", action="store_true",
                         help="mollify initial data per member")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_refine = sub.add_parser("refine", help="oracle refinement studies")
    p_refine.add_argument("--levels", type=int, default=3)
    p_refine.add_argument("--out", help="output directory")
    p_refine.set_defaults(fn=cmd_refine)

    p_verify = sub.add_parser("verify", help="property suites")
    p_verify.add_argument("--suite", default="all",
                          choices=("cutoff", "semigroup", "gns", "all"))
    p_verify.add_argument("--kappa", help="comma list of decay parameters")
    p_verify.add_argument("--out", help="output directory")
    p_verify.set_defaults(fn=cmd_verify)

    p_report = sub.add_parser("report", help="summarize a run directory")
    p_report.add_argument("run_dir")
    p_report.set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
