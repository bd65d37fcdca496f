"""
Command-line harness.

    hyperns simulate      --config run.ini --out results/
    hyperns convergence   --config run.ini --out conv/ --levels 4,8,16
    hyperns uniqueness    --config run.ini --out uniq/
    hyperns ou-stats      --config run.ini --out ou/ --ensemble 2000
    hyperns inequalities  --config run.ini --out ineq/ --trials 10000
    hyperns alpha-sweep   --config run.ini --out sweep/ --alphas 1.1,1.25,1.5

Exit codes: 0 ok, 2 configuration/usage error, 3 blow-up, 4 internal error.
Every failure writes one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, snapshot
from .config import ConfigError, RunConfig, dumps, load, with_overrides
from .dynamics import (
    BlowUpError,
    HypothesisError,
    SolverConfig,
    regime_flags,
    regularity_suite,
    simulate,
    states,
    sup_h1_difference,
    uniqueness_probe,
)
from .nonlinear import estimate_inequality_constant
from .spectral import SpectralField, lattice_for, restrict, sobolev_norm
from .stochastic import check_regularity_condition, ou_ensemble, ou_increment, ou_mode_variance

EXIT_OK, EXIT_CONFIG, EXIT_BLOWUP, EXIT_INTERNAL = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


class Output:
    """Files of one run; each path has a single writer."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def text(self, name: str, content: str) -> None:
        (self.root / name).write_text(content)
        self.files.append(name)

    def fields(self, name: str, fields) -> None:
        snapshot.save(self.root / name, fields)
        self.files.append(name)

    def manifest(self, command: str, cfg: RunConfig, wall: float) -> dict:
        digest = {name: hashlib.sha256((self.root / name).read_bytes()).hexdigest()
                  for name in sorted(self.files)}
        man = {"command": command, "config": dumps(cfg), "output_dir": str(self.root),
               "code_version": __version__, "wall_time": wall, "files": digest}
        (self.root / "manifest.json").write_text(json.dumps(man, indent=2) + "\n")
        return man


def _ndjson(rows) -> str:
    return "".join(json.dumps(r) + "\n" for r in rows)


def _gate(cfg: RunConfig, override: bool) -> None:
    s = cfg.solver
    if s.mode == "deterministic" or override:
        return
    if not check_regularity_condition(s.alpha, s.gamma, s.alpha):
        raise ConfigError("gamma", f"alpha + 2 gamma = {s.alpha + 2 * s.gamma:g} must exceed "
                          f"alpha + 3/2 = {s.alpha + 1.5:g} (z in C([0,T]; H^alpha)); "
                          "use --override-regularity to run anyway")


def _mode_cap(cfg: RunConfig, n: int) -> None:
    size = lattice_for(cfg.solver.torus.with_trunc(n)).size
    if size > cfg.run.max_modes:
        raise ConfigError("run.max_modes", f"trunc_n={n} needs {size} modes, cap is "
                          f"{cfg.run.max_modes}")


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(cfg: RunConfig, out: Output) -> str:
    s = cfg.solver
    _mode_cap(cfg, s.torus.trunc_n)
    u0 = cfg.initial.build(s.torus)
    try:
        traj = simulate(s, u0)
    except BlowUpError as err:
        out.text("diagnostics.ndjson", err.trajectory.to_ndjson() + err.to_json() + "\n")
        raise
    out.text("diagnostics.ndjson", traj.to_ndjson())
    if traj.snapshots:
        out.fields("snapshots.hnsf", [u for _, u in traj.snapshots])
    if cfg.run.dump_noise and s.stochastic:
        out.fields("noise.hnsf", (ou_increment(s.noise, s.torus, s.dt, n, s.noise_substeps)
                                  for n in range(s.steps)))
    first, last = traj.records[0], traj.records[-1]
    lines = [f"simulate mode={s.mode} n={s.torus.trunc_n} alpha={s.alpha:g} gamma={s.gamma:g} "
             f"nu={s.nu:g} dt={s.dt:g} T={s.T:g} seed={s.seed}"]
    for key in first.norms:
        lines.append(f"  |u|_{key}: t=0 {first.norms[key]:.6g}  t=T {last.norms[key]:.6g}")
    lines.append(f"  dissipation integral {last.dissipation_integral:.6g}")
    return "\n".join(lines) + "\n"


def cmd_convergence(cfg: RunConfig, out: Output) -> str:
    s = cfg.solver
    levels = sorted(cfg.convergence.levels)
    if len(levels) < 2:
        raise ConfigError("convergence.levels", "need at least two truncation levels")
    for n in levels:
        _mode_cap(cfg, n)
    top = s.torus.with_trunc(levels[-1])
    u0_top = cfg.initial.build(top)
    runs = [states(dataclasses.replace(s, torus=s.torus.with_trunc(n)),
                   restrict(u0_top, s.torus.with_trunc(n))) for n in levels]
    rows = []
    for (n, a), (m, b) in zip(zip(levels, runs), zip(levels[1:], runs[1:])):
        rows.append({"kind": "galerkin", "n": n, "n_fine": m, "sup_h1_diff": sup_h1_difference(a, b)})
    gal = [r["sup_h1_diff"] for r in rows]
    monotone = all(x > y for x, y in zip(gal, gal[1:]))

    H = cfg.convergence.dt_halvings
    u0 = cfg.initial.build(s.torus)
    dt_runs = []
    for j in range(H + 1):
        c = dataclasses.replace(s, dt=s.dt / 2 ** j, noise_substeps=s.noise_substeps * 2 ** (H - j))
        dt_runs.append(states(c, u0))
    exact = None
    if cfg.initial.kind == "single_mode" and s.mode == "deterministic":
        decay = np.exp(-s.nu * u0.lattice.lam ** s.alpha)[:, None]
        exact = [SpectralField(u0.coeffs * decay ** (k * s.dt), s.torus) for k in range(s.steps + 1)]
    for j in range(H):
        coarse, fine = dt_runs[j], dt_runs[j + 1][::2]
        row = {"kind": "dt", "dt": s.dt / 2 ** j, "sup_h1_diff": sup_h1_difference(coarse, fine)}
        if exact is not None:
            row["analytic_error"] = sup_h1_difference(dt_runs[j][:: 2 ** j], exact)
        rows.append(row)
    out.text("convergence.ndjson", _ndjson(rows))
    lines = ["galerkin self-convergence (sup_t |u_n - u_m|_1):"]
    lines += [f"  n={r['n']:>3} vs {r['n_fine']:>3}: {r['sup_h1_diff']:.6e}" for r in rows if r["kind"] == "galerkin"]
    if not monotone:
        lines.append("  WARNING: non-monotone Galerkin convergence")
    lines.append("dt refinement (sup_t |u_dt - u_dt/2|_1):")
    dts = [r for r in rows if r["kind"] == "dt"]
    for a, r in enumerate(dts):
        ratio = "" if a == 0 or r["sup_h1_diff"] == 0 else f"  ratio {dts[a - 1]['sup_h1_diff'] / r['sup_h1_diff']:.3f}"
        extra = f"  analytic {r['analytic_error']:.3e}" if "analytic_error" in r else ""
        lines.append(f"  dt={r['dt']:.6g}: {r['sup_h1_diff']:.6e}{ratio}{extra}")
    return "\n".join(lines) + "\n"


def _perturbation(cfg: RunConfig) -> SpectralField:
    k = np.array(cfg.uniqueness.perturb_k, dtype=float)
    if not np.any(k):
        raise ConfigError("uniqueness.perturb_k", "must be a nonzero wavevector")
    axis = np.eye(3)[int(np.argmin(np.abs(k)))]
    pol = np.cross(k, axis)
    w = SpectralField.from_modes(cfg.solver.torus, {tuple(cfg.uniqueness.perturb_k): pol})
    return w * (1.0 / sobolev_norm(w, 1))


def cmd_uniqueness(cfg: RunConfig, out: Output) -> str:
    s = cfg.solver
    u0 = cfg.initial.build(s.torus)
    w = _perturbation(cfg)
    reports = [(eps, uniqueness_probe(s, u0, u0 + eps * w)) for eps in cfg.uniqueness.epsilons]
    small = [r for eps, r in reports if 0 < eps <= 1e-6]
    c_small = small[0].c_envelope if small else None
    rows, lines = [], [f"uniqueness probe alpha={s.alpha:g} gamma={s.gamma:g} seed={s.seed} dt={s.dt:g}"]
    for eps, r in reports:
        row = {"epsilon": eps, "identical": r.identical, "c_fit": r.c_fit,
               "c_fit_residual": r.c_fit_residual, "c_envelope": r.c_envelope,
               "t": r.t.tolist(), "diff_h1": r.diff_h1.tolist(),
               "exponent_integral": r.exponent_integral.tolist()}
        if eps == 0:
            lines.append(f"  eps=0: U(t) == 0 bitwise: {r.identical}")
        else:
            held = r.bound_holds(c_small) if c_small is not None else None
            row["bound_with_small_eps_c"] = held
            lines.append(f"  eps={eps:g}: c_fit={r.c_fit:.5g} (rms resid {r.c_fit_residual:.3g}) "
                         f"c_envelope={r.c_envelope:.5g} bound(c_small)={held}"
                         + ("" if held in (True, None) else "  FLAG: bound violated"))
        rows.append({k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                     for k, v in row.items()})
    out.text("uniqueness.ndjson", _ndjson(rows))
    return "\n".join(lines) + "\n"


def cmd_ou_stats(cfg: RunConfig, out: Output) -> str:
    s = cfg.solver
    E = cfg.ou.ensemble
    if E < 2:
        raise ConfigError("ou.ensemble", "ensemble size must be >= 2")
    theta = cfg.ou.theta
    cond = check_regularity_condition(s.alpha, s.gamma, theta)
    header = {"theta": theta, "alpha": s.alpha, "gamma": s.gamma, "condition_holds": cond}
    if not cond:
        header["flag"] = "alpha + 2 gamma <= theta + 3/2: z not expected in C([0,T]; H^theta)"
    T = s.T if cfg.ou.T is None else cfg.ou.T
    if T < 0:
        raise ConfigError("ou.T", "must be >= 0")
    if T > 0 and abs(T / s.dt - round(T / s.dt)) > 1e-8 * T / s.dt:
        raise ConfigError("ou.T", f"T={T} is not a multiple of dt={s.dt}")
    ens = ou_ensemble(s.noise, s.torus, T, s.dt, E, theta=theta)
    lat = lattice_for(s.torus)
    pick = list(lat.half[: cfg.ou.modes]) + [int(lat.half[-1])]
    rows = [header]
    lines = [f"ou-stats ensemble={E} T={T:g} theta={theta:g} condition(alpha+2gamma>theta+3/2)={cond}"
             + ("" if cond else "  FLAG: condition violated")]
    for i in pick:
        per = (np.abs(ens.final[:, i, :]) ** 2).sum(axis=-1) / 4
        emp, se = float(per.mean()), float(per.std(ddof=1) / np.sqrt(E))
        ana = float(ou_mode_variance(s.noise, lat.lam[i], T))
        z = (emp - ana) / se if se > 0 else 0.0
        rows.append({"k": lat.k[i].tolist(), "lambda": float(lat.lam[i]), "analytic": ana,
                     "empirical": emp, "stderr": se, "z_score": z})
        lines.append(f"  k={tuple(lat.k[i].tolist())}: analytic {ana:.5g} empirical {emp:.5g} +- {se:.2g} (z={z:+.2f})")
    sup = ens.sup_norms
    q = np.quantile(sup, [0.05, 0.5, 0.95])
    rows.append({"sup_norm": {"mean": float(sup.mean()), "min": float(sup.min()), "max": float(sup.max()),
                              "q05": float(q[0]), "q50": float(q[1]), "q95": float(q[2])}})
    lines.append(f"  sup_t |z|_theta: mean {sup.mean():.5g} median {q[1]:.5g} 95% {q[2]:.5g}")
    out.text("ou_stats.ndjson", _ndjson(rows))
    return "\n".join(lines) + "\n"


def cmd_inequalities(cfg: RunConfig, out: Output) -> str:
    s, opts = cfg.solver, cfg.inequalities
    lines, reps = [], []
    for tag in opts.ids:
        try:
            rep = estimate_inequality_constant(tag, opts.alpha, opts.trials, s.seed, s.torus)
        except ValueError as err:
            raise ConfigError("inequalities.alpha" if "alpha" in str(err) else "inequalities.ids",
                              str(err)) from None
        reps.append(rep.to_json() + "\n")
        lines.append(f"  {tag}: max ratio {rep.max_ratio:.6g} over {rep.num_trials} trials "
                     f"(witness trial {rep.witness_trial})")
    out.text("inequalities.ndjson", "".join(reps))
    return f"inequalities alpha={opts.alpha:g} n={s.torus.trunc_n} seed={s.seed}\n" + "\n".join(lines) + "\n"


def cmd_alpha_sweep(cfg: RunConfig, out: Output) -> str:
    s, opts = cfg.solver, cfg.sweep
    if any(not 1 <= a <= 2 for a in opts.alphas):
        raise ConfigError("sweep.alphas", "alpha grid must lie in [1, 2]")
    rows = []
    lines = ["alpha-sweep (reference lines: alpha = 5/4 H^1 well-posedness, alpha = 3/2 H^0 uniqueness)"]
    marks = {1.25: False, 1.5: False}
    for a in sorted(opts.alphas):
        for ref in marks:
            if not marks[ref] and a >= ref:
                lines.append(f"---- alpha = {ref:g} " + ("(H^1 threshold)" if ref == 1.25 else "(H^0 uniqueness threshold)"))
                marks[ref] = True
        for lvl in opts.s_levels:
            flags = regime_flags(a, s.gamma, lvl)
            c = dataclasses.replace(s, alpha=a)
            row = {"alpha": a, "s": lvl, "proven_existence": flags["existence"],
                   "proven_uniqueness": flags["uniqueness"], "violations": flags["violations"]}
            try:
                rep = regularity_suite(c, lvl, seeds=range(opts.seeds), levels=opts.levels,
                                       override=True)
                row.update(bounded=rep.bounded, stable=rep.stable, blowups=rep.blowups,
                           max_change=rep.max_change())
            except Exception as err:  # a failing cell must not stop the sweep
                row.update(bounded=False, stable=False, blowups=[{"error": str(err)}])
            rows.append(row)
            proven = "yes" if flags["existence"] else "no"
            thresh = "alpha>3/2" if lvl == 0 else "alpha>=5/4"
            lines.append(f"alpha={a:<5g} s={lvl} proven: s={lvl} {proven} ({thresh})"
                         f" uniqueness={'yes' if flags['uniqueness'] else 'no'}"
                         f" bounded={row['bounded']} stable={row['stable']}"
                         + (f" blowups={len(row['blowups'])}" if row["blowups"] else ""))
    out.text("alpha_sweep.ndjson", _ndjson(rows))
    return "\n".join(lines) + "\n"


COMMANDS = {
    "simulate": cmd_simulate,
    "convergence": cmd_convergence,
    "uniqueness": cmd_uniqueness,
    "ou-stats": cmd_ou_stats,
    "inequalities": cmd_inequalities,
    "alpha-sweep": cmd_alpha_sweep,
}
GATED = {"simulate", "convergence", "uniqueness"}


def _csv(tp):
    return lambda text: tuple(tp(t) for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI run configuration")
    common.add_argument("--out", type=Path, default=Path("hyperns_out"), help="output directory")
    common.add_argument("--seed", type=int, help="noise seed (overrides the file)")
    common.add_argument("--override-regularity", action="store_true",
                        help="run even when alpha + 2 gamma <= theta + 3/2")
    p = _Parser(prog="hyperns", description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("simulate", parents=[common])
    c = sub.add_parser("convergence", parents=[common])
    c.add_argument("--levels", type=_csv(int))
    u = sub.add_parser("uniqueness", parents=[common])
    u.add_argument("--epsilon", type=_csv(float), dest="epsilons")
    o = sub.add_parser("ou-stats", parents=[common])
    o.add_argument("--ensemble", type=int)
    o.add_argument("--theta", type=float)
    i = sub.add_parser("inequalities", parents=[common])
    i.add_argument("--trials", type=int)
    i.add_argument("--alpha", type=float)
    i.add_argument("--ids", type=_csv(str))
    a = sub.add_parser("alpha-sweep", parents=[common])
    a.add_argument("--alphas", type=_csv(float))
    return p


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    cfg = with_overrides(cfg, seed=args.seed)
    if args.override_regularity:
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, override_regularity=True))
    section_flags = {
        "convergence": {"levels": "levels"},
        "uniqueness": {"epsilons": "epsilons"},
        "ou": {"ensemble": "ensemble", "theta": "theta"},
        "inequalities": {"trials": "trials", "alpha": "alpha", "ids": "ids"},
        "sweep": {"alphas": "alphas"},
    }
    for sec, mapping in section_flags.items():
        kw = {f: getattr(args, a) for a, f in mapping.items() if getattr(args, a, None) is not None}
        if kw:
            cfg = dataclasses.replace(cfg, **{sec: dataclasses.replace(getattr(cfg, sec), **kw)})
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = load(args.config) if args.config else RunConfig()
        cfg = _apply_flags(cfg, args)
        if args.command in GATED:
            _gate(cfg, cfg.run.override_regularity)
        out = Output(args.out)
        summary = COMMANDS[args.command](cfg, out)
        out.text("summary.txt", summary)
        out.manifest(args.command, cfg, time.perf_counter() - t0)
        sys.stdout.write(summary)
        return EXIT_OK
    except ConfigError as err:
        print(json.dumps({"error": "config", "field": err.field, "message": err.message}),
              file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisError as err:
        print(json.dumps({"error": "config", "field": "alpha", "message": str(err)}), file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as err:
        print(json.dumps({"error": "config", "field": "config", "message": str(err)}), file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as err:
        try:
            out.manifest(args.command, cfg, time.perf_counter() - t0)
        except Exception:
            pass
        print(err.to_json(), file=sys.stderr)
        return EXIT_BLOWUP
    except Exception as err:  # noqa: BLE001
        print(json.dumps({"error": "internal", "type": type(err).__name__, "message": str(err)}),
              file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
