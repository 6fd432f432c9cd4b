"""Command-line entry point ``frame-cs``.

Exit codes: 0 on success, 2 when an experiment's assertions fail, 1 on
any execution error.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import __version__
from .certificate import certificate_summary, certificate_trials
from .diagnostics import (b_quantity, balancing_residuals, check_theorem_conditions,
                          coherence, e_experiment, kappa_localized, local_coherence,
                          minimal_balancing_m)
from .errors import FrameCSError
from .experiments import ExperimentConfig, run_experiment
from .io import read_json, read_vector_csv, write_json, write_matrix_csv
from .levels import LevelStructure
from .sampling import SamplingScheme, bernoulli_scheme, multilevel_scheme, named_scheme
from .solver import SolverOptions, recover
from .transforms import build_transform, canonical_kind, frame_levels_for, wavelet_levels

EXIT_OK, EXIT_ERROR, EXIT_ASSERT = 0, 1, 2


def _ints(text: str) -> List[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _floats(text: str) -> List[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _operators(kind: str, p: int):
    return build_transform("dft", p), build_transform(kind, p)


def _sampling_levels(args) -> List[int]:
    return args.M if args.M else list(wavelet_levels(args.p).boundaries)


def _sparsity_levels(args) -> List[int]:
    return args.N if args.N else list(frame_levels_for(args.transform, args.p).boundaries)


def _emit_csv(rows: Sequence[dict], out: Optional[str], header: Optional[List[str]] = None):
    header = header or list(rows[0])
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in r.items()})
    if out:
        Path(out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _add_operator_args(sp, levels: bool = True):
    sp.add_argument("--transform", default="haar-frame2",
                    help="sparsifying operator: dft, haar or haar-frame2")
    sp.add_argument("--p", type=int, default=6, help="signal length 2^p")
    if levels:
        sp.add_argument("--M", type=_ints, default=None,
                        help="sampling level boundaries (default: dyadic bands)")
        sp.add_argument("--N", type=_ints, default=None,
                        help="sparsity level boundaries (default: wavelet scales)")
    sp.add_argument("--out", default=None, help="output file (default: stdout)")


# --- subcommands -------------------------------------------------------------

def cmd_transforms(args) -> int:
    write_matrix_csv(args.out, build_transform(args.kind, args.p))
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.kind == "multilevel":
        scheme = multilevel_scheme(LevelStructure(tuple(args.boundaries), tuple(args.counts)),
                                   args.seed)
    elif args.kind == "bernoulli":
        lev = LevelStructure(tuple(args.boundaries))
        scheme = bernoulli_scheme(lev, args.seed, densities=args.densities)
    else:
        scheme = named_scheme(args.kind, args.budget, args.ambient, args.seed, args.n_low)
    write_json(args.out, scheme.to_json())
    return EXIT_OK


def cmd_recover(args) -> int:
    x = read_vector_csv(args.signal)
    scheme = SamplingScheme.from_json(read_json(args.scheme))
    n = x.size
    p = int(round(np.log2(n)))
    if 2 ** p != n:
        raise FrameCSError(f"signal length {n} is not a power of two")
    V, D = _operators(args.transform, p)
    opts = SolverOptions(max_iter=args.max_iter, opt_tol=args.tol)
    sol = recover(x, scheme, V, D, args.delta, args.noise_seed, opts)
    write_json(args.out, sol.to_json())
    return EXIT_OK


def cmd_coherence(args) -> int:
    V, D = _operators(args.transform, args.p)
    mu = coherence(V @ D.conj().T, check=False)
    _emit_csv([{"transform": canonical_kind(args.transform), "p": args.p, "coherence": mu}],
              args.out)
    return EXIT_OK


def cmd_local_coherence(args) -> int:
    V, D = _operators(args.transform, args.p)
    lc = local_coherence(V, D, _sampling_levels(args), _sparsity_levels(args))
    rows = [{"k": k + 1, "l": l + 1, "mu": float(lc.mu[k, l])}
            for k in range(lc.mu.shape[0]) for l in range(lc.mu.shape[1])]
    _emit_csv(rows, args.out)
    if args.plot:
        from .plotting import plot_lines
        plot_lines(range(1, lc.mu.shape[0] + 1), lc.mu.max(axis=1), args.plot,
                   "sampling level k", "max_l mu(k,l)", "local coherence")
    return EXIT_OK


def cmd_kappa(args) -> int:
    _, D = _operators(args.transform, args.p)
    N = _sparsity_levels(args)
    est = kappa_localized(D, N, args.s, p=args.exp, trials=args.trials, seed=args.seed)
    sizes = LevelStructure(tuple(N)).sizes
    rows = [{"level": j + 1, "size": sizes[j], "s": args.s[j], "kappa": float(k),
             "kappa_ratio": float(k) / sizes[j]} for j, k in enumerate(est.kappa_levels)]
    _emit_csv(rows, args.out)
    if args.plot:
        from .plotting import plot_lines
        plot_lines([r["level"] for r in rows], [r["kappa_ratio"] for r in rows], args.plot,
                   "level", "kappa_j / |Lambda_j|", "localized level sparsity")
    return EXIT_OK


def cmd_bsn(args) -> int:
    _, D = _operators(args.transform, args.p)
    N = _sparsity_levels(args)
    if args.delta:
        res = b_quantity(D, N, delta=args.delta)
        rows = [{"mode": "support", "B": res.value}]
    else:
        res = b_quantity(D, N, s=args.s, trials=args.trials, seed=args.seed,
                         exhaustive=args.exhaustive)
        rows = [{"mode": "exhaustive" if args.exhaustive else "sampled", "B": res.value}]
    _emit_csv(rows, args.out)
    return EXIT_OK


def cmd_balancing(args) -> int:
    V, D = _operators(args.transform, args.p)
    sampler = {"trials": args.trials, "seed": args.seed}
    if args.M_trunc is not None:
        rep = balancing_residuals(V, D, args.M_trunc, args.N_trunc, args.s, args.kappa1,
                                  args.kappa2, args.K, delta_sampler=sampler)
        rows = [{"M": rep.M, "lhs1": rep.lhs1, "threshold1": rep.threshold1, "lhs2": rep.lhs2,
                 "threshold2": rep.threshold2, "passed": rep.passed}]
    else:
        sw = minimal_balancing_m(V, D, args.N_trunc, args.s, args.kappa1, args.kappa2, args.K,
                                 delta_sampler=sampler)
        rows = [{"M": int(M), "lhs1": float(a), "lhs2": float(b), "minimal": sw.M == M}
                for M, a, b in zip(sw.Ms, sw.lhs1, sw.lhs2)]
    _emit_csv(rows, args.out)
    return EXIT_OK


def cmd_theorem_check(args) -> int:
    V, D = _operators(args.transform, args.p)
    rep = check_theorem_conditions(V, D, _sampling_levels(args), args.m, _sparsity_levels(args),
                                   args.s, epsilon=args.epsilon, C_user=args.C_user,
                                   trials=args.trials, seed=args.seed,
                                   check_balancing=not args.skip_balancing)
    _emit_csv(rep.rows(), args.out)
    print(f"condition (i): {rep.condition_i}  condition (ii): {rep.condition_ii}",
          file=sys.stderr)
    return EXIT_OK


def cmd_e_experiment(args) -> int:
    res = e_experiment(args.p_range, args.trials, args.seed)
    rows = [{"p": p, "trials": args.trials, "E": e} for p, e in res.items()]
    _emit_csv(rows, args.out)
    if args.plot:
        from .plotting import plot_lines
        plot_lines(list(res), list(res.values()), args.plot, "p", "E(p)", "E(p) experiment")
    return EXIT_OK


def _delta_spec(spec: str):
    """``random:s`` draws a support of size s per trial; otherwise a list of 1-based rows."""
    if spec.startswith("random:"):
        return int(spec.split(":", 1)[1]), None
    d = _ints(spec)
    return len(d), d


def cmd_certificate(args) -> int:
    V, D = _operators(args.transform, args.p)
    s, delta = _delta_spec(args.delta_spec)
    res = certificate_trials(V, D, s, args.q, args.trials, args.seed, sampling=args.M,
                             sparsity=args.N, delta=delta, mu=args.mu, nu=args.nu)
    out = {"transform": canonical_kind(args.transform), "p": args.p, "q": args.q,
           "delta_spec": args.delta_spec, "seed": args.seed,
           "summary": certificate_summary(res), "trials": [r.to_json() for r in res]}
    write_json(args.out, out)
    return EXIT_OK


def cmd_run(args) -> int:
    if args.config:
        cfg = ExperimentConfig.from_json(args.config)
        if args.command != "run" and cfg.experiment != args.command:
            raise FrameCSError(f"config describes {cfg.experiment!r}, not {args.command!r}")
    elif args.command == "run":
        raise FrameCSError("run needs --config")
    else:
        cfg = ExperimentConfig.default(args.command)
    if args.seeds:
        cfg.seeds = args.seeds
    rep = run_experiment(cfg, out=args.out, plots=not args.no_plots)
    for name, ok in rep.assertions.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if rep.passed else EXIT_ASSERT


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frame-cs",
                                 description="Multilevel compressed sensing with tight frames.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("transforms", help="operator matrices")
    tsub = sp.add_subparsers(dest="action", required=True)
    d = tsub.add_parser("dump", help="write an operator in the CSV matrix format")
    d.add_argument("--kind", required=True, choices=["dft", "haar", "haar-frame2"])
    d.add_argument("--p", type=int, required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_transforms)

    sp = sub.add_parser("sample", help="draw a sampling scheme")
    sp.add_argument("--kind", required=True,
                    choices=["multilevel", "bernoulli", "half_half", "uniform", "lowest"])
    sp.add_argument("--boundaries", type=_ints, help="level boundaries (multilevel, bernoulli)")
    sp.add_argument("--counts", type=_ints, help="samples per level (multilevel)")
    sp.add_argument("--densities", type=_floats, help="per-level densities (bernoulli)")
    sp.add_argument("--budget", type=int, help="total samples (named kinds)")
    sp.add_argument("--ambient", type=int, help="number of rows (named kinds)")
    sp.add_argument("--n-low", type=int, default=None, help="fully sampled prefix (half_half)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("recover", help="measure a signal and solve the constrained problem")
    sp.add_argument("--signal", required=True, help="signal CSV (one column)")
    sp.add_argument("--scheme", required=True, help="scheme JSON")
    sp.add_argument("--transform", default="haar-frame2")
    sp.add_argument("--delta", type=float, default=0.0, help="noise level")
    sp.add_argument("--noise-seed", type=int, default=None,
                    help="add noise of norm delta drawn from this seed")
    sp.add_argument("--max-iter", type=int, default=SolverOptions().max_iter)
    sp.add_argument("--tol", type=float, default=SolverOptions().opt_tol)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("coherence", help="coherence of V D*")
    _add_operator_args(sp, levels=False)
    sp.set_defaults(func=cmd_coherence)

    sp = sub.add_parser("local-coherence", help="local coherences per level block")
    _add_operator_args(sp)
    sp.add_argument("--plot", default=None, help="SVG path")
    sp.set_defaults(func=cmd_local_coherence)

    sp = sub.add_parser("kappa", help="localized level sparsities")
    _add_operator_args(sp)
    sp.add_argument("--s", type=_ints, required=True, help="sparsity per level")
    sp.add_argument("--exp", type=float, default=1.0, help="exponent p of the quasi-norm")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--plot", default=None, help="SVG path")
    sp.set_defaults(func=cmd_kappa)

    sp = sub.add_parser("bsn", help="B(s,N) or B~(Delta)")
    _add_operator_args(sp)
    sp.add_argument("--s", type=_ints, default=None, help="sparsity per level")
    sp.add_argument("--delta", type=_ints, default=None, help="fixed 1-based support")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--exhaustive", action="store_true")
    sp.set_defaults(func=cmd_bsn)

    sp = sub.add_parser("balancing", help="balancing-property residuals")
    _add_operator_args(sp, levels=False)
    sp.add_argument("--M", dest="M_trunc", type=int, default=None,
                    help="sampling truncation (omit to sweep for the minimal M)")
    sp.add_argument("--N", dest="N_trunc", type=int, required=True, help="sparsity truncation")
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--kappa1", type=float, required=True)
    sp.add_argument("--kappa2", type=float, required=True)
    sp.add_argument("--K", type=float, default=1.0)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_balancing)

    sp = sub.add_parser("theorem-check", help="evaluate the recovery-theorem conditions")
    _add_operator_args(sp)
    sp.add_argument("--m", type=_ints, required=True, help="samples per sampling level")
    sp.add_argument("--s", type=_ints, required=True, help="sparsity per level")
    sp.add_argument("--epsilon", type=float, default=float(np.exp(-1)))
    sp.add_argument("--C-user", dest="C_user", type=float, default=1.0,
                    help="constant standing in for the hidden absolute constants")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--skip-balancing", action="store_true")
    sp.set_defaults(func=cmd_theorem_check)

    sp = sub.add_parser("e-experiment", help="E(p) over a range of p")
    sp.add_argument("--p-range", type=_ints, default=[4, 5, 6, 7, 8])
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.add_argument("--plot", default=None, help="SVG path")
    sp.set_defaults(func=cmd_e_experiment)

    sp = sub.add_parser("certificate", help="golfing dual-certificate trials")
    sp.add_argument("--transform", default="haar-frame2")
    sp.add_argument("--p", type=int, default=6)
    sp.add_argument("--delta-spec", required=True,
                    help="'random:s' or a comma-separated 1-based support")
    sp.add_argument("--q", type=float, required=True, help="overall sampling density")
    sp.add_argument("--M", type=_ints, default=None, help="sampling level boundaries")
    sp.add_argument("--N", type=_ints, default=None, help="sparsity level boundaries")
    sp.add_argument("--mu", type=int, default=None, help="override the number of batches")
    sp.add_argument("--nu", type=int, default=None, help="override the required acceptances")
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_certificate)

    for name, text in (("run", "run an experiment from a config file"),
                       ("fig2", "recovery comparison across sampling schemes"),
                       ("fig3", "E(p) growth"), ("fig4", "per-level sparsity bars"),
                       ("sweep", "budget sweep")):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=(name == "run"), default=None)
        sp.add_argument("--out", required=True)
        sp.add_argument("--seeds", type=_ints, default=None, help="override the config seeds")
        sp.add_argument("--no-plots", action="store_true")
        sp.set_defaults(func=cmd_run)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FrameCSError, ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"frame-cs: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
