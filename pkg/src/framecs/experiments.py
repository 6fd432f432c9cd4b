"""Config-driven experiment runs with reproducible CSV/SVG output.

Every run is fixed by its JSON config. The CSVs carry the config hash,
the seeds and the package version in leading ``#`` lines and contain no
timings, so re-running a config reproduces them byte for byte. Wall
times go to a separate ``timings.json``.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__
from .diagnostics.bquantity import e_value
from .diagnostics.sparsity import kappa_tilde
from .errors import InvalidInputError
from .io import ensure_dir, read_vector_csv, write_json
from .sampling import named_scheme
from .signals import fig2_signals, random_piecewise_constant, support
from .solver import SolverOptions, recover, relative_error
from .transforms import build_transform, dft_matrix, frame_levels_for

EXPERIMENTS = ("fig2", "fig3", "fig4", "sweep", "custom")
FIG2_CELLS = (("x2", "half_half"), ("x2", "uniform"), ("x2", "lowest"),
              ("x1", "half_half"), ("x1", "uniform"), ("x1", "lowest"))

_DEFAULTS = {
    "fig2": {"transform": {"kind": "haar_frame2", "p": 10},
             "signal": {"target": 100, "window": [99, 158]},
             "schemes": {"budget": 130, "n_low": 41},
             "params": {"cells": [list(c) for c in FIG2_CELLS], "min_pass_fraction": 0.9}},
    "fig3": {"transform": {"kind": "haar_frame2", "p": 10},
             "params": {"p_range": [4, 5, 6, 7, 8, 9, 10], "trials": 1000}},
    "fig4": {"transform": {"kind": "haar_frame2", "p": 10},
             "signal": {"n_breaks": 12, "amplitude": 10.0},
             "params": {"trials": 1000, "min_correlation": 0.5}},
    "sweep": {"transform": {"kind": "haar_frame2", "p": 8},
              "signal": {"kind": "piecewise", "n_breaks": 6, "amplitude": 10.0},
              "schemes": {"kinds": ["half_half", "uniform", "lowest"],
                          "budgets": [32, 48, 64], "low_fraction": 41 / 130},
              "params": {}},
    "custom": {"transform": {"kind": "haar_frame2", "p": 8}, "params": {"cells": []}},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ExperimentConfig:
    """A fully specified experiment.

    Attributes
    ----------
    experiment : one of ``fig2, fig3, fig4, sweep, custom``.
    transform : ``{"kind": ..., "p": ...}`` for the sparsifying operator.
    signal : signal-generation settings.
    schemes : sampling-scheme settings.
    solver : keyword arguments of :class:`SolverOptions`.
    seeds : root seeds; one run (or cell group) per seed.
    params : experiment-specific settings.
    output : output directory (not part of the hash).
    """

    experiment: str
    transform: dict = field(default_factory=dict)
    signal: dict = field(default_factory=dict)
    schemes: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    seeds: List[int] = field(default_factory=lambda: [0])
    params: dict = field(default_factory=dict)
    output: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InvalidInputError(f"experiment must be one of {EXPERIMENTS}")
        self.seeds = [int(s) for s in self.seeds]
        if not self.seeds:
            raise InvalidInputError("at least one seed is required")
        SolverOptions(**self.solver)

    @classmethod
    def from_dict(cls, obj: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        if "experiment" not in obj:
            raise InvalidInputError("config needs an 'experiment' field")
        full = _merge(_DEFAULTS[obj["experiment"]], obj) if obj["experiment"] in _DEFAULTS else obj
        known = {"experiment", "transform", "signal", "schemes", "solver", "seeds", "params",
                 "output"}
        extra = set(full) - known
        if extra:
            raise InvalidInputError(f"unknown config fields {sorted(extra)}")
        cfg = cls(**full)
        cfg._check_files(base_dir)
        return cfg

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), path.parent)

    @classmethod
    def default(cls, experiment: str, **over) -> "ExperimentConfig":
        return cls.from_dict(_merge({"experiment": experiment}, over))

    def _check_files(self, base_dir: Optional[Path]):
        for cell in self.params.get("cells", []):
            sig = cell.get("signal") if isinstance(cell, dict) else None
            if isinstance(sig, dict) and "file" in sig:
                p = Path(sig["file"])
                if not p.is_absolute() and base_dir is not None:
                    p = base_dir / p
                    sig["file"] = str(p)
                if not p.exists():
                    raise InvalidInputError(f"signal file {p} does not exist")

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "transform": self.transform,
                "signal": self.signal, "schemes": self.schemes, "solver": self.solver,
                "seeds": list(self.seeds), "params": self.params}

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ExperimentReport:
    """Rows, provenance and assertion outcomes of one run."""

    experiment: str
    columns: List[str]
    rows: List[dict]
    provenance: dict
    assertions: Dict[str, bool] = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    timings: List[dict] = field(default_factory=list)
    artifacts: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.assertions.values())

    def csv_text(self) -> str:
        buf = io.StringIO()
        for k in ("config_hash", "seeds", "version"):
            buf.write(f"# {k}={json.dumps(self.provenance[k])}\n")
        w = csv.DictWriter(buf, fieldnames=self.columns, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _fmt(r.get(k)) for k in self.columns})
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"experiment": self.experiment, "provenance": self.provenance,
                "assertions": self.assertions, "passed": self.passed,
                "details": _jsonable(self.details), "rows": _jsonable(self.rows),
                "artifacts": list(self.artifacts)}

    def write(self, out) -> Path:
        out = ensure_dir(out)
        (out / f"{self.experiment}.csv").write_text(self.csv_text())
        self.artifacts.insert(0, f"{self.experiment}.csv")
        write_json(out / "report.json", self.to_json())
        write_json(out / "timings.json", self.timings)
        return out


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer, np.bool_)):
        return v.item()
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def worker_count(tasks: int) -> int:
    """Worker pool size: ``FRAME_CS_THREADS`` if set, else the CPU count, capped by `tasks`."""
    env = os.environ.get("FRAME_CS_THREADS")
    n = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(n, tasks))


def _map(fn: Callable, items: list) -> list:
    workers = worker_count(len(items))
    if workers == 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _provenance(cfg: ExperimentConfig) -> dict:
    return {"config_hash": cfg.hash, "seeds": list(cfg.seeds), "version": __version__,
            "config": cfg.to_dict()}


@lru_cache(maxsize=4)
def _operators(kind: str, p: int):
    D = build_transform(kind, p)
    return D, dft_matrix(D.shape[1])


def _scheme(kind: str, budget: int, n: int, seed: int, n_low: Optional[int] = None):
    return named_scheme(kind, budget, n, seed=seed, n_low=n_low if kind == "half_half" else None)


def _solve_cell(args):
    kind, p, x, scheme, solver = args
    D, V = _operators(kind, p)
    t = time.perf_counter()
    sol = recover(x, scheme, V, D, opts=SolverOptions(**solver))
    return sol, time.perf_counter() - t


def _cell_row(seed, signal, scheme, x, sol):
    return {"seed": seed, "signal": signal, "scheme": scheme.kind,
            "budget": int(scheme.omega.size), "rel_error": relative_error(sol.g, x),
            "objective": sol.objective, "residual": sol.residual,
            "iterations": sol.iterations, "converged": bool(sol.converged)}


CELL_COLUMNS = ["seed", "signal", "scheme", "budget", "rel_error", "objective", "residual",
                "iterations", "converged"]


def _fig2_verdicts(rows: List[dict], seeds: List[int], min_frac: float) -> tuple:
    """Per-seed ordering checks and the aggregate assertions."""
    err = {(r["seed"], r["signal"], r["scheme"]): r["rel_error"] for r in rows}
    per_seed = {}
    for s in seeds:
        checks = {}
        v = err.get((s, "x2", "half_half"))
        u = err.get((s, "x2", "uniform"))
        lo = err.get((s, "x2", "lowest"))
        x1v = err.get((s, "x1", "half_half"))
        if v is not None and u is not None:
            checks["x2_uniform_10x"] = u >= 10 * v
        if v is not None and x1v is not None:
            checks["x1_halfhalf_10x"] = x1v >= 10 * v
        if None not in (v, u, lo):
            checks["x2_lowest_between"] = v < lo < u
        per_seed[s] = checks
    assertions = {}
    v_errs = [err[(s, "x2", "half_half")] for s in seeds if (s, "x2", "half_half") in err]
    if v_errs:
        assertions["median_x2_halfhalf_le_0.1pct"] = float(np.median(v_errs)) <= 0.1
    ok = [all(c.values()) for c in per_seed.values() if c]
    if ok:
        need = math.ceil(min_frac * len(ok) - 1e-12)
        assertions["orderings"] = sum(ok) >= need
    return per_seed, assertions


def run_fig2(config: ExperimentConfig, plots: bool = True) -> ExperimentReport:
    """Structured vs unstructured sampling of two signals with equal frame sparsity.

    For every seed, two piecewise-constant signals with ``target`` nonzero
    frame coefficients are generated (x₁ fine-scale heavy on a narrow
    window, x₂ coarse-scale heavy), and each configured (signal, scheme)
    cell is recovered. Schemes: half-half (``n_low`` lowest rows plus
    uniform draws), uniform, lowest rows; all with the same budget.
    """
    tr, sg, sc, pr = config.transform, config.signal, config.schemes, config.params
    D, V = _operators(tr["kind"], tr["p"])
    n = D.shape[1]
    cells = [tuple(c) for c in pr["cells"]]
    bad = [c for c in cells if c not in FIG2_CELLS]
    if bad:
        raise InvalidInputError(f"unknown fig2 cells {bad}")
    jobs, meta, signals = [], [], {}
    for s in config.seeds:
        x1, x2 = fig2_signals(D, s, target=sg["target"], window=tuple(sg["window"]))
        signals[s] = {"x1": x1, "x2": x2}
        for name, kind in cells:
            scheme = _scheme(kind, sc["budget"], n, s, sc["n_low"])
            jobs.append((tr["kind"], tr["p"], signals[s][name], scheme, config.solver))
            meta.append((s, name, scheme))
    out = _map(_solve_cell, jobs)
    rows, timings, recs = [], [], {}
    for (s, name, scheme), (sol, dt) in zip(meta, out):
        x = signals[s][name]
        rows.append(_cell_row(s, name, scheme, x, sol))
        timings.append({"seed": s, "signal": name, "scheme": scheme.kind, "seconds": dt})
        recs[(s, name, scheme.kind)] = sol.g
    per_seed, assertions = _fig2_verdicts(rows, config.seeds, pr["min_pass_fraction"])
    rep = ExperimentReport("fig2", CELL_COLUMNS, rows, _provenance(config), assertions,
                           {"per_seed": per_seed,
                            "nonconverged": [r for r in rows if not r["converged"]]},
                           timings)
    rep.details["_signals"] = signals
    rep.details["_recs"] = recs
    return rep


def run_fig3(config: ExperimentConfig, plots: bool = True) -> ExperimentReport:
    """``E(p) = max B̃(supp(Dx))`` over random piecewise-constant `x` for each `p`."""
    pr = config.params
    ps = [int(p) for p in pr["p_range"]]
    rows, timings = [], []
    for s in config.seeds:
        jobs = [(p, int(pr["trials"]), s) for p in ps]
        t = time.perf_counter()
        vals = _map(_e_job, jobs)
        timings.append({"seed": s, "seconds": time.perf_counter() - t})
        rows.extend({"seed": s, "p": p, "trials": int(pr["trials"]), "E": e}
                    for p, e in zip(ps, vals))
    return ExperimentReport("fig3", ["seed", "p", "trials", "E"], rows, _provenance(config),
                            {}, {}, timings)


def _e_job(args):
    p, trials, seed = args
    return e_value(p, trials, seed)


def fig4_data(D: np.ndarray, levels, x: np.ndarray, trials: int, seed: int) -> dict:
    """Per-level ``s_j``, ``κ̃_j`` and their ratios to ``|Λ_j|`` for ``Δ = supp(Dx)``."""
    from .diagnostics.sparsity import _levels_for
    lev = _levels_for(levels, D.shape[0])
    delta = support(D @ x)
    sizes = np.asarray(lev.sizes, dtype=float)
    lab = lev.labels()
    s = np.array([int(np.sum(lab[delta - 1] == j)) for j in range(lev.r)]) if delta.size \
        else np.zeros(lev.r, dtype=int)
    kt = kappa_tilde(D, delta, lev, trials=trials, seed=seed) if delta.size \
        else np.zeros(lev.r)
    sr, kr = s / sizes, kt / sizes
    corr = float(np.corrcoef(sr, kr)[0, 1]) if (np.ptp(sr) > 0 and np.ptp(kr) > 0) else float("nan")
    return {"delta": delta, "s": s, "kappa_tilde": kt, "s_ratio": sr, "k_ratio": kr,
            "sizes": sizes, "correlation": corr}


def run_fig4(config: ExperimentConfig, plots: bool = True) -> ExperimentReport:
    """Approximate localized level sparsities of a piecewise-constant signal's support."""
    tr, sg, pr = config.transform, config.signal, config.params
    D, _ = _operators(tr["kind"], tr["p"])
    levels = frame_levels_for(tr["kind"], tr["p"])
    n = D.shape[1]
    rows, details, timings = [], {}, []
    for s in config.seeds:
        t = time.perf_counter()
        rng = np.random.default_rng(np.random.SeedSequence(s, spawn_key=(4,)))
        if sg.get("zero"):
            x = np.zeros(n)
        else:
            x = random_piecewise_constant(n, int(sg["n_breaks"]), rng,
                                          amplitude=float(sg["amplitude"]))
        d = fig4_data(D, levels, x, int(pr["trials"]), s)
        timings.append({"seed": s, "seconds": time.perf_counter() - t})
        for j in range(len(d["s"])):
            rows.append({"seed": s, "level": j + 1, "size": int(d["sizes"][j]),
                         "s": int(d["s"][j]), "kappa_tilde": float(d["kappa_tilde"][j]),
                         "s_ratio": float(d["s_ratio"][j]), "k_ratio": float(d["k_ratio"][j])})
        details[s] = {"correlation": d["correlation"], "_x": x}
    corrs = [v["correlation"] for v in details.values() if math.isfinite(v["correlation"])]
    assertions = {}
    if corrs:
        assertions["correlation_gt_min"] = bool(min(corrs) > float(pr["min_correlation"]))
    cols = ["seed", "level", "size", "s", "kappa_tilde", "s_ratio", "k_ratio"]
    return ExperimentReport("fig4", cols, rows, _provenance(config), assertions,
                            {"per_seed": details}, timings)


def _sweep_signal(D, spec: dict, seed: int) -> np.ndarray:
    """Signal from a spec: ``{"file": path}``, ``{"kind": "piecewise", "n_breaks", "amplitude"}``
    or ``{"kind": "fig2", "which": "x1"|"x2", "target", "window"}``."""
    if "file" in spec:
        return np.real_if_close(read_vector_csv(spec["file"]))
    kind = spec.get("kind", "piecewise")
    if kind == "piecewise":
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(5,)))
        return random_piecewise_constant(D.shape[1], int(spec.get("n_breaks", 6)), rng,
                                         amplitude=float(spec.get("amplitude", 10.0)))
    if kind == "fig2":
        x1, x2 = fig2_signals(D, seed, target=int(spec.get("target", 100)),
                              window=tuple(spec.get("window", (99, 158))))
        return {"x1": x1, "x2": x2}[spec.get("which", "x2")]
    raise InvalidInputError(f"unknown signal kind {kind!r}")


def _signal_name(spec: dict) -> str:
    if "file" in spec:
        return Path(spec["file"]).name
    if spec.get("kind") == "fig2":
        return spec.get("which", "x2")
    return spec.get("kind", "piecewise")


def run_sweep(config: ExperimentConfig, plots: bool = True) -> ExperimentReport:
    """Relative error over a grid of scheme kinds and budgets."""
    tr, sc = config.transform, config.schemes
    D, V = _operators(tr["kind"], tr["p"])
    n = D.shape[1]
    jobs, meta = [], []
    for s in config.seeds:
        x = _sweep_signal(D, config.signal, s)
        for kind in sc["kinds"]:
            for b in sc["budgets"]:
                n_low = int(round(sc.get("low_fraction", 41 / 130) * b))
                scheme = _scheme(kind, int(b), n, s, n_low)
                jobs.append((tr["kind"], tr["p"], x, scheme, config.solver))
                meta.append((s, _signal_name(config.signal), scheme, x))
    out = _map(_solve_cell, jobs)
    rows = [_cell_row(s, name, scheme, x, sol) for (s, name, scheme, x), (sol, _) in zip(meta, out)]
    timings = [{"seed": s, "scheme": sc_.kind, "budget": int(sc_.omega.size), "seconds": dt}
               for (s, _, sc_, _), (_, dt) in zip(meta, out)]
    return ExperimentReport("sweep", CELL_COLUMNS, rows, _provenance(config), {}, {}, timings)


def run_custom(config: ExperimentConfig, plots: bool = True) -> ExperimentReport:
    """Explicit cells ``{"signal": {...}, "scheme": {"kind", "budget", "n_low"}}``."""
    tr = config.transform
    D, V = _operators(tr["kind"], tr["p"])
    n = D.shape[1]
    jobs, meta = [], []
    for s in config.seeds:
        for cell in config.params["cells"]:
            x = _sweep_signal(D, cell["signal"], s)
            spec = cell["scheme"]
            scheme = _scheme(spec["kind"], int(spec["budget"]), n, s, spec.get("n_low"))
            jobs.append((tr["kind"], tr["p"], x, scheme, config.solver))
            meta.append((s, _signal_name(cell["signal"]), scheme, x))
    out = _map(_solve_cell, jobs)
    rows = [_cell_row(s, name, scheme, x, sol) for (s, name, scheme, x), (sol, _) in zip(meta, out)]
    timings = [{"seed": s, "seconds": dt} for (s, *_), (_, dt) in zip(meta, out)]
    return ExperimentReport("custom", CELL_COLUMNS, rows, _provenance(config), {}, {}, timings)


RUNNERS = {"fig2": run_fig2, "fig3": run_fig3, "fig4": run_fig4, "sweep": run_sweep,
           "custom": run_custom}


def _write_plots(rep: ExperimentReport, config: ExperimentConfig, out: Path):
    from .plotting import plot_level_bars, plot_lines, plot_reconstructions
    desc = f"config_hash={config.hash} seeds={config.seeds}"
    if rep.experiment == "fig2" and "_signals" in rep.details:
        s = config.seeds[0]
        for name in ("x1", "x2"):
            recs = {f"{k} ({r['rel_error']:.2f}%)": rep.details["_recs"][(s, name, k)]
                    for r in rep.rows for k in [r["scheme"]]
                    if r["seed"] == s and r["signal"] == name}
            if recs:
                fn = f"fig2_{name}_seed{s}.svg"
                plot_reconstructions(rep.details["_signals"][s][name], recs, out / fn, desc)
                rep.artifacts.append(fn)
    elif rep.experiment == "fig3":
        s = config.seeds[0]
        rr = [r for r in rep.rows if r["seed"] == s]
        plot_lines([r["p"] for r in rr], [r["E"] for r in rr], out / "fig3.svg", "p", "E(p)",
                   desc)
        rep.artifacts.append("fig3.svg")
    elif rep.experiment == "fig4":
        for s in config.seeds:
            rr = [r for r in rep.rows if r["seed"] == s]
            fn = f"fig4_seed{s}.svg"
            plot_level_bars(rep.details["per_seed"][s]["_x"], [r["s_ratio"] for r in rr],
                            [r["k_ratio"] for r in rr], out / fn, desc)
            rep.artifacts.append(fn)


def _strip_private(obj):
    if isinstance(obj, dict):
        return {k: _strip_private(v) for k, v in obj.items() if not str(k).startswith("_")}
    return obj


def run_experiment(config: ExperimentConfig, out=None, plots: bool = True) -> ExperimentReport:
    """Run `config`; with `out` set, write CSV, report, timings and SVG figures there."""
    rep = RUNNERS[config.experiment](config)
    out = out if out is not None else config.output
    if out is not None:
        out = ensure_dir(out)
        if plots:
            _write_plots(rep, config, out)
    rep.details = _strip_private(rep.details)
    if out is not None:
        rep.write(out)
    return rep
