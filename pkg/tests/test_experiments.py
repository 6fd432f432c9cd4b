import json

import numpy as np
import pytest

from framecs import __version__
from framecs.diagnostics import b_tilde
from framecs.diagnostics.bquantity import random_pc_signal
from framecs.errors import InvalidInputError
from framecs.experiments import (ExperimentConfig, _fig2_verdicts, fig4_data, run_experiment,
                                 worker_count)
from framecs.io import write_matrix_csv
from framecs.signals import random_piecewise_constant, support
from framecs.transforms import haar_frame_redundant, haar_orthobasis, wavelet_levels


def _sweep(**over):
    base = {"transform": {"kind": "haar_frame2", "p": 5},
            "signal": {"kind": "piecewise", "n_breaks": 3},
            "schemes": {"kinds": ["half_half", "uniform"], "budgets": [12, 20]},
            "solver": {"max_iter": 300}, "seeds": [1, 2]}
    base.update(over)
    return ExperimentConfig.default("sweep", **base)


class TestConfig:
    def test_defaults_merge(self):
        cfg = ExperimentConfig.default("fig2")
        assert cfg.transform == {"kind": "haar_frame2", "p": 10}
        assert cfg.schemes == {"budget": 130, "n_low": 41}
        cfg = ExperimentConfig.from_dict({"experiment": "fig3", "params": {"trials": 5}})
        assert cfg.params["trials"] == 5 and cfg.params["p_range"][0] == 4

    def test_hash(self):
        a, b = _sweep(), _sweep()
        assert a.hash == b.hash and len(a.hash) == 16
        b.output = "/tmp/elsewhere"
        assert a.hash == b.hash
        assert _sweep(seeds=[1, 3]).hash != a.hash

    @pytest.mark.parametrize("obj", [{"experiment": "fig9"}, {"transform": {}},
                                     {"experiment": "fig3", "colour": 1},
                                     {"experiment": "fig3", "seeds": []},
                                     {"experiment": "fig3", "solver": {"bogus": 1}}])
    def test_invalid(self, obj):
        with pytest.raises((InvalidInputError, TypeError)):
            ExperimentConfig.from_dict(obj)

    def test_missing_signal_file(self, tmp_path):
        obj = {"experiment": "custom",
               "params": {"cells": [{"signal": {"file": "nope.csv"},
                                     "scheme": {"kind": "uniform", "budget": 8}}]}}
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(obj))
        with pytest.raises(InvalidInputError):
            ExperimentConfig.from_json(p)

    def test_worker_count(self, monkeypatch):
        monkeypatch.setenv("FRAME_CS_THREADS", "3")
        assert worker_count(10) == 3 and worker_count(2) == 2
        monkeypatch.setenv("FRAME_CS_THREADS", "0")
        assert worker_count(5) == 1


class TestFig3:
    def test_single_trial_equals_b_tilde(self):
        cfg = ExperimentConfig.default("fig3", params={"p_range": [4, 5], "trials": 1},
                                       seeds=[7])
        rep = run_experiment(cfg)
        for row in rep.rows:
            p = row["p"]
            rng = np.random.default_rng(np.random.SeedSequence(7, spawn_key=(p, 0)))
            D = haar_frame_redundant(p)
            x = random_pc_signal(p, rng)
            ref = b_tilde(D, support(D @ x), wavelet_levels(p, frame=True).boundaries).value
            assert row["E"] == pytest.approx(ref, rel=1e-8)

    def test_byte_reproducible(self, tmp_path):
        cfg = ExperimentConfig.default("fig3", params={"p_range": [4, 5, 6], "trials": 50},
                                       seeds=[3])
        run_experiment(cfg, out=tmp_path / "a")
        run_experiment(cfg, out=tmp_path / "b")
        for name in ("fig3.csv", "fig3.svg", "report.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        text = (tmp_path / "a" / "fig3.csv").read_text().splitlines()
        assert text[0] == f'# config_hash="{cfg.hash}"'
        assert text[1] == "# seeds=[3]" and text[2] == f'# version="{__version__}"'
        assert text[3] == "seed,p,trials,E"
        assert cfg.hash in (tmp_path / "a" / "fig3.svg").read_text()


class TestFig4:
    def test_orthonormal_collapse(self):
        p = 6
        D = haar_orthobasis(p)
        x = random_piecewise_constant(64, 5, np.random.default_rng(2))
        d = fig4_data(D, wavelet_levels(p).boundaries, x, trials=200, seed=0)
        # random values on Δ only approach the flat worst case, so κ̃_j <= s_j
        assert np.all(d["k_ratio"] <= d["s_ratio"] + 1e-9)
        assert np.array_equal(d["k_ratio"] == 0, d["s_ratio"] == 0)
        assert d["correlation"] > 0.95

    def test_zero_signal(self):
        cfg = ExperimentConfig.default("fig4", transform={"kind": "haar_frame2", "p": 5},
                                       signal={"zero": True}, params={"trials": 10})
        rep = run_experiment(cfg)
        assert all(r["s"] == 0 and r["kappa_tilde"] == 0 and r["k_ratio"] == 0
                   for r in rep.rows)
        assert rep.assertions == {}

    def test_small_run_tracks(self, tmp_path):
        cfg = ExperimentConfig.default("fig4", transform={"kind": "haar_frame2", "p": 7},
                                       params={"trials": 100}, seeds=[0, 1])
        rep = run_experiment(cfg, out=tmp_path)
        assert set(rep.details["per_seed"]) == {0, 1}
        assert (tmp_path / "fig4_seed0.svg").exists() and (tmp_path / "fig4.csv").exists()
        assert all(0 <= r["k_ratio"] <= 1 + 1e-9 for r in rep.rows)


class TestSweepCustom:
    def test_byte_reproducible(self, tmp_path):
        cfg = _sweep()
        ra = run_experiment(cfg, out=tmp_path / "a", plots=False)
        run_experiment(cfg, out=tmp_path / "b", plots=False)
        assert (tmp_path / "a" / "sweep.csv").read_bytes() == \
            (tmp_path / "b" / "sweep.csv").read_bytes()
        assert len(ra.rows) == 2 * 2 * 2
        assert {r["budget"] for r in ra.rows} == {12, 20}
        timings = json.loads((tmp_path / "a" / "timings.json").read_text())
        assert len(timings) == 8
        assert "seconds" not in (tmp_path / "a" / "sweep.csv").read_text()

    def test_full_budget_recovers(self):
        cfg = _sweep(schemes={"kinds": ["uniform"], "budgets": [32]},
                     solver={"max_iter": 2000}, seeds=[4])
        rep = run_experiment(cfg)
        assert rep.rows[0]["rel_error"] < 1e-2

    def test_custom_file_signal(self, tmp_path):
        x = random_piecewise_constant(32, 3, np.random.default_rng(0))
        write_matrix_csv(tmp_path / "x.csv", x)
        obj = {"experiment": "custom", "transform": {"kind": "haar_frame2", "p": 5},
               "solver": {"max_iter": 200},
               "params": {"cells": [{"signal": {"file": "x.csv"},
                                     "scheme": {"kind": "half_half", "budget": 16,
                                                "n_low": 6}}]}}
        (tmp_path / "cfg.json").write_text(json.dumps(obj))
        rep = run_experiment(ExperimentConfig.from_json(tmp_path / "cfg.json"))
        assert rep.rows[0]["signal"] == "x.csv" and rep.rows[0]["budget"] == 16


class TestFig2Verdicts:
    def _rows(self, errs):
        return [{"seed": s, "signal": sig, "scheme": sch, "rel_error": e}
                for s, cells in errs.items() for (sig, sch), e in cells.items()]

    def test_orderings(self):
        good = {("x2", "half_half"): 0.01, ("x2", "uniform"): 5.0, ("x2", "lowest"): 1.0,
                ("x1", "half_half"): 3.0}
        bad = dict(good)
        bad[("x2", "lowest")] = 9.0
        rows = self._rows({s: (good if s < 9 else bad) for s in range(10)})
        per_seed, a = _fig2_verdicts(rows, list(range(10)), 0.9)
        assert a == {"median_x2_halfhalf_le_0.1pct": True, "orderings": True}
        assert not per_seed[9]["x2_lowest_between"]
        rows = self._rows({s: (good if s < 8 else bad) for s in range(10)})
        assert not _fig2_verdicts(rows, list(range(10)), 0.9)[1]["orderings"]

    def test_unknown_cell(self):
        cfg = ExperimentConfig.default("fig2", params={"cells": [["x3", "uniform"]]})
        with pytest.raises(InvalidInputError):
            run_experiment(cfg)
