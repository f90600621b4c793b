import dataclasses
import json
import math

import numpy as np
import pytest

from emptysimplex import experiments as ex
from emptysimplex.experiments import ExperimentConfig


def cfg(**kw):
    return ExperimentConfig(**kw)


class TestConfig:
    def test_defaults_and_rules(self):
        c = cfg()
        assert c.T(100) == pytest.approx(0.01)
        assert cfg(dim=3, body="unit-cube").T(100) == pytest.approx(0.1)
        assert c.K(100) == pytest.approx(6 * math.log(100))
        assert c.rho_value() == pytest.approx(0.25)
        assert cfg(t_rule=0.3).T(1000) == 0.3

    @pytest.mark.parametrize("bad", [
        {"trials": 0}, {"dim": 1}, {"t_rule": -1}, {"degree_mode": "fast"},
        {"density": "gaussian"}, {"mecke_f": "sin"}, {"n_grid": [-1]}, {"threads": 0},
    ])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            cfg(**bad)

    def test_unknown_keys(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"trials": 3, "colour": 1}))
        with pytest.raises(ValueError, match="colour"):
            ExperimentConfig.load(p)

    def test_yaml_roundtrip(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("body: unit-disc\nn_grid: [20, 40]\ntrials: 3\nk_list: [1, 2]\nseed: 7\n")
        c = ExperimentConfig.load(p)
        assert c.n_grid == [20, 40] and c.seed == 7 and c.convex_body.kind == "ball"

    def test_field_names_are_config_keys(self):
        names = {f.name for f in dataclasses.fields(ExperimentConfig)}
        assert {"body", "dim", "n_grid", "trials", "k_list", "t_rule", "rho", "k_rule",
                "degree_mode", "seed", "out"} <= names

    def test_degree_sizes(self):
        with pytest.raises(ValueError):
            ex.estimate_moment_deg(cfg(n_grid=[2], trials=1))


class TestFormulas:
    def test_bracket(self):
        lo, hi = ex.expected_nt_bracket(2, 500, 1 / 500, 1.0)
        assert lo == pytest.approx(math.pi * math.comb(500, 2) / 500 ** 2)
        assert (lo, hi) == pytest.approx((1.5676547, 3.1353095))

    def test_conditional_bound(self):
        b = ex.conditional_degree_bound(2, 200, 1, 0.25, 1.0)
        assert b == pytest.approx(200 * 0.25 * (1 - math.exp(-0.25)))
        assert ex.conditional_degree_bound(2, 200, 0, 0.25, 1.0) == 1.0


class TestExperiments:
    def test_expected_nt_and_degenerate_n(self):
        rows = ex.estimate_expected_n_t(cfg(n_grid=[2, 100], trials=20))
        assert 0.0 <= rows[0].estimate <= 1.0
        for seed in range(5):
            single = ex.estimate_expected_n_t(cfg(n_grid=[2], trials=1, seed=seed))[0]
            assert single.estimate in (0.0, 1.0)
        r = rows[1]
        assert r.bound_lower < r.bound_upper and r.stderr >= 0
        assert r.extras["binom_n_M"] == 4950 and r.extras["kappa_M"] == pytest.approx(math.pi)

    def test_stderr_scaling(self):
        a = ex.estimate_expected_n_t(cfg(n_grid=[200], trials=400, seed=1))[0]
        b = ex.estimate_expected_n_t(cfg(n_grid=[200], trials=1600, seed=1))[0]
        assert b.stderr * 2 == pytest.approx(a.stderr, rel=0.2)

    def test_conditional(self):
        rows = ex.conditional_degree_experiment(cfg(n_grid=[60], trials=20, k_list=[0, 1], rho=0.25))
        k0, k1 = rows
        assert k0.estimate == 1.0 and k0.bound_lower == 1.0
        assert k1.extras["max_deg"] <= 58
        assert k1.estimate >= k1.bound_lower - 3 * k1.stderr

    def test_pinned_points(self):
        c = cfg(rho=0.25)
        P = ex.pinned_points(c, 100)
        assert np.allclose(P, [[0.5, 0.5], [0.505, 0.5]])
        with pytest.raises(ValueError):
            ex.pinned_points(cfg(rho=0.001), 100)
        with pytest.raises(ValueError):
            ex.pinned_points(cfg(body={"kind": "ball", "radius": 0.01}, rho=1.0), 4)

    def test_moment_local_switch_and_jensen(self):
        rows = ex.estimate_moment_deg(cfg(n_grid=[20, 500], trials=3, k_list=[1, 2]))
        assert [r.extras["mode"] for r in rows] == ["exact", "exact", "local", "local"]
        assert rows[2].extras["local_lower_bound_curve"] is True
        for r in rows:
            assert r.estimate >= r.extras["jensen_baseline"] - 1e-9
            assert r.extras["consistency_violations"] == 0
        assert rows[0].extras["r_n"] > 0

    def test_markov(self):
        r = ex.markov_tail_check(cfg(n_grid=[300], trials=50))[0]
        assert r.extras["K_n"] == pytest.approx(6 * math.log(300))
        assert r.extras["monotonicity_violations"] == 0
        assert r.estimate <= r.bound_upper + 3 * r.extras["combined_stderr"]

    def test_poisson_grid(self):
        with pytest.warns(RuntimeWarning):
            rows = ex.poisson_grid_experiment(cfg(n_grid=[0], trials=2))
        assert rows[0].estimate == pytest.approx(1 - math.exp(-1))
        rows = ex.poisson_grid_experiment(cfg(n_grid=[2000], trials=5))
        tv, mean = rows[0], rows[1]
        assert tv.estimate < 0.1
        assert abs(mean.estimate - 1.0) <= 3 * mean.stderr
        pmf = [r for r in rows if r.experiment == "poisson-grid/pmf"]
        assert sum(r.estimate for r in pmf) == pytest.approx(1.0)

    def test_poisson_tv_helper(self):
        emp, ref, tv = ex.poisson_tv([0, 0, 0])
        assert tv == pytest.approx(1 - math.exp(-1))

    def test_convergence_probe_trivial_thresholds(self):
        c = cfg(n_grid=[12], trials=5)
        assert ex.convergence_probe(c, threshold=10)[0].estimate == 1.0
        assert ex.convergence_probe(c, threshold=0)[0].estimate == 0.0
        with pytest.raises(ValueError):
            ex.convergence_probe(cfg(n_grid=[500], trials=1))

    @pytest.mark.parametrize("f", ["one", "zero"])
    def test_mecke_constant(self, f):
        lhs, rhs = ex.mecke_check(cfg(n_grid=[30], trials=3, mecke_samples=1000), f)
        assert lhs.estimate == rhs.estimate == (435 if f == "one" else 0)

    def test_mecke_pairwise(self):
        lhs, rhs = ex.mecke_check(cfg(n_grid=[40], trials=200, mecke_samples=200_000, dim=3,
                                      body="unit-cube", t_rule=0.3), "pairwise-cutoff")
        assert abs(lhs.estimate - rhs.estimate) <= 3 * lhs.extras["combined_stderr"]


class TestReproducibility:
    def test_threads_do_not_change_rows(self):
        a = ex.estimate_moment_deg(cfg(n_grid=[15, 25], trials=6, k_list=[1, 2], seed=3, threads=1))
        b = ex.estimate_moment_deg(cfg(n_grid=[15, 25], trials=6, k_list=[1, 2], seed=3, threads=4))
        assert a == b
        c = ex.estimate_moment_deg(cfg(n_grid=[15, 25], trials=6, k_list=[1, 2], seed=4))
        assert a != c

    def test_csv(self, tmp_path):
        out = tmp_path / "r.csv"
        rows = ex.run_experiment("expected-n-t", cfg(n_grid=[50], trials=4, out=str(out)))
        back = ex.read_csv(out)
        assert list(back[0])[:12] == ex.CSV_COLUMNS
        assert back[0]["experiment"] == "expected-n-t"
        assert float(back[0]["estimate"]) == pytest.approx(rows[0].estimate, rel=1e-11)
        assert "kappa_M=3.14159265359" in back[0]["extras"]

    def test_fmt(self):
        assert ex._fmt(1 / 3) == "0.333333333333"
        assert ex._fmt(None) == "" and ex._fmt(7) == "7" and ex._fmt(True) == "true"

    def test_unknown_experiment(self):
        with pytest.raises(ValueError):
            ex.run_experiment("nope", cfg())
