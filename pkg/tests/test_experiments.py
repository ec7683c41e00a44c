import math

import numpy as np
import pytest

from mpt.blockmodel import make_balanced_sbm
from mpt.errors import BadInput
from mpt.experiments import (
    CHECKS,
    EIGVAL_COLUMNS,
    EIGVEC_COLUMNS,
    RECOVERY_COLUMNS,
    ExperimentConfig,
    check_instance,
    default_P0,
    hoeffding_mc,
    loglog_slope,
    random_instance,
    read_csv,
    run_eigval_experiment,
    run_eigvec_experiment,
    run_recovery_experiment,
    run_soundness_sweep,
    run_verification_suite,
    trial_seed,
    zeta_mc,
)


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig(K=3, n_list=[300, 600])
        np.testing.assert_array_equal(cfg.P0, np.diag([1.0, 0.9, 0.8]))
        assert ExperimentConfig(K=1).P0.tolist() == [[0.5]]
        assert default_P0(12)[11, 11] == pytest.approx(0.1)

    def test_log_rule(self):
        cfg = ExperimentConfig(rho_rule="log", rho_eps=3.0)
        assert cfg.rho_for(600) == pytest.approx(math.log(600) ** 3 / 600)
        assert cfg.rho_for(10) == 1.0

    def test_validation(self):
        with pytest.raises(BadInput):
            ExperimentConfig(trials=0)
        with pytest.raises(BadInput):
            ExperimentConfig(n_list=[200, 100])
        with pytest.raises(BadInput):
            ExperimentConfig(K=3, n_list=[100])
        with pytest.raises(BadInput):
            ExperimentConfig(rho_rule="cubic")

    def test_trial_seeds_distinct(self):
        a = np.random.default_rng(trial_seed(1, 100, 0)).random()
        b = np.random.default_rng(trial_seed(1, 100, 1)).random()
        c = np.random.default_rng(trial_seed(1, 200, 0)).random()
        assert len({a, b, c}) == 3


class TestEigval:
    def test_zero_density(self):
        rows = run_eigval_experiment(ExperimentConfig(n_list=[4], trials=1, rho=0.0, P0=[[0.0]]))
        assert rows[0]["abs_err"] == 0 and rows[0]["H_norm"] == 0

    def test_rows_and_schema(self, tmp_path):
        out = tmp_path / "e.csv"
        cfg = ExperimentConfig(n_list=[20, 40], trials=3, base_seed=2, output=out)
        rows = run_eigval_experiment(cfg)
        assert len(rows) == 6
        schema, header, body = read_csv(out)
        assert schema == "mpt.eigval.v1" and header == EIGVAL_COLUMNS and len(body) == 6
        for r in rows:
            assert r["lower"] <= r["lambda_1_pert"] + 1e-9
            if r["preconditions_met"]:
                assert r["lambda_1_pert"] <= r["upper"] + 1e-9

    def test_byte_identical_rerun(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for p in paths:
            run_eigval_experiment(ExperimentConfig(n_list=[30], trials=2, base_seed=5, output=p))
        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestEigvec:
    def test_noise_free(self):
        rows = run_eigvec_experiment(ExperimentConfig(n_list=[10], trials=1, P0=[[1.0]]))
        assert rows[0]["err_two"] <= 1e-12 and rows[0]["dk_sin"] == 0

    def test_columns(self, tmp_path):
        out = tmp_path / "v.csv"
        rows = run_eigvec_experiment(ExperimentConfig(n_list=[40, 80], trials=2, output=out))
        schema, header, body = read_csv(out)
        assert schema == "mpt.eigvec.v1" and header == EIGVEC_COLUMNS and len(body) == 4
        for r in rows:
            assert r["err_inf"] <= r["err_two"]
            assert r["err_inf"] <= r["entrywise_dk_max"]


class TestRecovery:
    def test_noise_free(self):
        cfg = ExperimentConfig(n_list=[20], K=2, P0=np.eye(2), trials=2)
        rows = run_recovery_experiment(cfg)
        assert all(r["exact"] and r["misclassified"] == 0 for r in rows)

    def test_header(self, tmp_path):
        out = tmp_path / "r.csv"
        run_recovery_experiment(ExperimentConfig(n_list=[30], K=3, trials=1, rho_rule="log", output=out))
        schema, header, _ = read_csv(out)
        assert schema == "mpt.recovery.v1" and header == RECOVERY_COLUMNS


class TestVerification:
    def test_clean_run(self, tmp_path):
        report, viol = tmp_path / "rep.csv", tmp_path / "viol.csv"
        assert run_verification_suite(1, report=report, violations_path=viol, instances=25) == 0
        schema, header, body = read_csv(report)
        assert schema == "mpt.verify.v1" and [r[0] for r in body] == list(CHECKS)
        assert all(r[2] == "0" for r in body)
        assert not viol.exists()

    def test_sabotage_detected(self, tmp_path):
        viol = tmp_path / "viol.csv"
        assert run_verification_suite(1, violations_path=viol, instances=10, norm_scale=0.01) == 4
        assert viol.exists()

    def test_instance_generator(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            m, h = random_instance(rng)
            assert 3 <= m.shape[0] <= 20
            np.testing.assert_array_equal(h, h.T)

    def test_every_check_exercised(self):
        res = run_soundness_sweep(3, instances=20)
        assert res.ok and all(res.evaluated[c] > 0 for c in CHECKS)

    def test_check_instance_two_by_two(self):
        res = check_instance(np.diag([2.0, 0.0]), [[0.0, 0.1], [0.1, 0.0]])
        assert res.ok


class TestMonteCarlo:
    def test_loglog_slope(self):
        xs = np.array([1.0, 2.0, 4.0, 8.0])
        assert loglog_slope(xs, 3 * xs ** 0.5) == pytest.approx(0.5)

    def test_hoeffding_keys(self):
        out = hoeffding_mc(np.ones(4) / 2, np.ones(4) / 2, [1.0, 2.0], 1000, 0)
        assert set(out) == {1.0, 2.0}
        assert all(0 <= f <= 1 for f, _ in out.values())

    def test_zeta_rows(self):
        bm = make_balanced_sbm(2, 16, [[0.7, 0.3], [0.3, 0.6]], 1.0)
        rows = zeta_mc(bm, 3, 0)
        assert len(rows) == 3
        assert all(r["zeta_inf"] >= 0 and 0 <= r["fail_prob"] <= 1 for r in rows)
