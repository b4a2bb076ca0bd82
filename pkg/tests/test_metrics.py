import dataclasses
import math

import numpy as np
import pytest

from prowl.data import PolicyParams
from prowl.metrics import (
    CSV_FIELDS, MetricsRecord, certificate_diagnostics, gaps, read_records, regrets, write_records,
)
from prowl.simulate import ScenarioConfig, simulate


@pytest.fixture(scope="module")
def s1():
    return simulate(ScenarioConfig(1, 300, 1.0, 21, n_test=3000))


def oracle_rule(test, mu):
    return np.where(mu[:, 0] >= mu[:, 1], 1, -1)


class TestRegrets:
    def test_bayes_rules(self, s1):
        _, test = s1
        assert regrets(oracle_rule(test, test.oracle.mu_star), test)[0] == pytest.approx(0.0, abs=1e-15)
        assert regrets(oracle_rule(test, test.oracle.mu_lower), test)[1] == pytest.approx(0.0, abs=1e-15)

    def test_constant_rules_differ_by_mean_advantage(self, s1):
        _, test = s1
        plus = regrets(PolicyParams.constant(1, test), test)
        minus = regrets(PolicyParams.constant(-1, test), test)
        adv = test.oracle.mu_star[:, 0] - test.oracle.mu_star[:, 1]
        assert abs(plus[0] - minus[0]) == pytest.approx(abs(adv.mean()), abs=1e-12)

    def test_nonnegative_and_scale_invariant(self, s1, rng):
        _, test = s1
        for _ in range(10):
            beta = rng.normal(size=3)
            a = regrets(PolicyParams.for_dataset(beta, test, np.inf), test)
            b = regrets(PolicyParams.for_dataset(4.5 * beta, test, np.inf), test)
            assert min(a) >= -1e-9 and a == b

    def test_missing_oracle(self, s1):
        _, test = s1
        bare = dataclasses.replace(test, oracle=None)
        with pytest.raises(ValueError):
            regrets(PolicyParams.constant(1, bare), bare)
        with pytest.raises(ValueError):
            gaps(PolicyParams.constant(1, bare), bare)


class TestGaps:
    def test_rho_zero(self):
        _, test = simulate(ScenarioConfig(1, 10, 0.0, 1, n_test=1000))
        assert gaps(PolicyParams.constant(1, test), test) == (0.0, 0.0)

    @pytest.mark.parametrize("scenario", [1, 2])
    def test_signs(self, scenario, rng):
        _, test = simulate(ScenarioConfig(scenario, 10, 1.5, 2, n_test=2000))
        for _ in range(5):
            d = rng.choice([-1, 1], test.n)
            pg, cg = gaps(d, test)
            assert pg >= 0 and cg >= 0


class TestDiagnostics:
    def test_reference_row(self):
        train, test = simulate(ScenarioConfig(1, 1000, 0.5, 0, n_test=2000), with_lower=False)
        e_u, clip, valid = certificate_diagnostics(train, test)
        assert abs(e_u - 0.015) <= 0.002 and clip == 0.0 and valid == 1.0

    def test_zero_certificate(self):
        train, test = simulate(ScenarioConfig(2, 500, 0.0, 0, n_test=500), with_lower=False)
        assert certificate_diagnostics(train, test) == (0.0, 0.0, 1.0)

    def test_missing_potentials(self):
        train, test = simulate(ScenarioConfig(1, 50, 1.0, 0, n_test=50), with_lower=False)
        with pytest.raises(ValueError):
            certificate_diagnostics(train, dataclasses.replace(test, potential=None))
        assert math.isnan(certificate_diagnostics(train)[2])


def test_csv_round_trip(tmp_path):
    recs = [
        MetricsRecord(2, 1.75, 200, 3, "prowl", "underline-R", 0.1 / 3, 1e-17, -0.0, 2.5e-5, 0.119, 0.0, 1.0, -3.2, 0.25),
        MetricsRecord(1, 0.0, 100, 0, "owl", "R", 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0, None, 1.0),
        MetricsRecord(1, 0.0, 100, 1, "qlearn", "n/a", math.nan, math.nan, 0, 0, 0, 0, 1, math.nan, 0),
    ]
    path = tmp_path / "m.csv"
    write_records(recs, path, ["a comment"])
    text = path.read_text().splitlines()
    assert text[0] == "# a comment" and text[1] == ",".join(CSV_FIELDS)
    back = read_records(path)
    assert back[:2] == recs[:2]
    assert math.isnan(back[2].target_regret) and back[2].method == "qlearn"


def test_bad_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_records(path)
