import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from voltstab.loadmodel import (AIRCON_P_COEFFS, AIRCON_Q_COEFFS, LoadDomainError, LoadModel,
                                MeasurementSample, RankDeficiencyError, eval_load,
                                fit_quadratic, load_model, model_from_dict, model_to_dict,
                                preset, reactive_sign_crossings, read_measurements,
                                save_model, write_measurements)

P_N, Q_N, V_N = 494.79, 39.31, 230.0


def synthetic(model, u, p_n=P_N, q_n=Q_N, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    p = p_n * np.polyval(model.p_coeffs, u) + rng.normal(0.0, noise, len(u))
    q = q_n * np.polyval(model.q_coeffs, u) + rng.normal(0.0, noise, len(u))
    return [MeasurementSample(V_N * ui, pi, qi) for ui, pi, qi in zip(u, p, q)]


class TestEval:
    def test_aircon_at_nominal(self):
        m = preset("aircon")
        p, q, _ = eval_load(m, 1.0, 1.0)
        assert p == pytest.approx(1.001 * m.p_scale, rel=1e-12)
        assert q == pytest.approx(0.993 * m.q_scale, rel=1e-12)

    def test_aircon_at_critical_voltage(self):
        m = preset("aircon")
        p, q, flagged = eval_load(m, 0.6, 1.0)
        assert p == pytest.approx(1.0174 * m.p_scale, rel=1e-12)
        assert q == pytest.approx(5.8550 * m.q_scale, rel=1e-12)
        assert not flagged

    def test_extrapolation_flag(self):
        m = preset("aircon")
        assert eval_load(m, 0.5, 1.0).extrapolated
        assert eval_load(m, 1.1, 1.0).extrapolated
        assert not eval_load(m, 1.06, 1.0).extrapolated

    @pytest.mark.parametrize("name", ["aircon", "resistive", "inductive_095", "constant_power_095"])
    def test_zero_loading(self, name):
        p, q, _ = eval_load(preset(name), 0.73, 0.0)
        assert (p, q) == (0.0, 0.0)

    def test_domain(self):
        with pytest.raises(LoadDomainError):
            eval_load(preset("resistive"), 0.0, 1.0)
        with pytest.raises(LoadDomainError):
            eval_load(preset("resistive"), 1.0, -1.0)

    @given(st.floats(0.01, 2.0), st.floats(0.0, 10.0),
           st.sampled_from(["aircon", "resistive", "inductive_095", "constant_power_095"]))
    def test_linear_in_alpha(self, v, a, name):
        m = preset(name)
        p1, q1, _ = eval_load(m, v, a)
        p2, q2, _ = eval_load(m, v, 2 * a)
        assert p2 == pytest.approx(2 * p1, rel=1e-12, abs=1e-300)
        assert q2 == pytest.approx(2 * q1, rel=1e-12, abs=1e-300)


class TestPresets:
    def test_aircon_ratio(self):
        m = preset("aircon")
        assert m.q_scale / m.p_scale == pytest.approx(0.079448, abs=5e-7)
        assert m.p_coeffs == AIRCON_P_COEFFS and m.q_coeffs == AIRCON_Q_COEFFS
        assert m.validity == (0.60, 1.06)

    def test_resistive(self):
        p, q, _ = eval_load(preset("resistive"), 1.0, 1.0)
        assert (p, q) == (1.0, 0.0)

    @given(st.floats(0.01, 2.0), st.floats(0.001, 10.0))
    def test_inductive_power_factor(self, v, a):
        p, q, _ = eval_load(preset("inductive_095"), v, a)
        assert q / p == pytest.approx(0.328684, abs=5e-7)

    def test_dash_alias_and_unknown(self):
        assert preset("inductive-095") == preset("inductive_095")
        with pytest.raises(KeyError):
            preset("motor")

    def test_aircon_active_minimum(self):
        m = preset("aircon")
        v = np.linspace(0.3, 1.2, 9001)
        p, _ = m.unit_power(v)
        assert v[np.argmin(p)] == pytest.approx(3.521 / (2 * 2.175), abs=1e-4)
        below = v < 3.521 / 4.35
        assert np.all(np.diff(p[below]) < 0)  # P falls as v rises towards the minimum

    def test_aircon_reactive_sign(self):
        m = preset("aircon")
        v = np.linspace(0.5, 1.1, 6001)
        _, q = m.unit_power(v)
        lo, hi = reactive_sign_crossings(m)
        inside = (v > lo + 1e-6) & (v < hi - 1e-6)
        outside = (v < lo - 1e-6) | (v > hi + 1e-6)
        assert np.all(q[inside] < 0) and np.all(q[outside] > 0)
        assert m.unit_power(0.6)[1] > 5.8 * m.q_scale


class TestCrossings:
    def test_aircon(self):
        roots = reactive_sign_crossings(preset("aircon"))
        disc = 143.147 ** 2 - 4 * 81.870 * 62.270
        oracle = sorted([(143.147 - math.sqrt(disc)) / (2 * 81.870),
                         (143.147 + math.sqrt(disc)) / (2 * 81.870)])
        assert roots == pytest.approx(oracle, rel=1e-12)
        assert roots == pytest.approx([0.8135, 0.9350], abs=1e-3)

    def test_inductive_none(self):
        assert reactive_sign_crossings(preset("inductive_095")) == []

    def test_symmetric(self):
        m = LoadModel(1, 0, 0, 1, 1.0, 0.0, -1.0, 1.0)
        assert reactive_sign_crossings(m) == pytest.approx([1.0])


class TestFit:
    def test_noiseless_round_trip(self):
        m = preset("aircon")
        samples = synthetic(m, np.linspace(0.6, 1.06, 20))
        fitted, report = fit_quadratic(samples, V_N, P_N, Q_N)
        assert np.max(np.abs(np.subtract(fitted.p_coeffs, AIRCON_P_COEFFS))) < 1e-9
        assert np.max(np.abs(np.subtract(fitted.q_coeffs, AIRCON_Q_COEFFS))) < 1e-9
        assert report.rms_p < 1e-12 and report.rms_q < 1e-12
        assert fitted.validity == pytest.approx((0.6, 1.06))
        assert fitted.q_scale == pytest.approx(Q_N / P_N)

    def test_regeneration_identity(self):
        m = preset("aircon")
        u = np.linspace(0.6, 1.06, 20)
        fitted, _ = fit_quadratic(synthetic(m, u), V_N, P_N, Q_N)
        np.testing.assert_allclose(fitted.unit_power(u)[0], m.unit_power(u)[0], atol=1e-11)

    def test_constant_power(self):
        samples = [MeasurementSample(v, 100.0, -20.0) for v in (200.0, 215.0, 230.0, 240.0)]
        fitted, report = fit_quadratic(samples, V_N)
        np.testing.assert_allclose(fitted.p_coeffs, (0, 0, 1), atol=1e-9)
        np.testing.assert_allclose(fitted.q_coeffs, (0, 0, 1), atol=1e-9)
        assert report.anchor_voltage_v == 230.0
        assert fitted.q_scale == pytest.approx(-0.2)  # signed, capacitive at nominal

    def test_anchor_is_nearest_sample(self):
        samples = [MeasurementSample(v, v, 1.0) for v in (200.0, 226.0, 240.0)]
        _, report = fit_quadratic(samples, V_N)
        assert report.p_nominal_w == 226.0

    def test_noisy_round_trip(self):
        # 22 voltage levels (245 V down to 140 V in 5 V steps), 40 samples per level.
        levels = np.arange(245.0, 139.0, -5.0) / V_N
        u = np.repeat(levels, 40)
        samples = synthetic(preset("aircon"), u, noise=0.01 * P_N, seed=1234)
        fitted, _ = fit_quadratic(samples, V_N, P_N, Q_N)
        np.testing.assert_allclose(fitted.p_coeffs, AIRCON_P_COEFFS, rtol=0.05)
        np.testing.assert_allclose(fitted.q_coeffs, AIRCON_Q_COEFFS, rtol=0.05)

    @pytest.mark.parametrize("volts", [[230.0, 220.0], [230.0, 230.0, 220.0, 220.0]])
    def test_rank_deficient(self, volts):
        with pytest.raises(RankDeficiencyError):
            fit_quadratic([MeasurementSample(v, 1.0, 1.0) for v in volts], V_N)


def test_csv_and_model_files(tmp_path):
    m = preset("aircon")
    samples = synthetic(m, np.linspace(0.6, 1.06, 12))
    csv_path = tmp_path / "meas.csv"
    write_measurements(csv_path, samples)
    assert csv_path.read_text().splitlines()[0] == "voltage_V,active_power_W,reactive_power_var"
    back = read_measurements(csv_path)
    assert back == samples

    fitted, _ = fit_quadratic(back, V_N, P_N, Q_N)
    path = tmp_path / "model.json"
    save_model(path, fitted)
    data = json.loads(path.read_text())
    assert set(data) == {"p_coeffs", "q_coeffs", "p_scale_W", "q_scale_var", "v_nominal_V", "validity_pu"}
    assert data["p_scale_W"] == P_N and data["v_nominal_V"] == V_N
    loaded = load_model(path)
    assert loaded.p_scale == 1.0
    assert loaded.q_scale == pytest.approx(Q_N / P_N)
    np.testing.assert_allclose(loaded.p_coeffs, AIRCON_P_COEFFS, atol=1e-9)


def test_model_dict_unbounded_validity():
    m = preset("resistive")
    back = model_from_dict(model_to_dict(m))
    assert back.validity == m.validity
    assert back.p_coeffs == m.p_coeffs
