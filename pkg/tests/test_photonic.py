import math
from dataclasses import replace

import pytest

from cowlink import photonic as ph
from cowlink.errors import ParameterError, UndefinedQberError, UndefinedVisibilityError


def paper_link(length_km: float) -> ph.LinkParams:
    return ph.default_link(length_km)


class TestTransmittance:
    def test_lossless(self):
        assert ph.transmittance(ph.FibreParams(0.0, 0.164, 0.0)) == 1.0

    def test_reference_250km_total_loss(self):
        fibre = ph.FibreParams(250.0, 0.164, 1.6)
        assert fibre.total_loss_db == pytest.approx(42.6, abs=1e-9)
        assert ph.transmittance(fibre) == pytest.approx(5.50e-5, abs=1e-7)

    def test_standard_fibre_equivalence_213km(self):
        ull = ph.FibreParams(250.0, 0.164, 1.6)
        standard = ph.FibreParams(213.0, 0.2, 0.0)
        assert standard.total_loss_db == pytest.approx(42.6, abs=1e-12)
        assert ph.transmittance(standard) == pytest.approx(
            ph.transmittance(ull), rel=1e-12
        )

    def test_monotone_in_length_and_attenuation(self):
        base = ph.transmittance(ph.FibreParams(100.0, 0.164, 0.0))
        assert ph.transmittance(ph.FibreParams(120.0, 0.164, 0.0)) < base
        assert ph.transmittance(ph.FibreParams(100.0, 0.2, 0.0)) < base

    def test_segment_multiplicativity(self):
        a = ph.FibreParams(80.0, 0.164, 0.0)
        b = ph.FibreParams(45.0, 0.164, 0.0)
        joined = ph.FibreParams(125.0, 0.164, 0.0)
        assert ph.transmittance(a) * ph.transmittance(b) == pytest.approx(
            ph.transmittance(joined), rel=1e-12
        )


class TestClickProbabilities:
    def test_zero_efficiency(self):
        link = replace(
            paper_link(100.0), data_detector=ph.DetectorParams(efficiency=0.0)
        )
        p_signal, _ = ph.click_probabilities(link)
        assert p_signal == 0.0

    def test_250km_signal_probability(self):
        p_signal, _ = ph.click_probabilities(paper_link(250.0))
        assert p_signal == pytest.approx(7.28e-7, rel=0.01)

    def test_dark_probability_is_rate_times_gate(self):
        _, p_dark = ph.click_probabilities(paper_link(250.0))
        assert p_dark == pytest.approx(8.0e-9, rel=1e-9)


class TestExpectedQber:
    def test_noiseless_is_zero(self):
        link = replace(
            paper_link(10.0),
            data_detector=ph.DetectorParams(dark_rate_hz=0.0),
            protocol=ph.ProtocolParams(optical_error=0.0),
        )
        assert ph.expected_qber(link) == 0.0

    def test_100km_endpoint(self):
        assert ph.expected_qber(paper_link(100.0)) == pytest.approx(0.0083, abs=5e-4)

    def test_250km_endpoint(self):
        assert ph.expected_qber(paper_link(250.0)) == pytest.approx(0.0186, abs=1e-3)

    def test_undefined_when_no_clicks_possible(self):
        link = replace(
            paper_link(10.0),
            data_detector=ph.DetectorParams(efficiency=0.0, dark_rate_hz=0.0),
        )
        with pytest.raises(UndefinedQberError):
            ph.expected_qber(link)

    def test_monotone_in_dark_rate_and_length(self):
        base = ph.expected_qber(paper_link(150.0))
        noisier = replace(
            paper_link(150.0), data_detector=ph.DetectorParams(dark_rate_hz=50.0)
        )
        assert ph.expected_qber(noisier) > base
        assert ph.expected_qber(paper_link(200.0)) > base


class TestMonitorClickProb:
    def test_perfect_destructive(self):
        assert ph.monitor_click_prob(0.0, 1.0, 0.5) == 0.0

    def test_perfect_constructive(self):
        assert ph.monitor_click_prob(math.pi, 1.0, 0.3) == pytest.approx(0.3)

    def test_finite_visibility_floor(self):
        assert ph.monitor_click_prob(0.0, 0.92, 1.0) == pytest.approx(0.04)

    def test_two_ports_sum_to_base(self):
        for phase in (0.0, 0.7, 2.0, math.pi):
            for v in (0.0, 0.5, 1.0):
                dest = ph.monitor_click_prob(phase, v, 0.2)
                constructive = 0.2 * (1 + v * math.cos(phase)) / 2
                assert dest + constructive == pytest.approx(0.2, rel=1e-12)


class TestVisibility:
    def test_full(self):
        assert ph.visibility(1000, 0) == 1.0

    def test_none(self):
        assert ph.visibility(500, 500) == 0.0

    def test_reference_fringe(self):
        assert ph.visibility(1000, 40) == pytest.approx(0.923, abs=5e-4)

    def test_scale_invariance(self):
        assert ph.visibility(700, 55) == pytest.approx(ph.visibility(7000, 550))

    def test_zero_max_raises(self):
        with pytest.raises(UndefinedVisibilityError):
            ph.visibility(0, 0)

    def test_max_below_min_raises(self):
        with pytest.raises(ParameterError):
            ph.visibility(10, 20)


class TestDeadTime:
    def test_no_dead_time(self):
        assert ph.dead_time_correction(1e6, 0.0) == 1.0

    def test_unity_product(self):
        assert ph.dead_time_correction(1e5, 1e-5) == pytest.approx(0.5)

    def test_negligible_at_250km_rates(self):
        assert ph.dead_time_correction(228.0, 1e-7) > 0.99997


class TestAnalyticRates:
    def test_dead_link_rates_are_zero(self):
        link = replace(
            paper_link(100.0),
            data_detector=ph.DetectorParams(efficiency=0.0, dark_rate_hz=0.0),
        )
        pred = ph.analytic_rates(link)
        assert pred.sifted_rate_hz == 0.0
        assert pred.secret_rate_hz == 0.0

    def test_100km_secret_rate_order_of_magnitude(self):
        pred = ph.analytic_rates(paper_link(100.0))
        assert 600.0 <= pred.secret_rate_hz <= 60_000.0

    def test_250km_secret_rate_order_of_magnitude(self):
        pred = ph.analytic_rates(paper_link(250.0))
        assert 1.5 <= pred.secret_rate_hz <= 150.0

    def test_secret_never_exceeds_sifted(self):
        for km in (50.0, 100.0, 175.0, 250.0, 300.0):
            pred = ph.analytic_rates(paper_link(km))
            assert pred.secret_rate_hz <= pred.sifted_rate_hz

    def test_secret_zero_when_visibility_zero(self):
        link = replace(
            paper_link(100.0),
            interferometer=ph.InterferometerParams(intrinsic_visibility=0.0),
        )
        pred = ph.analytic_rates(link)
        assert pred.secret_rate_hz == 0.0
        assert pred.secret_fraction == 0.0

    def test_strictly_monotone_over_sweep(self):
        rates = [
            ph.analytic_rates(paper_link(km)).secret_rate_hz
            for km in (100.0, 125.0, 150.0, 175.0, 200.0, 225.0, 250.0)
        ]
        assert all(a > b for a, b in zip(rates, rates[1:]))


def test_invalid_params_rejected():
    with pytest.raises(ParameterError):
        ph.FibreParams(-1.0)
    with pytest.raises(ParameterError):
        ph.DetectorParams(efficiency=1.5)
    with pytest.raises(ParameterError):
        ph.ProtocolParams(decoy_fraction=-0.1)
    with pytest.raises(ParameterError):
        ph.SourceParams(mu=0.0)
