import math

import numpy as np
import pytest

from cpbsim import (
    BiasPoint,
    DetectorParams,
    DeviceParams,
    dephasing_ratio,
    detector_distinguishability,
    fidelity_loss_bound,
    kolmogorov_distance_quadrature,
    ratio_trace,
    window_width,
)


def test_t2_identity_holds_along_trace(params, protocol):
    points = ratio_trace(params, protocol, n_samples=67)
    for p in points:
        if math.isinf(p.tphi_over_t1):
            assert p.t2_over_t1 == 2.0
        else:
            assert p.t2_over_t1 == pytest.approx(
                1.0 / (0.5 + 1.0 / p.tphi_over_t1)
            )


def test_symmetric_bias_kills_pure_dephasing(params):
    # at n_g = 0 the ground/first pair has equal diagonal charge elements
    point = dephasing_ratio(params, BiasPoint(flux=0.0, gate_charge=0.0))
    assert math.isinf(point.tphi_over_t1)
    assert point.t2_over_t1 == 2.0


def test_zero_tunneling_freezes_coherence(protocol):
    frozen = DeviceParams(josephson_energy_total=0.0)
    point = dephasing_ratio(frozen, BiasPoint(flux=0.25, gate_charge=-1.95))
    assert point.tphi_over_t1 == 0.0
    assert point.t2_over_t1 == 0.0


def test_ratio_trace_covers_protocol(params, protocol):
    points = ratio_trace(params, protocol, n_samples=51)
    assert len(points) == 51
    assert points[0].time == 0.0
    assert points[-1].time == pytest.approx(protocol.duration)
    assert all(p.t2_over_t1 >= 0.0 for p in points)
    with pytest.raises(ValueError):
        ratio_trace(params, protocol, n_samples=1)


def test_dephasing_ratio_validation(params):
    bias = BiasPoint(flux=0.25, gate_charge=-1.95)
    with pytest.raises(ValueError):
        dephasing_ratio(params, bias, t_bath=0.0)
    with pytest.raises(ValueError):
        dephasing_ratio(params, bias, k=50)
    with pytest.raises(ValueError):
        dephasing_ratio(params, bias, k=-1)


def test_window_width_synthetic_pattern():
    class Point:
        def __init__(self, time, ratio):
            self.time = time
            self.t2_over_t1 = ratio

    # 5 samples, dt = 0.1; inside at indices 0, 2, 3 -> 0.05 + 0.1 + 0.1
    ratios = [0.02, 0.5, 0.03, 0.01, 0.9]
    points = [Point(0.1 * i, r) for i, r in enumerate(ratios)]
    assert window_width(points, 0.0, 0.04) == pytest.approx(0.25)
    assert window_width(points, 0.0, 1.0) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        window_width(points[:1], 0.0, 0.04)


def test_detector_frozen_values():
    report = detector_distinguishability(DetectorParams())
    assert report.sigma_q == pytest.approx(0.012020815280171309, rel=1e-12)
    assert report.delta_q == pytest.approx(0.061538461538461542, rel=1e-12)
    assert report.p_correct == pytest.approx(0.99476130786876804, rel=1e-10)
    assert report.distance == pytest.approx(2.0 * report.p_correct - 1.0)


def test_detector_closed_form_against_quadrature():
    det = DetectorParams()
    closed = detector_distinguishability(det).distance
    quad = kolmogorov_distance_quadrature(det)
    assert abs(closed - quad) < 1e-8


def test_uncoupled_detector_guesses():
    report = detector_distinguishability(DetectorParams(coupling_capacitance=0.0))
    assert report.distance == 0.0
    assert report.p_correct == 0.5


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorParams(charge_sensitivity=0.0)
    with pytest.raises(ValueError):
        DetectorParams(measurement_time=-1.0)
    with pytest.raises(ValueError):
        DetectorParams(island_capacitance=0.0)
    with pytest.raises(ValueError):
        DetectorParams(coupling_capacitance=-0.1)


def test_fidelity_loss_bounds(params, protocol):
    points = ratio_trace(params, protocol, n_samples=201)
    losses = fidelity_loss_bound(points, t1_ns=50.0)
    assert set(losses) == {"relaxation", "dephasing"}
    # relaxation bound is exactly 1 - exp(-duration/T1)
    assert losses["relaxation"] == pytest.approx(
        1.0 - math.exp(-protocol.duration / 50.0)
    )
    assert 0.0 < losses["dephasing"] < 1.0
    assert losses["dephasing"] > losses["relaxation"]
    with pytest.raises(ValueError):
        fidelity_loss_bound(points, t1_ns=0.0)


def test_beta_reported_along_trace(params, protocol):
    points = ratio_trace(params, protocol, n_samples=11)
    start = points[0]
    assert start.beta == pytest.approx(0.05 * 10.0 / 12.0)
