import numpy as np
import pytest

from ringjsa.errors import OrderOverlapError, ParameterError, ScanRangeError
from ringjsa.helpers import omega
from ringjsa.instrument import (
    FPFilter,
    MeasuredJSD,
    ScanPlan,
    airy_response,
    filtered_response,
    k_bound_spread,
    load_measured,
    random_scan,
    resolution_sweep,
    save_measured,
    simulate_scan,
    stimulated_response,
)
from ringjsa.jsa import jsd
from ringjsa.schmidt import k_bound

from .conftest import assert_log


def test_fp_from_reflectivity():
    fp = FPFilter(0.9, 5.0)
    assert fp.finesse == pytest.approx(29.8, abs=0.05)
    assert fp.fsr == pytest.approx(149.0, abs=0.5)
    assert fp.order_window == pytest.approx(fp.fsr)


def test_fp_from_fwhm():
    fp = FPFilter.from_fwhm(5.0, 200.0, center_jitter=0.5)
    assert fp.fsr == pytest.approx(200.0)
    assert fp.finesse == pytest.approx(40.0)
    assert fp.center_jitter == 0.5
    with pytest.raises(ParameterError, match="finesse"):
        FPFilter.from_fwhm(5.0, 4.0)


@pytest.mark.parametrize(
    "kwargs, match",
    [
        ({"reflectivity": 1.0, "fwhm": 5.0}, "reflectivity"),
        ({"reflectivity": 0.9, "fwhm": 0.0}, "fwhm"),
        ({"reflectivity": 0.9, "fwhm": 5.0, "order_window": 500.0}, "order_window"),
        ({"reflectivity": 0.9, "fwhm": 5.0, "center_jitter": -1.0}, "center_jitter"),
    ],
)
def test_fp_invalid(kwargs, match):
    with pytest.raises(ParameterError, match=match):
        FPFilter(**kwargs)


def test_airy_response():
    fp = FPFilter(0.9, 5.0)
    assert airy_response(fp, 0.0) == pytest.approx(1)
    assert airy_response(fp, fp.fsr) == pytest.approx(1)
    assert airy_response(fp, fp.fwhm / 2) == pytest.approx(0.5, abs=0.01)


def test_airy_symmetry_and_period():
    fp = FPFilter(0.9, 5.0)
    delta = np.linspace(-3 * fp.fsr, 3 * fp.fsr, 1001)
    response = airy_response(fp, delta)
    assert np.allclose(response, airy_response(fp, -delta), rtol=0, atol=1e-12)
    assert np.allclose(response, airy_response(fp, delta + fp.fsr), rtol=0, atol=1e-12)
    assert np.all((response > 0) & (response <= 1))


def test_scan_plan(triplet):
    plan = ScanPlan.around(triplet)
    assert plan.seeds.size == plan.idler.size == 61
    assert plan.seeds[30] == pytest.approx(triplet.signal.lambda0)
    assert np.diff(plan.seeds) == pytest.approx(np.full(60, 0.002))
    assert not plan.noisy
    fine = ScanPlan.around(triplet, idler_step_pm=1.0)
    assert fine.fp_points == 121


def test_scan_plan_warning(caplog, triplet):
    ScanPlan.around(triplet, step_pm=1.0, seed_accuracy=2.0)
    assert_log(caplog, "below the seed accuracy", "WARNING")


def test_scan_plan_invalid(triplet):
    with pytest.raises(ParameterError, match="increasing"):
        ScanPlan([1.0, 0.5], [1.0, 2.0])
    with pytest.raises(ParameterError, match="integration"):
        ScanPlan([1.0], [1.0], integration="photon-counting")
    with pytest.raises(ParameterError, match="gain"):
        ScanPlan([1.0], [1.0], gain=0)


def test_stimulated_response(small_jsa):
    density = jsd(small_jsa).values
    k = 40
    row = stimulated_response(small_jsa, small_jsa.signal[k])
    assert np.allclose(row, density[k], rtol=1e-9, atol=1e-15)
    with pytest.raises(ScanRangeError, match="outside the signal axis"):
        stimulated_response(small_jsa, small_jsa.signal[-1] + 0.1)


def test_stimulated_response_mirror(small_jsa, triplet):
    # seed on the signal resonance: idler peaks at 2ω_p - ω_s
    row = stimulated_response(small_jsa, triplet.signal.lambda0)
    target = 2 * triplet.pump.omega0 - triplet.signal.omega0
    peak = omega(small_jsa.idler[np.argmax(row)])
    step = abs(omega(small_jsa.idler[1]) - omega(small_jsa.idler[0]))
    assert abs(peak - target) <= 1.5 * step


def test_filtered_response_limits():
    axis = np.linspace(1542.0, 1542.4, 201)  # 2 pm steps
    response = np.exp(-(((axis - 1542.2) / 0.03) ** 2))
    narrow = FPFilter.from_fwhm(0.1, 400.0)
    centers = axis[50:150:10]
    assert np.allclose(
        filtered_response(response, axis, centers, narrow), response[50:150:10]
    )
    broad = FPFilter.from_fwhm(20.0, 400.0)
    blurred = filtered_response(response, axis, axis, broad)
    assert blurred.max() < response.max()
    # the filter weights are normalised
    flat = filtered_response(np.ones_like(axis), axis, axis[90:110], broad)
    assert flat.max() <= 1 + 1e-9


def test_delta_filter_identity(small_jsa):
    plan = ScanPlan(small_jsa.signal[4:-4:8], small_jsa.idler[4:-4:8], gain=1e4)
    fp = FPFilter.from_fwhm(0.01, 1000.0)
    measured = simulate_scan(small_jsa, plan, fp, workers=2)
    density = jsd(small_jsa).values[4:-4:8, 4:-4:8]
    peak = jsd(small_jsa).values.max()
    assert np.allclose(measured.counts * peak / 1e4, density, rtol=1e-6, atol=1e-12)


def test_scan_reproducible(small_jsa, triplet):
    plan = ScanPlan.around(
        triplet,
        half_span_pm=30,
        step_pm=5,
        seed_accuracy=2.0,
        integration="shot+read",
        gain=1e4,
        read_noise=2.0,
    )
    fp = FPFilter(0.9, 5.0, center_jitter=0.5)
    m1 = simulate_scan(small_jsa, plan, fp, seed=7, workers=1)
    m2 = simulate_scan(small_jsa, plan, fp, seed=7, workers=4)
    m3 = simulate_scan(small_jsa, plan, fp, seed=8, workers=4)
    assert np.array_equal(m1.counts, m2.counts)
    assert not np.array_equal(m1.counts, m3.counts)
    assert np.all(m1.counts >= 0)
    assert m1.noise == {"model": "shot+read", "gain": 1e4, "read_noise": 2.0}
    with pytest.raises(ParameterError, match="random seed"):
        simulate_scan(small_jsa, plan, fp)


def test_gain_linear(small_jsa, triplet):
    fp = FPFilter(0.9, 5.0)

    def total(gain):
        plan = ScanPlan.around(
            triplet, half_span_pm=20, step_pm=4, integration="shot+read", gain=gain
        )
        totals = [
            simulate_scan(small_jsa, plan, fp, seed=s, workers=1).counts.sum()
            for s in range(20)
        ]
        return np.mean(totals)

    assert total(2e4) / total(1e4) == pytest.approx(2, rel=0.02)


def test_order_overlap(small_jsa, triplet):
    plan = ScanPlan.around(triplet)
    with pytest.raises(OrderOverlapError, match="order window"):
        simulate_scan(small_jsa, plan, FPFilter(0.9, 5.0, order_window=100.0))


def test_scan_range(small_jsa, triplet):
    plan = ScanPlan.around(triplet, half_span_pm=300)
    with pytest.raises(ScanRangeError):
        simulate_scan(small_jsa, plan, FPFilter.from_fwhm(5.0, 1000.0))


def test_scan_lowers_k_bound(small_jsa, triplet):
    plan = ScanPlan.around(triplet)
    measured = simulate_scan(small_jsa, plan, FPFilter(0.9, 5.0), workers=2)
    assert k_bound(measured) <= k_bound(jsd(small_jsa)) + 0.05
    assert measured.counts.max() == pytest.approx(1.0, rel=0.1)


def test_k_bound_spread(small_jsa, triplet):
    fp = FPFilter(0.9, 5.0)
    plan = ScanPlan.around(triplet, half_span_pm=30, step_pm=5)
    assert not random_scan(plan, fp)
    mean, std = k_bound_spread(small_jsa, plan, fp, trials=3, workers=2)
    assert std == pytest.approx(0, abs=1e-12)
    assert mean == pytest.approx(k_bound(simulate_scan(small_jsa, plan, fp, workers=1)))

    noisy = ScanPlan.around(
        triplet, half_span_pm=30, step_pm=5, integration="shot+read", gain=1e3
    )
    assert random_scan(noisy, fp)
    spread = k_bound_spread(small_jsa, noisy, fp, seed=5, trials=4, workers=2)
    assert spread[1] > 0
    assert spread == k_bound_spread(small_jsa, noisy, fp, seed=5, trials=4, workers=1)
    with pytest.raises(ParameterError, match="trials"):
        k_bound_spread(small_jsa, noisy, fp, seed=5, trials=1)


def test_resolution_sweep_sampling_limit(small_jsa):
    plan = ScanPlan(small_jsa.signal[1:-1], small_jsa.idler[1:-1])
    ((fwhm, kb),) = resolution_sweep(small_jsa, [0.1], plan, workers=2)
    assert fwhm == 0.1
    assert kb == pytest.approx(k_bound(jsd(small_jsa)[1:-1, 1:-1]), rel=0.01)


def test_resolution_sweep_full_blur(small_jsa, triplet):
    plan = ScanPlan.around(triplet)
    template = FPFilter.from_fwhm(5.0, 2000.0, order_window=2000.0)
    ((_, kb),) = resolution_sweep(small_jsa, [20000.0], plan, fp=template, workers=2)
    assert kb == pytest.approx(1, abs=0.05)


def test_resolution_sweep(small_jsa, triplet):
    plan = ScanPlan.around(triplet, step_pm=4)
    curve = resolution_sweep(small_jsa, [50.0, 5.0], plan, workers=2)
    assert [f for f, _ in curve] == [50.0, 5.0]
    assert curve[1][1] >= curve[0][1] - 1e-6
    with pytest.raises(ParameterError, match="empty"):
        resolution_sweep(small_jsa, [], plan)


def test_measured_invalid():
    with pytest.raises(ParameterError, match="non-negative"):
        MeasuredJSD([1.0, 2.0], [1.0], [[1.0], [-1.0]])
    with pytest.raises(ParameterError, match="shape"):
        MeasuredJSD([1.0, 2.0], [1.0], [[1.0, 2.0]])


def test_save_load_measured(tmp_path, small_jsa, triplet):
    plan = ScanPlan.around(triplet, half_span_pm=20, step_pm=4)
    measured = simulate_scan(small_jsa, plan, FPFilter(0.9, 5.0), workers=1)
    fpath = save_measured(measured, tmp_path / "measured.csv")
    back = load_measured(fpath)
    assert back.noise == measured.noise
    assert np.allclose(back.counts, measured.counts, rtol=1e-8)
    assert k_bound(back) == pytest.approx(k_bound(measured), rel=1e-3)
