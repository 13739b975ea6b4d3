"""Pipeline stages driven by a :class:`~ringjsa.config.DeviceConfig`"""

from logging import getLogger
from typing import Dict, Optional, Tuple

import numpy as np

from ringjsa.config import DeviceConfig
from ringjsa.helpers import pm_to_omega
from ringjsa.instrument import MeasuredJSD, simulate_scan
from ringjsa.jsa import JSAMatrix, build_grid, compute_jsa, narrow_line_jsa
from ringjsa.pump import (
    SpectralAmplitude,
    cw_line_spectrum,
    gaussian_pulse_spectrum,
    pump_grid,
)
from ringjsa.resonator import fsr, finesse, dwell_time
from ringjsa.schmidt import (
    SchmidtSpectrum,
    purity_banded_cw,
    schmidt_decompose,
    schmidt_from_purity,
)

logger = getLogger(__name__)


def pump_amplitude(cfg: DeviceConfig) -> SpectralAmplitude:
    """Pump envelope on its own grid, as set by the ``grid`` section"""
    pump = cfg.pump
    grid = pump_grid(pump, cfg.grid["pump_points"], cfg.grid["pump_span"])
    if pump.is_cw:
        return cw_line_spectrum(pump, grid)
    return gaussian_pulse_spectrum(pump, grid)


def axis_step(cfg: DeviceConfig) -> float:
    """Angular frequency step of the JSA signal axis (rad/ps)"""
    signal, _ = build_grid(cfg.triplet, cfg.grid["span_linewidths"], cfg.grid["n"])
    step_pm = (signal[1] - signal[0]) * 1e3
    return float(pm_to_omega(step_pm, cfg.triplet.signal.lambda0))


def two_scale(cfg: DeviceConfig) -> bool:
    """Whether the cw two-photon line is below 1/100 of the resonance linewidth"""
    t = cfg.triplet
    limit = min(t.signal.gamma, t.idler.gamma) / 100
    return cfg.pump.is_cw and cfg.pump.pair_bandwidth <= limit


def model_jsa(
    cfg: DeviceConfig, workers: Optional[int] = None
) -> Tuple[JSAMatrix, SchmidtSpectrum]:
    """Model JSA and its Schmidt spectrum

    In the two-scale cw regime the Schmidt number comes from
    :func:`ringjsa.schmidt.purity_banded_cw`, and the returned JSA
    (``meta["display_only"]``) places the line on the grid with
    :func:`ringjsa.jsa.narrow_line_jsa`.

    """
    grid = build_grid(cfg.triplet, cfg.grid["span_linewidths"], cfg.grid["n"])
    if two_scale(cfg):
        logger.warning(
            "cw two-photon line below 1/100 of the resonance linewidth: Schmidt "
            "number from the banded purity, JSD with a sub-grid line (display only)"
        )
        k = purity_banded_cw(cfg.triplet, cfg.pump, workers=workers, **cfg.purity)
        jsa = narrow_line_jsa(cfg.triplet, grid, cfg.pump.lambda_p)
        jsa.meta.update(pump=cfg.pump.to_dict(), display_only=True)
        spectrum = schmidt_from_purity(
            k, pair_bandwidth_rad_ps=cfg.pump.pair_bandwidth
        )
        return jsa, spectrum
    if cfg.pump.is_cw and cfg.pump.pair_bandwidth < axis_step(cfg):
        logger.warning(
            "cw two-photon line narrower than the JSA grid step, increase grid.n "
            "for an accurate Schmidt number"
        )
    jsa = compute_jsa(
        pump_amplitude(cfg),
        cfg.triplet,
        grid,
        pump_enhancement=cfg.grid["pump_enhancement"],
        workers=workers,
    )
    jsa.meta["display_only"] = False
    spectrum = schmidt_decompose(jsa)
    spectrum.meta["method"] = "svd"
    return jsa, spectrum


def measure(
    cfg: DeviceConfig, jsa: JSAMatrix, workers: Optional[int] = None
) -> MeasuredJSD:
    """Simulated stimulated emission scan of a model JSA"""
    return simulate_scan(jsa, cfg.scan, cfg.fp, seed=cfg.seed, workers=workers)


def derived(cfg: DeviceConfig) -> Dict:
    """Quantities derived from the configuration, for summaries"""
    t = cfg.triplet
    return {
        "fsr_nm": fsr(cfg.dispersion, cfg.geometry, t.pump.lambda0),
        "finesse": finesse(cfg.dispersion, cfg.geometry, t.pump),
        "n_g": cfg.dispersion.n_g,
        "dwell_time_ps": {r.role: dwell_time(r) for r in t},
        "fwhm_pm": {r.role: r.fwhm * 1e3 for r in t},
        "mismatch_rad_ps": t.mismatch,
        "mismatch_linewidths": t.mismatch / t.pump.gamma,
        "pump_bandwidth_rad_ps": cfg.pump.bandwidth,
        "pair_bandwidth_rad_ps": cfg.pump.pair_bandwidth,
        "two_scale": two_scale(cfg),
        "fp_fsr_pm": cfg.fp.fsr,
        "fp_finesse": cfg.fp.finesse,
        "scan_points": [int(cfg.scan.seeds.size), int(cfg.scan.idler.size)],
        "seed_range_nm": [float(np.min(cfg.scan.seeds)), float(np.max(cfg.scan.seeds))],
    }
