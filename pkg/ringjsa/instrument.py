"""Stimulated four-wave mixing measurement of the joint spectral density

A cw seed laser is stepped across the signal resonance; for each seed
wavelength the stimulated idler spectrum, which mirrors the spontaneous
one, is scanned with a Fabry-Pérot filter and recorded on a CCD.  The
simulation reproduces the chain: seed wavelength error, Airy filter
response restricted to one order, filter centre jitter, and shot plus read
noise.

"""

from dataclasses import dataclass, field, replace
from logging import getLogger
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import xarray as xr

from ringjsa._types import _path_t
from ringjsa.errors import OrderOverlapError, ParameterError, ScanRangeError
from ringjsa.helpers import check_finite, omega, parallel_map, strictly_increasing
from ringjsa.io import read_matrix, read_sidecar, write_matrix, write_sidecar
from ringjsa.jsa import JSAMatrix, Triplet, jsd
from ringjsa.schmidt import k_bound

logger = getLogger(__name__)

INTEGRATIONS = ("noiseless", "shot+read")
_AXES = ("seed_nm", "idler_nm")


@dataclass(frozen=True)
class FPFilter:
    """Scanning Fabry-Pérot filter

    Attributes
    ----------
    reflectivity : float
        Mirror (power) reflectivity in (0, 1)

    fwhm : float
        Transmission FWHM (pm)

    center_jitter : float
        rms of the residual centre wavelength error after stabilisation (pm)

    order_window : Optional[float]
        Width of the single-order analysis window (pm), defaults to the free
        spectral range

    """

    reflectivity: float
    fwhm: float
    center_jitter: float = 0.0
    order_window: Optional[float] = None

    def __post_init__(self):
        check_finite(reflectivity=self.reflectivity, fwhm=self.fwhm)
        if not 0 < self.reflectivity < 1:
            raise ParameterError(f"reflectivity={self.reflectivity}: not in (0, 1)")
        if self.fwhm <= 0:
            raise ParameterError(f"fwhm={self.fwhm}: must be > 0")
        if not self.finesse > 1:
            raise ParameterError(f"finesse={self.finesse:.3g}: must be > 1")
        if self.center_jitter < 0:
            raise ParameterError(f"center_jitter={self.center_jitter}: must be ≥ 0")
        if self.order_window is None:
            object.__setattr__(self, "order_window", self.fsr)
        elif not 0 < self.order_window <= self.fsr * (1 + 1e-12):
            raise ParameterError(
                f"order_window={self.order_window}: not in (0, FSR={self.fsr:.4g}] pm"
            )

    @property
    def finesse(self) -> float:
        """``π√R/(1 - R)``"""
        r = self.reflectivity
        return np.pi * np.sqrt(r) / (1 - r)

    @property
    def fsr(self) -> float:
        """Free spectral range (pm), finesse × FWHM"""
        return self.finesse * self.fwhm

    @classmethod
    def from_fwhm(cls, fwhm: float, fsr: float, **kwargs) -> "FPFilter":
        """Filter with a given FWHM and free spectral range (pm)"""
        f = fsr / fwhm
        if not f > 1:
            raise ParameterError(f"fsr/fwhm={f:.3g}: finesse must be > 1")
        s = (-np.pi + np.sqrt(np.pi**2 + 4 * f**2)) / (2 * f)  # √R
        return cls(s**2, fwhm, **kwargs)

    def to_dict(self) -> Dict:
        return {
            "reflectivity": self.reflectivity,
            "fwhm": self.fwhm,
            "center_jitter": self.center_jitter,
            "order_window": self.order_window,
            "finesse": self.finesse,
            "fsr": self.fsr,
        }


def airy_response(fp: FPFilter, detuning_pm):
    """Airy transmission ``1/(1 + (2F/π)² sin²(πδ/FSR))``"""
    coeff = (2 * fp.finesse / np.pi) ** 2
    return 1 / (1 + coeff * np.sin(np.pi * np.asarray(detuning_pm) / fp.fsr) ** 2)


@dataclass(frozen=True)
class ScanPlan:
    """Seed wavelengths, Fabry-Pérot positions, and detection model

    Attributes
    ----------
    seeds : numpy.ndarray
        Nominal seed wavelengths (nm), increasing

    idler : numpy.ndarray
        Fabry-Pérot centre wavelengths sampled per seed (nm), increasing

    seed_accuracy : float
        Seed wavelength errors are uniform within ``±seed_accuracy`` (pm)

    integration : str
        "noiseless" or "shot+read"

    gain : float
        Expected counts at the peak of the joint spectral density

    read_noise : float
        rms of the Gaussian CCD read noise (counts)

    """

    seeds: np.ndarray
    idler: np.ndarray
    seed_accuracy: float = 0.0
    integration: str = "noiseless"
    gain: float = 1.0
    read_noise: float = 0.0

    def __post_init__(self):
        seeds = np.atleast_1d(np.asarray(self.seeds, dtype=float))
        idler = np.atleast_1d(np.asarray(self.idler, dtype=float))
        if not (strictly_increasing(seeds) and strictly_increasing(idler)):
            raise ParameterError("seed and idler positions must be increasing")
        check_finite(seed_accuracy=self.seed_accuracy, gain=self.gain)
        if self.seed_accuracy < 0 or self.read_noise < 0 or self.gain <= 0:
            raise ParameterError("need seed_accuracy, read_noise ≥ 0 and gain > 0")
        if self.integration not in INTEGRATIONS:
            raise ParameterError(f"integration={self.integration}: unknown")
        object.__setattr__(self, "seeds", seeds)
        object.__setattr__(self, "idler", idler)

    @property
    def fp_points(self) -> int:
        return self.idler.size

    @property
    def noisy(self) -> bool:
        return self.integration != "noiseless"

    @classmethod
    def around(
        cls,
        triplet: Triplet,
        half_span_pm: float = 60.0,
        step_pm: float = 2.0,
        idler_step_pm: Optional[float] = None,
        **kwargs,
    ) -> "ScanPlan":
        """Plan centred on the signal and idler resonances

        Seeds step by ``step_pm``, filter positions by ``idler_step_pm``
        (default: the same), both over ``±half_span_pm``.

        """
        if step_pm <= 0 or half_span_pm <= 0:
            raise ParameterError("scan span and step must be > 0")
        idler_step_pm = step_pm if idler_step_pm is None else idler_step_pm
        accuracy = kwargs.get("seed_accuracy", 0.0)
        if step_pm < accuracy:
            logger.warning(
                f"seed step {step_pm} pm below the seed accuracy {accuracy} pm"
            )

        def axis(center: float, step: float) -> np.ndarray:
            n = int(np.floor(half_span_pm / step + 1e-9))
            return center + np.arange(-n, n + 1) * step * 1e-3

        return cls(
            axis(triplet.signal.lambda0, step_pm),
            axis(triplet.idler.lambda0, idler_step_pm),
            **kwargs,
        )

    def to_dict(self) -> Dict:
        return {
            "seeds_nm": [float(self.seeds[0]), float(self.seeds[-1]), self.seeds.size],
            "idler_nm": [float(self.idler[0]), float(self.idler[-1]), self.idler.size],
            "seed_accuracy": self.seed_accuracy,
            "integration": self.integration,
            "gain": self.gain,
            "read_noise": self.read_noise,
        }


@dataclass(frozen=True)
class MeasuredJSD:
    """Counts recorded on a seed × idler grid

    Attributes
    ----------
    seed, idler : numpy.ndarray
        Nominal seed and filter centre wavelengths (nm)

    counts : numpy.ndarray
        Non-negative counts, shape ``(len(seed), len(idler))``

    noise : Dict
        Detection model: ``model``, ``gain``, ``read_noise``

    """

    seed: np.ndarray
    idler: np.ndarray
    counts: np.ndarray
    noise: Dict = field(default_factory=dict)
    meta: Dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.shape != (len(self.seed), len(self.idler)):
            raise ParameterError(f"counts shape {counts.shape} inconsistent with axes")
        if np.any(counts < 0):
            raise ParameterError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "seed", np.asarray(self.seed, dtype=float))
        object.__setattr__(self, "idler", np.asarray(self.idler, dtype=float))

    def to_dataarray(self) -> xr.DataArray:
        return xr.DataArray(
            self.counts,
            coords={"seed": self.seed, "idler": self.idler},
            dims=("seed", "idler"),
            name="counts",
            attrs=dict(self.noise),
        )


def stimulated_response(jsa: JSAMatrix, seed_lambda: float) -> np.ndarray:
    """Idler spectrum stimulated by a seed at ``seed_lambda`` (nm)

    Proportional to ``|φ(ω_seed, ω_i)|²`` along the JSA idler axis,
    interpolated linearly in the signal angular frequency.

    Raises
    ------
    ScanRangeError
        Seed outside the JSA signal axis

    """
    lo, hi = jsa.signal[0], jsa.signal[-1]
    if not lo <= seed_lambda <= hi:
        raise ScanRangeError(
            f"seed {seed_lambda} nm outside the signal axis [{lo}, {hi}] nm"
        )
    density = jsd(jsa).assign_coords(omega=("signal", omega(jsa.signal)))
    density = density.swap_dims({"signal": "omega"}).drop_vars("signal").sortby("omega")
    row = density.interp(omega=float(omega(seed_lambda)), method="linear")
    return np.clip(row.values, 0, None)


def _filter_nodes(fp: FPFilter, idler_step_pm: float) -> np.ndarray:
    step = min(fp.fwhm / 8, idler_step_pm / 2)
    n = int(np.ceil(fp.order_window / 2 / step))  # type: ignore[operator]
    return np.arange(-n, n + 1) * step


def filtered_response(
    response: np.ndarray,
    idler_axis: np.ndarray,
    centers: np.ndarray,
    fp: FPFilter,
) -> np.ndarray:
    """Idler response seen through the Fabry-Pérot at the given centres

    The Airy function is integrated over the single-order window and
    normalised to unit area.  A filter narrower than a quarter of the idler
    grid step is below the sampling limit, the response is then read off by
    linear interpolation.

    """
    idler_step_pm = float(np.min(np.diff(idler_axis))) * 1e3
    kw = {"left": 0.0, "right": 0.0}
    if fp.fwhm < idler_step_pm / 4:
        return np.interp(centers, idler_axis, response, **kw)
    delta = _filter_nodes(fp, idler_step_pm)
    weights = airy_response(fp, delta)
    weights /= weights.sum()
    points = np.add.outer(centers, delta * 1e-3)
    return np.interp(points, idler_axis, response, **kw) @ weights


def random_scan(plan: ScanPlan, fp: FPFilter) -> bool:
    """Whether repeated scans differ: noise, seed error, or filter jitter"""
    return plan.noisy or plan.seed_accuracy > 0 or fp.center_jitter > 0


def simulate_scan(
    jsa: JSAMatrix,
    plan: ScanPlan,
    fp: FPFilter,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> MeasuredJSD:
    """Simulate a stimulated emission scan of the JSD

    Every seed wavelength gets its own random stream spawned from ``seed``,
    so the result does not depend on the thread schedule.

    Parameters
    ----------
    jsa : JSAMatrix
        Model amplitude

    plan : ScanPlan

    fp : FPFilter

    seed : Optional[int]
        Random seed; required when the plan is noisy or inexact

    workers : Optional[int]
        Thread count

    Returns
    -------
    MeasuredJSD

    Raises
    ------
    OrderOverlapError
        If the idler scan is wider than the single-order window

    ScanRangeError
        A (perturbed) seed outside the JSA signal axis

    """
    span = (plan.idler[-1] - plan.idler[0]) * 1e3
    if span > fp.order_window:  # type: ignore[operator]
        raise OrderOverlapError(
            f"idler scan span {span:.4g} pm exceeds the Fabry-Pérot order window "
            f"{fp.order_window:.4g} pm; neighbouring orders would alias"
        )
    if random_scan(plan, fp) and seed is None:
        raise ParameterError("a random seed is required for a noisy or inexact scan")
    streams = np.random.SeedSequence(seed).spawn(plan.seeds.size)
    density = jsd(jsa)
    peak = float(density.max())
    if not peak > 0:
        raise ParameterError("JSA has no spectral content")

    def record(k: int) -> np.ndarray:
        rng = np.random.default_rng(streams[k])
        seed_nm = plan.seeds[k] + rng.uniform(-1, 1) * plan.seed_accuracy * 1e-3
        response = stimulated_response(jsa, seed_nm) / peak
        jitter = rng.normal(0, 1, plan.idler.size) * fp.center_jitter * 1e-3
        centers = plan.idler + jitter
        mean = plan.gain * filtered_response(response, jsa.idler, centers, fp)
        if not plan.noisy:
            return mean
        counts = rng.poisson(mean).astype(float)
        return counts + rng.normal(0, plan.read_noise, counts.shape)

    counts = np.vstack(parallel_map(record, range(plan.seeds.size), workers))
    if plan.noisy:
        clipped = int(np.count_nonzero(counts < 0))
        if clipped:
            logger.info(f"{clipped} negative readings clamped to zero")
        counts = np.clip(counts, 0, None)
    noise = {
        "model": plan.integration,
        "gain": plan.gain,
        "read_noise": plan.read_noise,
    }
    meta = {"plan": plan.to_dict(), "fp": fp.to_dict(), "seed": seed}
    return MeasuredJSD(plan.seeds, plan.idler, counts, noise, meta)


def resolution_sweep(
    jsa: JSAMatrix,
    fwhms: Iterable[float],
    plan: ScanPlan,
    fp: Optional[FPFilter] = None,
    workers: Optional[int] = None,
) -> List[Tuple[float, float]]:
    """Phase-blind Schmidt number against Fabry-Pérot resolution

    Each scan is noiseless with exact seeds; the filters keep the template's
    order window and a free spectral range of at least ten linewidths.

    Parameters
    ----------
    jsa : JSAMatrix

    fwhms : Iterable[float]
        Filter FWHMs (pm)

    plan : ScanPlan
        Template plan (positions are kept, noise and seed error dropped)

    fp : Optional[FPFilter]
        Template filter, default: no jitter and a window of the idler span

    Returns
    -------
    List[Tuple[float, float]]
        ``(fwhm, K_bound)`` pairs in input order

    """
    fwhms = list(fwhms)
    if not fwhms:
        raise ParameterError("empty FWHM list")
    span = (plan.idler[-1] - plan.idler[0]) * 1e3
    window = fp.order_window if fp is not None else max(span, 1e-3)
    base_fsr = fp.fsr if fp is not None else window
    ideal = replace(plan, integration="noiseless", seed_accuracy=0.0)
    result = []
    for fwhm in fwhms:
        fsr = max(base_fsr, window, 10 * fwhm)  # type: ignore[type-var]
        sweep_fp = FPFilter.from_fwhm(fwhm, fsr, order_window=window)
        measured = simulate_scan(jsa, ideal, sweep_fp, workers=workers)
        result.append((float(fwhm), k_bound(measured)))
    curve = np.array([kb for _, kb in sorted(result)])
    if np.any(np.diff(curve) > 0.02 * curve[:-1]):
        logger.warning("K_bound increases with filter width beyond 2%")
    return result


def k_bound_spread(
    jsa: JSAMatrix,
    plan: ScanPlan,
    fp: FPFilter,
    seed: Optional[int] = None,
    trials: int = 8,
    workers: Optional[int] = None,
) -> Tuple[float, float]:
    """Mean and standard deviation of ``K_bound`` over repeated scans

    Trials use independent streams spawned from ``seed``; a noiseless scan
    with exact seeds and a fixed filter has zero spread.

    Returns
    -------
    Tuple[float, float]
        ``(mean, std)``, the standard deviation with one degree of freedom

    """
    if trials < 2:
        raise ParameterError(f"trials={trials}: need at least 2")
    seeds = [
        int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(trials)
    ]
    values = np.array(
        parallel_map(
            lambda s: k_bound(simulate_scan(jsa, plan, fp, seed=s, workers=1)),
            seeds,
            workers,
        )
    )
    mean, std = float(values.mean()), float(values.std(ddof=1))
    logger.info(f"K_bound = {mean:.4g} ± {std:.2g} over {trials} scans")
    return mean, std


def save_measured(md: MeasuredJSD, fpath: _path_t, meta: Optional[Dict] = None):
    """Write counts as a CSV matrix with a JSON sidecar (noise metadata)"""
    fpath = write_matrix(fpath, md.seed, md.idler, md.counts, _AXES)
    write_sidecar(fpath, {**md.meta, **(meta or {}), "noise": md.noise})
    return fpath


def load_measured(fpath: _path_t) -> MeasuredJSD:
    """Read counts written by :func:`save_measured`"""
    names, seed, idler, counts = read_matrix(fpath)
    if names != _AXES:
        raise ParameterError(f"{fpath}: axes {names}, expected {_AXES}")
    meta = read_sidecar(fpath)
    noise = meta.pop("noise", {})
    return MeasuredJSD(seed, idler, np.real(counts), noise, meta)
