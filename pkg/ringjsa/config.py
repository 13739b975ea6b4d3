"""Device and experiment configuration

A configuration is a JSON (or YAML) document with the sections
``geometry``, ``dispersion``, ``triplet``, ``pump``, ``fp``, ``scan``,
``noise``, ``grid``, ``purity``, and the top level keys ``output``,
``seed`` and ``metadata``.  Values are resolved in order of precedence:
command line overrides, the configuration file, the published device
parameters (when requested), and the built-in defaults.

"""

from copy import deepcopy
from dataclasses import dataclass, field
from logging import getLogger
from pathlib import Path
from typing import Dict, Optional

from glom import And, Assign, glom, M, Match, MatchError, Or, PathAssignError, Val

from ringjsa._types import _path_t
from ringjsa.errors import ConfigError, RingJSAError, WindowError
from ringjsa.instrument import FPFilter, INTEGRATIONS, ScanPlan
from ringjsa.io import dwim_file
from ringjsa.jsa import Triplet
from ringjsa.pump import KINDS, LINE_CONVENTIONS, LINESHAPES, PumpSpec
from ringjsa.resonator import (
    DispersionParams,
    REGIMES,
    Resonance,
    RingGeometry,
    comb_triplet,
)

logger = getLogger(__name__)

_num = Or(int, float)
_pos = And(_num, M > 0)
_nonneg = And(_num, M >= 0)
_resonance = {"lambda0": _pos, "q": _pos, "extinction": _nonneg}

#: accepted keys of every section, and the pattern their values must match
SCHEMA: Dict[str, Dict] = {
    "geometry": {
        "radius": _pos,
        "coupling": Or(*REGIMES),
        "linewidth_broadening": _pos,
    },
    "dispersion": {
        "n_eff": _pos,
        "v_g": _pos,
        "lambda_ref": _pos,
        "gvd": _num,
        "gvd_unit": str,
        "beta2": _num,
    },
    "triplet": {
        "q": _pos,
        "extinction": _nonneg,
        "fit_from_spectrum": str,
        "signal": _resonance,
        "pump": _resonance,
        "idler": _resonance,
    },
    "pump": {
        "kind": Or(*KINDS),
        "lambda_p": _pos,
        "spectral_fwhm": _pos,
        "coherence_time": _pos,
        "pulse_energy": _pos,
        "rep_rate": _pos,
        "pulse_duration": _pos,
        "power": _pos,
        "lineshape": Or(*LINESHAPES),
        "chirp": _num,
        "line_convention": Or(*LINE_CONVENTIONS),
    },
    "fp": {
        "fwhm": _pos,
        "reflectivity": _pos,
        "fsr": _pos,
        "center_jitter": _nonneg,
        "order_window": _pos,
    },
    "scan": {
        "half_span_pm": _pos,
        "step_pm": _pos,
        "idler_step_pm": _pos,
        "seed_accuracy": _nonneg,
    },
    "noise": {
        "integration": Or(*INTEGRATIONS),
        "gain": _pos,
        "read_noise": _nonneg,
    },
    "grid": {
        "span_linewidths": _pos,
        "n": And(int, M >= 64),
        "pump_points": And(int, M >= 16),
        "pump_span": _pos,
        "pump_enhancement": bool,
    },
    "purity": {
        "outer_nodes": And(int, M >= 1024),
        "inner_nodes": And(int, M >= 128),
    },
}
_TOPLEVEL = {"output": str, "seed": Or(None, And(int, M >= 0)), "metadata": dict}

DEFAULTS: Dict = {
    "scan": {"half_span_pm": 60.0, "step_pm": 2.0, "seed_accuracy": 0.0},
    "noise": {"integration": "noiseless", "gain": 1e4, "read_noise": 0.0},
    "grid": {
        "span_linewidths": 5.0,
        "n": 512,
        "pump_points": 256,
        "pump_span": 4.0,
        "pump_enhancement": True,
    },
    "purity": {"outer_nodes": 1024, "inner_nodes": 129},
    "output": "ringjsa-out",
    "seed": None,
    "metadata": {},
}


def paper_defaults(kind: str = "pulsed") -> Dict:
    """Published device and set-up parameters

    Parameters
    ----------
    kind : str (default: "pulsed")
        Pump, "pulsed" (90 pm band-pass filtered pulses) or "cw"

    """
    pumps = {
        "pulsed": {
            "kind": "pulsed-gaussian",
            "spectral_fwhm": 90.0,
            "pulse_energy": 0.8,
            "rep_rate": 10.0,
            "pulse_duration": 14.0,
        },
        "cw": {"kind": "cw-line", "coherence_time": 1.0, "power": 80.0},
    }
    if kind not in pumps:
        raise ConfigError("pump", f"{kind}: not one of {list(pumps)}")
    return {
        "geometry": {
            "radius": 15.0,
            "coupling": "critical",
            "linewidth_broadening": 1.0,
        },
        "dispersion": {
            "n_eff": 2.54,
            "v_g": 116.0,
            "lambda_ref": 1552.0,
            "gvd": 1.84,
            "gvd_unit": "um^2/ps",
        },
        "triplet": {"q": 40800.0, "extinction": 0.0},
        "pump": pumps[kind],
        "fp": {"fwhm": 5.0, "reflectivity": 0.9},
        "scan": {"half_span_pm": 60.0, "step_pm": 2.0, "seed_accuracy": 2.0},
        "noise": {"integration": "shot+read", "gain": 1e4, "read_noise": 2.0},
        "seed": 0,
        "metadata": {"grating_coupler_loss_db": 5.0, "pump_kind": kind},
    }


def merge(base: Dict, override: Dict) -> Dict:
    """Recursive merge, values in ``override`` win

    A ``pump`` section of a different ``kind`` replaces the base section
    instead of being merged into it.

    """
    result = deepcopy(base)
    for key, value in override.items():
        old = result.get(key)
        replace_pump = (
            key == "pump"
            and isinstance(old, dict)
            and isinstance(value, dict)
            and value.get("kind", old.get("kind")) != old.get("kind")
        )
        if isinstance(old, dict) and isinstance(value, dict) and not replace_pump:
            result[key] = merge(old, value)
        else:
            result[key] = deepcopy(value)
    return result


def validate(conf: Dict) -> Dict:
    """Check every key and value, raise :class:`ConfigError` with its path"""
    for key, value in conf.items():
        if key in _TOPLEVEL:
            _check(key, value, _TOPLEVEL[key])
            continue
        if key not in SCHEMA:
            raise ConfigError(key, "unknown section")
        if not isinstance(value, dict):
            raise ConfigError(key, "must be a mapping")
        for name, item in value.items():
            path = f"{key}.{name}"
            if name not in SCHEMA[key]:
                raise ConfigError(path, "unknown key")
            spec = SCHEMA[key][name]
            if isinstance(spec, dict):
                if not isinstance(item, dict):
                    raise ConfigError(path, "must be a mapping")
                for sub, subitem in item.items():
                    if sub not in spec:
                        raise ConfigError(f"{path}.{sub}", "unknown key")
                    _check(f"{path}.{sub}", subitem, spec[sub])
            else:
                _check(path, item, spec)
    return conf


def _check(path: str, value, spec):
    try:
        glom(value, Match(spec))
    except MatchError as err:
        raise ConfigError(path, f"invalid value {value!r} ({err})") from None


@dataclass(frozen=True)
class DeviceConfig:
    """Resolved configuration, every pipeline stage can be built from it

    Attributes
    ----------
    geometry : RingGeometry

    dispersion : DispersionParams

    triplet : Triplet

    pump : PumpSpec

    fp : FPFilter

    scan : ScanPlan

    grid : Dict
        JSA grid (``span_linewidths``, ``n``) and pump grid (``pump_points``,
        ``pump_span``) settings

    purity : Dict
        Options of :func:`ringjsa.schmidt.purity_banded_cw`

    output : Path
        Output directory

    seed : Optional[int]
        Random seed, required for noisy or inexact scans

    metadata : Dict
        Free-form, copied into every sidecar

    raw : Dict
        The merged configuration document

    """

    geometry: RingGeometry
    dispersion: DispersionParams
    triplet: Triplet
    pump: PumpSpec
    fp: FPFilter
    scan: ScanPlan
    grid: Dict
    purity: Dict
    output: Path
    seed: Optional[int] = None
    metadata: Dict = field(default_factory=dict)
    raw: Dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> Dict:
        return {
            "geometry": self.geometry.__dict__,
            "dispersion": self.dispersion.__dict__,
            "triplet": self.triplet.to_dict(),
            "pump": self.pump.to_dict(),
            "fp": self.fp.to_dict(),
            "scan": self.scan.to_dict(),
            "grid": self.grid,
            "purity": self.purity,
            "seed": self.seed,
            "metadata": self.metadata,
        }


def _build(path: str, factory, **kwargs):
    # dataclass validation errors become config errors naming the section
    try:
        return factory(**kwargs)
    except TypeError as err:
        raise ConfigError(path, str(err)) from None
    except RingJSAError as err:
        raise ConfigError(path, str(err)) from None


def _clip(extinction: float) -> float:
    return min(max(extinction, 0.0), 1.0)


def fit_from_spectrum(fpath: _path_t, lambda_ref: float) -> Triplet:
    """Triplet from the fitted dips of a measured transmission spectrum

    The pump is the dip closest to ``lambda_ref``, the signal and idler its
    red and blue neighbours.

    """
    from ringjsa.specfit import fit_spectrum, parse_spectrum

    _, fits = fit_spectrum(parse_spectrum(fpath))
    fits = sorted(fits, key=lambda f: f.lambda0)
    ipump = min(range(len(fits)), key=lambda i: abs(fits[i].lambda0 - lambda_ref))
    if ipump == 0 or ipump == len(fits) - 1:
        raise WindowError(
            f"{fpath}: dip at {fits[ipump].lambda0:.3f} nm has no neighbours"
        )
    roles = (("signal", ipump + 1), ("pump", ipump), ("idler", ipump - 1))
    return Triplet(
        *(
            Resonance(fits[k].lambda0, fits[k].q, _clip(fits[k].extinction), role)
            for role, k in roles
        )
    )


def _triplet(conf: Dict, disp: DispersionParams, geom: RingGeometry, basedir: Path):
    section = conf.get("triplet", {})
    if "fit_from_spectrum" in section:
        spectrum = basedir / section["fit_from_spectrum"]
        logger.info(f"triplet from the spectrum {spectrum}")
        return fit_from_spectrum(spectrum, disp.lambda_ref)
    if all(role in section for role in ("signal", "pump", "idler")):
        triplet = _build("triplet", Triplet.from_dict, conf=section)
    elif "q" in section:
        comb = _build(
            "triplet",
            comb_triplet,
            disp=disp,
            geom=geom,
            q=section["q"],
            extinction=section.get("extinction", 0.0),
        )
        triplet = Triplet(**comb)
    else:
        raise ConfigError(
            "triplet",
            "give 'q', all of 'signal'/'pump'/'idler', or 'fit_from_spectrum'",
        )
    return triplet.broadened(geom.linewidth_broadening)


def _fp(section: Dict) -> FPFilter:
    section = dict(section)
    if "fwhm" not in section:
        raise ConfigError("fp.fwhm", "missing")
    if "fsr" in section:
        if "reflectivity" in section:
            raise ConfigError("fp", "give either 'reflectivity' or 'fsr'")
        fsr = section.pop("fsr")
        fwhm = section.pop("fwhm")
        return _build("fp", FPFilter.from_fwhm, fwhm=fwhm, fsr=fsr, **section)
    return _build("fp", FPFilter, **section)


def resolve(conf: Dict, basedir: _path_t = ".") -> DeviceConfig:
    """Build a :class:`DeviceConfig` from a merged configuration document"""
    validate(conf)
    for section in ("geometry", "dispersion", "pump", "fp"):
        if section not in conf:
            raise ConfigError(section, "missing section")
    geom = _build("geometry", RingGeometry, **conf["geometry"])
    disp = _build("dispersion", DispersionParams, **conf["dispersion"])
    triplet = _triplet(conf, disp, geom, Path(basedir))
    pump_conf = {"lambda_p": triplet.pump.lambda0, **conf["pump"]}
    if "kind" not in pump_conf:
        raise ConfigError("pump.kind", "missing")
    pump = _build("pump", PumpSpec, **pump_conf)
    fp = _fp(conf["fp"])
    scan = _build(
        "scan",
        ScanPlan.around,
        triplet=triplet,
        **conf["scan"],
        **conf["noise"],
    )
    seed = conf.get("seed")
    if seed is None and (scan.noisy or scan.seed_accuracy > 0 or fp.center_jitter > 0):
        raise ConfigError("seed", "required for a noisy or inexact scan")
    return DeviceConfig(
        geometry=geom,
        dispersion=disp,
        triplet=triplet,
        pump=pump,
        fp=fp,
        scan=scan,
        grid=dict(conf["grid"]),
        purity=dict(conf["purity"]),
        output=Path(conf["output"]),
        seed=seed,
        metadata=dict(conf.get("metadata", {})),
        raw=conf,
    )


def load_config(
    fpath: Optional[_path_t] = None,
    *,
    defaults: Optional[str] = None,
    overrides: Optional[Dict] = None,
) -> DeviceConfig:
    """Read, merge, validate and resolve a configuration

    Parameters
    ----------
    fpath : Optional[Union[str, Path]]
        JSON or YAML configuration file

    defaults : Optional[str]
        Start from the published parameters of this pump kind ("pulsed" or
        "cw"), see :func:`paper_defaults`

    overrides : Optional[Dict]
        Dotted paths and values, e.g. ``{"seed": 3, "fp.fwhm": 2.0}``

    Returns
    -------
    DeviceConfig

    Raises
    ------
    ConfigError
        Unknown keys, invalid values, or incomplete sections; the message
        starts with the dotted path of the culprit

    """
    conf = deepcopy(DEFAULTS)
    if defaults:
        conf = merge(conf, paper_defaults(defaults))
    basedir = Path(".")
    if fpath is not None:
        from_file = dwim_file(Path(fpath))
        if not isinstance(from_file, dict):
            raise ConfigError("", f"{fpath}: not a configuration mapping")
        conf = merge(conf, from_file)
        basedir = Path(fpath).parent
    for path, value in (overrides or {}).items():
        if value is None:
            continue
        try:
            glom(conf, Assign(path, Val(value), missing=dict))
        except PathAssignError as err:
            raise ConfigError(path, str(err)) from None
    return resolve(conf, basedir)
