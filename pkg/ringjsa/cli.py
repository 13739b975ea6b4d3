"""Functions that are run from the CLI to model, measure, and fit a ring source

Every command writes its products (CSV matrices, JSON files, plot scripts)
into the output directory and returns a short summary.  Errors are logged
and end the process with a stable exit code, see :mod:`ringjsa.errors`.

"""

from contextlib import contextmanager
from pathlib import Path
import sys
from typing import Optional, Sequence, Union

from ringjsa import logger_config
from ringjsa.config import DEFAULTS, DeviceConfig, load_config
from ringjsa.doc import describe as describe_page, plot_script
from ringjsa.errors import ConfigError, RingJSAError
from ringjsa.instrument import (
    k_bound_spread,
    load_measured,
    random_scan,
    resolution_sweep,
    save_measured,
)
from ringjsa.io import dwim_file
from ringjsa.jsa import load_jsa, save_jsa
from ringjsa.pipeline import derived, measure as measure_scan, model_jsa
from ringjsa.schmidt import k_bound, save_schmidt
from ringjsa.specfit import fit_power_law, fit_spectrum as fit_dips
from ringjsa.specfit import parse_power_series, parse_spectrum

logger = logger_config(fmt="{name}: {levelname}: {message}")

IO_EXIT = 2


@contextmanager
def _guard():
    """Log library errors and exit with their code"""
    try:
        yield
    except RingJSAError as err:
        logger.error(str(err))
        sys.exit(err.exit_code)
    except OSError as err:
        logger.error(f"cannot open {err.filename or ''}: {err.strerror}")
        sys.exit(IO_EXIT)


def _config(
    config: str, paper_defaults: bool, pump: str, out: str, seed: Optional[int]
) -> DeviceConfig:
    if not config and not paper_defaults:
        raise ConfigError(
            "", "give a configuration file with --config, or --paper-defaults"
        )
    overrides = {"output": out or None, "seed": seed}
    return load_config(
        config or None,
        defaults=pump if paper_defaults else None,
        overrides=overrides,
    )


def _outdir(out: str, config: str) -> Path:
    if out:
        return Path(out)
    if config:
        conf = dwim_file(Path(config))
        if isinstance(conf, dict) and "output" in conf:
            return Path(conf["output"])
    return Path(DEFAULTS["output"])


def _write_script(fpath: Path, product: str, csv: Path, **context) -> Path:
    fpath.write_text(plot_script(product, csv.name, **context))
    return fpath


def fit_spectrum(
    spectrum: str,
    *,
    config: str = "",
    out: str = "",
    intrinsic_q: Optional[float] = None,
    bootstrap: int = 0,
    seed: Optional[int] = None,
) -> str:
    """Fit the envelope and every resonance dip of a transmission spectrum

    Writes ``envelope.json`` and one ``dip_NN.json`` per resonance.

    Parameters
    ----------
    spectrum : str
        Two-column CSV: wavelength (nm), linear transmission

    config : str
        Configuration file, only its ``output`` is used

    out : str
        Output directory, overrides the configuration

    intrinsic_q : Optional[float]
        Known intrinsic Q, separates under from over coupling

    bootstrap : int (default: 0)
        Residual bootstrap resamples for the uncertainties

    seed : Optional[int]
        Random seed for the bootstrap

    """
    from tabulate import tabulate

    with _guard():
        outdir = _outdir(out, config)
        spec = parse_spectrum(spectrum)
        envelope, fits = fit_dips(
            spec, intrinsic_q=intrinsic_q, bootstrap=bootstrap, seed=seed
        )
        outdir.mkdir(parents=True, exist_ok=True)
        dwim_file(
            outdir / "envelope.json",
            {
                **envelope.to_dict(),
                "spectrum": str(spectrum),
                "rows": len(spec.wavelength),
            },
        )
        for i, fit in enumerate(fits, start=1):
            dwim_file(outdir / f"dip_{i:02d}.json", fit.to_dict())
    rows = [(f.lambda0, f.q, f.q_err, f.extinction, f.regime) for f in fits]
    headers = ("λ₀ (nm)", "Q", "σ_Q", "extinction", "regime")
    table = tabulate(rows, headers=headers, floatfmt=".6g")
    return f"{table}\n{len(fits)} dips fitted, results in {outdir}"


def jsa(
    config: str = "",
    *,
    paper_defaults: bool = False,
    pump: str = "pulsed",
    out: str = "",
    seed: Optional[int] = None,
) -> str:
    """Model joint spectral amplitude and its Schmidt number

    Writes ``jsa.csv`` (with the ``jsa.json`` sidecar), ``schmidt.json``, and
    the plot script ``plot_jsd.py``.

    Parameters
    ----------
    config : str
        Configuration file (JSON or YAML)

    paper_defaults : bool
        Start from the published device parameters

    pump : str (default: "pulsed")
        Published pump set to use with ``paper_defaults``: "pulsed" or "cw"

    out : str
        Output directory, overrides the configuration

    seed : Optional[int]
        Random seed, overrides the configuration

    """
    with _guard():
        cfg = _config(config, paper_defaults, pump, out, seed)
        model, spectrum = model_jsa(cfg)
        cfg.output.mkdir(parents=True, exist_ok=True)
        csv = save_jsa(model, cfg.output / "jsa.csv", {"config": cfg.to_dict()})
        display_only = model.meta.get("display_only", False)
        save_schmidt(
            spectrum, cfg.output / "schmidt.json", {"display_only": display_only}
        )
        _write_script(
            cfg.output / "plot_jsd.py",
            "jsd",
            csv,
            k=spectrum.k,
            display_only=display_only,
        )
    return f"K={spectrum.k:.6g}\nresults in {cfg.output}"


def measure(
    config: str = "",
    *,
    paper_defaults: bool = False,
    pump: str = "pulsed",
    out: str = "",
    seed: Optional[int] = None,
    jsa_file: str = "",
    trials: int = 8,
) -> str:
    """Simulate the stimulated emission measurement and its Schmidt bound

    Writes ``measured.csv`` (with the ``measured.json`` sidecar),
    ``k_bound.json``, and the plot script ``plot_measured.py``.

    Parameters
    ----------
    config, paper_defaults, pump, out, seed
        As for ``jsa``

    jsa_file : str
        A JSA written by ``jsa``; modelled from the configuration if empty

    trials : int (default: 8)
        Repeated scans for the spread of ``K_bound``, from streams spawned
        from ``seed``; a scan without noise, seed error or filter jitter is
        not repeated

    """
    with _guard():
        cfg = _config(config, paper_defaults, pump, out, seed)
        model = load_jsa(jsa_file) if jsa_file else model_jsa(cfg)[0]
        measured = measure_scan(cfg, model)
        kb = k_bound(measured)
        kb_std, repeats = 0.0, 1
        if random_scan(cfg.scan, cfg.fp):
            repeats = trials
            _, kb_std = k_bound_spread(model, cfg.scan, cfg.fp, cfg.seed, trials)
        cfg.output.mkdir(parents=True, exist_ok=True)
        csv = save_measured(measured, cfg.output / "measured.csv")
        dwim_file(
            cfg.output / "k_bound.json",
            {
                "K_bound": kb,
                "K_bound_std": kb_std,
                "trials": repeats,
                "seed": cfg.seed,
                "noise": measured.noise,
            },
        )
        _write_script(cfg.output / "plot_measured.py", "measured", csv, k_bound=kb)
    return f"K_bound={kb:.6g}±{kb_std:.2g}\nresults in {cfg.output}"


def scaling(series: str, *, config: str = "", out: str = "") -> str:
    """Power-law exponent of the pair generation rate against pump drive

    Writes ``scaling.json``.

    Parameters
    ----------
    series : str
        Two-column CSV (drive, rate), the pump mode is read from the JSON
        sidecar next to it

    config : str
        Configuration file, only its ``output`` is used

    out : str
        Output directory, overrides the configuration

    """
    with _guard():
        outdir = _outdir(out, config)
        data = parse_power_series(series)
        fit = fit_power_law(data)
        outdir.mkdir(parents=True, exist_ok=True)
        dwim_file(
            outdir / "scaling.json",
            {**fit.to_dict(), "mode": data.mode, "series": str(series)},
        )
    threshold = "none" if fit.threshold is None else fit.threshold
    return (
        f"exponent={fit.exponent:.3f}±{fit.exponent_err:.3f}\n"
        f"saturation index={threshold}"
    )


def sweep_resolution(
    config: str = "",
    *,
    fwhms: Union[str, Sequence[float]] = (1, 2, 5, 10, 20),
    paper_defaults: bool = False,
    pump: str = "pulsed",
    out: str = "",
    jsa_file: str = "",
) -> str:
    """Schmidt bound against Fabry-Pérot resolution (noiseless scans)

    Writes ``sweep.json``.

    Parameters
    ----------
    fwhms : Union[str, Sequence[float]]
        Filter FWHMs in pm, a sequence or a comma separated string

    config, paper_defaults, pump, out, jsa_file
        As for ``measure``

    """
    from tabulate import tabulate

    if isinstance(fwhms, str):
        fwhms = [float(v) for v in fwhms.split(",") if v.strip()]
    with _guard():
        cfg = _config(config, paper_defaults, pump, out, None)
        model = load_jsa(jsa_file) if jsa_file else model_jsa(cfg)[0]
        curve = resolution_sweep(model, fwhms, cfg.scan)
        cfg.output.mkdir(parents=True, exist_ok=True)
        dwim_file(
            cfg.output / "sweep.json",
            {"fwhm_pm": [f for f, _ in curve], "K_bound": [k for _, k in curve]},
        )
    return tabulate(curve, headers=("FP FWHM (pm)", "K_bound"), floatfmt=".4g")


def describe(
    config: str = "", *, paper_defaults: bool = False, pump: str = "pulsed"
):
    """Summary of the resolved configuration and derived quantities"""
    from rich.console import Console
    from rich.markdown import Markdown

    with _guard():
        cfg = _config(config, paper_defaults, pump, "", None)
        page = describe_page(cfg.to_dict(), derived(cfg))
    Console().print(Markdown(page))


def k_bound_file(measured: str) -> str:
    """Schmidt bound of a measured JSD CSV written by ``measure``"""
    with _guard():
        kb = k_bound(load_measured(measured))
    return f"K_bound={kb:.6g}"


def main():  # pragma: no cover, CLI entry point
    """Entry point for console scripts"""
    import os
    import fire

    os.environ["PAGER"] = "cat"
    fire.Fire(
        {
            "fit-spectrum": fit_spectrum,
            "jsa": jsa,
            "measure": measure,
            "scaling": scaling,
            "sweep-resolution": sweep_resolution,
            "describe": describe,
            "k-bound": k_bound_file,
        }
    )
