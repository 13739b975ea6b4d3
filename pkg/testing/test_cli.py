import numpy as np
import pytest

from ringjsa.cli import (
    describe,
    fit_spectrum,
    jsa,
    k_bound_file,
    measure,
    scaling,
    sweep_resolution,
)
from ringjsa.io import dwim_file
from ringjsa.specfit import synthesize_spectrum

from .conftest import assert_log, chdir, write_csv

COMB = (1532.4, 1542.2, 1552.0, 1561.9, 1571.9)


@pytest.fixture
def spectrum_csv(tmp_path):
    lam = np.arange(1525.0, 1580.0, 0.002)
    spec = synthesize_spectrum(
        lam, [(l0, 40800, 0.1) for l0 in COMB], bell=(1550.0, 15.0, 0.3)
    )
    return write_csv(
        tmp_path / "transmission.csv",
        spec.wavelength,
        spec.transmission,
        header="wavelength,transmission",
    )


@pytest.fixture
def small_conf(tmp_path):
    fpath = tmp_path / "ring.json"
    dwim_file(fpath, {"grid": {"n": 64, "pump_points": 128}})
    return fpath


def _exit(err, code: int):
    assert err.type == SystemExit
    assert err.value.code == code


def test_fit_spectrum(tmp_path, spectrum_csv):
    out = tmp_path / "fits"
    summary = fit_spectrum(str(spectrum_csv), out=str(out))
    assert summary.endswith(f"5 dips fitted, results in {out}")
    envelope = dwim_file(out / "envelope.json")
    assert envelope["rows"] > 27000
    assert envelope["center"] == pytest.approx(1550.0, abs=0.5)
    dips = [dwim_file(out / f"dip_{i:02d}.json") for i in range(1, 6)]
    assert [d["lambda0"] for d in dips] == pytest.approx(list(COMB), abs=1e-3)


def test_fit_spectrum_outdir_from_config(tmp_path, spectrum_csv):
    dwim_file(tmp_path / "ring.yaml", {"output": "from-config"})
    with chdir(tmp_path):
        fit_spectrum(spectrum_csv.name, config="ring.yaml")
    assert (tmp_path / "from-config" / "dip_03.json").exists()


def test_fit_spectrum_errors(caplog, tmp_path):
    with pytest.raises(SystemExit) as err:
        fit_spectrum(str(tmp_path / "missing.csv"), out=str(tmp_path))
    _exit(err, 2)
    assert_log(caplog, "cannot open", "ERROR")

    flat = tmp_path / "flat.csv"
    lam = np.arange(1550.0, 1551.0, 0.002)
    write_csv(flat, lam, np.ones_like(lam))
    with pytest.raises(SystemExit) as err:
        fit_spectrum(str(flat), out=str(tmp_path))
    _exit(err, 3)

    garbled = tmp_path / "garbled.csv"
    garbled.write_text("1550.0,0.9\n1550.1,x\n")
    with pytest.raises(SystemExit) as err:
        fit_spectrum(str(garbled), out=str(tmp_path))
    _exit(err, 2)
    assert_log(caplog, "line 2", "ERROR")


def test_no_config(caplog):
    with pytest.raises(SystemExit) as err:
        jsa()
    _exit(err, 4)
    assert_log(caplog, "--paper-defaults", "ERROR")


def test_unsupported_config(caplog, tmp_path, spectrum_csv):
    (tmp_path / "ring.toml").write_text("output = \"x\"\n")
    with pytest.raises(SystemExit) as err:
        fit_spectrum(str(spectrum_csv), config=str(tmp_path / "ring.toml"))
    _exit(err, 2)
    assert_log(caplog, "not a JSON or YAML file", "ERROR")


def test_invalid_config(caplog, tmp_path):
    fpath = tmp_path / "ring.json"
    dwim_file(fpath, {"geometry": {"diameter": 30.0}})
    with pytest.raises(SystemExit) as err:
        jsa(str(fpath), paper_defaults=True, out=str(tmp_path))
    _exit(err, 4)
    assert_log(caplog, "geometry.diameter: unknown key", "ERROR")


def test_jsa_measure(tmp_path, small_conf):
    out = tmp_path / "pulsed"
    summary = jsa(str(small_conf), paper_defaults=True, out=str(out))
    assert summary.startswith("K=")
    assert summary.endswith(f"results in {out}")
    for name in ("jsa.csv", "jsa.json", "schmidt.json", "plot_jsd.py"):
        assert (out / name).exists()
    schmidt = dwim_file(out / "schmidt.json")
    assert schmidt["display_only"] is False
    assert 1 < schmidt["K"] < 1.3
    assert dwim_file(out / "jsa.json")["config"]["seed"] == 0

    summary = measure(
        str(small_conf),
        paper_defaults=True,
        out=str(out),
        jsa_file=str(out / "jsa.csv"),
    )
    assert summary.startswith("K_bound=")
    assert "±" in summary.splitlines()[0]
    for name in ("measured.csv", "measured.json", "k_bound.json", "plot_measured.py"):
        assert (out / name).exists()
    result = dwim_file(out / "k_bound.json")
    assert result["seed"] == 0
    assert result["noise"]["model"] == "shot+read"
    assert 1 <= result["K_bound"] < 1.3
    assert result["trials"] == 8
    assert 0 < result["K_bound_std"] < 0.05

    summary = k_bound_file(str(out / "measured.csv"))
    assert float(summary.split("=")[1]) == pytest.approx(result["K_bound"], rel=1e-3)

    summary = sweep_resolution(
        str(small_conf),
        fwhms="50, 5",
        paper_defaults=True,
        out=str(out),
        jsa_file=str(out / "jsa.csv"),
    )
    assert "FP FWHM (pm)" in summary
    sweep = dwim_file(out / "sweep.json")
    assert sweep["fwhm_pm"] == [50.0, 5.0]
    assert len(sweep["K_bound"]) == 2


def test_measure_seed_override(tmp_path, small_conf):
    out = tmp_path / "seeded"
    measure(str(small_conf), paper_defaults=True, out=str(out), seed=11)
    assert dwim_file(out / "k_bound.json")["seed"] == 11


def test_measure_order_overlap(caplog, tmp_path):
    fpath = tmp_path / "ring.json"
    dwim_file(
        fpath,
        {"grid": {"n": 64, "pump_points": 128}, "fp": {"order_window": 50.0}},
    )
    with pytest.raises(SystemExit) as err:
        measure(str(fpath), paper_defaults=True, out=str(tmp_path / "overlap"))
    _exit(err, 5)
    assert_log(caplog, "order window", "ERROR")


def test_jsa_cw(tmp_path, small_conf):
    out = tmp_path / "cw"
    jsa(str(small_conf), paper_defaults=True, pump="cw", out=str(out))
    schmidt = dwim_file(out / "schmidt.json")
    assert schmidt["display_only"] is True
    assert schmidt["method"] == "banded-purity"
    assert 37038 / 2 <= schmidt["K"] <= 2 * 37038
    assert "(display only JSD)" in (out / "plot_jsd.py").read_text()


def test_scaling(caplog, tmp_path):
    drive = np.linspace(1, 10, 10)
    series = write_csv(tmp_path / "rates.csv", drive, 3 * drive**2)
    dwim_file(tmp_path / "rates.json", {"mode": "pulsed"})
    out = tmp_path / "fit"
    summary = scaling(str(series), out=str(out))
    assert summary.splitlines()[0] == "exponent=2.000±0.000"
    assert summary.endswith("saturation index=none")
    result = dwim_file(out / "scaling.json")
    assert result["exponent"] == pytest.approx(2, abs=1e-9)
    assert result["mode"] == "pulsed"

    short = write_csv(tmp_path / "short.csv", drive[:3], drive[:3] ** 2)
    with pytest.raises(SystemExit) as err:
        scaling(str(short), out=str(out))
    _exit(err, 6)
    assert_log(caplog, "3 points, need 4", "ERROR")


def test_k_bound_missing(caplog, tmp_path):
    with pytest.raises(SystemExit) as err:
        k_bound_file(str(tmp_path / "measured.csv"))
    _exit(err, 2)
    assert_log(caplog, "cannot open", "ERROR")


def test_describe(capsys):
    describe(paper_defaults=True)
    printed = capsys.readouterr().out
    assert "Ring resonator pair source" in printed
    assert "pulsed-gaussian" in printed


def test_reproducible_outputs(tmp_path, small_conf):
    for run in ("a", "b"):
        jsa(str(small_conf), paper_defaults=True, out=str(tmp_path / run))
        measure(
            str(small_conf),
            paper_defaults=True,
            out=str(tmp_path / run),
            jsa_file=str(tmp_path / run / "jsa.csv"),
        )
    for name in ("jsa.csv", "measured.csv", "k_bound.json", "schmidt.json"):
        first, second = (tmp_path / run / name for run in ("a", "b"))
        assert first.read_bytes() == second.read_bytes()


def test_measure_noiseless(tmp_path, small_conf):
    conf = dwim_file(small_conf)
    conf["noise"] = {"integration": "noiseless"}
    conf["scan"] = {"seed_accuracy": 0.0}
    dwim_file(small_conf, conf)
    out = tmp_path / "ideal"
    measure(str(small_conf), paper_defaults=True, out=str(out))
    result = dwim_file(out / "k_bound.json")
    assert result["K_bound_std"] == 0
    assert result["trials"] == 1
