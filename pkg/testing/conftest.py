from contextlib import contextmanager
import os
from pathlib import Path

import numpy as np
import pytest

from ringjsa.jsa import JSAMatrix, Triplet, build_grid, compute_jsa
from ringjsa.pump import PumpSpec, gaussian_pulse_spectrum, pump_grid
from ringjsa.resonator import DispersionParams, RingGeometry, comb_triplet



def assert_log(caplog, msg: str, lvl: str = ""):
    if lvl:
        assert caplog.records[-1].levelname == lvl
    assert msg in caplog.text


@contextmanager
def chdir(dirpath):
    cwd = Path.cwd()
    os.chdir(dirpath)
    try:
        yield
    finally:
        os.chdir(cwd)


def write_csv(fpath: Path, *columns, header: str = ""):
    lines = [header] if header else []
    lines.extend(",".join(f"{v:.10g}" for v in row) for row in zip(*columns))
    fpath.write_text("\n".join(lines) + "\n")
    return fpath


def random_jsa(shape=(64, 48), seed: int = 42) -> JSAMatrix:
    rng = np.random.default_rng(seed)
    signal = 1561.9 + np.linspace(-0.2, 0.2, shape[0])
    idler = 1542.2 + np.linspace(-0.2, 0.2, shape[1])
    amp = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return JSAMatrix(signal, idler, amp)


@pytest.fixture
def disp():
    return DispersionParams(n_eff=2.54, v_g=116.0, lambda_ref=1552.0, gvd=1.84)


@pytest.fixture
def geom():
    return RingGeometry(radius=15.0)


@pytest.fixture
def triplet(disp, geom):
    return Triplet(**comb_triplet(disp, geom, q=40800))


@pytest.fixture
def pulsed(triplet):
    return PumpSpec("pulsed-gaussian", triplet.pump.lambda0, spectral_fwhm=90.0)


@pytest.fixture
def cw(triplet):
    return PumpSpec("cw-line", triplet.pump.lambda0, coherence_time=1.0)


@pytest.fixture
def small_jsa(triplet, pulsed):
    # 128 points per axis keeps the pulsed model quick
    alpha = gaussian_pulse_spectrum(pulsed, pump_grid(pulsed, 256))
    return compute_jsa(alpha, triplet, build_grid(triplet, 5, 128), workers=2)


@pytest.fixture
def tiny_jsa(triplet, pulsed):
    alpha = gaussian_pulse_spectrum(pulsed, pump_grid(pulsed, 128))
    return compute_jsa(alpha, triplet, build_grid(triplet, 5, 64), workers=1)
