"""Photon-pair spectra of silicon microring resonators

"""

from pathlib import Path

from setuptools import setup, find_packages

requirements = Path("requirements.txt").read_text().strip().split("\n")

setup(
    name="ringjsa",
    version="0.1.0",
    description="Joint spectral amplitude and Schmidt number of microring pair sources.",
    long_description=Path("README.rst").read_text(),
    long_description_content_type="text/x-rst",
    packages=find_packages(exclude=["doc", "testing", "tests", "tmp"]),
    install_requires=requirements,
    extras_require={"plot": ["matplotlib"]},
    package_data={"ringjsa": ["py.typed", "doc/*.template"]},
    entry_points={"console_scripts": ["ringjsa = ringjsa.cli:main"]},
)
