"""Jinja2 templates shipped with the package: plot scripts and summaries"""

from importlib.resources import files
from typing import Dict

from jinja2 import Environment, FileSystemLoader

#: plot script template for each matrix product
PLOTS = {"jsd": "plot_jsd.py.template", "measured": "plot_measured.py.template"}


def get_template(name: str):
    loader = FileSystemLoader(searchpath=str(files("ringjsa") / "doc"))
    env = Environment(loader=loader, trim_blocks=True, lstrip_blocks=True)
    return env.get_template(name)


def plot_script(product: str, csv_name: str, **context) -> str:
    """matplotlib script that plots a matrix CSV written next to it

    Parameters
    ----------
    product : str
        "jsd" (model amplitude, plotted as ``|φ|²``) or "measured" (counts)

    csv_name : str
        File name of the CSV, relative to the script

    **context
        Extra template variables, e.g. ``title`` and ``k`` for the caption

    """
    defaults = {"title": "", "k": None, "k_bound": None, "display_only": False}
    return get_template(PLOTS[product]).render({**defaults, "csv": csv_name, **context})


def describe(conf: Dict, derived: Dict) -> str:
    """Markdown summary of a resolved configuration"""
    context = {"conf": conf, "derived": derived}
    return get_template("describe.md.template").render(context)
