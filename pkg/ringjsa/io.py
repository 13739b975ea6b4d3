"""Functions useful for I/O and file manipulation

Configs and metadata sidecars are JSON (or YAML), matrices are CSV files
with the two axes in the first two rows::

  <col_name>,<col axis ...>
  <row_name>,<row axis ...>
  <matrix row 0>
  <matrix row 1>
  ...

Complex entries are written as ``a+bj``.  A matrix ``foo.csv`` has its
metadata in ``foo.json``.

"""

from datetime import datetime, timezone
import io
import json
from pathlib import Path
from typing import Any, Dict, List, overload, Tuple, Union

import numpy as np
import pandas as pd
import yaml

from ringjsa._types import _path_t
from ringjsa.errors import FileFormatError, SpectrumParseError

_AXIS_FMT = "{:.6f}"
_REAL_FMT = "%.9e"


@overload
def dwim_file(fpath: _path_t) -> Union[Dict, List]:
    ...  # pragma: no cover, overload


@overload
def dwim_file(fpath: _path_t, data: Any) -> None:
    ...  # pragma: no cover, overload


def dwim_file(fpath, data=None):
    """Do What I Mean with file

    Depending on the function arguments, either read the contents of a file, or
    write data to the file.  The file type is guessed from the extension;
    supported formats: JSON and YAML.  JSON is written with sorted keys, so
    identical data gives identical files.

    Parameters
    ----------
    fpath : Union[str, Path]
        File path to read or write to

    data : Union[None, Any]
        Data, when writing to a file.

    Returns
    -------
    Union[None, Union[Dict, List]]
        - If writing to a file, nothing (``None``) is returned
        - If reading from a file, depending on the contents, either a list or
          dictionary are returned

    """
    fpath = Path(fpath)
    mode = "r" if data is None else "w"
    if fpath.suffix in (".yaml", ".yml"):
        with open(fpath, mode=mode) as stream:
            if data is None:
                return yaml.safe_load(stream)
            else:
                yaml.safe_dump(data, stream)
    elif fpath.suffix == ".json":
        with open(fpath, mode=mode) as stream:
            if data is None:
                return json.load(stream)
            else:
                json.dump(data, stream, indent=2, sort_keys=True)
                stream.write("\n")
    else:
        raise FileFormatError(f"{fpath}: not a JSON or YAML file")


def sidecar_path(fpath: _path_t) -> Path:
    """Path of the JSON metadata file accompanying a data file"""
    return Path(fpath).with_suffix(".json")


def write_sidecar(fpath: _path_t, meta: Dict) -> Path:
    """Write metadata next to ``fpath``, stamped with ``generated_at``"""
    path = sidecar_path(fpath)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    dwim_file(path, {**meta, "generated_at": stamp})
    return path


def read_sidecar(fpath: _path_t) -> Dict:
    """Read the metadata next to ``fpath``, empty if there is none"""
    path = sidecar_path(fpath)
    if not path.exists():
        return {}
    meta = dwim_file(path)
    meta.pop("generated_at", None)  # type: ignore[union-attr]
    return meta  # type: ignore[return-value]


def _fmt_complex(value) -> str:
    return f"{value.real:.9e}{value.imag:+.9e}j"


def write_matrix(
    fpath: _path_t,
    rows: np.ndarray,
    cols: np.ndarray,
    matrix: np.ndarray,
    names: Tuple[str, str],
) -> Path:
    """Write a (real or complex) matrix with its two axes

    Parameters
    ----------
    fpath : Union[str, Path]
        Output CSV file

    rows, cols : numpy.ndarray
        Axes along the first and second matrix dimension

    matrix : numpy.ndarray
        Matrix of shape ``(len(rows), len(cols))``

    names : Tuple[str, str]
        Names of the row and column axes, e.g. ``("signal_nm", "idler_nm")``

    Returns
    -------
    Path
        The CSV file

    """
    matrix = np.asarray(matrix)
    if matrix.shape != (len(rows), len(cols)):
        raise ValueError(f"{matrix.shape}: inconsistent with axes")
    fpath = Path(fpath)
    fpath.parent.mkdir(parents=True, exist_ok=True)
    if np.iscomplexobj(matrix):
        body = pd.DataFrame(np.vectorize(_fmt_complex, otypes=[str])(matrix))
    else:
        body = pd.DataFrame(matrix)
    with open(fpath, "w", newline="") as stream:
        stream.write(",".join([names[1], *map(_AXIS_FMT.format, cols)]) + "\n")
        stream.write(",".join([names[0], *map(_AXIS_FMT.format, rows)]) + "\n")
        body.to_csv(
            stream,
            header=False,
            index=False,
            float_format=_REAL_FMT,
            lineterminator="\n",
        )
    return fpath


def read_matrix(
    fpath: _path_t,
) -> Tuple[Tuple[str, str], np.ndarray, np.ndarray, np.ndarray]:
    """Read a matrix written by :func:`write_matrix`

    Returns
    -------
    Tuple[Tuple[str, str], numpy.ndarray, numpy.ndarray, numpy.ndarray]
        Axis names (rows, columns), row axis, column axis, and the matrix;
        the matrix is complex if any entry has an imaginary part.

    """
    text = Path(fpath).read_text()
    try:
        colhdr, rowhdr, body = text.split("\n", 2)
    except ValueError:
        raise SpectrumParseError(f"{fpath}: missing axis rows") from None
    colname, *cols = colhdr.split(",")
    rowname, *rows = rowhdr.split(",")
    df = pd.read_csv(io.StringIO(body), header=None, dtype=str)
    raw = df.to_numpy(dtype=str)
    if raw.shape != (len(rows), len(cols)):
        raise SpectrumParseError(f"{fpath}: matrix shape {raw.shape} != axes")
    if any("j" in entry for entry in raw.ravel()):
        matrix = np.vectorize(complex, otypes=[complex])(raw)
    else:
        matrix = raw.astype(float)
    return (
        (rowname, colname),
        np.asarray(rows, dtype=float),
        np.asarray(cols, dtype=float),
        matrix,
    )


def read_table(
    fpath: _path_t, names: Tuple[str, str]
) -> Tuple[pd.DataFrame, np.ndarray]:
    """Read a two-column numeric CSV with ``#`` comments

    Columns may be separated by commas or whitespace.  An optional
    non-numeric header line is skipped.  Parsing errors point to the line in
    the original file.

    Parameters
    ----------
    fpath : Union[str, Path]
        CSV file

    names : Tuple[str, str]
        Column names of the returned table

    Returns
    -------
    Tuple[pandas.DataFrame, numpy.ndarray]
        The table, and the 1-based line number of each row in the file

    Raises
    ------
    SpectrumParseError
        Wrong column count, or a non-numeric/NaN entry

    """
    text = pd.Series(Path(fpath).read_text().splitlines(), dtype=object)
    text.index += 1  # line numbers
    content = text.str.split("#", n=1).str[0].str.strip()
    fields = content[content != ""].str.split(r"[,;\s]+", regex=True)
    width = fields.str.len()
    if (width != 2).any():
        lineno = int(width.index[width != 2][0])
        raise SpectrumParseError(
            f"expected 2 columns, found {width[lineno]}", lineno
        )
    raw = pd.DataFrame(
        fields.tolist(), index=fields.index, columns=list(names), dtype=str
    )
    table = raw.apply(pd.to_numeric, errors="coerce")
    if len(table) and table.iloc[0].isna().all():  # header line
        table, raw = table.iloc[1:], raw.iloc[1:]
    bad = table.isna().any(axis=1)
    if bad.any():
        lineno = int(bad.idxmax())
        entry = ",".join(raw.loc[lineno])
        raise SpectrumParseError(f"{entry!r}: not numeric", lineno)
    return table.reset_index(drop=True), table.index.to_numpy(dtype=int)
