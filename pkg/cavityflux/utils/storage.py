# cavityflux/utils/storage.py
"""Binary matrix files, the view-factor cache, and CSV/JSON writers."""

import csv
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from ..errors import DimensionError

logger = logging.getLogger(__name__)

PathLike = Union[str, "os.PathLike[str]"]

_HEADER = np.dtype("<u8")
_VALUE = np.dtype("<f8")


def save_matrix(path: PathLike, matrix: np.ndarray) -> None:
    """
    Write a 2-D float64 matrix as ``u64 rows`` followed by row-major little-endian data.

    Args:
        path: Destination file
        matrix: Matrix to write (vectors are stored as a single column)
    """
    data = np.asarray(matrix, dtype=_VALUE)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {data.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as handle:
        handle.write(np.array([data.shape[0]], dtype=_HEADER).tobytes())
        handle.write(np.ascontiguousarray(data).tobytes())
    os.replace(tmp, path)
    logger.debug("Wrote %dx%d matrix to %s", data.shape[0], data.shape[1], path)


def load_matrix(path: PathLike) -> np.ndarray:
    """
    Read a matrix written by :func:`save_matrix`.

    The column count is inferred from the file size.
    """
    path = Path(path)
    size = path.stat().st_size
    with open(path, "rb") as handle:
        rows = int(np.frombuffer(handle.read(_HEADER.itemsize), dtype=_HEADER)[0])
        payload = size - _HEADER.itemsize
        if rows == 0:
            return np.zeros((0, 0))
        if payload % (rows * _VALUE.itemsize):
            raise DimensionError(f"{path}: {payload} data bytes do not split into {rows} rows")
        cols = payload // (rows * _VALUE.itemsize)
        data = np.frombuffer(handle.read(), dtype=_VALUE)
    return data.reshape(rows, cols).astype(np.float64)


class MatrixCache:
    """Directory of binary matrices keyed by a configuration hash."""

    def __init__(self, directory: Optional[PathLike]):
        self.directory = Path(directory) if directory else None

    @property
    def enabled(self) -> bool:
        return self.directory is not None

    def path_for(self, prefix: str, key: str) -> Optional[Path]:
        if self.directory is None:
            return None
        return self.directory / f"{prefix}-{key}.bin"

    def load(self, prefix: str, key: str) -> Optional[np.ndarray]:
        """Return the cached matrix, or None on a miss."""
        path = self.path_for(prefix, key)
        if path is None or not path.exists():
            return None
        logger.info("Cache hit: %s", path)
        return load_matrix(path)

    def store(self, prefix: str, key: str, matrix: np.ndarray) -> None:
        path = self.path_for(prefix, key)
        if path is None:
            return
        save_matrix(path, matrix)
        logger.info("Cached %s", path)


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Write rows with a header line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def write_dict_csv(path: PathLike, records: Sequence[Mapping[str, Any]],
                   fieldnames: Optional[Sequence[str]] = None) -> None:
    """Write a list of dictionaries; fieldnames default to the union in first-seen order."""
    if fieldnames is None:
        seen: Dict[str, None] = {}
        for record in records:
            for key in record:
                seen.setdefault(key, None)
        fieldnames = list(seen)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(fieldnames), extrasaction="ignore")
        writer.writeheader()
        for record in records:
            writer.writerow(record)


def read_csv(path: PathLike) -> List[Dict[str, str]]:
    with open(path, "r", newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def write_json(path: PathLike, payload: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, default=_json_default)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")
