"""Ingestion, validation and persistence of experimental trace formats.

All record types validate their invariants at construction, so downstream
code never sees a non-monotonic axis or a negative count. CSV schemas use a
single header line with exact column names (comma separated, UTF-8):

====================  =========================================
schema id             header
====================  =========================================
``spectrum``          ``wavelength_nm,counts``
``scan``              ``axis,signal,direction``
``histogram``         ``t_ns,counts``
``spectral_map``      ``wavelength_nm,frame_0000,frame_0001,...``
``temperature_log``   ``time_s,temperature_k``
====================  =========================================

Units at the boundary follow the internal convention everywhere:
wavelengths in nm, times in ns (logs in s), lengths in um, rates in GHz,
powers in mW, intensities in kC/s.

JSON reports are canonical (sorted keys, floats rendered with ``%.10g``) so
identical inputs always produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, SchemaError, ValidationError

__all__ = [
    "ScanTrace",
    "SpectralMap",
    "Spectrum",
    "TemperatureLog",
    "TimeHistogram",
    "canonical_json",
    "digest_arrays",
    "digest_file",
    "export_report",
    "load_csv",
    "make_report",
    "save_csv",
]


def _freeze(obj, name, values, dtype=float):
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    arr.flags.writeable = False
    object.__setattr__(obj, name, arr)
    return arr


def _first_nonascending(axis: np.ndarray) -> int | None:
    bad = np.nonzero(np.diff(axis) <= 0)[0]
    return int(bad[0]) if bad.size else None


def _check_counts(counts: np.ndarray, what: str):
    if not np.all(np.isfinite(counts)):
        idx = int(np.nonzero(~np.isfinite(counts))[0][0])
        raise DataError(f"{what} contains non-finite value at row {idx}", index=idx)
    if np.any(counts < 0):
        idx = int(np.nonzero(counts < 0)[0][0])
        raise DataError(f"{what} contains negative value at row {idx}", index=idx)


@dataclass(frozen=True)
class Spectrum:
    """Counts versus strictly ascending wavelength (nm)."""

    wavelength_nm: np.ndarray
    counts: np.ndarray
    timestamp: float | None = None
    temperature_k: float | None = None

    def __post_init__(self):
        wl = _freeze(self, "wavelength_nm", self.wavelength_nm)
        counts = _freeze(self, "counts", self.counts)
        if wl.size != counts.size:
            raise ValidationError(
                f"wavelength_nm and counts lengths differ ({wl.size} != {counts.size})"
            )
        if wl.size < 2:
            raise ValidationError("spectrum needs at least two samples")
        if not np.all(np.isfinite(wl)):
            raise DataError("wavelength_nm contains non-finite value")
        bad = _first_nonascending(wl)
        if bad is not None:
            raise SchemaError(
                f"wavelength_nm not strictly ascending at row {bad}", row_index=bad
            )
        _check_counts(counts, "counts")

    def __len__(self):
        return self.wavelength_nm.size


@dataclass(frozen=True)
class ScanTrace:
    """One piezo ramp: transmitted signal versus scan axis (volts or time)."""

    axis: np.ndarray
    signal: np.ndarray
    sweep_direction: str = "up"

    def __post_init__(self):
        axis = _freeze(self, "axis", self.axis)
        signal = _freeze(self, "signal", self.signal)
        if axis.size != signal.size:
            raise ValidationError(
                f"axis and signal lengths differ ({axis.size} != {signal.size})"
            )
        if axis.size < 2:
            raise ValidationError("scan trace needs at least two samples")
        if self.sweep_direction not in ("up", "down"):
            raise ValidationError(
                f"sweep_direction must be 'up' or 'down', got {self.sweep_direction!r}"
            )
        if not np.all(np.isfinite(axis)) or not np.all(np.isfinite(signal)):
            raise DataError("scan trace contains non-finite values")
        diffs = np.diff(axis)
        monotone = np.all(diffs > 0) if self.sweep_direction == "up" else np.all(diffs < 0)
        if not monotone:
            raise SchemaError(
                f"axis not strictly monotone for a {self.sweep_direction!r} sweep"
            )

    def __len__(self):
        return self.axis.size


@dataclass(frozen=True)
class TimeHistogram:
    """Uniformly binned time-delay histogram with integer counts."""

    bin_centers_ns: np.ndarray
    counts: np.ndarray
    bin_width_ns: float = 0.0

    def __post_init__(self):
        centers = _freeze(self, "bin_centers_ns", self.bin_centers_ns)
        counts = np.asarray(self.counts)
        if np.issubdtype(counts.dtype, np.floating):
            if not np.all(np.isfinite(counts)):
                idx = int(np.nonzero(~np.isfinite(counts))[0][0])
                raise DataError(f"counts non-finite at row {idx}", index=idx)
            if np.any(counts != np.round(counts)):
                idx = int(np.nonzero(counts != np.round(counts))[0][0])
                raise DataError(f"counts must be integers (row {idx})", index=idx)
        counts = _freeze(self, "counts", counts, dtype=np.int64)
        if centers.size != counts.size:
            raise ValidationError(
                f"bin_centers_ns and counts lengths differ ({centers.size} != {counts.size})"
            )
        if centers.size < 2:
            raise ValidationError("histogram needs at least two bins")
        if np.any(counts < 0):
            idx = int(np.nonzero(counts < 0)[0][0])
            raise DataError(f"negative counts at row {idx}", index=idx)
        bad = _first_nonascending(centers)
        if bad is not None:
            raise SchemaError(f"bin_centers_ns not ascending at row {bad}", row_index=bad)
        widths = np.diff(centers)
        width = float(np.median(widths))
        if np.any(np.abs(widths - width) > 1e-9 * width):
            raise ValidationError("bin width not uniform within 1e-9 relative")
        declared = float(self.bin_width_ns) if self.bin_width_ns else width
        if abs(declared - width) > 1e-9 * width:
            raise ValidationError(
                f"declared bin_width_ns {declared} inconsistent with grid ({width})"
            )
        object.__setattr__(self, "bin_width_ns", width)

    def __len__(self):
        return self.bin_centers_ns.size


@dataclass(frozen=True)
class SpectralMap:
    """Time-ordered stack of spectra sharing one wavelength grid."""

    frames: tuple[Spectrum, ...]
    frame_period_s: float = 1.0

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValidationError("spectral map needs at least one frame")
        grid = frames[0].wavelength_nm
        for i, frame in enumerate(frames[1:], start=1):
            if frame.wavelength_nm.size != grid.size or not np.array_equal(
                frame.wavelength_nm, grid
            ):
                raise ValidationError(f"frame {i} does not share the wavelength grid")
        if not self.frame_period_s > 0:
            raise ValidationError("frame_period_s must be positive")
        object.__setattr__(self, "frames", frames)

    @property
    def wavelength_nm(self) -> np.ndarray:
        return self.frames[0].wavelength_nm

    def counts_matrix(self) -> np.ndarray:
        """Counts as a (n_frames, n_wavelengths) array."""
        return np.stack([f.counts for f in self.frames])

    def times_s(self) -> np.ndarray:
        return np.arange(len(self.frames)) * self.frame_period_s

    def __len__(self):
        return len(self.frames)


@dataclass(frozen=True)
class TemperatureLog:
    """Sensor temperature versus time, used by the thermal-drift pipeline."""

    time_s: np.ndarray
    temperature_k: np.ndarray

    def __post_init__(self):
        t = _freeze(self, "time_s", self.time_s)
        temp = _freeze(self, "temperature_k", self.temperature_k)
        if t.size != temp.size:
            raise ValidationError("time_s and temperature_k lengths differ")
        bad = _first_nonascending(t)
        if bad is not None:
            raise SchemaError(f"time_s not strictly ascending at row {bad}", row_index=bad)
        if not np.all(np.isfinite(temp)):
            raise DataError("temperature_k contains non-finite value")

    def __len__(self):
        return self.time_s.size


# ---------------------------------------------------------------------------
# CSV load/save
# ---------------------------------------------------------------------------

_SCHEMA_HEADERS = {
    "spectrum": "wavelength_nm,counts",
    "scan": "axis,signal,direction",
    "histogram": "t_ns,counts",
    "temperature_log": "time_s,temperature_k",
}


def _read_header(path: Path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.readline().strip()


def load_csv(path, schema_id: str):
    """Load and validate one CSV file.

    Parameters
    ----------
    path : str or Path
    schema_id : str
        One of ``spectrum``, ``scan``, ``histogram``, ``spectral_map``,
        ``temperature_log``.

    Returns
    -------
    Spectrum, list[ScanTrace], TimeHistogram, SpectralMap or TemperatureLog
        ``scan`` files may contain several ramps (runs of constant
        direction); each ramp becomes one ScanTrace.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"input file does not exist: {path}")
    header = _read_header(path)

    if schema_id == "spectral_map":
        return _load_spectral_map(path, header)

    expected = _SCHEMA_HEADERS.get(schema_id)
    if expected is None:
        raise ValidationError(f"unknown schema id {schema_id!r}")
    if header != expected:
        raise SchemaError(
            f"header mismatch for schema {schema_id!r}: expected {expected!r}, got {header!r}"
        )

    if schema_id == "scan":
        return _load_scan(path)

    data = _loadtxt(path)
    if data.shape[1] != 2:
        raise SchemaError(f"expected 2 columns, found {data.shape[1]}")
    if schema_id == "spectrum":
        return Spectrum(wavelength_nm=data[:, 0], counts=data[:, 1])
    if schema_id == "histogram":
        return TimeHistogram(bin_centers_ns=data[:, 0], counts=data[:, 1])
    return TemperatureLog(time_s=data[:, 0], temperature_k=data[:, 1])


def _loadtxt(path: Path) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise SchemaError(f"malformed numeric data in {path.name}: {exc}") from exc


def _load_scan(path: Path) -> list[ScanTrace]:
    axis, signal, direction = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        next(fh)
        for lineno, line in enumerate(fh):
            parts = line.strip().split(",")
            if len(parts) != 3:
                raise SchemaError(f"expected 3 columns at row {lineno}", row_index=lineno)
            try:
                axis.append(float(parts[0]))
                signal.append(float(parts[1]))
            except ValueError:
                raise SchemaError(
                    f"malformed numeric value at row {lineno}", row_index=lineno
                ) from None
            direction.append(parts[2])
    traces = []
    start = 0
    for i in range(1, len(axis) + 1):
        if i == len(axis) or direction[i] != direction[start]:
            traces.append(
                ScanTrace(
                    axis=axis[start:i],
                    signal=signal[start:i],
                    sweep_direction=direction[start],
                )
            )
            start = i
    return traces


def _load_spectral_map(path: Path, header: str) -> SpectralMap:
    columns = header.split(",")
    if columns[0] != "wavelength_nm" or len(columns) < 2:
        raise SchemaError(
            f"spectral_map header must start with 'wavelength_nm,frame_0000', got {header!r}"
        )
    data = _loadtxt(path)
    if data.shape[1] != len(columns):
        raise SchemaError(f"column count mismatch: header {len(columns)}, data {data.shape[1]}")
    wavelengths = data[:, 0]
    frames = [Spectrum(wavelength_nm=wavelengths, counts=data[:, j]) for j in range(1, data.shape[1])]
    return SpectralMap(frames=tuple(frames))


def save_csv(record, path) -> Path:
    """Write a record in its CSV schema; inverse of :func:`load_csv`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(record, Spectrum):
        _write_columns(path, "wavelength_nm,counts", [record.wavelength_nm, record.counts])
    elif isinstance(record, TimeHistogram):
        _write_columns(path, "t_ns,counts", [record.bin_centers_ns, record.counts])
    elif isinstance(record, TemperatureLog):
        _write_columns(path, "time_s,temperature_k", [record.time_s, record.temperature_k])
    elif isinstance(record, ScanTrace):
        save_csv([record], path)
    elif isinstance(record, SpectralMap):
        names = [f"frame_{i:04d}" for i in range(len(record))]
        cols = [record.wavelength_nm] + [f.counts for f in record.frames]
        _write_columns(path, ",".join(["wavelength_nm"] + names), cols)
    elif isinstance(record, Sequence) and record and isinstance(record[0], ScanTrace):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("axis,signal,direction\n")
            for trace in record:
                for a, s in zip(trace.axis, trace.signal):
                    fh.write(f"{_fmt(a)},{_fmt(s)},{trace.sweep_direction}\n")
    else:
        raise ValidationError(f"cannot serialize record of type {type(record).__name__}")
    return path


def _fmt(x) -> str:
    # str() is the shortest representation that round-trips exactly
    if float(x) == int(x) and abs(float(x)) < 1e16:
        return str(int(x))
    return repr(float(x))


def _write_columns(path: Path, header: str, columns):
    arrays = [np.asarray(c) for c in columns]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in zip(*arrays):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# Canonical JSON reports
# ---------------------------------------------------------------------------


def canonical_json(obj) -> str:
    """Render ``obj`` as canonical JSON: sorted keys, floats via ``%.10g``."""
    out = []
    _render(obj, out)
    return "".join(out)


def _render(obj, out: list):
    if isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise ValidationError("report keys must be strings")
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _render(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _render(item, out)
        out.append("]")
    elif isinstance(obj, np.ndarray):
        _render(obj.tolist(), out)
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        val = float(obj)
        if not math.isfinite(val):
            raise ValidationError("reports must not contain NaN or infinity")
        out.append("%.10g" % val)
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise ValidationError(f"cannot serialize {type(obj).__name__} into a report")


def make_report(steps, inputs=()) -> dict:
    """Assemble the shared report envelope.

    Each step is a dict ``{"name", "params", "outputs"}``; ``inputs`` carries
    content digests of everything the pipeline consumed.
    """
    from . import __version__

    return {
        "tool_version": __version__,
        "inputs": list(inputs),
        "steps": list(steps),
    }


def export_report(report: dict, path=None) -> str:
    """Serialize a report canonically; optionally write it to ``path``.

    Identical report dicts always serialize to identical bytes.
    """
    if not isinstance(report, dict):
        raise ValidationError("report must be a dict")
    text = canonical_json(report) + "\n"
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text


def digest_file(path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def digest_arrays(*arrays) -> str:
    """SHA-256 hex digest of arrays (shape-tagged, float64 contiguous bytes)."""
    h = hashlib.sha256()
    for arr in arrays:
        a = np.ascontiguousarray(arr, dtype=np.float64)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()
