"""Loading subject traces and profiles, context filtering and resampling.

A trace is stored column-wise: every channel is a numpy array of the same
length. Sign conventions are fixed at ingestion: ``d_CL``, ``a_y`` and
``kappa`` are all left-positive.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping, NamedTuple, Optional

import numpy as np
import pandas as pd

from .errors import (
    ConfigError,
    DegenerateTrace,
    EmptyAfterFilter,
    EmptyTrace,
    MissingColumn,
    ParseError,
)

logger = logging.getLogger(__name__)

MANDATORY_CHANNELS = ("t", "v_x", "a_x", "a_y", "d_CL", "kappa")
FLAG_CHANNELS = ("lane_change", "oncoming")
ROAD_TYPES = ("city", "highway", "rural", "federal")
GENDERS = ("female", "male", "other")

DEFAULT_RESAMPLE_HZ = 50.0
DEFAULT_GAP_SPLIT_S = 0.5
DEFAULT_MAX_LANE_WIDTH = 5.0

# multiplicative factors to SI
UNIT_FACTORS = {
    "s": 1.0, "ms": 1e-3,
    "m": 1.0, "cm": 1e-2, "mm": 1e-3, "km": 1e3,
    "m/s": 1.0, "km/h": 1 / 3.6, "kph": 1 / 3.6, "mph": 0.44704,
    "m/s^2": 1.0, "m/s2": 1.0, "g": 9.80665,
    "1/m": 1.0, "1/km": 1e-3,
}

_TRUE = {"1", "true", "t", "yes", "y", "1.0"}
_FALSE = {"0", "false", "f", "no", "n", "", "0.0"}


@dataclass(frozen=True)
class TraceSchema:
    """Maps logical channels to file columns.

    ``columns`` must map every mandatory channel (``t``, ``v_x``, ``a_x``,
    ``a_y``, ``d_CL``, ``kappa``) to a column name. ``d_CL`` may instead be
    derived from ``d_left``/``d_right`` (unsigned distances to the left and
    right lane boundaries). Optional channels: ``road_type``, ``lane_change``,
    ``oncoming``, ``street_id`` and ``s`` (route arc length).
    """

    columns: Mapping[str, str]
    units: Mapping[str, str] = field(default_factory=dict)
    sample_rate_hz: Optional[float] = None
    max_lane_width: float = DEFAULT_MAX_LANE_WIDTH
    delimiter: Optional[str] = None
    road_type_map: Mapping[str, str] = field(default_factory=dict)
    default_road_type: str = "rural"
    # sign flips applied after unit conversion, e.g. for right-positive sources
    negate: tuple = ()

    @classmethod
    def from_dict(cls, data):
        if "columns" not in data:
            raise ConfigError("schema needs a 'columns' mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown schema keys: {sorted(unknown)}")
        kwargs = dict(data)
        kwargs["negate"] = tuple(kwargs.get("negate", ()))
        for channel, unit in kwargs.get("units", {}).items():
            if unit not in UNIT_FACTORS:
                raise ConfigError(f"unknown unit {unit!r} for channel {channel!r}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"schema file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"schema file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        return {
            "columns": dict(self.columns),
            "units": dict(self.units),
            "sample_rate_hz": self.sample_rate_hz,
            "max_lane_width": self.max_lane_width,
            "delimiter": self.delimiter,
            "road_type_map": dict(self.road_type_map),
            "default_road_type": self.default_road_type,
            "negate": list(self.negate),
        }


class SampleRecord(NamedTuple):
    t: float
    v_x: float
    a_x: float
    a_y: float
    d_CL: float
    kappa: float
    road_type: str
    lane_change: bool
    oncoming: bool
    street_id: str


@dataclass(frozen=True)
class Gap:
    """A run of samples removed by the context filter.

    ``index`` is the position in the filtered trace where samples resume.
    ``t_start``/``s_start`` belong to the last kept sample before the run
    (or the first removed one at the trace start), ``t_end``/``s_end`` to the
    first kept sample after it.
    """

    index: int
    t_start: float
    t_end: float
    s_start: float
    s_end: float
    n_removed: int
    splits: bool

    def overlaps(self, s_lo, s_hi):
        return self.s_start < s_hi and self.s_end > s_lo


@dataclass(frozen=True, eq=False)
class SubjectTrace:
    """Column-wise time series of one subject's drive."""

    subject_id: str
    t: np.ndarray
    v_x: np.ndarray
    a_x: np.ndarray
    a_y: np.ndarray
    d_CL: np.ndarray
    kappa: np.ndarray
    s: np.ndarray
    road_type: np.ndarray
    lane_change: np.ndarray
    oncoming: np.ndarray
    street_id: np.ndarray
    valid: np.ndarray
    segment: np.ndarray
    sample_rate_hz: float
    gaps: tuple = ()
    rejected: tuple = ()

    ARRAY_FIELDS = (
        "t", "v_x", "a_x", "a_y", "d_CL", "kappa", "s", "road_type",
        "lane_change", "oncoming", "street_id", "valid", "segment",
    )

    def __post_init__(self):
        if len(self.t) == 0:
            raise EmptyTrace(f"trace {self.subject_id!r} is empty")

    def __len__(self):
        return len(self.t)

    def record(self, i):
        return SampleRecord(
            float(self.t[i]), float(self.v_x[i]), float(self.a_x[i]), float(self.a_y[i]),
            float(self.d_CL[i]), float(self.kappa[i]), str(self.road_type[i]),
            bool(self.lane_change[i]), bool(self.oncoming[i]), str(self.street_id[i]),
        )

    def records(self):
        return [self.record(i) for i in range(len(self))]

    def take(self, index):
        """Subset every channel with ``index`` (slice, mask or integer array)."""
        return replace(self, **{name: getattr(self, name)[index] for name in self.ARRAY_FIELDS})

    def segment_slices(self):
        """Contiguous slices of samples sharing one segment id."""
        seg = self.segment
        cuts = np.flatnonzero(np.diff(seg) != 0) + 1
        bounds = np.concatenate(([0], cuts, [len(seg)]))
        return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

    def to_frame(self):
        return pd.DataFrame({name: getattr(self, name) for name in self.ARRAY_FIELDS})

    @classmethod
    def from_frame(cls, frame, subject_id, sample_rate_hz, gaps=()):
        arrays = {}
        for name in cls.ARRAY_FIELDS:
            col = frame[name].to_numpy()
            if name in ("lane_change", "oncoming", "valid"):
                col = col.astype(bool)
            elif name == "segment":
                col = col.astype(np.int64)
            elif name in ("road_type", "street_id"):
                col = col.astype(str)
            else:
                col = col.astype(float)
            arrays[name] = col
        return cls(subject_id=subject_id, sample_rate_hz=sample_rate_hz, gaps=tuple(gaps), **arrays)


@dataclass(frozen=True)
class SubjectProfile:
    subject_id: str
    age_years: int
    gender: str
    license_years: Optional[float] = None
    annual_mileage_band: Optional[str] = None

    @property
    def age_group(self):
        return age_group(self.age_years)


def age_group(age_years):
    if age_years < 25:
        return "young"
    if age_years <= 54:
        return "middle"
    return "old"


def _detect_delimiter(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
    return "\t" if "\t" in header else ","


def _parse_bool(value):
    v = value.strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    return None


def load_trace(path, schema, subject_id=None, strict=False):
    """Read one subject's delimited text file into a :class:`SubjectTrace`.

    Rows whose numeric fields fail to parse (or that break time
    monotonicity, or carry negative speed) are rejected; their
    ``(row, column)`` pairs are kept in ``trace.rejected``. Row numbers are
    0-based data rows (header excluded). With ``strict=True`` the first
    rejected row raises :class:`ParseError` instead.
    """
    path = Path(path)
    sep = schema.delimiter or _detect_delimiter(path)
    raw = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False)
    raw.columns = [c.strip() for c in raw.columns]
    cols = dict(schema.columns)

    derive_dcl = "d_CL" not in cols and {"d_left", "d_right"} <= set(cols)
    numeric = [c for c in MANDATORY_CHANNELS if not (c == "d_CL" and derive_dcl)]
    if derive_dcl:
        numeric += ["d_left", "d_right"]
    if "s" in cols:
        numeric.append("s")
    for channel in numeric:
        if channel not in cols or cols[channel] not in raw.columns:
            raise MissingColumn("d_CL" if channel in ("d_left", "d_right") else channel)
    for channel in ("road_type", *FLAG_CHANNELS, "street_id"):
        if channel in cols and cols[channel] not in raw.columns:
            raise MissingColumn(channel)

    n = len(raw)
    bad = np.zeros(n, dtype=bool)
    rejected = {}

    def reject(mask, column):
        for row in np.flatnonzero(mask & ~bad):
            rejected[int(row)] = column
        bad[mask] = True

    values = {}
    for channel in numeric:
        col = pd.to_numeric(raw[cols[channel]].str.strip(), errors="coerce").to_numpy(dtype=float)
        reject(~np.isfinite(col), cols[channel])
        factor = UNIT_FACTORS[schema.units.get(channel, _default_unit(channel))]
        col = col * factor
        if channel in schema.negate:
            col = -col
        values[channel] = col

    flags = {}
    for channel in FLAG_CHANNELS:
        if channel in cols:
            parsed = [_parse_bool(v) for v in raw[cols[channel]]]
            reject(np.array([p is None for p in parsed], dtype=bool), cols[channel])
            flags[channel] = np.array([bool(p) for p in parsed], dtype=bool)
        else:
            flags[channel] = np.zeros(n, dtype=bool)

    if "road_type" in cols:
        labels = raw[cols["road_type"]].str.strip().str.lower().to_numpy(dtype=str)
        mapping = {k.lower(): v for k, v in schema.road_type_map.items()}
        road = np.array([mapping.get(v, v) for v in labels], dtype=object).astype(str)
        reject(~np.isin(road, ROAD_TYPES), cols["road_type"])
    else:
        road = np.full(n, schema.default_road_type)
    street = raw[cols["street_id"]].to_numpy(dtype=str) if "street_id" in cols else np.full(n, "")

    reject(values["v_x"] < 0, cols["v_x"])
    # time must increase strictly over the rows that survive
    t = values["t"]
    last = -np.inf
    for i in range(n):
        if bad[i]:
            continue
        if not t[i] > last:
            reject(np.arange(n) == i, cols["t"])
            continue
        last = t[i]

    if rejected and strict:
        row = min(rejected)
        column = rejected[row]
        raise ParseError(row, column, raw.iloc[row][column])
    if rejected:
        logger.warning("%s: rejected %d rows", path.name, len(rejected))

    keep = ~bad
    if not keep.any():
        raise EmptyTrace(f"{path}: no valid rows")
    if derive_dcl:
        d_cl = 0.5 * (values["d_right"] - values["d_left"])
    else:
        d_cl = values["d_CL"]

    t = t[keep]
    v_x = values["v_x"][keep]
    if "s" in values:
        s = values["s"][keep]
    else:
        s = np.concatenate(([0.0], np.cumsum(0.5 * (v_x[1:] + v_x[:-1]) * np.diff(t))))
    d_cl = d_cl[keep]
    rate = schema.sample_rate_hz
    if rate is None:
        rate = 1.0 / float(np.median(np.diff(t))) if len(t) > 1 else DEFAULT_RESAMPLE_HZ
    return SubjectTrace(
        subject_id=str(subject_id if subject_id is not None else path.stem),
        t=t,
        v_x=v_x,
        a_x=values["a_x"][keep],
        a_y=values["a_y"][keep],
        d_CL=d_cl,
        kappa=values["kappa"][keep],
        s=s,
        road_type=road[keep],
        lane_change=flags["lane_change"][keep],
        oncoming=flags["oncoming"][keep],
        street_id=street[keep],
        valid=np.abs(d_cl) <= schema.max_lane_width / 2,
        segment=np.zeros(int(keep.sum()), dtype=np.int64),
        sample_rate_hz=float(rate),
        rejected=tuple(sorted(rejected.items())),
    )


def _default_unit(channel):
    return {"t": "s", "v_x": "m/s", "a_x": "m/s^2", "a_y": "m/s^2", "kappa": "1/m"}.get(channel, "m")


def _flagged_runs(mask):
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.diff(padded)
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1))


def filter_context(trace, gap_split_s=DEFAULT_GAP_SPLIT_S):
    """Drop samples flagged as lane change or oncoming traffic.

    Every contiguous removed run leaves a :class:`Gap` marker. Runs whose
    removed interval exceeds ``gap_split_s`` also start a new segment, so
    differentiation and resampling never bridge them.
    """
    flagged = trace.lane_change | trace.oncoming
    if not flagged.any():
        return trace
    if flagged.all():
        raise EmptyAfterFilter(f"trace {trace.subject_id!r}: every sample is flagged")

    n = len(trace)
    kept_before = np.cumsum(~flagged) - (~flagged)  # kept samples strictly before i
    new_gaps = []
    split_at = np.zeros(n, dtype=bool)
    for i0, i1 in _flagged_runs(flagged):
        lo = i0 - 1 if i0 > 0 else i0
        hi = i1 + 1 if i1 + 1 < n else i1
        interior = i0 > 0 and i1 + 1 < n
        splits = bool(interior and trace.t[hi] - trace.t[lo] > gap_split_s)
        if splits:
            split_at[hi] = True
        new_gaps.append(Gap(
            index=int(kept_before[i0]),
            t_start=float(trace.t[lo]), t_end=float(trace.t[hi]),
            s_start=float(trace.s[lo]), s_end=float(trace.s[hi]),
            n_removed=int(i1 - i0 + 1), splits=splits,
        ))

    old_gaps = [replace(g, index=int(kept_before[g.index]) if g.index < n else int((~flagged).sum()))
                for g in trace.gaps]
    keep = ~flagged
    seg = trace.segment[keep]
    boundary = np.concatenate(([False], np.diff(seg) != 0)) | split_at[keep]
    out = trace.take(keep)
    gaps = tuple(sorted(old_gaps + new_gaps, key=lambda g: (g.t_start, g.index)))
    return replace(out, segment=np.cumsum(boundary).astype(np.int64), gaps=gaps)


def resample_uniform(trace, rate_hz=DEFAULT_RESAMPLE_HZ):
    """Linearly interpolate every segment onto a uniform time grid.

    Boolean flags become the logical OR of the bracketing source samples
    (the source sample itself on an exact hit); ``valid`` becomes their
    AND. Labels take the value of the left bracketing sample. Segments are
    resampled independently, so split gaps are never interpolated across.
    """
    if len(trace) < 2:
        raise DegenerateTrace(f"trace {trace.subject_id!r} has fewer than 2 samples")
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    dt = 1.0 / rate_hz
    parts = {name: [] for name in SubjectTrace.ARRAY_FIELDS}
    for seg_id, sl in enumerate(trace.segment_slices()):
        ts = trace.t[sl]
        m = int(np.floor((ts[-1] - ts[0]) * rate_hz + 1e-6)) + 1
        grid = ts[0] + np.arange(m) * dt
        left = np.clip(np.searchsorted(ts, grid, side="right") - 1, 0, len(ts) - 1)
        right = np.minimum(left + 1, len(ts) - 1)
        exact = np.abs(ts[left] - grid) <= 1e-9
        right = np.where(exact, left, right)
        for name in ("v_x", "a_x", "a_y", "d_CL", "kappa", "s"):
            vals = getattr(trace, name)[sl]
            parts[name].append(vals[left] if len(ts) == 1 else np.interp(grid, ts, vals))
        for name in ("lane_change", "oncoming"):
            vals = getattr(trace, name)[sl]
            parts[name].append(vals[left] | vals[right])
        valid = trace.valid[sl]
        parts["valid"].append(valid[left] & valid[right])
        parts["road_type"].append(trace.road_type[sl][left])
        parts["street_id"].append(trace.street_id[sl][left])
        parts["t"].append(grid)
        parts["segment"].append(np.full(m, seg_id, dtype=np.int64))
    arrays = {name: np.concatenate(chunks) for name, chunks in parts.items()}
    gaps = tuple(
        replace(g, index=int(np.searchsorted(arrays["t"], g.t_end - 1e-9))) for g in trace.gaps
    )
    return replace(trace, sample_rate_hz=float(rate_hz), gaps=gaps, **arrays)


def load_profiles(path, columns=None):
    """Read the subject profile table (``subject_id``, ``age``, ``gender`` ...)."""
    path = Path(path)
    cols = {"subject_id": "subject_id", "age": "age", "gender": "gender",
            "license_years": "license_years", "annual_mileage_band": "annual_mileage_band"}
    cols.update(columns or {})
    frame = pd.read_csv(path, sep=_detect_delimiter(path), dtype=str, keep_default_na=False)
    for key in ("subject_id", "age", "gender"):
        if cols[key] not in frame.columns:
            raise MissingColumn(key)
    profiles = []
    for row, rec in frame.iterrows():
        try:
            age = int(float(rec[cols["age"]]))
        except ValueError:
            raise ParseError(row, cols["age"], rec[cols["age"]]) from None
        lic = rec.get(cols["license_years"], "")
        profiles.append(SubjectProfile(
            subject_id=str(rec[cols["subject_id"]]).strip(),
            age_years=age,
            gender=_parse_gender(rec[cols["gender"]]),
            license_years=float(lic) if lic not in ("", None) else None,
            annual_mileage_band=rec.get(cols["annual_mileage_band"]) or None,
        ))
    return profiles


def _parse_gender(value):
    v = str(value).strip().lower()
    if v in ("f", "female", "w", "woman", "weiblich"):
        return "female"
    if v in ("m", "male", "man", "männlich", "maennlich"):
        return "male"
    return "other"


def profiles_frame(profiles):
    return pd.DataFrame(
        {
            "subject_id": [p.subject_id for p in profiles],
            "age": [p.age_years for p in profiles],
            "gender": [p.gender for p in profiles],
            "age_group": [p.age_group for p in profiles],
        }
    ).set_index("subject_id")
