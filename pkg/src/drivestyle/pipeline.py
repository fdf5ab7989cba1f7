"""Run configuration and the pipeline steps behind the command-line tool.

Each step reads its inputs (raw files or upstream artifacts), writes its
tables into ``<out>/<step>/`` and finishes with a ``manifest.json`` listing
parameters, library versions and SHA-256 digests of inputs and outputs.
Downstream steps only accept upstream artifacts whose manifest digests
still match.
"""

from __future__ import annotations

import glob
import json
import logging
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .correlation import correlate_all, covariate_matrix, stars, summary_counts
from .curves import (
    CenterBand,
    compute_center_band,
    curves_frame,
    curves_from_frame,
    extract_window,
    select_curves,
)
from .envelope import (
    ENVELOPE_STATS,
    EnvelopeConfig,
    center_angles,
    loadings_frame,
    parallel_analysis,
    pca_varimax,
    polar_bin,
)
from .errors import ConfigError, DataError, UpstreamMissing
from .ingest import (
    Gap,
    SubjectTrace,
    TraceSchema,
    filter_context,
    load_profiles,
    load_trace,
    profiles_frame,
    resample_uniform,
)
from .kinematics import STAT_NAMES, StatBlock, aggregate_subject, derive_channels, stat_block
from .mdsi import ItemBank, item_descriptives, load_responses, reliability, score_cohort
from .stationary import extract_stationary, fit_ccg, segments_frame
from .tables import markdown_table, read_table, verify_manifest, write_manifest, write_table
from .transient import CLASSES, class_distribution, cohort_class_table, intensity

logger = logging.getLogger(__name__)

STEPS = ("ingest", "curves", "indicators", "envelope", "ccg", "trajectories", "mdsi",
         "correlate", "report")

UPSTREAM = {
    "ingest": (),
    "curves": ("ingest",),
    "indicators": ("ingest", "curves"),
    "envelope": ("ingest",),
    "ccg": ("ingest", "curves"),
    "trajectories": ("ingest", "curves"),
    "mdsi": (),
    "correlate": ("indicators", "envelope", "ccg", "trajectories", "mdsi"),
    "report": ("ingest", "curves", "indicators", "envelope", "ccg", "trajectories", "mdsi",
               "correlate"),
}

DEFAULT_PARAMS = {
    "tau_kappa": 0.002,
    "merge_gap": 10.0,
    "min_curve_length": 20.0,
    "curve_road_types": ["rural"],
    "resample_hz": 50.0,
    "gap_split_s": 0.5,
    "delta_r": 10.0,
    "delta_s": 15.0,
    "half_window": 5,
    "v_min": 1.0,
    "kappa_rate_max": 0.0005,
    "min_duration": 1.0,
    "band_mode": "cohort",
    "band_half_width": None,
    "band_ddof": 0,
    "band_min_samples": 100,
    "envelope_road_types": ["rural"],
    "n_components": 2,
    "pa_replicates": 100,
}

CHANNELS = ("a_x", "a_y", "d_CL", "v_drift", "k_x", "k_y")
# lateral dynamics are summarized inner-positive; d_CL and v_drift keep the
# vehicle frame (left-positive)
CURVE_FRAME_CHANNELS = ("a_y", "k_y")
CHANNEL_UNITS = {"a_x": "m/s^2", "a_y": "m/s^2", "d_CL": "m", "v_drift": "%",
                 "k_x": "m/s^3", "k_y": "m/s^3"}
KPI_NAMES = {
    "a_x": "Longitudinal Acceleration",
    "a_y": "Lateral Acceleration",
    "d_CL": "Distance to Lane Center",
    "v_drift": "Relative Drift Velocity",
    "k_x": "Longitudinal Jerk",
    "k_y": "Lateral Jerk",
    "gg": "GG Envelope",
    "ccg": "Curve Cutting Gradient",
    "class_pct": "Trajectory Class Percentage",
    "intensity": "Trajectory Intensity",
}
TRACE_UNITS = {"t": "s", "v_x": "m/s", "a_x": "m/s^2", "a_y": "m/s^2", "d_CL": "m",
               "kappa": "1/m", "s": "m"}


@dataclass(frozen=True)
class RunConfig:
    config_path: Path
    schema: Path
    traces: tuple
    out: Path
    profiles: Path = None
    responses: Path = None
    item_bank: Path = None
    reference_subject: str = None
    seed: int = 0
    workers: int = 1
    agg: str = "both"
    plots: bool = False
    params: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path, out=None, seed=None, agg=None, plots=None, workers=None):
        """Read and validate a JSON run configuration.

        Relative paths resolve against ``dataset_root`` (itself relative to
        the config file). Every referenced file must exist.
        """
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        root = (path.parent / data.get("dataset_root", ".")).resolve()

        def resolve(key, required=False):
            value = data.get(key)
            if value is None:
                if required:
                    raise ConfigError(f"config lacks {key!r}")
                return None
            p = (root / value).resolve()
            if not p.is_file():
                raise ConfigError(f"{key} file not found: {p}")
            return p

        pattern = data.get("traces")
        if not pattern:
            raise ConfigError("config lacks 'traces'")
        traces = tuple(sorted(Path(p) for p in glob.glob(str(root / pattern))))
        if not traces:
            raise ConfigError(f"no trace files match {pattern!r} under {root}")
        params = dict(DEFAULT_PARAMS)
        unknown = set(data.get("params", {})) - set(DEFAULT_PARAMS)
        if unknown:
            raise ConfigError(f"unknown parameters: {sorted(unknown)}")
        params.update(data.get("params", {}))
        if params["band_mode"] not in ("cohort", "fixed"):
            raise ConfigError("band_mode must be 'cohort' or 'fixed'")
        if params["band_mode"] == "fixed" and params["band_half_width"] is None:
            raise ConfigError("band_mode 'fixed' needs band_half_width")
        try:
            EnvelopeConfig(params["delta_r"], params["delta_s"])
        except (ValueError, DataError) as exc:
            raise ConfigError(str(exc)) from exc
        agg = agg or data.get("agg", "both")
        if agg not in ("mean", "median", "both"):
            raise ConfigError("agg must be mean, median or both")
        out_dir = Path(out) if out else (path.parent / data.get("out", "out"))
        return cls(
            config_path=path.resolve(),
            schema=resolve("schema", required=True),
            traces=traces,
            out=out_dir.resolve(),
            profiles=resolve("profiles"),
            responses=resolve("responses"),
            item_bank=resolve("item_bank"),
            reference_subject=data.get("reference_subject"),
            seed=int(seed if seed is not None else data.get("seed", 0)),
            workers=int(workers if workers is not None else data.get("workers", 1)),
            agg=agg,
            plots=bool(plots if plots is not None else data.get("plots", False)),
            params=params,
        )

    @property
    def aggs(self):
        return ("mean", "median") if self.agg == "both" else (self.agg,)

    def step_dir(self, step):
        return self.out / step

    def manifest_parameters(self):
        return {
            "params": self.params,
            "seed": self.seed,
            "agg": self.agg,
            "reference_subject": self.reference_subject,
        }


def versions():
    import scipy

    return {"drivestyle": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "pandas": pd.__version__}


def _pmap(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _require(cfg, step):
    for up in UPSTREAM[step]:
        if verify_manifest(cfg.step_dir(up) / "manifest.json") is None:
            raise UpstreamMissing(f"step {step!r} needs a verified {up!r} run in {cfg.out}")


def _fresh_dir(cfg, step):
    d = cfg.step_dir(step)
    if d.exists():
        shutil.rmtree(d)
    d.mkdir(parents=True)
    return d


def _finish(cfg, step, outputs, inputs=()):
    d = cfg.step_dir(step)
    ups = [cfg.step_dir(u) / "manifest.json" for u in UPSTREAM[step]]
    write_manifest(d / "manifest.json", step, cfg.manifest_parameters(), list(inputs) + ups,
                   outputs, versions())
    return outputs


# ---------------------------------------------------------------- ingest

def _ingest_one(args):
    path, schema, params = args
    raw = load_trace(path, schema)
    filtered = filter_context(raw, params["gap_split_s"])
    processed = resample_uniform(filtered, params["resample_hz"])
    return raw.subject_id, processed, len(raw), len(raw.rejected)


def cmd_ingest(cfg):
    schema = TraceSchema.load(cfg.schema)
    d = _fresh_dir(cfg, "ingest")
    results = _pmap(_ingest_one, [(p, schema, cfg.params) for p in cfg.traces], cfg.workers)
    outputs, summary, gaps = [], [], []
    for sid, trace, n_raw, n_rejected in results:
        frame = trace.to_frame()
        outputs.append(write_table(frame, d / "traces" / f"{sid}.csv", TRACE_UNITS,
                                   float_format="%.12g"))
        summary.append({
            "subject_id": sid, "n_raw": n_raw, "n_rejected": n_rejected, "n_processed": len(trace),
            "n_gaps": len(trace.gaps), "n_segments": int(trace.segment.max()) + 1,
            "sample_rate_hz": trace.sample_rate_hz, "duration": float(trace.t[-1] - trace.t[0]),
            "distance": float(trace.s[-1] - trace.s[0]),
        })
        for g in trace.gaps:
            gaps.append({"subject_id": sid, **g.__dict__})
    ids = [r["subject_id"] for r in summary]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate subject ids among trace files")
    ref_id = cfg.reference_subject or ids[0]
    if ref_id not in ids:
        raise ConfigError(f"reference subject {ref_id!r} has no trace")
    ref_path = cfg.traces[ids.index(ref_id)]
    ref = resample_uniform(load_trace(ref_path, schema), cfg.params["resample_hz"])
    route = pd.DataFrame({"s": ref.s, "kappa": ref.kappa, "road_type": ref.road_type})
    outputs.append(write_table(route, d / "route_profile.csv", TRACE_UNITS, float_format="%.12g"))
    outputs.append(write_table(pd.DataFrame(summary), d / "summary.csv",
                               {"sample_rate_hz": "Hz", "duration": "s", "distance": "m"}))
    gap_cols = ["subject_id", "index", "t_start", "t_end", "s_start", "s_end", "n_removed", "splits"]
    outputs.append(write_table(pd.DataFrame(gaps, columns=gap_cols), d / "gaps.csv",
                               {"t_start": "s", "t_end": "s", "s_start": "m", "s_end": "m"},
                               float_format="%.12g"))
    return _finish(cfg, "ingest", outputs, inputs=[cfg.schema, *cfg.traces])


def load_processed(cfg):
    d = cfg.step_dir("ingest")
    summary = read_table(d / "summary.csv")
    gaps = read_table(d / "gaps.csv")
    traces = []
    for rec in summary.itertuples(index=False):
        sid = str(rec.subject_id)
        frame = read_table(d / "traces" / f"{sid}.csv",
                           str_columns=("road_type", "street_id"))
        g = gaps[gaps["subject_id"] == sid]
        gap_objs = tuple(
            Gap(int(r["index"]), float(r["t_start"]), float(r["t_end"]), float(r["s_start"]),
                float(r["s_end"]), int(r["n_removed"]), bool(r["splits"]))
            for r in g.to_dict("records")
        )
        traces.append(SubjectTrace.from_frame(frame, sid, float(rec.sample_rate_hz), gap_objs))
    return traces


def load_profiles_frame(cfg):
    if cfg.profiles is None:
        return None
    return profiles_frame(load_profiles(cfg.profiles))


# ---------------------------------------------------------------- curves

def cmd_curves(cfg):
    _require(cfg, "curves")
    p = cfg.params
    route = read_table(cfg.step_dir("ingest") / "route_profile.csv", str_columns=("road_type",))
    kappa = route["kappa"].to_numpy(dtype=float).copy()
    if p["curve_road_types"] is not None:
        kappa[~route["road_type"].astype(str).isin(p["curve_road_types"]).to_numpy()] = 0.0
    curves = select_curves(route["s"].to_numpy(dtype=float), kappa, p["tau_kappa"],
                           p["merge_gap"], p["min_curve_length"])
    traces = load_processed(cfg)
    if p["band_mode"] == "fixed":
        band = CenterBand(float(p["band_half_width"]), {})
    else:
        band = compute_center_band(traces, p["tau_kappa"], p["curve_road_types"],
                                   ddof=p["band_ddof"], min_samples=p["band_min_samples"])
    d = _fresh_dir(cfg, "curves")
    outputs = [
        write_table(curves_frame(curves), d / "curves.csv",
                    {"start_s": "m", "end_s": "m", "peak_kappa": "1/m"}),
        write_table(pd.DataFrame({"subject_id": list(band.per_subject_sd),
                                  "straight_sd": list(band.per_subject_sd.values())}),
                    d / "center_band_subjects.csv", {"straight_sd": "m"}),
        write_table(pd.DataFrame([{"half_width": band.half_width, "mode": p["band_mode"],
                                   "n_subjects": len(band.per_subject_sd),
                                   "n_curves": len(curves), "merge_gap": p["merge_gap"],
                                   "tau_kappa": p["tau_kappa"]}]),
                    d / "center_band.csv", {"half_width": "m", "merge_gap": "m", "tau_kappa": "1/m"}),
    ]
    return _finish(cfg, "curves", outputs)


def load_curves(cfg):
    return curves_from_frame(read_table(cfg.step_dir("curves") / "curves.csv"))


def load_band(cfg):
    return float(read_table(cfg.step_dir("curves") / "center_band.csv")["half_width"].iloc[0])


def _windows(trace, curves):
    windows, status = [], []
    for curve in curves:
        try:
            w = extract_window(trace, curve)
            windows.append(w)
            status.append({"subject_id": trace.subject_id, "curve_id": curve.curve_id,
                           "status": "ok", "n_samples": len(w), "arc_length": w.arc_length})
        except DataError as exc:
            status.append({"subject_id": trace.subject_id, "curve_id": curve.curve_id,
                           "status": type(exc).__name__, "n_samples": 0, "arc_length": np.nan})
    return windows, status


# ---------------------------------------------------------------- indicators

def _indicator_worker(args):
    trace, curves, p = args
    derived = derive_channels(trace, p["half_window"], p["v_min"])
    channels = {
        "a_x": trace.a_x, "a_y": trace.a_y,
        "d_CL": np.where(trace.valid, trace.d_CL, np.nan), **derived,
    }
    windows, status = _windows(trace, curves)
    rows = []
    for w in windows:
        for ch in CHANNELS:
            series = channels[ch][w.index]
            if ch in CURVE_FRAME_CHANNELS:
                series = w.sign * series
            try:
                block = stat_block(series)
            except DataError:
                continue
            rows.append({"subject_id": trace.subject_id, "curve_id": w.curve_id, "channel": ch,
                         **block.as_dict()})
    return trace.subject_id, rows, status


def cmd_indicators(cfg):
    _require(cfg, "indicators")
    traces = load_processed(cfg)
    curves = load_curves(cfg)
    results = _pmap(_indicator_worker, [(t, curves, cfg.params) for t in traces], cfg.workers)
    d = _fresh_dir(cfg, "indicators")
    per_curve, status, wide = [], [], []
    for sid, rows, st in results:
        per_curve += rows
        status += st
        rec = {"subject_id": sid}
        frame = pd.DataFrame(rows)
        for ch in CHANNELS:
            sub = frame[frame["channel"] == ch] if len(frame) else frame
            for agg in cfg.aggs:
                if len(sub):
                    blocks = [StatBlock(*r) for r in sub[list(STAT_NAMES)].itertuples(index=False)]
                    agg_block = aggregate_subject(blocks, agg).as_dict()
                else:
                    agg_block = {k: np.nan for k in STAT_NAMES}
                for stat in STAT_NAMES:
                    rec[f"{ch}.{stat}.{agg}"] = agg_block[stat]
        wide.append(rec)
    cols = ["subject_id", "curve_id", "channel", *STAT_NAMES]
    wide_frame = pd.DataFrame(wide)
    units = {c: CHANNEL_UNITS[c.split(".")[0]] for c in wide_frame.columns if "." in c}
    outputs = [
        write_table(pd.DataFrame(per_curve, columns=cols), d / "curve_stats.csv",
                    {s: "channel unit" for s in STAT_NAMES}),
        write_table(pd.DataFrame(status), d / "windows.csv", {"arc_length": "m"}),
        write_table(wide_frame, d / "indicators_basic.csv", units),
    ]
    return _finish(cfg, "indicators", outputs)


# ---------------------------------------------------------------- envelope

def _envelope_worker(args):
    trace, p = args
    mask = np.ones(len(trace), dtype=bool)
    if p["envelope_road_types"] is not None:
        mask = np.isin(trace.road_type, p["envelope_road_types"])
    env = polar_bin(trace.a_x[mask], trace.a_y[mask], EnvelopeConfig(p["delta_r"], p["delta_s"]))
    return trace.subject_id, env


def cmd_envelope(cfg):
    _require(cfg, "envelope")
    p = cfg.params
    traces = load_processed(cfg)
    results = _pmap(_envelope_worker, [(t, p) for t in traces], cfg.workers)
    d = _fresh_dir(cfg, "envelope")
    angles = center_angles(p["delta_s"])
    long_rows = []
    for sid, env in results:
        f = env.to_frame()
        f.insert(0, "subject_id", sid)
        long_rows.append(f)
    envelopes = pd.concat(long_rows, ignore_index=True)
    outputs = [write_table(envelopes, d / "envelopes.csv",
                           {"angle": "deg", "mean": "m/s^2", "p75": "m/s^2", "p95": "m/s^2",
                            "max": "m/s^2"})]
    ids = [sid for sid, _ in results]
    k = p["n_components"]
    scores = pd.DataFrame({"subject_id": ids})
    summary = []
    for stat in ENVELOPE_STATS:
        M = np.vstack([env.stat(stat) for _, env in results])
        try:
            pa = parallel_analysis(M, p["pa_replicates"], seed=cfg.seed)
        except (DataError, ValueError, np.linalg.LinAlgError):
            pa = -1
        try:
            pca = pca_varimax(M, k)
        except DataError as exc:
            for j in range(k):
                scores[f"gg.PC{j + 1}.{stat}"] = np.nan
                summary.append({"envelope": stat, "component": f"PC{j + 1}",
                                "variance_explained": np.nan, "pa_components": pa,
                                "error": type(exc).__name__})
            continue
        for j in range(k):
            scores[f"gg.PC{j + 1}.{stat}"] = pca.scores[:, j]
            summary.append({"envelope": stat, "component": f"PC{j + 1}",
                            "variance_explained": pca.variance_explained[j], "pa_components": pa,
                            "error": ""})
        outputs.append(write_table(loadings_frame(pca, angles), d / f"loadings_{stat}.csv",
                                   {"angle": "deg"}))
    outputs.append(write_table(scores, d / "pca_scores.csv"))
    outputs.append(write_table(pd.DataFrame(summary), d / "pca_summary.csv",
                               {"variance_explained": "fraction"}))
    if cfg.plots:
        from .plots import plot_envelopes

        outputs += plot_envelopes(results, d / "plots")
    return _finish(cfg, "envelope", outputs)


# ---------------------------------------------------------------- ccg

def _ccg_worker(args):
    trace, curves, p = args
    windows, _ = _windows(trace, curves)
    segments = []
    for w in windows:
        segments += extract_stationary(w, p["kappa_rate_max"], p["min_duration"])
    try:
        res = fit_ccg(segments)
        row = {"subject_id": trace.subject_id, **res.__dict__, "error": ""}
    except DataError as exc:
        row = {"subject_id": trace.subject_id, "ccg": np.nan, "ccg0": np.nan, "ci_width": np.nan,
               "n_points": len(segments), "r2": np.nan, "error": type(exc).__name__}
    return segments, row


def cmd_ccg(cfg):
    _require(cfg, "ccg")
    traces = load_processed(cfg)
    curves = load_curves(cfg)
    results = _pmap(_ccg_worker, [(t, curves, cfg.params) for t in traces], cfg.workers)
    d = _fresh_dir(cfg, "ccg")
    segments = [s for segs, _ in results for s in segs]
    outputs = [
        write_table(segments_frame(segments), d / "stationary_segments.csv",
                    {"mean_a_y": "m/s^2", "mean_dev": "m", "duration": "s"}),
        write_table(pd.DataFrame([row for _, row in results]), d / "ccg.csv",
                    {"ccg": "m/(m/s^2)", "ccg0": "m", "ci_width": "m", "r2": "fraction"}),
    ]
    return _finish(cfg, "ccg", outputs)


# ---------------------------------------------------------------- trajectories

def _trajectory_worker(args):
    trace, curves, half_width, p = args
    windows, status = _windows(trace, curves)
    results = []
    for w in windows:
        try:
            results.append(intensity(w, half_width))
        except DataError:
            continue
    return trace.subject_id, results, windows if p.get("_keep_windows") else None


def cmd_trajectories(cfg):
    _require(cfg, "trajectories")
    traces = load_processed(cfg)
    curves = load_curves(cfg)
    hw = load_band(cfg)
    params = dict(cfg.params, _keep_windows=cfg.plots)
    results = _pmap(_trajectory_worker, [(t, curves, hw, params) for t in traces], cfg.workers)
    d = _fresh_dir(cfg, "trajectories")
    curve_rows, wide, per_subject, all_results = [], [], {}, []
    for sid, res, _ in results:
        all_results += res
        for r in res:
            curve_rows.append({"subject_id": sid, "curve_id": r.curve_id, "code": r.code,
                               "trajectory_class": r.trajectory_class.value,
                               "intensity": r.intensity})
        rec = {"subject_id": sid, "n_curves": len(res)}
        if res:
            dist = class_distribution(res)
            per_subject[sid] = dist
        for cls in CLASSES:
            if res:
                row = dist.loc[cls.value]
                rec[f"class_pct.{cls.slug}"] = row["percent"]
                rec[f"intensity.{cls.slug}.mean"] = row["intensity_mean"]
                rec[f"intensity.{cls.slug}.median"] = row["intensity_median"]
            else:
                rec[f"class_pct.{cls.slug}"] = np.nan
                rec[f"intensity.{cls.slug}.mean"] = np.nan
                rec[f"intensity.{cls.slug}.median"] = np.nan
        rec["class_pct.unclassified"] = dist.loc["Unclassified", "percent"] if res else np.nan
        wide.append(rec)
    wide_frame = pd.DataFrame(wide)
    units = {c: ("%" if c.startswith("class_pct") else "x1000") for c in wide_frame.columns
             if "." in c}
    outputs = [
        write_table(pd.DataFrame(curve_rows, columns=["subject_id", "curve_id", "code",
                                                      "trajectory_class", "intensity"]),
                    d / "curve_classes.csv", {"intensity": "x1000"}),
        write_table(wide_frame, d / "subject_classes.csv", units),
    ]
    if per_subject:
        outputs.append(write_table(cohort_class_table(per_subject, all_results),
                                   d / "class_summary.csv",
                                   {"percent_mean": "%", "percent_sd": "%", "percent_max": "%",
                                    "intensity_mean": "x1000", "intensity_sd": "x1000",
                                    "intensity_max": "x1000"}))
    if cfg.plots:
        from .plots import plot_trajectories

        outputs += plot_trajectories(results, hw, d / "plots")
    return _finish(cfg, "trajectories", outputs)


# ---------------------------------------------------------------- mdsi

def cmd_mdsi(cfg):
    _require(cfg, "mdsi")
    if cfg.responses is None:
        raise ConfigError("config lacks 'responses'")
    bank = ItemBank.load(cfg.item_bank) if cfg.item_bank else ItemBank.default()
    responses = load_responses(cfg.responses, bank)
    scores = score_cohort(responses, bank)
    d = _fresh_dir(cfg, "mdsi")
    frame = scores.reset_index()
    outputs = [
        write_table(frame, d / "factor_scores.csv"),
        write_table(reliability(responses, bank), d / "reliability.csv"),
        write_table(item_descriptives(responses, bank), d / "item_descriptives.csv"),
        write_table(pd.DataFrame([{"refined_status": scores.attrs["refined_status"],
                                   "n_subjects": len(scores),
                                   "n_scored_items": len(bank.item_ids())}]),
                    d / "status.csv"),
    ]
    inputs = [cfg.responses] + ([cfg.item_bank] if cfg.item_bank else [])
    return _finish(cfg, "mdsi", outputs, inputs=inputs)


# ---------------------------------------------------------------- correlate

def indicator_matrix(cfg):
    basic = read_table(cfg.step_dir("indicators") / "indicators_basic.csv", "subject_id")
    gg = read_table(cfg.step_dir("envelope") / "pca_scores.csv", "subject_id")
    ccg = read_table(cfg.step_dir("ccg") / "ccg.csv", "subject_id")[["ccg", "ccg0", "ci_width"]]
    ccg.columns = [f"ccg.{c}" for c in ccg.columns]
    traj = read_table(cfg.step_dir("trajectories") / "subject_classes.csv", "subject_id")
    traj = traj.drop(columns=["n_curves", "class_pct.unclassified"])
    frames = [basic, gg, ccg, traj]
    for f in frames:
        f.index = f.index.astype(str)
    return pd.concat(frames, axis=1)


def split_indicator(name):
    parts = name.split(".") + ["", ""]
    kpi, stat, agg = parts[:3]
    return KPI_NAMES.get(kpi, kpi), stat, agg


def cmd_correlate(cfg):
    _require(cfg, "correlate")
    if cfg.profiles is None:
        raise ConfigError("config lacks 'profiles'")
    X = indicator_matrix(cfg)
    fs = read_table(cfg.step_dir("mdsi") / "factor_scores.csv", "subject_id")
    fs.index = fs.index.astype(str)
    scores = fs[[c for c in fs.columns if c.startswith("refined_")]]
    scores.columns = [c[len("refined_"):] for c in scores.columns]
    prof = load_profiles_frame(cfg)
    cov = covariate_matrix(prof)
    table = correlate_all(scores, X, cov)
    d = _fresh_dir(cfg, "correlate")
    sig = table[(table["error"] == "") & (table["p"] < 0.01)].copy()
    parts = [split_indicator(n) for n in sig["indicator"]]
    sig_out = pd.DataFrame({
        "factor": sig["factor"].to_numpy(),
        "kpi": [p[0] for p in parts],
        "statistic": [p[1] for p in parts],
        "aggregation": [p[2] for p in parts],
        "r": [f"{r:.3f}{stars(p)}" for r, p in zip(sig["r"], sig["p"])],
    })
    counts = summary_counts(table)
    outputs = [
        write_table(X.reset_index().rename(columns={"index": "subject_id"}),
                    d / "indicator_matrix.csv"),
        write_table(table, d / "correlations.csv"),
        write_table(sig_out, d / "significant.csv"),
        write_table(pd.DataFrame([counts]), d / "summary.csv"),
    ]
    return _finish(cfg, "correlate", outputs, inputs=[cfg.profiles])


# ---------------------------------------------------------------- report

def _describe(values):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return dict(mean=np.nan, sd=np.nan, median=np.nan, min=np.nan, max=np.nan, n=0)
    return dict(mean=v.mean(), sd=v.std(ddof=1) if v.size > 1 else 0.0, median=np.median(v),
                min=v.min(), max=v.max(), n=int(v.size))


def _gender_groups(cfg, index):
    prof = load_profiles_frame(cfg)
    if prof is None:
        return {"all": list(index)}
    prof.index = prof.index.astype(str)
    groups = {}
    for g in ("female", "male", "other"):
        members = [i for i in index if i in prof.index and prof.loc[i, "gender"] == g]
        if members:
            groups[g] = members
    return groups


def cmd_report(cfg):
    _require(cfg, "report")
    out = cfg.out
    lines = ["# Driving behavior report", ""]
    summary = read_table(out / "ingest" / "summary.csv")
    band = read_table(out / "curves" / "center_band.csv")
    lines += [
        "## Run", "",
        f"- subjects: {len(summary)}",
        f"- curves of interest: {int(band['n_curves'].iloc[0])} "
        f"(tau_kappa {cfg.params['tau_kappa']:g} 1/m, merge gap {band['merge_gap'].iloc[0]:g} m)",
        f"- center band half width: {band['half_width'].iloc[0]:.6g} m ({band['mode'].iloc[0]})",
        f"- seed: {cfg.seed}, aggregation: {cfg.agg}",
        "",
    ]

    basic = read_table(out / "indicators" / "indicators_basic.csv", "subject_id")
    rows = []
    for ch in CHANNELS:
        for stat in STAT_NAMES:
            for agg in cfg.aggs:
                col = f"{ch}.{stat}.{agg}"
                dsc = _describe(basic[col])
                rows.append({"channel": ch, "statistic": stat, "avg": agg, "mean": dsc["mean"],
                             "sd": dsc["sd"], "min": dsc["min"], "max": dsc["max"]})
    lines += ["## Basic indicators", "", markdown_table(pd.DataFrame(rows)), ""]

    gg = read_table(out / "envelope" / "pca_scores.csv", "subject_id")
    rows = []
    for col in gg.columns:
        _, comp, stat = col.split(".")
        dsc = _describe(gg[col])
        rows.append({"envelope": stat, "component": comp, "median": dsc["median"], "sd": dsc["sd"],
                     "min": dsc["min"], "max": dsc["max"]})
    pca_summary = read_table(out / "envelope" / "pca_summary.csv")
    lines += ["## G-G envelope components", "", markdown_table(pd.DataFrame(rows)), "",
              markdown_table(pca_summary), ""]
    loadings_path = out / "envelope" / "loadings_mean.csv"
    if loadings_path.is_file():
        lines += ["Loadings of the mean envelope:", "", markdown_table(read_table(loadings_path)), ""]

    ccg = read_table(out / "ccg" / "ccg.csv", "subject_id")
    ccg.index = ccg.index.astype(str)
    groups = _gender_groups(cfg, list(ccg.index))
    rows = []
    for kpi in ("ccg", "ccg0", "ci_width"):
        for g, members in groups.items():
            dsc = _describe(ccg.loc[members, kpi])
            rows.append({"kpi": kpi, "gender": g, "mean": dsc["mean"], "sd": dsc["sd"],
                         "min": dsc["min"], "max": dsc["max"]})
    lines += ["## Curve-cutting gradient", "", markdown_table(pd.DataFrame(rows)), ""]

    cs_path = out / "trajectories" / "class_summary.csv"
    if cs_path.is_file():
        lines += ["## Trajectory classes", "", markdown_table(read_table(cs_path)), ""]

    fs = read_table(out / "mdsi" / "factor_scores.csv", "subject_id")
    fs.index = fs.index.astype(str)
    groups = _gender_groups(cfg, list(fs.index))
    factors = [c[len("refined_"):] for c in fs.columns if c.startswith("refined_")]
    rows = []
    for f in factors:
        for g, members in groups.items():
            sub = fs.loc[members]
            nr = _describe(sub[f"nonrefined_{f}"])
            rf = _describe(sub[f"refined_{f}"])
            nonref_style = sub[[f"nonrefined_{x}" for x in factors]].idxmax(axis=1, skipna=True)
            rows.append({
                "style": f, "gender": g,
                "nonrefined_mean": nr["mean"], "nonrefined_sd": nr["sd"],
                "nonrefined_min": nr["min"], "nonrefined_max": nr["max"],
                "nonrefined_n": int((nonref_style == f"nonrefined_{f}").sum()),
                "refined_mean": rf["mean"], "refined_sd": rf["sd"],
                "refined_min": rf["min"], "refined_max": rf["max"],
                "refined_n": int((sub["style"] == f).sum()),
            })
    rel = read_table(out / "mdsi" / "reliability.csv")
    lines += ["## Questionnaire factor scores", "", markdown_table(pd.DataFrame(rows)), "",
              "Reliability:", "", markdown_table(rel), ""]

    sig = read_table(out / "correlate" / "significant.csv")
    counts = read_table(out / "correlate" / "summary.csv")
    lines += ["## Partial correlations with p < .01", "",
              "Partial Pearson correlations controlling for age and gender, two-tailed; "
              "** p < .01, *** p < .001.", "",
              markdown_table(sig) if len(sig) else "No correlation reached p < .01.", "",
              markdown_table(counts), ""]

    d = _fresh_dir(cfg, "report")
    path = d / "report.md"
    path.write_text("\n".join(lines), encoding="utf-8")
    return _finish(cfg, "report", [path])


COMMANDS = {
    "ingest": cmd_ingest,
    "curves": cmd_curves,
    "indicators": cmd_indicators,
    "envelope": cmd_envelope,
    "ccg": cmd_ccg,
    "trajectories": cmd_trajectories,
    "mdsi": cmd_mdsi,
    "correlate": cmd_correlate,
    "report": cmd_report,
}


def run_all(cfg):
    """Run every step in dependency order."""
    for step in STEPS:
        COMMANDS[step](cfg)


def table_digest(out_dir):
    """SHA-256 over every table and report under ``out_dir``.

    Manifests are left out because they record library versions.
    """
    import hashlib

    h = hashlib.sha256()
    base = Path(out_dir)
    for p in sorted(base.rglob("*")):
        if p.is_file() and p.suffix in (".csv", ".md"):
            h.update(str(p.relative_to(base)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()
