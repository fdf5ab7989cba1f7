"""Deterministic synthetic cohort for tests, demos and the golden run.

The generator lays out a route (city stretch, rural straights, clothoid
curves and one S-bend), drives it with a few simulated subjects and
writes everything the pipeline consumes: trace files with non-canonical
column names and units, a schema, subject profiles, questionnaire answers
and a run configuration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .mdsi import ItemBank

LANE_WIDTH = 3.5
ROUTE_DS = 0.1
RAW_RATE_HZ = 20.0

SCHEMA = {
    "columns": {
        "t": "time_s",
        "v_x": "speed_kmh",
        "a_x": "acc_lon",
        "a_y": "acc_lat",
        "d_left": "dist_left",
        "d_right": "dist_right",
        "kappa": "curvature",
        "road_type": "road",
        "lane_change": "lc_flag",
        "oncoming": "oncoming_flag",
        "street_id": "street",
    },
    "units": {"v_x": "km/h", "d_left": "m", "d_right": "m"},
    "road_type_map": {"Landstrasse": "rural", "Stadt": "city"},
    # the recorder logs curvature right-positive
    "negate": ["kappa"],
}

# (straight before, clothoid length, arc length, curvature)
CURVES = (
    (200.0, 40.0, 110.0, 1 / 200),
    (140.0, 40.0, 90.0, -1 / 250),
    (160.0, 35.0, 120.0, 1 / 300),
    (150.0, 40.0, 80.0, -1 / 160),
    (180.0, 30.0, 100.0, -1 / 220),
    (130.0, 40.0, 90.0, 1 / 180),
    (170.0, 40.0, 110.0, -1 / 280),
)


@dataclass(frozen=True)
class Route:
    s: np.ndarray
    kappa: np.ndarray
    road: np.ndarray
    street: np.ndarray
    curves: tuple  # (start, end) of every curved element incl. clothoids


def build_route():
    """Curvature profile on a 0.1 m grid, left-positive."""
    pieces = [(np.zeros(int(250 / ROUTE_DS)), "Stadt", "A1")]
    pieces.append((np.zeros(int(250 / ROUTE_DS)), "Landstrasse", "L12"))
    spans = []
    pos = 500.0
    for i, (straight, clo, arc, k) in enumerate(CURVES):
        pieces.append((np.zeros(int(straight / ROUTE_DS)), "Landstrasse", "L12"))
        pos += straight
        n_clo = int(clo / ROUTE_DS)
        ramp = np.linspace(0.0, k, n_clo, endpoint=False)
        body = np.concatenate([ramp, np.full(int(arc / ROUTE_DS), k), ramp[::-1]])
        pieces.append((body, "Landstrasse", "L12"))
        spans.append((pos, pos + 2 * clo + arc))
        pos += 2 * clo + arc
        if i == 2:
            # S-bend: opposite curve directly after
            body2 = -0.8 * body
            pieces.append((body2, "Landstrasse", "L12"))
            spans.append((pos, pos + 2 * clo + arc))
            pos += 2 * clo + arc
    pieces.append((np.zeros(int(300 / ROUTE_DS)), "Landstrasse", "L12"))
    kappa = np.concatenate([p[0] for p in pieces])
    road = np.concatenate([np.full(len(p[0]), p[1]) for p in pieces])
    street = np.concatenate([np.full(len(p[0]), p[2]) for p in pieces])
    s = np.arange(len(kappa)) * ROUTE_DS
    return Route(s, kappa, road, street, tuple(spans))


@dataclass(frozen=True)
class DriverModel:
    subject_id: str
    v_max: float
    a_lat_max: float
    straight_sd: float
    ccg: float
    # deviation toward the curve inside at normalized positions 0, 1/6, 1/2, 5/6, 1
    shape: tuple
    age: int
    gender: str
    latent: tuple  # six questionnaire factor levels


def default_drivers(n, rng):
    shapes = (
        (0.0, 0.35, 0.45, 0.40, 0.1),      # biased inner
        (0.0, 0.05, 0.1, 0.05, 0.0),       # center
        (-0.2, -0.35, 0.40, 0.45, 0.1),    # cutting
        (0.1, 0.40, 0.1, -0.35, -0.1),     # oscillating
        (0.0, -0.40, -0.45, -0.40, 0.0),   # biased outer
    )
    genders = ("female", "male", "male", "female", "male", "other")
    drivers = []
    for i in range(n):
        jitter = rng.normal(0.0, 0.05, 5)
        drivers.append(DriverModel(
            subject_id=f"S{i + 1:02d}",
            v_max=float(22.0 + 4.0 * rng.random()),
            a_lat_max=float(2.2 + 1.8 * rng.random()),
            straight_sd=float(0.15 + 0.12 * rng.random()),
            ccg=float(rng.normal(0.08, 0.04)),
            shape=tuple(float(x) for x in np.array(shapes[i % len(shapes)]) + jitter),
            age=int(rng.integers(19, 72)),
            gender=genders[i % len(genders)],
            latent=tuple(float(x) for x in rng.normal(0.0, 1.0, 6)),
        ))
    return drivers


def speed_profile(route, driver, a_acc=1.2, a_dec=2.0):
    """Target speed limited by lateral acceleration, then by longitudinal
    acceleration in a forward and a backward pass."""
    k = np.abs(route.kappa)
    v = np.full(len(k), driver.v_max)
    v[route.road == "Stadt"] = min(driver.v_max, 13.9)
    with np.errstate(divide="ignore"):
        v = np.minimum(v, np.sqrt(driver.a_lat_max / np.maximum(k, 1e-12)))
    v[0] = 8.0
    for i in range(1, len(v)):
        v[i] = min(v[i], np.sqrt(v[i - 1] ** 2 + 2 * a_acc * ROUTE_DS))
    for i in range(len(v) - 2, -1, -1):
        v[i] = min(v[i], np.sqrt(v[i + 1] ** 2 + 2 * a_dec * ROUTE_DS))
    return v


def _inner_offset(route, driver):
    """Curve-relative lateral offset along the route, ramped in and out."""
    dev = np.zeros(len(route.s))
    sign = np.zeros(len(route.s))
    ramp = 15.0
    u_pts = np.array([0.0, 1 / 6, 1 / 2, 5 / 6, 1.0])
    for j, (a, b) in enumerate(route.curves):
        shape = np.array(driver.shape) * (1.0 + 0.15 * np.sin(1.7 * j))
        u = (route.s - a) / (b - a)
        inside = (route.s >= a) & (route.s <= b)
        dev[inside] = np.interp(u[inside], u_pts, shape)
        k_mid = route.kappa[np.searchsorted(route.s, 0.5 * (a + b))]
        sign[inside] = np.sign(k_mid)
        before = (route.s >= a - ramp) & (route.s < a)
        after = (route.s > b) & (route.s <= b + ramp)
        dev[before] = shape[0] * (route.s[before] - (a - ramp)) / ramp
        dev[after] = shape[-1] * ((b + ramp) - route.s[after]) / ramp
        sign[before | after] = np.sign(k_mid)
    return dev, sign


def simulate_drive(route, driver, rng, flags=()):
    """Sample one subject's drive at about ``RAW_RATE_HZ`` with small jitter.

    ``flags`` lists ``(column, t_start, duration)`` intervals to mark as
    lane change or oncoming traffic.
    """
    v_route = speed_profile(route, driver)
    t_route = np.concatenate(([0.0], np.cumsum(ROUTE_DS / (0.5 * (v_route[1:] + v_route[:-1])))))
    dvds = np.gradient(v_route, ROUTE_DS)
    a_x_route = v_route * dvds
    dev_route, sign_route = _inner_offset(route, driver)

    n = int(t_route[-1] * RAW_RATE_HZ)
    t = np.arange(n) / RAW_RATE_HZ
    t[1:-1] += rng.uniform(-0.002, 0.002, n - 2)
    s = np.interp(t, t_route, route.s)
    v = np.interp(t, t_route, v_route)
    kappa = np.interp(s, route.s, route.kappa)
    a_y_true = kappa * v ** 2
    a_x = np.interp(t, t_route, a_x_route) + rng.normal(0.0, 0.05, n)
    a_y = a_y_true + rng.normal(0.0, 0.05, n)

    # lateral wander: AR(1) with the driver's stationary SD
    phi = 0.97
    e = rng.normal(0.0, driver.straight_sd * np.sqrt(1 - phi ** 2), n)
    wander = np.empty(n)
    wander[0] = rng.normal(0.0, driver.straight_sd)
    for i in range(1, n):
        wander[i] = phi * wander[i - 1] + e[i]
    dev = np.interp(s, route.s, dev_route)
    sign = np.interp(s, route.s, sign_route)
    in_curve = np.abs(sign) > 0.5
    cut = np.where(in_curve, dev + driver.ccg * np.abs(a_y_true) + 0.4 * wander, 0.0)
    d_cl = np.where(in_curve, np.sign(sign) * cut, wander)

    idx_route = np.clip(np.searchsorted(route.s, s), 0, len(route.s) - 1)
    frame = pd.DataFrame({
        "time_s": t,
        "speed_kmh": v * 3.6,
        "acc_lon": a_x,
        "acc_lat": a_y,
        "dist_left": LANE_WIDTH / 2 - d_cl,
        "dist_right": LANE_WIDTH / 2 + d_cl,
        "curvature": -kappa,
        "road": route.road[idx_route],
        "lc_flag": 0,
        "oncoming_flag": 0,
        "street": route.street[idx_route],
    })
    return apply_flags(frame, flags)


def apply_flags(frame, flags):
    t = frame["time_s"].to_numpy()
    for column, t0, dur in flags:
        frame.loc[(t >= t0) & (t < t0 + dur), column] = 1
    return frame


def _time_at(frame, s_target):
    """Time at which the subject reaches route position ``s_target``."""
    v = frame["speed_kmh"].to_numpy() / 3.6
    t = frame["time_s"].to_numpy()
    s = np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))))
    return float(np.interp(s_target, s, t))


def simulate_responses(drivers, bank, rng):
    ids = bank.item_ids(scored=False)
    rows = []
    for d in drivers:
        latent = dict(zip(bank.factors, d.latent))
        row = {"subject_id": d.subject_id}
        for item in ids:
            rows_for = [r for r in bank.items if r.item_id == item and r.factor in latent]
            level = 0.0
            for r in rows_for:
                level += (-1 if r.reversed else 1) * latent[r.factor]
            x = 3.5 + 0.9 * level / max(1, len(rows_for)) + rng.normal(0.0, 0.8)
            row[f"item_{item}"] = int(np.clip(np.rint(x), bank.scale_min, bank.scale_max))
        rows.append(row)
    return pd.DataFrame(rows)


def write_cohort(out_dir, n_subjects=3, seed=7):
    """Write a complete synthetic dataset and return the config path.

    The first subject has a short lane change on a straight (bridged), the
    second an oncoming-traffic interval inside the third curve (that curve
    is excluded for them), the third a malformed speed value and a burst
    of implausible lane distances.
    """
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    route = build_route()
    drivers = default_drivers(n_subjects, rng)
    bank = ItemBank.default()
    for i, d in enumerate(drivers):
        flags = []
        frame = simulate_drive(route, d, rng)
        if i % 3 == 0:
            flags.append(("lc_flag", _time_at(frame, 400.0), 0.3))
            flags.append(("lc_flag", _time_at(frame, 600.0), 2.0))
        if i % 3 == 1:
            a, b = route.curves[2]
            flags.append(("oncoming_flag", _time_at(frame, 0.5 * (a + b)), 1.5))
        apply_flags(frame, flags)
        text = frame.astype({"lc_flag": int, "oncoming_flag": int})
        text = text.to_csv(index=False, float_format="%.6f", lineterminator="\n")
        if i % 3 == 2:
            lines = text.split("\n")
            parts = lines[101].split(",")
            parts[1] = "n/a"
            lines[101] = ",".join(parts)
            for j in range(400, 405):
                parts = lines[j].split(",")
                parts[4] = "9.990000"
                lines[j] = ",".join(parts)
            text = "\n".join(lines)
        (out / "traces" / f"{d.subject_id}.csv").write_text(text, encoding="utf-8")
    pd.DataFrame({
        "subject_id": [d.subject_id for d in drivers],
        "age": [d.age for d in drivers],
        "gender": [d.gender for d in drivers],
    }).to_csv(out / "profiles.csv", index=False, lineterminator="\n")
    simulate_responses(drivers, bank, rng).to_csv(out / "responses.csv", index=False,
                                                  lineterminator="\n")
    (out / "schema.json").write_text(json.dumps(SCHEMA, indent=2) + "\n", encoding="utf-8")
    config = {
        "dataset_root": ".",
        "schema": "schema.json",
        "traces": "traces/*.csv",
        "profiles": "profiles.csv",
        "responses": "responses.csv",
        "reference_subject": drivers[0].subject_id,
        "out": "out",
        "seed": seed,
        "agg": "both",
        "params": {"pa_replicates": 50},
    }
    path = out / "config.json"
    path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return path
