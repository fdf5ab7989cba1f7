"""Independent reference implementations used as test oracles.

Each oracle takes a deliberately different route from the library code:
plain loops, sorting, closed forms or textbook algorithms.
"""

import math

import numpy as np

from drivestyle.curves import CurveOfInterest, extract_window
from drivestyle.ingest import SubjectTrace


# ---------------------------------------------------------------- statistics

def sorted_percentile(values, q):
    """Linear interpolation between closest ranks on a sorted copy."""
    xs = sorted(values)
    h = (len(xs) - 1) * q / 100.0
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def stat_oracle(values):
    xs = sorted(float(v) for v in values)
    n = len(xs)
    mean = math.fsum(xs) / n
    return {
        "absmax": max(abs(xs[0]), abs(xs[-1])),
        "max": xs[-1],
        "min": xs[0],
        "mean": mean,
        "median": sorted_percentile(xs, 50),
        "sd": math.sqrt(math.fsum((x - mean) ** 2 for x in xs) / n),
        "rms": math.sqrt(math.fsum(x * x for x in xs) / n),
        "idr": sorted_percentile(xs, 90) - sorted_percentile(xs, 10),
    }


# ---------------------------------------------------------------- envelope

def bin_oracle(a_x, a_y, centers, delta_r):
    """Filter points per bin with scalar trigonometry, then summarize."""
    out = []
    for c in centers:
        radii = []
        for x, y in zip(a_x, a_y):
            theta = math.degrees(math.atan2(y, x))
            d = abs(theta - c) % 360.0
            d = min(d, 360.0 - d)
            if d <= delta_r:
                radii.append(math.hypot(x, y))
        if radii:
            out.append((math.fsum(radii) / len(radii), sorted_percentile(radii, 75),
                        sorted_percentile(radii, 95), max(radii), len(radii)))
        else:
            out.append((0.0, 0.0, 0.0, 0.0, 0))
    return np.array(out)


def jacobi_eigenvalues(A, tol=1e-14, max_sweeps=100):
    """Cyclic Jacobi eigenvalue iteration for a symmetric matrix."""
    A = np.array(A, dtype=float)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(A**2) - np.sum(np.diag(A) ** 2)))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(A[p, q]) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * A[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q] = s
                J[q, p] = -s
                A = J.T @ A @ J
    return np.sort(np.diag(A))[::-1]


def correlation_matrix(X):
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    C = X - X.mean(axis=0)
    cov = C.T @ C / (n - 1)
    d = np.sqrt(np.diag(cov))
    return cov / np.outer(d, d)


# ---------------------------------------------------------------- regression

def normal_equations(x, y):
    """Slope and intercept by solving the 2x2 normal equations."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.array([[len(x), x.sum()], [x.sum(), x @ x]])
    b = np.array([y.sum(), x @ y])
    intercept, slope = np.linalg.solve(A, b)
    return slope, intercept


def precision_partial(x, y, covariates):
    """Partial correlation from the inverse of the full correlation matrix."""
    M = np.column_stack([x, y, covariates])
    P = np.linalg.inv(correlation_matrix(M))
    return -P[0, 1] / math.sqrt(P[0, 0] * P[1, 1])


def mc_two_tailed(t, df, n=2_000_000, seed=12345):
    """Monte-Carlo estimate of P(|T| > t) and its standard error."""
    rng = np.random.default_rng(seed)
    draws = rng.standard_t(df, size=n)
    p = float(np.mean(np.abs(draws) > t))
    return p, math.sqrt(p * (1 - p) / n)


# ---------------------------------------------------------------- traces

def make_trace(t, v_x, d_CL, kappa=None, a_x=None, a_y=None, road_type="rural",
               lane_change=None, oncoming=None, valid=None, subject_id="T", rate_hz=None,
               s=None):
    t = np.asarray(t, dtype=float)
    n = t.size
    v_x = np.broadcast_to(np.asarray(v_x, dtype=float), (n,)).copy()
    if s is None:
        s = np.concatenate(([0.0], np.cumsum(0.5 * (v_x[1:] + v_x[:-1]) * np.diff(t))))
    zeros = np.zeros(n)
    d_CL = np.broadcast_to(np.asarray(d_CL, dtype=float), (n,)).copy()
    return SubjectTrace(
        subject_id=subject_id,
        t=t,
        v_x=v_x,
        a_x=zeros.copy() if a_x is None else np.broadcast_to(np.asarray(a_x, float), (n,)).copy(),
        a_y=zeros.copy() if a_y is None else np.broadcast_to(np.asarray(a_y, float), (n,)).copy(),
        d_CL=d_CL,
        kappa=zeros.copy() if kappa is None else np.broadcast_to(np.asarray(kappa, float), (n,)).copy(),
        s=np.asarray(s, dtype=float),
        road_type=np.full(n, road_type),
        lane_change=np.zeros(n, bool) if lane_change is None else np.asarray(lane_change, bool),
        oncoming=np.zeros(n, bool) if oncoming is None else np.asarray(oncoming, bool),
        street_id=np.full(n, ""),
        valid=np.abs(d_CL) <= 2.5 if valid is None else np.asarray(valid, bool),
        segment=np.zeros(n, dtype=np.int64),
        sample_rate_hz=float(rate_hz if rate_hz else 1.0 / np.median(np.diff(t))),
    )


SEGMENT_FRACTIONS = (0.0, 1 / 6, 1 / 2, 5 / 6, 1.0)


def code_to_dev(code, u, half_width, amplitude=2.0):
    """Piecewise-constant inner-positive deviation realizing ``code``."""
    level = {"C": 0.0, "I": amplitude * half_width, "O": -amplitude * half_width}
    seg = np.clip(np.searchsorted(SEGMENT_FRACTIONS[1:-1], u, side="left"), 0, 3)
    return np.array([level[code[k]] for k in seg])


def generated_window(code, direction="left", half_width=0.24, n=600, v=20.0, rate_hz=50.0):
    """A curve window whose four segments carry the labels of ``code``.

    The subject drives at constant speed; ``d_CL`` is set so the curve-frame
    deviation matches the code for either curve direction.
    """
    t = np.arange(n) / rate_hz
    s = v * t
    u = (s - s[0]) / (s[-1] - s[0])
    dev = code_to_dev(code, u, half_width)
    sign = 1.0 if direction == "left" else -1.0
    kappa = sign * 0.004
    trace = make_trace(t, v, sign * dev, kappa=kappa, a_y=sign * 0.004 * v**2, rate_hz=rate_hz)
    curve = CurveOfInterest(1, direction, float(trace.s[0]), float(trace.s[-1]), kappa)
    return extract_window(trace, curve)


def segment_bisection(s):
    """Segment end indices by scanning cumulative distance fractions."""
    span = s[-1] - s[0]
    ends = []
    for frac in SEGMENT_FRACTIONS[1:-1]:
        i = 0
        while i < len(s) and (s[i] - s[0]) / span <= frac:
            i += 1
        ends.append(i)
    return ends
