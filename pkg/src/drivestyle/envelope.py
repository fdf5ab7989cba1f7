"""G-G envelopes by polar angle binning, and their PCA with Varimax rotation.

Angles are in degrees, measured from pure positive longitudinal
acceleration and increasing toward positive (left) lateral acceleration.
Envelope points are reported at center angles in the signed range
(-180, 180], in ascending order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .errors import NonDivisorStride, RankDeficient, TooFewSubjects

ENVELOPE_STATS = ("mean", "p75", "p95", "max")


@dataclass(frozen=True)
class EnvelopeConfig:
    delta_r: float = 10.0  # angle tolerance, degrees
    delta_s: float = 15.0  # rotation stride, degrees

    def __post_init__(self):
        if self.delta_r <= 0:
            raise ValueError("delta_r must be positive")
        envelope_count(self.delta_s)

    @property
    def overlapping(self):
        return self.delta_r > self.delta_s / 2


@dataclass(frozen=True, eq=False)
class Envelope:
    """Four radius statistics per center angle (m/s^2)."""

    angles: np.ndarray
    mean: np.ndarray
    p75: np.ndarray
    p95: np.ndarray
    max: np.ndarray
    counts: np.ndarray

    @property
    def empty(self):
        return self.counts == 0

    def __len__(self):
        return len(self.angles)

    def stat(self, name):
        return getattr(self, name)

    def to_frame(self):
        return pd.DataFrame(
            {
                "angle": self.angles,
                "mean": self.mean,
                "p75": self.p75,
                "p95": self.p95,
                "max": self.max,
                "n": self.counts,
            }
        )


@dataclass(frozen=True, eq=False)
class EnvelopePCA:
    loadings: np.ndarray  # variables x components, rotated
    scores: np.ndarray  # subjects x components
    variance_explained: np.ndarray  # fraction of total variance, per rotated component
    eigenvalues: np.ndarray  # all eigenvalues of the correlation matrix, descending
    unrotated_loadings: np.ndarray
    rotation: np.ndarray  # orthogonal matrix with loadings = unrotated @ rotation
    columns: tuple
    kept: np.ndarray  # indices of input columns that entered the analysis
    rotated: bool = True

    @property
    def communalities(self):
        return np.sum(self.loadings**2, axis=1)

    @property
    def uniqueness(self):
        return 1.0 - self.communalities


def envelope_count(delta_s):
    """Number of envelope reference points for a rotation stride in degrees."""
    ratio = 360.0 / delta_s
    n = int(round(ratio))
    if delta_s <= 0 or abs(ratio - n) > 1e-9:
        raise NonDivisorStride(f"stride {delta_s} deg does not divide 360")
    return n


def center_angles(delta_s):
    """Center angles in (-180, 180], ascending."""
    n = envelope_count(delta_s)
    raw = np.arange(1, n + 1) * float(delta_s)
    wrapped = np.where(raw > 180.0, raw - 360.0, raw)
    return np.sort(wrapped)


def angular_distance(a, b):
    """Absolute circular distance in degrees, in [0, 180]."""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float) + 180.0, 360.0) - 180.0
    return np.abs(d)


def polar_bin(a_x, a_y, config=EnvelopeConfig()):
    """Bin (a_x, a_y) points by polar angle and summarize radii per bin.

    A point joins every bin whose center lies within ``delta_r`` degrees
    (inclusive). Empty bins report zero radii and ``counts == 0``.
    """
    a_x = np.asarray(a_x, dtype=float).ravel()
    a_y = np.asarray(a_y, dtype=float).ravel()
    r = np.hypot(a_x, a_y)
    theta = np.degrees(np.arctan2(a_y, a_x))
    centers = center_angles(config.delta_s)
    member = angular_distance(theta[None, :], centers[:, None]) <= config.delta_r

    out = np.zeros((4, len(centers)))
    counts = member.sum(axis=1)
    for k in range(len(centers)):
        if counts[k] == 0:
            continue
        rk = r[member[k]]
        p75, p95 = np.percentile(rk, [75, 95])
        out[:, k] = (rk.mean(), p75, p95, rk.max())
    return Envelope(centers, out[0], out[1], out[2], out[3], counts)


def varimax(loadings, normalize=True, tol=1e-6, max_iter=200):
    """Varimax rotation of a loading matrix.

    Returns the rotated loadings and the orthogonal rotation matrix ``T``
    with ``rotated = loadings @ T``. With ``normalize`` rows are scaled to
    unit length during the iterations (Kaiser normalization).
    """
    L = np.asarray(loadings, dtype=float)
    p, k = L.shape
    if k < 2:
        return L.copy(), np.eye(k)
    h = np.sqrt(np.sum(L**2, axis=1)) if normalize else np.ones(p)
    h = np.where(h > 0, h, 1.0)
    A = L / h[:, None]
    T = np.eye(k)
    crit = 0.0
    for _ in range(max_iter):
        B = A @ T
        grad = A.T @ (B**3 - B @ np.diag(np.sum(B**2, axis=0)) / p)
        u, sv, vt = np.linalg.svd(grad)
        T = u @ vt
        new_crit = sv.sum()
        if new_crit < crit * (1 + tol):
            break
        crit = new_crit
    return (A @ T) * h[:, None], T


def standardize(matrix, ddof=1):
    """Z-score columns; zero-variance columns are dropped with a warning.

    Returns the standardized array and the indices of retained columns.
    """
    X = np.asarray(matrix, dtype=float)
    sd = X.std(axis=0, ddof=ddof)
    keep = np.flatnonzero(sd > 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0)))
    if keep.size < X.shape[1]:
        warnings.warn(f"dropping {X.shape[1] - keep.size} zero-variance columns", stacklevel=2)
    X = X[:, keep]
    return (X - X.mean(axis=0)) / sd[keep], keep


def pca_varimax(matrix, n_components=2, rotate=True, columns=None):
    """Correlation-matrix PCA with optional Varimax rotation.

    Scores are the standardized data projected on the unit eigenvectors and
    then rotated by the Varimax matrix, so each score column has variance
    equal to the variance its rotated component explains and each subject's
    sum of squared scores is unchanged by the rotation.

    Components are ordered by descending explained variance and signed so
    that the largest-magnitude loading of each component is positive.
    """
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    n, p = X.shape
    if n < n_components + 1:
        raise TooFewSubjects(f"{n} subjects for {n_components} components")
    Z, keep = standardize(X)
    p = Z.shape[1]
    if p < n_components:
        raise RankDeficient(f"only {p} non-constant columns for {n_components} components")
    R = Z.T @ Z / (n - 1)
    evals, evecs = np.linalg.eigh(R)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[n_components - 1] <= 1e-10 * max(evals[0], 1.0):
        raise RankDeficient("correlation matrix has too few positive eigenvalues")
    V = evecs[:, :n_components]
    L0 = V * np.sqrt(evals[:n_components])
    T = np.eye(n_components)
    if rotate and n_components > 1:
        _, T = varimax(L0)
    L = L0 @ T
    ss = np.sum(L**2, axis=0)
    order = np.argsort(-ss, kind="stable")
    T = T[:, order]
    L = L[:, order]
    flip = np.sign(L[np.argmax(np.abs(L), axis=0), np.arange(n_components)])
    flip[flip == 0] = 1.0
    T = T * flip
    L = L * flip
    scores = Z @ V @ T
    names = tuple(columns[i] for i in keep) if columns is not None else tuple(int(i) for i in keep)
    return EnvelopePCA(
        loadings=L,
        scores=scores,
        variance_explained=np.sum(L**2, axis=0) / p,
        eigenvalues=evals,
        unrotated_loadings=L0,
        rotation=T,
        columns=names,
        kept=keep,
        rotated=rotate,
    )


def parallel_analysis(matrix, replicates=100, seed=None):
    """Number of leading components whose correlation-matrix eigenvalue
    beats the mean eigenvalue of same-shape standard normal data."""
    if replicates < 50:
        raise ValueError("replicates must be >= 50")
    Z, _ = standardize(matrix)
    n, p = Z.shape
    observed = np.sort(np.linalg.eigvalsh(Z.T @ Z / (n - 1)))[::-1]
    rng = np.random.default_rng(seed)
    random_eigs = np.zeros(p)
    for _ in range(replicates):
        R = np.corrcoef(rng.standard_normal((n, p)), rowvar=False)
        random_eigs += np.sort(np.linalg.eigvalsh(R))[::-1]
    random_eigs /= replicates
    above = observed > random_eigs
    return int(np.argmin(above)) if not above.all() else p


def envelope_matrix(envelopes, stat):
    """Stack one statistic of several envelopes into a subjects x angles array."""
    return np.vstack([e.stat(stat) for e in envelopes])


def loadings_frame(pca, angles):
    cols = {"angle": np.asarray(angles)[pca.kept]}
    for j in range(pca.loadings.shape[1]):
        cols[f"PC{j + 1}"] = pca.loadings[:, j]
    cols["uniqueness"] = pca.uniqueness
    return pd.DataFrame(cols)
