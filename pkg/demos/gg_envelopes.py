"""Polar-binned G-G envelopes and their rotated principal components.

Each synthetic driver gets an elliptical acceleration cloud whose
longitudinal and lateral reach vary independently, so two components
should come out of the parallel analysis.
"""

import numpy as np

from drivestyle.envelope import (
    envelope_matrix,
    loadings_frame,
    parallel_analysis,
    pca_varimax,
    polar_bin,
)

rng = np.random.default_rng(3)
envelopes = []
for _ in range(60):
    lon, lat = rng.uniform(0.8, 2.0), rng.uniform(1.0, 3.0)
    phi = rng.uniform(-np.pi, np.pi, 4000)
    r = np.sqrt(rng.uniform(0, 1, 4000))
    envelopes.append(polar_bin(lon * r * np.cos(phi), lat * r * np.sin(phi)))

M = envelope_matrix(envelopes, "p95")
k = parallel_analysis(M, replicates=100, seed=0)
pca = pca_varimax(M, n_components=2)
print(f"components retained by parallel analysis: {k}")
print(f"variance explained: {np.round(pca.variance_explained, 3)}")
print(loadings_frame(pca, envelopes[0].angles).round(2).to_string(index=False))
