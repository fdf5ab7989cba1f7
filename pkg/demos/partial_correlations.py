"""Partial correlations controlling for age and gender, with p-values.

A score and an indicator share a hidden trait; both also drift with
age. The plain correlation mixes the two effects, the partial one keeps
only the shared trait.
"""

import numpy as np
import pandas as pd

from drivestyle.correlation import covariate_matrix, p_two_tailed, partial_pearson, pearson

rng = np.random.default_rng(8)
n = 62
profiles = pd.DataFrame({"age": rng.uniform(20, 70, n),
                         "gender": rng.choice(["female", "male"], n)})
trait = rng.normal(size=n)
age = profiles["age"].to_numpy()
score = 0.6 * trait + 0.05 * age + rng.normal(0, 1, n)
indicator = 0.6 * trait + 0.05 * age + rng.normal(0, 1, n)

r, m = pearson(score, indicator)
print(f"plain   r = {r:.3f}  p = {p_two_tailed(r, m - 2):.4f}")
r, m, df = partial_pearson(score, indicator, covariate_matrix(profiles).to_numpy())
print(f"partial r = {r:.3f}  p = {p_two_tailed(r, df):.4f}  (df {df})")
