"""Score simulated questionnaire answers with the bundled six-factor model."""

import numpy as np
import pandas as pd

from drivestyle.mdsi import ItemBank, reliability, score_cohort

bank = ItemBank.default()
ids = bank.item_ids(scored=False)
rng = np.random.default_rng(5)
n = 80
trait = rng.normal(size=(n, len(bank.factors)))
factor_of, reversed_item = {}, {}
for item in bank.items:
    factor_of.setdefault(item.item_id, item.factor)
    reversed_item.setdefault(item.item_id, item.reversed)
answers = {}
for item_id in ids:
    f = factor_of[item_id]
    j = bank.factors.index(f) if f in bank.factors else 0
    raw = 3.5 + 1.2 * trait[:, j] + rng.normal(0, 1.0, n)
    if reversed_item[item_id]:
        raw = 7 - raw  # agreeing with a reversed item signals a low trait
    answers[item_id] = np.clip(np.round(raw), 1, 6)
responses = pd.DataFrame(answers, index=[f"P{i:02d}" for i in range(n)])

scores = score_cohort(responses, bank)
print("refined scores:", scores.attrs["refined_status"])
print(scores["style"].value_counts().to_string())
print(reliability(responses, bank).round(3).to_string(index=False))
