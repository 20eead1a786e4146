#!/usr/bin/env python3
"""
Majority voting from first principles
=====================================

Walks through the voting primitive the whole toolkit is built on: why
three mediocre voters beat one, and what the family-grouped two-stage
vote changes.
"""

import numpy as np

from adscreen.fusion import fuse_decisions, majority_vote, run_decision_vote

# --- one pool, by hand ------------------------------------------------------

pool = [1, 1, 0]
print("pool", pool, "->", majority_vote(pool))

# even splits go to the configured tie-break class (positive=AD by default)
print("tie  [1, 0] ->", majority_vote([1, 0]))
print("tie  [1, 0] with negative tie-break ->", majority_vote([1, 0], "negative"))

# --- why voting helps at all ------------------------------------------------
# Three independent voters, each right 80% of the time.  The majority is
# right when at least two agree with the truth:
#   0.8^3 + 3 * 0.8^2 * 0.2 = 0.896
# Simulate it over a synthetic cohort and watch the number appear.

rng = np.random.default_rng(0)
n = 20000
truth = {f"subj{i:05d}": int(rng.integers(0, 2)) for i in range(n)}

voters = []
for v in range(3):
    correct = rng.random(n) < 0.8
    voters.append({s: t if ok else 1 - t for (s, t), ok in zip(truth.items(), correct)})
    acc = sum(voters[-1][s] == truth[s] for s in truth) / n
    print(f"voter {v}: accuracy {acc:.4f}")

fused = run_decision_vote(voters)
acc = sum(fused[s] == truth[s] for s in truth) / n
print(f"majority of the three: {acc:.4f}  (analytic 0.8960)")

# --- flat vs family-grouped -------------------------------------------------
# With correlated voters the flat pool lets a large family outvote everyone.
# Grouping first gives each family a single voice.

vectors = [{"s": 1}, {"s": 1}, {"s": 1}, {"s": 0}, {"s": 0}]
families = ["bert", "bert", "bert", "roberta", "asr"]

print("flat pool       ->", fuse_decisions(vectors)["s"])
print("family-grouped  ->", fuse_decisions(vectors, groups=families)["s"])
# bert wins the flat vote 3-2; grouped it is one voice against two
