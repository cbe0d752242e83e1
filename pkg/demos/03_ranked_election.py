"""Schedules as candidates, head-of-line packets as voters.

Each packet gives a schedule that serves it a value equal to its urgency, and 0
otherwise. Summing votes per candidate ranks schedules by <U, pi>.

Run: python3 demos/03_ranked_election.py
"""

import itertools

import numpy as np

from fairsched import SwitchSchedules, gm_rank

urgency = np.array([3, -1, 0, 2])  # 2x2 switch, queues (0,0) (0,1) (1,0) (1,1)
candidates = SwitchSchedules(2).enumerate_maximal()
votes = urgency[:, None] * candidates.T  # voters x candidates
r = gm_rank(votes)
for c in r.order:
    print("schedule", candidates[c].astype(int), "score", r.scores[c])

# Pareto, voter renaming and common shifts all hold for the score ranking, but on a
# single profile they do not pin it down. Ranking by (worst vote, then total) obeys
# the same three rules and disagrees here:
v = np.array([[3, 1], [0, 1]])
print("scores", gm_rank(v).scores, "-> score ranking puts candidate",
      gm_rank(v).order[0], "first")
by_min = max(range(2), key=lambda c: (v[:, c].min(), v[:, c].sum()))
print("max-min ranking puts candidate", by_min, "first")

# voter renaming leaves the outcome alone
for perm in itertools.permutations(range(2)):
    assert np.array_equal(gm_rank(v[list(perm)]).order, gm_rank(v).order)
