"""Knowing something nobody told you.

In the nice STEALTH run with n=3, process 2 never receives a single message,
yet at time 3 it knows that every initial value is 1. It learns this from
the silence of processes 0 and 1 in round 3: had anything been wrong, at
least one correct member of that pair would have complained.
"""

from silentsync import All1, KnowledgeQuery, SystemParams, ValueIs, enumerate_runs, find_run
from silentsync.analysis import silent_choir_check
from silentsync.knowledge import knows_detail

universe = enumerate_runs("stealth", SystemParams(3, 1))
nice = find_run(universe, (1, 1, 1), ())
print(f"universe: {universe.cardinality} runs")

for m in range(4):
    known, peers = knows_detail(KnowledgeQuery(universe, nice, 2, m, All1()))
    print(f"time {m}: process 2 knows all1? {known!s:5}  ({peers} runs look the same to it)")

print()
for j in (0, 1):
    known, _ = knows_detail(KnowledgeQuery(universe, nice, 2, 3, ValueIs(j, 1)))
    v = silent_choir_check(nice, 2, j, 3)
    print(f"v_{j}=1 known at time 3: {known}; message chain from {j}: {v.chain_exists}; "
          f"choir {sorted(v.reach_set | v.faulty_set)} of size {v.choir_size} > f=1")
