"""What STEALTH does when the coordinator crashes halfway through round 2.

Process 0 gets all[1] to process 1 only and then dies. Process 2 notices
the missing all[1] and raises an error, everybody asks around, and the
consensus phase settles on commit because process 1 did see all[1].
"""

from silentsync import Crash, SystemParams, ac_verdict, execute
from silentsync.diagram import render

params = SystemParams(5, 2)
run = execute("stealth", [1] * 5, (Crash(0, 2, (1,)),), params)
print(render(run))
print()
print("AC conditions:", {k: v.ok for k, v in ac_verdict(run).checks().items()})

# same crash, but 0 reaches nobody: now nobody can be sure, and everyone aborts
silent = execute("stealth", [1] * 5, (Crash(0, 2, ()),), params)
print()
print(render(silent))
