"""Message and round cost of each protocol when nothing goes wrong.

Every process starts with 1 and nobody crashes. The interesting column is
the message count: STEALTH gets away with n+f-1 messages because most of its
agreement is carried by silence.
"""

from silentsync import SystemParams, execute
from silentsync.analysis import metrics_line
from silentsync.diagram import render
from silentsync.kernel import Context

CASES = [
    ("stealth", 5, 2, Context.GAMMA_F, "n+f-1"),
    ("d2", 5, 2, Context.GAMMA_F, "n*f"),
    ("d1f1", 5, 1, Context.GAMMA_F, "n*n-n"),
    ("d15", 5, 2, Context.GAMMA_TILDE_F, "n*n+n*f-n"),
]

for name, n, f, ctx, formula in CASES:
    run = execute(name, [1] * n, (), SystemParams(n, f, ctx))
    print(f"{name:8} n={n} f={f}  {metrics_line(run)}  (expected {formula})")

print()
print(render(execute("stealth", [1, 1, 1, 1, 1], (), SystemParams(5, 2))))
