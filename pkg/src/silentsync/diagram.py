"""ASCII round diagrams of runs: one lane per process, one column per round."""

from __future__ import annotations

from .kernel import Run


def _arrows(run: Run, i: int, rnd: int) -> str:
    out = [(m.receiver, m.payload) for m in run.messages if m.sender == i and m.round == rnd]
    if not out:
        return ""
    by_payload: dict[str, list[int]] = {}
    for r, p in out:
        by_payload.setdefault(p, []).append(r)
    parts = []
    for p, rs in by_payload.items():
        target = "*" if len(rs) == run.n - 1 else ",".join(map(str, rs))
        parts.append(f">{target}:{p}")
    return " ".join(parts)


def render(run: Run) -> str:
    rounds = max([run.end_time] + [m.round for m in run.messages] + [0])
    crash = run.crash_rounds
    cells = []
    for i in range(run.n):
        row = []
        for rnd in range(1, rounds + 1):
            if i in crash and rnd > crash[i]:
                row.append("⊥")
                continue
            cell = _arrows(run, i, rnd)
            d = run.decisions.get(i)
            if d is not None and d.mid_round and d.time == rnd - 1:
                cell = f"{cell} [{d.action}]".strip()
            if i in crash and rnd == crash[i]:
                cell = f"{cell} X".strip()
            elif d is not None and not d.mid_round and d.time == rnd:
                cell = f"{cell} [{d.action}]".strip()
            if run.halt_times.get(i) == rnd:
                cell = f"{cell} halt".strip()
            row.append(cell)
        cells.append(row)
    widths = [max([len(f"r{k + 1}")] + [len(row[k]) for row in cells]) for k in range(rounds)]
    label_w = len(f"p{run.n - 1} v=1")
    head = " " * label_w + " | " + " | ".join(f"r{k + 1}".ljust(w) for k, w in enumerate(widths))
    lines = [
        f"{run.protocol} n={run.n} f={run.params.f} values={''.join(map(str, run.initial_values))} "
        f"messages={len(run.messages)}",
        head,
        "-" * len(head),
    ]
    for i, row in enumerate(cells):
        label = f"p{i} v={run.initial_values[i]}".ljust(label_w)
        notes = []
        d = run.decisions.get(i)
        if d is not None:
            notes.append(f"{d.action}@{d.time}{' mid-round' if d.mid_round else ''}")
        if i in run.halt_times:
            notes.append(f"halt@{run.halt_times[i]}")
        if i in crash:
            notes.append(f"crash in round {crash[i]}")
        body = " | ".join(c.ljust(w) for c, w in zip(row, widths))
        lines.append(f"{label} | {body}   {' '.join(notes)}".rstrip())
    return "\n".join(lines)
