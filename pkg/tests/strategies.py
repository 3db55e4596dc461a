"""Hypothesis strategies producing arbitrary admissible runs."""

from hypothesis import strategies as st

from silentsync import Crash, SystemParams, execute
from silentsync.kernel import Context, resolve

CONFIGS = [
    ("stealth", 3, 1, Context.GAMMA_F),
    ("stealth", 4, 2, Context.GAMMA_F),
    ("d2", 4, 2, Context.GAMMA_F),
    ("d1f1", 3, 1, Context.GAMMA_F),
    ("d1f1", 4, 1, Context.GAMMA_F),
    ("d15", 3, 2, Context.GAMMA_TILDE_F),
]


@st.composite
def crash_entry(draw, n, context, process, horizon):
    rnd = draw(st.integers(1, horizon))
    if context is Context.GAMMA_F:
        receivers = draw(st.sets(st.integers(0, n - 1).filter(lambda r: r != process)))
        return Crash(process, rnd, tuple(sorted(receivers)))
    return Crash(process, rnd, (), draw(st.integers(0, n)), draw(st.booleans()))


@st.composite
def runs(draw, configs=CONFIGS):
    name, n, f, context = draw(st.sampled_from(configs))
    _, params = resolve(name, SystemParams(n, f, context))
    values = draw(st.tuples(*[st.integers(0, 1)] * n))
    faulty = draw(st.lists(st.integers(0, n - 1), unique=True, max_size=f))
    spec = tuple(draw(crash_entry(n, context, p, params.horizon)) for p in faulty)
    return execute(name, values, spec, params)
