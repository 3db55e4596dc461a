"""Deterministic simulator and exhaustive checker for silence-based
atomic-commitment protocols in synchronous crash-failure systems."""

from .analysis import (
    ac_verdict, ac_verdict_all, chain_arrival, message_chain_exists, metrics, metrics_line,
    rank_bound_check, reach_set, silent_choir_check,
)
from .kernel import (
    ABORT, COMMIT, ConfigurationError, Context, Crash, InvalidFailureSpec, KernelFault,
    LocalState, Message, Run, SystemParams, dumps_run, execute, local_state, run_from_json,
    run_to_json,
)
from .knowledge import (
    All1, And, ChainToCorrect, CrashedStateError, IsFaulty, KnowledgeIndex, KnowledgeQuery, Not,
    Or, ValueIs, check_commit_knowledge, check_lemma_suite, fact_eval, indistinguishable, knows,
    parse_fact,
)
from .protocols import PROTOCOLS, get_protocol
from .universe import BudgetExceeded, RunUniverse, enumerate_runs, find_run

__version__ = "0.1.0"
