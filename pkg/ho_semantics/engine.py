"""
Operational Model Module for the HO Semantics Workbench

This module runs the operational model a validated HO specification induces
on closed terms:

- One-step behaviors by structural recursion (``step``): Reduce, Fun or Stuck
- Application of function behaviors to arguments (``apply_fun``)
- Nondeterministic behavior sets under independent pointwise choice (``step_nd``)
- Multi-step tracing, with the trace available as a document, a pandas table
  and line-delimited records

``OperationalModel`` keeps a per-session memo of behaviors; the module-level
functions create a throwaway session.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import ClassVar

import pandas as pd

from .errors import BehaviorError, ConfigurationError, UnboundMetavariableError
from .rules import HOSpec, LAB, lookup
from .term import HOLE, Op, Var, enumerate_closed, parse_term, plug, render, substitute, term_size

logger = logging.getLogger(__name__)

REDUCE = "reduce"
FUN = "fun"
STUCK = "stuck"
CUTOFF = "cutoff"


@dataclass(frozen=True)
class Reduce:
    """An unlabeled transition to ``next``."""

    next: object
    kind: ClassVar[str] = REDUCE

    @property
    def payload(self):
        return self.next


@dataclass(frozen=True)
class Fun:
    """A function behavior, kept as a template in which ``·`` stands for the argument."""

    template: object
    kind: ClassVar[str] = FUN

    @property
    def payload(self):
        return self.template

    @property
    def body(self):
        return self.template


@dataclass(frozen=True)
class Stuck:
    kind: ClassVar[str] = STUCK

    @property
    def payload(self):
        return None


STUCK_BEHAVIOR = Stuck()

_KIND_ORDER = {REDUCE: 0, FUN: 1, STUCK: 2}


def behavior_key(behavior, render_fn=render):
    """Canonical order of behaviors: by kind, then by rendered payload."""
    payload = behavior.payload
    return (_KIND_ORDER[behavior.kind], "" if payload is None else render_fn(payload))


def kinds(behaviors):
    return frozenset(b.kind for b in behaviors)


class OperationalModel:
    """
    One evaluation session for an HO specification.

    Parameters:
    -----------
    spec : HOSpec
        A validated specification, deterministic or nondeterministic
    """

    def __init__(self, spec):
        self.spec = spec
        self._det_memo = {}
        self._nd_memo = {}

    @property
    def nondeterministic(self):
        return self.spec.nondeterministic

    @property
    def sig(self):
        return self.spec.sig

    # -- behaviors ---------------------------------------------------------

    def step(self, t):
        """The single behavior of closed term ``t`` under a deterministic spec."""
        if self.nondeterministic:
            raise ConfigurationError("step needs a deterministic spec, use step_nd")
        cached = self._det_memo.get(t)
        if cached is not None:
            return cached
        if not isinstance(t, Op):
            raise UnboundMetavariableError(t.name)
        operand_behaviors = [self.step(a) for a in t.args]
        if any(isinstance(b, Stuck) for b in operand_behaviors):
            behavior = STUCK_BEHAVIOR
        else:
            W = frozenset(i for i, b in enumerate(operand_behaviors, start=1) if isinstance(b, Reduce))
            rules = lookup(self.spec, t.symbol, W)
            if not rules:
                raise BehaviorError(f"no rule for ({t.symbol}, {sorted(W)})")
            behavior = self._instantiate(rules[0], t, operand_behaviors)
        self._det_memo[t] = behavior
        return behavior

    def step_nd(self, t):
        """
        The behavior set of closed term ``t``.

        Every operand independently picks one of its behaviors; each selection
        induces a W, and every rule for that W contributes one behavior.
        """
        cached = self._nd_memo.get(t)
        if cached is not None:
            return cached
        if not isinstance(t, Op):
            raise UnboundMetavariableError(t.name)
        operand_sets = [sorted(self.step_nd(a), key=behavior_key) for a in t.args]
        result = set()
        for selection in itertools.product(*operand_sets):
            if any(isinstance(b, Stuck) for b in selection):
                result.add(STUCK_BEHAVIOR)
                continue
            W = frozenset(i for i, b in enumerate(selection, start=1) if isinstance(b, Reduce))
            for rule in lookup(self.spec, t.symbol, W):
                result.add(self._instantiate(rule, t, selection))
        behaviors = frozenset(result)
        self._nd_memo[t] = behaviors
        return behaviors

    def behaviors(self, t):
        """Behavior set of ``t``: a singleton in deterministic mode."""
        if self.nondeterministic:
            return self.step_nd(t)
        return frozenset((self.step(t),))

    def _instantiate(self, rule, t, operand_behaviors):
        binding = {}
        for name, role in rule.roles:
            kind = role[0]
            if kind == "operand":
                binding[name] = t.args[role[1] - 1]
            elif kind == "successor":
                binding[name] = operand_behaviors[role[1] - 1].next
            elif kind == "applied":
                binding[name] = self.apply_fun(operand_behaviors[role[1] - 1], t.args[role[2] - 1])
            elif kind == "applied_to_label":
                binding[name] = operand_behaviors[role[1] - 1].template
            else:
                binding[name] = Var(HOLE)
        target = substitute(rule.conclusion, binding)
        if rule.shape == LAB:
            return Fun(target)
        return Reduce(target)

    def apply_fun(self, behavior, arg):
        """Put ``arg`` for every hole of a Fun template."""
        if not isinstance(behavior, Fun):
            raise BehaviorError(f"cannot apply a {behavior.kind} behavior to an argument")
        return plug(behavior.template, arg)

    # -- session helpers used by tracing and bisimulation -------------------

    def render(self, t):
        return render(t)

    def parse(self, src):
        return parse_term(src, self.spec.sig)

    def plug(self, context, t):
        return plug(context, t)

    def default_pool(self, size):
        return enumerate_closed(self.spec.sig, size)

    def sample_context(self, rng, ctx_size, pool):
        """
        Draw a single-hole context of at most ``ctx_size`` nodes.

        The hole is wrapped outward: each layer is a symbol of positive arity
        with the current context in one argument and pool terms elsewhere.
        """
        context, size = Var(HOLE), 1
        wrappers = [(name, arity) for name, arity in self.spec.sig if arity >= 1]
        sized = [(t, term_size(t)) for t in pool]
        if not wrappers:
            return context
        for _ in range(int(rng.integers(0, ctx_size))):
            budget = ctx_size - size - 1
            if budget < 0:
                break
            name, arity = wrappers[int(rng.integers(len(wrappers)))]
            args, spent = [], 0
            for _ in range(arity - 1):
                choices = [t for t, s in sized if s <= budget - spent]
                if not choices:
                    break
                filler = choices[int(rng.integers(len(choices)))]
                args.append(filler)
                spent += term_size(filler)
            if len(args) != arity - 1:
                continue
            args.insert(int(rng.integers(arity)), context)
            context = Op(name, tuple(args))
            size += 1 + spent
        return context

    def memo_size(self):
        return len(self._det_memo) + len(self._nd_memo)


def as_model(spec_or_model):
    """Accept either a validated spec or an existing session."""
    if isinstance(spec_or_model, HOSpec):
        return OperationalModel(spec_or_model)
    return spec_or_model


def step(spec, t):
    return OperationalModel(spec).step(t)


def step_nd(spec, t):
    return OperationalModel(spec).step_nd(t)


def apply_fun(behavior, arg):
    """
    Apply a function behavior of the first-order engine to a closed argument.

    Parameters:
    -----------
    behavior : Fun
        A function behavior
    arg : Term
        Closed argument

    Returns:
    --------
    Term
        The template with ``arg`` in every hole
    """
    if not isinstance(behavior, Fun):
        raise BehaviorError(f"cannot apply a {behavior.kind} behavior to an argument")
    return plug(behavior.template, arg)


# ---------------------------------------------------------------------------
# Tracing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceEvent:
    index: int
    state: object
    kind: str
    successor: object = None


@dataclass(frozen=True)
class Trace:
    events: tuple
    terminal: str

    def __len__(self):
        return len(self.events)

    @property
    def states(self):
        return [event.state for event in self.events]

    @property
    def final_state(self):
        if not self.events:
            return None
        last = self.events[-1]
        return last.successor if last.kind == REDUCE else last.state


def trace(model, t, max_steps):
    """
    Follow reduction edges from ``t``.

    Parameters:
    -----------
    model : HOSpec or model session
        A deterministic specification, an OperationalModel or a LambdaModel
    t : Term
        Start state
    max_steps : int
        Maximum number of events recorded

    Returns:
    --------
    Trace
        Events plus the terminal kind: ``fun``, ``stuck`` or ``cutoff``
    """
    model = as_model(model)
    if max_steps < 0:
        raise ConfigurationError("max_steps must be non-negative")
    if getattr(model, "nondeterministic", False):
        raise ConfigurationError("tracing needs a deterministic model")
    events, state = [], t
    for index in range(max_steps):
        behavior = model.step(state)
        events.append(TraceEvent(index, state, behavior.kind, behavior.payload))
        if not isinstance(behavior, Reduce):
            logger.debug("trace stopped after %d event(s) at a %s behavior", len(events), behavior.kind)
            return Trace(tuple(events), behavior.kind)
        state = behavior.next
    return Trace(tuple(events), CUTOFF)


def trace_document(result, render_fn=render):
    """The compact document ``{"trace": [...], "terminal": ...}``."""
    return {
        "trace": [
            {
                "state": render_fn(event.state),
                "kind": event.kind,
                "next": None if event.successor is None else render_fn(event.successor),
            }
            for event in result.events
        ],
        "terminal": result.terminal,
    }


def trace_frame(result, render_fn=render):
    """The trace as a DataFrame with columns index, state, kind, successor."""
    rows = [
        {
            "index": event.index,
            "state": render_fn(event.state),
            "kind": event.kind,
            "successor": None if event.successor is None else render_fn(event.successor),
        }
        for event in result.events
    ]
    return pd.DataFrame(rows, columns=["index", "state", "kind", "successor"])


def trace_records(result, render_fn=render):
    """Line-delimited JSON records, one per event."""
    frame = trace_frame(result, render_fn)
    if frame.empty:
        return ""
    return frame.to_json(orient="records", lines=True, force_ascii=False)
