"""
Bounded Bisimilarity Module for the HO Semantics Workbench

This module checks bounded strong bisimilarity between closed terms of an
operational model and produces replayable witnesses:

- ``check``: deterministic models, one behavior per term
- ``check_nd``: nondeterministic models, behavior sets matched both ways
  with backtracking over candidate partners
- ``replay``: re-executes a witness against the model
- ``congruence_search``: runs ``check`` inside seeded single-hole contexts

Positive verdicts name their bounds (depth and argument pool); they never
claim full bisimilarity. A pair already on the current path is assumed
related, structurally equal terms are related, and depth 0 succeeds.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .engine import Fun, Reduce, as_model, behavior_key, kinds
from .errors import ConfigurationError, CongruenceRefusedError

logger = logging.getLogger(__name__)

DISTINGUISHED = "distinguished"
NO_COUNTEREXAMPLE = "no_counterexample"

KIND_MISMATCH = "kind"
ND_UNMATCHED = "nd_unmatched"

MAX_SEED = 2 ** 64


@dataclass(frozen=True)
class CheckConfig:
    """
    Bounds of a bisimilarity check.

    Parameters:
    -----------
    depth : int
        Maximum number of moves explored, at least 1
    pool : tuple
        Closed argument terms for function behaviors
    extra_args : tuple
        User-supplied arguments appended to the pool
    """

    depth: int
    pool: tuple = ()
    extra_args: tuple = ()

    def __post_init__(self):
        if isinstance(self.depth, bool) or not isinstance(self.depth, (int, np.integer)) or self.depth < 1:
            raise ConfigurationError(f"depth must be a positive integer, got {self.depth!r}")
        object.__setattr__(self, "pool", tuple(self.pool))
        object.__setattr__(self, "extra_args", tuple(self.extra_args))

    @property
    def arguments(self):
        """Pool followed by the extra arguments, duplicates dropped."""
        seen, args = set(), []
        for arg in self.pool + self.extra_args:
            if arg not in seen:
                seen.add(arg)
                args.append(arg)
        return tuple(args)

    @property
    def pool_size(self):
        return len(self.arguments)

    def with_depth(self, depth):
        return CheckConfig(depth, self.pool, self.extra_args)


@dataclass(frozen=True)
class Move:
    """
    One step of a witness.

    ``move`` is ``reduce``, ``apply`` (with ``arg``) or ``subst`` (with the
    closing tuple ``args``). ``left``/``right`` are the states reached.
    """

    move: str
    arg: object = None
    left: object = None
    right: object = None
    args: tuple = None

    def to_document(self, render, nondeterministic=False):
        doc = {"move": self.move}
        if self.move == "apply":
            doc["arg"] = render(self.arg)
        if self.move == "subst":
            doc["args"] = [render(u) for u in self.args]
        if nondeterministic:
            doc["left"] = render(self.left)
            doc["right"] = render(self.right)
        return doc


@dataclass(frozen=True)
class Verdict:
    verdict: str
    depth: int
    pool_size: int
    witness: tuple = ()
    mismatch: str = None
    detail: str = None
    closing: tuple = None
    tuples_tried: int = None
    nondeterministic: bool = field(default=False, compare=False)

    @property
    def distinguished(self):
        return self.verdict == DISTINGUISHED

    def to_document(self, render):
        """The verdict document; ``render`` turns terms into text."""
        doc = {
            "verdict": self.verdict,
            "depth": self.depth,
            "pool_size": self.pool_size,
        }
        if self.distinguished:
            doc["witness"] = [m.to_document(render, self.nondeterministic) for m in self.witness]
            doc["mismatch"] = self.mismatch
            if self.detail:
                doc["detail"] = self.detail
        if self.closing is not None:
            doc["closing"] = [render(u) for u in self.closing]
        if self.tuples_tried is not None:
            doc["tuples_tried"] = self.tuples_tried
        return doc

    @classmethod
    def from_document(cls, document, parse, nondeterministic=False):
        """
        Rebuild a verdict from its document.

        Parameters:
        -----------
        document : dict
            Output of ``to_document``
        parse : callable
            Turns rendered terms back into terms
        nondeterministic : bool
            Whether witness moves carry the reached states
        """
        moves = []
        for step in document.get("witness", ()):
            kind = step["move"]
            if kind not in ("reduce", "apply", "subst"):
                raise ConfigurationError(f"unknown witness move '{kind}'")
            moves.append(Move(
                kind,
                arg=parse(step["arg"]) if kind == "apply" else None,
                left=parse(step["left"]) if "left" in step else None,
                right=parse(step["right"]) if "right" in step else None,
                args=tuple(parse(u) for u in step["args"]) if kind == "subst" else None,
            ))
        closing = document.get("closing")
        return cls(
            document["verdict"], document["depth"], document["pool_size"], tuple(moves),
            document.get("mismatch"), document.get("detail"),
            None if closing is None else tuple(parse(u) for u in closing),
            document.get("tuples_tried"), nondeterministic=nondeterministic,
        )

    def describe(self, render):
        """One-line human summary."""
        if not self.distinguished:
            text = f"✅ no counterexample within depth {self.depth}, pool of {self.pool_size}"
            if self.tuples_tried is not None:
                text += f", {self.tuples_tried} closing tuple(s)"
            return text
        steps = []
        for m in self.witness:
            if m.move == "apply":
                steps.append(f"apply({render(m.arg)})")
            elif m.move == "subst":
                steps.append(f"subst({', '.join(render(u) for u in m.args)})")
            else:
                steps.append(m.move)
        path = " ; ".join(steps) if steps else "(immediately)"
        return f"❌ distinguished: {path} -> {self.mismatch} mismatch ({self.detail})"


@dataclass(frozen=True)
class _Failure:
    moves: tuple
    mismatch: str
    detail: str

    def behind(self, move):
        return _Failure((move,) + self.moves, self.mismatch, self.detail)


# ---------------------------------------------------------------------------
# Checkers
# ---------------------------------------------------------------------------

class BisimChecker:
    """
    Bounded on-the-fly checker over a model session.

    Subclasses may widen the argument set for function behaviors
    (``arguments``) or add moves explored after the behavior clauses
    (``side_moves``).
    """

    forget_on_failure = False

    def __init__(self, model, cfg):
        self.model = model
        self.cfg = cfg
        self.stack = set()
        self.verified = {}
        self.refuted = {}
        self.visits = 0

    def arguments(self, left, right):
        return self.cfg.arguments

    def side_moves(self, left, right):
        return ()

    def run(self, p, q):
        failure = self.visit(p, q, self.cfg.depth)
        logger.debug("bisimulation check visited %d pair(s)", self.visits)
        return self.verdict(failure)

    def verdict(self, failure, **extra):
        nondeterministic = getattr(self.model, "nondeterministic", False)
        if failure is None:
            return Verdict(NO_COUNTEREXAMPLE, self.cfg.depth, self.cfg.pool_size,
                           nondeterministic=nondeterministic, **extra)
        return Verdict(DISTINGUISHED, self.cfg.depth, self.cfg.pool_size, failure.moves,
                       failure.mismatch, failure.detail, nondeterministic=nondeterministic, **extra)

    def visit(self, p, q, depth):
        """None when no counterexample is found within ``depth``, else a failure."""
        if p == q or depth == 0 or (p, q) in self.stack:
            return None
        if self.verified.get((p, q), -1) >= depth:
            return None
        known = self.refuted.get((p, q))
        if known is not None and len(known.moves) < depth:
            return known
        self.visits += 1
        self.stack.add((p, q))
        try:
            failure = self.compare(p, q, depth)
        finally:
            self.stack.discard((p, q))
        if failure is None:
            self.verified[(p, q)] = max(depth, self.verified.get((p, q), -1))
        else:
            self.refuted[(p, q)] = failure
            if self.forget_on_failure:
                self.verified.clear()
        return failure

    def compare(self, p, q, depth):
        bp, bq = self.model.step(p), self.model.step(q)
        if bp.kind != bq.kind:
            return _Failure((), KIND_MISMATCH, f"{bp.kind} vs {bq.kind}")
        failure = self.match_pair(bp, bq, p, q, depth)
        if failure is not None:
            return failure
        # side moves keep the depth: they must reach pairs without side moves
        for move, left, right in self.side_moves(p, q):
            failure = self.visit(left, right, depth)
            if failure is not None:
                return failure.behind(move)
        return None

    def match_pair(self, bp, bq, p, q, depth):
        """Recurse into the successors of two behaviors of the same kind."""
        if isinstance(bp, Reduce):
            failure = self.visit(bp.next, bq.next, depth - 1)
            if failure is not None:
                return failure.behind(Move("reduce", left=bp.next, right=bq.next))
            return None
        if isinstance(bp, Fun):
            args = self.arguments(p, q)
            if not args:
                raise ConfigurationError("the argument pool is empty but both sides are functions")
            for arg in args:
                left = self.model.apply_fun(bp, arg)
                right = self.model.apply_fun(bq, arg)
                failure = self.visit(left, right, depth - 1)
                if failure is not None:
                    return failure.behind(Move("apply", arg=arg, left=left, right=right))
        return None


class NondeterministicChecker(BisimChecker):
    """Set matching: every behavior on one side needs a related partner on the other."""

    # a failed partner does not abort the search, so successes proven under
    # assumptions on the path may be stale
    forget_on_failure = True

    def compare(self, p, q, depth):
        bp, bq = self.model.behaviors(p), self.model.behaviors(q)
        if kinds(bp) != kinds(bq):
            detail = f"{{{', '.join(sorted(kinds(bp)))}}} vs {{{', '.join(sorted(kinds(bq)))}}}"
            return _Failure((), ND_UNMATCHED, detail)
        return self._unmatched(bp, bq, p, q, depth, flipped=False) or \
            self._unmatched(bq, bp, q, p, depth, flipped=True)

    def _unmatched(self, mine, theirs, own, other, depth, flipped):
        key = lambda b: behavior_key(b, self.model.render)
        for behavior in sorted(mine, key=key):
            first_failure = None
            for partner in sorted((b for b in theirs if b.kind == behavior.kind), key=key):
                if flipped:
                    failure = self.match_pair(partner, behavior, other, own, depth)
                else:
                    failure = self.match_pair(behavior, partner, own, other, depth)
                if failure is None:
                    break
                if first_failure is None:
                    first_failure = failure
            else:
                return first_failure
        return None


def check(model, p, q, cfg):
    """
    Bounded strong bisimilarity check for a deterministic model.

    Parameters:
    -----------
    model : HOSpec or model session
        Deterministic specification, OperationalModel or LambdaModel
    p, q : Term
        Closed terms
    cfg : CheckConfig
        Depth and argument pool

    Returns:
    --------
    Verdict
        ``distinguished`` with a replayable witness, or ``no_counterexample``
    """
    model = as_model(model)
    if getattr(model, "nondeterministic", False):
        raise ConfigurationError("check needs a deterministic model, use check_nd")
    return BisimChecker(model, cfg).run(p, q)


def check_nd(model, p, q, cfg):
    """Bounded bisimilarity check for a nondeterministic model (behavior sets)."""
    model = as_model(model)
    return NondeterministicChecker(model, cfg).run(p, q)


def check_any(model, p, q, cfg):
    """``check_nd`` for nondeterministic models, ``check`` otherwise."""
    model = as_model(model)
    if getattr(model, "nondeterministic", False):
        return check_nd(model, p, q, cfg)
    return check(model, p, q, cfg)


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------

def _replay_nd_move(model, move, left, right):
    bl, br = model.behaviors(left), model.behaviors(right)
    if move.move == "reduce":
        return Reduce(move.left) in bl and Reduce(move.right) in br
    if move.move == "apply":
        ok_left = any(isinstance(b, Fun) and model.apply_fun(b, move.arg) == move.left for b in bl)
        ok_right = any(isinstance(b, Fun) and model.apply_fun(b, move.arg) == move.right for b in br)
        return ok_left and ok_right
    return False


def replay(model, p, q, verdict):
    """
    Re-execute a Distinguished witness from (p, q).

    Returns:
    --------
    bool
        True iff every move is legal and the final pair shows a genuine
        mismatch (different kinds, or for sets, different kind sets)
    """
    model = as_model(model)
    if not verdict.distinguished:
        return False
    left, right = p, q
    if verdict.closing is not None:
        left = model.substitute(left, verdict.closing)
        right = model.substitute(right, verdict.closing)
    nondeterministic = getattr(model, "nondeterministic", False)
    for move in verdict.witness:
        if move.move == "subst":
            left = model.substitute(left, move.args)
            right = model.substitute(right, move.args)
            continue
        if nondeterministic:
            if not _replay_nd_move(model, move, left, right):
                logger.debug("replay failed at %s move", move.move)
                return False
            left, right = move.left, move.right
            continue
        bl, br = model.step(left), model.step(right)
        expected = Reduce if move.move == "reduce" else Fun
        if not (isinstance(bl, expected) and isinstance(br, expected)):
            logger.debug("replay failed at %s move", move.move)
            return False
        if move.move == "reduce":
            left, right = bl.next, br.next
        else:
            left, right = model.apply_fun(bl, move.arg), model.apply_fun(br, move.arg)
    if nondeterministic:
        return kinds(model.behaviors(left)) != kinds(model.behaviors(right))
    return model.step(left).kind != model.step(right).kind



# ---------------------------------------------------------------------------
# Congruence probing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Anomaly:
    context: object
    verdict: Verdict


@dataclass(frozen=True)
class CongruenceReport:
    anomalies: tuple
    contexts_tried: int
    seed: int
    contexts: tuple = field(default=(), compare=False, repr=False)

    @property
    def clean(self):
        return not self.anomalies

    def to_document(self, render):
        return {
            "anomalies": [
                {
                    "context": render(a.context),
                    "witness": [m.to_document(render, a.verdict.nondeterministic) for m in a.verdict.witness],
                }
                for a in self.anomalies
            ],
            "contexts_tried": self.contexts_tried,
            "seed": self.seed,
        }

    def frame(self, render):
        """Anomalies as a DataFrame with columns context, mismatch, witness_length."""
        rows = [
            {"context": render(a.context), "mismatch": a.verdict.mismatch,
             "witness_length": len(a.verdict.witness)}
            for a in self.anomalies
        ]
        return pd.DataFrame(rows, columns=["context", "mismatch", "witness_length"])


def _validate_congruence(n_contexts, ctx_size, seed):
    for name, value in (("n_contexts", n_contexts), ("ctx_size", ctx_size)):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
            raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < MAX_SEED:
        raise ConfigurationError(f"seed must be an integer in [0, 2**64), got {seed!r}")


def sample_contexts(model, n_contexts, ctx_size, pool, seed):
    """The ``n_contexts`` contexts a congruence search with this seed uses, in order."""
    rng = np.random.default_rng(seed)
    return [model.sample_context(rng, ctx_size, pool) for _ in range(n_contexts)]


def congruence_search(model, p, q, n_contexts, ctx_size, cfg, seed, contexts=None):
    """
    Look for contexts that separate a pair the checker cannot distinguish.

    Parameters:
    -----------
    model : HOSpec or model session
        The operational model
    p, q : Term
        Closed terms; ``check(p, q, cfg)`` must not be Distinguished
    n_contexts : int
        Number of sampled contexts
    ctx_size : int
        Maximum context size in nodes
    cfg : CheckConfig
        Bounds of every check; its pool also fills the contexts
    seed : int
        Seed of the context sampler, 0 <= seed < 2**64
    contexts : list, optional
        Explicit contexts used instead of sampled ones

    Returns:
    --------
    CongruenceReport
        Every context in which the pair is distinguished, with its witness
    """
    model = as_model(model)
    _validate_congruence(n_contexts, ctx_size, seed)
    base = check_any(model, p, q, cfg)
    if base.distinguished:
        raise CongruenceRefusedError(base)
    if contexts is None:
        contexts = sample_contexts(model, n_contexts, ctx_size, cfg.arguments, seed)
    anomalies = []
    for index, context in enumerate(contexts):
        verdict = check_any(model, model.plug(context, p), model.plug(context, q), cfg)
        if verdict.distinguished:
            logger.warning("⚠️ context %d separates the pair: %s", index, model.render(context))
            anomalies.append(Anomaly(context, verdict))
    logger.info("🔍 checked %d context(s), %d anomal%s", len(contexts), len(anomalies),
                "y" if len(anomalies) == 1 else "ies")
    return CongruenceReport(tuple(anomalies), len(contexts), int(seed), tuple(contexts))
