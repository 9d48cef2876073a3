"""
Lambda Calculus Module for the HO Semantics Workbench

The untyped lambda calculus in de Bruijn form, with explicit context sizes:

- ``LambdaTerm(ctx, body)``: a term whose free indices are below ``ctx``
  (innermost binder is index 0)
- Renamings and simultaneous substitution, the structure the operational
  model is built on
- Call-by-name and call-by-value steppers with Reduce / Fun / Stuck behaviors
- Bounded strong applicative bisimilarity, its open extension, and the
  coalgebraic characterization that also samples substitutions at every level
- Named and de Bruijn syntax, canonical enumeration, seeded contexts
"""

import functools
import itertools
import logging
import re
from dataclasses import dataclass, field, replace

from lark import Transformer

from .bisim import NO_COUNTEREXAMPLE, BisimChecker, Move, Verdict, check
from .engine import STUCK_BEHAVIOR, Fun, Reduce, Stuck
from .errors import BehaviorError, ConfigurationError, ContextError, LambdaSyntaxError
from .grammar import parse_text, transform

logger = logging.getLogger(__name__)

CBN = "cbn"
CBV = "cbv"
STRATEGIES = (CBN, CBV)


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Lam:
    body: object
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("lam", self.body)))

    def __hash__(self):
        return self._hash


@dataclass(frozen=True)
class App:
    fun: object
    arg: object
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("app", self.fun, self.arg)))

    def __hash__(self):
        return self._hash


@dataclass(frozen=True)
class Hole:
    """The hole of a lambda context."""


HOLE = Hole()


def required_context(body, depth=0):
    """Smallest context size in which ``body`` is well scoped."""
    if isinstance(body, Var):
        return max(body.index - depth + 1, 0)
    if isinstance(body, Lam):
        return required_context(body.body, depth + 1)
    if isinstance(body, App):
        return max(required_context(body.fun, depth), required_context(body.arg, depth))
    return 0


def node_size(body):
    if isinstance(body, Lam):
        return 1 + node_size(body.body)
    if isinstance(body, App):
        return 1 + node_size(body.fun) + node_size(body.arg)
    return 1


@dataclass(frozen=True)
class LambdaTerm:
    """
    A lambda term in context.

    Parameters:
    -----------
    ctx : int
        Number of free variables available
    body : Var, Lam, App or Hole
        De Bruijn tree
    """

    ctx: int
    body: object

    def __post_init__(self):
        if isinstance(self.ctx, bool) or not isinstance(self.ctx, int) or self.ctx < 0:
            raise ContextError(f"context size must be a non-negative integer, got {self.ctx!r}")
        needed = required_context(self.body)
        if needed > self.ctx:
            raise ContextError(f"term needs a context of {needed} but is declared in {self.ctx}")

    @property
    def closed(self):
        return self.ctx == 0

    @property
    def size(self):
        return node_size(self.body)

    def __str__(self):
        return render_lambda(self)


def closed(body):
    return LambdaTerm(0, body)


_SELF_APP = Lam(App(Var(0), Var(0)))
_TRIPLE = Lam(App(App(Var(0), Var(0)), Var(0)))

IDENTITY = closed(Lam(Var(0)))
OMEGA = closed(App(_SELF_APP, _SELF_APP))
THETA = closed(App(_TRIPLE, _TRIPLE))

ALIASES = {"OMEGA": OMEGA, "THETA": THETA, "ID": IDENTITY}


# ---------------------------------------------------------------------------
# Renaming and substitution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Renaming:
    """A total map ``{0..source-1} -> {0..target-1}``."""

    mapping: tuple
    target: int

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(self.mapping))
        for image in self.mapping:
            if not 0 <= image < self.target:
                raise ContextError(f"renaming image {image} outside 0..{self.target - 1}")

    @property
    def source(self):
        return len(self.mapping)

    def then(self, other):
        """``other ∘ self``."""
        if other.source != self.target:
            raise ContextError("renamings do not compose: target and source differ")
        return Renaming(tuple(other.mapping[i] for i in self.mapping), other.target)


def identity_renaming(n):
    return Renaming(tuple(range(n)), n)


def old_renaming(n):
    """Weakening ``n -> n+1`` keeping every index."""
    return Renaming(tuple(range(n)), n + 1)


def shift_renaming(n):
    """Weakening ``n -> n+1`` that makes room for a new innermost variable."""
    return Renaming(tuple(range(1, n + 1)), n + 1)


def swap_renaming(n):
    """Exchange the two newest variables of a context of ``n + 2``."""
    return Renaming((1, 0) + tuple(range(2, n + 2)), n + 2)


def contract_renaming(n):
    """Merge the two newest variables of a context of ``n + 2``."""
    return Renaming((0, 0) + tuple(range(1, n + 1)), n + 1)


def _rename(body, mapping, depth=0):
    if isinstance(body, Var):
        if body.index < depth:
            return body
        return Var(mapping[body.index - depth] + depth)
    if isinstance(body, Lam):
        return Lam(_rename(body.body, mapping, depth + 1))
    if isinstance(body, App):
        return App(_rename(body.fun, mapping, depth), _rename(body.arg, mapping, depth))
    return body


def _lift(body, by, depth=0):
    """Add ``by`` to every free index."""
    if by == 0:
        return body
    if isinstance(body, Var):
        return body if body.index < depth else Var(body.index + by)
    if isinstance(body, Lam):
        return Lam(_lift(body.body, by, depth + 1))
    if isinstance(body, App):
        return App(_lift(body.fun, by, depth), _lift(body.arg, by, depth))
    return body


def rename(t, r):
    """
    Functorial action of a renaming.

    Parameters:
    -----------
    t : LambdaTerm
        Term in context ``r.source``
    r : Renaming
        Total map from ``t.ctx`` to ``r.target``

    Returns:
    --------
    LambdaTerm
        The renamed term in context ``r.target``
    """
    if r.source != t.ctx:
        raise ContextError(f"renaming from {r.source} applied to a term in context {t.ctx}")
    return LambdaTerm(r.target, _rename(t.body, r.mapping))


def weaken(t, m):
    """View ``t`` in the larger context ``m`` (indices unchanged)."""
    if m == t.ctx:
        return t
    return rename(t, Renaming(tuple(range(t.ctx)), m))


def shift(t):
    """Weaken ``t`` under a new innermost binder."""
    return rename(t, shift_renaming(t.ctx))


def _subst(body, images, depth=0):
    if isinstance(body, Var):
        if body.index < depth:
            return body
        return _lift(images[body.index - depth], depth)
    if isinstance(body, Lam):
        return Lam(_subst(body.body, images, depth + 1))
    if isinstance(body, App):
        return App(_subst(body.fun, images, depth), _subst(body.arg, images, depth))
    return body


def subst_sim(t, us, target=None):
    """
    Simultaneous substitution ``t[u0, ..., un-1]``.

    Under a binder the substitution becomes ``[Var 0, shift(u0), ...]``, so
    the freshest variable stays bound.

    Parameters:
    -----------
    t : LambdaTerm
        Term in context n
    us : sequence of LambdaTerm
        Exactly n terms; the result lives in the largest of their contexts
    target : int, optional
        Context of the result (needed when ``us`` is empty)

    Returns:
    --------
    LambdaTerm
        The substituted term
    """
    us = tuple(us)
    if len(us) != t.ctx:
        raise ContextError(f"substitution of {len(us)} term(s) into a term in context {t.ctx}")
    m = max((u.ctx for u in us), default=0)
    if target is not None:
        if target < m:
            raise ContextError(f"substitution target {target} is smaller than the images' context {m}")
        m = target
    return LambdaTerm(m, _subst(t.body, tuple(u.body for u in us)))


def _instantiate(body, arg, depth=0):
    """``body[arg/0]`` for a body in n+1 and an argument in n."""
    if isinstance(body, Var):
        if body.index < depth:
            return body
        if body.index == depth:
            return _lift(arg, depth)
        return Var(body.index - 1)
    if isinstance(body, Lam):
        return Lam(_instantiate(body.body, arg, depth + 1))
    if isinstance(body, App):
        return App(_instantiate(body.fun, arg, depth), _instantiate(body.arg, arg, depth))
    return body


def beta(body, arg):
    """Apply a Fun body in context n+1 to an argument in context n."""
    if body.ctx != arg.ctx + 1:
        raise ContextError(f"function body in context {body.ctx} applied to an argument in context {arg.ctx}")
    return LambdaTerm(arg.ctx, _instantiate(body.body, arg.body))


# ---------------------------------------------------------------------------
# Steppers
# ---------------------------------------------------------------------------

def _cbn(body):
    if isinstance(body, Lam):
        return Fun(body.body)
    if isinstance(body, App):
        head = _cbn(body.fun)
        if isinstance(head, Reduce):
            return Reduce(App(head.next, body.arg))
        if isinstance(head, Fun):
            return Reduce(_instantiate(head.template, body.arg))
        return STUCK_BEHAVIOR
    return STUCK_BEHAVIOR


def _cbv(body):
    if isinstance(body, Lam):
        return Fun(body.body)
    if isinstance(body, App):
        head = _cbv(body.fun)
        if isinstance(head, Reduce):
            return Reduce(App(head.next, body.arg))
        if isinstance(head, Stuck):
            return STUCK_BEHAVIOR
        argument = _cbv(body.arg)
        if isinstance(argument, Reduce):
            return Reduce(App(body.fun, argument.next))
        return Reduce(_instantiate(head.template, body.arg))
    return STUCK_BEHAVIOR


def _in_context(t, raw):
    if isinstance(raw, Reduce):
        behavior = Reduce(LambdaTerm(t.ctx, raw.next))
    elif isinstance(raw, Fun):
        behavior = Fun(LambdaTerm(t.ctx + 1, raw.template))
    else:
        behavior = STUCK_BEHAVIOR
    if __debug__:
        if isinstance(behavior, Reduce) and behavior.next.ctx != t.ctx:
            raise ContextError("reduct left the context of its source")
        if isinstance(behavior, Fun) and behavior.template.ctx != t.ctx + 1:
            raise ContextError("function body is not in the extended context")
    return behavior


def step_cbn(t):
    """
    Call-by-name behavior of ``t``.

    Returns:
    --------
    Reduce, Fun or Stuck
        Reduce in context n, Fun with a body in n+1, Stuck for a variable head
    """
    return _in_context(t, _cbn(t.body))


def step_cbv(t):
    """Call-by-value behavior of ``t``; a Fun head applied to a stuck argument still contracts."""
    return _in_context(t, _cbv(t.body))


_STEPPERS = {CBN: step_cbn, CBV: step_cbv}


def is_value(t):
    return isinstance(t.body, Lam)


def head_shape(t):
    """``abstraction``, ``neutral`` (variable head) or ``redex`` along the left spine."""
    node = t.body
    if isinstance(node, Lam):
        return "abstraction"
    while isinstance(node, App):
        node = node.fun
    return "neutral" if isinstance(node, Var) else "redex"


# ---------------------------------------------------------------------------
# Contexts and enumeration
# ---------------------------------------------------------------------------

def _plug(body, t):
    if isinstance(body, Hole):
        return t
    if isinstance(body, Lam):
        return Lam(_plug(body.body, t))
    if isinstance(body, App):
        return App(_plug(body.fun, t), _plug(body.arg, t))
    return body


def plug_lambda(context, t):
    """Put ``t`` into the hole of ``context``; binders around the hole capture."""
    return LambdaTerm(max(context.ctx, t.ctx), _plug(context.body, t.body))


def sample_lambda_context(rng, ctx_size, pool):
    """
    Draw a single-hole context of at most ``ctx_size`` nodes.

    Each layer is ``λ.C``, ``C e`` or ``e C`` with ``e`` from the pool.
    """
    body, size = HOLE, 1
    sized = [(u.body, node_size(u.body)) for u in pool]
    for _ in range(int(rng.integers(0, ctx_size))):
        budget = ctx_size - size - 1
        if budget < 0:
            break
        shape = int(rng.integers(3))
        if shape == 0:
            body, size = Lam(body), size + 1
            continue
        choices = [(u, s) for u, s in sized if s <= budget]
        if not choices:
            continue
        filler, filler_size = choices[int(rng.integers(len(choices)))]
        body = App(body, filler) if shape == 1 else App(filler, body)
        size += 1 + filler_size
    return closed(body)


@functools.lru_cache(maxsize=None)
def _terms_of_size(ctx, size):
    if size == 1:
        return tuple(Var(i) for i in range(ctx))
    found = [Lam(b) for b in _terms_of_size(ctx + 1, size - 1)]
    for left in range(1, size - 1):
        for fun in _terms_of_size(ctx, left):
            for arg in _terms_of_size(ctx, size - 1 - left):
                found.append(App(fun, arg))
    return tuple(found)


def enumerate_lambda(n, max_size):
    """
    All terms in context ``n`` with at most ``max_size`` nodes.

    Ordered by size, then Var < Lam < App, indices ascending.
    """
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    result = [LambdaTerm(n, body) for size in range(1, max_size + 1) for body in _terms_of_size(n, size)]
    logger.debug("enumerated %d lambda term(s) in context %d up to size %d", len(result), n, max_size)
    return result


def close_over(n, pool, limit=None):
    """Closing tuples from ``pool^n`` in canonical order, at most ``limit`` of them."""
    tuples = itertools.product(tuple(pool), repeat=n)
    if limit is not None:
        tuples = itertools.islice(tuples, limit)
    return list(tuples)


# ---------------------------------------------------------------------------
# Syntax
# ---------------------------------------------------------------------------

class _NamedBuilder(Transformer):
    def var(self, children):
        return ("var", str(children[0]))

    def abstraction(self, children):
        return ("lam", str(children[0]), children[1])

    def app(self, children):
        return ("app", children[0], children[1])


class _DeBruijnBuilder(Transformer):
    def dvar(self, children):
        return Var(int(children[0]))

    def dlam(self, children):
        return Lam(children[0])

    def dapp(self, children):
        return App(children[0], children[1])

    def header(self, children):
        return ("ctx", int(children[0]))

    def start(self, children):
        if len(children) == 2:
            return children[0][1], children[1]
        return None, children[0]


def _resolve(ast, bound, free, fixed_free):
    tag = ast[0]
    if tag == "var":
        name = ast[1]
        if name in bound:
            return Var(bound.index(name))
        if name not in free:
            if fixed_free:
                raise LambdaSyntaxError(f"unbound name '{name}'")
            free.append(name)
        return Var(len(bound) + free.index(name))
    if tag == "lam":
        return Lam(_resolve(ast[2], [ast[1]] + bound, free, fixed_free))
    return App(_resolve(ast[1], bound, free, fixed_free), _resolve(ast[2], bound, free, fixed_free))


# every de Bruijn term has an @ leaf, and named syntax has no @ at all
_DEBRUIJN_MARK = re.compile(r"^\s*ctx\s*=|@")


def parse_lambda(src, mode="auto", free_names=None, allow_free=True):
    """
    Parse a lambda term.

    Parameters:
    -----------
    src : str
        ``\\x. x x`` (named) or ``ctx=1; app(@0, lam(@0))`` (de Bruijn)
    mode : str
        ``named``, ``debruijn`` or ``auto``
    free_names : list of str, optional
        Named syntax: fixed order of the free names; other free names are errors
    allow_free : bool
        Named syntax: whether free names are accepted at all

    Returns:
    --------
    LambdaTerm
        Free names take context positions in first-use order
    """
    if mode == "auto":
        mode = "debruijn" if _DEBRUIJN_MARK.search(src) else "named"
    if mode == "debruijn":
        tree = parse_text("debruijn", src, error_cls=LambdaSyntaxError)
        ctx, body = transform(_DeBruijnBuilder(), tree)
        if ctx is None:
            if required_context(body) > 0:
                raise LambdaSyntaxError("open de Bruijn terms need a ctx=N header")
            ctx = 0
        return LambdaTerm(ctx, body)
    if mode != "named":
        raise ValueError(f"unknown lambda syntax '{mode}'")
    ast = transform(_NamedBuilder(), parse_text("named", src, error_cls=LambdaSyntaxError))
    free = list(free_names) if free_names is not None else []
    body = _resolve(ast, [], free, fixed_free=free_names is not None)
    if free and not allow_free and free_names is None:
        raise LambdaSyntaxError(f"unbound name(s) {', '.join(free)} in a closed term")
    return LambdaTerm(len(free), body)


def _debruijn(body):
    if isinstance(body, Var):
        return f"@{body.index}"
    if isinstance(body, Lam):
        return f"lam({_debruijn(body.body)})"
    if isinstance(body, App):
        return f"app({_debruijn(body.fun)},{_debruijn(body.arg)})"
    return "·"


_BINDER_NAMES = ("x", "y", "z", "u", "w")


def _binder_name(depth):
    base = _BINDER_NAMES[depth % len(_BINDER_NAMES)]
    round_ = depth // len(_BINDER_NAMES)
    return base if round_ == 0 else f"{base}{round_}"


def _named(body, names, depth, wrap_lam=False):
    if isinstance(body, Var):
        return names[body.index]
    if isinstance(body, Lam):
        name = _binder_name(depth)
        text = f"\\{name}. {_named(body.body, [name] + names, depth + 1)}"
        return f"({text})" if wrap_lam else text
    if isinstance(body, App):
        fun = _named(body.fun, names, depth, wrap_lam=True)
        arg = _named(body.arg, names, depth, wrap_lam=True)
        if isinstance(body.arg, App):
            arg = f"({arg})"
        return f"{fun} {arg}"
    return "·"


def render_lambda(t, named=False):
    """
    Text of ``t``.

    De Bruijn form by default (``ctx=N; `` prefix for open terms); with
    ``named=True`` binders are named and free variables are ``v0, v1, ...``.
    """
    if named:
        return _named(t.body, [f"v{i}" for i in range(t.ctx)], 0)
    text = _debruijn(t.body)
    return f"ctx={t.ctx}; {text}" if t.ctx else text


def resolve_term(src, allow_free=True):
    """Parse ``src`` or expand one of the aliases OMEGA, THETA, ID."""
    alias = ALIASES.get(src.strip())
    if alias is not None:
        return alias
    return parse_lambda(src, allow_free=allow_free)


# ---------------------------------------------------------------------------
# Model session
# ---------------------------------------------------------------------------

class LambdaModel:
    """
    Evaluation session for one strategy, usable wherever an OperationalModel is.

    Parameters:
    -----------
    strategy : str
        ``cbn`` or ``cbv``
    """

    nondeterministic = False

    def __init__(self, strategy=CBN):
        if strategy not in STRATEGIES:
            raise ConfigurationError(f"unknown strategy '{strategy}'")
        self.strategy = strategy
        self._stepper = _STEPPERS[strategy]
        self._memo = {}

    def step(self, t):
        cached = self._memo.get(t)
        if cached is None:
            cached = self._stepper(t)
            self._memo[t] = cached
        return cached

    def behaviors(self, t):
        return frozenset((self.step(t),))

    def apply_fun(self, behavior, arg):
        if not isinstance(behavior, Fun):
            raise BehaviorError(f"cannot apply a {behavior.kind} behavior to an argument")
        body = behavior.template
        if arg.ctx > body.ctx - 1:
            raise ContextError(f"argument in context {arg.ctx} for a function in context {body.ctx - 1}")
        return beta(body, weaken(arg, body.ctx - 1))

    def substitute(self, t, us):
        return subst_sim(t, us)

    def render(self, t):
        return render_lambda(t)

    def parse(self, src):
        return resolve_term(src)

    def plug(self, context, t):
        return plug_lambda(context, t)

    def default_pool(self, size):
        return enumerate_lambda(0, size)

    def sample_context(self, rng, ctx_size, pool):
        return sample_lambda_context(rng, ctx_size, pool)


def _as_lambda_model(strategy):
    if isinstance(strategy, LambdaModel):
        return strategy
    return LambdaModel(strategy)


# ---------------------------------------------------------------------------
# Applicative bisimilarity
# ---------------------------------------------------------------------------

def app_bisim_closed(t1, t2, strategy, cfg):
    """
    Bounded strong applicative bisimilarity of closed terms.

    Reductions must be matched by reductions, abstractions by abstractions
    related on every pool argument.
    """
    if t1.ctx or t2.ctx:
        raise ContextError("applicative bisimilarity compares closed terms; use app_bisim_open")
    return check(_as_lambda_model(strategy), t1, t2, cfg)


def app_bisim_open(t1, t2, strategy, cfg, closing_pool, limit):
    """
    Open extension: compare ``t1[ū]`` and ``t2[ū]`` for closing tuples ū.

    Parameters:
    -----------
    t1, t2 : LambdaTerm
        Terms in the same context n
    strategy : str or LambdaModel
        Evaluation strategy
    cfg : CheckConfig
        Bounds of each closed check
    closing_pool : sequence of LambdaTerm
        Closed terms the tuples are drawn from
    limit : int
        Maximum number of tuples, taken in canonical order

    Returns:
    --------
    Verdict
        The first Distinguished verdict (with its closing tuple) or
        no_counterexample annotated with the number of tuples tried
    """
    if t1.ctx != t2.ctx:
        raise ContextError(f"terms live in different contexts ({t1.ctx} and {t2.ctx})")
    if limit < 1:
        raise ConfigurationError("the closing-tuple limit must be positive")
    model = _as_lambda_model(strategy)
    n = t1.ctx
    if n == 0:
        return replace(app_bisim_closed(t1, t2, model, cfg), tuples_tried=1)
    if not closing_pool:
        raise ConfigurationError("open terms need a non-empty closing pool")
    tried = 0
    for us in close_over(n, closing_pool, limit):
        tried += 1
        verdict = check(model, subst_sim(t1, us), subst_sim(t2, us), cfg)
        if verdict.distinguished:
            return replace(verdict, closing=tuple(us), tuples_tried=tried)
    return Verdict(NO_COUNTEREXAMPLE, cfg.depth, cfg.pool_size, tuples_tried=tried)


class _CoalgebraicChecker(BisimChecker):
    """Open terms compared directly, plus sampled closing substitutions at every level."""

    def __init__(self, model, cfg, subst_pool, budget):
        super().__init__(model, cfg)
        self.subst_pool = tuple(subst_pool)
        self.budget = budget
        self._arguments = {}
        self._tuples = {}

    def arguments(self, left, right):
        k = left.ctx
        if k not in self._arguments:
            args = [weaken(a, k) for a in self.cfg.arguments]
            args += [LambdaTerm(k, Var(i)) for i in range(k)]
            self._arguments[k] = tuple(args)
        return self._arguments[k]

    def side_moves(self, left, right):
        k = left.ctx
        if k == 0:
            return
        if k not in self._tuples:
            self._tuples[k] = close_over(k, self.subst_pool, self.budget)
        for us in self._tuples[k]:
            l2, r2 = subst_sim(left, us), subst_sim(right, us)
            yield Move("subst", left=l2, right=r2, args=tuple(us)), l2, r2


def coalg_bisim(t1, t2, strategy, cfg, subst_pool, renaming_budget):
    """
    Bounded check of the coalgebraic bisimulation clauses on open terms.

    Behaviors are compared in the terms' own context (function bodies are
    applied to pool terms and to the context's variables), and at every
    level up to ``renaming_budget`` closing substitutions from ``subst_pool``
    are followed as ``subst`` moves.
    """
    if t1.ctx != t2.ctx:
        raise ContextError(f"terms live in different contexts ({t1.ctx} and {t2.ctx})")
    if renaming_budget < 1:
        raise ConfigurationError("the substitution budget must be positive")
    if t1.ctx and not subst_pool:
        raise ConfigurationError("open terms need a non-empty substitution pool")
    checker = _CoalgebraicChecker(_as_lambda_model(strategy), cfg, subst_pool, renaming_budget)
    return checker.run(t1, t2)
