"""
First-Order Term Module for the HO Semantics Workbench

Terms over an algebraic signature, the raw material of every HO specification:

- ``Signature``: operation symbols with arities, in declaration order
- ``Var`` / ``Op``: immutable terms with structural equality (usable as memo keys)
- parsing and rendering (``parse_term`` / ``render``)
- simultaneous substitution of metavariables and single-hole contexts
- canonical bounded enumeration of closed terms

The hole of a context is the reserved metavariable ``·`` (ASCII alias ``_HOLE_``).
"""

import itertools
import logging
from dataclasses import dataclass, field

from lark import Transformer

from .errors import ArityError, TermSyntaxError, UnboundMetavariableError, UnknownSymbolError
from .grammar import parse_text, token_position, transform

logger = logging.getLogger(__name__)

HOLE = "·"
HOLE_ALIAS = "_HOLE_"
APP = "app"


@dataclass(frozen=True)
class Signature:
    """
    An algebraic signature.

    Parameters:
    -----------
    ops : tuple of (str, int)
        Symbol names with their arities, in declaration order
    """

    ops: tuple

    def __post_init__(self):
        seen = set()
        for name, arity in self.ops:
            if not isinstance(name, str) or not name:
                raise ValueError("symbol names must be non-empty strings")
            if name in seen:
                raise ValueError(f"symbol '{name}' declared twice")
            if isinstance(arity, bool) or not isinstance(arity, int) or arity < 0:
                raise ValueError(f"symbol '{name}' has invalid arity {arity!r}")
            seen.add(name)
        object.__setattr__(self, "_arity", dict(self.ops))
        object.__setattr__(self, "_index", {name: i for i, (name, _) in enumerate(self.ops)})

    @classmethod
    def of(cls, **arities):
        return cls(tuple(arities.items()))

    @classmethod
    def from_pairs(cls, pairs):
        return cls(tuple((name, arity) for name, arity in pairs))

    def __contains__(self, name):
        return name in self._arity

    def __iter__(self):
        return iter(self.ops)

    def __len__(self):
        return len(self.ops)

    def arity(self, name):
        try:
            return self._arity[name]
        except KeyError:
            raise UnknownSymbolError(name) from None

    def index(self, name):
        return self._index[name]

    @property
    def names(self):
        return tuple(name for name, _ in self.ops)

    @property
    def constants(self):
        return tuple(name for name, arity in self.ops if arity == 0)

    @property
    def has_app(self):
        return self._arity.get(APP) == 2

    def extend(self, *pairs):
        return Signature(self.ops + tuple(pairs))


@dataclass(frozen=True)
class Var:
    """A metavariable. ``Var(HOLE)`` is the hole of a context or template."""

    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Op:
    """An operation symbol applied to exactly ``arity`` argument terms."""

    symbol: str
    args: tuple = ()
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "_hash", hash((self.symbol, self.args)))

    def __hash__(self):
        return self._hash

    def __str__(self):
        return render(self)


def const(symbol):
    return Op(symbol, ())


def app(fun, arg):
    return Op(APP, (fun, arg))


def mk(sig, symbol, *args):
    """Build ``symbol(args)`` checked against ``sig``."""
    expected = sig.arity(symbol)
    if expected != len(args):
        raise ArityError(symbol, expected, len(args))
    return Op(symbol, tuple(args))


# ---------------------------------------------------------------------------
# Inspection
# ---------------------------------------------------------------------------

def term_size(t):
    """Number of nodes of ``t``."""
    if isinstance(t, Var):
        return 1
    return 1 + sum(term_size(a) for a in t.args)


def variables(t):
    """Set of metavariable names occurring in ``t``."""
    if isinstance(t, Var):
        return {t.name}
    found = set()
    for a in t.args:
        found |= variables(a)
    return found


def is_closed(t):
    if isinstance(t, Var):
        return False
    return all(is_closed(a) for a in t.args)


def hole_count(t):
    if isinstance(t, Var):
        return 1 if t.name == HOLE else 0
    return sum(hole_count(a) for a in t.args)


def check_term(t, sig):
    """Raise if ``t`` uses a symbol outside ``sig`` or with the wrong arity."""
    if isinstance(t, Var):
        return
    expected = sig.arity(t.symbol)
    if expected != len(t.args):
        raise ArityError(t.symbol, expected, len(t.args))
    for a in t.args:
        check_term(a, sig)


def term_key(t, sig):
    """Canonical sort key: size first, then symbol declaration order, then arguments."""
    if isinstance(t, Var):
        return (1, -1, t.name)
    return (term_size(t), sig.index(t.symbol), tuple(term_key(a, sig) for a in t.args))


# ---------------------------------------------------------------------------
# Substitution and contexts
# ---------------------------------------------------------------------------

def substitute(t, binding):
    """
    Simultaneously replace the metavariables of ``t``.

    Parameters:
    -----------
    t : Var or Op
        An open term
    binding : dict
        Metavariable name -> Term; must cover every metavariable of ``t``

    Returns:
    --------
    Term
        The instantiated term
    """
    if isinstance(t, Var):
        try:
            return binding[t.name]
        except KeyError:
            raise UnboundMetavariableError(t.name) from None
    if not t.args:
        return t
    return Op(t.symbol, tuple(substitute(a, binding) for a in t.args))


def replace_vars(t, binding):
    """Like ``substitute`` but leaves metavariables outside the binding untouched."""
    if isinstance(t, Var):
        return binding.get(t.name, t)
    if not t.args:
        return t
    return Op(t.symbol, tuple(replace_vars(a, binding) for a in t.args))


def compose_bindings(sigma, tau):
    """The binding ``sigma;tau``: apply ``tau`` to each image of ``sigma``, keep ``tau`` elsewhere."""
    composed = dict(tau)
    for name, image in sigma.items():
        composed[name] = substitute(image, tau)
    return composed


def plug(context, t):
    """Put ``t`` into the hole of ``context``; a context without hole is returned unchanged."""
    return replace_vars(context, {HOLE: t})


def compose_contexts(outer, inner):
    """The context ``outer[inner[·]]``."""
    return plug(outer, inner)


# ---------------------------------------------------------------------------
# Parsing and rendering
# ---------------------------------------------------------------------------

class _TermBuilder(Transformer):
    """Turns a term parse tree into a ``Term`` checked against a signature."""

    def __init__(self, sig, open_terms):
        super().__init__()
        self.sig = sig
        self.open_terms = open_terms

    def leaf(self, children):
        token = children[0]
        name = str(token)
        if name == HOLE_ALIAS:
            name = HOLE
        if name in self.sig:
            arity = self.sig.arity(name)
            if arity != 0:
                raise ArityError(name, arity, 0, *token_position(token))
            return Op(name, ())
        if self.open_terms or name == HOLE and self.open_terms is None:
            return Var(name)
        raise UnknownSymbolError(name, *token_position(token))

    def call(self, children):
        token, args = children[0], tuple(children[1:])
        name = str(token)[:-1]
        if name not in self.sig:
            raise UnknownSymbolError(name, *token_position(token))
        arity = self.sig.arity(name)
        if arity != len(args):
            raise ArityError(name, arity, len(args), *token_position(token))
        return Op(name, args)

    def juxt(self, children):
        if not self.sig.has_app:
            raise TermSyntaxError("juxtaposition needs the signature to declare app/2")
        return Op(APP, (children[0], children[1]))


def build_term(tree, sig, open_terms=False):
    """Convert a term parse tree (from any grammar that embeds terms)."""
    return transform(_TermBuilder(sig, open_terms), tree)


def parse_term(src, sig, open_terms=False):
    """
    Parse a term in the workbench term syntax.

    Parameters:
    -----------
    src : str
        Source text, e.g. ``"app(S,K)"``, ``"S''(K,I)"`` or ``"(S K) I"``
    sig : Signature
        Signature the symbols and arities are validated against
    open_terms : bool
        Whether unknown identifiers are read as metavariables

    Returns:
    --------
    Term
        The parsed term
    """
    tree = parse_text("term", src)
    return build_term(tree, sig, open_terms)


def parse_context(src, sig):
    """Parse a context: a closed term in which ``·`` (or ``_HOLE_``) occurs at most once."""
    context = build_term(parse_text("term", src), sig, open_terms=None)
    if hole_count(context) > 1:
        raise TermSyntaxError("a context may contain at most one hole")
    return context


def render(t):
    """Canonical text of ``t``; ``parse_term(render(t)) == t``."""
    if isinstance(t, Var):
        return t.name
    if not t.args:
        return t.symbol
    return f"{t.symbol}({','.join(render(a) for a in t.args)})"


def render_sugared(t):
    """Human rendering with ``app`` written as left-associative juxtaposition."""
    if isinstance(t, Var):
        return t.name
    if t.symbol == APP and len(t.args) == 2:
        fun, arg = t.args
        right = render_sugared(arg)
        if isinstance(arg, Op) and arg.symbol == APP:
            right = f"({right})"
        return f"{render_sugared(fun)} {right}"
    if not t.args:
        return t.symbol
    return f"{t.symbol}({', '.join(render_sugared(a) for a in t.args)})"


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def _compositions(total, parts):
    """All tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def terms_by_size(sig, max_size):
    """Dict size -> canonically ordered list of closed terms of exactly that size."""
    buckets = {}
    for size in range(1, max_size + 1):
        bucket = []
        for name, arity in sig:
            if arity == 0:
                if size == 1:
                    bucket.append(Op(name, ()))
                continue
            for sizes in _compositions(size - 1, arity):
                pools = [buckets[s] for s in sizes]
                for args in itertools.product(*pools):
                    bucket.append(Op(name, args))
        bucket.sort(key=lambda t: term_key(t, sig))
        buckets[size] = bucket
    return buckets


def enumerate_closed(sig, max_size):
    """
    Enumerate all closed terms with at most ``max_size`` nodes.

    Parameters:
    -----------
    sig : Signature
        The signature
    max_size : int
        Positive node bound

    Returns:
    --------
    list of Term
        Duplicate-free, ordered by size, then symbol declaration order, then arguments
    """
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    buckets = terms_by_size(sig, max_size)
    result = [t for size in range(1, max_size + 1) for t in buckets[size]]
    logger.debug("enumerated %d closed terms of size <= %d", len(result), max_size)
    return result
