"""
Grammar Module for the HO Semantics Workbench

The concrete syntaxes of the workbench, written as lark grammars:

- first-order terms over a signature (``f(t1,...,tn)``, juxtaposition for ``app``)
- HO specification files (``sig { ... } mode det; rules { ... }``)
- lambda terms, both named (``\\x. x x``) and de Bruijn (``ctx=1 app(@0, lam(@0))``)

Parsers are LALR with lark's contextual lexer and are built once per grammar.
Lark's own exceptions are translated into the workbench's syntax errors so that
callers only see positions and messages.
"""

import functools
import logging

from lark import Lark
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, VisitError

from .errors import TermSyntaxError

logger = logging.getLogger(__name__)

# An identifier followed immediately by "(" is an operator application.
# With whitespace in between, the parenthesis opens a juxtaposed argument.
_TERM_RULES = r"""
?expr: expr atom              -> juxt
     | atom

?atom: OPEN_CALL _args ")"    -> call
     | IDENT                  -> leaf
     | "(" expr ")"

_args: expr ("," expr)*

OPEN_CALL.2: /([A-Za-z_][A-Za-z0-9_']*|·|⊕)\(/
IDENT: /[A-Za-z_][A-Za-z0-9_']*|·|⊕/

%import common.WS
%ignore WS
"""

TERM_GRAMMAR = r"""
?start: expr
""" + _TERM_RULES

SPEC_GRAMMAR = r"""
start: "sig" "{" sigdecl+ "}" "mode" SPEC_MODE ";" "rules" "{" rule* "}"

sigdecl: IDENT "/" INT ";"

rule: "rule" IDENT ":" premises? "|-" conclusion ";"

premises: premise ("," premise)*

?premise: IDENT "->" IDENT              -> reduce_premise
        | IDENT "-[" IDENT "]->" IDENT  -> labeled_premise

?conclusion: lhs "-->" expr             -> reduce_conclusion
           | lhs "=[" IDENT "]=>" expr  -> labeled_conclusion

lhs: OPEN_CALL IDENT ("," IDENT)* ")"
   | IDENT

SPEC_MODE: "det" | "nd"
COMMENT: /#[^\n]*/
%ignore COMMENT
%import common.INT
""" + _TERM_RULES

NAMED_LAMBDA_GRAMMAR = r"""
?start: lterm

?lterm: abstraction
      | application
      | application abstraction   -> app

abstraction: _LAMBDA NAME "." lterm

?application: application latom   -> app
            | latom

?latom: NAME                      -> var
      | "(" lterm ")"

_LAMBDA: "\\" | "λ"
NAME: /[A-Za-z_][A-Za-z0-9_']*/

%import common.WS
%ignore WS
"""

DEBRUIJN_LAMBDA_GRAMMAR = r"""
start: header? dterm

header: "ctx" "=" INT ";"?

?dterm: "@" INT                         -> dvar
      | "lam" "(" dterm ")"             -> dlam
      | "app" "(" dterm "," dterm ")"   -> dapp

%import common.INT
%import common.WS
%ignore WS
"""

_GRAMMARS = {
    "term": TERM_GRAMMAR,
    "spec": SPEC_GRAMMAR,
    "named": NAMED_LAMBDA_GRAMMAR,
    "debruijn": DEBRUIJN_LAMBDA_GRAMMAR,
}


@functools.lru_cache(maxsize=None)
def get_parser(name):
    """Return the (cached) LALR parser for one of the workbench grammars."""
    logger.debug("building %s parser", name)
    return Lark(_GRAMMARS[name], parser="lalr", start="start")


def parse_text(name, text, error_cls=TermSyntaxError):
    """
    Parse ``text`` with the named grammar.

    Parameters:
    -----------
    name : str
        One of ``term``, ``spec``, ``named``, ``debruijn``
    text : str
        Source text
    error_cls : type
        Subclass of TermSyntaxError raised on failure

    Returns:
    --------
    lark.Tree
        The parse tree
    """
    try:
        return get_parser(name).parse(text)
    except UnexpectedInput as exc:
        raise error_cls(_describe(exc), *_position(exc)) from None


def transform(transformer, tree):
    """Run a lark transformer, re-raising the workbench error it hit instead of VisitError."""
    try:
        return transformer.transform(tree)
    except VisitError as exc:
        raise exc.orig_exc from None


def token_position(token):
    """(line, column) of a lark token, or (None, None) for synthetic values."""
    return getattr(token, "line", None), getattr(token, "column", None)


def _describe(exc):
    if isinstance(exc, UnexpectedEOF):
        return "unexpected end of input"
    if isinstance(exc, UnexpectedCharacters):
        return f"unexpected character {exc.char!r}"
    token = getattr(exc, "token", None)
    if token is not None:
        if token.type == "$END":
            return "unexpected end of input"
        return f"unexpected token {str(token)!r}"
    return "syntax error"


def _position(exc):
    line = getattr(exc, "line", None)
    column = getattr(exc, "column", None)
    if line is None or line < 0:
        return None, None
    return line, column
