"""
HO Semantics Workbench - Higher-Order Structural Operational Semantics

This package reads operational semantics written in a higher-order GSOS rule
format, runs the operational model they induce, and checks bounded strong
bisimilarity (with replayable witnesses and congruence probing). The untyped
lambda calculus is included under call-by-name and call-by-value, with
applicative bisimilarity and its open extension.
"""

from .term import Signature, Var, Op, parse_term, substitute, plug, enumerate_closed, term_size, render
from .rules import parse_spec, desugar, validate, lookup, render_spec, load_spec, load_builtin
from .engine import OperationalModel, Reduce, Fun, Stuck, step, step_nd, apply_fun, trace
from .bisim import CheckConfig, Verdict, check, check_nd, congruence_search, replay
from .lambda_calculus import (
    LambdaTerm, LambdaModel, rename, subst_sim, step_cbn, step_cbv,
    app_bisim_closed, app_bisim_open, coalg_bisim, parse_lambda, render_lambda, enumerate_lambda,
)
from .main import main

__version__ = '1.0.0'
