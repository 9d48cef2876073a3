"""
HO Rule Format Module for the HO Semantics Workbench

This module reads, expands and validates specifications written in the
higher-order GSOS rule format:

- Parsing of ``.hos`` specification files into sugared rules
- Desugaring: operands no premise mentions are expanded both ways
  (reducing, or behaving as a function with dummy labeled premises)
- Validation of the strict format: one rule per (operation, W) in
  deterministic mode, at least one in nondeterministic mode, and only
  shape-allowed metavariables in conclusions
- Rendering of a validated specification in strict form
- Loading of specification files and of the shipped builtin assets

Strict rules use canonical metavariable names: ``x1..xn`` for operands,
``yi`` for the successor of a reducing operand, ``yi_xj`` for operand i
applied to operand j, ``x`` for the input label and ``yi_x`` for operand i
applied to the label.
"""

import functools
import itertools
import logging
import os
import re
import string
from dataclasses import dataclass, field, replace

from .errors import Issue, SpecError, SpecSyntaxError, WorkbenchError
from .grammar import parse_text, token_position
from .term import Signature, Var, build_term, check_term, render, variables

logger = logging.getLogger(__name__)

DET = "det"
ND = "nd"
MODES = (DET, ND)

RED = "red"
LAB = "lab"

LABEL = "x"
# prefix of conclusion variables no operand, label or premise output binds
UNBOUND_PREFIX = "?"

BUILTIN_SPECS = {
    "xcl": "xcl.hos",
    "xcl_nd": "xcl_nd.hos",
}

_OPERAND = re.compile(r"x(\d+)$")
_SUCCESSOR = re.compile(r"y(\d+)$")
_APPLIED = re.compile(r"y(\d+)_x(\d+)$")
_APPLIED_TO_LABEL = re.compile(r"y(\d+)_x$")


# ---------------------------------------------------------------------------
# Sugared rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Premise:
    """``source -> output`` when ``label`` is None, else ``source -[label]-> output``."""

    source: str
    output: str
    label: str = None

    @property
    def reducing(self):
        return self.label is None


@dataclass(frozen=True)
class SugaredRule:
    """
    A rule as written in a specification file.

    Parameters:
    -----------
    name : str
        Rule name, unique within the file
    op : str
        Operation symbol of the conclusion's left-hand side
    operands : tuple of str
        The operand metavariables ``x1..xn`` as named by the author
    premises : tuple of Premise
        Reducing and labeled premises
    label : str or None
        Label metavariable of a labeled conclusion, None for a reduction
    conclusion : Term
        Open target term of the conclusion
    """

    name: str
    op: str
    operands: tuple
    premises: tuple
    label: str
    conclusion: object
    line: int = field(default=None, compare=False)

    @property
    def shape(self):
        return RED if self.label is None else LAB


@dataclass(frozen=True)
class SugaredSpec:
    sig: Signature
    mode: str
    rules: tuple

    def rule(self, name):
        for rule in self.rules:
            if rule.name == name:
                return rule
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Strict rules
# ---------------------------------------------------------------------------

def allowed_metavariables(arity, W, shape):
    """The metavariable names a strict conclusion for (arity, W, shape) may use."""
    allowed = {f"x{i}" for i in range(1, arity + 1)}
    allowed |= {f"y{j}" for j in W}
    for i in range(1, arity + 1):
        if i in W:
            continue
        allowed |= {f"y{i}_x{j}" for j in range(1, arity + 1)}
        if shape == LAB:
            allowed.add(f"y{i}_x")
    if shape == LAB:
        allowed.add(LABEL)
    return allowed


def metavariable_role(name):
    """
    Decode a canonical metavariable name.

    Returns one of ``("label",)``, ``("operand", i)``, ``("successor", i)``,
    ``("applied", i, j)`` or ``("applied_to_label", i)`` with 1-based indices.
    """
    if name == LABEL:
        return ("label",)
    for pattern, role in ((_OPERAND, "operand"), (_SUCCESSOR, "successor"),
                          (_APPLIED_TO_LABEL, "applied_to_label")):
        match = pattern.match(name)
        if match:
            return (role, int(match.group(1)))
    match = _APPLIED.match(name)
    if match:
        return ("applied", int(match.group(1)), int(match.group(2)))
    raise ValueError(f"'{name}' is not a canonical metavariable name")


@dataclass(frozen=True)
class HORule:
    """One strict rule of the format, for operation ``op`` with reducing operands ``W``."""

    op: str
    W: frozenset
    shape: str
    conclusion: object
    name: str

    @functools.cached_property
    def roles(self):
        """(name, role) for every metavariable of the conclusion, in sorted order."""
        return tuple((name, metavariable_role(name)) for name in sorted(variables(self.conclusion)))

    @property
    def unbound_metavariables(self):
        return sorted(name[len(UNBOUND_PREFIX):] for name in variables(self.conclusion)
                      if name.startswith(UNBOUND_PREFIX))

    def illegal_metavariables(self, arity):
        used = {name for name in variables(self.conclusion) if not name.startswith(UNBOUND_PREFIX)}
        return sorted(used - allowed_metavariables(arity, self.W, self.shape))


def subsets(n):
    """All subsets of {1..n} in canonical order: by size, then lexicographically."""
    indices = range(1, n + 1)
    return [frozenset(c) for k in range(n + 1) for c in itertools.combinations(indices, k)]


def _subset_key(W):
    return (len(W), tuple(sorted(W)))


@dataclass(frozen=True)
class HOSpec:
    """
    A strict HO specification.

    Parameters:
    -----------
    sig : Signature
        The signature
    rules : dict
        (op, W) -> tuple of HORule
    mode : str
        ``det`` or ``nd``
    """

    sig: Signature
    rules: dict
    mode: str = DET

    __hash__ = None

    @property
    def nondeterministic(self):
        return self.mode == ND

    @property
    def rule_count(self):
        return sum(len(group) for group in self.rules.values())

    @property
    def choice_symbols(self):
        """Symbols with more than one rule for some W (the nondeterministic operators)."""
        return frozenset(op for (op, _), group in self.rules.items() if len(group) > 1)

    @property
    def has_labeled_rules(self):
        return any(rule.shape == LAB for group in self.rules.values() for rule in group)

    def with_mode(self, mode):
        """The same rules read in another mode."""
        if mode not in MODES:
            raise ValueError(f"unknown mode '{mode}'")
        return replace(self, mode=mode)

    def all_rules(self):
        return [rule for group in self.rules.values() for rule in group]


def lookup(spec, op, W):
    """
    The rules of ``spec`` for operation ``op`` and reducing-operand set ``W``.

    Returns:
    --------
    tuple of HORule
        A singleton for validated deterministic specs, non-empty for nondeterministic ones
    """
    return spec.rules.get((op, frozenset(W)), ())


def validate(spec):
    """
    Check ``spec`` against the strict format.

    Returns:
    --------
    list of Issue
        Every violation found, in signature order; empty when the spec is valid
    """
    issues = []
    if spec.mode not in MODES:
        issues.append(Issue("*", frozenset(), f"unknown mode '{spec.mode}'"))
    for (op, W), group in spec.rules.items():
        if op not in spec.sig:
            issues.append(Issue(op, W, "operation is not declared in the signature"))
            continue
        arity = spec.sig.arity(op)
        if not W <= set(range(1, arity + 1)):
            issues.append(Issue(op, W, f"W is not a subset of the operand positions 1..{arity}"))
        for rule in group:
            if (rule.op, rule.W) != (op, W):
                issues.append(Issue(op, W, f"rule {rule.name} is filed under the wrong key"))
            unbound = rule.unbound_metavariables
            if unbound:
                issues.append(Issue(op, W, f"conclusion of rule {rule.name} uses unbound "
                                           f"metavariable(s) {', '.join(unbound)}"))
            illegal = rule.illegal_metavariables(arity)
            if illegal:
                issues.append(Issue(op, W, f"conclusion of rule {rule.name} uses illegal "
                                           f"metavariable(s) {', '.join(illegal)} for shape {rule.shape}"))
            try:
                check_term(rule.conclusion, spec.sig)
            except WorkbenchError as exc:
                issues.append(Issue(op, W, f"conclusion of rule {rule.name}: {exc}"))
    for op, arity in spec.sig:
        for W in subsets(arity):
            group = spec.rules.get((op, W), ())
            if not group:
                issues.append(Issue(op, W, "gap: no rule covers this operand configuration"))
            elif len(group) > 1 and spec.mode == DET:
                names = ", ".join(rule.name for rule in group)
                issues.append(Issue(op, W, f"overlap: rules {names} all apply in det mode"))
    return issues


def ensure_valid(spec):
    issues = validate(spec)
    if issues:
        raise SpecError(issues)
    return spec


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _fail(message, token=None):
    line, column = token_position(token) if token is not None else (None, None)
    raise SpecSyntaxError(message, line, column)


def _read_sugared_rule(tree, sig):
    name_token = tree.children[0]
    name = str(name_token)
    premise_trees = []
    conclusion = tree.children[-1]
    if len(tree.children) == 3:
        premise_trees = tree.children[1].children

    lhs = conclusion.children[0]
    op_token, operand_tokens = lhs.children[0], lhs.children[1:]
    op = str(op_token)[:-1] if op_token.type == "OPEN_CALL" else str(op_token)
    if op not in sig:
        _fail(f"rule {name}: unknown symbol '{op}'", op_token)
    operands = tuple(str(t) for t in operand_tokens)
    if len(operands) != sig.arity(op):
        _fail(f"rule {name}: symbol '{op}' has arity {sig.arity(op)} "
              f"but the left-hand side names {len(operands)} operand(s)", op_token)

    label = None
    if conclusion.data == "labeled_conclusion":
        label = str(conclusion.children[1])

    bound = set()
    for token, what in [(t, "operand") for t in operand_tokens] + \
                       ([(conclusion.children[1], "label")] if label else []):
        value = str(token)
        if value in sig:
            _fail(f"rule {name}: {what} metavariable '{value}' clashes with a signature symbol", token)
        if value in bound:
            _fail(f"rule {name}: metavariable '{value}' is bound twice", token)
        bound.add(value)

    premises = []
    reducing, labeled = set(), set()
    for premise in premise_trees:
        if premise.data == "reduce_premise":
            source, output = premise.children
            z = None
        else:
            source, z, output = premise.children
        if str(source) not in operands:
            _fail(f"rule {name}: premise source '{source}' is not an operand of the conclusion", source)
        if z is not None:
            allowed = set(operands) | ({label} if label else set())
            if str(z) not in allowed:
                _fail(f"rule {name}: premise label '{z}' must be an operand"
                      + (" or the label variable" if label else ""), z)
            if str(source) in reducing:
                _fail(f"rule {name}: operand '{source}' cannot both reduce and be applied", source)
            labeled.add(str(source))
        else:
            if str(source) in labeled:
                _fail(f"rule {name}: operand '{source}' cannot both reduce and be applied", source)
            if str(source) in reducing:
                _fail(f"rule {name}: operand '{source}' has two reducing premises", source)
            reducing.add(str(source))
        if str(output) in bound or str(output) in sig:
            _fail(f"rule {name}: premise output '{output}' is not fresh", output)
        bound.add(str(output))
        premises.append(Premise(str(source), str(output), None if z is None else str(z)))

    target = build_term(conclusion.children[-1], sig, open_terms=True)

    return SugaredRule(name, op, operands, tuple(premises), label, target,
                       line=getattr(name_token, "line", None))


def parse_spec(src):
    """
    Parse the text of a specification file.

    Parameters:
    -----------
    src : str
        Text in the specification grammar

    Returns:
    --------
    SugaredSpec
        Signature, mode and sugared rules (names unique)
    """
    tree = parse_text("spec", src, error_cls=SpecSyntaxError)
    decls, mode, rule_trees = [], None, []
    for child in tree.children:
        if getattr(child, "data", None) == "sigdecl":
            decls.append(child)
        elif getattr(child, "data", None) == "rule":
            rule_trees.append(child)
        else:
            mode = str(child)

    pairs, seen = [], set()
    for decl in decls:
        name_token, arity_token = decl.children
        if str(name_token) in seen:
            _fail(f"symbol '{name_token}' declared twice", name_token)
        seen.add(str(name_token))
        pairs.append((str(name_token), int(arity_token)))
    sig = Signature.from_pairs(pairs)

    rules, names = [], set()
    for rule_tree in rule_trees:
        rule = _read_sugared_rule(rule_tree, sig)
        if rule.name in names:
            _fail(f"duplicate rule name '{rule.name}'", rule_tree.children[0])
        names.add(rule.name)
        rules.append(rule)
    logger.debug("parsed %d sugared rule(s) over %d symbol(s), mode %s", len(rules), len(sig), mode)
    return SugaredSpec(sig, mode, tuple(rules))


# ---------------------------------------------------------------------------
# Desugaring
# ---------------------------------------------------------------------------

def _canonical_names(rule):
    names = {}
    position = {operand: i for i, operand in enumerate(rule.operands, start=1)}
    for operand, i in position.items():
        names[operand] = f"x{i}"
    if rule.label is not None:
        names[rule.label] = LABEL
    for premise in rule.premises:
        i = position[premise.source]
        if premise.reducing:
            names[premise.output] = f"y{i}"
        elif premise.label == rule.label:
            names[premise.output] = f"y{i}_x"
        else:
            names[premise.output] = f"y{i}_x{position[premise.label]}"
    return names


def _suffix(k):
    letters = string.ascii_lowercase
    return letters[k] if k < len(letters) else str(k)


def expand_rule(rule):
    """
    Expand one sugared rule into strict rules.

    Every operand no premise mentions is expanded both ways, giving one strict
    rule per resulting W. Several expansions are named ``<name>_a``, ``<name>_b``,
    ... in canonical W order.
    """
    position = {operand: i for i, operand in enumerate(rule.operands, start=1)}
    required = {position[p.source] for p in rule.premises if p.reducing}
    mentioned = {position[p.source] for p in rule.premises}
    free = sorted(set(range(1, len(rule.operands) + 1)) - mentioned)

    names = _canonical_names(rule)
    for unbound in variables(rule.conclusion) - set(names):
        names[unbound] = UNBOUND_PREFIX + unbound
    conclusion = _rename_metavariables(rule.conclusion, names)

    choices = [frozenset(required) | frozenset(c)
               for k in range(len(free) + 1) for c in itertools.combinations(free, k)]
    choices.sort(key=_subset_key)
    if len(choices) == 1:
        return [HORule(rule.op, choices[0], rule.shape, conclusion, rule.name)]
    return [HORule(rule.op, W, rule.shape, conclusion, f"{rule.name}_{_suffix(k)}")
            for k, W in enumerate(choices)]


def _rename_metavariables(t, names):
    if isinstance(t, Var):
        return Var(names.get(t.name, t.name))
    if not t.args:
        return t
    return type(t)(t.symbol, tuple(_rename_metavariables(a, names) for a in t.args))


def _ordered(sig, table):
    order = {name: i for i, name in enumerate(sig.names)}
    keys = sorted(table, key=lambda key: (order.get(key[0], len(order)), _subset_key(key[1])))
    return {key: tuple(table[key]) for key in keys}


def desugar(sugared):
    """
    Turn a sugared specification into a validated strict one.

    Parameters:
    -----------
    sugared : SugaredSpec
        Output of ``parse_spec``

    Returns:
    --------
    HOSpec
        The strict specification

    Raises:
    -------
    SpecError
        With every overlap, gap and illegal conclusion variable found
    """
    table = {}
    for rule in sugared.rules:
        expanded = expand_rule(rule)
        logger.debug("rule %s expands to %d strict rule(s)", rule.name, len(expanded))
        for horule in expanded:
            table.setdefault((horule.op, horule.W), []).append(horule)
    spec = HOSpec(sugared.sig, _ordered(sugared.sig, table), sugared.mode)
    return ensure_valid(spec)


def make_spec(sig, rules, mode=DET):
    """Build and validate an HOSpec from an iterable of strict rules."""
    table = {}
    for rule in rules:
        table.setdefault((rule.op, frozenset(rule.W)), []).append(rule)
    return ensure_valid(HOSpec(sig, _ordered(sig, table), mode))


# ---------------------------------------------------------------------------
# Rendering and loading
# ---------------------------------------------------------------------------

def _strict_premises(arity, rule):
    premises = []
    for i in range(1, arity + 1):
        if i in rule.W:
            premises.append(f"x{i} -> y{i}")
            continue
        labels = [f"x{j}" for j in range(1, arity + 1)]
        if rule.shape == LAB:
            labels.append(LABEL)
        for z in labels:
            premises.append(f"x{i} -[{z}]-> y{i}_{z}")
    return premises


def render_rule(spec, rule):
    arity = spec.sig.arity(rule.op)
    lhs = rule.op if arity == 0 else f"{rule.op}({', '.join(f'x{i}' for i in range(1, arity + 1))})"
    arrow = "-->" if rule.shape == RED else f"=[{LABEL}]=>"
    premises = ", ".join(_strict_premises(arity, rule))
    head = f"{premises} |- " if premises else "|- "
    return f"rule {rule.name}: {head}{lhs} {arrow} {render(rule.conclusion)};"


def render_spec(spec):
    """
    Render ``spec`` in strict form: every premise explicit, canonical names.

    Parsing and desugaring the result gives back ``spec``.
    """
    lines = ["sig {"]
    lines += [f"  {name}/{arity};" for name, arity in spec.sig]
    lines.append("}")
    lines.append(f"mode {spec.mode};")
    lines.append("rules {")
    lines += [f"  {render_rule(spec, rule)}" for rule in spec.all_rules()]
    lines.append("}")
    return "\n".join(lines) + "\n"


def load_spec(path):
    """
    Read, parse, desugar and validate a specification file.

    Parameters:
    -----------
    path : str
        Path to a ``.hos`` file

    Returns:
    --------
    HOSpec
        The validated strict specification
    """
    logger.debug("⏳ Loading specification %s", path)
    with open(path, "r", encoding="utf-8") as f:
        src = f.read()
    spec = desugar(parse_spec(src))
    logger.info("✅ %s: %d rules, %s", os.path.basename(path), spec.rule_count, spec.mode)
    return spec


def builtin_path(name, asset_dir=None):
    """Path of a shipped specification asset."""
    from .config import resolve_asset_dir

    if name not in BUILTIN_SPECS:
        raise KeyError(name)
    return os.path.join(resolve_asset_dir(asset_dir), BUILTIN_SPECS[name])


def load_builtin(name, asset_dir=None):
    """Load one of the shipped specifications (``xcl`` or ``xcl_nd``)."""
    return load_spec(builtin_path(name, asset_dir))
