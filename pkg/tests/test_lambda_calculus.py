import itertools

import pytest

from ho_semantics.bisim import CheckConfig, replay
from ho_semantics.engine import STUCK_BEHAVIOR, Fun, Reduce
from ho_semantics.errors import ConfigurationError, ContextError, LambdaSyntaxError
from ho_semantics.lambda_calculus import (
    CBN, CBV, IDENTITY, OMEGA, THETA, App, Lam, LambdaModel, LambdaTerm, Renaming, Var, app_bisim_closed,
    app_bisim_open, beta, closed, coalg_bisim, contract_renaming, enumerate_lambda, head_shape,
    identity_renaming, old_renaming, parse_lambda, rename, render_lambda, resolve_term, shift,
    shift_renaming, step_cbn, step_cbv, subst_sim, swap_renaming,
)

DELAYED_ID = closed(Lam(App(Lam(Var(0)), Var(0))))


def random_body(rng, ctx, size):
    """A random de Bruijn body well scoped in ``ctx`` with about ``size`` nodes."""
    if size <= 1 and ctx > 0:
        return Var(int(rng.integers(ctx)))
    if size <= 2 or rng.random() < 0.4:
        return Lam(random_body(rng, ctx + 1, size - 1))
    left = int(rng.integers(1, size - 1))
    return App(random_body(rng, ctx, left), random_body(rng, ctx, size - 1 - left))


def random_term(rng, ctx, max_size=12):
    return LambdaTerm(ctx, random_body(rng, ctx, int(rng.integers(1, max_size + 1))))


def random_renaming(rng, source, target):
    return Renaming(tuple(int(i) for i in rng.integers(target, size=source)), target)


# Named terms with explicit binder names, substituted by always renaming
# binders apart.

_fresh = itertools.count()


def to_named(body, free, bound=()):
    if isinstance(body, Var):
        if body.index < len(bound):
            return ("var", bound[body.index])
        return ("var", free[body.index - len(bound)])
    if isinstance(body, Lam):
        name = f"b{next(_fresh)}"
        return ("lam", name, to_named(body.body, free, (name,) + bound))
    return ("app", to_named(body.fun, free, bound), to_named(body.arg, free, bound))


def from_named(term, free, bound=()):
    if term[0] == "var":
        if term[1] in bound:
            return Var(bound.index(term[1]))
        return Var(len(bound) + free.index(term[1]))
    if term[0] == "lam":
        return Lam(from_named(term[2], free, (term[1],) + bound))
    return App(from_named(term[1], free, bound), from_named(term[2], free, bound))


def named_subst(term, mapping):
    if term[0] == "var":
        return mapping.get(term[1], term)
    if term[0] == "lam":
        fresh = f"b{next(_fresh)}"
        return ("lam", fresh, named_subst(term[2], {**mapping, term[1]: ("var", fresh)}))
    return ("app", named_subst(term[1], mapping), named_subst(term[2], mapping))


def oracle_subst(t, us, target):
    source = [f"a{i}" for i in range(t.ctx)]
    free = [f"f{i}" for i in range(target)]
    images = {name: to_named(u.body, free) for name, u in zip(source, us)}
    return LambdaTerm(target, from_named(named_subst(to_named(t.body, source), images), free))


def oracle_whnf_step(t):
    """Leftmost-outermost step without reducing under binders."""
    free = [f"f{i}" for i in range(t.ctx)]
    head, args = to_named(t.body, free), []
    while head[0] == "app":
        args.append(head[2])
        head = head[1]
    args.reverse()
    if head[0] == "var":
        return "stuck", None
    if not args:
        return "fun", None
    reduct = named_subst(head[2], {head[1]: args[0]})
    for arg in args[1:]:
        reduct = ("app", reduct, arg)
    return "reduce", LambdaTerm(t.ctx, from_named(reduct, free))


class TestRenaming:

    def test_old_weakens(self):
        assert rename(LambdaTerm(1, Var(0)), old_renaming(1)) == LambdaTerm(2, Var(0))

    def test_identity(self, rng):
        for _ in range(50):
            t = random_term(rng, int(rng.integers(0, 4)))
            assert rename(t, identity_renaming(t.ctx)) == t

    def test_swap(self):
        r = swap_renaming(0)
        assert rename(LambdaTerm(2, Var(0)), r) == LambdaTerm(2, Var(1))
        assert rename(LambdaTerm(2, Var(1)), r) == LambdaTerm(2, Var(0))

    def test_contract(self):
        t = LambdaTerm(2, App(Var(0), Var(1)))
        assert rename(t, contract_renaming(0)) == LambdaTerm(1, App(Var(0), Var(0)))

    def test_under_a_binder(self):
        t = LambdaTerm(1, Lam(App(Var(1), Var(0))))
        assert rename(t, shift_renaming(1)) == LambdaTerm(2, Lam(App(Var(2), Var(0))))
        assert shift(t) == rename(t, shift_renaming(1))

    def test_out_of_range(self):
        with pytest.raises(ContextError):
            Renaming((2,), 2)
        with pytest.raises(ContextError):
            rename(LambdaTerm(2, Var(1)), old_renaming(1))

    def test_functoriality(self, rng):
        for _ in range(1000):
            n, m, k = (int(x) for x in rng.integers(1, 5, size=3))
            t = random_term(rng, n)
            r, s = random_renaming(rng, n, m), random_renaming(rng, m, k)
            assert rename(rename(t, r), s) == rename(t, r.then(s))


class TestSubstitution:

    def test_variable(self):
        assert subst_sim(LambdaTerm(1, Var(0)), [IDENTITY]) == IDENTITY

    def test_under_a_binder_shifts_the_image(self):
        s = LambdaTerm(2, App(Var(1), Var(0)))
        t = LambdaTerm(1, Lam(App(Var(1), Var(0))))
        assert subst_sim(t, [s]) == LambdaTerm(2, Lam(App(App(Var(2), Var(1)), Var(0))))

    def test_identity_substitution(self, rng):
        for _ in range(50):
            t = random_term(rng, int(rng.integers(1, 5)))
            assert subst_sim(t, [LambdaTerm(t.ctx, Var(i)) for i in range(t.ctx)]) == t

    def test_length_mismatch(self):
        with pytest.raises(ContextError):
            subst_sim(LambdaTerm(2, Var(1)), [IDENTITY])

    def test_empty_substitution_needs_a_target(self):
        assert subst_sim(IDENTITY, [], target=2) == LambdaTerm(2, IDENTITY.body)

    def test_agrees_with_named_substitution(self, rng):
        for _ in range(1000):
            n, m = int(rng.integers(1, 5)), int(rng.integers(0, 5))
            t = random_term(rng, n)
            us = [random_term(rng, m, 6) for _ in range(n)]
            assert subst_sim(t, us, target=m) == oracle_subst(t, us, m)

    def test_composition(self, rng):
        for _ in range(1000):
            n, m, k = int(rng.integers(1, 5)), int(rng.integers(1, 5)), int(rng.integers(0, 4))
            t = random_term(rng, n)
            us = [random_term(rng, m, 5) for _ in range(n)]
            vs = [random_term(rng, k, 5) for _ in range(m)]
            left = subst_sim(subst_sim(t, us, target=m), vs, target=k)
            right = subst_sim(t, [subst_sim(u, vs, target=k) for u in us], target=k)
            assert left == right

    def test_model_substitution_is_subst_sim(self, rng):
        model = LambdaModel(CBN)
        for _ in range(100):
            t = random_term(rng, 2)
            us = [random_term(rng, 1, 5), random_term(rng, 1, 5)]
            assert model.substitute(t, us) == subst_sim(t, us)


class TestCallByName:

    def test_beta(self):
        assert step_cbn(closed(App(Lam(Var(0)), IDENTITY.body))) == Reduce(IDENTITY)

    def test_variable_is_stuck(self):
        assert step_cbn(LambdaTerm(1, Var(0))) == STUCK_BEHAVIOR
        assert step_cbn(LambdaTerm(1, App(Var(0), IDENTITY.body))) == STUCK_BEHAVIOR

    def test_omega_loops(self):
        assert step_cbn(OMEGA) == Reduce(OMEGA)

    def test_abstraction(self):
        assert step_cbn(IDENTITY) == Fun(LambdaTerm(1, Var(0)))

    def test_argument_is_not_evaluated(self):
        assert step_cbn(closed(App(Lam(Var(0)), OMEGA.body))) == Reduce(OMEGA)

    def test_head_reduces_first(self):
        t = closed(App(App(Lam(Var(0)), Lam(Var(0))), OMEGA.body))
        assert step_cbn(t) == Reduce(closed(App(Lam(Var(0)), OMEGA.body)))

    def test_matches_weak_head_oracle(self, rng):
        for _ in range(1000):
            t = random_term(rng, int(rng.integers(0, 3)))
            kind, reduct = oracle_whnf_step(t)
            behavior = step_cbn(t)
            assert behavior.kind == kind
            if kind == "reduce":
                assert behavior.next == reduct
            if kind == "fun":
                assert head_shape(t) == "abstraction"
            if kind == "stuck":
                assert head_shape(t) == "neutral"

    def test_contexts_are_preserved(self, rng):
        for _ in range(200):
            t = random_term(rng, int(rng.integers(0, 3)))
            for behavior in (step_cbn(t), step_cbv(t)):
                if isinstance(behavior, Reduce):
                    assert behavior.next.ctx == t.ctx
                if isinstance(behavior, Fun):
                    assert behavior.template.ctx == t.ctx + 1


class TestCallByValue:

    # one row per clause: variable, abstraction, reducing head, reducing
    # argument, value argument, stuck argument, stuck head
    TABLE = [
        (LambdaTerm(1, Var(0)), STUCK_BEHAVIOR),
        (IDENTITY, Fun(LambdaTerm(1, Var(0)))),
        (closed(App(App(Lam(Var(0)), Lam(Var(0))), Lam(Var(0)))),
         Reduce(closed(App(Lam(Var(0)), Lam(Var(0)))))),
        (closed(App(Lam(Var(0)), OMEGA.body)), Reduce(closed(App(Lam(Var(0)), OMEGA.body)))),
        (closed(App(Lam(Var(0)), Lam(Var(0)))), Reduce(IDENTITY)),
        (LambdaTerm(1, App(Lam(Var(1)), Var(0))), Reduce(LambdaTerm(1, Var(0)))),
        (LambdaTerm(1, App(Var(0), OMEGA.body)), STUCK_BEHAVIOR),
    ]

    @pytest.mark.parametrize("t, expected", TABLE)
    def test_clause_table(self, t, expected):
        assert step_cbv(t) == expected

    def test_argument_steps_before_beta(self):
        delayed = App(Lam(Var(0)), Lam(Var(0)))
        t = closed(App(Lam(Lam(Var(1))), delayed))
        assert step_cbv(t) == Reduce(closed(App(Lam(Lam(Var(1))), Lam(Var(0)))))
        assert step_cbn(t) == Reduce(closed(Lam(delayed)))

    def test_deterministic(self, rng):
        model = LambdaModel(CBV)
        for _ in range(100):
            t = random_term(rng, 1)
            assert model.step(t) == step_cbv(t) == step_cbv(t)


class TestModel:

    def test_unknown_strategy(self):
        with pytest.raises(ConfigurationError):
            LambdaModel("cbneed")

    def test_apply_fun_is_beta(self):
        model = LambdaModel(CBN)
        behavior = model.step(closed(Lam(Lam(Var(1)))))
        assert model.apply_fun(behavior, IDENTITY) == beta(behavior.template, IDENTITY)
        assert model.apply_fun(behavior, IDENTITY) == closed(Lam(IDENTITY.body))

    def test_apply_fun_weakens_closed_arguments(self):
        model = LambdaModel(CBN)
        behavior = model.step(LambdaTerm(1, Lam(Var(1))))
        assert model.apply_fun(behavior, IDENTITY) == LambdaTerm(1, Var(0))

    def test_ill_scoped_term(self):
        with pytest.raises(ContextError):
            LambdaTerm(0, Var(0))


class TestSyntax:

    def test_identity(self):
        assert parse_lambda("\\x. x") == closed(Lam(Var(0)))

    def test_omega(self):
        assert parse_lambda("(\\x. x x) (\\x. x x)") == OMEGA

    def test_free_name(self):
        assert parse_lambda("x (\\y. y)") == LambdaTerm(1, App(Var(0), Lam(Var(0))))

    def test_innermost_binder_is_zero(self):
        assert parse_lambda("λx. λy. x") == closed(Lam(Lam(Var(1))))

    def test_body_extends_right(self):
        assert parse_lambda("\\x. x \\y. y") == closed(Lam(App(Var(0), Lam(Var(0)))))

    def test_free_names_in_fixed_order(self):
        assert parse_lambda("x y", free_names=["y", "x"]) == LambdaTerm(2, App(Var(1), Var(0)))
        with pytest.raises(LambdaSyntaxError):
            parse_lambda("x z", free_names=["x"])

    def test_closed_only(self):
        with pytest.raises(LambdaSyntaxError):
            parse_lambda("\\x. y", allow_free=False)

    def test_de_bruijn(self):
        assert parse_lambda("ctx=1; app(@0, lam(@0))") == LambdaTerm(1, App(Var(0), Lam(Var(0))))
        assert parse_lambda("lam(@0)") == IDENTITY

    def test_free_names_app_and_lam_stay_named(self):
        assert parse_lambda("app (x) y") == LambdaTerm(3, App(App(Var(0), Var(1)), Var(2)))
        assert parse_lambda("lam(x)") == LambdaTerm(2, App(Var(0), Var(1)))
        assert parse_lambda("\\f. lam (f)") == LambdaTerm(1, Lam(App(Var(1), Var(0))))
        assert parse_lambda("ctx=1; app ( @0 , lam ( @0 ) )") == LambdaTerm(1, App(Var(0), Lam(Var(0))))

    def test_de_bruijn_open_term_needs_header(self):
        with pytest.raises(LambdaSyntaxError):
            parse_lambda("app(@0, @0)")

    def test_de_bruijn_index_outside_context(self):
        with pytest.raises(ContextError):
            parse_lambda("ctx=1; @1")

    def test_syntax_error(self):
        with pytest.raises(LambdaSyntaxError):
            parse_lambda("\\x x")

    def test_aliases(self):
        assert resolve_term("OMEGA") == OMEGA
        assert resolve_term(" THETA ") == THETA
        assert resolve_term("ID") == IDENTITY

    def test_render(self):
        assert render_lambda(OMEGA) == "app(lam(app(@0,@0)),lam(app(@0,@0)))"
        assert render_lambda(LambdaTerm(1, App(Var(0), Lam(Var(0))))) == "ctx=1; app(@0,lam(@0))"
        assert render_lambda(OMEGA, named=True) == "(\\x. x x) (\\x. x x)"

    def test_round_trips(self):
        for n in (0, 2):
            names = [f"v{i}" for i in range(n)]
            for t in enumerate_lambda(n, 6 if n == 0 else 5):
                assert parse_lambda(render_lambda(t)) == t
                assert parse_lambda(render_lambda(t, named=True), free_names=names) == t


class TestEnumerate:

    def test_smallest_closed(self):
        assert enumerate_lambda(0, 2) == [closed(Lam(Var(0)))]

    def test_single_variable(self):
        assert enumerate_lambda(1, 1) == [LambdaTerm(1, Var(0))]

    def test_size_four(self):
        terms = enumerate_lambda(0, 4)
        for body in (Lam(Lam(Var(0))), Lam(Lam(Var(1))), Lam(App(Var(0), Var(0)))):
            assert closed(body) in terms

    def test_canonical_order(self):
        terms = enumerate_lambda(2, 3)
        assert terms[:2] == [LambdaTerm(2, Var(0)), LambdaTerm(2, Var(1))]
        assert terms[2:5] == [LambdaTerm(2, Lam(Var(i))) for i in range(3)]
        assert terms[5:9] == [LambdaTerm(2, Lam(Lam(Var(i)))) for i in range(4)]
        assert terms[9] == LambdaTerm(2, App(Var(0), Var(0)))

    def test_sizes_and_uniqueness(self):
        terms = enumerate_lambda(1, 6)
        assert len(set(terms)) == len(terms)
        sizes = [t.size for t in terms]
        assert sizes == sorted(sizes) and max(sizes) <= 6

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            enumerate_lambda(0, 0)


class TestApplicativeBisimilarity:

    def test_identity_and_delayed_identity(self):
        verdict = app_bisim_closed(IDENTITY, DELAYED_ID, CBN, CheckConfig(3, (IDENTITY,)))
        assert verdict.distinguished
        assert [(m.move, m.arg) for m in verdict.witness] == [("apply", IDENTITY)]
        assert verdict.mismatch == "kind"
        assert replay(LambdaModel(CBN), IDENTITY, DELAYED_ID, verdict)

    def test_reflexive(self):
        pool = enumerate_lambda(0, 4)
        for t in enumerate_lambda(0, 5):
            assert not app_bisim_closed(t, t, CBV, CheckConfig(5, pool)).distinguished

    @pytest.mark.parametrize("depth", [5, 10, 20, 35, 50])
    def test_omega_and_theta(self, depth):
        for strategy in (CBN, CBV):
            verdict = app_bisim_closed(OMEGA, THETA, strategy, CheckConfig(depth, enumerate_lambda(0, 4)))
            assert not verdict.distinguished

    def test_open_terms_rejected(self):
        with pytest.raises(ContextError):
            app_bisim_closed(LambdaTerm(1, Var(0)), LambdaTerm(1, Var(0)), CBN, CheckConfig(3, (IDENTITY,)))

    def test_open_extension(self):
        t1, t2 = LambdaTerm(1, Var(0)), LambdaTerm(1, App(Lam(Var(0)), Var(0)))
        verdict = app_bisim_open(t1, t2, CBN, CheckConfig(3, (IDENTITY,)), [IDENTITY], 8)
        assert verdict.distinguished
        assert verdict.closing == (IDENTITY,)
        assert verdict.tuples_tried == 1
        assert replay(LambdaModel(CBN), t1, t2, verdict)

    def test_open_extension_of_closed_terms(self):
        verdict = app_bisim_open(IDENTITY, IDENTITY, CBN, CheckConfig(3, (IDENTITY,)), [], 4)
        assert not verdict.distinguished and verdict.tuples_tried == 1

    def test_open_extension_counts_tuples(self):
        t = LambdaTerm(2, App(Var(0), Var(1)))
        pool = enumerate_lambda(0, 3)
        verdict = app_bisim_open(t, rename(t, identity_renaming(2)), CBN, CheckConfig(4, pool), pool, 5)
        assert not verdict.distinguished
        assert verdict.tuples_tried == 5

    def test_open_extension_errors(self):
        t = LambdaTerm(1, Var(0))
        with pytest.raises(ConfigurationError):
            app_bisim_open(t, t, CBN, CheckConfig(3, (IDENTITY,)), [], 4)
        with pytest.raises(ConfigurationError):
            app_bisim_open(t, t, CBN, CheckConfig(3, (IDENTITY,)), [IDENTITY], 0)
        with pytest.raises(ContextError):
            app_bisim_open(t, IDENTITY, CBN, CheckConfig(3, (IDENTITY,)), [IDENTITY], 4)


class TestCoalgebraic:

    def test_distinct_stuck_terms_separated_by_substitution(self):
        t1, t2 = LambdaTerm(1, Var(0)), LambdaTerm(1, App(Var(0), Lam(Var(0))))
        verdict = coalg_bisim(t1, t2, CBN, CheckConfig(3, (IDENTITY,)), [IDENTITY], 4)
        assert verdict.distinguished
        assert verdict.witness[0].move == "subst"
        assert verdict.witness[0].args == (IDENTITY,)
        assert replay(LambdaModel(CBN), t1, t2, verdict)

    def test_diagonal(self):
        pool = enumerate_lambda(0, 3)
        for t in enumerate_lambda(1, 4):
            assert not coalg_bisim(t, t, CBN, CheckConfig(4, pool), pool, 4).distinguished

    def test_errors(self):
        t = LambdaTerm(1, Var(0))
        with pytest.raises(ConfigurationError):
            coalg_bisim(t, t, CBN, CheckConfig(3, (IDENTITY,)), [IDENTITY], 0)
        with pytest.raises(ConfigurationError):
            coalg_bisim(t, t, CBN, CheckConfig(3, (IDENTITY,)), [], 4)
        with pytest.raises(ContextError):
            coalg_bisim(t, IDENTITY, CBN, CheckConfig(3, (IDENTITY,)), [IDENTITY], 4)


IDENTITY_BODY = Lam(Var(0))

# contexts (with their number of free variables) that either force the hole
# forever or never touch it
DIVERGING_CONTEXTS = [
    (1, lambda b: Lam(b)),
    (1, lambda b: App(b, Var(0))),
    (1, lambda b: App(Var(0), b)),
    (1, lambda b: App(Lam(Lam(Var(1))), b)),
    (1, lambda b: App(Var(0), Lam(b))),
    (1, lambda b: App(App(IDENTITY_BODY, b), Var(0))),
    (2, lambda b: App(App(Var(0), Var(1)), b)),
    (2, lambda b: App(b, Var(1))),
    (2, lambda b: App(Var(1), Lam(b))),
    (2, lambda b: Lam(App(Var(0), App(Var(2), b)))),
    (2, lambda b: App(Lam(Lam(Var(1))), App(Var(0), b))),
    (2, lambda b: App(App(Var(0), b), Var(1))),
]


def delayed(t):
    """``I t``: one extra step in front of ``t``."""
    return LambdaTerm(t.ctx, App(IDENTITY_BODY, t.body))


def diverging_pairs():
    return [(LambdaTerm(n, plug(OMEGA.body)), LambdaTerm(n, plug(THETA.body))) for n, plug in DIVERGING_CONTEXTS]


def coincidence_corpus():
    """(t1, t2, related) over contexts of one and two variables; no pair is diagonal."""
    corpus = []
    for n in (1, 2):
        small = enumerate_lambda(n, 3)
        atoms = [t for t in small if not isinstance(t.body, App)]
        neutrals = [t for t in small if isinstance(t.body, App)]
        # a variable or value against the same term behind an identity redex
        corpus += [(t, delayed(t), False) for t in atoms + neutrals]
        # the extra step only shows once the abstraction is applied
        corpus += [(LambdaTerm(n, Lam(Var(i))), LambdaTerm(n, Lam(App(IDENTITY_BODY, Var(i)))), False)
                   for i in range(n + 1)]
        # two redexes contracting to the same term in one step
        for k, t in enumerate(atoms):
            discarded = atoms[(k + 1) % len(atoms)]
            corpus.append((delayed(t), LambdaTerm(n, App(Lam(shift(t).body), discarded.body)), True))
    corpus += [(t1, t2, True) for t1, t2 in diverging_pairs()]
    corpus.append((LambdaTerm(1, Var(0)), LambdaTerm(1, App(Var(0), IDENTITY_BODY)), False))
    return corpus


class TestCoincidence:

    def test_corpus_shape(self):
        corpus = coincidence_corpus()
        assert len(corpus) >= 50
        assert all(t1 != t2 and t1.ctx == t2.ctx for t1, t2, _ in corpus)
        assert {t1.ctx for t1, _, _ in corpus} == {1, 2}
        assert {related for _, _, related in corpus} == {True, False}

    @pytest.mark.parametrize("strategy", [CBN, CBV])
    @pytest.mark.parametrize("t1, t2, related", coincidence_corpus())
    def test_checkers_agree(self, strategy, t1, t2, related):
        pool = enumerate_lambda(0, 3)
        cfg = CheckConfig(6, pool)
        budget = 4
        open_verdict = app_bisim_open(t1, t2, strategy, cfg, pool, budget)
        coalg_verdict = coalg_bisim(t1, t2, strategy, cfg, pool, budget)
        assert open_verdict.distinguished == coalg_verdict.distinguished == (not related)
        model = LambdaModel(strategy)
        for verdict in (open_verdict, coalg_verdict):
            if verdict.distinguished:
                assert replay(model, t1, t2, verdict)

    def test_abstraction_against_its_delay(self):
        t1 = LambdaTerm(1, Lam(Var(1)))
        t2 = LambdaTerm(1, App(IDENTITY_BODY, Lam(Var(1))))
        pool = enumerate_lambda(0, 3)
        assert app_bisim_open(t1, t2, CBN, CheckConfig(3, pool), pool, 4).distinguished

    @pytest.mark.parametrize("strategy", [CBN, CBV])
    def test_diverging_contexts_are_related(self, strategy):
        pool = enumerate_lambda(0, 3) + [OMEGA]
        for t1, t2 in diverging_pairs():
            assert not coalg_bisim(t1, t2, strategy, CheckConfig(5, pool), pool, 4).distinguished
            assert not app_bisim_open(t1, t2, strategy, CheckConfig(5, pool), pool, 4).distinguished
