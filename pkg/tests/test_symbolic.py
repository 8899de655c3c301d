"""Expression substrate: parsing, differentiation, simplification,
evaluation, and the tri-state zero test."""

import random

import pytest

from exformal.errors import (
    DomainError,
    ExprSyntaxError,
    UnboundSymbolError,
    UnknownSymbolError,
)
from exformal.symbolic import (
    Chart,
    DEFAULT_POLICY,
    Rat,
    SamplingPolicy,
    Sym,
    ZERO,
    ZeroVerdict,
    add,
    diff,
    eval_at,
    func,
    interpretation_table,
    is_zero,
    mul,
    opaque,
    parse_expr,
    pow_,
    simplify,
    sub,
    substitute,
    substitute_function,
    to_text,
)

from helpers import rand_expr

CH = Chart(("t", "x", "y", "z"))


class TestChart:
    def test_basic(self):
        assert CH.dim == 4
        assert CH.index("y") == 2

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            Chart(("x", "x"))

    def test_rejects_bad_identifier(self):
        with pytest.raises(ValueError):
            Chart(("2x",))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Chart(())


class TestParse:
    def test_power_and_function(self):
        e = parse_expr("x^2 + sin(t)", CH)
        assert e == add(pow_(Sym("x"), 2), func("sin", Sym("t")))

    def test_precedence(self):
        ch = Chart(("a", "b", "c"))
        e = parse_expr("a + b*c", ch)
        assert e == add(Sym("a"), mul(Sym("b"), Sym("c")))
        assert e != mul(add(Sym("a"), Sym("b")), Sym("c"))

    def test_incomplete_input(self):
        with pytest.raises(ExprSyntaxError) as exc:
            parse_expr("x +", CH)
        assert exc.value.position == 3
        assert exc.value.expected

    def test_unknown_symbol(self):
        with pytest.raises(UnknownSymbolError):
            parse_expr("x + w", CH)

    def test_params_allowed(self):
        e = parse_expr("m*x", CH, params=["m"])
        assert e == mul(Sym("m"), Sym("x"))

    def test_decimal_is_exact(self):
        from fractions import Fraction

        e = parse_expr("0.5*x", CH)
        assert e == mul(Rat(Fraction(1, 2)), Sym("x"))

    def test_unary_minus_binds_looser_than_power(self):
        e = parse_expr("-x^2", CH)
        assert e == mul(Rat(-1), pow_(Sym("x"), 2))

    def test_opaque_function_and_primes(self):
        e = parse_expr("a''(t)", CH)
        assert e == opaque("a", Sym("t"), 2)

    def test_prime_without_call_rejected(self):
        with pytest.raises(ExprSyntaxError):
            parse_expr("a' + x", CH)

    def test_unexpected_character(self):
        with pytest.raises(ExprSyntaxError):
            parse_expr("x @ y", CH)

    def test_negative_exponent_accepted(self):
        e = parse_expr("x^-2", CH)
        assert e == pow_(Sym("x"), -2)


class TestDiff:
    def test_product_power(self):
        e = parse_expr("x*y^2", CH)
        assert diff(e, "x") == pow_(Sym("y"), 2)

    def test_sin(self):
        assert diff(func("sin", Sym("t")), "t") == func("cos", Sym("t"))

    def test_chain_rule_opaque(self):
        e = parse_expr("a(t)^2", CH)
        expected = mul(Rat(2), opaque("a", Sym("t"), 0), opaque("a", Sym("t"), 1))
        assert diff(e, "t") == expected

    def test_parameters_are_constant(self):
        e = parse_expr("m*x^2", CH, params=["m"])
        assert diff(e, "x") == mul(Rat(2), Sym("m"), Sym("x"))
        assert diff(Sym("m"), "x") == ZERO

    def test_quotient(self):
        e = parse_expr("x/y", CH)
        assert diff(e, "y") == mul(Rat(-1), Sym("x"), pow_(Sym("y"), -2))

    def test_ln_sqrt_tan(self):
        assert diff(func("ln", Sym("x")), "x") == pow_(Sym("x"), -1)
        d = diff(func("sqrt", Sym("x")), "x")
        assert is_zero(sub(d, parse_expr("1/(2*sqrt(x))", CH))) is ZeroVerdict.ZERO
        d2 = diff(func("tan", Sym("x")), "x")
        assert d2 == add(Rat(1), pow_(func("tan", Sym("x")), 2))


class TestSimplify:
    def test_collect(self):
        assert simplify(parse_expr("x + x", CH)) == mul(Rat(2), Sym("x"))

    def test_commutative_cancel(self):
        assert simplify(parse_expr("x*y - y*x", CH)) == ZERO

    def test_factor_cancel(self):
        assert simplify(parse_expr("(x^2*y)/x", CH)) == mul(Sym("x"), Sym("y"))

    def test_pythagorean(self):
        assert simplify(parse_expr("sin(t)^2 + cos(t)^2", CH)) == Rat(1)
        e = parse_expr("x*sin(t)^2 + x*cos(t)^2", CH)
        assert simplify(e) == Sym("x")

    def test_pythagorean_partial_coefficients(self):
        e = parse_expr("3*sin(t)^2 + 2*cos(t)^2", CH)
        s = simplify(e)
        # extracts the common part: 2 + sin(t)^2
        assert s == add(Rat(2), pow_(func("sin", Sym("t")), 2))

    def test_idempotent_on_random(self):
        rng = random.Random(42)
        for _ in range(60):
            e = rand_expr(rng, CH.names)
            s = simplify(e)
            assert simplify(s) == s

    def test_expansion(self):
        e = parse_expr("(x + y)^2", CH)
        assert simplify(e) == parse_expr("x^2 + 2*x*y + y^2", CH)

    def test_zero_and_one_powers(self):
        assert pow_(Sym("x"), 0) == Rat(1)
        assert pow_(Sym("x"), 1) == Sym("x")
        assert mul(Sym("x"), Rat(0)) == ZERO
        assert mul(Sym("x"), Rat(1)) == Sym("x")


class TestPrintRoundTrip:
    CASES = [
        "x^2 + sin(t)",
        "3*x/2 - 1/4",
        "a''(t)*x - f(z - t)",
        "1/(x + y/2)",
        "-x^3*y + 2/7",
        "exp(x)*ln(y) + sqrt(z)",
        "tan(x)^2/(1 + x^2)",
    ]

    @pytest.mark.parametrize("text", CASES)
    def test_fixpoint(self, text):
        e = parse_expr(text, CH)
        printed = to_text(e)
        assert parse_expr(printed, CH) == e

    def test_fixpoint_random(self):
        rng = random.Random(7)
        for _ in range(80):
            e = rand_expr(rng, CH.names)
            assert parse_expr(to_text(e), CH) == e


class TestEval:
    def test_square(self):
        assert eval_at(parse_expr("x^2", CH), {"x": 3}) == 9

    def test_ln_negative_domain_error(self):
        with pytest.raises(DomainError):
            eval_at(func("ln", Sym("x")), {"x": -1})

    def test_identity_close(self):
        v = eval_at(parse_expr("sin(t)^2 + cos(t)^2", CH), {"t": 0.7})
        assert abs(v - 1.0) < 1e-12

    def test_unbound(self):
        with pytest.raises(UnboundSymbolError):
            eval_at(Sym("x"), {})
        with pytest.raises(UnboundSymbolError):
            eval_at(opaque("a", Sym("x"), 0), {"x": 1.0})

    def test_division_by_zero(self):
        with pytest.raises(DomainError):
            eval_at(pow_(Sym("x"), -1), {"x": 0.0})

    def test_opaque_fn_table(self):
        e = opaque("a", Sym("t"), 1)
        assert eval_at(e, {"t": 2.0}, {"a'": lambda s: 3 * s}) == 6.0


class TestFiniteDifferenceOracle:
    """diff agrees with central differences (the stated derivative oracle)."""

    def test_against_central_differences(self):
        rng = random.Random(11)
        h = 1e-5
        exprs_done = 0
        while exprs_done < 6:
            e = rand_expr(rng, CH.names)
            name = rng.choice(CH.names)
            d = diff(e, name)
            if d == ZERO:
                continue
            fns = interpretation_table(e, DEFAULT_POLICY)
            points_done = 0
            while points_done < 10:
                env = {n: rng.uniform(-1.2, 1.2) for n in CH.names}
                try:
                    up = dict(env, **{name: env[name] + h})
                    dn = dict(env, **{name: env[name] - h})
                    fd = (eval_at(e, up, fns) - eval_at(e, dn, fns)) / (2 * h)
                    exact = eval_at(d, env, fns)
                except DomainError:
                    continue
                assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))
                points_done += 1
            exprs_done += 1


class TestIsZero:
    def test_pythagorean_symbolic(self):
        assert is_zero(parse_expr("sin(t)^2 + cos(t)^2 - 1", CH)) is ZeroVerdict.ZERO

    def test_commutative(self):
        assert is_zero(parse_expr("x*y - y*x", CH)) is ZeroVerdict.ZERO

    def test_nonzero(self):
        assert is_zero(parse_expr("x + 1", CH)) is ZeroVerdict.NONZERO

    def test_opaque_consistency(self):
        e = parse_expr("a(t)*a(t) - a(t)^2", CH)
        assert is_zero(e) is ZeroVerdict.ZERO
        e2 = parse_expr("a'(t) - a(t)", CH)
        assert is_zero(e2) is ZeroVerdict.NONZERO

    def test_deterministic_for_seed(self):
        e = parse_expr("sin(x)*cos(y) - sin(x + y)/2 - sin(x - y)/2", CH)
        p = SamplingPolicy(seed=123)
        assert is_zero(e, p) is is_zero(e, p)
        assert is_zero(e, p) is ZeroVerdict.ZERO

    def test_untrusted_sampling_gives_unknown(self):
        p = SamplingPolicy(trust_sampling=False)
        e = parse_expr("sin(x)*cos(y) - sin(x + y)/2 - sin(x - y)/2", CH)
        assert is_zero(e, p) is ZeroVerdict.UNKNOWN

    def test_domain_redraw(self):
        # 1/x is nonzero; points near the pole get redrawn, not crashed
        assert is_zero(parse_expr("1/x", CH)) is ZeroVerdict.NONZERO


class TestSubstitute:
    def test_symbol(self):
        e = parse_expr("x^2 + y", CH)
        assert substitute(e, {"x": Rat(3)}) == add(Rat(9), Sym("y"))

    def test_function_profile(self):
        e = parse_expr("a'(t) + a(t)", CH)
        prof = parse_expr("u^2", Chart(("u",)))
        out = substitute_function(e, "a", "u", prof)
        assert out == parse_expr("t^2 + 2*t", CH)
