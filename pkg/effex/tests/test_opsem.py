"""
Tests for the small-step semantics: single rules, runs and statuses.
"""

import pytest

from effex.core.effex_ast import FLS, TRU, App, Force, Lam, Let, OpCall, Return, Thunk, UnitV, Var
from effex.core.effex_opsem import (
    NormalForm,
    OutOfFuel,
    Stuck,
    contract,
    evaluate,
    run,
    step,
)
from effex.core.effex_surface import parse_comp, show_result
from effex.core.effex_types import BIT, Calculus, Fun, Pure, Returner, UType
from effex.core.effex_typesys import TypeChecker, check_source, elaborate, first_untypeable
from effex.utils.errors import MalformedTermError


@pytest.mark.unit
class TestRules:
    def test_let_return(self):
        rule, reduct = contract(Let(Return(TRU), Return(Var(0))))
        assert rule == "let-return"
        assert reduct == Return(TRU)

    def test_force_thunk(self):
        assert contract(Force(Thunk(Return(UnitV())))) == ("force-thunk", Return(UnitV()))

    def test_app_lam(self):
        assert contract(App(Lam(Return(Var(0))), FLS)) == ("app-lam", Return(FLS))

    def test_not_a_redex(self):
        assert contract(Return(UnitV())) is None
        assert contract(Force(Var(0))) is None

    def test_step_reduces_under_let(self):
        m = Let(Let(Return(TRU), Return(Var(0))), Return(Var(0)))
        rule, depth, result = step(m)
        assert rule == "let-return"
        assert depth == 1
        assert result == Let(Return(TRU), Return(Var(0)))

    def test_value_does_not_step(self):
        assert step(Return(TRU)) is None

    def test_handler_catches_operation(self):
        m = parse_comp(
            "handle let x <- ask () in return x "
            "with { return y -> return y | ask (_; k) -> force k tru }",
            Calculus.EFF,
        )
        trace = run(m)
        assert trace.rules[0] == "handle-op"
        assert show_result(trace.status.value) == "tru"

    def test_reify_reflect(self):
        m = parse_comp(
            "reify [where a. F a { return x -> return x | m >>= f -> let x <- force m in force f x }]"
            " reflect return fls",
            Calculus.MON,
        )
        trace = run(m)
        assert "reify-reflect" in trace.rules
        assert show_result(trace.status.value) == "fls"

    def test_shift0_drops_delimiter(self):
        m = parse_comp("reset (shift0 k -> return tru) as x in return fls", Calculus.DEL)
        trace = run(m)
        assert trace.rules[0] == "dollar-shift"
        assert show_result(trace.status.value) == "tru"


@pytest.mark.unit
class TestRuns:
    def test_unhandled_operation_is_stuck(self):
        trace = run(Let(OpCall("get", UnitV()), Return(Var(0))))
        assert isinstance(trace.status, Stuck)
        assert trace.status.to_dict()["kind"] == "stuck"

    def test_open_term_is_rejected(self):
        with pytest.raises(MalformedTermError):
            run(Return(Var(0)))

    def test_fuel_bounds_the_run(self, program):
        trace = run(program("loop.eff").main, fuel=50, record=False)
        assert isinstance(trace.status, OutOfFuel)
        assert trace.count == 50
        assert trace.steps == []

    def test_record_keeps_every_step(self, program):
        trace = run(program("not.mam").main)
        assert len(trace.steps) == trace.count
        assert trace.steps[-1].term == trace.final

    def test_evaluate_returns_value(self, program):
        assert evaluate(program("not.mam").main) == FLS

    def test_evaluate_raises_when_unfinished(self, program):
        with pytest.raises(MalformedTermError):
            evaluate(program("loop.eff").main, fuel=10)

    def test_trace_serializes(self, program):
        data = run(program("not.mam").main).to_dict()
        assert data["status"] == {"kind": "normal-form", "value": "fls"}
        assert len(data["steps"]) == data["count"]


@pytest.mark.integration
class TestGoldenResults:
    @pytest.mark.parametrize(
        "name, expected",
        [
            ("not.mam", "fls"),
            ("state.mam", "<tru, fls>"),
            ("state.eff", "tru"),
            ("state.mon", "<tru, fls>"),
            ("state.del", "tru"),
            ("reader.mon", "tru"),
            ("reader_counterexample.eff", "tru"),
            ("answer_types.eff", "fls"),
            ("answer_types_counterexample.del", "fls"),
            ("tick.eff", "tru"),
            ("cont.mon", "fls"),
            ("nested.eff", "tru"),
        ],
    )
    def test_result(self, program, name, expected):
        trace = run(program(name).main, record=False)
        assert isinstance(trace.status, NormalForm)
        assert show_result(trace.status.value) == expected


@pytest.mark.unit
class TestTypedContinuations:
    def test_reify_reflect_annotates_what_it_builds(self):
        m = parse_comp(
            "reify [where a. F a { return x -> return x | m >>= f -> let x <- force m in force f x }]"
            " let y <- reflect return fls in return y",
            Calculus.MON,
        )
        typed = elaborate(m, expected=Returner(BIT), calculus=Calculus.MON)
        rule, _, reduct = step(typed)
        assert rule == "reify-reflect"
        assert reduct.bound.value.ann == UType(Pure(), Returner(BIT))
        assert reduct.body.fun.value.ann == UType(Pure(), Fun(BIT, Returner(BIT)))
        assert TypeChecker(Calculus.MON).check_program(reduct, Returner(BIT)).type == Returner(BIT)

    def test_unannotated_terms_build_unannotated_continuations(self):
        m = parse_comp("reset (shift0 k -> force k tru) as x in return x", Calculus.DEL)
        _, _, reduct = step(m)
        assert reduct.fun.value.ann is None


@pytest.mark.integration
class TestPreservation:
    @pytest.mark.parametrize(
        "name",
        ["not.mam", "state.mam", "state.eff", "state.mon", "state.del", "reader.mon",
         "answer_types.eff", "tick.eff", "cont.mon", "nested.eff"],
    )
    def test_every_term_of_the_run_keeps_the_type_of_main(self, program, name):
        src = program(name)
        ctype = check_source(src).type_of("main")
        typed = elaborate(src.main, expected=ctype, calculus=src.calculus)
        trace = run(typed)
        assert isinstance(trace.status, NormalForm)
        terms = [typed] + [s.term for s in trace.steps]
        assert first_untypeable(terms, ctype, src.calculus) is None
