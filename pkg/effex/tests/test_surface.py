"""
Tests for the surface syntax: parsing, printing and source positions.
"""

import pytest

from effex.core.effex_ast import (
    FLS,
    TRU,
    App,
    Dollar,
    Force,
    Handle,
    Lam,
    Let,
    OpCall,
    Pair,
    Reify,
    Return,
    Split,
    Thunk,
    UnitV,
    Var,
)
from effex.core.effex_surface import (
    calculus_for_path,
    parse,
    parse_comp,
    parse_effect,
    parse_type,
    parse_value,
    print_source,
    print_term,
    print_type,
    show_result,
)
from effex.core.effex_types import (
    BIT,
    Calculus,
    EffOps,
    Fun,
    MonStack,
    Prod,
    Pure,
    Returner,
    UnitT,
    UType,
)
from effex.utils.errors import SurfaceError


@pytest.mark.unit
class TestParsing:
    def test_bit_literals_carry_their_type(self):
        assert parse_value("tru", Calculus.MAM) == TRU
        assert parse_value("(fls, ())", Calculus.MAM) == Pair(FLS, UnitV())

    def test_pair_pattern_becomes_split(self):
        m = parse_comp("let (x, y) <- return (tru, fls) in return y", Calculus.MAM)
        assert m == Let(Return(Pair(TRU, FLS)), Split(Var(0), Return(Var(0))))

    def test_computation_argument_is_sequenced(self):
        m = parse_comp("(fun x -> return x) (return tru)", Calculus.MAM)
        assert m == Let(Return(TRU), App(Lam(Return(Var(0))), Var(0)))

    def test_unbound_head_is_an_operation_in_eff(self):
        assert parse_comp("get ()", Calculus.EFF) == OpCall("get", UnitV())

    def test_unbound_head_elsewhere_is_an_error(self):
        with pytest.raises(SurfaceError, match="unbound name"):
            parse_comp("get ()", Calculus.MON)

    def test_value_in_head_position_suggests_force(self):
        with pytest.raises(SurfaceError, match="use 'force f'"):
            parse("def f = thunk return ()\nmain = f ()", Calculus.MAM)

    def test_construct_of_another_calculus(self):
        with pytest.raises(SurfaceError, match="not available"):
            parse_comp("reflect return ()", Calculus.EFF)
        with pytest.raises(SurfaceError, match="not available"):
            parse_comp("handle return () with { return x -> return x }", Calculus.DEL)

    def test_error_position(self):
        with pytest.raises(SurfaceError) as info:
            parse("main =\n  return )", Calculus.MAM)
        assert (info.value.line, info.value.col) == (2, 10)
        assert info.value.to_dict()["line"] == 2

    def test_unexpected_character(self):
        with pytest.raises(SurfaceError) as info:
            parse("main = return $", Calculus.MAM)
        assert info.value.col == 15

    def test_handler_needs_return_clause(self):
        with pytest.raises(SurfaceError, match="return clause"):
            parse_comp("handle get () with { get (_; k) -> force k () }", Calculus.EFF)

    def test_annotation_reaches_thunk(self):
        v = parse_value("(thunk return tru : U F bit)", Calculus.MAM)
        assert v == Thunk(Return(TRU), UType(Pure(), Returner(BIT)))

    def test_calculus_from_extension(self):
        assert calculus_for_path("programs/state.del") is Calculus.DEL
        with pytest.raises(ValueError):
            calculus_for_path("notes.txt")


@pytest.mark.unit
class TestTypes:
    def test_value_and_computation_types(self):
        assert parse_type("bit * 1", Calculus.MAM) == Prod(BIT, UnitT())
        assert parse_type("bit -> F bit", Calculus.MAM) == Fun(BIT, Returner(BIT))

    def test_operation_effect(self):
        eff = parse_effect("{get : 1 -> bit, put : bit -> 1}", Calculus.EFF)
        assert isinstance(eff, EffOps)
        assert eff.arity("get") == (UnitT(), BIT)

    def test_print_type(self):
        assert print_type(Fun(BIT, Returner(Prod(BIT, BIT)))) == "bit -> F (bit * bit)"
        assert print_type(UType(parse_effect("{}", Calculus.EFF), Returner(BIT))) == "U F bit"


@pytest.mark.integration
class TestPrograms:
    def test_state_eff_declarations(self, program):
        src = program("state.eff")
        assert src.effects["State"].arity("put") == (BIT, UnitT())
        assert "HST" in src.handlers
        assert [name for name, _ in src.definitions] == ["not", "toggle", "runState"]
        assert src.signatures["toggle"] == UType(src.effects["State"], Returner(BIT))

    def test_state_mon_reifies_named_monad(self, program):
        src = program("state.mon")
        run_state = src.definition("runState")
        assert isinstance(run_state.body, Lam)
        assert isinstance(run_state.body.body, Reify)
        assert run_state.body.body.monad == src.monads["State"]
        assert isinstance(src.signatures["get"].effect, MonStack)

    def test_annotated_reset(self, program):
        src = program("answer_types_counterexample.del")
        assert isinstance(src.main, Let)
        reset = src.main.bound.fun
        assert isinstance(reset, Dollar)
        assert reset.ann.effect == Pure()
        assert reset.ann.answer.result == Returner(BIT)

    def test_inline_handler(self, program):
        src = program("loop.eff")
        assert isinstance(src.main, Handle)
        assert src.main.handler.op_names == ("tick",)

    def test_broken_monad_has_no_main(self, program):
        src = program("broken.mon")
        assert src.main is None
        assert "Broken" in src.monads

    @pytest.mark.parametrize(
        "name", ["state.mam", "state.eff", "state.mon", "state.del", "tick.eff", "cont.mon"]
    )
    def test_printed_main_parses_back(self, program, name):
        src = program(name)
        printed = print_term(src.main)
        assert parse_comp(printed, src.calculus) == src.main

    def test_print_source_reparses(self, program):
        src = program("state.mam")
        again = parse(print_source(src), src.calculus)
        assert again.main == src.main
        assert again.signatures == src.signatures


@pytest.mark.unit
class TestShowResult:
    def test_ground_results(self):
        assert show_result(TRU) == "tru"
        assert show_result(Pair(TRU, FLS)) == "<tru, fls>"
        assert show_result(UnitV()) == "()"

    def test_unannotated_bits(self):
        assert show_result(parse_value("True", Calculus.MAM)) == "tru"

    def test_labelled_payload(self):
        assert show_result(parse_value("inj Some tru", Calculus.MAM)) == "Some(tru)"

    def test_force_is_not_a_result(self):
        assert isinstance(parse_comp("force (thunk return ())", Calculus.MAM), Force)
