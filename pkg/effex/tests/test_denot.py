"""
Tests for the finite-set semantics: sizes of types, denotations of
programs, handler algebras and the pigeonhole demonstration.
"""

import numpy as np
import pytest

from effex.core.effex_ast import FLS
from effex.core.effex_denot import (
    INFINITE,
    TICK_EFFECT,
    AtomSet,
    ETag,
    EUnit,
    FreeTreeSet,
    adequacy_check,
    cardinality,
    counting_program,
    den_program,
    den_term,
    enumerate_set,
    handler_algebra,
    pigeonhole_demo,
    show_element,
    signature_of,
    tick_program,
)
from effex.core.effex_opsem import run
from effex.core.effex_surface import parse_effect, parse_type, show_result
from effex.core.effex_types import (
    BIT,
    Calculus,
    Fun,
    HandlerType,
    Prod,
    Pure,
    Returner,
    TyVar,
    UnitT,
    UType,
)
from effex.core.effex_typesys import check_comp
from effex.utils.errors import SemanticsError


@pytest.mark.unit
class TestCardinality:
    def test_ground_types(self):
        assert cardinality(UnitT()) == 1
        assert cardinality(BIT) == 2
        assert cardinality(Prod(BIT, BIT)) == 4

    def test_function_type(self):
        assert cardinality(Fun(BIT, Returner(BIT))) == 4
        assert cardinality(UType(Pure(), Fun(BIT, Returner(Prod(BIT, BIT))))) == 16

    def test_type_variables_need_an_assignment(self):
        assert cardinality(Prod(TyVar("a"), BIT), {"a": AtomSet(3)}) == 6
        with pytest.raises(SemanticsError):
            cardinality(TyVar("a"))

    def test_state_layer(self, program):
        src = program("state.mon")
        ty = parse_type("U [State] F bit", Calculus.MON, src)
        assert cardinality(ty) == 16

    def test_recursive_operations_are_infinite(self):
        assert cardinality(UType(TICK_EFFECT, Returner(UnitT()))) == INFINITE

    def test_operations_without_continuation_are_finite(self):
        abort = parse_effect("{abort : bit -> 0}", Calculus.EFF)
        # two leaves plus one node per parameter
        assert cardinality(UType(abort, Returner(BIT))) == 4

    def test_enumeration_limit(self):
        s = AtomSet(5)
        assert len(enumerate_set(s)) == 5
        with pytest.raises(SemanticsError):
            enumerate_set(s, limit=4)

    def test_infinite_sets_do_not_enumerate(self):
        trees = FreeTreeSet(signature_of(TICK_EFFECT), AtomSet(1))
        with pytest.raises(SemanticsError):
            list(trees)

    def test_sampling_is_seeded(self):
        trees = FreeTreeSet(signature_of(TICK_EFFECT), AtomSet(2), max_depth=3)
        first = [trees.sample(np.random.default_rng(7)) for _ in range(3)]
        second = [trees.sample(np.random.default_rng(7)) for _ in range(3)]
        assert first == second


@pytest.mark.integration
class TestProgramDenotations:
    def test_pure_program(self, program):
        element = den_program(program("not.mam").main, Calculus.MAM)
        assert element == ETag("False", EUnit())
        assert show_element(element) == "fls"

    def test_tick_trees_are_distinct(self):
        trees = []
        for n in range(9):
            d = check_comp(tick_program(n), effect=TICK_EFFECT, expected=Returner(UnitT()),
                           calculus=Calculus.EFF)
            trees.append(den_term(d))
        assert len(set(trees)) == 9
        assert show_element(trees[0]) == "return ()"

    @pytest.mark.parametrize(
        "name, calculus",
        [
            ("state.mam", Calculus.MAM),
            ("state.eff", Calculus.EFF),
            ("tick.eff", Calculus.EFF),
            ("state.mon", Calculus.MON),
        ],
    )
    def test_adequacy(self, program, name, calculus):
        result = adequacy_check(program(name).main, calculus)
        assert result.status == "normal-form"
        assert result.ok

    def test_answer_type_stacks_have_no_denotation(self, program):
        with pytest.raises(SemanticsError):
            den_program(program("state.del").main, Calculus.DEL)


@pytest.mark.integration
class TestHandlerAlgebras:
    @pytest.mark.parametrize("name, handler", [("state.eff", "HST"), ("tick.eff", "Parity")])
    def test_clauses_form_an_algebra(self, program, name, handler):
        h = program(name).handlers[handler]
        algebra = handler_algebra(h, h.ann)
        assert algebra.carrier.cardinality == 4
        assert algebra.laws_hold(np.random.default_rng(2024), samples=10)

    def test_only_operation_effects(self, program):
        h = program("state.eff").handlers["HST"]
        pure = HandlerType(h.ann.in_vtype, Pure(), h.ann.out_ctype, h.ann.out_effect)
        with pytest.raises(SemanticsError):
            handler_algebra(h, pure)


@pytest.mark.unit
class TestPigeonhole:
    def test_counting_handler_saturates(self):
        assert show_result(run(counting_program(3, 2, 2)).status.value) == "tru"
        assert show_result(run(counting_program(3, 3, 5)).status.value) == "tru"
        assert run(counting_program(3, 2, 5)).status.value == FLS

    def test_three_programs_into_a_two_element_type(self):
        report = pigeonhole_demo(2, UType(Pure(), Returner(BIT)))
        assert report.target_cardinality == 2
        assert report.programs == 3
        assert report.exceeds
        assert [(p.n, p.m) for p in report.pairs] == [(0, 1), (0, 2), (1, 2)]
        assert all(p.distinct for p in report.pairs)
        assert report.ok
        assert report.to_dict()["cardinality"] == 2
        assert "distinct" in report.to_text()

    def test_no_programs_beyond_cardinality_is_degenerate(self):
        report = pigeonhole_demo(0, UType(Pure(), Returner(BIT)))
        assert report.programs == 1
        assert not report.exceeds
        assert report.pairs == []
        assert not report.ok
        assert report.to_dict()["pairs"] == []
        assert "no pairs to distinguish" in report.to_text()

    def test_bound_equal_to_cardinality_is_degenerate(self):
        report = pigeonhole_demo(1, UType(Pure(), Returner(BIT)))
        assert not report.exceeds
        assert report.pairs == []

    def test_negative_bound(self):
        with pytest.raises(SemanticsError):
            pigeonhole_demo(-1, UType(Pure(), Returner(BIT)))

    def test_type_variable_target(self):
        report = pigeonhole_demo(3, TyVar("a"), {"a": AtomSet(3)})
        assert report.ok
        assert len(report.pairs) == 6
