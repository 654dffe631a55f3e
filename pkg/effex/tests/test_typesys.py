"""
Tests for kinding, bidirectional typing and whole-file checking.
"""

import pytest

from effex.core.effex_ast import TRU, Dollar, Force, Inj, ResetType, Return, UnitV, nodes_on_path
from effex.core.effex_surface import parse_comp, parse_effect
from effex.core.effex_types import (
    BIT,
    Calculus,
    Fun,
    Prod,
    Pure,
    Returner,
    TyVar,
    UnitT,
    UType,
)
from effex.core.effex_typesys import (
    TypeChecker,
    check_comp,
    check_source,
    elaborate_resets,
    infer_value,
    kind_check,
)
from effex.utils.errors import KindError, TypeCheckError


def _dollars(node):
    found = []

    def visit(n):
        if isinstance(n, Dollar):
            found.append(n)
        for _, child, _, _ in n.children():
            visit(child)

    visit(node)
    return found


@pytest.mark.unit
class TestKinding:
    def test_unbound_type_variable(self):
        with pytest.raises(KindError) as info:
            kind_check(TyVar("a"))
        assert info.value.reason == "unbound"

    def test_effects_belong_to_their_calculus(self):
        ops = parse_effect("{get : 1 -> bit}", Calculus.EFF)
        kind_check(UType(ops, Returner(BIT)), calculus=Calculus.EFF)
        with pytest.raises(KindError) as info:
            kind_check(UType(ops, Returner(BIT)), calculus=Calculus.MAM)
        assert info.value.reason == "wrong-calculus"


@pytest.mark.unit
class TestValuesAndComputations:
    def test_annotated_values_synthesize(self):
        assert infer_value(TRU) == BIT
        with pytest.raises(TypeCheckError) as info:
            infer_value(Inj("True", UnitV()))
        assert info.value.reason == "missing-annotation"

    def test_unannotated_injection_checks(self):
        d = TypeChecker(Calculus.MAM).check_program(Return(Inj("True", UnitV())), Returner(BIT))
        assert d.type == Returner(BIT)

    def test_mismatch_reports_expected_type(self):
        with pytest.raises(TypeCheckError) as info:
            TypeChecker(Calculus.MAM).check_program(Return(TRU), Returner(UnitT()))
        assert info.value.reason == "mismatch"

    def test_local_function_needs_no_annotation(self):
        m = parse_comp("force (thunk fun x -> return x) tru", Calculus.MAM)
        assert check_comp(m).type == Returner(BIT)

    def test_operation_needs_it_in_the_effect(self):
        m = parse_comp("get ()", Calculus.EFF)
        ops = parse_effect("{get : 1 -> bit}", Calculus.EFF)
        d = check_comp(m, effect=ops, calculus=Calculus.EFF)
        assert d.type == Returner(BIT)
        with pytest.raises(TypeCheckError):
            check_comp(m, effect=Pure(), calculus=Calculus.EFF)

    def test_shift0_needs_an_answer_type(self):
        m = parse_comp("shift0 k -> return ()", Calculus.DEL)
        with pytest.raises(TypeCheckError) as info:
            check_comp(m, calculus=Calculus.DEL)
        assert info.value.reason == "missing-annotation"


@pytest.mark.integration
class TestPrograms:
    def test_state_mam(self, program):
        report = check_source(program("state.mam"))
        assert report.ok
        assert report.type_of("main") == Returner(Prod(BIT, BIT))

    def test_state_eff(self, program):
        src = program("state.eff")
        report = check_source(src)
        assert report.ok
        assert report.type_of("toggle") == UType(src.effects["State"], Returner(BIT))
        assert report.type_of("HST") == src.handlers["HST"].ann
        assert report.type_of("main") == Returner(BIT)

    @pytest.mark.parametrize(
        "name",
        ["not.mam", "state.mon", "state.del", "reader.mon", "answer_types.eff",
         "tick.eff", "cont.mon", "nested.eff", "broken.mon"],
    )
    def test_well_typed_programs(self, program, name):
        report = check_source(program(name))
        assert report.ok, report.to_dict()

    def test_unannotated_helper_is_skipped(self, program):
        report = check_source(program("state.eff"))
        assert "not" not in [entry.name for entry in report.entries]

    def test_reflect_operation_has_one_type(self, program):
        report = check_source(program("reader_counterexample.eff"))
        assert not report.ok
        failed = [entry for entry in report.entries if not entry.ok]
        assert [entry.name for entry in failed] == ["main"]

    def test_shared_thunk_needs_two_answer_types(self, program):
        src = program("answer_types_counterexample.del")
        report = check_source(src)
        assert not report.ok
        main = next(entry for entry in report.entries if entry.name == "main")
        assert main.error.reason == "effect-mismatch"
        nodes = nodes_on_path(src.main, main.error.path)
        resets = [n for n in nodes if isinstance(n, Dollar)]
        assert [r.ann.answer.result for r in resets] == [Returner(Prod(BIT, BIT))]
        assert isinstance(nodes[-1], Force)

    def test_self_application_is_untypeable(self, program):
        report = check_source(program("loop.eff"))
        assert not report.ok

    def test_report_serializes(self, program):
        data = check_source(program("state.eff")).to_dict()
        assert data["calculus"] == "eff"
        assert data["ok"] is True
        assert all("type" in entry for entry in data["entries"])


@pytest.mark.unit
class TestResetElaboration:
    def test_resets_get_annotated(self, program):
        src = program("state.del")
        assert all(d.ann is None for d in _dollars(src.main))
        elaborated = elaborate_resets(src.main)
        resets = _dollars(elaborated)
        assert resets
        assert resets[0].ann == ResetType(Pure(), Fun(BIT, Returner(BIT)))
        d = TypeChecker(Calculus.DEL).check_program(elaborated)
        assert d.type == Returner(BIT)
