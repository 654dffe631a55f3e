"""
Tests for de Bruijn terms: shifting, substitution, scoping and tags.
"""

import pytest

from effex.core.effex_ast import (
    FLS,
    TRU,
    App,
    Case,
    Force,
    Handle,
    Handler,
    Inj,
    Lam,
    Let,
    OpCall,
    Pair,
    Reflect,
    Return,
    Split,
    Term,
    Thunk,
    UnitV,
    Var,
    alpha_eq,
    check_tags,
    erase_annotations,
    instantiate,
    is_closed,
    scope_check,
    subst_value,
    term_size,
)
from effex.core.effex_types import Calculus
from effex.utils.errors import MalformedTermError, TagError


@pytest.mark.unit
class TestShiftAndSubst:
    def test_shift_moves_free_indices_only(self):
        assert Lam(Return(Var(1))).shift(1) == Lam(Return(Var(2)))
        assert Lam(Return(Var(0))).shift(1) == Lam(Return(Var(0)))

    def test_shift_by_zero_is_identity(self):
        term = Let(Return(Var(0)), Return(Var(1)))
        assert term.shift(0) is term

    def test_instantiate_single_binder(self):
        body = Let(Return(Var(0)), Return(Var(1)))
        assert instantiate(body, TRU) == Let(Return(TRU), Return(TRU))

    def test_instantiate_lists_values_outermost_first(self):
        body = Return(Pair(Var(1), Var(0)))
        assert instantiate(body, TRU, FLS) == Return(Pair(TRU, FLS))

    def test_subst_lowers_indices_above_target(self):
        assert Return(Pair(Var(0), Var(2))).subst(UnitV()) == Return(Pair(UnitV(), Var(1)))

    def test_subst_shifts_open_replacement_under_binders(self):
        result = subst_value(Lam(Return(Var(1))), Var(3))
        assert result == Lam(Return(Var(4)))

    def test_subst_value_rejects_negative_index(self):
        with pytest.raises(MalformedTermError):
            subst_value(Return(Var(0)), UnitV(), -1)

    def test_subst_value_within_a_declared_scope(self):
        target = Return(Pair(Var(0), Var(1)))
        assert subst_value(target, UnitV(), 0, depth=2) == Return(Pair(UnitV(), Var(0)))

    def test_subst_value_needs_the_binder_in_scope(self):
        with pytest.raises(MalformedTermError):
            subst_value(Return(Var(2)), UnitV(), 2, depth=2)

    def test_subst_value_scope_checks_both_terms(self):
        with pytest.raises(MalformedTermError):
            subst_value(Return(Var(3)), UnitV(), 0, depth=2)
        with pytest.raises(MalformedTermError):
            subst_value(Return(Var(0)), Var(1), 0, depth=1)

    def test_negative_variable_is_malformed(self):
        with pytest.raises(MalformedTermError):
            Var(-1)


@pytest.mark.unit
class TestScoping:
    def test_closed_term(self):
        term = Lam(Let(Return(Var(0)), Return(Pair(Var(0), Var(1)))))
        scope_check(term)
        assert is_closed(term)

    def test_escaping_index_reports_path(self):
        term = Lam(Let(Return(Var(0)), Return(Var(2))))
        with pytest.raises(MalformedTermError) as info:
            scope_check(term)
        assert info.value.path
        assert not is_closed(term)

    def test_split_binds_two_variables(self):
        assert is_closed(Split(Pair(TRU, FLS), Return(Pair(Var(1), Var(0)))))
        assert not is_closed(Split(Pair(TRU, FLS), Return(Var(2))))

    def test_open_term_at_depth(self):
        scope_check(Return(Var(1)), depth=2)


@pytest.mark.unit
class TestStructure:
    def test_case_arms_are_sorted(self):
        case = Case(Var(0), (("True", Return(TRU)), ("False", Return(FLS))))
        assert [label for label, _ in case.arms] == ["False", "True"]
        assert case.arm("True") == Return(TRU)
        assert case.arm("Maybe") is None

    def test_duplicate_case_labels(self):
        with pytest.raises(MalformedTermError):
            Case(Var(0), (("A", Return(UnitV())), ("A", Return(UnitV()))))

    def test_duplicate_handler_clauses(self):
        clause = App(Force(Var(0)), UnitV())
        with pytest.raises(MalformedTermError):
            Handler(Return(Var(0)), (("get", clause), ("get", clause)))

    def test_alpha_eq_is_structural(self):
        a = Lam(Return(Var(0)))
        assert alpha_eq(a, Lam(Return(Var(0))))
        assert not alpha_eq(a, Lam(Return(UnitV())))

    def test_annotations_matter_until_erased(self):
        bare = Inj("True", UnitV())
        assert bare != TRU
        assert erase_annotations(TRU) == bare
        assert erase_annotations(Thunk(Return(TRU))) == Thunk(Return(bare))

    def test_term_size_counts_nodes(self):
        assert term_size(Return(UnitV())) == 2
        assert term_size(Return(Pair(UnitV(), UnitV()))) > term_size(Return(UnitV()))


@pytest.mark.unit
class TestCalculusTags:
    def test_core_terms_belong_everywhere(self):
        term = Lam(Return(Var(0)))
        for calculus in Calculus:
            check_tags(term, calculus)

    def test_op_call_outside_eff(self):
        with pytest.raises(TagError) as info:
            Term(Calculus.MON, Let(OpCall("get", UnitV()), Return(Var(0))))
        assert info.value.construct == "operation call"
        assert info.value.calculus == "λmon"

    def test_handle_allowed_in_eff(self):
        handler = Handler(Return(Var(0)), (("get", App(Force(Var(0)), TRU)),))
        term = Term(Calculus.EFF, Handle(OpCall("get", UnitV()), handler))
        assert isinstance(term.body, Handle)

    def test_reflect_outside_mon(self):
        with pytest.raises(TagError):
            check_tags(Thunk(Reflect(Return(UnitV()))), Calculus.MAM)
