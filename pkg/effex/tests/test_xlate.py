"""
Tests for the macro translations and the simulation checker.
"""

import pytest

from effex.core.effex_ast import (
    Case,
    Dollar,
    Handle,
    Let,
    MonadDef,
    OpCall,
    Pair,
    Reflect,
    Return,
    UnitV,
    Var,
    check_tags,
    nodes_on_path,
)
from effex.core.effex_denot import check_monad_laws
from effex.core.effex_opsem import NormalForm, run
from effex.core.effex_surface import parse_comp, show_result
from effex.core.effex_types import BIT, Calculus, Pure, Returner, ops_effect
from effex.core.effex_typesys import (
    Env,
    TypeChecker,
    check_source,
    elaborate_resets,
    first_untypeable,
)
from effex.core.effex_xlate import (
    REFLECT_OP,
    RET_LABEL,
    SHIFT0_OP,
    TranslationId,
    TranslationVariant,
    admin_normalize,
    all_translations,
    coercion_handler,
    cont_monad,
    end_to_end,
    simulate_check,
    translate,
    translate_source,
    translate_typed,
)
from effex.utils.errors import CoercionError, TagError, TranslationError


@pytest.mark.unit
class TestTranslationIds:
    def test_names_and_modes(self):
        tid = TranslationId.of("eff", "mon", "free-monad")
        assert str(tid) == "eff->mon (free-monad)"
        assert tid.mode == "up-to-congruence"
        assert not tid.typed
        assert TranslationId.of("mon", "eff").mode == "exact"
        assert TranslationId.of("del", "eff").mode == "exact"
        assert str(TranslationId.of("del", "mon")) == "del->mon"

    def test_unknown_pairs_and_variants(self):
        with pytest.raises(TranslationError):
            TranslationId.of("mam", "eff")
        with pytest.raises(TranslationError):
            TranslationId.of("del", "mon", "nested")
        with pytest.raises(TranslationError):
            TranslationId.of("eff", "del", "sideways")

    def test_all_translations(self):
        tids = all_translations()
        assert len(tids) == 9
        assert len({str(t) for t in tids}) == 9


@pytest.mark.unit
class TestTranslate:
    def test_reserved_operation_names(self):
        tid = TranslationId.of("eff", "mon")
        for op in (SHIFT0_OP, REFLECT_OP):
            with pytest.raises(TranslationError):
                translate(Let(OpCall(op, UnitV()), Return(Var(0))), tid)

    def test_reserved_label(self):
        term = Case(UnitV(), ((RET_LABEL, Return(Var(0))),))
        with pytest.raises(TranslationError):
            translate(term, TranslationId.of("mon", "del"))

    def test_source_constructs_only(self):
        with pytest.raises(TagError):
            translate(Reflect(Return(UnitV())), TranslationId.of("eff", "mon"))

    @pytest.mark.parametrize("tid", all_translations(), ids=str)
    def test_core_terms_are_unchanged(self, program, tid):
        main = program("not.mam").main
        assert translate(main, tid) == main

    def test_targets_use_their_own_constructs(self, program):
        for name, target in (("state.eff", "del"), ("state.mon", "eff"), ("state.del", "mon")):
            src = program(name)
            out = translate_source(src, TranslationId.of(src.calculus, target))
            assert out.calculus is Calculus.from_name(target)
            check_tags(out.main, out.calculus)

    def test_file_calculus_must_match(self, program):
        with pytest.raises(TranslationError):
            translate_source(program("state.mon"), TranslationId.of("eff", "mon"))


@pytest.mark.integration
class TestEndToEnd:
    @pytest.mark.parametrize(
        "name, target, variant",
        [
            ("state.mon", "eff", None),
            ("state.mon", "del", None),
            ("state.mon", "del", "nested"),
            ("state.del", "eff", None),
            ("state.del", "mon", None),
            ("state.eff", "del", None),
            ("state.eff", "del", "nested"),
            ("state.eff", "mon", None),
            ("state.eff", "mon", "free-monad"),
            ("tick.eff", "del", None),
            ("tick.eff", "mon", "free-monad"),
            ("answer_types.eff", "del", None),
            ("reader.mon", "eff", None),
            ("cont.mon", "del", None),
        ],
    )
    def test_translated_program_computes_the_same_result(self, program, name, target, variant):
        src = program(name)
        source, translated = end_to_end(src.main, TranslationId.of(src.calculus, target, variant))
        assert isinstance(source, NormalForm)
        assert isinstance(translated, NormalForm)
        assert show_result(translated.value) == show_result(source.value)


@pytest.mark.integration
class TestSimulation:
    @pytest.mark.parametrize("name, target", [("state.mon", "eff"), ("state.del", "eff")])
    def test_exact_translations_step_in_lockstep(self, program, name, target):
        src = program(name)
        report = simulate_check(src.main, TranslationId.of(src.calculus, target))
        assert report.ok, report.to_dict()
        assert report.mode == "exact"
        assert report.inconclusive == 0
        assert report.end_to_end is True
        assert {s.path for s in report.steps} == {"exact"}
        assert len(report.steps) == run(src.main, record=False).count

    @pytest.mark.parametrize("tid", all_translations(), ids=str)
    def test_every_translation_simulates_the_state_program(self, program, tid):
        src = program(f"state.{tid.source.value}")
        report = simulate_check(src.main, tid, depth=32, max_states=2000)
        assert report.failed is None, report.to_dict()
        assert report.end_to_end is True
        assert report.mode == tid.mode
        if tid.variant is TranslationVariant.FREE_MONAD:
            # the interpreter unfolds fix between source steps; the search may stop short
            assert report.inconclusive < len(report.steps)
        else:
            assert report.inconclusive == 0

    def test_report_frame(self, program):
        src = program("state.mon")
        report = simulate_check(src.main, TranslationId.of("mon", "eff"))
        frame = report.to_frame()
        assert list(frame["status"].unique()) == ["matched"]
        assert report.to_dict()["translation"] == "mon->eff"

    def test_administrative_redexes(self):
        term = parse_comp("let y <- return () in force (thunk fun x -> return x) y", Calculus.MAM)
        assert admin_normalize(term) == Let(Return(UnitV()), Return(Var(0)))


@pytest.mark.integration
class TestTyping:
    def test_reflection_at_two_types_breaks_mon_to_eff(self, program):
        src = program("reader.mon")
        expected = check_source(src).type_of("main")
        translated = translate_typed(src.main, TranslationId.of("mon", "eff"), expected)
        index, error = first_untypeable([translated], expected, Calculus.EFF)
        assert error.reason == "mismatch"
        nodes = nodes_on_path(translated, error.path)
        handle = next(n for n in nodes if isinstance(n, Handle))
        # reflect_op takes the type of the first reflection, so the second call fails
        second = handle.body.body.bound
        assert isinstance(second, OpCall) and second.op == REFLECT_OP
        assert any(n is second for n in nodes)
        assert show_result(run(translated).status.value) == "tru"

    def test_one_reflection_type_survives_mon_to_eff(self, program):
        src = program("cont.mon")
        expected = check_source(src).type_of("main")
        translated = translate_typed(src.main, TranslationId.of("mon", "eff"), expected)
        assert first_untypeable([translated], expected, Calculus.EFF) is None
        assert show_result(run(translated).status.value) == "fls"

    @pytest.mark.parametrize("fixed_by, failing_ret", [("Const", Pair), ("Tagged", Var)])
    def test_answer_types_break_eff_to_del(self, program, fixed_by, failing_ret):
        src = program("answer_types.eff")
        expected = check_source(src).type_of("main")
        chosen = src.handlers[fixed_by].ann
        handlers = {chosen.in_effect: chosen}
        translated = translate_typed(src.main, TranslationId.of("eff", "del"), expected, handlers)
        index, error = first_untypeable([translated], expected, Calculus.DEL)
        assert error.reason == "mismatch"
        nodes = nodes_on_path(translated, error.path)
        resets = [n for n in nodes if isinstance(n, Dollar)]
        assert len(resets) == 1
        # whichever handler fixes the answer type, the other handler's reset rejects it
        reset = resets[0]
        assert nodes[nodes.index(reset) + 1] is reset.cont
        ret = reset.cont.body
        assert isinstance(ret, Return) and isinstance(ret.value, failing_ret)
        assert show_result(run(translated).status.value) == "fls"

    @pytest.mark.parametrize("name", ["state.eff", "nested.eff"])
    def test_one_handler_per_effect_survives_eff_to_del(self, program, name):
        src = program(name)
        expected = check_source(src).type_of("main")
        translated = translate_typed(src.main, TranslationId.of("eff", "del"), expected)
        assert first_untypeable([translated], expected, Calculus.DEL) is None
        assert show_result(run(translated).status.value) == "tru"

    def test_del_to_mon_preserves_types(self, program):
        src = program("state.del")
        elaborated = elaborate_resets(src.main)
        translated = translate(elaborated, TranslationId.of("del", "mon"))
        d = TypeChecker(Calculus.MON).check_program(translated)
        assert d.type == Returner(BIT)
        assert show_result(run(translated).status.value) == "tru"

    def test_untyped_translations_keep_no_annotations(self, program):
        with pytest.raises(TranslationError):
            translate_typed(program("state.eff").main, TranslationId.of("eff", "mon"))


@pytest.mark.unit
class TestCoercions:
    def test_coercion_into_a_larger_effect(self):
        source = ops_effect({"flip": (BIT, BIT)})
        target = ops_effect({"flip": (BIT, BIT), "emit": (BIT, BIT)})
        h = coercion_handler(source, target, BIT)
        TypeChecker(Calculus.EFF).check_handler(h, h.ann, Env())
        assert h.op_names == ("flip",)

    def test_coercion_needs_inclusion(self):
        with pytest.raises(CoercionError):
            coercion_handler(ops_effect({"flip": (BIT, BIT)}), Pure(), BIT)


@pytest.mark.integration
class TestContinuationLayer:
    def test_reset_layer_is_a_proper_monad(self):
        report = check_monad_laws(cont_monad(Pure(), Returner(BIT)), sizes=(0, 1, 2), law_cases=60)
        assert report.ok, report.to_dict()

    def test_emitted_reset_layers_are_proper_monads(self, program):
        src = program("state.del")
        translated = translate(elaborate_resets(src.main), TranslationId.of("del", "mon"))
        layers = []

        def collect(node):
            if isinstance(node, MonadDef):
                layers.append(node)
            for _, child, _, _ in node.children():
                collect(child)

        collect(translated)
        assert layers
        assert all(layer.name == "Cont" for layer in layers)
        for layer in layers:
            report = check_monad_laws(layer, sizes=(0, 1, 2), law_cases=40)
            assert report.ok, report.to_dict()
