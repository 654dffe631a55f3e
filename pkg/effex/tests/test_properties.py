"""
Property tests over generated terms and programs.
"""

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from effex.core.effex_gen import ProgramGenerator, random_term
from effex.core.effex_opsem import NormalForm, run
from effex.core.effex_surface import parse_comp, print_term
from effex.core.effex_types import Calculus
from effex.core.effex_typesys import elaborate, first_untypeable
from effex.core.effex_xlate import TranslationId, end_to_end

seeds = st.integers(min_value=0, max_value=2**32 - 1)
calculi = st.sampled_from(list(Calculus))

PROPERTY = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@pytest.mark.slow
class TestPrinterParser:
    @PROPERTY
    @given(seed=seeds, calculus=calculi)
    def test_printed_terms_parse_back(self, seed, calculus):
        term = random_term(calculus, seed, max_depth=4)
        assert parse_comp(print_term(term), calculus) == term


@pytest.mark.slow
class TestTypeSafety:
    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, calculus=calculi)
    def test_well_typed_programs_do_not_get_stuck(self, seed, calculus):
        m, _ = ProgramGenerator(calculus, seed=seed, max_depth=3).program()
        assert isinstance(run(m, record=False).status, NormalForm)

    @settings(max_examples=15, deadline=None)
    @given(seed=seeds, calculus=calculi)
    def test_reduction_preserves_types(self, seed, calculus):
        m, ctype = ProgramGenerator(calculus, seed=seed, max_depth=3).program()
        typed = elaborate(m, expected=ctype, calculus=calculus)
        trace = run(typed)
        terms = [typed] + [s.term for s in trace.steps]
        assert first_untypeable(terms, ctype, calculus) is None


@pytest.mark.slow
class TestTranslations:
    @settings(max_examples=10, deadline=None)
    @given(seed=seeds, tid=st.sampled_from([
        TranslationId.of("mon", "eff"),
        TranslationId.of("del", "eff"),
        TranslationId.of("eff", "del"),
        TranslationId.of("del", "mon"),
    ]))
    def test_translated_programs_agree(self, seed, tid):
        m, _ = ProgramGenerator(tid.source, seed=seed, max_depth=3).program()
        source, target = end_to_end(m, tid)
        assert isinstance(target, NormalForm)
        assert print_term(target.value) == print_term(source.value)
