"""
Tests for the seeded program generators.
"""

import pytest

from effex.core.effex_ast import Return, is_closed
from effex.core.effex_gen import ProgramGenerator, random_term
from effex.core.effex_opsem import NormalForm, run
from effex.core.effex_types import BIT, Calculus, Returner
from effex.core.effex_typesys import TypeChecker, elaborate, first_untypeable


@pytest.mark.unit
class TestProgramGenerator:
    def test_same_seed_same_program(self):
        first = ProgramGenerator(Calculus.EFF, seed=11, max_depth=3).program()
        second = ProgramGenerator(Calculus.EFF, seed=11, max_depth=3).program()
        assert first == second

    def test_requested_ground_type(self):
        m, ctype = ProgramGenerator(Calculus.MAM, seed=3, max_depth=3).program(BIT)
        assert ctype == Returner(BIT)
        assert TypeChecker(Calculus.MAM).check_program(m, ctype).type == ctype

    def test_corpus_size(self):
        gen = ProgramGenerator(Calculus.DEL, seed=5, max_depth=3)
        corpus = gen.corpus(4)
        assert len(corpus) == 4
        assert gen.rejected >= 0


@pytest.mark.integration
class TestGeneratedPrograms:
    @pytest.mark.parametrize("calculus", list(Calculus))
    def test_generated_programs_run_to_a_well_typed_value(self, calculus):
        checker = TypeChecker(calculus)
        for m, ctype in ProgramGenerator(calculus, seed=2024, max_depth=3).corpus(8):
            checker.check_program(m, ctype)
            trace = run(m, record=False)
            assert isinstance(trace.status, NormalForm), trace.status.to_dict()
            checker.check_program(Return(trace.status.value), ctype)


@pytest.mark.slow
class TestSeededCorpus:
    @pytest.mark.timeout(1800)
    @pytest.mark.parametrize("calculus", list(Calculus))
    def test_thousand_programs_run_safely_and_keep_their_type(self, calculus):
        corpus = ProgramGenerator(calculus, seed=2024, max_depth=3).corpus(1000)
        for index, (m, ctype) in enumerate(corpus):
            typed = elaborate(m, expected=ctype, calculus=calculus)
            trace = run(typed, fuel=100_000)
            assert isinstance(trace.status, NormalForm), (index, trace.status.to_dict())
            terms = [typed] + [s.term for s in trace.steps]
            assert first_untypeable(terms, ctype, calculus) is None, index


@pytest.mark.unit
class TestRandomTerms:
    @pytest.mark.parametrize("calculus", list(Calculus))
    def test_terms_are_closed(self, calculus):
        for seed in range(20):
            assert is_closed(random_term(calculus, seed, max_depth=4))

    def test_same_seed_same_term(self):
        assert random_term(Calculus.MON, 9) == random_term(Calculus.MON, 9)
