"""
Tests for the monad judgement and the finite law checks.
"""

import pytest

from effex.core.effex_denot import LAWS, check_monad_laws
from effex.core.effex_gen import exception_monad, state_monad
from effex.core.effex_surface import parse
from effex.core.effex_types import Calculus
from effex.core.effex_typesys import check_monad
from effex.utils.errors import KindError

SMALL = dict(sizes=(0, 1, 2), law_cases=60, seed=2024)


@pytest.mark.unit
class TestMonadJudgement:
    def test_builtin_monads_are_well_formed(self):
        for monad in (state_monad(), exception_monad()):
            judgement = check_monad(monad)
            assert judgement.monad == monad

    def test_improper_monad_is_still_well_typed(self, program):
        check_monad(program("broken.mon").monads["Broken"])

    def test_ill_formed_layer(self):
        src = parse(
            "monad Bad = where a. F a { return x -> return () | m >>= f -> force m }",
            Calculus.MON,
        )
        with pytest.raises(KindError) as info:
            check_monad(src.monads["Bad"])
        assert info.value.reason == "monad-layer"


@pytest.mark.integration
class TestLaws:
    @pytest.mark.parametrize("name, monad", [("state.mon", "State"), ("cont.mon", "Cont")])
    def test_proper_monads(self, program, name, monad):
        report = check_monad_laws(program(name).monads[monad], **SMALL)
        assert report.ok, report.to_dict()
        assert report.verdict == "proper-at-tested-sizes"
        assert len(report.results) == len(LAWS) * 3
        assert report.monad == monad

    def test_builtin_exception_monad(self):
        report = check_monad_laws(exception_monad(), **SMALL)
        assert report.ok

    def test_broken_state_fails_right_identity(self, program):
        report = check_monad_laws(program("broken.mon").monads["Broken"], **SMALL)
        assert not report.ok
        assert report.verdict == "improper"
        failure = report.failure()
        assert failure.law == "right-identity"
        assert failure.size == 1
        assert failure.exhaustive
        assert failure.witness

    def test_small_cases_are_exhaustive(self, program):
        report = check_monad_laws(program("state.mon").monads["State"], sizes=(1,), law_cases=400)
        by_law = {r.law: r for r in report.results}
        assert by_law["right-identity"].exhaustive
        assert by_law["right-identity"].cases == 4

    def test_report_serializes(self, program):
        data = check_monad_laws(program("state.mon").monads["State"], sizes=(1,)).to_dict()
        assert data["monad"] == "State"
        assert {r["law"] for r in data["results"]} == set(LAWS)
