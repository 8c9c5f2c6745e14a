from pathlib import Path

import pytest

from sosproj.cones import SemialgebraicSystem
from sosproj.polynomials import WeightSequence, parse_polynomial
from sosproj.projection import ProjectionProblem, build_lambda_form_sdp
from sosproj.sdp import SdpModelError, SdpProblem
from sosproj.sdpa_io import export_sdpa, parse_sdpa

GOLDEN_DIR = Path(__file__).parent / "golden"


def trace_toy():
    p = SdpProblem()
    blk = p.add_psd_block(2)
    p.set_objective({blk: [(0, 0, 1.0), (1, 1, 1.0)]})
    p.add_constraint({blk: [(0, 0, 1.0)]}, 1.0)
    return p


def mixed_blocks():
    p = SdpProblem()
    lam = p.add_diag_block(3)
    psd = p.add_psd_block(2)
    p.set_objective({lam: [(0, 0, 2.0), (2, 2, 0.5)], psd: [(0, 1, -1.25)]})
    p.add_constraint({lam: [(1, 1, 1.0)], psd: [(0, 0, 3.0)]}, 0.125)
    p.add_constraint({psd: [(1, 1, 1.0), (0, 1, 0.5)]}, -2.0)
    return p


def projection_fixture():
    f = parse_polynomial("x1^4 - x1 + 1/3", 1)
    problem = ProjectionProblem(
        f, SemialgebraicSystem(1, ()), WeightSequence.l1(), 2
    )
    return build_lambda_form_sdp(problem).sdp


FIXTURES = {
    "trace_toy.dat-s": trace_toy,
    "mixed_blocks.dat-s": mixed_blocks,
    "projection_quartic.dat-s": projection_fixture,
}


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_golden_files_byte_identical(name):
    text = export_sdpa(FIXTURES[name](), comments=("golden fixture",))
    again = export_sdpa(FIXTURES[name](), comments=("golden fixture",))
    assert text == again
    golden = (GOLDEN_DIR / name).read_text()
    assert text == golden


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_round_trip_reproduces_problem(name):
    problem = FIXTURES[name]()
    text = export_sdpa(problem, comments=("round trip",))
    parsed, comments = parse_sdpa(text)
    assert comments == ("round trip",)
    assert export_sdpa(parsed, comments=comments) == text
    assert [b.kind for b in parsed.blocks] == [b.kind for b in problem.blocks]
    assert [b.side for b in parsed.blocks] == [b.side for b in problem.blocks]
    assert parsed.constraints == problem.constraints
    assert parsed.objective == problem.objective


def test_empty_objective_has_no_matno_zero_entries():
    p = SdpProblem()
    blk = p.add_psd_block(2)
    p.add_constraint({blk: [(0, 0, 1.0)]}, 1.0)
    text = export_sdpa(p)
    assert not any(line.startswith("0 ") for line in text.splitlines())


def test_diag_block_negative_size_line():
    text = export_sdpa(mixed_blocks())
    lines = text.splitlines()
    assert lines[2] == "-3 2"


def test_export_requires_min_sense():
    p = SdpProblem(sense="max")
    blk = p.add_psd_block(1)
    p.set_objective({blk: [(0, 0, 1.0)]})
    p.add_constraint({blk: [(0, 0, 1.0)]}, 1.0)
    with pytest.raises(SdpModelError):
        export_sdpa(p)


def test_parse_rejects_malformed():
    with pytest.raises(SdpModelError):
        parse_sdpa("1\n1\n")
    with pytest.raises(SdpModelError):
        parse_sdpa("1\n1\n2 2\n1.0\n")  # block count mismatch
