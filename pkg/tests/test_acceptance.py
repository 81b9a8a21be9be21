"""End-to-end acceptance gate: one pass/fail line per criterion.

Ground states are memoized on disk, so the first run pays the variational
optimization cost and later runs only recompute the measured quantities.
"""

import pytest

from tmspectra import acceptance


def _check(result):
    print(result.line())
    assert result.passed, result.line()


def test_a1_mixed_tm_phase_matches_gap_momentum():
    _check(acceptance.criterion_a1())


def test_a2_extrapolated_velocity():
    _check(acceptance.criterion_a2())


def test_a3_ornstein_zernike_exponents():
    _check(acceptance.criterion_a3())


def test_a4_resummation_vs_direct():
    _check(acceptance.criterion_a4())


def test_a5_resolvent_vs_truncated_sum():
    _check(acceptance.criterion_a5())


def test_a6_structure_factor_peak_on_branch():
    _check(acceptance.criterion_a6())


def test_a7_sma_upper_bounds_finite_chain():
    _check(acceptance.criterion_a7())


def test_a8_filtered_decay_obeys_dispersion_bound():
    _check(acceptance.criterion_a8())


def test_a9_cylinder_dispersion_minimum():
    _check(acceptance.criterion_a9())


@pytest.mark.slow
def test_a10_biquadratic_branch_phase():
    _check(acceptance.criterion_a10())


def test_soft_fermi_momentum_report():
    result = acceptance.soft_xxz_report()
    print(result.line())
    assert result.soft  # informational: reported, not gating
