import math

import numpy as np
import pytest

from gtlab import (
    CapacityError,
    NoiseModel,
    ParameterError,
    achievable_tests,
    additive_converse,
    binary_entropy,
    bound_report_header,
    bound_report_rows,
    e0_curve,
    fano_lower_bound,
    gallager_e0,
    log2_binom,
    mi_additive,
    mi_bruteforce,
    mi_dilution,
    mi_noise_free,
    pei_upper_bound,
)

NF = NoiseModel.noise_free()

# frozen oracle outputs (computed by the implementations they pin, then frozen)
H_011 = 0.499915958164528
MI_DILUTION_4_2 = 0.3304176052823262  # mi_bruteforce(4, 2, 0.25, dilution 0.3)
CONVERSE_1E4_10_05 = 147.12340121901795
CONVERSE_1E4_10_05_STATEMENT = 117.00842600592793


# ---------------------------------------------------------------------------
# entropy & binomials


def test_binary_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert abs(binary_entropy(0.11) - H_011) <= 1e-5
    assert binary_entropy(0.3) == binary_entropy(0.7)


@pytest.mark.parametrize("x", [-0.1, 1.1, 2.0])
def test_binary_entropy_domain(x):
    with pytest.raises(ParameterError):
        binary_entropy(x)


def test_log2_binom_matches_exact_integers():
    for n in (5, 30, 200):
        for k in range(n + 1):
            exact = math.log2(math.comb(n, k))
            assert abs(log2_binom(n, k) - exact) <= 1e-9 * max(1.0, exact)


def test_log2_binom_large_n():
    n, k = 10**9, 5
    exact = math.log2(math.comb(n, k))
    assert abs(log2_binom(n, k) - exact) <= 1e-9 * exact


def test_log2_binom_domain():
    with pytest.raises(ParameterError):
        log2_binom(4, 5)
    with pytest.raises(ParameterError):
        log2_binom(4, -1)


# ---------------------------------------------------------------------------
# mutual information


def test_oracle_single_item_is_one_bit():
    assert abs(mi_bruteforce(1, 1, 0.5, NF) - 1.0) <= 1e-12


def test_oracle_saturated_additive_carries_nothing():
    assert abs(mi_bruteforce(3, 2, 1 / 3, NoiseModel.additive(1.0))) <= 1e-12


def test_oracle_dilution_regression_value():
    got = mi_bruteforce(4, 2, 0.25, NoiseModel.dilution(0.3))
    assert abs(got - MI_DILUTION_4_2) <= 1e-12


def test_oracle_enumeration_cap():
    with pytest.raises(CapacityError):
        mi_bruteforce(21, 1, 0.1, NF)


def test_noise_free_single_item():
    assert mi_noise_free(1, 1, 0.5) == 1.0


@pytest.mark.parametrize(
    "k,i,p,noise",
    [
        (5, 3, 0.2, NF),
        (6, 4, 1 / 6, NoiseModel.additive(0.2)),
        (5, 2, 0.2, NoiseModel.dilution(0.25)),
    ],
)
def test_closed_forms_match_oracle(k, i, p, noise):
    if noise.kind == "noise-free":
        closed = mi_noise_free(k, i, p)
    elif noise.kind == "additive":
        closed = mi_additive(k, i, p, noise.q)
    else:
        closed = mi_dilution(k, i, p, noise.u)
    assert abs(closed - mi_bruteforce(k, i, p, noise)) <= 1e-12


def test_zero_noise_reduces_to_noise_free_exactly():
    for k in (2, 5, 9):
        for i in range(1, k + 1):
            for p in (0.1, 1 / k, 0.5):
                base = mi_noise_free(k, i, p)
                assert abs(mi_additive(k, i, p, 0.0) - base) <= 1e-15
                assert abs(mi_dilution(k, i, p, 0.0) - base) <= 1e-15


def test_saturated_channels_carry_nothing():
    assert mi_additive(4, 2, 0.3, 1.0) == 0.0
    assert mi_dilution(4, 2, 0.3, 1.0) == 0.0


def test_noise_free_asymptotic_floor():
    # I >= e^-1 * i / (K ln 2) at p = 1/K, here for K=10, i=1
    assert mi_noise_free(10, 1, 0.1) >= math.exp(-1) / (10 * math.log(2))


def test_additive_information_nonincreasing_in_q():
    grid = np.linspace(0.0, 0.95, 20)
    for k in (2, 4, 8):
        for i in (1, k):
            for p in (0.1, 1 / k, 0.5):
                values = [mi_additive(k, i, p, float(q)) for q in grid]
                assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_dilution_information_nonincreasing_in_u_on_design_grid():
    # Holds for design-relevant participation (p <= 1/K).  Over-dense designs
    # (for instance p = 0.5 with K = 8) genuinely gain information from mild
    # dilution because it rebalances the almost-always-positive outcomes.
    grid = np.linspace(0.0, 0.95, 20)
    for k in (2, 4, 8):
        for i in (1, k):
            for p in (0.1, 1 / k):
                values = [mi_dilution(k, i, p, float(u)) for u in grid]
                assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_conditioning_on_the_partition_never_gains_information():
    # I(X1; X2, Y) <= I(X; Y), the latter being the i = K partition
    for noise in (NF, NoiseModel.additive(0.2), NoiseModel.dilution(0.2)):
        for k in (3, 5):
            for p in (0.2, 1 / k):
                full = mi_bruteforce(k, k, p, noise)
                for i in range(1, k):
                    assert mi_bruteforce(k, i, p, noise) <= full + 1e-12


@pytest.mark.parametrize("k,i", [(0, 1), (3, 0), (3, 4)])
def test_partition_domain(k, i):
    with pytest.raises(ParameterError):
        mi_noise_free(k, i, 0.3)


# ---------------------------------------------------------------------------
# exponent


def test_e0_at_zero_is_exactly_zero():
    for noise in (NF, NoiseModel.additive(0.3), NoiseModel.dilution(0.3)):
        for k, i in ((1, 1), (4, 2), (7, 7)):
            assert gallager_e0(k, i, 0.25, noise, 0.0) == 0.0


def test_e0_slope_matches_mutual_information():
    delta = 1e-5
    slope = gallager_e0(3, 1, 1 / 3, NF, delta) / delta
    assert abs(slope - mi_noise_free(3, 1, 1 / 3)) / mi_noise_free(3, 1, 1 / 3) <= 1e-3


def test_e0_nondecreasing_in_rho():
    grid = np.linspace(0.0, 1.0, 11)
    for noise in (NoiseModel.additive(0.1), NoiseModel.dilution(0.3), NF):
        values = [gallager_e0(4, 2, 0.25, noise, float(r)) for r in grid]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_e0_domain_and_cap():
    with pytest.raises(ParameterError):
        gallager_e0(3, 1, 0.3, NF, 1.5)
    with pytest.raises(ParameterError):
        gallager_e0(3, 1, 0.3, NF, -0.1)
    with pytest.raises(CapacityError):
        gallager_e0(25, 2, 0.3, NF, 0.5)


def test_e0_curve_record():
    curve = e0_curve(4, 2, 0.25, NoiseModel.additive(0.1), np.linspace(0, 1, 5))
    assert curve.e0_values[0] == 0.0
    assert all(math.isfinite(v) for v in curve.e0_values)
    assert curve.i == 2 and curve.k == 4


# ---------------------------------------------------------------------------
# per-overlap error bound


def test_pei_bound_with_no_tests_is_one():
    assert pei_upper_bound(30, 3, 1, 0, 1 / 3, NF) == 1.0


def test_pei_bound_decreases_with_tests():
    b100 = pei_upper_bound(30, 3, 1, 100, 1 / 3, NF)
    b200 = pei_upper_bound(30, 3, 1, 200, 1 / 3, NF)
    assert b200 < b100 < 1.0


def test_pei_bound_never_exceeds_one():
    for t in (0, 1, 5, 50):
        assert pei_upper_bound(30, 3, 2, t, 1 / 3, NoiseModel.additive(0.4)) <= 1.0


# ---------------------------------------------------------------------------
# test-count bounds


def test_achievable_smallest_case_is_degenerate_zero():
    report = achievable_tests(2, 1, 0.5, NF)
    assert report.bound_tests == 0.0
    assert report.per_i[0].numerator_bits == 0.0
    assert not report.per_i[0].flagged


def test_achievable_entries_cross_checked_against_oracle():
    report = achievable_tests(100, 2, 0.5, NF)
    for entry in report.per_i:
        numerator = math.log2(2 * math.comb(98, entry.i) * math.comb(2, entry.i))
        oracle = mi_bruteforce(2, entry.i, 0.5, NF)
        assert abs(entry.numerator_bits - numerator) <= 1e-9
        assert abs(entry.ratio_tests - numerator / oracle) <= 1e-6
    assert report.bound_tests == max(e.ratio_tests for e in report.per_i)
    assert report.argmax_i == min(
        e.i for e in report.per_i if e.ratio_tests == report.bound_tests
    )


def test_achievable_scaling_is_k_log_n():
    # bound(N=1e4) / bound(N=1e2) tracks log(1e4)/log(1e2) = 2 within 25%
    for k in (2, 5, 10):
        small = achievable_tests(100, k, 1 / k, NF).bound_tests
        large = achievable_tests(10_000, k, 1 / k, NF).bound_tests
        assert 1.5 <= large / small <= 2.5


def test_fano_single_defective_hand_value():
    report = fano_lower_bound(100, 1, 0.5, NF)
    assert abs(report.bound_tests - math.log2(100)) <= 1e-9
    assert report.argmax_i == 1


def test_fano_below_achievable_spot_grid():
    for n, k in ((30, 3), (100, 5), (1000, 8)):
        for noise in (NF, NoiseModel.additive(0.3), NoiseModel.dilution(0.3)):
            fano = fano_lower_bound(n, k, 1 / k, noise).bound_tests
            ach = achievable_tests(n, k, 1 / k, noise).bound_tests
            assert fano <= ach


def test_saturated_channel_flags_infinite_bound():
    report = fano_lower_bound(50, 3, 1 / 3, NoiseModel.additive(1.0))
    assert math.isinf(report.bound_tests)
    assert all(e.flagged for e in report.per_i)
    # still serializes without exceptions
    rows = bound_report_rows(report)
    assert len(rows) == 4


def test_bound_domain_errors():
    with pytest.raises(ParameterError):
        achievable_tests(5, 5, 0.2, NF)
    with pytest.raises(ParameterError):
        fano_lower_bound(5, 0, 0.2, NF)


def test_bound_report_csv_shape():
    report = achievable_tests(40, 4, 0.25, NoiseModel.dilution(0.2))
    rows = bound_report_rows(report)
    assert len(rows) == 5  # K per-i rows + summary
    header = bound_report_header()
    assert header[:6] == ["kind", "N", "K", "p", "channel", "param"]
    summary = rows[-1]
    assert summary[6] == -1
    assert summary[7] == report.argmax_i
    assert summary[9] == report.bound_tests
    for row, entry in zip(rows, report.per_i):
        assert row[6] == entry.i and row[9] == entry.ratio_tests


# ---------------------------------------------------------------------------
# additive converse


def test_converse_increases_toward_saturation():
    values = [additive_converse(10_000, 10, q) for q in np.arange(0.1, 0.95, 0.1)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_converse_regression_values():
    assert abs(additive_converse(10_000, 10, 0.5) - CONVERSE_1E4_10_05) <= 1e-9
    assert (
        abs(additive_converse(10_000, 10, 0.5, statement_form=True) - CONVERSE_1E4_10_05_STATEMENT)
        <= 1e-9
    )
    # the statement form has the larger denominator, hence the smaller bound
    assert additive_converse(10_000, 10, 0.5, statement_form=True) < CONVERSE_1E4_10_05


def test_converse_stays_below_achievable():
    for n in (1000, 10_000):
        for k in (5, 10, 20):
            for q in (0.1, 0.3, 0.5, 0.7, 0.9):
                converse = additive_converse(n, k, q)
                ach = achievable_tests(n, k, 1 / k, NoiseModel.additive(q)).bound_tests
                assert converse <= ach


def test_converse_domain():
    with pytest.raises(ParameterError):
        additive_converse(100, 5, 0.0)
    with pytest.raises(ParameterError):
        additive_converse(100, 5, 1.0)
    assert math.isinf(additive_converse(100, 1, 0.5))
