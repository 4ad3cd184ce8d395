"""Exhaustive-computation oracles: spectra, laws, and closed forms."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pivotal_lab.constructions import (
    BribableTribes,
    Dictator,
    Majority,
    Parity,
    TribesParams,
    bribable,
    tribes,
    tribes_record_from_code,
)
from pivotal_lab.core import Configuration, TableFunction
from pivotal_lab.errors import ExhaustiveCapError, UsageError
from pivotal_lab.exact import (
    binomial_tail,
    bribable_zero_closed_form,
    exact_disagreement,
    exact_disagreement_direct,
    exact_noise_joint,
    exact_prob,
    exact_prob_rational,
    exact_tribes_stats,
    influence_counts,
    influences,
    pivotal_count_table,
    pivotal_law,
    pivotal_marginals,
    pivotal_tribe_mean_closed_form,
    spectral_marginals,
    spectrum,
    tribes_blocked_closed_form,
    truth_table,
    wht,
)

pm1_tables = st.integers(min_value=1, max_value=5).flatmap(
    lambda n: st.lists(
        st.sampled_from([-1, 1]), min_size=1 << n, max_size=1 << n
    ).map(TableFunction)
)


# --- spectra -------------------------------------------------------------


def test_majority3_spectrum_hand_values():
    spec = spectrum(Majority(3))
    expected = {1: 0.5, 2: 0.5, 4: 0.5, 7: -0.5}
    assert dict(spec.nonzero()) == pytest.approx(expected, abs=1e-12)
    assert spec.parseval() == pytest.approx(1.0, abs=1e-12)


def test_dictator_and_parity_spectra():
    spec = spectrum(Dictator(4, 2))
    assert dict(spec.nonzero()) == pytest.approx({1 << 2: 1.0}, abs=1e-12)
    spec = spectrum(Parity(3))
    assert dict(spec.nonzero()) == pytest.approx({7: 1.0}, abs=1e-12)


@given(pm1_tables)
def test_fwht_matches_direct_character_sums(f):
    spec = spectrum(f)
    total = 1 << f.n
    for mask in range(total):
        acc = 0.0
        for code in range(total):
            chi = 1.0
            signs = Configuration(f.n, code).signs()
            for i in range(f.n):
                if (mask >> i) & 1:
                    chi *= signs[i]
            acc += f.evaluate_code(code) * chi
        assert spec.coefficient(mask) == pytest.approx(acc / total, abs=1e-12)


@given(pm1_tables)
def test_parseval_for_sign_valued_tables(f):
    assert spectrum(f).parseval() == pytest.approx(1.0, abs=1e-12)


def test_wht_of_indicator_table_sums_to_density():
    # the empty-set coefficient of any table is its mean
    table = truth_table(tribes(2, 2))
    spec = wht(table)
    assert spec.coefficient(0) == pytest.approx(float(np.mean(table.values)), abs=1e-12)


# --- exact probabilities -------------------------------------------------


def test_exact_prob_tribes_2_2():
    T = tribes(2, 2)
    assert exact_prob_rational(T, 0) == Fraction(9, 16)
    assert exact_prob_rational(T, 1) == Fraction(7, 16)
    assert exact_prob(T, 0) == pytest.approx(9 / 16, abs=1e-15)


def test_exact_prob_biased():
    # with singleton tribes, "some tribe unanimous" is "some +1 coordinate"
    T = tribes(1, 2)
    p = 0.3
    assert exact_prob(T, 1, p=p) == pytest.approx(1 - (1 - p) ** 2, abs=1e-12)
    assert exact_prob(T, 0, p=p) == pytest.approx((1 - p) ** 2, abs=1e-12)


def test_exact_prob_rejects_degenerate_bias():
    with pytest.raises(UsageError):
        exact_prob(Majority(3), 1, p=0.0)
    with pytest.raises(UsageError):
        exact_prob(Majority(3), 1, p=1.0)


def test_bribable_zero_probability():
    f = bribable(2, 2)
    assert exact_prob_rational(f, 0) == Fraction(3, 8)
    assert bribable_zero_closed_form(TribesParams(2, 2)) == Fraction(3, 8)


@pytest.mark.parametrize("l,k", [(1, 4), (2, 3), (3, 2), (2, 4)])
def test_closed_forms_match_enumeration(l, k):
    params = TribesParams(l, k)
    stats = exact_tribes_stats(params)
    assert stats.p_blocked == tribes_blocked_closed_form(params)
    assert stats.p_f_zero == bribable_zero_closed_form(params)
    assert stats.mean_x == pivotal_tribe_mean_closed_form(params)
    f = BribableTribes(params)
    assert stats.p_f_zero == exact_prob_rational(f, 0)


@pytest.mark.parametrize("l,k", [(2, 2), (2, 3), (3, 2)])
def test_conditional_pivotal_tribe_sandwich(l, k):
    stats = exact_tribes_stats(TribesParams(l, k))
    assert stats.mean_x_unblocked <= stats.mean_x <= stats.mean_x_blocked


def test_tribes_2_2_sandwich_hand_values():
    stats = exact_tribes_stats(TribesParams(2, 2))
    assert stats.mean_x == Fraction(1)
    assert stats.mean_x_blocked == Fraction(4, 3)
    assert stats.mean_x_unblocked == Fraction(4, 7)


# --- noise and disagreement ----------------------------------------------


def test_majority3_disagreement_frozen_value():
    # stability of 3-way majority at rho = 0.8 is 0.728, hence 0.136
    val = exact_disagreement(Majority(3), 0.2)
    assert val == pytest.approx(0.136, abs=1e-12)
    assert exact_disagreement_direct(Majority(3), 0.2) == pytest.approx(val, abs=1e-12)


@given(pm1_tables, st.sampled_from([0.0, 0.1, 0.35, 0.8, 1.0]))
def test_disagreement_spectral_equals_direct(f, eps):
    a = exact_disagreement(f, eps)
    b = exact_disagreement_direct(f, eps)
    assert a == pytest.approx(b, abs=1e-10)


def test_noise_joint_independent_at_full_noise():
    f = bribable(2, 2)
    joint = exact_noise_joint(f, 1.0)
    for v in (-1, 0, 1):
        for w in (-1, 0, 1):
            expect = float(exact_prob_rational(f, v) * exact_prob_rational(f, w))
            assert joint[(v, w)] == pytest.approx(expect, abs=1e-12)


def test_noise_joint_diagonal_at_zero_noise():
    f = bribable(2, 2)
    joint = exact_noise_joint(f, 0.0)
    for (v, w), prob in joint.items():
        if v == w:
            assert prob == pytest.approx(float(exact_prob_rational(f, v)), abs=1e-12)
        else:
            assert prob == pytest.approx(0.0, abs=1e-12)


def test_noise_joint_is_symmetric_and_normalized():
    f = Majority(5)
    joint = exact_noise_joint(f, 0.3)
    assert sum(joint.values()) == pytest.approx(1.0, abs=1e-12)
    for (v, w), prob in joint.items():
        assert prob == pytest.approx(joint[(w, v)], abs=1e-12)


def test_disagreement_rejects_biased_measure():
    with pytest.raises(UsageError):
        exact_disagreement(Majority(3), 0.2, p=0.3)


# --- influences and pivotal law -------------------------------------------


def test_majority3_influences():
    assert influences(Majority(3)) == pytest.approx([0.5, 0.5, 0.5], abs=1e-15)
    counts = influence_counts(Majority(3))
    assert counts.tolist() == [4, 4, 4]


def test_dictator_influences():
    inf = influences(Dictator(5, 3))
    expected = np.zeros(5)
    expected[3] = 1.0
    assert inf == pytest.approx(expected, abs=1e-15)


@given(pm1_tables)
def test_pivotal_counts_tally_influence_counts(f):
    # both sides count the edges of the cube where f differs, twice
    assert pivotal_count_table(f).sum() == influence_counts(f).sum()


def test_pivotal_law_tribes_2_2():
    law = pivotal_law(tribes(2, 2))
    assert law.value_prob(0) == Fraction(9, 16)
    assert law.value_prob(1) == Fraction(7, 16)
    assert sum(law.size_marginal()) == Fraction(1)
    # conditioned on no unanimous tribe, the pivotal set is the union of
    # the missing coordinates of one-short tribes
    stats = exact_tribes_stats(TribesParams(2, 2))
    assert law.mean_size(value=0) == stats.mean_x_blocked


def test_pivotal_size_equals_one_short_tribes_pointwise():
    params = TribesParams(2, 3)
    T = tribes(2, 3)
    sizes = pivotal_count_table(T)
    for code in range(1 << params.n):
        rec = tribes_record_from_code(params, code)
        if rec["full_plus"] == 0:
            assert sizes[code] == rec["one_minus"]


def test_pivotal_law_tail_matches_size_marginal():
    law = pivotal_law(Majority(5))
    marg = law.size_marginal()
    for a in range(-1, 6):
        assert law.tail(a) == sum(marg[a + 1 :])


def test_pivotal_law_conditioning_on_missing_value_raises():
    law = pivotal_law(Parity(3))
    with pytest.raises(UsageError):
        law.mean_size(value=0)


def test_parity_pivotal_law_is_degenerate():
    law = pivotal_law(Parity(4))
    assert law.size_marginal()[4] == Fraction(1)
    assert law.mean_size() == Fraction(4)


# --- membership marginal identity ----------------------------------------


def test_majority3_first_order_marginals_agree():
    piv = pivotal_marginals(Majority(3), order=1)
    spec = spectral_marginals(Majority(3), order=1)
    assert piv == pytest.approx(spec, abs=1e-12)
    assert piv == pytest.approx([0.5, 0.5, 0.5], abs=1e-12)


@given(pm1_tables)
def test_marginals_agree_at_orders_one_and_two(f):
    # membership marginals of the pivotal set and of the spectral sample
    # coincide exactly at orders 1 and 2, for every sign-valued function
    for order in (1, 2):
        piv = pivotal_marginals(f, order=order)
        spec = spectral_marginals(f, order=order)
        assert np.max(np.abs(piv - spec)) < 1e-12


def test_spectral_marginals_reject_ternary():
    with pytest.raises(UsageError):
        spectral_marginals(bribable(2, 2), order=1)


def test_marginals_reject_bad_order():
    with pytest.raises(UsageError):
        spectral_marginals(Majority(3), order=3)
    with pytest.raises(UsageError):
        pivotal_marginals(Majority(3), order=0)


# --- caps ------------------------------------------------------------------


def test_exhaustive_caps_raise():
    with pytest.raises(ExhaustiveCapError):
        truth_table(Parity(25))
    with pytest.raises(ExhaustiveCapError):
        pivotal_law(Parity(21))
    with pytest.raises(ExhaustiveCapError):
        spectral_marginals(Parity(17), order=1)
    with pytest.raises(ExhaustiveCapError):
        exact_disagreement_direct(Parity(13), 0.1)


def test_cap_error_is_a_usage_error():
    with pytest.raises(UsageError):
        truth_table(Parity(25))


# --- binomial tail ----------------------------------------------------------


def test_binomial_tail_hand_values():
    assert binomial_tail(3, Fraction(1, 2), 1) == Fraction(1, 2)
    assert binomial_tail(2, Fraction(1, 2), 0) == Fraction(3, 4)
    assert binomial_tail(4, Fraction(1, 6), 3) == Fraction(1, 1296)


def test_binomial_tail_edges():
    assert binomial_tail(5, Fraction(1, 3), -1) == Fraction(1)
    assert binomial_tail(5, Fraction(1, 3), 5) == Fraction(0)


@given(
    st.integers(min_value=1, max_value=12),
    st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100)),
    st.integers(min_value=-1, max_value=13),
)
def test_binomial_tail_matches_term_sum(k, p, a):
    a = min(a, k)
    direct = sum(
        Fraction(math.comb(k, m)) * p ** m * (1 - p) ** (k - m)
        for m in range(max(a + 1, 0), k + 1)
    )
    assert binomial_tail(k, p, a) == direct
