import math

import numpy as np
import pytest

from optstab.bounds import (
    CONVEX,
    STRONGLY_CONVEX,
    BoundQuery,
    NoBoundError,
    UniversalConstants,
    convergence_lower_bound,
    early_stopping_T,
    minimax_bound,
    sgld_burn_in,
    stability_bound,
    stability_bound_table_form,
    table_exponent,
    tradeoff_check,
)
from optstab.losses import LossConstants, ValidationError
from optstab.optimizers import fixed, power

C_CONVEX = LossConstants(L=1.0, beta=0.25, alpha=0.0, R=1.0)


def q(method, setting=CONVEX, constants=C_CONVEX, schedule=None, T=10, n=100,
      gamma=0.0, tau=None):
    return BoundQuery(method=method, setting=setting, constants=constants,
                      schedule=schedule or fixed(0.1), T=T, n=n, gamma=gamma,
                      tau=tau)


SC = LossConstants(L=1.0, beta=2.0, alpha=1.0, R=1.0)


# ---------------------------------------------------------------- stability


def test_gd_convex_bound():
    assert stability_bound(q("gd", T=100, n=500)) == pytest.approx(0.04)


def test_nag_convex_bound():
    assert stability_bound(q("nag", T=10, n=500)) == pytest.approx(0.08)


def test_hb_convex_bound():
    # 4 * 0.1 * 10 / ((1 - sqrt(0.8)) * 500), evaluated exactly
    expect = 4.0 * 0.1 * 10 / ((1 - math.sqrt(0.8)) * 500)
    got = stability_bound(q("hb", T=10, n=500, gamma=0.8))
    assert got == pytest.approx(expect, abs=1e-12)
    assert got == pytest.approx(0.0757771, abs=1e-6)


def test_sgd_power_bound():
    got = stability_bound(q("sgd", schedule=power(0.1, 0.5), T=100, n=500))
    assert got == pytest.approx(2 * 0.1 * 1 * 10 / 500)


def test_gd_strongly_convex_limit():
    sc = LossConstants(L=1.0, beta=2.0, alpha=1.0, R=1.0)
    got = stability_bound(q("gd", setting=STRONGLY_CONVEX, constants=sc,
                            schedule=fixed(0.5), T=100000, n=100))
    assert got == pytest.approx(4.0 / 100)


def test_sgld_bound_example():
    got = stability_bound(q("sgld", schedule=power(0.5, 1.0), T=10, n=100, tau=1.0))
    # k0 = 1; sum_{t=2}^{10} 0.5/t = 0.5 (H_10 - 1)
    tail = 0.5 * (sum(1.0 / t for t in range(1, 11)) - 1.0)
    assert got == pytest.approx((1.0 / 100) * (1 + math.sqrt(tail)), abs=1e-12)
    assert got == pytest.approx(0.019821, abs=1e-5)


def test_sgld_burn_in():
    assert sgld_burn_in(0.5, 1.0, 1.0) == 1
    assert sgld_burn_in(3.7, 1.0, 1.0) == 4
    assert sgld_burn_in(4.0, 1.0, 1.0) == 5  # needs eta_t tau L^2 strictly < 1


def test_no_bound_pairs_raise():
    with pytest.raises(NoBoundError):
        stability_bound(q("hb", setting=STRONGLY_CONVEX, constants=SC,
                          schedule=fixed(0.1), gamma=0.5))
    with pytest.raises(NoBoundError):
        stability_bound(q("nag", schedule=power(0.1, 0.5)))
    with pytest.raises(NoBoundError):
        stability_bound(q("sgld", schedule=fixed(0.1), tau=1.0))
    with pytest.raises(NoBoundError):  # raised even at T = 0
        stability_bound(q("hb", setting=STRONGLY_CONVEX, constants=SC,
                          schedule=fixed(0.1), gamma=0.5, T=0))


@pytest.mark.parametrize("query", [
    q("gd"),
    q("sgd"),
    q("nag"),
    q("hb", gamma=0.8),
    q("sgd", schedule=power(0.1, 0.5)),
    q("sgld", schedule=power(0.5, 1.0), tau=1.0),
    q("gd", setting=STRONGLY_CONVEX, constants=SC, schedule=fixed(0.5)),
    q("sgd", setting=STRONGLY_CONVEX, constants=SC, schedule=fixed(0.5)),
    q("nag_sc", setting=STRONGLY_CONVEX, constants=SC, schedule=fixed(0.5)),
], ids=lambda v: f"{v.method}-{v.setting}-{v.schedule.kind}")
def test_zero_at_T0_and_nondecreasing_and_inverse_n(query):
    import dataclasses

    assert stability_bound(dataclasses.replace(query, T=0)) == 0.0
    vals = [stability_bound(dataclasses.replace(query, T=T))
            for T in (0, 1, 2, 5, 10, 50, 100, 1000)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[1] > 0
    one = stability_bound(dataclasses.replace(query, n=query.n))
    half = stability_bound(dataclasses.replace(query, n=2 * query.n))
    assert half == pytest.approx(one / 2, rel=1e-15)


def test_nag_to_gd_ratio_is_2T():
    for T in (1, 3, 10, 200):
        ratio = stability_bound(q("nag", T=T)) / stability_bound(q("gd", T=T))
        assert ratio == pytest.approx(2.0 * T, rel=1e-12)


def test_strongly_convex_bounds_monotone_to_limit():
    import dataclasses

    for method, limit in (("gd", 4.0), ("sgd", 2.0), ("nag_sc", 4.0)):
        base = q(method, setting=STRONGLY_CONVEX, constants=SC, schedule=fixed(0.5),
                 n=100)
        vals = np.array([stability_bound(dataclasses.replace(base, T=T))
                         for T in range(0, 200)])
        diffs = np.diff(vals)
        assert np.all(diffs >= 0)
        # strictly increasing until the geometric term underflows the limit
        assert np.all(diffs[:20] > 0)
        assert np.all(vals <= limit / 100 + 1e-15)
        assert stability_bound(dataclasses.replace(base, T=100000)) == pytest.approx(
            limit / 100)


def test_doubling_exponents_for_power_law_methods():
    import dataclasses

    cases = [(q("gd"), 1.0), (q("sgd"), 1.0), (q("hb", gamma=0.8), 1.0),
             (q("nag"), 2.0), (q("sgd", schedule=power(0.1, 0.5)), 0.5),
             (q("sgd", schedule=power(0.1, 0.3)), 0.7)]
    for base, exponent in cases:
        for T in (1, 4, 32, 256):
            lhs = math.log(stability_bound(dataclasses.replace(base, T=2 * T))) \
                - math.log(stability_bound(dataclasses.replace(base, T=T)))
            assert lhs == pytest.approx(exponent * math.log(2), abs=1e-12)


def test_table_exponents():
    assert table_exponent("gd", fixed(0.1)) == 1.0
    assert table_exponent("sgd", fixed(0.1)) == 1.0
    assert table_exponent("hb", fixed(0.1)) == 1.0
    assert table_exponent("nag", fixed(0.1)) == 2.0
    assert table_exponent("sgd", power(0.1, 0.5)) == 0.5
    assert table_exponent("sgld", power(0.5, 1.0)) == 0.25


def test_sgld_table_form_is_quarter_power():
    import dataclasses

    base = q("sgld", schedule=power(0.5, 1.0), tau=2.0, n=100)
    for T in (4, 16, 256):
        ratio = stability_bound_table_form(dataclasses.replace(base, T=2 * T)) \
            / stability_bound_table_form(dataclasses.replace(base, T=T))
        assert ratio == pytest.approx(2 ** 0.25, rel=1e-12)


# ------------------------------------------------------- convergence bounds


def test_default_universal_constants():
    c = UniversalConstants()
    assert c.c1 == pytest.approx(256 * math.sqrt(6))
    assert c.c2 == 2097152.0
    assert c.c3 == 192.0


def test_convergence_gd_convex_example():
    got = convergence_lower_bound(q("gd", constants=LossConstants(1, 1, 0, 1)))
    assert got == pytest.approx(1 / 4194304, rel=1e-12)
    assert got == pytest.approx(2.3842e-7, rel=1e-4)


def test_convergence_nag_convex_example():
    got = convergence_lower_bound(q("nag", constants=LossConstants(1, 1, 0, 1)))
    assert got == pytest.approx(1 / 83886080, rel=1e-12)
    assert got == pytest.approx(1.1921e-8, rel=1e-4)


def test_convergence_strongly_convex_offset_is_negative():
    base = q("gd", setting=STRONGLY_CONVEX, constants=SC, schedule=fixed(0.5),
             T=100000, n=50)
    got = convergence_lower_bound(base)
    expect = SC.beta * SC.R ** 2 / (192 * 50) - 4 * (SC.R * SC.beta) ** 2 / (SC.alpha * 50)
    assert got == pytest.approx(expect, rel=1e-9)
    assert got < 0
    assert convergence_lower_bound(base, clamp=True) == 0.0


def test_convergence_nag_strongly_convex_decay_rate():
    import dataclasses

    base = q("nag_sc", setting=STRONGLY_CONVEX, constants=SC, schedule=fixed(0.5),
             n=50)
    kappa = SC.beta / SC.alpha
    bulk = 4 * (SC.R * SC.beta) ** 2 / (SC.alpha * 50)
    vals = [convergence_lower_bound(dataclasses.replace(base, T=T)) for T in (1, 2, 3)]
    diffs = np.diff(vals)
    assert diffs[1] / diffs[0] == pytest.approx(1 - 1 / math.sqrt(kappa), rel=1e-9)
    assert bulk > 0


def test_convergence_requires_T_at_least_1():
    with pytest.raises(ValidationError):
        convergence_lower_bound(q("gd", T=0))
    with pytest.raises(NoBoundError):
        convergence_lower_bound(q("hb", gamma=0.5))


# ---------------------------------------------------------------- minimax


def test_minimax_convex_example():
    assert minimax_bound(CONVEX, 4, 2.0, 1.0) == pytest.approx(0.0031894, abs=1e-6)


def test_minimax_strongly_convex_example():
    assert minimax_bound(STRONGLY_CONVEX, 4, 2.0, 1.0) == pytest.approx(4 / 768)


def test_minimax_monotone_in_n():
    for setting in (CONVEX, STRONGLY_CONVEX):
        vals = [minimax_bound(setting, n, 1.0, 1.0) for n in (1, 2, 5, 10, 100)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------- trade-off


def test_tradeoff_check():
    assert tradeoff_check(0.04, 0.0, 2.4e-7)
    assert tradeoff_check(0.0, 0.0, 0.0)
    assert not tradeoff_check(1e-9, 1e-9, 1e-3)
    with pytest.raises(ValidationError):
        tradeoff_check(-1.0, 0.0, 0.0)


# ---------------------------------------------------------------- early stop


def test_early_stopping_examples():
    assert early_stopping_T(400, 0.1, 1.0, 1.0) == 200
    assert early_stopping_T(10000, 0.1, 1.0, 1.0) == 1000


def test_early_stopping_square_root_scaling():
    base = early_stopping_T(1000, 0.1, 1.0, 1.0)
    assert early_stopping_T(4000, 0.1, 1.0, 1.0) == pytest.approx(2 * base, abs=1)


def test_early_stopping_floor_and_validation():
    assert early_stopping_T(1, 10.0, 10.0, 10.0) == 1
    with pytest.raises(ValidationError):
        early_stopping_T(0, 0.1, 1.0, 1.0)
