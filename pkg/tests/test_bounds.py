import math

import numpy as np
import pytest

from heavybo.bounds import (
    BoundConstants,
    a5_lr_bound,
    c2_constant,
    check_assumptions,
    concentration_audit,
    empirical_top_singular,
    lr_bound_A6,
    lr_bound_cor7,
    lr_bound_cor8,
    rareweak_bound,
    report_rows,
    singular_value_bound,
    theorem1_bound,
)
from heavybo.datagen import MeanSpec, MixtureConfig, build_mean_vector, generate_dataset, z_matrix
from heavybo.errors import ConfigError, DataError, DomainError

from conftest import zero_cluster

ALPHAS = (0.25, 0.5, 1.0, 2.0)


def test_constants_positive_and_loadable(tmp_path):
    with pytest.raises(ConfigError):
        BoundConstants(c5=0)
    (tmp_path / "c.json").write_text('{"C": 2, "c9": 0.5}')
    assert BoundConstants.load(tmp_path / "c.json") == BoundConstants(C=2, c9=0.5)
    (tmp_path / "c.txt").write_text("# tuned\nc = 3\nc10=4\n")
    assert BoundConstants.load(tmp_path / "c.txt") == BoundConstants(c=3, c10=4)
    (tmp_path / "bad.txt").write_text("c11 = 1\n")
    with pytest.raises(ConfigError):
        BoundConstants.load(tmp_path / "bad.txt")


def test_c2_values():
    assert c2_constant(2, 0.5) == 32.0
    assert c2_constant(2, 1.0) == 16.0
    # (8/1) Gamma(2) + 1 + 2 = 11 beats 8
    assert c2_constant(1, 1.0) == 22.0
    with pytest.raises(DomainError):
        c2_constant(2.5, 1.0)


def test_assumption_a3_example():
    rep = check_assumptions(p=100, n=5, mu_norm=math.sqrt(2), delta=0.1, alpha=2, kappa=1)
    a3 = rep["A3"]
    assert a3.rhs == pytest.approx(max(10, 25 * math.log(50)))
    assert a3.rhs == pytest.approx(97.80057513570365, rel=1e-12)
    assert a3.satisfied


def test_assumption_a1_fails():
    rep = check_assumptions(p=100, n=5, mu_norm=1, delta=0.5, alpha=2, kappa=1, consts=BoundConstants(C=10))
    assert rep["A1"].satisfied is False
    assert not rep.all_satisfied


def test_assumption_a5_with_and_without_beta():
    args = dict(p=400, n=10, mu_norm=3.0, delta=0.1, alpha=1, kappa=1)
    ceiling = check_assumptions(**args)["A5"]
    assert ceiling.satisfied is None
    with_s1 = check_assumptions(beta=1e-9, s1_bound=100.0, **args)["A5"]
    assert with_s1.rhs == pytest.approx(a5_lr_bound(400, 10, 3.0, 0.1, 1, 1, 100.0))
    assert with_s1.rhs <= ceiling.rhs
    assert with_s1.satisfied
    assert check_assumptions(beta=1.0, **args)["A5"].satisfied is False


def test_assumption_domain_errors():
    with pytest.raises(DomainError):
        check_assumptions(p=10, n=2, mu_norm=1, delta=0.1, alpha=0, kappa=1)
    with pytest.raises(DomainError):
        check_assumptions(p=10, n=2, mu_norm=1, delta=1.0, alpha=1, kappa=1)


def test_report_rows_cover_every_check():
    keys = [k for k, _ in report_rows(check_assumptions(p=100, n=5, mu_norm=1, delta=0.1, alpha=2, kappa=1))]
    for name in ("A1", "A2", "A3", "A4", "A5"):
        assert f"{name}.satisfied" in keys
    assert "c2" in keys


def test_a3_rhs_monotone_in_n():
    for alpha in ALPHAS:
        vals = [check_assumptions(10, n, 2.0, 0.1, alpha, 1)["A3"].rhs for n in (2, 5, 10, 50, 200)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_a4_rhs_grows_as_alpha_shrinks():
    # log(n/delta) > 1, so L^(1/alpha) increases as alpha decreases
    for n in (5, 20, 100):
        vals = [check_assumptions(10, n, 2.0, 0.1, a, 1)["A4"].rhs for a in sorted(ALPHAS, reverse=True)]
        assert all(a < b for a, b in zip(vals, vals[1:]))


# -- singular value bound ---------------------------------------------------


def test_svb_zero_mean():
    consts = BoundConstants(c7=1e-300)
    for p in (50, 100, 200):
        val = singular_value_bound(p, 10, np.zeros(p), 0.1, 2, consts)
        assert val == pytest.approx(math.sqrt(p), rel=1e-12)
    ratio = singular_value_bound(200, 10, np.zeros(200), 0.1, 1, consts) / singular_value_bound(
        100, 10, np.zeros(100), 0.1, 1, consts
    )
    assert ratio == pytest.approx(math.sqrt(2))


def test_svb_reference_value():
    p, n, delta = 1000, 20, 0.05
    mu = build_mean_vector(MeanSpec.dense(), p)  # 100 ones
    inner = 1 + math.sqrt(20) * 100 / 1000 + 2 * 20 * 100 / 1000 + (1 + math.sqrt(20)) / 1000 * (
        20 * math.log(9) + math.log(80)
    )
    assert singular_value_bound(p, n, mu, delta, 2) == pytest.approx(math.sqrt(1000) * inner, rel=1e-14)
    assert singular_value_bound(p, n, mu, delta, 2) == pytest.approx(180.61863906397784, rel=1e-12)


def test_svb_length_check():
    with pytest.raises(DomainError):
        singular_value_bound(10, 2, np.zeros(9), 0.1, 2)


# -- empirical singular value -----------------------------------------------


def test_top_singular_examples():
    z = np.zeros((5, 2))
    z[0, 0], z[1, 1] = 3.0, 1.0
    assert empirical_top_singular(z) == pytest.approx(3.0, rel=1e-10)
    u, v = np.arange(1.0, 7.0), np.array([2.0, -1.0, 0.5])
    assert empirical_top_singular(np.outer(u, v)) == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-12)


def test_top_singular_vs_svd():
    z = np.random.default_rng(0).standard_normal((30, 10))
    assert empirical_top_singular(z) == pytest.approx(np.linalg.svd(z, compute_uv=False)[0], rel=1e-6)


def test_top_singular_ones_in_null_space():
    z = np.array([[1.0, -1.0], [2.0, -2.0]])
    assert empirical_top_singular(z) == pytest.approx(np.linalg.svd(z, compute_uv=False)[0], rel=1e-8)


def test_top_singular_zero_matrix():
    with pytest.raises(DataError):
        empirical_top_singular(np.zeros((4, 3)))


@pytest.mark.parametrize("seed", range(10))
def test_top_singular_rank_bounds(seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_t(2, size=(40, 8))
    s1, fro = empirical_top_singular(z), np.linalg.norm(z)
    assert fro / math.sqrt(8) * (1 - 1e-9) <= s1 <= fro * (1 + 1e-9)


def test_top_singular_scales_like_sqrt_p():
    ratios = []
    for p in (200, 800, 3200):
        cfg = MixtureConfig(p=p, n=20, shape=2.0, mean=MeanSpec.rare_weak(0, 0), seed=p)
        ratios.append(empirical_top_singular(z_matrix(generate_dataset(cfg))) / math.sqrt(p))
    assert max(ratios) / min(ratios) <= 1.5


# -- generalization bounds --------------------------------------------------


def test_theorem1_examples():
    assert theorem1_bound(0.1, 0.0, 100, 2) == 1.0
    p = 60
    assert theorem1_bound(0.05, math.sqrt(p), p, 2) == pytest.approx(0.05 + math.exp(-p), rel=1e-15)
    p = 1500
    expo = p ** (1 / 3)
    assert expo == pytest.approx(11.447142425533317)
    val = theorem1_bound(0.05, p ** (1 / 3), p, 2)
    assert val - 0.05 == pytest.approx(math.exp(-expo), rel=1e-9)
    assert val - 0.05 == pytest.approx(1.0679949792358361e-05, rel=1e-6)


def test_theorem1_monotone():
    mus = np.linspace(0, 30, 16)
    for alpha in ALPHAS:
        vals = [theorem1_bound(0.05, m, 400, alpha) for m in mus]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        vals = [theorem1_bound(0.05, 10.0, p, alpha) for p in (10, 100, 1000, 10_000)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_rareweak_examples():
    for lam, s in ((0.5, 9), (2.0, 3), (1.3, 17)):
        assert rareweak_bound(0.1, lam, s, 500, 1) == pytest.approx(theorem1_bound(0.1, lam * math.sqrt(s), 500, 1))
    assert rareweak_bound(0.1, 2.0, 0, 500, 1) == 1.0
    assert rareweak_bound(0.0, 1.0, 400, 10_000, 1) == pytest.approx(math.exp(-4.0), rel=1e-14)


# -- learning-rate bounds ---------------------------------------------------


def test_cor7():
    assert lr_bound_cor7(1000) == 0.001
    with pytest.raises(DomainError):
        lr_bound_cor7(0)


def test_cor8():
    for n in (3, 10, 100):
        assert lr_bound_cor8(500, n, 2) == pytest.approx(1 / 500 * (1 + math.log(n) ** -0.5) ** -2)
    vals = [lr_bound_cor8(1e4, 100, a) for a in (0.5, 1, 2)]
    assert vals[0] < vals[1] < vals[2]
    with pytest.raises(DomainError):
        lr_bound_cor8(10, 1, 1)


@pytest.mark.parametrize("p", [10, 1000, 10**5])
@pytest.mark.parametrize("n", [3, 20, 500])
def test_cor8_nonincreasing_as_alpha_drops(p, n):
    vals = [lr_bound_cor8(p, n, a) for a in (2, 1, 0.5, 0.25)]
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_a6_consistent_with_a5():
    for p, n, alpha in ((1000, 20, 2), (400, 10, 1), (5000, 50, 0.5)):
        mu = build_mean_vector(MeanSpec.dense(), p)
        svb = singular_value_bound(p, n, mu, 0.1, alpha)
        a5 = a5_lr_bound(p, n, float(np.linalg.norm(mu)), 0.1, alpha, 1.0, svb)
        assert lr_bound_A6(p, n, mu, 0.1, alpha, 1.0) <= a5 * (1 + 1e-12)


def test_a6_zero_mean_branches():
    p, n, delta = 400, 10, 0.1
    tail = (n * math.log(9) + math.log(4 / delta)) ** 1.0
    first = 8 / p / (1 + tail / p) ** 2
    assert first == pytest.approx(0.017661272882495298, rel=1e-12)
    second = 1 / (16 * p) / (1 + 2 * n / p * math.sqrt(p) * math.log(n / delta) ** 0.5)
    assert second == pytest.approx(4.966677920050401e-05, rel=1e-12)
    assert lr_bound_A6(p, n, np.zeros(p), delta, 2, 1.0) == pytest.approx(min(first, second), rel=1e-12)


def test_a6_decreases_with_p_past_the_tail_term():
    # first branch is 8 p / (p + T)^2 with T the singular-value tail term: falling only once p >= T
    n, delta = 10, 0.1
    for alpha in ALPHAS:
        tail = (n * math.log(9) + math.log(4 / delta)) ** (2 / alpha)
        for p in (100, 1000, 10_000, 10**6):
            lo, hi = lr_bound_A6(p, n, np.zeros(p), delta, alpha, 1), lr_bound_A6(2 * p, n, np.zeros(2 * p), delta, alpha, 1)
            if p >= tail:
                assert hi < lo
    # below the tail term the bound can rise with p
    assert lr_bound_A6(200, n, np.zeros(200), delta, 0.25, 1) > lr_bound_A6(100, n, np.zeros(100), delta, 0.25, 1)


# -- concentration audit ----------------------------------------------------


def test_audit_degenerate():
    cfg = MixtureConfig(p=27, n=12, mean=MeanSpec.dense(), seed=1)
    ds = generate_dataset(cfg, cluster_sampler=zero_cluster)
    aud = concentration_audit(ds)
    assert aud.norm_ratio_range == pytest.approx((9 / 27, 9 / 27))
    assert aud.clean_mu_dot_range == pytest.approx((9.0, 9.0))
    assert aud.noisy_mu_dot_range is None
    assert aud.noisy_fraction == 0.0
    assert aud.separable
    assert aud.cluster_norm_ratio == 0.0


def test_audit_noisy_fraction():
    ds = generate_dataset(MixtureConfig(p=5, n=1000, noise_rate=0.05, seed=2))
    aud = concentration_audit(ds)
    assert abs(aud.noisy_fraction - 0.05) <= 0.03
    lo, hi = aud.noisy_mu_dot_range
    assert lo <= hi


def test_audit_norm_ratio_concentrates():
    good = 0
    for seed in range(100):
        ds = generate_dataset(MixtureConfig(p=2000, n=50, shape=2.0, seed=seed))
        lo, hi = concentration_audit(ds).norm_ratio_range
        good += 0.5 <= lo <= hi <= 2.0
    assert good >= 95
