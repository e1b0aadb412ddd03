import numpy as np
import pytest

from boundarymle import (
    CanonicalPoint,
    Family,
    FisherInfo,
    GlmModel,
    RankError,
    canonical_statistic,
    cgf_check,
    cumulant,
    fisher_information,
    log_likelihood,
    mean_value,
    score,
    variance_value,
)

from conftest import SEC2_X, SEC2_Y, random_interior_model


def test_family_validation():
    with pytest.raises(ValueError):
        Family("gamma")
    with pytest.raises(ValueError):
        Family.bernoulli(trials=[0, 1])
    with pytest.raises(ValueError):
        Family.bernoulli(trials=[1.5, 2])
    with pytest.raises(ValueError):
        Family("poisson", trials=np.array([1.0, 2.0]))
    assert Family.poisson().trials_for(3).tolist() == [1, 1, 1]
    assert Family.bernoulli().trials_for(2).tolist() == [1, 1]


def test_model_validation():
    M = np.eye(3)
    with pytest.raises(ValueError):
        GlmModel(M=M, y=np.array([0, 1, -1]), family=Family.poisson())
    with pytest.raises(ValueError):
        GlmModel(M=M, y=np.array([0.5, 1, 1]), family=Family.poisson())
    with pytest.raises(ValueError):
        GlmModel(M=M, y=np.array([0, 1, 2]), family=Family.bernoulli())
    with pytest.raises(ValueError):
        GlmModel(M=M, y=np.array([0, 1]), family=Family.poisson())
    with pytest.raises(RankError):
        GlmModel(M=np.ones((3, 2)), y=np.zeros(3), family=Family.poisson())
    with pytest.raises(RankError):
        GlmModel(M=np.ones((2, 3)), y=np.zeros(2), family=Family.poisson())


def test_canonical_statistic_separated(sep_model):
    assert np.allclose(canonical_statistic(sep_model), [4.0, 300.0])


def test_cumulant_closed_forms():
    fam_b = Family.bernoulli()
    assert cumulant(fam_b, 0.0) == pytest.approx(np.log(2.0))
    assert cumulant(fam_b, np.array([1000.0])) == pytest.approx(1000.0)
    assert cumulant(fam_b, np.array([-1000.0]))[0] == pytest.approx(0.0, abs=1e-300)
    # two trials double the cumulant
    assert cumulant(fam_b, 1.3, trials=2.0) == pytest.approx(2 * cumulant(fam_b, 1.3))
    fam_p = Family.poisson()
    assert cumulant(fam_p, np.log(5.0)) == pytest.approx(5.0)


def test_mean_variance_closed_forms():
    model = GlmModel(M=np.eye(2), y=np.array([0, 1]), family=Family.bernoulli())
    pt = CanonicalPoint.from_beta(model, np.array([0.0, np.log(3.0)]))
    assert mean_value(model, pt) == pytest.approx([0.5, 0.75])
    assert variance_value(model, pt) == pytest.approx([0.25, 0.1875])
    modelp = GlmModel(M=np.eye(2), y=np.array([2, 3]), family=Family.poisson())
    ptp = CanonicalPoint.from_beta(modelp, np.array([0.0, np.log(4.0)]))
    assert mean_value(modelp, ptp) == pytest.approx([1.0, 4.0])
    assert variance_value(modelp, ptp) == pytest.approx([1.0, 4.0])


def test_loglik_bernoulli_closed_form():
    # single observation, y = 1, theta = log(p / (1-p)) with p = 0.8
    model = GlmModel(M=np.array([[1.0]]), y=np.array([1]), family=Family.bernoulli())
    theta = np.log(0.8 / 0.2)
    pt = CanonicalPoint.from_beta(model, np.array([theta]))
    assert log_likelihood(model, pt) == pytest.approx(np.log(0.8))


def test_score_is_gradient():
    rng = np.random.default_rng(11)
    for tag in ("bernoulli", "poisson"):
        for _ in range(10):
            model = random_interior_model(rng, tag)
            beta = rng.standard_normal(model.p) * 0.5
            pt = CanonicalPoint.from_beta(model, beta)
            g = score(model, pt)
            h = 1e-6
            for k in range(model.p):
                e = np.zeros(model.p)
                e[k] = h
                lp = log_likelihood(model, CanonicalPoint.from_beta(model, beta + e))
                lm = log_likelihood(model, CanonicalPoint.from_beta(model, beta - e))
                assert (lp - lm) / (2 * h) == pytest.approx(g[k], abs=1e-4, rel=1e-4)


def test_fisher_is_negative_hessian():
    rng = np.random.default_rng(12)
    for tag in ("bernoulli", "poisson"):
        model = random_interior_model(rng, tag, n=7, p=3)
        beta = rng.standard_normal(model.p) * 0.3
        pt = CanonicalPoint.from_beta(model, beta)
        F = fisher_information(model, pt)
        assert F.check_psd()
        h = 1e-5
        for a in range(model.p):
            e = np.zeros(model.p)
            e[a] = h
            gp = score(model, CanonicalPoint.from_beta(model, beta + e))
            gm = score(model, CanonicalPoint.from_beta(model, beta - e))
            num = -(gp - gm) / (2 * h)
            assert np.allclose(num, F.matrix[a], atol=1e-4, rtol=1e-4)


def test_loglik_concave_along_segments():
    rng = np.random.default_rng(13)
    for tag in ("bernoulli", "poisson"):
        for _ in range(20):
            model = random_interior_model(rng, tag)
            b1 = rng.standard_normal(model.p)
            b2 = rng.standard_normal(model.p)
            lam = rng.uniform(0.1, 0.9)
            mid = lam * b1 + (1 - lam) * b2
            l_mid = log_likelihood(model, CanonicalPoint.from_beta(model, mid))
            l_mix = lam * log_likelihood(
                model, CanonicalPoint.from_beta(model, b1)
            ) + (1 - lam) * log_likelihood(model, CanonicalPoint.from_beta(model, b2))
            assert l_mid >= l_mix - 1e-9


def test_cgf_gradient_is_mean_statistic():
    # d/dt of the shifted-cumulant difference at t = 0 is M.T @ mean
    rng = np.random.default_rng(14)
    model = random_interior_model(rng, "poisson", n=6, p=2)
    beta = np.array([0.1, -0.2])
    pt = CanonicalPoint.from_beta(model, beta)
    expected = model.M.T @ mean_value(model, pt)
    h = 1e-6
    for k in range(model.p):
        e = np.zeros(model.p)
        e[k] = h
        d = (cgf_check(model, pt, e) - cgf_check(model, pt, -e)) / (2 * h)
        assert d == pytest.approx(expected[k], rel=1e-5, abs=1e-5)


def test_cgf_check_degenerate_limit(sep_model):
    # far along the limit direction the CGF of the submodel tends to the
    # linear function <M.T y, t> on a neighborhood of 0
    stat = canonical_statistic(sep_model)
    beta = 100.0 * np.array([-50.0, 1.0]) / np.linalg.norm([-50.0, 1.0])
    pt = CanonicalPoint.from_beta(sep_model, beta)
    for t in ([0.05, 0.001], [-0.05, 0.002], [0.0, -0.001]):
        t = np.array(t)
        assert cgf_check(sep_model, pt, t) == pytest.approx(float(stat @ t), abs=1e-6)


def test_fisher_info_requires_symmetry():
    with pytest.raises(ValueError):
        FisherInfo(np.array([[1.0, 2.0], [0.0, 1.0]]))
