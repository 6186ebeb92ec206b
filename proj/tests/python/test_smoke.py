import math

import pytest

import difflab as dl


def desk():
    return dl.linear_schedule(100, 1e-3, 0.1)


def test_schedule_arrays():
    s = dl.linear_schedule(1000, 1e-4, 0.02)
    assert s.steps == 1000
    assert s.beta(1) == pytest.approx(1e-4)
    prod = 1.0
    for t in range(1, 1001):
        prod *= 1.0 - s.beta(t)
    assert s.alpha_bar(1000) == pytest.approx(prod, rel=1e-10)


def test_invalid_schedule_raises_validation_error():
    with pytest.raises(dl.ValidationError):
        dl.linear_schedule(10, 0.5, 1.5)
    assert issubclass(dl.ValidationError, dl.Error)


def test_kl_closed_form_reference_pair():
    q = dl.DiagGaussian([1.0], [1.0])
    p = dl.DiagGaussian([0.0], [4.0])
    assert dl.kl_closed_form(q, p) == pytest.approx(math.log(2) + 0.25 - 0.5, abs=1e-12)
    mc = dl.kl_mc(q, p, 100000, dl.Rng(1))
    assert abs(mc - 0.443147) < 0.02


def test_posterior_matches_formula():
    s = dl.Schedule([0.1, 0.2])
    g = dl.posterior_q([0.5], [1.0], 2, s)
    abar1, abar2 = 0.9, 0.9 * 0.8
    assert g.var[0] == pytest.approx((1 - abar1) / (1 - abar2) * 0.2)


def test_forward_and_mixture():
    rng = dl.Rng(3)
    states = dl.simulate_forward([1.0], desk(), rng)
    assert len(states) == 101 and states[0] == [1.0]
    x, label = dl.default_gmm().sample(rng)
    assert label in (0, 1) and len(x) == 1


def test_train_sample_and_checkpoint(tmp_path):
    s = desk()
    model = dl.init_noise_predictor(dl.Architecture(1, [16]), 0, dl.Rng(1))
    cfg = dl.TrainConfig()
    cfg.steps = 200
    report = dl.train(model, dl.default_gmm(), s, cfg, dl.Rng(2))
    assert report.loss_curve[0][0] == 0 and report.loss_curve[-1][0] == 200

    sc = dl.SamplerConfig()
    sc.kind = dl.SamplerKind.ddim
    sc.chains = 50
    sc.seed = 7
    a = dl.sample(model, sc, s)
    b = dl.sample(model, sc, s)
    assert a == b and len(a) == 50

    path = tmp_path / "m.ckpt"
    dl.save_checkpoint(model, s, path, seed=1)
    loaded, sched = dl.load_checkpoint(path)
    assert loaded.params == model.params
    assert sched.steps == 100
    assert loaded.predict([0.3], 10, None, s) == model.predict([0.3], 10, None, s)


def test_classifier_free_guidance_runs():
    s = desk()
    model = dl.init_noise_predictor(dl.Architecture(1, [8]), 2, dl.Rng(1))
    sc = dl.SamplerConfig()
    sc.chains = 10
    g = dl.GuidanceConfig(dl.GuidanceMode.cfg, 0.0, 1)
    assert dl.guided_sample(model, sc, g, s) == dl.sample(model, sc, s, 1)
    with pytest.raises(dl.ValidationError):
        dl.guided_sample(model, sc, dl.GuidanceConfig(dl.GuidanceMode.classifier, 1.0, 1), s)


def test_classifier_guidance_with_owned_classifier():
    s = desk()
    model = dl.init_noise_predictor(dl.Architecture(1, [8]), 0, dl.Rng(1))
    clf = dl.init_classifier(dl.Architecture(1, [8]), 2, dl.Rng(2))
    sc = dl.SamplerConfig()
    sc.chains = 5
    g = dl.GuidanceConfig(dl.GuidanceMode.classifier, 0.0, 1, clf)
    del clf
    assert dl.guided_sample(model, sc, g, s) == dl.sample(model, sc, s)


def test_estimators():
    g = dl.reparam_grad((0.5, 1.5), 200000, dl.Rng(4))
    assert g[0] == pytest.approx(0.5, rel=0.02) and g[1] == pytest.approx(1.5, rel=0.02)
    est, se = dl.mc_expectation(lambda r: 0.5 + 1.5 * r.normal(), lambda x: 0.5 * x * x, 100000, dl.Rng(5))
    assert abs(est - 1.25) < 4 * se


def test_evaluation():
    assert dl.wasserstein1_1d([0.0, 1.0], [1.0, 2.0]) == pytest.approx(1.0)
    assert dl.mode_masses([[-2.0], [2.0], [1.5]], dl.default_gmm()) == pytest.approx([1 / 3, 2 / 3])
