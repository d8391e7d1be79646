"""Smoke tests for the python bindings: one pass over every exposed operation."""

import math

import numpy as np
import pytest

import timeagg


@pytest.fixture(scope="module")
def cohort():
    return timeagg.generate_cohort(n_patients=200, seed=11, signal_strength=0.8)


@pytest.fixture(scope="module")
def prepared(cohort):
    return timeagg.prepare(cohort, fractions=[0.6, 0.2, 0.2], seed=7)


@pytest.fixture(scope="module")
def model(prepared):
    return timeagg.train(
        "tdd_gru",
        prepared,
        units_input=8,
        units_agg=4,
        units_dense=4,
        epochs=30,
        seed=3,
    )


def test_generate_cohort_is_deterministic(cohort):
    again = timeagg.generate_cohort(n_patients=200, seed=11, signal_strength=0.8)
    assert cohort.size == again.size == 200
    assert cohort.prevalence() == again.prevalence()
    assert "cdai" in cohort.variable_names


def test_prepare_shapes(cohort, prepared):
    assert prepared.n_splits == 3
    total = sum(prepared.size(s) for s in range(3))
    assert total == cohort.size
    values = prepared.values(0)
    assert values.shape == (prepared.size(0), 3, len(cohort.variable_names))
    assert np.isfinite(values).all()
    assert set(prepared.labels(0)) <= {0, 1}


def test_train_predict_and_representation(prepared, model):
    assert model.kind == "tdd_gru"
    assert 1 <= model.best_epoch <= 30
    probs = model.predict(prepared, 2)
    assert probs.shape == (prepared.size(2),)
    assert ((probs > 0) & (probs < 1)).all()
    rep = model.representation(prepared, 2)
    assert rep.shape == (prepared.size(2), model.hyperparams["units_dense"])


def test_model_roundtrip(tmp_path, prepared, model):
    path = str(tmp_path / "model.json")
    model.save(path)
    reloaded = timeagg.Model.load(path)
    assert (reloaded.predict(prepared, 2) == model.predict(prepared, 2)).all()


def test_metrics():
    auc = timeagg.auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert auc == pytest.approx(0.75)
    point, lo, hi = timeagg.delong_ci([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
    assert lo <= point <= hi
    assert timeagg.relative_difference(0.8, 0.845) == pytest.approx(-0.0532544, abs=1e-5)


def test_learned_model_beats_chance(prepared, model):
    probs = model.predict(prepared, 2)
    auc = timeagg.auroc(list(probs), prepared.labels(2))
    assert auc > 0.6


def test_tsne_embeds_clusters():
    rng = np.random.default_rng(5)
    x = np.concatenate([rng.normal(0, 1, (30, 6)), rng.normal(8, 1, (30, 6))])
    emb = timeagg.tsne(x, perplexity=10, iters=300, seed=2)
    assert emb.shape == (60, 2)
    assert np.isfinite(emb).all()
    # same-cluster points end up closer than cross-cluster ones on average
    a, b = emb[:30], emb[30:]
    within = np.linalg.norm(a - a.mean(0), axis=1).mean()
    between = np.linalg.norm(a.mean(0) - b.mean(0))
    assert between > within


def test_permutation_importance(prepared, model):
    result = timeagg.permutation_importance(model, prepared, rounds=3, seed=4)
    f = len(result["variables"])
    assert result["relative_difference"].shape == (f, 3)
    assert 0.0 < result["baseline_auroc"] <= 1.0


def test_tune_returns_in_space_hyperparams(prepared):
    best = timeagg.tune("dense", prepared, trials=2, seed=5, epochs=4)
    assert best["units_input"] in (4, 8, 16, 32, 64)
    assert math.isfinite(best["objective"])
    assert best["n_trials"] == 2


def test_data_errors_surface_as_exceptions():
    with pytest.raises(timeagg.DataError):
        timeagg.auroc([0.5, 0.5], [1, 1])
