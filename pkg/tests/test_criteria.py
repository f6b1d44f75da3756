import numpy as np
import pytest

from prunekit import (
    Criterion,
    GramAccumulator,
    WeightLayer,
    score_magnitude,
    score_sparsegpt,
    score_stade,
    score_stade_star,
    score_wanda,
    select_criterion,
    stats_init,
    stats_update,
)
from prunekit.errors import (
    DimensionMismatch,
    EmptyStats,
    InsufficientSamples,
    NonFiniteInput,
    SingularGram,
)


def stats_of(rows):
    rows = np.asarray(rows, dtype=np.float64)
    return stats_update(stats_init(rows.shape[1]), rows)


def test_magnitude_absolute_value():
    scores = score_magnitude(np.array([[-3.0], [2.0]]))
    assert np.array_equal(scores, [[3.0], [2.0]])


def test_magnitude_zero_weights():
    assert np.array_equal(score_magnitude(np.zeros((3, 2))), np.zeros((3, 2)))


def test_magnitude_sign_flip_invariant():
    w = np.random.default_rng(0).standard_normal((4, 3))
    assert np.array_equal(score_magnitude(w), score_magnitude(-w))


def test_magnitude_rejects_nan():
    with pytest.raises(NonFiniteInput):
        score_magnitude(np.array([[np.nan]]))


def test_wanda_norm_times_weight():
    s = stats_of([[3.0], [4.0]])
    scores = score_wanda(np.array([[2.0]]), s)
    assert scores[0, 0] == pytest.approx(10.0, rel=1e-12)


def test_wanda_zero_weight_scores_zero():
    s = stats_of([[3.0], [4.0]])
    assert score_wanda(np.array([[0.0]]), s)[0, 0] == 0.0


def test_wanda_constant_feature():
    s = stats_of([[10.0], [10.0]])
    scores = score_wanda(np.array([[0.5]]), s)
    assert scores[0, 0] == pytest.approx(np.sqrt(200.0) * 0.5, rel=1e-12)


def test_wanda_requires_rows():
    with pytest.raises(EmptyStats):
        score_wanda(np.ones((1, 1)), stats_init(1))


def test_wanda_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        score_wanda(np.ones((2, 1)), stats_of([[1.0]]))


def test_stade_centered_norm_times_weight():
    s = stats_of([[1.0], [-1.0]])
    scores = score_stade(np.array([[3.0]]), s)
    assert scores[0, 0] == pytest.approx(3.0 * np.sqrt(2.0), rel=1e-12)


def test_stade_constant_feature_scores_zero():
    s = stats_of([[10.0], [10.0]])
    assert score_stade(np.array([[0.5]]), s)[0, 0] == 0.0


def test_stade_rejects_single_row():
    with pytest.raises(InsufficientSamples):
        score_stade(np.ones((1, 1)), stats_of([[1.0]]))


def test_stade_equals_wanda_after_exact_centering():
    rng = np.random.default_rng(5)
    rows = rng.uniform(-4, 4, size=(60, 8)) * rng.uniform(0.1, 5.0, size=8)
    rows = rows - rows.mean(axis=0)
    w = rng.standard_normal((8, 6))
    s = stats_of(rows)
    np.testing.assert_allclose(score_stade(w, s), score_wanda(w, s),
                               rtol=1e-9, atol=1e-9)


def test_stade_star_second_moment_oracle():
    # Expected value from a direct two-pass second moment, independent of
    # the accumulator path.
    rows = np.array([[1.0], [4.0], [7.0]])
    w = np.array([[2.0]])
    expected = np.sqrt(np.mean(rows**2)) * 2.0
    got = score_stade_star(w, stats_of(rows))[0, 0]
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(2.0 * np.sqrt(22.0), rel=1e-12)


def test_stade_star_constant_feature_keeps_mean_term():
    s = stats_of([[10.0], [10.0]])
    scores = score_stade_star(np.array([[0.5]]), s)
    assert scores[0, 0] == pytest.approx(5.0, rel=1e-12)


def test_stade_star_ranks_like_stade_on_centered_data():
    rng = np.random.default_rng(9)
    rows = rng.standard_normal((40, 10)) * rng.uniform(0.2, 3.0, size=10)
    rows = rows - rows.mean(axis=0)
    w = rng.standard_normal((10, 4))
    s = stats_of(rows)
    a = np.argsort(score_stade_star(w, s), axis=0, kind="stable")
    b = np.argsort(score_stade(w, s), axis=0, kind="stable")
    assert np.array_equal(a, b)


def test_stade_star_rejects_single_row():
    with pytest.raises(InsufficientSamples):
        score_stade_star(np.ones((1, 1)), stats_of([[3.0]]))


def test_sparsegpt_identity_gram():
    g = GramAccumulator(1)
    g.gram = np.eye(1)
    scores = score_sparsegpt(np.array([[2.0]]), g, damping=0.0, auto_damping=False)
    assert scores[0, 0] == pytest.approx(4.0, rel=1e-12)


def test_sparsegpt_diagonal_gram_closed_form():
    g = GramAccumulator(2)
    g.gram = np.diag([4.0, 1.0])
    scores = score_sparsegpt(np.array([[1.0], [1.0]]), g, damping=0.0,
                             auto_damping=False)
    np.testing.assert_allclose(scores[:, 0], [4.0, 1.0], rtol=1e-12)


def test_sparsegpt_matches_dense_inverse():
    rng = np.random.default_rng(21)
    a = rng.standard_normal((20, 8))
    g = GramAccumulator(8)
    g.update(a)
    lam = 0.3
    w = np.ones((8, 1))
    scores = score_sparsegpt(w, g, damping=lam, auto_damping=False)
    dense_diag = np.diag(np.linalg.inv(g.gram + lam * np.eye(8)))
    np.testing.assert_allclose(1.0 / scores[:, 0], dense_diag, rtol=1e-5)


def test_sparsegpt_auto_damping_rescues_rank_deficiency():
    rows = np.ones((5, 3))  # rank-1 Gram
    g = GramAccumulator(3)
    g.update(rows)
    with pytest.raises(SingularGram):
        score_sparsegpt(np.ones((3, 1)), g, damping=0.0, auto_damping=False)
    scores = score_sparsegpt(np.ones((3, 1)), g, damping=0.0, auto_damping=True)
    assert np.isfinite(scores).all() and (scores > 0).all()


def test_gram_accumulator_symmetric():
    g = GramAccumulator(4)
    g.update(np.random.default_rng(2).standard_normal((30, 4)))
    assert g.n == 30
    assert np.abs(g.gram - g.gram.T).max() <= 1e-9
    assert (np.diag(g.gram) >= 0).all()


def test_gram_width_check():
    with pytest.raises(DimensionMismatch):
        GramAccumulator(3).update(np.ones((2, 4)))


def test_select_criterion_resolves_stade_w():
    centered = WeightLayer(np.ones((2, 2)), None, centered=True)
    uncentered = WeightLayer(np.ones((2, 2)), None, centered=False)
    assert select_criterion(Criterion("stade-w"), centered) == "wanda"
    assert select_criterion(Criterion("stade-w"), uncentered) == "stade"
    assert select_criterion(Criterion("magnitude"), centered) == "magnitude"
    assert select_criterion(Criterion("magnitude"), uncentered) == "magnitude"


def test_criterion_damping_validation():
    with pytest.raises(ValueError):
        Criterion("sparsegpt-score")
    with pytest.raises(ValueError):
        Criterion("wanda", damping=0.1)
    with pytest.raises(ValueError):
        Criterion("sparsegpt-score", damping=-1.0)
    with pytest.raises(ValueError):
        Criterion("not-a-criterion")
    assert Criterion("sparsegpt-score", damping="auto").damping == "auto"


def test_scores_non_negative():
    rng = np.random.default_rng(13)
    rows = rng.uniform(-5, 5, size=(30, 6))
    w = rng.standard_normal((6, 5))
    s = stats_of(rows)
    for scores in (score_magnitude(w), score_wanda(w, s), score_stade(w, s),
                   score_stade_star(w, s)):
        assert (scores >= 0).all() and np.isfinite(scores).all()


def test_column_scaling_covariance():
    rng = np.random.default_rng(17)
    rows = rng.uniform(-3, 3, size=(40, 5))
    w = rng.standard_normal((5, 4))
    alpha = 2.75
    scaled = rows.copy()
    scaled[:, 2] *= alpha
    s0, s1 = stats_of(rows), stats_of(scaled)
    for scorer in (score_wanda, score_stade):
        base, scaled_scores = scorer(w, s0), scorer(w, s1)
        np.testing.assert_allclose(scaled_scores[2], alpha * base[2],
                                   rtol=1e-9, atol=1e-12)
        others = [j for j in range(5) if j != 2]
        np.testing.assert_allclose(scaled_scores[others], base[others],
                                   rtol=1e-9, atol=1e-12)


def test_stade_argmin_matches_empirical_objective():
    # The squared score divided by (n-1) is the per-candidate variance
    # objective; argmins must coincide on every column.
    rng = np.random.default_rng(23)
    for _ in range(20):
        rows = rng.uniform(-5, 5, size=(30, 7)) * rng.uniform(0.1, 2.0, size=7)
        w = rng.uniform(-1, 1, size=(7, 3))
        s = stats_of(rows)
        scores = score_stade(w, s)
        objective = rows.var(axis=0, ddof=1)[:, None] * w**2
        assert np.array_equal(np.argmin(scores, axis=0),
                              np.argmin(objective, axis=0))
