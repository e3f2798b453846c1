import numpy as np
import pytest

from slatesim.click_models import (
    ClickModelError,
    DctrParams,
    fit_dctr,
    fit_pbm,
    kendall_tau,
    normalized_propensities,
    propensity_mse,
    rerank_by_model,
)
from slatesim.engine import attractiveness
from slatesim.embeddings import sample_user
from slatesim.envs import make_env
from slatesim.harness import make_policy
from slatesim.logs import InteractionLog, LogRow, generate_log


def synthetic_pbm_log(n_rows, relevances, examinations, seed=0, obs_dim=2):
    """Rows with random permutations and clicks from a known position model."""
    rng = np.random.default_rng(seed)
    relevances = np.asarray(relevances)
    examinations = np.asarray(examinations)
    size = len(relevances)
    header = {
        "kind": "interaction_log", "env": "synthetic", "seed": seed,
        "policy": "synthetic", "n_sessions": n_rows, "slate_size": size,
        "n_items": size, "obs_dim": obs_dim,
    }
    log = InteractionLog(header=header)
    obs = np.ones(obs_dim)
    ranks = np.arange(1, size + 1)
    for r in range(n_rows):
        perm = rng.permutation(size)
        clicks = rng.random(size) < relevances[perm] * examinations
        log.rows.append(
            LogRow(session=r, step=1, observation=obs, items=perm.astype(np.int64),
                   ranks=ranks, clicks=clicks)
        )
    return log


# -- dCTR -------------------------------------------------------------------------


def test_dctr_is_click_ratio():
    params = DctrParams(clicks=np.array([3.0, 0.0]), impressions=np.array([10, 0]))
    assert params.ctr[0] == pytest.approx(0.3)
    assert params.ctr[1] == 0.0
    assert params.never_impressed.tolist() == [False, True]


def test_dctr_fit_counts():
    log = synthetic_pbm_log(500, [0.9, 0.5, 0.1], [1.0, 0.85, 0.7225], seed=1)
    params = fit_dctr(log)
    assert params.impressions.sum() == 500 * 3
    assert np.all(params.impressions == 500)
    assert params.ctr[0] > params.ctr[1] > params.ctr[2]  # unconfounded here


def test_dctr_empty_log_rejected():
    env = make_env("SlateRerank-Static", 0)
    from slatesim.logs import generate_log as gen

    with pytest.raises(ClickModelError):
        fit_dctr(gen(env, make_policy("random", env), 0, seed=0))


@pytest.fixture(scope="module")
def uniform_log_models():
    """One large uniform-logging dataset shared by the unbiasedness checks."""
    env = make_env("SlateRerank-Static", 3)
    log = generate_log(env, make_policy("random", env, seed=3), 10_000, seed=3)
    return env, log, fit_dctr(log), fit_pbm(log)


def test_dctr_unbiased_under_uniform_logging(uniform_log_models):
    """With uniform random logging on a static environment, dCTR ordering
    approaches the ordering of expected attractiveness over users. The
    catalog carries near-tied items, so a large-sample rank correlation is
    asserted rather than an exact ordering."""
    env, _, dctr, _ = uniform_log_models
    rng = np.random.default_rng(0)
    users = np.stack([sample_user(rng, 10) for _ in range(100_000)])
    cfg = env.config
    true_mean_attr = attractiveness(
        users @ env.catalog.vectors.T, cfg.lambda_scale, cfg.mu_shift, cfg.alpha_range
    ).mean(axis=0)
    assert kendall_tau(dctr.ctr, true_mean_attr) >= 0.7


def test_dctr_confounded_under_reverse_logging():
    """Reverse-oracle logging confounds rank with relevance; the PBM's
    personalized relevance head recovers per-user orderings far better than
    the state-blind CTR."""
    env = make_env("SlateRerank-Static", 4)
    log = generate_log(env, make_policy("reverse_oracle", env), 1500, seed=4)
    dctr = fit_dctr(log)
    pbm = fit_pbm(log)
    rng = np.random.default_rng(1)
    items = np.arange(10)
    taus_dctr, taus_pbm = [], []
    for _ in range(300):
        user = sample_user(rng, 10)
        obs = np.concatenate([user, np.zeros(10), np.ones(10)])
        true_rel = env.catalog.vectors @ user
        taus_dctr.append(kendall_tau(dctr.item_scores(obs, items), true_rel))
        taus_pbm.append(kendall_tau(pbm.item_scores(obs, items), true_rel))
    assert np.mean(taus_pbm) > np.mean(taus_dctr) + 0.2


# -- PBM fitting -----------------------------------------------------------------


def test_pbm_recovers_synthetic_generator():
    log = synthetic_pbm_log(50_000, [0.9, 0.5, 0.1], [1.0, 0.85, 0.7225], seed=2)
    params = fit_pbm(log)
    learned = normalized_propensities(params)
    assert np.abs(learned - np.array([1.0, 0.85, 0.7225])).max() < 0.05


def test_pbm_loglik_non_decreasing():
    log = synthetic_pbm_log(2000, [0.8, 0.4, 0.2], [1.0, 0.7, 0.5], seed=3)
    params = fit_pbm(log)
    trace = params.loglik_trace
    assert all(trace[i + 1] >= trace[i] - 1e-12 for i in range(len(trace) - 1))


def test_pbm_clicks_only_at_rank_one_zero_tail_propensity():
    rng = np.random.default_rng(4)
    header = {"kind": "interaction_log", "env": "synthetic", "seed": 4,
              "policy": "synthetic", "n_sessions": 3000, "slate_size": 3,
              "n_items": 3, "obs_dim": 2}
    log = InteractionLog(header=header)
    for r in range(3000):
        perm = rng.permutation(3)
        clicks = np.array([rng.random() < 0.6, False, False])
        log.rows.append(LogRow(session=r, step=1, observation=np.ones(2),
                               items=perm.astype(np.int64),
                               ranks=np.arange(1, 4), clicks=clicks))
    params = fit_pbm(log)
    learned = normalized_propensities(params)
    assert np.all(learned[1:] < 0.05)


def test_pbm_degenerate_log_rejected():
    log = synthetic_pbm_log(100, [0.0, 0.0, 0.0], [1.0, 1.0, 1.0], seed=5)
    with pytest.raises(ClickModelError, match="non-identifiable"):
        fit_pbm(log)


def test_pbm_requires_two_ranks():
    env = make_env("SingleItem-Static", 0)
    log = generate_log(env, make_policy("random", env, seed=0), 2, seed=0)
    with pytest.raises(ClickModelError, match="slate size"):
        fit_pbm(log)


def test_pbm_predictions_in_unit_interval():
    log = synthetic_pbm_log(2000, [0.9, 0.5, 0.1], [1.0, 0.85, 0.7225], seed=6)
    params = fit_pbm(log)
    obs = np.ones(2)
    items = np.arange(3)
    for rank in (1, 2, 3):
        p = params.click_probability(obs, items, np.full(3, rank))
        assert np.all(p >= 0.0) and np.all(p <= 1.0)


def test_pbm_invariant_to_item_relabeling():
    log = synthetic_pbm_log(5000, [0.9, 0.5, 0.1], [1.0, 0.85, 0.7225], seed=7)
    relabeled = InteractionLog(header=dict(log.header))
    perm = np.array([2, 0, 1])  # new id of each old id
    for row in log.rows:
        relabeled.rows.append(
            LogRow(session=row.session, step=row.step, observation=row.observation,
                   items=perm[row.items], ranks=row.ranks, clicks=row.clicks)
        )
    a = fit_pbm(log)
    b = fit_pbm(relabeled)
    assert np.allclose(normalized_propensities(a), normalized_propensities(b), atol=1e-9)
    obs = np.ones(2)
    assert np.allclose(
        a.item_relevance(obs, np.arange(3)),
        b.item_relevance(obs, perm[np.arange(3)]),
        atol=1e-9,
    )


def test_dctr_and_pbm_agree_under_uniform_logging(uniform_log_models):
    """In the large-sample uniform-exposure limit, the PBM's log-averaged
    relevance and the naive CTR induce the same item ordering."""
    from slatesim.click_models import _sigmoid
    from slatesim.logs import log_arrays

    _, log, dctr, pbm = uniform_log_models
    _, obs, _, _, _ = log_arrays(log)
    pbm_mean_rel = _sigmoid(obs @ pbm.rel_weights.T + pbm.rel_bias).mean(axis=0)
    assert kendall_tau(dctr.ctr, pbm_mean_rel) >= 0.9


# -- propensities ------------------------------------------------------------------


def test_normalized_propensities_of_true_decay_already_normalized():
    exam = 0.85 ** np.arange(10)
    assert np.allclose(normalized_propensities(exam), exam)


def test_normalized_propensities_scale_invariant():
    exam = np.array([0.9, 0.6, 0.3])
    assert np.allclose(
        normalized_propensities(exam), normalized_propensities(exam * 0.37)
    )


def test_normalized_propensities_division():
    assert np.allclose(normalized_propensities(np.array([0.8, 0.4])), [1.0, 0.5])


def test_normalized_propensities_zero_first_rank_rejected():
    with pytest.raises(ClickModelError):
        normalized_propensities(np.array([0.0, 0.4]))


def test_propensity_mse_examples():
    assert propensity_mse(np.array([1.0, 0.5]), np.array([1.0, 0.5])) == 0.0
    assert propensity_mse(np.array([1.0, 0.5]), np.array([1.0, 0.9])) == pytest.approx(0.08)
    with pytest.raises(ValueError):
        propensity_mse(np.ones(3), np.ones(4))


# -- reranking ----------------------------------------------------------------------


def test_rerank_by_model_matches_greedy_for_perfect_relevance():
    env = make_env("SlateRerank-Static", 9)
    env.reset(seed=0)

    class TrueRelevance:
        def item_scores(self, observation, items):
            return env.catalog.vectors[items] @ env.effective_user_embedding()

    slate = rerank_by_model(TrueRelevance(), env.full_observation(), np.arange(10))
    from slatesim.policies import greedy_oracle_slate

    expected = greedy_oracle_slate(env.effective_user_embedding(), env.catalog.vectors, 10)
    assert np.array_equal(slate, expected)


def test_rerank_all_equal_scores_uses_id_tie_break():
    params = DctrParams(clicks=np.zeros(5), impressions=np.full(5, 10))
    slate = rerank_by_model(params, np.zeros(3), np.arange(5))
    assert slate.tolist() == [0, 1, 2, 3, 4]


def test_kendall_tau_basics():
    assert kendall_tau(np.array([1, 2, 3]), np.array([10, 20, 30])) == 1.0
    assert kendall_tau(np.array([1, 2, 3]), np.array([30, 20, 10])) == -1.0
