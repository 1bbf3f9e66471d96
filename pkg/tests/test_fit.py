import logging

import numpy as np
import pytest

from conftest import null_data
from robkat.comm.errors import DegenerateFitError, InputError, NumericalError
from robkat.engine.fit import (
    IrlsFitter,
    NullFit,
    fit_null,
    irls_step,
    normalized_mad,
    proposal2_scale,
    score_vector,
)
from robkat.engine.fit.core import _scale_equation, check_degenerate
from robkat.engine.loss import LossSpec, rho


def test_least_squares_fit_is_ols_with_rms_scale():
    Y, X, _ = null_data(80, seed=1)
    fit = fit_null(Y, X, LossSpec.least_squares())
    beta, *_ = np.linalg.lstsq(X, Y, rcond=None)
    np.testing.assert_allclose(fit.beta_hat, beta, rtol=1e-8)
    rss = np.sum((Y - X @ beta) ** 2)
    assert fit.scale == pytest.approx(np.sqrt(rss / (80 - 3)), rel=1e-8)
    assert fit.converged


def test_proposal2_least_squares_closed_form_with_cauchy_residuals():
    e = np.random.default_rng(3).standard_cauchy(100)
    expected = np.sqrt(np.sum(e**2) / (100 - 2))
    assert proposal2_scale(e, LossSpec.least_squares(), q=2) == pytest.approx(expected, rel=1e-8)


@pytest.mark.parametrize("loss", [LossSpec.huber(), LossSpec.hampel(), LossSpec.bisquare()], ids=str)
def test_proposal2_root_solves_scale_equation(loss):
    e = np.random.default_rng(4).standard_normal(200)
    s = proposal2_scale(e, loss, q=1)
    assert s > 0
    assert abs(_scale_equation(e, loss, 1)(s)[0]) < 1e-8


def test_proposal2_huber_near_one_for_standard_normal_residuals():
    e = np.random.default_rng(5).standard_normal(20000)
    assert proposal2_scale(e, LossSpec.huber(), q=1) == pytest.approx(1.0, abs=0.03)


def test_proposal2_has_no_root_for_lad():
    e = np.random.default_rng(6).standard_normal(50)
    with pytest.raises(NumericalError):
        proposal2_scale(e, LossSpec.lad(), q=1)


def test_lad_odd_sample_gives_median():
    fit = fit_null(np.array([1.0, 2.0, 3.0, 4.0, 100.0]), np.ones((5, 1)), LossSpec.lad())
    assert fit.beta_hat[0] == pytest.approx(3.0, abs=1e-6)
    assert fit.scale == pytest.approx(normalized_mad(fit.residuals))
    np.testing.assert_array_equal(score_vector(fit)[[0, 1, 3, 4]], [-0.5, -0.5, 0.5, 0.5])


def test_lad_even_sample_gives_midpoint_median():
    fit = fit_null(np.array([1.0, 2.0, 3.0, 100.0]), np.ones((4, 1)), LossSpec.lad())
    assert fit.beta_hat[0] == 2.5
    assert fit.converged


def test_lad_fits_are_exact_minimizers():
    rng = np.random.default_rng(12)
    for seed in range(50):
        Y, X, _ = null_data(100, seed=seed, q=5)
        fit = fit_null(Y, X, LossSpec.lad())
        assert fit.converged
        best = np.sum(np.abs(Y - X @ fit.beta_hat))
        for _ in range(10):
            moved = fit.beta_hat + 1e-3 * rng.standard_normal(X.shape[1])
            assert np.sum(np.abs(Y - X @ moved)) >= best * (1 - 1e-12)
        # a basic solution interpolates at least q observations
        assert np.count_nonzero(fit.residuals == 0) >= X.shape[1]


def test_irls_fitter_refuses_lad():
    with pytest.raises(InputError):
        IrlsFitter(LossSpec.lad())


@pytest.mark.parametrize("loss", [LossSpec.least_squares(), LossSpec.huber()], ids=str)
def test_fits_succeed_across_many_datasets(loss):
    for seed in range(200):
        Y, X, _ = null_data(100, seed=seed, q=5)
        fit = fit_null(Y, X, loss)
        assert fit.converged
        assert fit.scale > 0


@pytest.mark.parametrize("loss", [LossSpec.least_squares(), LossSpec.huber()], ids=str)
def test_converged_fits_solve_estimating_equations(loss):
    for seed in range(20):
        Y, X, _ = null_data(100, seed=seed, q=3)
        fit = fit_null(Y, X, loss)
        assert fit.converged
        assert np.max(np.abs(X.T @ score_vector(fit))) <= 1e-6 * len(Y)


@pytest.mark.parametrize("loss", [LossSpec.least_squares(), LossSpec.huber()], ids=str)
def test_irls_steps_never_increase_the_objective(loss):
    Y, X, _ = null_data(80, seed=13)
    beta = np.linalg.lstsq(X, Y, rcond=None)[0] + np.array([2.0, -1.0, 0.5])
    scale = normalized_mad(Y - X @ beta)
    objective = np.sum(rho(loss, (Y - X @ beta) / scale))
    for _ in range(30):
        beta = irls_step(Y, X, beta, scale, loss)
        value = np.sum(rho(loss, (Y - X @ beta) / scale))
        assert value <= objective * (1 + 1e-12)
        objective = value


def test_huber_resists_gross_outlier():
    rng = np.random.default_rng(8)
    n = 100
    X = np.column_stack([np.ones(n), rng.standard_normal(n)])
    beta_true = np.array([1.0, 2.0])
    Y = X @ beta_true + rng.standard_normal(n)
    Y[0] += 50.0
    huber = fit_null(Y, X, LossSpec.huber())
    ols = fit_null(Y, X, LossSpec.least_squares())
    assert np.linalg.norm(huber.beta_hat - beta_true) < np.linalg.norm(ols.beta_hat - beta_true)


@pytest.mark.parametrize("loss", [LossSpec.huber(), LossSpec.least_squares()], ids=str)
def test_fit_is_regression_and_scale_equivariant(loss):
    Y, X, _ = null_data(60, seed=9)
    a, b = 3.5, np.array([2.0, -1.0, 0.5])
    fit = fit_null(Y, X, loss)
    moved = fit_null(a * Y + X @ b, X, loss)
    np.testing.assert_allclose(moved.beta_hat, a * fit.beta_hat + b, rtol=1e-6, atol=1e-6)
    assert moved.scale == pytest.approx(a * fit.scale, rel=1e-6)
    np.testing.assert_allclose(score_vector(moved), score_vector(fit), atol=1e-6)


def test_non_convergence_is_flagged_and_logged(caplog):
    Y, X, _ = null_data(60, seed=10)
    with caplog.at_level(logging.WARNING):
        fit = fit_null(Y, X, LossSpec.huber(), max_iter=1)
    assert not fit.converged
    assert fit.iterations == 1
    assert "did not converge" in caplog.text


def test_score_vector_of_huber_residuals():
    s = 2.0
    fit = NullFit(
        beta_hat=np.zeros(1),
        residuals=np.array([0.0, s, -10 * s]),
        scale=s,
        iterations=1,
        converged=True,
        loss=LossSpec.huber(),
    )
    np.testing.assert_allclose(score_vector(fit), [0.0, 1.0, -1.345])


def test_degenerate_residuals_are_rejected():
    with pytest.raises(DegenerateFitError):
        check_degenerate(np.zeros(5))
    with pytest.raises(DegenerateFitError):
        check_degenerate(np.array([0.0, 0.0, 0.0, 1.0, 2.0]))
    check_degenerate(np.array([0.0, 0.0, 1.0, 2.0]))
    with pytest.raises(DegenerateFitError):
        proposal2_scale(np.zeros(5), LossSpec.huber(), q=1)


def test_invalid_designs_are_rejected():
    Y, X, _ = null_data(30, seed=11)
    with pytest.raises(InputError):
        fit_null(Y, np.column_stack([X, X[:, 1]]))
    with pytest.raises(InputError):
        fit_null(Y[:3], X[:3])
    with pytest.raises(InputError):
        fit_null(Y[:-1], X)
    bad = Y.copy()
    bad[4] = np.nan
    with pytest.raises(InputError):
        fit_null(bad, X)
