import logging
from dataclasses import dataclass

import numpy as np
import statsmodels.api as sm
from scipy import sparse
from scipy.optimize import brentq, linprog
from statsmodels.robust.scale import mad

from robkat.comm.errors import DegenerateFitError, InputError, NumericalError
from robkat.comm.util import require_convergence
from robkat.engine.loss import LossFamily, LossSpec, expected_psi_sq, psi, psi_weight


@dataclass(frozen=True)
class NullFit:
    """M-estimate of the covariate-only model Y = X beta + e.

    Attributes:
        beta_hat   (ndarray) : q coefficients
        residuals  (ndarray) : e_i = Y_i - X_i beta_hat
        scale      (float)   : Proposal 2 scale (normalized MAD for LAD)
        iterations (int)     : outer IRLS iterations performed
        converged  (bool)    : relative change fell below tol before max_iter
        loss       (LossSpec): loss the fit was computed with
    """

    beta_hat: np.ndarray
    residuals: np.ndarray
    scale: float
    iterations: int
    converged: bool
    loss: LossSpec

    @property
    def n(self):
        return len(self.residuals)

    @property
    def q(self):
        return len(self.beta_hat)

    @property
    def standardized_residuals(self):
        return self.residuals / self.scale


def check_degenerate(residuals):
    zeros = np.count_nonzero(residuals == 0)
    if zeros == len(residuals):
        raise DegenerateFitError("all residuals are exactly zero")
    if zeros > 0.5 * len(residuals):
        raise DegenerateFitError(
            f"{zeros} of {len(residuals)} residuals are exactly zero"
        )


def normalized_mad(residuals):
    """1.4826 * median |e - median(e)|."""
    return float(mad(residuals, center=np.median))


def _scale_equation(residuals, loss, q):
    target = expected_psi_sq(loss)
    dof = len(residuals) - q

    def g(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        values = psi(loss, residuals[:, None] / s[None, :]) ** 2
        return values.sum(axis=0) / dof - target

    return g


def proposal2_scale(residuals, loss: LossSpec, q: int, start=None) -> float:
    """Huber's Proposal 2 scale.

    Solves (1/(n-q)) sum psi^2(e_i/s) = E_Phi(psi^2) for s. Least squares has
    the closed form sqrt(RSS/(n-q)). Otherwise the search starts on a log grid
    over [s0/100, 100 s0] around the normalized MAD s0 and is widened until a
    sign change is found; the largest root is then refined with brentq. For
    monotone psi the left side decreases in s and the root is unique.

    Args:
        residuals (ndarray) : residual vector
        loss      (LossSpec): loss family
        q         (int)     : number of fitted coefficients
        start     (float)   : optional centre of the search grid

    Returns:
        float: the scale estimate (positive)
    """
    residuals = np.asarray(residuals, dtype=float)
    n = len(residuals)
    if n <= q:
        raise InputError(f"need n > q, got n={n}, q={q}")
    if not np.any(residuals):
        raise DegenerateFitError("all residuals are exactly zero")
    if loss.family is LossFamily.LEAST_SQUARES:
        return float(np.sqrt(np.sum(residuals**2) / (n - q)))

    center = start or normalized_mad(residuals)
    if not center > 0:
        center = float(np.sqrt(np.mean(residuals**2)))

    g = _scale_equation(residuals, loss, q)
    grid = center * np.logspace(-2, 2, 41)
    values = g(grid)
    while values[-1] > 0 and grid[-1] < center * 1e12:
        grid = np.append(grid, grid[-1] * 10)
        values = np.append(values, g(grid[-1]))
    if loss.monotone_psi:
        while values[0] <= 0 and grid[0] > center * 1e-12:
            grid = np.insert(grid, 0, grid[0] / 10)
            values = np.insert(values, 0, g(grid[0]))

    positive = np.flatnonzero(values > 0)
    if positive.size == 0 or positive[-1] == len(grid) - 1:
        raise NumericalError(
            f"Proposal 2 equation for {loss} has no sign change on "
            f"[{grid[0]:.3g}, {grid[-1]:.3g}]"
        )
    i = positive[-1]
    lo, hi = grid[i], grid[i + 1]
    # brentq evaluates g one point at a time; the vectorized sums may round
    # differently, so the bracket is re-checked with the scalar evaluation
    g_lo, g_hi = g(lo)[0], g(hi)[0]
    if g_lo == 0:
        return float(lo)
    if g_hi == 0 or np.sign(g_lo) == np.sign(g_hi):
        return float(lo if abs(g_lo) < abs(g_hi) else hi)
    try:
        result = brentq(
            lambda s: g(s)[0],
            lo,
            hi,
            xtol=center * 1e-14,
            rtol=1e-14,
            maxiter=500,
            full_output=True,
        )[1]
    except (ValueError, RuntimeError) as e:
        raise NumericalError(f"Proposal 2 scale for {loss}: {e}") from e
    return float(require_convergence(result, "Proposal 2 scale"))


def irls_step(Y, X, beta, scale, loss: LossSpec):
    """One weighted least squares step at fixed scale. Returns the new beta."""
    weights = psi_weight(loss, (Y - X @ beta) / scale)
    return sm.WLS(Y, X, weights=weights).fit().params


class IrlsFitter:
    """Alternates IRLS beta steps and scale steps until both settle.

    The beta change is measured on the fitted values relative to the scale,
    max |X (beta_new - beta)| / s, which keeps the stopping rule invariant
    under Y -> aY + Xb.
    """

    def __init__(self, loss: LossSpec, max_iter=200, tol=1e-8):
        if loss.family is LossFamily.LAD:
            raise InputError("LAD fits are solved exactly by LadFitter")
        self.loss = loss
        self.max_iter = max_iter
        self.tol = tol

    def update_scale(self, residuals, q, previous):
        return proposal2_scale(residuals, self.loss, q, start=previous)

    def fit(self, Y, X) -> NullFit:
        q = X.shape[1]
        beta = sm.OLS(Y, X).fit().params
        residuals = Y - X @ beta
        check_degenerate(residuals)
        scale = normalized_mad(residuals)
        if not scale > 0:
            raise DegenerateFitError("MAD of the least squares residuals is zero")

        change = np.inf
        iteration = 0
        for iteration in range(1, self.max_iter + 1):
            beta_new = irls_step(Y, X, beta, scale, self.loss)
            residuals = Y - X @ beta_new
            scale_new = self.update_scale(residuals, q, scale)

            change = max(
                np.max(np.abs(X @ (beta_new - beta))) / scale_new,
                abs(scale_new - scale) / scale,
            )
            beta, scale = beta_new, scale_new
            if change < self.tol:
                break

        converged = bool(change < self.tol)
        if not converged:
            logging.warning(
                "null fit with %s did not converge after %d iterations "
                "(last relative change %.3g)",
                self.loss,
                iteration,
                change,
            )
        return NullFit(
            beta_hat=np.asarray(beta, dtype=float),
            residuals=residuals,
            scale=float(scale),
            iterations=iteration,
            converged=converged,
            loss=self.loss,
        )


class LadFitter:
    """Least absolute deviations fit, solved exactly as a linear program.

    min 0.5 sum (u_i + v_i) subject to X beta + u - v = Y, u, v >= 0. An
    intercept-only design returns the sample median, the midpoint of the
    minimizer interval when n is even. Residuals within 1e-9 MAD of zero are
    the interpolated observations and are set to exactly zero, so psi(0) = 0
    applies to them. The scale is the normalized MAD of the residuals.
    """

    def __init__(self, loss: LossSpec = None):
        self.loss = loss or LossSpec.lad()

    def solve(self, Y, X):
        n, q = X.shape
        column = X[:, 0]
        if q == 1 and np.all(column == column[0]):
            return np.array([np.median(Y) / column[0]]), 1
        A = sparse.hstack(
            [sparse.csr_matrix(X), sparse.eye(n), -sparse.eye(n)], format="csr"
        )
        cost = np.concatenate([np.zeros(q), np.full(2 * n, 0.5)])
        bounds = [(None, None)] * q + [(0, None)] * (2 * n)
        result = linprog(cost, A_eq=A, b_eq=Y, bounds=bounds, method="highs-ds")
        if not result.success:
            raise NumericalError(f"LAD linear program failed: {result.message}")
        return result.x[:q], int(result.nit)

    def fit(self, Y, X) -> NullFit:
        beta, iterations = self.solve(Y, X)
        residuals = Y - X @ beta
        residuals[np.abs(residuals) <= 1e-9 * normalized_mad(residuals)] = 0.0
        check_degenerate(residuals)
        scale = normalized_mad(residuals)
        if not scale > 0:
            raise DegenerateFitError("MAD of the LAD residuals is zero")
        return NullFit(
            beta_hat=np.asarray(beta, dtype=float),
            residuals=residuals,
            scale=scale,
            iterations=iterations,
            converged=True,
            loss=self.loss,
        )
