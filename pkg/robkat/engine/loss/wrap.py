import numpy as np
from scipy import integrate
from scipy.stats import norm as std_normal

from robkat.comm.errors import InputError, NumericalError
from robkat.engine.loss.core import LossFamily, LossSpec


def _evaluate(method, x):
    z = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InputError("loss functions are only defined for finite input")
    v = np.asarray(method(z), dtype=float)
    if z.ndim == 0:
        return float(v)
    return v.reshape(z.shape)


def rho(loss: LossSpec, x):
    """Loss value rho(x).

    Args:
        loss (LossSpec)      : loss family
        x    (float/ndarray) : standardized residual(s)

    Returns:
        float or ndarray:

            > rho(LossSpec.huber(), 1.0)
            0.5
            > rho(LossSpec.huber(), 2.0)
            1.7854875
    """
    return _evaluate(loss.norm.rho, x)


def psi(loss: LossSpec, x):
    """Derivative (subgradient for LAD) of rho. Odd, with psi(0) = 0.

    Args:
        loss (LossSpec)      : loss family
        x    (float/ndarray) : standardized residual(s)

    Returns:
        float or ndarray:

            > psi(LossSpec.lad(), [2.0, -1.0, 0.0])
            array([ 0.5, -0.5,  0. ])
            > psi(LossSpec.bisquare(), 5.0)
            0.0
    """
    return _evaluate(loss.norm.psi, x)


def psi_weight(loss: LossSpec, x):
    """IRLS weight psi(x) / x, with its limit 1 at x = 0.

    For LAD the weight is 0.5 / max(|x|, 1e-8); x is standardized, so the
    floor is 1e-8 times the current scale in residual units.

    Returns:
        float or ndarray:

            > psi_weight(LossSpec.huber(), 2.69)
            0.5
    """
    return _evaluate(loss.norm.weights, x)


def _huber_expected_psi_sq(k):
    # E min(x^2, k^2) for x ~ N(0, 1)
    inside = 2 * std_normal.cdf(k) - 1 - 2 * k * std_normal.pdf(k)
    return inside + 2 * k**2 * std_normal.sf(k)


def _quadrature_expected_psi_sq(loss, tol):
    if loss.family is LossFamily.HAMPEL:
        a, b, upper = loss.tuning
        points = [a, b]
    else:
        upper = loss.tuning[0]
        points = None

    def integrand(t):
        return psi(loss, t) ** 2 * std_normal.pdf(t)

    value, abserr, *rest = integrate.quad(
        integrand, 0.0, upper, points=points, epsabs=tol, epsrel=0.0, full_output=1
    )
    # a fourth element is only returned when quad reports a problem
    if len(rest) > 1:
        raise NumericalError(
            f"quadrature for E(psi^2) of {loss} did not converge (error {abserr:.3g})"
        )
    # psi vanishes beyond the rejection point, integrand is even
    return 2 * value


def expected_psi_sq(loss: LossSpec, tol=1e-10) -> float:
    """Standard-normal expectation of psi^2, the right side of Proposal 2.

    Closed forms for ls, lad and huber; adaptive quadrature to absolute
    tolerance ``tol`` for the redescending families.

    Returns:
        float:

            > expected_psi_sq(LossSpec.least_squares())
            1.0
            > expected_psi_sq(LossSpec.lad())
            0.25
            > expected_psi_sq(LossSpec.huber(1.345))
            0.7102...
    """
    if loss.family is LossFamily.LEAST_SQUARES:
        return 1.0
    if loss.family is LossFamily.LAD:
        return 0.25
    if loss.family is LossFamily.HUBER:
        return float(_huber_expected_psi_sq(loss.tuning[0]))
    return float(_quadrature_expected_psi_sq(loss, tol))


def huber_expected_psi_sq_by_quadrature(k, tol=1e-10):
    """Quadrature value of E(psi^2) for Huber, used to cross-check the closed form."""
    inner, err_inner = integrate.quad(
        lambda t: t**2 * std_normal.pdf(t), 0.0, k, epsabs=tol, epsrel=0.0
    )
    outer, err_outer = integrate.quad(
        lambda t: k**2 * std_normal.pdf(t), k, np.inf, epsabs=tol, epsrel=0.0
    )
    value, abserr = inner + outer, err_inner + err_outer
    if abserr > 2 * tol:
        raise NumericalError(f"quadrature did not converge (error {abserr:.3g})")
    return 2 * value
