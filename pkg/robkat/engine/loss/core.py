import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from statsmodels.robust import norms

from robkat.comm.errors import InputError

# IRLS weight floor for LAD, in units of the current scale estimate
LAD_WEIGHT_FLOOR = 1e-8


class LossFamily(str, enum.Enum):
    LEAST_SQUARES = "ls"
    LAD = "lad"
    HUBER = "huber"
    HAMPEL = "hampel"
    BISQUARE = "bisquare"


DEFAULT_TUNING = {
    LossFamily.LEAST_SQUARES: (),
    LossFamily.LAD: (),
    LossFamily.HUBER: (1.345,),
    LossFamily.HAMPEL: (1.353, 3.157, 7.216),
    LossFamily.BISQUARE: (4.685,),
}


class LeastAbsoluteDeviation(norms.RobustNorm):
    """Check loss at the median, rho(z) = 0.5 |z|.

    The subgradient at 0 is fixed to 0 instead of the randomized
    ``eta - Bern(eta)`` choice, so fits are reproducible.
    """

    def __init__(self, floor=LAD_WEIGHT_FLOOR):
        self.floor = floor

    def rho(self, z):
        return 0.5 * np.abs(np.asarray(z, dtype=float))

    def psi(self, z):
        return 0.5 * np.sign(np.asarray(z, dtype=float))

    def weights(self, z):
        return 0.5 / np.maximum(np.abs(np.asarray(z, dtype=float)), self.floor)

    def psi_deriv(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))


@dataclass(frozen=True)
class LossSpec:
    """A rho/psi family with its tuning constants.

    Attributes:
        family (LossFamily): ls / lad / huber / hampel / bisquare
        tuning (tuple)     : huber (k,), hampel (a, b, r), bisquare (k,),
                             empty for ls and lad (LAD is the eta = 0.5 check loss)
    """

    family: LossFamily
    tuning: tuple = field(default=())

    def __post_init__(self):
        family = LossFamily(self.family)
        object.__setattr__(self, "family", family)
        tuning = tuple(float(x) for x in self.tuning) or DEFAULT_TUNING[family]
        expected = len(DEFAULT_TUNING[family])
        if len(tuning) != expected:
            raise InputError(
                f"{family.value} takes {expected} tuning constant(s), got {len(tuning)}"
            )
        if any(not np.isfinite(x) or x <= 0 for x in tuning):
            raise InputError(f"tuning constants must be positive, got {tuning}")
        if family is LossFamily.HAMPEL and not tuning[0] < tuning[1] < tuning[2]:
            raise InputError(f"hampel requires a < b < r, got {tuning}")
        object.__setattr__(self, "tuning", tuning)

    @classmethod
    def least_squares(cls):
        return cls(LossFamily.LEAST_SQUARES)

    @classmethod
    def lad(cls):
        return cls(LossFamily.LAD)

    @classmethod
    def huber(cls, k=1.345):
        return cls(LossFamily.HUBER, (k,))

    @classmethod
    def hampel(cls, a=1.353, b=3.157, r=7.216):
        return cls(LossFamily.HAMPEL, (a, b, r))

    @classmethod
    def bisquare(cls, k=4.685):
        return cls(LossFamily.BISQUARE, (k,))

    @classmethod
    def from_name(cls, name, tuning=None):
        """Builds a LossSpec from a CLI-style name and optional "c1,c2,..." string."""
        try:
            family = LossFamily(str(name).strip().lower())
        except ValueError:
            valid = ", ".join(f.value for f in LossFamily)
            raise InputError(f"unknown loss '{name}' (choose from {valid})") from None
        if tuning is None or tuning == "":
            values = ()
        elif isinstance(tuning, str):
            try:
                values = tuple(float(x) for x in tuning.split(","))
            except ValueError:
                raise InputError(f"malformed tuning constants '{tuning}'") from None
        else:
            values = tuple(tuning)
        return cls(family, values)

    @property
    def name(self):
        return self.family.value

    @property
    def monotone_psi(self):
        return self.family in (
            LossFamily.LEAST_SQUARES,
            LossFamily.LAD,
            LossFamily.HUBER,
        )

    @property
    def psi_bound(self):
        """sup |psi|, infinite for least squares."""
        if self.family is LossFamily.LEAST_SQUARES:
            return np.inf
        if self.family is LossFamily.LAD:
            return 0.5
        if self.family is LossFamily.BISQUARE:
            k = self.tuning[0]
            # max of x (1 - (x/k)^2)^2 is at x = k / sqrt(5)
            return k / np.sqrt(5.0) * (1 - 1 / 5.0) ** 2
        return self.tuning[0]

    @cached_property
    def norm(self):
        """The statsmodels RobustNorm evaluating rho, psi and IRLS weights."""
        if self.family is LossFamily.LEAST_SQUARES:
            return norms.LeastSquares()
        if self.family is LossFamily.LAD:
            return LeastAbsoluteDeviation()
        if self.family is LossFamily.HUBER:
            return norms.HuberT(t=self.tuning[0])
        if self.family is LossFamily.HAMPEL:
            a, b, r = self.tuning
            return norms.Hampel(a=a, b=b, c=r)
        return norms.TukeyBiweight(c=self.tuning[0])

    def __str__(self):
        if not self.tuning:
            return self.name
        return f"{self.name}({','.join(f'{x:g}' for x in self.tuning)})"
