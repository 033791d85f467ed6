"""Linear barotropic equation of state and the fluid potential F.

The fluid closure is the linear family mu(p) = p / w with constant
0 < w <= 1, so mu'(p) = 1/w >= 1 (sound speed c_s = sqrt(w) at most the
speed of light) and the potential

    F(p) = integral dp / (mu(p) + p) = w/(1+w) * ln(p / p_ref)

has a closed form.  The integration constant is fixed by F(p_ref) = 0;
only differences and derivatives of F enter the equations.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveDensity, ValidationError


@dataclass(frozen=True)
class Eos:
    """Linear equation of state p = w * mu.

    w: squared sound speed, in (0, 1].
    p_ref: reference pressure > 0 fixing F(p_ref) = 0.
    """

    w: float
    p_ref: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.w:
            raise ValidationError("eos.w must be positive", key="eos.w")
        if self.w > 1.0:
            raise ValidationError(
                "eos.w must satisfy w <= 1 (mu' = 1/w >= 1, sound speed at most light)",
                key="eos.w", hyperbolicity=True)
        if not self.p_ref > 0.0:
            raise ValidationError("eos.p_ref must be positive", key="eos.p_ref")

    @property
    def mu_prime(self):
        return 1.0 / self.w

    def pressure(self, mu):
        return self.w * np.asarray(mu)

    def sound_speed(self):
        return float(np.sqrt(self.w))


def eos_eval(eos, mu):
    """Evaluate (p, mu_prime, F, dF_dp) at energy density mu.

    mu may be a scalar or an array; all of it must be positive.
    """
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0.0):
        raise NonPositiveDensity("eos_eval requires mu > 0")
    p = eos.w * mu
    mu_prime = eos.mu_prime
    F = (eos.w / (1.0 + eos.w)) * np.log(p / eos.p_ref)
    dF_dp = 1.0 / (mu + p)
    return p, mu_prime, F, dF_dp
