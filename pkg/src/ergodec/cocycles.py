"""Positive multiplicative cocycles rho(g, x) over the permutation action.

Every constructor here produces a potential-backed cocycle, i.e. one of the
form rho(g, x) = u(act(g, x)) / u(x) for a strictly positive function u. That
structure guarantees the multiplicative identity exactly and enables
orbit-collapsed exact averaging. Fibrewise continuity is automatic for finite
levels and carried as a declared flag so hypotheses stay visible in code.

Constructors avoid closures so cocycles pickle cleanly into worker processes.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Callable, Optional

import numpy as np

from .groups import Config, Permutation, act
from .measures import rn_derivative
from .rng import RandomStream

PROVENANCE_CONSTANT = "constant-one"
PROVENANCE_RN = "radon-nikodym"
PROVENANCE_WEIGHT = "from-weight"


@dataclass
class Cocycle:
    """Evaluable positive weight rho(g, x) with a provenance tag.

    ``potential`` (when present) is the positive function u with
    rho(g, x) = u(act(g, x)) / u(x); ``log_potential_rows`` optionally maps a
    uint8 matrix of configurations to log-u values for vectorized Monte Carlo.
    """

    eval_fn: Callable[[Permutation, Config], object]
    provenance: str
    potential: Optional[Callable[[Config], object]] = None
    log_potential_rows: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fibrewise_continuous: bool = True

    def __call__(self, g: Permutation, x: Config):
        return self.eval_fn(g, x)

    @property
    def is_constant_one(self) -> bool:
        return self.provenance == PROVENANCE_CONSTANT


def _const_eval(g: Permutation, x: Config):
    return Fraction(1)


def _const_potential(x: Config):
    return Fraction(1)


def _const_log_rows(rows: np.ndarray) -> np.ndarray:
    return np.zeros(rows.shape[0])


def constant_one() -> Cocycle:
    return Cocycle(
        eval_fn=_const_eval,
        provenance=PROVENANCE_CONSTANT,
        potential=_const_potential,
        log_potential_rows=_const_log_rows,
    )


def _weight_eval(f, g: Permutation, x: Config):
    fx = f(x)
    if fx <= 0:
        raise ValueError("weight function must be strictly positive")
    return f(act(g, x)) / fx


def make_rho_f(f) -> Cocycle:
    """Weight-ratio cocycle rho(g, x) = f(act(g, x)) / f(x) for positive f."""
    return Cocycle(
        eval_fn=partial(_weight_eval, f),
        provenance=PROVENANCE_WEIGHT,
        potential=f,
    )


def _rn_eval(nu, g: Permutation, x: Config):
    return rn_derivative(nu, g, x)


def make_rn(nu) -> Cocycle:
    """Radon-Nikodym cocycle of a measure; zero-mass points raise on evaluation."""
    return Cocycle(
        eval_fn=partial(_rn_eval, nu),
        provenance=PROVENANCE_RN,
        potential=nu.atom,
        log_potential_rows=getattr(nu, "log_atom_rows", None),
    )


@dataclass(frozen=True)
class IdentityReport:
    trials: int
    violations: int
    exact: bool
    max_rel_error: float
    first_witness: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.violations == 0


def verify_identity(
    rho: Cocycle,
    trials: int,
    level: int,
    window: int,
    rng: RandomStream,
    float_rtol: float = 1e-12,
) -> IdentityReport:
    """Check rho(g*h, x) == rho(g, act(h, x)) * rho(h, x) on random triples.

    Rational values are compared exactly; floats by relative error. The first
    violating triple is reported as a witness.
    """
    from .groups import haar_sample

    if window < level:
        raise ValueError("window must cover the sampled level")
    violations = 0
    witness = None
    exact = True
    max_rel = 0.0
    for _ in range(trials):
        g = haar_sample(level, rng)
        h = haar_sample(level, rng)
        x = tuple(int(b) for b in rng.integers(0, 2, size=window))
        lhs = rho(g.compose(h), x)
        rhs = rho(g, act(h, x)) * rho(h, x)
        if isinstance(lhs, Fraction) and isinstance(rhs, Fraction):
            bad = lhs != rhs
        else:
            exact = False
            rel = abs(float(lhs) - float(rhs)) / max(abs(float(rhs)), 1e-300)
            max_rel = max(max_rel, rel)
            bad = rel > float_rtol
        if bad:
            violations += 1
            if witness is None:
                witness = (g, h, x, lhs, rhs)
    return IdentityReport(
        trials=trials,
        violations=violations,
        exact=exact,
        max_rel_error=max_rel,
        first_witness=witness,
    )
