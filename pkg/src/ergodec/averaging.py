"""Weighted orbit averaging over the levels of the permutation chain.

The level-n average of a bounded function phi at a point x is the ratio

    sum_k phi(act(k, x)) rho(k, x)  /  sum_k rho(k, x),   k over S(n),

computed exactly for small n (rational arithmetic when the inputs are
rational) and by self-normalized Monte Carlo over Haar draws for large n.
If the denominator were infinite the average is defined to be 0; that branch
is unreachable for finite levels but kept for interface fidelity.

Exact evaluation has two algebraic shortcuts that produce the same value as
plain group enumeration and are cross-checked against it in the test suite:
a hypergeometric closed form (constant cocycle + cylinder monomial), and an
orbit-collapsed sum for potential-backed cocycles, valid because all
stabilizer cosets contribute equal blocks.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .cocycles import Cocycle
from .dictionary import CylinderMonomial
from .errors import CapacityError, ZeroMassError
from .groups import ENUMERATION_CAP, Config, act, enumerate_level, ones_count
from .measures import AtomicMeasure
from .rng import RandomStream

EXACT_LEVEL_CAP = ENUMERATION_CAP


@dataclass(frozen=True)
class AveragingReport:
    value: object  # Fraction for exact, float for monte-carlo
    level: int
    method: str  # "exact" | "monte-carlo"
    stderr: float
    sample_count: int

    def __post_init__(self):
        if self.method == "exact" and self.stderr != 0:
            raise ValueError("exact averages carry stderr 0")


@dataclass(frozen=True)
class LimitReport:
    levels: tuple[AveragingReport, ...]
    converged: bool
    limit_estimate: Optional[float]
    last_diff: float
    threshold: float
    tolerance: float

    def rows(self) -> list[tuple[int, float, float]]:
        """CSV-ready (level, value, stderr) series."""
        return [(r.level, float(r.value), float(r.stderr)) for r in self.levels]


def _ratio_or_zero(num, den):
    # The infinite-denominator branch of the averaging formula.
    if den == math.inf:
        return Fraction(0)
    if den == 0:
        raise ZeroMassError("averaging denominator vanished")
    return num / den


def monomial_level_average(level: int, indices: Sequence[int], x: Config) -> Fraction:
    """Exact constant-cocycle average of a cylinder monomial.

    Coordinates above the level are fixed by S(level); the moved part is the
    probability that a uniform distinct tuple lands on ones.
    """
    for i in indices:
        if i > level and x[i - 1] == 0:
            return Fraction(0)
    moved = sum(1 for i in indices if i <= level)
    m = ones_count(x, level)
    val = Fraction(1)
    for j in range(moved):
        val *= Fraction(m - j, level - j)
        if val == 0:
            break
    return val


def _prefix_orbit(x: Config, level: int):
    """All distinct rearrangements of the first ``level`` coordinates."""
    m = ones_count(x, level)
    tail = x[level:]
    for ones_at in itertools.combinations(range(level), m):
        head = [0] * level
        for i in ones_at:
            head[i] = 1
        yield tuple(head) + tail


def _orbit_collapsed_average(level: int, potential, phi, x: Config):
    ux = potential(x)
    if ux == 0:
        raise ZeroMassError(f"cocycle potential vanishes at {x}")
    num = Fraction(0)
    den = Fraction(0)
    for y in _prefix_orbit(x, level):
        u = potential(y)
        den += u
        if u != 0:
            num += phi(y) * u
    return _ratio_or_zero(num, den)


def _group_enumeration_average(level: int, rho: Cocycle, phi, x: Config):
    num = Fraction(0)
    den = Fraction(0)
    for k in enumerate_level(level):
        w = rho(k, x)
        den += w
        num += phi(act(k, x)) * w
    return _ratio_or_zero(num, den)


def average_exact(level: int, rho: Cocycle, phi, x: Config) -> AveragingReport:
    """Exact level average; capacity error above S(8)."""
    if level > EXACT_LEVEL_CAP:
        raise CapacityError(
            f"exact averaging is capped at level {EXACT_LEVEL_CAP}; got {level}"
        )
    if level < 1:
        raise ValueError("level must be >= 1")
    if level > len(x):
        raise ValueError("level exceeds the configuration window")
    if rho.is_constant_one and isinstance(phi, CylinderMonomial):
        value = monomial_level_average(level, phi.indices, x)
    elif rho.potential is not None:
        value = _orbit_collapsed_average(level, rho.potential, phi, x)
    else:
        value = _group_enumeration_average(level, rho, phi, x)
    return AveragingReport(
        value=value,
        level=level,
        method="exact",
        stderr=0.0,
        sample_count=math.factorial(level),
    )


def _self_normalized(v: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    """Ratio estimate and delta-method standard error."""
    n = v.shape[0]
    wbar = float(np.mean(w))
    est = float(np.sum(v * w) / np.sum(w))
    resid = w * (v - est)
    var = float(np.sum(resid * resid)) / (n - 1)
    se = math.sqrt(var / n) / wbar
    return est, se


def _draw_distinct_indices(
    rng: RandomStream, samples: int, width: int, level: int
) -> np.ndarray:
    """samples x width matrix of distinct uniform indices in [0, level)."""
    if width > level:
        raise ValueError("cannot draw more distinct indices than the level")
    idx = rng.integers(0, level, size=(samples, width))
    if width > 1:
        while True:
            srt = np.sort(idx, axis=1)
            dup = np.any(srt[:, 1:] == srt[:, :-1], axis=1)
            bad = int(dup.sum())
            if bad == 0:
                break
            idx[dup] = rng.integers(0, level, size=(bad, width))
    return idx


def mc_level_values(
    x_bits: np.ndarray,
    level: int,
    rho: Cocycle,
    monomials: Sequence[CylinderMonomial],
    samples: int,
    rng: RandomStream,
) -> list[tuple[float, float]]:
    """Shared-draw Monte Carlo level averages for several monomials at once.

    One set of Haar draws serves every monomial, so estimates inherit the
    pointwise order of the integrands (a superset monomial never exceeds its
    subset). Returns (estimate, stderr) per monomial.
    """
    if samples < 2:
        raise ValueError("at least 2 samples required")
    window = x_bits.shape[0]
    if level > window:
        raise ValueError("level exceeds the configuration window")

    moved_union = sorted(
        {i for m in monomials for i in m.indices if i <= level and m.indices}
    )
    fixed_ok = {
        m: all(x_bits[i - 1] for i in m.indices if i > level) for m in monomials
    }

    if rho.is_constant_one:
        width = len(moved_union)
        col = {i: c for c, i in enumerate(moved_union)}
        if width > 0:
            idx = _draw_distinct_indices(rng, samples, width, level)
            drawn = x_bits[idx].astype(np.float64)
        out = []
        for m in monomials:
            if not fixed_ok[m]:
                out.append((0.0, 0.0))
                continue
            cols = [col[i] for i in m.indices if i <= level]
            if not cols:
                out.append((1.0, 0.0))
                continue
            v = drawn[:, cols[0]].copy()
            for c in cols[1:]:
                v *= drawn[:, c]
            est = float(np.mean(v))
            se = float(np.std(v, ddof=1)) / math.sqrt(samples)
            out.append((est, se))
        return out

    if rho.potential is None:
        raise ValueError("shared-draw kernel needs a potential-backed cocycle")

    # Haar draws as full permutations of the first ``level`` coordinates.
    keys = rng.random((samples, level))
    perms = np.argsort(keys, axis=1)
    rows = np.tile(x_bits, (samples, 1))
    rows[:, :level] = x_bits[:level][perms]
    if rho.log_potential_rows is not None:
        logw = rho.log_potential_rows(rows) - rho.log_potential_rows(
            x_bits.reshape(1, -1)
        )
        w = np.exp(logw)
    else:
        ux = float(rho.potential(tuple(int(b) for b in x_bits)))
        if ux == 0:
            raise ZeroMassError("cocycle potential vanishes at the base point")
        w = np.array(
            [float(rho.potential(tuple(int(b) for b in r))) / ux for r in rows]
        )
    out = []
    for m in monomials:
        if not fixed_ok[m]:
            out.append((0.0, 0.0))
            continue
        cols = [i - 1 for i in m.indices if i <= level]
        if cols:
            v = rows[:, cols[0]].astype(np.float64)
            for c in cols[1:]:
                v = v * rows[:, c]
        else:
            v = np.ones(samples)
        out.append(_self_normalized(v, w))
    return out


def average_mc(
    level: int,
    rho: Cocycle,
    phi,
    x: Config,
    samples: int,
    rng: RandomStream,
) -> AveragingReport:
    """Self-normalized importance estimate of the level average."""
    if samples < 2:
        raise ValueError("at least 2 samples required")
    if level > len(x):
        raise ValueError("level exceeds the configuration window")
    x_bits = np.array(x, dtype=np.uint8)

    if isinstance(phi, CylinderMonomial) and (
        rho.is_constant_one or rho.potential is not None
    ):
        ((est, se),) = mc_level_values(x_bits, level, rho, [phi], samples, rng)
        return AveragingReport(
            value=est, level=level, method="monte-carlo", stderr=se, sample_count=samples
        )

    # Generic fallback: draw full permutations and evaluate callables.
    from .groups import haar_sample

    v = np.empty(samples)
    w = np.empty(samples)
    for s in range(samples):
        k = haar_sample(level, rng)
        y = act(k, x)
        w[s] = float(rho(k, x))
        v[s] = float(phi(y))
    est, se = _self_normalized(v, w)
    return AveragingReport(
        value=est, level=level, method="monte-carlo", stderr=se, sample_count=samples
    )


def combined_stderr(a: AveragingReport, b: AveragingReport) -> float:
    return math.sqrt(a.stderr**2 + b.stderr**2)


def default_schedule(window: int) -> tuple[int, ...]:
    """Geometric levels 1, 2, 4, ... capped by and including the window."""
    levels = []
    n = 1
    while n < window:
        levels.append(n)
        n *= 2
    levels.append(window)
    return tuple(levels)


def limit_average(
    rho: Cocycle,
    phi,
    x: Config,
    schedule: Sequence[int],
    tolerance: float = 1e-3,
    mc_samples: int = 512,
    rng: RandomStream | None = None,
    exact_cap: int = EXACT_LEVEL_CAP,
) -> LimitReport:
    """Track level averages along a schedule and detect the limit.

    Convergence is declared exactly when the last two levels differ by less
    than tolerance + 3 * combined stderr; non-convergence is a legitimate
    outcome and is reported as such, never masked.
    """
    sched = tuple(schedule)
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be strictly increasing")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    reports = []
    for n in sched:
        if n <= exact_cap:
            reports.append(average_exact(n, rho, phi, x))
        else:
            if rng is None:
                raise ValueError("Monte Carlo levels need a random stream")
            reports.append(average_mc(n, rho, phi, x, mc_samples, rng))
    if len(reports) == 1:
        only = reports[0]
        converged = only.method == "exact"
        return LimitReport(
            levels=tuple(reports),
            converged=converged,
            limit_estimate=float(only.value) if converged else None,
            last_diff=0.0,
            threshold=tolerance,
            tolerance=tolerance,
        )
    a, b = reports[-2], reports[-1]
    diff = abs(float(b.value) - float(a.value))
    threshold = tolerance + 3.0 * combined_stderr(a, b)
    converged = diff < threshold
    return LimitReport(
        levels=tuple(reports),
        converged=converged,
        limit_estimate=float(b.value) if converged else None,
        last_diff=diff,
        threshold=threshold,
        tolerance=tolerance,
    )


@dataclass(frozen=True)
class TowerReport:
    ok: bool
    pairs_checked: int
    witness: tuple | None


def tower_check(
    m: int, n: int, rho: Cocycle, phi, nu: AtomicMeasure, level_cap: int = 5
) -> TowerReport:
    """Verify A_m(A_n phi) == A_m phi exactly on every positive atom.

    Exactness is guaranteed for potential-backed cocycles, where coarser
    orbits decompose into finer orbit blocks and the weighted sums telescope.
    """
    if not (1 <= n <= m <= level_cap):
        raise CapacityError(f"tower check requires 1 <= n <= m <= {level_cap}")

    cache: dict[tuple, object] = {}

    def inner(y: Config):
        key = (tuple(sorted(y[:n])), y[n:])
        if key not in cache:
            cache[key] = average_exact(n, rho, phi, y).value
        return cache[key]

    checked = 0
    for x in sorted(nu.atoms):
        lhs = average_exact(m, rho, inner, x).value
        rhs = average_exact(m, rho, phi, x).value
        checked += 1
        if lhs != rhs:
            return TowerReport(ok=False, pairs_checked=checked, witness=(x, lhs, rhs))
    return TowerReport(ok=True, pairs_checked=checked, witness=None)


@dataclass(frozen=True)
class ConditionalExpectationReport:
    ok: bool
    classes: int
    sets_checked: int
    witness: tuple | None


def orbit_class_key(x: Config, level: int) -> tuple:
    """Canonical label of the S(level)-orbit of a window configuration."""
    return (tuple(sorted(x[:level])), x[level:])


def conditional_expectation_check(
    level: int,
    rho: Cocycle,
    phi,
    nu: AtomicMeasure,
    max_sets: int = 1 << 16,
) -> ConditionalExpectationReport:
    """Sweep every S(level)-invariant union of orbit classes A and verify

        integral_A phi d nu == integral_A (level average of phi) d nu

    exactly. The level average is constant on each class; per-class
    differences are computed once and every union is checked by subset sums.
    """
    classes: dict[tuple, list[Config]] = {}
    for x in sorted(nu.atoms):
        classes.setdefault(orbit_class_key(x, level), []).append(x)
    labels = sorted(classes)
    c = len(labels)
    if 2**c > max_sets:
        raise CapacityError(
            f"{c} orbit classes give 2^{c} invariant sets; cap is {max_sets}"
        )
    diffs = []
    for key in labels:
        members = classes[key]
        val = average_exact(level, rho, phi, members[0]).value
        lhs = sum((Fraction(phi(x)) * nu.atom(x) for x in members), Fraction(0))
        mass = sum((nu.atom(x) for x in members), Fraction(0))
        diffs.append(lhs - val * mass)
    sets_checked = 0
    for bits in range(2**c):
        total = Fraction(0)
        for i in range(c):
            if bits >> i & 1:
                total += diffs[i]
        sets_checked += 1
        if total != 0:
            witness_sets = [labels[i] for i in range(c) if bits >> i & 1]
            return ConditionalExpectationReport(
                ok=False, classes=c, sets_checked=sets_checked, witness=(witness_sets, total)
            )
    return ConditionalExpectationReport(
        ok=True, classes=c, sets_checked=sets_checked, witness=None
    )


@dataclass(frozen=True)
class FubiniReport:
    lhs: Fraction
    rhs: Fraction

    @property
    def ok(self) -> bool:
        return self.lhs == self.rhs


def fubini_check(level: int, rho: Cocycle, phi, nu: AtomicMeasure) -> FubiniReport:
    """Exact product-measure identity on a finite model:

        (1/level!) sum_x sum_k phi(act(k,x)) rho(k,x) nu(x) == sum_x phi(x) nu(x)

    whenever nu has Radon-Nikodym cocycle rho on the window.
    """
    order = math.factorial(level)
    lhs = Fraction(0)
    for x, m in sorted(nu.atoms.items()):
        for k in enumerate_level(level):
            lhs += Fraction(phi(act(k, x))) * Fraction(rho(k, x)) * m
    lhs /= order
    rhs = sum(
        (Fraction(phi(x)) * m for x, m in sorted(nu.atoms.items())), Fraction(0)
    )
    return FubiniReport(lhs=lhs, rhs=rhs)


def invariance_check(level: int, rho: Cocycle, phi, x: Config):
    """The level average is constant along the level orbit of x."""
    base = average_exact(level, rho, phi, x).value
    for k in enumerate_level(level):
        moved = average_exact(level, rho, phi, act(k, x)).value
        if moved != base:
            return False, (k, base, moved)
    return True, None
