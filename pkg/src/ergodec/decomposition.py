"""Limit statistics, empirical decomposing measures, and exact conditional
measures on atomic models.

The limit statistic of a point is the vector of detected limits of its level
averages over the test dictionary. Points of an exchangeable model cluster by
their first-moment limit; cluster weights and centers recover the mixing
measure (de Finetti). On exact atomic models the level sets of the full-depth
statistic are computed symbolically and carry canonical conditional measures.

All Monte Carlo draws for one point come from that point's own child stream,
so results are bit-identical for any worker count.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .averaging import (
    EXACT_LEVEL_CAP,
    average_exact,
    average_mc,
    default_schedule,
    mc_level_values,
    monomial_level_average,
    orbit_class_key,
)
from .cocycles import Cocycle
from .dictionary import TestDictionary
from .errors import CapacityError, NonConvergenceError
from .groups import Config, Permutation, act, validate_config
from .measures import (
    AtomicMeasure,
    Cylinder,
    Mixture,
    ProductBernoulli,
    rn_derivative,
)
from .rng import RandomStream, substream

CONDITIONAL_WINDOW_CAP = 12


@dataclass(frozen=True)
class LimitStatistic:
    """Vector of detected limits of level averages, one entry per monomial."""

    values: dict[tuple[int, ...], object]  # Fraction (exact) or float
    stderrs: dict[tuple[int, ...], float]
    converged: dict[tuple[int, ...], bool]
    schedule: tuple[int, ...]
    mc_samples: int
    tolerance: float

    def r(self, indices: Sequence[int]):
        return self.values[tuple(indices)]

    @property
    def all_converged(self) -> bool:
        return all(self.converged.values())

    def vector(self, order: Sequence[tuple[int, ...]]) -> list[float]:
        return [float(self.values[k]) for k in order]


def pi_phi(
    x,
    rho: Cocycle,
    dictionary: TestDictionary,
    schedule: Sequence[int] | None = None,
    tolerance: float = 1e-3,
    mc_samples: int = 512,
    rng: RandomStream | None = None,
    exact_cap: int = EXACT_LEVEL_CAP,
) -> LimitStatistic:
    """Entrywise limit detection over the dictionary.

    One set of Haar draws per level is shared by all entries, which preserves
    the pointwise monotonicity of monomials (r_S >= r_{S u {j}}) in Monte
    Carlo mode and changes nothing in exact mode.
    """
    x_bits = np.asarray(x, dtype=np.uint8)
    window = x_bits.shape[0]
    sched = tuple(schedule) if schedule is not None else default_schedule(window)
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise ValueError("schedule must be strictly increasing")
    if sched[-1] > window:
        raise ValueError("schedule exceeds the configuration window")
    entries = dictionary.entries
    keys = [m.indices for m in entries]

    shared = rho.is_constant_one or rho.potential is not None
    per_level: list[list[tuple[object, float]]] = []
    x_tuple: Config | None = None
    for n in sched:
        if n <= exact_cap:
            if rho.is_constant_one:
                vals = [
                    (monomial_level_average(n, m.indices, x_bits), 0.0) for m in entries
                ]
            else:
                if x_tuple is None:
                    x_tuple = tuple(int(b) for b in x_bits)
                vals = [
                    (average_exact(n, rho, m, x_tuple).value, 0.0) for m in entries
                ]
        else:
            if rng is None:
                raise ValueError("Monte Carlo levels need a random stream")
            if shared:
                vals = mc_level_values(x_bits, n, rho, entries, mc_samples, rng)
            else:
                if x_tuple is None:
                    x_tuple = tuple(int(b) for b in x_bits)
                vals = []
                for m in entries:
                    rep = average_mc(n, rho, m, x_tuple, mc_samples, rng)
                    vals.append((rep.value, rep.stderr))
        per_level.append(vals)

    values: dict[tuple[int, ...], object] = {}
    stderrs: dict[tuple[int, ...], float] = {}
    converged: dict[tuple[int, ...], bool] = {}
    for j, key in enumerate(keys):
        series = [lv[j] for lv in per_level]
        last_v, last_se = series[-1]
        if len(series) == 1:
            ok = last_se == 0.0
        else:
            prev_v, prev_se = series[-2]
            diff = abs(float(last_v) - float(prev_v))
            ok = diff < tolerance + 3.0 * math.sqrt(last_se**2 + prev_se**2)
        values[key] = last_v
        stderrs[key] = float(last_se)
        converged[key] = bool(ok)
    return LimitStatistic(
        values=values,
        stderrs=stderrs,
        converged=converged,
        schedule=sched,
        mc_samples=mc_samples,
        tolerance=tolerance,
    )


@dataclass(frozen=True)
class DecomposeConfig:
    samples: int = 2000
    schedule: Optional[tuple[int, ...]] = None
    tolerance: float = 0.02
    mc_samples: int = 400
    depth: int = 2
    width: int = 2
    min_gap: float = 0.05
    mode: str = "finite"  # "finite" (gap clustering) or "continuous" (empirical CDF)
    exchangeable: bool = True
    seed: int = 0
    workers: int = 1
    nonconvergence_threshold: float = 0.01
    residual_depth: int = 3
    validate_cocycle: bool = True
    exact_cap: int = EXACT_LEVEL_CAP
    empirical_window_cap: int = 64  # non-exchangeable representatives store atoms


@dataclass(frozen=True)
class DecomposingMeasure:
    """Empirical measure over ergodic-component labels with representatives."""

    mode: str
    labels: tuple[str, ...]
    weights: tuple[float, ...]
    centers: tuple[float, ...]
    counts: tuple[int, ...]
    representatives: tuple
    spreads: tuple[float, ...]
    admissible: bool
    non_converged_fraction: float
    r1_values: np.ndarray
    statistic_keys: tuple[tuple[int, ...], ...]
    statistics: np.ndarray  # samples x len(statistic_keys)
    schedule: tuple[int, ...]
    mc_samples: int
    barycenter_residual: Optional[float] = None

    @property
    def components(self) -> int:
        return len(self.labels)


def split_by_gaps(values: np.ndarray, min_gap: float) -> list[np.ndarray]:
    """Split sorted 1-D values into clusters at gaps >= min_gap.

    The comparison absorbs binary-float error so values lying exactly min_gap
    apart (as decimals) are split.
    """
    order = np.argsort(values, kind="stable")
    sv = values[order]
    cut = min_gap * (1.0 - 1e-9)
    groups = []
    start = 0
    for i in range(1, len(sv)):
        if sv[i] - sv[i - 1] >= cut:
            groups.append(order[start:i])
            start = i
    groups.append(order[start:])
    return groups


def _point_block(args):
    """Compute limit statistics for a block of point indices (one task)."""
    nu, rho, dictionary, schedule, tolerance, mc_samples, exact_cap, seed, indices, keep_configs = args
    keys = [m.indices for m in dictionary.entries]
    vals = np.empty((len(indices), len(keys)))
    ses = np.empty_like(vals)
    conv = np.empty(vals.shape, dtype=bool)
    configs = [] if keep_configs else None
    sampler = getattr(nu, "sample_array", None)
    for row, i in enumerate(indices):
        stream = substream(seed, i)
        if sampler is not None:
            x = sampler(stream)
        else:
            x = np.asarray(nu.sample(stream), dtype=np.uint8)
        stat = pi_phi(
            x, rho, dictionary, schedule, tolerance, mc_samples, stream, exact_cap
        )
        for j, k in enumerate(keys):
            vals[row, j] = float(stat.values[k])
            ses[row, j] = stat.stderrs[k]
            conv[row, j] = stat.converged[k]
        if keep_configs:
            configs.append(tuple(int(b) for b in x))
    return vals, ses, conv, configs


def _map_blocks(task_args, workers: int):
    if workers <= 1 or len(task_args) <= 1:
        return [_point_block(a) for a in task_args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_point_block, task_args))


def _validate_cocycle_agreement(nu, rho: Cocycle, seed: int, draws: int = 8):
    """Spot-check that nu's atom-ratio cocycle agrees with rho on samples."""
    from .groups import haar_sample

    stream = substream(seed, 0xC0C)
    window = nu.window
    level = min(6, window)
    for _ in range(draws):
        x = nu.sample(stream)
        g = haar_sample(level, stream)
        lhs = rn_derivative(nu, g, x)
        rhs = rho(g, x)
        if isinstance(lhs, Fraction) and isinstance(rhs, Fraction):
            if lhs != rhs:
                raise ValueError(f"measure is not in the cocycle class: {lhs} != {rhs}")
        elif abs(float(lhs) - float(rhs)) > 1e-9 * max(1.0, abs(float(rhs))):
            raise ValueError(
                f"measure is not in the cocycle class: {float(lhs)} != {float(rhs)}"
            )


def decompose(nu, rho: Cocycle, config: DecomposeConfig) -> DecomposingMeasure:
    """Sample M points, compute limit statistics, and group them into
    ergodic components.

    Finite mode groups by 1-D gaps on the first-moment limit; continuous mode
    keeps the empirical distribution of that limit. Aborts when more than the
    configured fraction of points fails limit detection.
    """
    window = nu.window
    schedule = config.schedule or default_schedule(window)
    dictionary = TestDictionary.build(config.depth, config.width)
    if config.validate_cocycle:
        _validate_cocycle_agreement(nu, rho, config.seed)

    keep_configs = not config.exchangeable
    if keep_configs and window > config.empirical_window_cap:
        raise CapacityError(
            "non-exchangeable representatives need window <= "
            f"{config.empirical_window_cap}"
        )

    m = config.samples
    block = max(1, min(512, math.ceil(m / max(1, config.workers * 8))))
    task_args = [
        (
            nu,
            rho,
            dictionary,
            schedule,
            config.tolerance,
            config.mc_samples,
            config.exact_cap,
            config.seed,
            range(lo, min(lo + block, m)),
            keep_configs,
        )
        for lo in range(0, m, block)
    ]
    results = _map_blocks(task_args, config.workers)
    vals = np.concatenate([r[0] for r in results])
    conv = np.concatenate([r[2] for r in results])
    configs: list[Config] = []
    if keep_configs:
        for r in results:
            configs.extend(r[3])

    point_ok = conv.all(axis=1)
    bad_fraction = float(np.mean(~point_ok))
    if bad_fraction > config.nonconvergence_threshold:
        raise NonConvergenceError(
            f"{bad_fraction:.4f} of points failed limit detection "
            f"(threshold {config.nonconvergence_threshold})",
            diagnostics={
                "bad_fraction": bad_fraction,
                "threshold": config.nonconvergence_threshold,
                "schedule": tuple(schedule),
                "mc_samples": config.mc_samples,
            },
        )

    keys = [mo.indices for mo in dictionary.entries]
    r1_col = keys.index((1,))
    r1 = vals[:, r1_col]

    if config.mode == "continuous":
        return DecomposingMeasure(
            mode="continuous",
            labels=(),
            weights=(),
            centers=(),
            counts=(),
            representatives=(),
            spreads=(),
            admissible=True,
            non_converged_fraction=bad_fraction,
            r1_values=r1.copy(),
            statistic_keys=tuple(keys),
            statistics=vals,
            schedule=tuple(schedule),
            mc_samples=config.mc_samples,
        )

    groups = split_by_gaps(r1, config.min_gap)
    labels, weights, centers, counts, reps, spreads = [], [], [], [], [], []
    for gi, idx in enumerate(groups):
        center = float(np.mean(r1[idx]))
        spread = float(np.std(r1[idx])) if len(idx) > 1 else 0.0
        if config.exchangeable and 1e-12 < center < 1 - 1e-12:
            rep = ProductBernoulli([center] * window)
        elif config.exchangeable:
            bit = 1 if center >= 0.5 else 0
            rep = AtomicMeasure({tuple([bit] * window): Fraction(1)})
        else:
            share = Fraction(1, len(idx))
            atoms: dict[Config, Fraction] = {}
            for i in idx:
                cfg = configs[int(i)]
                atoms[cfg] = atoms.get(cfg, Fraction(0)) + share
            rep = AtomicMeasure(atoms)
        labels.append(f"component-{gi}")
        weights.append(len(idx) / m)
        centers.append(center)
        counts.append(len(idx))
        reps.append(rep)
        spreads.append(spread)

    admissible = all(
        abs(a - b) > 0 for a, b in itertools.combinations(centers, 2)
    )
    dm = DecomposingMeasure(
        mode="finite",
        labels=tuple(labels),
        weights=tuple(weights),
        centers=tuple(centers),
        counts=tuple(counts),
        representatives=tuple(reps),
        spreads=tuple(spreads),
        admissible=admissible,
        non_converged_fraction=bad_fraction,
        r1_values=r1.copy(),
        statistic_keys=tuple(keys),
        statistics=vals,
        schedule=tuple(schedule),
        mc_samples=config.mc_samples,
    )
    residual = barycenter_residual(nu, dm, config.residual_depth)
    return replace(dm, barycenter_residual=residual)


def assemble(dm: DecomposingMeasure):
    """Barycenter of a finite decomposing measure (the inverse direction)."""
    if dm.mode != "finite" or not dm.representatives:
        raise ValueError("assembly needs a finite decomposing measure")
    if len(dm.representatives) == 1:
        return dm.representatives[0]
    return Mixture(dm.weights, dm.representatives)


def barycenter_residual(
    nu, dm: DecomposingMeasure, depth: int, pool: Sequence[int] | None = None
) -> float:
    """Max over cylinders of |nu(A) - sum_j w_j eta_j(A)|.

    Cylinders pin any subset of the position pool (default {1..depth}) to any
    bit pattern; both sides are evaluated in closed form.
    """
    positions = tuple(pool) if pool is not None else tuple(range(1, depth + 1))
    worst = 0.0
    for size in range(1, depth + 1):
        for subset in itertools.combinations(positions, size):
            for bits in itertools.product((0, 1), repeat=size):
                cyl = Cylinder.of(dict(zip(subset, bits)))
                target = float(nu.mass(cyl))
                mixed = sum(
                    w * float(rep.mass(cyl))
                    for w, rep in zip(dm.weights, dm.representatives)
                )
                worst = max(worst, abs(target - mixed))
    return worst


@dataclass(frozen=True)
class ErgodicityVerdict:
    verdict: str  # "ergodic" | "non-ergodic" | "inconclusive"
    probes: int
    checks: int
    failures: int
    non_converged: int
    exact: bool
    witnesses: tuple = ()


def ergodicity_test(
    eta,
    rho: Cocycle,
    dictionary: TestDictionary,
    probes: int = 32,
    schedule: Sequence[int] | None = None,
    tolerance: float = 0.02,
    mc_samples: int = 400,
    seed: int = 0,
    exact_cap: int = EXACT_LEVEL_CAP,
) -> ErgodicityVerdict:
    """Check that limit averages of sampled points match the space averages.

    A probe entry fails when |limit - integral| > 3 * stderr + tolerance. On
    exact atomic models of window <= exact_cap the comparison is exact.
    """
    from .measures import expectation_monomial

    window = eta.window
    entries = dictionary.nonconstant()

    if isinstance(eta, AtomicMeasure) and window <= exact_cap:
        failures = 0
        checks = 0
        witnesses = []
        for x in sorted(eta.atoms):
            for mono in entries:
                val = average_exact(window, rho, mono, x).value
                target = expectation_monomial(eta, mono.indices)
                checks += 1
                if val != target:
                    failures += 1
                    if len(witnesses) < 3:
                        witnesses.append((x, mono.indices, val, target))
        verdict = "ergodic" if failures == 0 else "non-ergodic"
        return ErgodicityVerdict(
            verdict=verdict,
            probes=len(eta.atoms),
            checks=checks,
            failures=failures,
            non_converged=0,
            exact=True,
            witnesses=tuple(witnesses),
        )

    sched = tuple(schedule) if schedule is not None else default_schedule(window)
    failures = 0
    checks = 0
    non_converged = 0
    witnesses = []
    for i in range(probes):
        stream = substream(seed, 0xE6, i)
        sampler = getattr(eta, "sample_array", None)
        x = sampler(stream) if sampler is not None else np.asarray(
            eta.sample(stream), dtype=np.uint8
        )
        stat = pi_phi(x, rho, dictionary, sched, 1e-3, mc_samples, stream, exact_cap)
        for mono in entries:
            key = mono.indices
            checks += 1
            if not stat.converged[key]:
                non_converged += 1
                continue
            target = float(expectation_monomial(eta, key))
            dev = abs(float(stat.values[key]) - target)
            if dev > 3.0 * stat.stderrs[key] + tolerance:
                failures += 1
                if len(witnesses) < 3:
                    witnesses.append((i, key, float(stat.values[key]), target))
    if non_converged > 0.1 * checks:
        verdict = "inconclusive"
    elif failures == 0:
        verdict = "ergodic"
    elif failures >= 0.5 * checks:
        verdict = "non-ergodic"
    else:
        verdict = "inconclusive"
    return ErgodicityVerdict(
        verdict=verdict,
        probes=probes,
        checks=checks,
        failures=failures,
        non_converged=non_converged,
        exact=False,
        witnesses=tuple(witnesses),
    )


@dataclass(frozen=True)
class ConditionalCell:
    label: str
    configs: frozenset
    measure: AtomicMeasure
    weight: Fraction
    moments: tuple  # sorted ((indices, Fraction), ...) fingerprint


@dataclass(frozen=True)
class ConditionalAssignment:
    cells: tuple[ConditionalCell, ...]
    reconstructs_exactly: bool
    rn_verified: bool
    support_orbit_closed: bool


def _orbit_moments(members: list[Config], nu: AtomicMeasure) -> tuple:
    """Exact conditional moments of nu on an orbit, sparse over subsets of ones."""
    total = sum((nu.atom(x) for x in members), Fraction(0))
    acc: dict[tuple[int, ...], Fraction] = {}
    for x in members:
        massx = nu.atom(x)
        ones = [i + 1 for i, b in enumerate(x) if b]
        for size in range(len(ones) + 1):
            for sub in itertools.combinations(ones, size):
                acc[sub] = acc.get(sub, Fraction(0)) + massx
    return tuple(sorted((k, v / total) for k, v in acc.items()))


def conditional_measures_exact(nu: AtomicMeasure, rho: Cocycle) -> ConditionalAssignment:
    """Level sets of the exact full-depth limit statistic with their
    normalized conditional measures.

    Works on the measure's support: cells are unions of full-window orbits
    whose exact moment vectors coincide, each cell measure is nu restricted
    and normalized, and the cocycle property of cell measures is verified on
    positive transposition pairs (transpositions generate the level).
    """
    window = nu.window
    if window > CONDITIONAL_WINDOW_CAP:
        raise CapacityError(
            f"exact conditional measures are capped at window {CONDITIONAL_WINDOW_CAP}"
        )
    if not nu.is_probability():
        raise ValueError("conditional measures are computed for probability measures")

    orbits: dict[tuple, list[Config]] = {}
    for x in sorted(nu.atoms):
        orbits.setdefault(orbit_class_key(x, window), []).append(x)

    by_fingerprint: dict[tuple, list[Config]] = {}
    for members in orbits.values():
        fp = _orbit_moments(members, nu)
        by_fingerprint.setdefault(fp, []).extend(members)

    cells = []
    accumulated: dict[Config, Fraction] = {}
    rn_ok = True
    closed = True
    for ci, (fp, members) in enumerate(
        sorted(by_fingerprint.items(), key=lambda kv: sorted(kv[1])[0])
    ):
        weight = sum((nu.atom(x) for x in members), Fraction(0))
        cell_measure = AtomicMeasure(
            {x: nu.atom(x) / weight for x in members}
        )
        for x in members:
            accumulated[x] = accumulated.get(x, Fraction(0)) + weight * cell_measure.atom(x)
        # verify d(cell o T_s)/d(cell) == rho on positive pairs
        member_set = set(members)
        for x in members:
            for i in range(1, window):
                s = Permutation.swap(i, i + 1)
                y = act(s, x)
                if y in member_set:
                    lhs = cell_measure.atom(y) / cell_measure.atom(x)
                    if lhs != Fraction(rho(s, x)):
                        rn_ok = False
                elif sum(y) == sum(x):
                    closed = False
        cells.append(
            ConditionalCell(
                label=f"cell-{ci}",
                configs=frozenset(members),
                measure=cell_measure,
                weight=weight,
                moments=fp,
            )
        )
    reconstructs = accumulated == nu.atoms
    return ConditionalAssignment(
        cells=tuple(cells),
        reconstructs_exactly=reconstructs,
        rn_verified=rn_ok,
        support_orbit_closed=closed,
    )


@dataclass(frozen=True)
class RoundtripReport:
    first: DecomposingMeasure
    second: DecomposingMeasure
    weight_drift: float
    center_drift: float

    def within(self, weight_tol: float, center_tol: float) -> bool:
        return self.weight_drift <= weight_tol and self.center_drift <= center_tol


def mes_ed_roundtrip(nu, rho: Cocycle, config: DecomposeConfig) -> RoundtripReport:
    """Decompose, reassemble the barycenter, decompose again, compare."""
    first = decompose(nu, rho, config)
    rebuilt = assemble(first)
    second_seed = int(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(0xED,)).generate_state(1)[0]
    )
    second = decompose(rebuilt, rho, replace(config, seed=second_seed, validate_cocycle=False))
    if first.components != second.components:
        return RoundtripReport(first, second, math.inf, math.inf)
    w1 = np.array(first.weights)[np.argsort(first.centers)]
    w2 = np.array(second.weights)[np.argsort(second.centers)]
    c1 = np.sort(np.array(first.centers))
    c2 = np.sort(np.array(second.centers))
    return RoundtripReport(
        first=first,
        second=second,
        weight_drift=float(np.max(np.abs(w1 - w2))),
        center_drift=float(np.max(np.abs(c1 - c2))),
    )


@dataclass(frozen=True)
class SingularityEvidence:
    event_threshold: float
    mass_low: float  # lower bound for the first measure on the event
    mass_high: float  # upper bound for the second measure on the event
    ok: bool


def singular_assembly_check(
    p_low: float, p_high: float, window: int, threshold: float = 0.5
) -> SingularityEvidence:
    """Mutual singularity of Bernoulli(p_low) vs Bernoulli(p_high) at window
    scale, via the typical-frequency event {frequency <= threshold} and the
    exponential tail bound exp(-2 N t^2)."""
    if not (p_low < threshold < p_high):
        raise ValueError("threshold must separate the two parameters")
    eps_low = math.exp(-2 * window * (threshold - p_low) ** 2)
    eps_high = math.exp(-2 * window * (p_high - threshold) ** 2)
    return SingularityEvidence(
        event_threshold=threshold,
        mass_low=1.0 - eps_low,
        mass_high=eps_high,
        ok=(1.0 - eps_low) > 0.99 and eps_high < 0.01,
    )


@dataclass(frozen=True)
class InvariantUpgradeReport:
    almost_invariant: bool
    upgraded: frozenset
    symmetric_difference_mass: Fraction
    witness: tuple | None


def _permutation_between(x: Config, y: Config) -> Permutation:
    """A finite permutation g with act(g, x) == y (equal ones counts)."""
    ones_x = [i + 1 for i, b in enumerate(x) if b]
    ones_y = [i + 1 for i, b in enumerate(y) if b]
    zeros_x = [i + 1 for i, b in enumerate(x) if not b]
    zeros_y = [i + 1 for i, b in enumerate(y) if not b]
    mapping = dict(zip(ones_x, ones_y))
    mapping.update(zip(zeros_x, zeros_y))
    return Permutation(mapping)


def almost_invariant_upgrade(a_set, nu: AtomicMeasure) -> InvariantUpgradeReport:
    """Largest exactly invariant set inside A, with the almost-invariance audit.

    A point belongs to the upgrade exactly when the full-window level average
    of A's indicator equals 1 at every level, i.e. when its whole orbit stays
    inside A. A is almost invariant iff every positive atom inside A has its
    orbit inside A and every positive atom outside A has its orbit outside;
    the first violation is returned with a concrete witness permutation.
    """
    window = nu.window
    if window > CONDITIONAL_WINDOW_CAP:
        raise CapacityError(
            f"invariant-set upgrade is capped at window {CONDITIONAL_WINDOW_CAP}"
        )
    a_cfgs = {validate_config(c) for c in a_set}
    by_count: dict[int, set[Config]] = {}
    for c in a_cfgs:
        by_count.setdefault(sum(c), set()).add(c)

    full_counts = {
        k for k, group in by_count.items() if len(group) == math.comb(window, k)
    }
    upgraded = frozenset(c for c in a_cfgs if sum(c) in full_counts)

    witness = None
    for x in sorted(nu.atoms):
        k = sum(x)
        if x in a_cfgs and k not in full_counts:
            outside = next(
                cfg
                for cfg in _count_class(window, k)
                if cfg not in a_cfgs
            )
            witness = (x, outside, _permutation_between(x, outside))
            break
        if x not in a_cfgs and by_count.get(k):
            inside = next(iter(sorted(by_count[k])))
            witness = (x, inside, _permutation_between(x, inside))
            break

    sym_mass = sum(
        (nu.atom(c) for c in a_cfgs.symmetric_difference(upgraded)), Fraction(0)
    )
    return InvariantUpgradeReport(
        almost_invariant=witness is None,
        upgraded=upgraded,
        symmetric_difference_mass=sym_mass,
        witness=witness,
    )


def _count_class(window: int, k: int):
    for ones_at in itertools.combinations(range(window), k):
        cfg = [0] * window
        for i in ones_at:
            cfg[i] = 1
        yield tuple(cfg)


def ks_statistic(values: np.ndarray, cdf) -> float:
    """One-sample Kolmogorov-Smirnov distance against a given CDF."""
    sv = np.sort(np.asarray(values, dtype=float))
    n = sv.shape[0]
    f = np.array([float(cdf(v)) for v in sv])
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))
