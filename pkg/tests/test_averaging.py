import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergodec.averaging import (
    AveragingReport,
    _ratio_or_zero,
    average_exact,
    average_mc,
    conditional_expectation_check,
    default_schedule,
    fubini_check,
    invariance_check,
    limit_average,
    monomial_level_average,
    tower_check,
)
from ergodec.cocycles import Cocycle, constant_one, make_rn
from ergodec.dictionary import CylinderMonomial, TestDictionary
from ergodec.errors import CapacityError
from ergodec.measures import AtomicMeasure, ProductBernoulli
from ergodec.rng import substream


def brute_force_average(level, weight_fn, phi, x):
    """Independent oracle: loop one-line permutations, move bit j to images[j-1]."""
    num = Fraction(0)
    den = Fraction(0)
    for images in itertools.permutations(range(1, level + 1)):
        y = list(x)
        for j in range(1, level + 1):
            y[images[j - 1] - 1] = x[j - 1]
        y = tuple(y)
        w = weight_fn(y, x)
        num += Fraction(phi(y)) * w
        den += w
    return num / den


def _const_phi(c):
    return lambda y: c


def test_average_exact_constant_function():
    rho = make_rn(ProductBernoulli([Fraction(1, 3)] * 4))
    rep = average_exact(3, rho, _const_phi(Fraction(5, 7)), (1, 0, 1, 1))
    assert rep.value == Fraction(5, 7)
    assert rep.method == "exact" and rep.stderr == 0


def test_average_exact_symmetric_slot():
    rep = average_exact(2, constant_one(), CylinderMonomial((1,)), (1, 0))
    assert rep.value == Fraction(1, 2)


def test_average_exact_weighted_orbit():
    nu = ProductBernoulli([Fraction(1, 2), Fraction(1, 4)])
    rep = average_exact(2, make_rn(nu), CylinderMonomial((1,)), (1, 0))
    # oracle: conditional expectation over the two orbit atoms
    mass_10 = Fraction(1, 2) * Fraction(3, 4)
    mass_01 = Fraction(1, 2) * Fraction(1, 4)
    oracle = (1 * mass_10 + 0 * mass_01) / (mass_10 + mass_01)
    assert oracle == Fraction(3, 4)
    assert rep.value == oracle


def test_average_exact_capacity_error():
    with pytest.raises(CapacityError):
        average_exact(9, constant_one(), CylinderMonomial((1,)), tuple([1] * 9))


def test_exact_paths_agree_with_brute_force():
    params = [Fraction(2, 5), Fraction(1, 3), Fraction(4, 7), Fraction(1, 2), Fraction(2, 3), Fraction(3, 8)]
    nu = ProductBernoulli(params)
    rho = make_rn(nu)
    one = constant_one()
    rng = substream(41, 0)
    for level in (2, 3, 4):
        for _ in range(8):
            x = tuple(int(b) for b in rng.integers(0, 2, size=6))
            phi = CylinderMonomial(tuple(sorted(
                rng.choice(range(1, 7), size=2, replace=False).tolist()
            )))
            got_rn = average_exact(level, rho, phi, x).value
            want_rn = brute_force_average(
                level, lambda y, x0: nu.atom(y) / nu.atom(x0), phi, x
            )
            assert got_rn == want_rn
            got_one = average_exact(level, one, phi, x).value
            want_one = brute_force_average(level, lambda y, x0: Fraction(1), phi, x)
            assert got_one == want_one
            assert monomial_level_average(level, phi.indices, x) == want_one


def test_average_mc_constant_cancels_exactly():
    rho = make_rn(ProductBernoulli([Fraction(1, 3)] * 6))
    rep = average_mc(6, rho, _const_phi(2.5), (1, 0, 1, 0, 1, 0), 50, substream(41, 1))
    assert rep.value == 2.5
    assert rep.method == "monte-carlo"


def test_average_mc_symmetry_count():
    x = tuple([1] * 3 + [0] * 9)
    rep = average_mc(12, constant_one(), CylinderMonomial((1,)), x, 4000, substream(41, 2))
    assert abs(rep.value - 3 / 12) <= 3 * rep.stderr + 1e-9


def test_average_mc_agrees_with_exact():
    params = [Fraction(2 + (i % 5), 11) for i in range(6)]
    nu = ProductBernoulli(params)
    cocycles = [constant_one(), make_rn(nu)]
    rng = substream(41, 3)
    hits = 0
    for trial in range(100):
        x = tuple(int(b) for b in rng.integers(0, 2, size=6))
        size = int(rng.integers(1, 3))
        phi = CylinderMonomial(tuple(sorted(
            rng.choice(range(1, 7), size=size, replace=False).tolist()
        )))
        rho = cocycles[trial % 2]
        exact = float(average_exact(6, rho, phi, x).value)
        mc = average_mc(6, rho, phi, x, 400, rng)
        if abs(mc.value - exact) <= 3 * mc.stderr + 1e-12:
            hits += 1
    assert hits >= 99


def test_average_mc_requires_two_samples():
    with pytest.raises(ValueError):
        average_mc(4, constant_one(), CylinderMonomial((1,)), (1, 0, 1, 0), 1, substream(0, 0))


def test_positive_contraction_bound():
    params = [Fraction(1, 3)] * 5
    rho = make_rn(ProductBernoulli(params))

    def phi(y):
        return Fraction(-3) if y[0] else Fraction(2)

    rng = substream(41, 4)
    for _ in range(20):
        x = tuple(int(b) for b in rng.integers(0, 2, size=5))
        v = average_exact(4, rho, phi, x).value
        assert -3 <= v <= 2


def test_infinite_denominator_branch_returns_zero():
    assert _ratio_or_zero(Fraction(3), math.inf) == 0


def test_exact_report_rejects_nonzero_stderr():
    with pytest.raises(ValueError):
        AveragingReport(value=1.0, level=2, method="exact", stderr=0.1, sample_count=2)


def test_limit_average_constant_converges_immediately():
    rho = constant_one()
    rep = limit_average(rho, _const_phi(Fraction(2, 3)), (1, 0, 1, 0), [1, 2, 4])
    assert rep.converged
    assert rep.limit_estimate == pytest.approx(2 / 3)
    assert all(r.stderr == 0 for r in rep.levels)


def test_limit_average_all_ones_fixed():
    x = tuple([1] * 64)
    rep = limit_average(
        constant_one(), CylinderMonomial((1,)), x, [1, 2, 4, 8, 16, 32, 64],
        mc_samples=64, rng=substream(43, 0),
    )
    assert rep.converged and rep.limit_estimate == 1.0
    assert all(float(r.value) == 1.0 for r in rep.levels)


def test_limit_average_lln_bernoulli():
    nu = ProductBernoulli([0.2] * 4096)
    x = nu.sample(substream(43, 1))
    rep = limit_average(
        constant_one(), CylinderMonomial((1,)), x, default_schedule(4096),
        mc_samples=3000, rng=substream(43, 2),
    )
    assert rep.converged
    freq = sum(x) / 4096
    assert abs(rep.limit_estimate - freq) <= 3 * rep.levels[-1].stderr
    assert abs(rep.limit_estimate - 0.2) <= 0.02
    series = rep.rows()
    assert [lvl for lvl, _, _ in series] == list(default_schedule(4096))
    assert all(se == 0.0 for lvl, _, se in series if lvl <= 8)


def test_limit_average_reports_nonconvergence():
    # levels 1 and 2 genuinely disagree at a point with x1 != x2
    rep = limit_average(constant_one(), CylinderMonomial((1,)), (1, 0), [1, 2])
    assert not rep.converged
    assert rep.limit_estimate is None
    assert rep.last_diff == pytest.approx(0.5)


def test_limit_schedule_must_increase():
    with pytest.raises(ValueError):
        limit_average(constant_one(), CylinderMonomial((1,)), (1, 0), [2, 2])


def _product_atoms(params):
    atoms = {}
    for bits in itertools.product((0, 1), repeat=len(params)):
        m = Fraction(1)
        for p, b in zip(params, bits):
            m *= p if b else 1 - p
        atoms[bits] = m
    return AtomicMeasure(atoms)


def test_tower_idempotent_at_equal_levels():
    params = [Fraction(1, 3)] * 4
    nu = _product_atoms(params)
    rho = make_rn(ProductBernoulli(params))
    rep = tower_check(3, 3, rho, CylinderMonomial((1,)), nu)
    assert rep.ok


def test_tower_exact_on_every_atom():
    params = [Fraction(2, 5), Fraction(1, 3), Fraction(4, 7), Fraction(1, 2)]
    nu = _product_atoms(params)
    rho = make_rn(ProductBernoulli(params))
    rep = tower_check(3, 2, rho, CylinderMonomial((1,)), nu)
    assert rep.ok and rep.pairs_checked == 16
    rep_one = tower_check(3, 2, constant_one(), CylinderMonomial((1,)), nu)
    assert rep_one.ok


def test_tower_capacity_guard():
    nu = _product_atoms([Fraction(1, 2)] * 4)
    with pytest.raises(CapacityError):
        tower_check(6, 2, constant_one(), CylinderMonomial((1,)), nu)


def _not_a_cocycle(g, x):
    # multiplicativity deliberately broken at one transposition
    if g(1) == 2 and g(2) == 1 and g.degree == 2:
        return Fraction(7, 2)
    return Fraction(1)


def test_tower_reports_witness_when_weights_are_inconsistent():
    fake = Cocycle(eval_fn=_not_a_cocycle, provenance="radon-nikodym", potential=None)
    nu = _product_atoms([Fraction(1, 2)] * 4)
    rep = tower_check(3, 2, fake, CylinderMonomial((1,)), nu)
    assert not rep.ok
    assert rep.witness is not None
    atom, lhs, rhs = rep.witness
    assert lhs != rhs


def test_conditional_expectation_whole_space_and_sweep():
    params = [Fraction(2, 5), Fraction(1, 3), Fraction(4, 7), Fraction(1, 2)]
    nu = _product_atoms(params)
    rho = make_rn(ProductBernoulli(params))
    rep = conditional_expectation_check(2, rho, CylinderMonomial((1, 3)), nu)
    assert rep.ok
    assert rep.classes == 12
    assert rep.sets_checked == 2**12


def test_conditional_expectation_detects_wrong_class():
    params = [Fraction(2, 5), Fraction(1, 3), Fraction(4, 7), Fraction(1, 2)]
    nu = _product_atoms([Fraction(1, 2)] * 4)  # uniform, not in the rho class
    rho = make_rn(ProductBernoulli(params))
    rep = conditional_expectation_check(2, rho, CylinderMonomial((1,)), nu)
    assert not rep.ok
    assert rep.witness is not None


def test_conditional_expectation_capacity_guard():
    nu = _product_atoms([Fraction(1, 2)] * 6)
    rho = constant_one()
    with pytest.raises(CapacityError):
        conditional_expectation_check(2, rho, CylinderMonomial((1,)), nu, max_sets=16)


def test_fubini_identity_exact():
    params = [Fraction(2, 5), Fraction(1, 3), Fraction(4, 7), Fraction(1, 2)]
    nu = _product_atoms(params)
    rho = make_rn(ProductBernoulli(params))
    for level in (1, 2, 3):
        for mono in TestDictionary.build(2, 4).entries:
            rep = fubini_check(level, rho, mono, nu)
            assert rep.ok


def test_fubini_fails_outside_the_class():
    params = [Fraction(2, 5), Fraction(1, 3), Fraction(4, 7)]
    nu = _product_atoms([Fraction(1, 2)] * 3)
    rho = make_rn(ProductBernoulli(params))
    rep = fubini_check(2, rho, CylinderMonomial((1,)), nu)
    assert not rep.ok


def test_invariance_along_orbit():
    params = [Fraction(2, 5), Fraction(1, 3), Fraction(4, 7), Fraction(1, 2), Fraction(2, 3)]
    rho = make_rn(ProductBernoulli(params))
    ok, witness = invariance_check(3, rho, CylinderMonomial((1, 2)), (1, 0, 1, 1, 0))
    assert ok and witness is None
    ok1, _ = invariance_check(4, constant_one(), CylinderMonomial((1,)), (1, 0, 1, 1, 0))
    assert ok1


def test_default_schedule_geometric():
    assert default_schedule(16) == (1, 2, 4, 8, 16)
    assert default_schedule(12) == (1, 2, 4, 8, 12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**6 - 1), st.integers(1, 4))
def test_monomial_average_within_unit_interval(bits, level):
    x = tuple((bits >> i) & 1 for i in range(6))
    v = monomial_level_average(level, (1, 2), x)
    assert 0 <= v <= 1
