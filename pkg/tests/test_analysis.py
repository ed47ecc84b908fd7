import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccportfolio.analysis import (
    Frontier,
    FrontierPoint,
    dissimilarity_matrix,
    monte_carlo_validate,
    parse_tau_grid,
    sample_perturbations,
    sweep_frontier,
)
from ccportfolio.distributions import WeightedExponentialSum, hypoexp_cdf_batch
from ccportfolio.errors import DimensionMismatch, LengthMismatch, MalformedCsv, UnsortedTaus
from ccportfolio.fixtures import SECTOR_SHIFTS, TAU_GRID
from ccportfolio.models import PerturbationSpec
from ccportfolio.solver import Status, solve

from reference import NOMINAL, NORMAL, risks


# -- tau grid --------------------------------------------------------------

def test_tau_grid_reference():
    assert parse_tau_grid("1.5:0.2:3.5") == list(TAU_GRID)


def test_tau_grid_end_within_half_step():
    assert parse_tau_grid("0:0.5:1.2") == [0.0, 0.5, 1.0]
    assert parse_tau_grid("0:0.5:1.3") == [0.0, 0.5, 1.0, 1.5]
    assert parse_tau_grid("2:1:2") == [2.0]


@pytest.mark.parametrize("spec", ["3.5:0.2:1.5", "1:0:2", "1:-0.1:2"])
def test_tau_grid_unsorted(spec):
    with pytest.raises(UnsortedTaus):
        parse_tau_grid(spec)


@pytest.mark.parametrize("spec", ["1.5:3.5", "a:b:c", "1:nan:2", ""])
def test_tau_grid_malformed(spec):
    with pytest.raises(ValueError):
        parse_tau_grid(spec)


# -- sweeps ----------------------------------------------------------------

def test_empty_sweep(nominal):
    f = sweep_frontier(nominal, [])
    assert f.points == ()


def test_unsorted_sweep(nominal):
    with pytest.raises(UnsortedTaus):
        sweep_frontier(nominal, [2.0, 1.5])


def test_nominal_sweep_matches_reference(nominal):
    f = sweep_frontier(nominal, TAU_GRID)
    np.testing.assert_allclose(f.risks, risks(NOMINAL), atol=1e-3)
    assert all(p.status is Status.CONVERGED for p in f.points)


def test_normal_sweep_matches_reference(normal_model):
    f = sweep_frontier(normal_model, TAU_GRID)
    np.testing.assert_allclose(f.risks, risks(NORMAL), atol=2e-3)


def test_infeasible_points_carried(nominal):
    f = sweep_frontier(nominal, [6.0, 6.5, 7.0])
    assert [p.status for p in f.points] == [Status.CONVERGED, Status.INFEASIBLE, Status.INFEASIBLE]
    assert f.points[1].weights is None and f.points[1].risk is None


def test_threads_do_not_change_results(normal_model):
    a = sweep_frontier(normal_model, TAU_GRID[:4])
    b = sweep_frontier(normal_model, TAU_GRID[:4], threads=3)
    assert a.to_csv() == b.to_csv()


# -- CSV -------------------------------------------------------------------

def test_csv_format_and_round_trip():
    f = Frontier("m", (FrontierPoint(1.5, (0.25, 0.75), 2.123456789, Status.CONVERGED),
                       FrontierPoint(9.0, None, None, Status.INFEASIBLE)), ("A", "B"))
    text = f.to_csv()
    assert text == ("tau,risk,status,w_A,w_B\n"
                    "1.500000,2.123457,Converged,0.250000,0.750000\n"
                    "9.000000,,Infeasible,,\n")
    back = Frontier.from_csv(text, "m")
    assert back.asset_labels == ("A", "B")
    assert back.points[0].risk == 2.123457
    assert back.points[1].weights is None
    assert back.to_csv() == text


@pytest.mark.parametrize("text", [
    "tau,risk\n1,2\n",
    "tau,risk,status,x_A\n1,2,Converged,1\n",
    "tau,risk,status,w_A\n1,2,Converged\n",
    "tau,risk,status,w_A\n1,2,Bogus,1\n",
    "tau,risk,status,w_A\n1,abc,Converged,1\n",
])
def test_csv_malformed(text):
    with pytest.raises(MalformedCsv):
        Frontier.from_csv(text)


# -- dissimilarity ---------------------------------------------------------

def test_identical_vectors():
    d = dissimilarity_matrix([[1, 2, 3], [1, 2, 3]], ["a", "b"])
    assert d.d[0, 1] == 0.0


def test_reference_columns():
    # the distance between the two published risk columns; see the decisions ledger
    d = dissimilarity_matrix([risks(NOMINAL), risks(NORMAL)], ["nominal", "normal"])
    expected = math.sqrt(sum((a - b) ** 2 for a, b in zip(risks(NOMINAL), risks(NORMAL))))
    assert d.d[0, 1] == pytest.approx(expected, abs=1e-15)
    assert d.d[0, 1] == pytest.approx(0.7780, abs=1e-4)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        dissimilarity_matrix([[1, 2], [1, 2, 3]], ["a", "b"])
    with pytest.raises(LengthMismatch):
        dissimilarity_matrix([[1, 2]], ["a", "b"])


def test_json_shape():
    d = dissimilarity_matrix([[0, 0], [3, 4]], ["p", "q"])
    assert d.to_dict() == {"labels": ["p", "q"], "matrix": [[0.0, 5.0], [5.0, 0.0]]}


@settings(max_examples=100)
@given(st.integers(1, 5).flatmap(lambda k: st.integers(1, 8).flatmap(
    lambda n: st.lists(st.lists(st.floats(-1e3, 1e3), min_size=n, max_size=n), min_size=k, max_size=k))))
def test_symmetric_zero_diagonal(vectors):
    d = dissimilarity_matrix(vectors, [str(i) for i in range(len(vectors))]).d
    assert np.array_equal(d, d.T)
    assert not np.diag(d).any()
    assert np.all(d >= 0) and np.all(np.isfinite(d))


# -- Monte Carlo -----------------------------------------------------------

def test_zero_shifts_probability_one(stats):
    spec = PerturbationSpec.normal((0.0, 0.0, 0.0))
    x = np.array([0.0, 0.0, 1.0])
    assert monte_carlo_validate(x, stats, spec, 6.0, samples=1000) == 1.0
    assert monte_carlo_validate(x, stats, spec, 6.5, samples=1000) == 0.0


def test_nominal_optimum_half_probability(nominal, stats):
    x = solve(nominal.with_tau(2.5)).weights
    p = monte_carlo_validate(x, stats, PerturbationSpec.normal(SECTOR_SHIFTS), 2.5)
    assert p == pytest.approx(0.5, abs=0.01)


def test_normal_optimum_hits_confidence(normal_model, stats):
    x = solve(normal_model.with_tau(2.5)).weights
    p = monte_carlo_validate(x, stats, normal_model.perturbation, 2.5)
    assert p == pytest.approx(0.95, abs=0.01)


def test_validation_deterministic(stats):
    spec = PerturbationSpec.exponential(SECTOR_SHIFTS)
    x = [0.1, 0.4, 0.5]
    a = monte_carlo_validate(x, stats, spec, 3.0, samples=300_000, seed=9)
    assert a == monte_carlo_validate(x, stats, spec, 3.0, samples=300_000, seed=9)
    assert a != monte_carlo_validate(x, stats, spec, 3.0, samples=300_000, seed=10)


def test_validation_dimension_mismatch(stats):
    with pytest.raises(DimensionMismatch):
        monte_carlo_validate([0.5, 0.5], stats, PerturbationSpec.normal(SECTOR_SHIFTS), 2.0)


def test_normal_sampler_moments():
    spec = PerturbationSpec.normal((1, 1), means=(2.0, -1.0), stddevs=(0.5, 3.0))
    z = sample_perturbations(spec, 400_000, np.random.default_rng(1))
    np.testing.assert_allclose(z.mean(axis=0), [2.0, -1.0], atol=3 * 3.0 / math.sqrt(4e5))
    np.testing.assert_allclose(z.std(axis=0), [0.5, 3.0], rtol=0.01)


def ks_distance(sample, cdf):
    y = np.sort(sample)
    F = cdf(y)
    n = y.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def test_exponential_sampler_against_cdf():
    x = np.array([0.1, 0.5, 0.4])
    c = np.array(SECTOR_SHIFTS) * x
    spec = PerturbationSpec.exponential(SECTOR_SHIFTS)
    z = sample_perturbations(spec, 1_000_000, np.random.Generator(np.random.PCG64(42)))
    y = z @ c
    s = WeightedExponentialSum(c, (1, 1, 1))
    assert ks_distance(y, lambda a: hypoexp_cdf_batch(np.tile(c, (a.size, 1)), s.rates, a)) <= 0.005
