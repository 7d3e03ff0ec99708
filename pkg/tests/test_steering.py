import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steershare.linalg import DensityMatrix, StateError, basis_ket, maximally_mixed, partial_trace
from steershare.states import depolarize, ghz_like_state, w_like_state, w_n_state
from steershare.steering import (
    FULLY_MUTUAL,
    INVALID,
    MONOGAMOUS,
    SHAREABLE,
    UNSTEERABLE,
    SteeringMatrix,
    SteeringValue,
    batched_pair_values,
    classify_configuration,
    min_variance_bound,
    pair_moments,
    steering_matrix,
    steering_parameter,
    sweep_cell,
    sweep_csv_text,
    sweep_region_map,
)

from oracles import X, Y, Z, haar_ket, literal_steering, random_density, reduced_pair, w_vector

seeds = st.integers(min_value=0, max_value=2**32 - 1)
S3 = 1 / math.sqrt(3)


def test_pair_moments_reduced_w():
    m = pair_moments(partial_trace(w_n_state(3), [0, 1]))
    z = m.setting("z")
    assert z["mean_steerer"] == pytest.approx(1 / 3)
    assert z["mean_steered"] == pytest.approx(1 / 3)
    assert z["cross"] == pytest.approx(-1 / 3)
    assert z["covariance"] == pytest.approx(-4 / 9)
    assert z["var_steerer"] == pytest.approx(8 / 9)
    assert z["var_steered"] == pytest.approx(8 / 9)


def test_pair_moments_product_and_mixed():
    m = pair_moments(basis_ket("00"))
    np.testing.assert_allclose(m.covariance, 0, atol=1e-15)
    np.testing.assert_allclose(m.var_steerer, [1, 1, 0], atol=1e-15)
    np.testing.assert_allclose(m.var_steered, [1, 1, 0], atol=1e-15)
    m = pair_moments(maximally_mixed(2))
    for f in (m.mean_steerer, m.mean_steered, m.covariance):
        np.testing.assert_allclose(f, 0, atol=1e-15)
    np.testing.assert_allclose(m.var_steerer, 1)


def test_pair_moments_wrong_dimension():
    with pytest.raises(StateError):
        pair_moments(w_n_state(3))


def test_min_variance_bound():
    assert min_variance_bound(3) == 2
    assert min_variance_bound(2) == 1
    with pytest.raises(ValueError):
        min_variance_bound(4)


def test_two_setting_bound_by_grid_search():
    # minimize (1 - <x>^2) + (1 - <z>^2) over the Bloch ball
    best = math.inf
    for th in np.linspace(0, math.pi, 181):
        for ph in np.linspace(0, 2 * math.pi, 361):
            x, z = math.sin(th) * math.cos(ph), math.cos(th)
            best = min(best, 2 - x * x - z * z)
    assert best == pytest.approx(min_variance_bound(2), abs=1e-12)


def test_three_setting_bound_bloch_identity():
    rng = np.random.default_rng(1)
    for _ in range(2000):
        psi = haar_ket(2, rng)
        rho = np.outer(psi, psi.conj())
        total = sum(1 - np.real(np.trace(rho @ s)) ** 2 for s in (X, Y, Z))
        assert total == pytest.approx(2.0, abs=1e-10)


@pytest.mark.parametrize("i,j", [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)])
def test_steering_parameter_w(i, j):
    assert steering_parameter(w_n_state(3), i, j).value == pytest.approx(16 / 9, abs=1e-12)


def test_steering_parameter_w4():
    w4 = w_n_state(4)
    for i in range(4):
        for j in range(4):
            if i != j:
                assert steering_parameter(w4, i, j).value == pytest.approx(13 / 6, abs=1e-12)


def test_steering_parameter_simple_states():
    v = steering_parameter(basis_ket("000"), "A", "B")
    assert v.value == pytest.approx(2.0, abs=1e-12)
    assert not v.violated()
    g = ghz_like_state(1 / math.sqrt(2), 1 / math.sqrt(2))
    assert steering_parameter(g, 0, 1).value == pytest.approx(2.0, abs=1e-12)
    assert steering_parameter(maximally_mixed(2), 0, 1).value == pytest.approx(3.0, abs=1e-12)


def test_steering_parameter_errors():
    with pytest.raises(StateError):
        steering_parameter(w_n_state(3), 1, 1)
    with pytest.raises(StateError):
        steering_parameter(basis_ket("0"), 0, 1)


def test_degenerate_steerer_variance_uses_zero_alpha():
    # steerer in a z eigenstate: var(A_z) = 0, cov must vanish, term is var(B_z)
    rho = np.kron(np.diag([1.0, 0.0]), random_density(2, np.random.default_rng(0)))
    value = steering_parameter(DensityMatrix(rho), 0, 1).value
    assert value == pytest.approx(literal_steering(rho), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=seeds)
def test_closed_form_matches_literal_sum(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(4, rng)
    got = steering_parameter(DensityMatrix(rho), 0, 1).value
    assert got == pytest.approx(literal_steering(rho), abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_optimal_alpha_minimizes(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(4, rng, rank=2)
    p = steering_parameter(DensityMatrix(rho), 0, 1).value
    m = pair_moments(DensityMatrix(rho))
    best = -m.covariance / m.var_steerer
    for _ in range(20):
        alphas = best + rng.normal(scale=0.5, size=3)
        assert literal_steering(rho, alphas) >= p - 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_matrix_matches_loop_oracle_reduction(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(8, rng)
    m = steering_matrix(DensityMatrix(rho))
    for v in m.values:
        want = literal_steering(reduced_pair(rho, 3, v.steerer, v.steered))
        assert v.value == pytest.approx(want, abs=1e-10)


def test_batched_values_match_matrix():
    rng = np.random.default_rng(5)
    rhos = np.stack([random_density(8, rng) for _ in range(5)])
    pairs = [(0, 1), (2, 0), (1, 2)]
    got = batched_pair_values(rhos, 3, pairs)
    for k, rho in enumerate(rhos):
        m = steering_matrix(DensityMatrix(rho))
        for c, (i, j) in enumerate(pairs):
            assert got[k, c] == pytest.approx(m.get(i, j).value, abs=1e-12)


def test_swap_symmetry():
    # beta == gamma: amplitudes on |010> and |100> equal, so A <-> B symmetric
    b = math.sqrt((1 - 0.3**2) / 2)
    m = steering_matrix(w_like_state((0.3, b, b)))
    assert m.get("A", "B").value == pytest.approx(m.get("B", "A").value, abs=1e-9)
    assert m.get("A", "C").value == pytest.approx(m.get("B", "C").value, abs=1e-9)
    assert m.get("C", "A").value == pytest.approx(m.get("C", "B").value, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_product_states_never_steer(seed):
    rng = np.random.default_rng(seed)
    for _ in range(50):
        rho = np.kron(random_density(2, rng), random_density(2, rng))
        assert steering_parameter(DensityMatrix(rho), 0, 1).value >= 2 - 1e-12
        assert steering_parameter(DensityMatrix(rho), 1, 0).value >= 2 - 1e-12


def test_depolarizing_is_monotone():
    w = w_n_state(3)
    prev = -math.inf
    for p in np.linspace(0, 1, 10):
        v = steering_parameter(depolarize(w, p), 0, 1).value
        assert v >= prev - 1e-12
        prev = v


def test_steering_matrix_examples():
    m = steering_matrix(w_n_state(3))
    assert [(v.steerer, v.steered) for v in m.values] == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    assert all(v.value == pytest.approx(16 / 9) for v in m.values)
    m = steering_matrix(w_like_state((0.5, 0.5, 1 / math.sqrt(2))))
    assert m.get("B", "A").value == pytest.approx(m.get("C", "A").value, abs=1e-9)
    assert m.get("B", "A").value < 2
    m = steering_matrix(basis_ket("000"))
    assert all(v.value == pytest.approx(2.0) for v in m.values)
    with pytest.raises(StateError):
        steering_matrix(basis_ket("0"))


def test_classify_examples():
    c = classify_configuration(steering_matrix(w_like_state((0.2, 0.4, math.sqrt(0.8)))))
    assert c.arrows == {(1, 0), (0, 1), (0, 2)}
    assert c.category == MONOGAMOUS
    c = classify_configuration(steering_matrix(w_like_state((0.5, 0.5, 1 / math.sqrt(2)))))
    assert {(1, 0), (2, 0)} <= c.arrows
    assert c.in_degree[0] == 2
    assert c.category == SHAREABLE
    c = classify_configuration(steering_matrix(w_n_state(3)))
    assert len(c.arrows) == 6 and c.category == FULLY_MUTUAL and c.shareable
    c = classify_configuration(steering_matrix(basis_ket("000")))
    assert c.category == UNSTEERABLE and not c.arrows


def test_classify_epsilon_and_sigma():
    m = SteeringMatrix.from_values({"AB": 1.95, "BA": 2.5}, stderr={"AB": 0.03})
    assert classify_configuration(m).arrows == {(0, 1)}
    assert classify_configuration(m, epsilon=0.1).category == UNSTEERABLE
    assert classify_configuration(m, sigma_k=2.0).category == UNSTEERABLE


def test_steering_value_rules():
    v = SteeringValue(0, 1, 1.99, stderr=0.03)
    assert v.violated() and not v.violated(sigma_k=1)
    assert not SteeringValue(0, 1, math.nan).violated()
    with pytest.raises(StateError):
        SteeringValue(1, 1, 1.0)


def test_from_values_labels():
    m = SteeringMatrix.from_values({"P_BA": 1.5, "ca": 1.7})
    assert m.get("B", "A").value == 1.5 and m.get("C", "A").value == 1.7
    assert math.isnan(m.get("A", "B").value)
    with pytest.raises(StateError):
        SteeringMatrix.from_values({"AD": 1.0})


def test_matrix_rejects_incomplete():
    with pytest.raises(StateError):
        SteeringMatrix(3, (SteeringValue(0, 1, 1.0),))


def test_relabel_permutes_pairs():
    m = steering_matrix(w_like_state((0.2, 0.4, math.sqrt(0.8))))
    r = m.relabel([2, 0, 1])
    assert r.get(2, 0).value == m.get(0, 1).value


def test_sweep_cells():
    assert sweep_cell(0.2, 0.4).category == MONOGAMOUS
    assert sweep_cell(0.5, 0.5).category == SHAREABLE
    assert sweep_cell(S3, S3).category == FULLY_MUTUAL
    assert sweep_cell(0.9, 0.9).category == INVALID


def test_sweep_cell_matches_steering_matrix():
    cell = sweep_cell(0.3, 0.45)
    m = steering_matrix(w_like_state((0.3, 0.45, cell.gamma)))
    order = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)]
    assert cell.values == pytest.approx([m.get(i, j).value for i, j in order], abs=1e-12)


def test_sweep_region_map_small():
    cells = sweep_region_map(5)
    assert len(cells) == 25
    text = sweep_csv_text(cells)
    lines = text.splitlines()
    assert lines[0] == "alpha,beta,gamma,P_AB,P_BA,P_AC,P_CA,P_BC,P_CB,category"
    assert len(lines) == 26
    assert lines[-1].endswith(",invalid")
    assert sweep_csv_text(sweep_region_map(5, workers=2)) == text
    with pytest.raises(ValueError):
        sweep_region_map(0)


def test_w_vector_oracle_agrees():
    v = w_vector(0.2, 0.4, math.sqrt(0.8))
    np.testing.assert_allclose(w_like_state((0.2, 0.4, math.sqrt(0.8))).amplitudes, v)
