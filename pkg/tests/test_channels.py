import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from closed_forms import six_vertex_closed_form_w, six_vertex_closed_form_Z
from maglab.channels import (
    SIX_VERTEX_ARCS,
    SIX_VERTEX_ARCS_SWAPPED,
    Channel,
    ChannelError,
    ConvergenceError,
    MurogaError,
    arc_sizes,
    binary_entropy_bits,
    bsc,
    bsc_for_capacity,
    capacity_blahut_arimoto,
    capacity_muroga,
    channel_network,
    exp_capacity,
    factor_network,
    six_vertex_digraph,
    six_vertex_network,
    muroga_coweighting_check,
    mutual_information,
    row_entropies,
)
from maglab.digraph import Digraph
from maglab.magnitude import magnitude, weighting
from maglab.matrix_cat import CompositionError


def random_channel(rng, r, c):
    W = rng.random((r, c)) ** 3
    return Channel(W / W.sum(axis=1, keepdims=True))


def test_channel_validation_and_json():
    with pytest.raises(ChannelError):
        Channel([[0.5, 0.6]])
    with pytest.raises(ChannelError):
        Channel([[1.5, -0.5]])
    with pytest.raises(ChannelError):
        Channel(np.zeros((0, 2)))
    ch = bsc(0.2)
    assert Channel.from_dict(ch.to_dict()).W.tolist() == ch.W.tolist()
    with pytest.raises(ValueError):
        ch.W[0, 0] = 1.0
    assert (ch @ bsc(0.1)).shape == (4, 4)


def test_capacity_examples():
    res = capacity_blahut_arimoto(Channel(np.eye(2)))
    assert math.isclose(res.capacity, math.log(2), abs_tol=1e-9)
    assert np.allclose(res.input_dist, [0.5, 0.5])
    assert capacity_blahut_arimoto(bsc(0.5)).capacity == pytest.approx(0.0, abs=1e-9)
    # analytic: log 2 - H(0.1) nats
    h = -(0.1 * math.log(0.1) + 0.9 * math.log(0.9))
    r = capacity_blahut_arimoto(bsc(0.1))
    assert abs(r.capacity - (math.log(2) - h)) < 1e-9
    assert abs(r.bits - 0.5310044064107188) < 1e-9
    for n in (3, 5, 8):
        assert abs(capacity_blahut_arimoto(Channel(np.eye(n))).capacity - math.log(n)) < 1e-9


def test_blahut_arimoto_bracket_and_errors():
    rng = np.random.default_rng(0)
    ch = random_channel(rng, 4, 3)
    r = capacity_blahut_arimoto(ch, tol=1e-10)
    assert abs(r.input_dist.sum() - 1) < 1e-10 and np.all(r.input_dist >= 0)
    # the returned capacity is achieved by the returned distribution
    assert abs(mutual_information(r.input_dist, ch.W) - r.capacity) < 1e-9
    # and no other input distribution does better
    for _ in range(200):
        p = rng.dirichlet(np.ones(4))
        assert mutual_information(p, ch.W) <= r.capacity + 1e-9
    with pytest.raises(ConvergenceError) as info:
        capacity_blahut_arimoto(ch, tol=1e-15, max_iter=2)
    assert info.value.last.iterations == 2
    with pytest.raises(ValueError):
        capacity_blahut_arimoto(ch, tol=0)


def test_row_entropies_zero_convention():
    assert row_entropies(np.eye(3)).tolist() == [0.0, 0.0, 0.0]
    assert math.isclose(row_entropies([[0.5, 0.5]])[0], math.log(2))


def test_muroga_examples():
    r = capacity_muroga(Channel(np.eye(2)))
    assert math.isclose(r.capacity, math.log(2)) and np.allclose(r.input_dist, [0.5, 0.5])
    h = -(0.1 * math.log(0.1) + 0.9 * math.log(0.9))
    assert abs(capacity_muroga(bsc(0.1)).capacity - (math.log(2) - h)) < 1e-9
    with pytest.raises(MurogaError):
        capacity_muroga(bsc(0.5))
    with pytest.raises(MurogaError):
        capacity_muroga(Channel(np.full((2, 3), 1 / 3)))


def test_muroga_agrees_with_blahut_arimoto():
    rng = np.random.default_rng(1)
    agreed = 0
    while agreed < 50:
        ch = random_channel(rng, 3, 3)
        try:
            m = capacity_muroga(ch)
        except MurogaError:
            continue
        b = capacity_blahut_arimoto(ch)
        assert abs(m.capacity - b.capacity) <= 1e-6
        assert np.allclose(m.input_dist.sum(), 1)
        agreed += 1


def test_muroga_coweighting():
    rep = muroga_coweighting_check(Channel(np.eye(3)))
    assert np.allclose(rep.Z, np.eye(3)) and np.allclose(rep.v, 1)
    rng = np.random.default_rng(2)
    checked = 0
    while checked < 20:
        ch = random_channel(rng, 3, 3)
        with np.errstate(over="ignore", invalid="ignore"):
            rep = muroga_coweighting_check(ch)
        if not np.all(rep.v > 0):
            continue
        checked += 1
        assert rep.residual <= 1e-10
        assert np.allclose(rep.v @ rep.Z, 1, atol=1e-10)
        # Z = exp(-d) entrywise
        assert np.allclose(np.exp(-rep.pseudo_distance), rep.Z, rtol=1e-10)


def test_good_channel_pseudo_distance():
    rep = muroga_coweighting_check(bsc(0.01))
    d = rep.pseudo_distance
    assert rep.diagonal_negative
    # off-diagonal entries dominate: d is roughly a constant times (1 - identity)
    assert abs(d[0, 1] - d[1, 0]) < 1e-12
    assert abs(d[0, 0]) < 0.02 * d[0, 1]


def test_bsc_for_capacity():
    for c in (1.0, 1.3, 1.7, 2.0):
        ch = bsc_for_capacity(c)
        assert abs(exp_capacity(ch) - c) < 1e-9
        assert abs(1 - binary_entropy_bits(ch.W[0, 1]) - math.log2(c)) < 1e-12
    with pytest.raises(ChannelError):
        bsc_for_capacity(2.5)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_exp_capacity_is_multiplicative(seed):
    rng = np.random.default_rng(seed)
    A = random_channel(rng, 2, 2)
    B = random_channel(rng, 2, 3)

    def ec(ch):
        return math.exp(capacity_blahut_arimoto(ch, tol=1e-9).capacity)

    assert abs(ec(A @ B) - ec(A) * ec(B)) <= 1e-6


def test_six_vertex_network_matches_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(10):
        c = rng.uniform(1, 2, 5)
        net = six_vertex_network(c)
        assert np.max(np.abs(net.sizes.Z - six_vertex_closed_form_Z(c))) < 1e-9
        assert np.max(np.abs(weighting(net.sizes.Z) - six_vertex_closed_form_w(c))) < 1e-6
    net = six_vertex_network([1, 1, 1, 1, 1])
    assert np.allclose(weighting(net.sizes.Z), [1, 1, -1, -1, 1, 1])
    assert math.isclose(magnitude(net.sizes.Z), 2.0, abs_tol=1e-9)


def test_six_vertex_closed_form_is_the_symbolic_solution():
    c = sympy.symbols("c1:6")
    c1, c2, c3, c4, c5 = c
    Z = sympy.Matrix(
        [
            [1, 0, c1 * c3, c1, c1 * c3 * c4, c1 * c3 * c5],
            [0, 1, c2 * c3, c2, c2 * c3 * c4, c2 * c3 * c5],
            [0, 0, 1, 0, c4, c5],
            [0, 0, 0, 1, c3 * c4, c3 * c5],
            [0, 0, 0, 0, 1, 0],
            [0, 0, 0, 0, 0, 1],
        ]
    )
    w = Z.LUsolve(sympy.ones(6, 1))
    ref = six_vertex_closed_form_w(c)
    assert all(sympy.expand(w[i] - ref[i]) == 0 for i in range(6))


def test_six_vertex_swap_symmetrizes_w3_w4():
    c = sympy.symbols("c1:6")
    c3, c4, c5 = c[2], c[3], c[4]

    def out_weights(arcs):
        sizes = arc_sizes(arcs, c)
        return (1 - sizes[(3, 5)] - sizes[(3, 6)], 1 - sizes[(4, 5)] - sizes[(4, 6)])

    w3, w4 = out_weights(SIX_VERTEX_ARCS)
    assert sympy.expand(w3 - (1 - c4 - c5)) == 0 and sympy.expand(w4 - (1 - c3 * c4 - c3 * c5)) == 0
    # exchanging c4 and c5 does not map w3 to w4 here
    assert sympy.expand(w3.subs({c4: c5, c5: c4}, simultaneous=True) - w4) != 0
    s3, s4 = out_weights(SIX_VERTEX_ARCS_SWAPPED)
    assert sympy.expand(s3.subs({c4: c5, c5: c4}, simultaneous=True) - s4) == 0


def test_six_vertex_swap_breaks_path_independence():
    factors = {i: bsc_for_capacity(x) for i, x in zip(range(1, 6), (1.2, 1.3, 1.4, 1.5, 1.6))}
    factor_network(six_vertex_digraph(), SIX_VERTEX_ARCS, factors)
    with pytest.raises(CompositionError):
        factor_network(six_vertex_digraph(), SIX_VERTEX_ARCS_SWAPPED, factors)


def test_channel_network_on_a_path():
    D = Digraph([1, 2, 3], [(1, 2), (2, 3)])
    A, B = bsc(0.1), bsc(0.2)
    net = channel_network(D, {(1, 2): A, (2, 3): B})
    assert np.allclose(net.hom(1, 3), np.kron(A.W, B.W))
    Z = net.sizes.Z
    assert math.isclose(Z[0, 2], Z[0, 1] * Z[1, 2], rel_tol=1e-9)
    with pytest.raises(ChannelError):
        channel_network(D, {(1, 3): A})
    with pytest.raises(ValueError):
        channel_network(Digraph([1, 2], [(1, 2), (2, 1)]), {(1, 2): A, (2, 1): A})
