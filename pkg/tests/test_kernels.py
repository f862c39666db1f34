from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from argmaxlab.errors import ConfigurationError, DomainError, KernelInvalidError
from argmaxlab.kernels import (DriftSpec, KernelSpec, check_monotone_in_first_arg,
                               kernel_cross, kernel_eval, kernel_matrix,
                               validate_anchor_conditions)
from argmaxlab.paths import Grid


# closed-form examples --------------------------------------------------------

def test_fbm_half_is_min():
    assert kernel_eval(KernelSpec.fbm(0.5), 0.3, 0.7) == pytest.approx(0.3, abs=1e-15)


def test_sheet_with_frontier_example():
    spec = KernelSpec.sheet((1.0, 1.0))
    assert kernel_eval(spec, (0.2, 0.5), (0.4, 0.3)) == pytest.approx(0.56, abs=1e-15)


def test_bare_sheet_drops_frontier():
    spec = KernelSpec.sheet((1.0, 1.0), frontier=False)
    assert kernel_eval(spec, (0.2, 0.5), (0.4, 0.3)) == pytest.approx(0.06, abs=1e-15)


def test_ou_diagonal_value():
    spec = KernelSpec.ornstein_uhlenbeck(1.0, math.sqrt(2.0), T=2.0)
    # sigma^2 / (2 gamma) (1 - e^{-2 gamma t}) at t = 1
    assert kernel_eval(spec, 1.0, 1.0) == pytest.approx(1 - math.exp(-2.0), abs=1e-12)


def test_ou_matches_integral_form():
    g, s = 0.7, 1.3
    spec = KernelSpec.ornstein_uhlenbeck(g, s, T=3.0)
    u, v = 0.4, 2.1
    # Cov = sigma^2 e^{-g(u+v)} int_0^min e^{2 g r} dr
    ref = s * s * math.exp(-g * (u + v)) * (math.exp(2 * g * u) - 1) / (2 * g)
    assert kernel_eval(spec, u, v) == pytest.approx(ref, rel=1e-13)


def test_additive_anchor_values():
    spec = KernelSpec.additive(2)
    assert kernel_eval(spec, (1.0, 0.0), (0.0, 1.0)) == 0.0
    assert kernel_eval(spec, (1.0, 0.0), (1.0, 0.0)) == 1.0


def test_kernel_matrix_examples():
    np.testing.assert_array_equal(kernel_matrix(KernelSpec.brownian(), [0.5, 1.0]),
                                  [[0.5, 0.5], [0.5, 1.0]])
    a, b = 0.3, 0.8
    M = kernel_matrix(KernelSpec.fbm(1.0), [a, b])
    np.testing.assert_allclose(M, [[a * a, a * b], [a * b, b * b]], atol=1e-15)
    assert np.linalg.matrix_rank(M) == 1
    np.testing.assert_array_equal(kernel_matrix(KernelSpec.linear((2.0,)), [1.0, 2.0]),
                                  [[1.0, 2.0], [2.0, 4.0]])


def test_kernel_matrix_rejects_repeated_points():
    with pytest.raises(DomainError):
        kernel_matrix(KernelSpec.brownian(), [0.5, 0.5])


def test_out_of_domain_raises():
    with pytest.raises(DomainError):
        kernel_eval(KernelSpec.brownian(1.0), 1.5, 0.2)
    with pytest.raises(DomainError):
        kernel_eval(KernelSpec.brownian(1.0), -0.1, 0.2)
    with pytest.raises(DomainError):
        kernel_eval(KernelSpec.additive(2), (0.7, 0.6), (0.1, 0.1))


@pytest.mark.parametrize("kw", [
    dict(family="OrnsteinUhlenbeck", gamma=0.0, sigma=1.0),
    dict(family="OrnsteinUhlenbeck", gamma=1.0, sigma=-1.0),
    dict(family="FractionalBM", H=0.0),
    dict(family="FractionalBM", H=1.2),
    dict(family="AdditiveBM", stages=0),
    dict(family="BrownianMotion", horizon=(0.0,)),
    dict(family="Nope"),
])
def test_invalid_parameters_rejected(kw):
    with pytest.raises(ConfigurationError):
        KernelSpec(**kw)


def test_psd_violation_is_reported():
    # a parameterization that cannot be a covariance: fBm formula with H > 1
    spec = KernelSpec.fbm(0.9)
    object.__setattr__(spec, "H", 1.6)
    with pytest.raises(KernelInvalidError):
        kernel_matrix(spec, np.linspace(0.1, 1.0, 12))


def test_kernel_spec_round_trip():
    for spec in (KernelSpec.brownian(2.0), KernelSpec.ornstein_uhlenbeck(1.0, 2.0),
                 KernelSpec.fbm(0.3), KernelSpec.sheet((1.0, 2.0), frontier=False),
                 KernelSpec.linear((1.0, 3.0)), KernelSpec.additive(3)):
        assert KernelSpec.from_dict(spec.to_dict()) == spec


# monotone sections and anchor conditions ------------------------------------

def test_monotone_examples():
    grid = Grid.uniform(256)
    assert check_monotone_in_first_arg(KernelSpec.brownian(), 1.0, grid)
    assert check_monotone_in_first_arg(KernelSpec.fbm(0.3), 1.0, grid)
    rep = check_monotone_in_first_arg(lambda z, t: math.cos(z), 1.0, np.linspace(0, 3, 31))
    assert not rep
    assert rep.first_violation == (0.0, 0.1)


@pytest.mark.parametrize("H", [0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99])
def test_fbm_section_derivative_positive(H):
    # oracle: d/dz R(z, 1) = H (z^{2H-1} + (1-z)^{2H-1}) > 0 on (0, 1)
    z = np.linspace(1e-4, 1 - 1e-4, 2001)
    deriv = H * (z ** (2 * H - 1) + (1 - z) ** (2 * H - 1))
    assert np.all(deriv > 0)
    assert check_monotone_in_first_arg(KernelSpec.fbm(H), 1.0, Grid.uniform(2000))


def test_anchor_conditions_sheet():
    rep = validate_anchor_conditions(KernelSpec.sheet((1.0, 2.0)), [[1.0, 0.0], [0.0, 2.0]],
                                     Grid.product((8, 8), (1.0, 2.0)))
    assert rep.ok, rep.witnesses


def test_anchor_conditions_additive():
    rep = validate_anchor_conditions(KernelSpec.additive(2), [[1, 0], [0, 1]],
                                     Grid.simplex(2, 16))
    assert rep.ok
    np.testing.assert_array_equal(rep.anchor_covariance, np.eye(2))


def test_anchor_conditions_fbm_one_d():
    rep = validate_anchor_conditions(KernelSpec.fbm(0.3), [[1.0]], Grid.uniform(64))
    assert rep.ok
    assert rep.anchor_covariance.shape == (1, 1)


def test_anchor_conditions_report_failures():
    # bare sheet: R(z, e^1) = z_1 * 0 = 0, not increasing
    rep = validate_anchor_conditions(KernelSpec.sheet((1.0, 1.0), frontier=False),
                                     [[1.0, 0.0], [0.0, 1.0]], Grid.product((4, 4), (1, 1)))
    assert not rep.ok
    assert 1 in rep.failed() and 3 in rep.failed()
    # interior anchors of the sheet: R(z, t) depends on both coordinates
    rep = validate_anchor_conditions(KernelSpec.sheet((1.0, 1.0)), [[1.0, 0.5], [0.5, 1.0]],
                                     Grid.product((4, 4), (1, 1)))
    assert 2 in rep.failed()


# properties ------------------------------------------------------------------

def _random_spec(draw):
    fam = draw(st.sampled_from(["bm", "ou", "fbm", "sheet", "linear", "additive"]))
    if fam == "bm":
        return KernelSpec.brownian(draw(st.floats(0.5, 3.0)))
    if fam == "ou":
        return KernelSpec.ornstein_uhlenbeck(draw(st.floats(0.05, 5.0)),
                                             draw(st.floats(0.1, 3.0)), 2.0)
    if fam == "fbm":
        return KernelSpec.fbm(draw(st.floats(0.05, 1.0)))
    if fam == "sheet":
        return KernelSpec.sheet((1.0, draw(st.floats(0.5, 2.0))), draw(st.booleans()))
    if fam == "linear":
        return KernelSpec.linear((1.0, draw(st.floats(0.5, 2.0))))
    return KernelSpec.additive(draw(st.integers(1, 3)))


def _random_points(spec, rng, k):
    if spec.family == "AdditiveBM":
        x = rng.dirichlet(np.ones(spec.dim + 1), size=k)[:, :-1]
        return x
    return rng.uniform(0, 1, size=(k, spec.dim)) * np.asarray(spec.horizon)


@st.composite
def spec_and_seed(draw):
    return _random_spec(draw), draw(st.integers(0, 2 ** 32 - 1))


@given(spec_and_seed())
def test_symmetry_and_nonnegative_diagonal(arg):
    spec, seed = arg
    rng = np.random.default_rng(seed)
    U = _random_points(spec, rng, 200)
    V = _random_points(spec, rng, 50)
    A = kernel_cross(spec, U, V)
    B = kernel_cross(spec, V, U)
    assert np.array_equal(A, B.T)
    assert np.all(np.einsum("ii->i", kernel_cross(spec, U, U)) >= 0)


@given(spec_and_seed())
def test_kernel_matrix_psd_and_symmetric(arg):
    spec, seed = arg
    rng = np.random.default_rng(seed)
    P = _random_points(spec, rng, int(rng.integers(2, 257)))
    M = kernel_matrix(spec, P)
    assert np.array_equal(M, M.T)
    ev = np.linalg.eigvalsh(M)
    assert ev.min() >= -1e-8 * ev.max()


def test_ten_thousand_pairs_symmetric():
    rng = np.random.default_rng(0)
    for spec in (KernelSpec.brownian(), KernelSpec.ornstein_uhlenbeck(1.0, 1.0),
                 KernelSpec.fbm(0.3), KernelSpec.sheet((1.0, 1.0)),
                 KernelSpec.linear((1.0, 1.0)), KernelSpec.additive(2)):
        U = _random_points(spec, rng, 10_000)
        V = _random_points(spec, rng, 10_000)
        for i in range(0, 10_000, 2000):
            a = kernel_cross(spec, U[i:i + 2000], V[i:i + 2000])
            b = kernel_cross(spec, V[i:i + 2000], U[i:i + 2000])
            assert np.array_equal(np.diag(a), np.diag(b))


def test_fbm_reductions():
    P = np.linspace(0.01, 1.0, 40)
    np.testing.assert_allclose(kernel_matrix(KernelSpec.fbm(0.5), P),
                               kernel_matrix(KernelSpec.brownian(), P), atol=1e-15, rtol=0)
    prev = np.inf
    for H in (0.9, 0.99, 0.999):
        err = np.abs(kernel_matrix(KernelSpec.fbm(H), P, check_psd=False)
                     - np.outer(P, P)).max()
        assert err < prev
        prev = err
    assert prev < 5e-3


def test_additive_anchor_identity_random_points():
    rng = np.random.default_rng(1)
    for n in (1, 2, 3, 4):
        spec = KernelSpec.additive(n)
        U = rng.dirichlet(np.ones(n + 1), size=1000)[:, :-1]
        R = kernel_cross(spec, U, np.eye(n))
        np.testing.assert_allclose(R, U, atol=1e-15, rtol=0)


def test_additive_kernel_matches_monte_carlo():
    # oracle: X(u) built directly from independent Brownian increments
    rng = np.random.default_rng(5)
    n, N = 2, 200_000
    u = np.array([0.3, 0.2])
    v = np.array([0.1, 0.5])

    def field(w, brown):
        s = np.concatenate([[0.0], np.cumsum(w), [1.0]])
        return sum(brown[j](s[j], s[j + 1]) for j in range(n + 1))

    # piecewise increments on the common refinement of both partitions
    cuts = np.unique(np.concatenate([[0, 1], np.cumsum(u), np.cumsum(v)]))
    incs = rng.standard_normal((n + 1, N, cuts.size - 1)) * np.sqrt(np.diff(cuts))

    def brown_for(j):
        def inc(a, b):
            sel = (cuts[:-1] >= a - 1e-12) & (cuts[1:] <= b + 1e-12)
            return incs[j][:, sel].sum(axis=1)
        return inc

    brown = [brown_for(j) for j in range(n + 1)]
    xu, xv = field(u, brown), field(v, brown)
    est = np.mean(xu * xv)
    se = np.std(xu * xv) / np.sqrt(N)
    assert abs(est - kernel_eval(KernelSpec.additive(2), u, v)) < 5 * se


# drifts ----------------------------------------------------------------------

def test_drift_forms():
    pts = np.linspace(0, 1, 5)[:, None]
    np.testing.assert_array_equal(DriftSpec().evaluate(pts), 0.0)
    np.testing.assert_array_equal(DriftSpec("linear", slope=(2.0,)).evaluate(pts),
                                  2 * pts[:, 0])
    step = DriftSpec("step", at=0.5, height=1.0)
    assert step.continuity == "cadlag"
    np.testing.assert_array_equal(step.evaluate(pts), [0, 0, 1, 1, 1])
    tab = DriftSpec("tabulated", points=pts[:, 0], table=np.arange(5.0))
    np.testing.assert_array_equal(tab.evaluate(pts[::-1]), np.arange(5.0)[::-1])
    with pytest.raises(DomainError):
        tab.evaluate([[0.3]])
    with pytest.raises(ConfigurationError):
        DriftSpec("tabulated", points=pts[:, 0], table=[1.0, np.nan, 0, 0, 0])
    for d in (step, tab, DriftSpec("constant", value=2.0)):
        again = DriftSpec.from_dict(d.to_dict())
        np.testing.assert_array_equal(again.evaluate(pts), d.evaluate(pts))


def test_fbm_kernel_ignores_roundoff_between_equal_points():
    # 49/63 and 49 * (1/63) differ by one ulp; small H magnifies the gap
    spec = KernelSpec.fbm(0.05)
    u, v = 49 / 63, 49 * (1 / 63)
    assert u != v
    R = kernel_cross(spec, np.array([[u]]), np.array([[v], [u]]))
    assert R[0, 0] == R[0, 1] == pytest.approx(u ** 0.1, rel=1e-15)
