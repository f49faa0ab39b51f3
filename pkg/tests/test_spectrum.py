import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isicap import ChannelSpec, build_Hc, compute_profile, eval_f_sq, gram_eigenvalues, gram_matrix
from isicap.errors import SpectrumSingular
from isicap.spectrum import banded_from_taps, f_sq_table, simpson_mean

from reference_values import ALPHA_EXAMPLE, BETA_EXAMPLE, J_EXAMPLE

PROFILE_ABS_TOL = 1e-10
GRAM_MATCH_TOL = 1e-9


def channel_specs(max_k=4):
    """Random channels whose centre taps are not all tiny."""

    def build(k, draw_c, draw_r):
        return ChannelSpec(k=k, c=tuple(draw_c), r=tuple(draw_r))

    return st.integers(min_value=0, max_value=max_k).flatmap(
        lambda k: st.builds(
            build,
            st.just(k),
            st.lists(
                st.floats(-2.0, 2.0), min_size=k + 1, max_size=k + 1
            ).filter(lambda c: max(abs(v) for v in c) >= 0.1),
            st.lists(st.floats(0.0, 1.0), min_size=k + 1, max_size=k + 1),
        )
    )


def test_example_profile_constants(example_profile):
    assert example_profile.alpha == pytest.approx(ALPHA_EXAMPLE, abs=PROFILE_ABS_TOL)
    assert example_profile.beta == BETA_EXAMPLE  # grid hits the maximizer exactly
    assert example_profile.J == pytest.approx(J_EXAMPLE, abs=PROFILE_ABS_TOL)
    assert example_profile.r_s == pytest.approx(3e-3)
    assert example_profile.norm_r_sq == pytest.approx(3e-6)


def test_flat_channel_profile():
    prof = compute_profile(ChannelSpec(k=0, c=(1.0,), r=(0.5,)))
    assert prof.alpha == pytest.approx(1.0, abs=1e-14)
    assert prof.beta == pytest.approx(1.0, abs=1e-14)
    assert prof.J == pytest.approx(1.0, abs=1e-14)


def test_profile_is_cached(example_spec):
    assert compute_profile(example_spec) is compute_profile(example_spec)


def test_singular_spectrum_raises():
    # 1 - z vanishes at zero frequency
    with pytest.raises(SpectrumSingular):
        compute_profile(ChannelSpec(k=1, c=(1.0, -1.0), r=(0.0, 0.0)))


def test_grid_size_validation(example_spec):
    with pytest.raises(ValueError):
        f_sq_table(example_spec, 100)
    with pytest.raises(ValueError):
        f_sq_table(example_spec, 257)


def test_channel_spec_validation():
    with pytest.raises(ValueError):
        ChannelSpec(k=-1, c=(), r=())
    with pytest.raises(ValueError):
        ChannelSpec(k=1, c=(1.0,), r=(0.0, 0.0))
    with pytest.raises(ValueError):
        ChannelSpec(k=0, c=(1.0,), r=(-0.1,))
    with pytest.raises(ValueError):
        ChannelSpec(k=1, c=(0.0, 0.0), r=(0.0, 0.0))


def test_channel_spec_json_roundtrip(example_spec):
    assert ChannelSpec.from_json(example_spec.to_json()) == example_spec


def test_eval_f_sq_scalar_matches_vector(example_spec):
    omegas = np.linspace(-1.0, 7.0, 17)
    vec = eval_f_sq(example_spec, omegas)
    for w, expected in zip(omegas, vec):
        assert eval_f_sq(example_spec, float(w)) == pytest.approx(expected, rel=1e-14)


def test_eval_f_sq_closed_form(example_spec):
    # |1 + 0.5 z + 0.5 z^2|^2 on the circle reduces to a cosine polynomial
    for w in (0.0, 0.3, 1.0, math.pi, 5.0):
        u = math.cos(w)
        expected = 2.0 * u * u + 1.5 * u + 0.5
        assert eval_f_sq(example_spec, w) == pytest.approx(expected, rel=1e-12)


def test_simpson_mean_constant(example_spec):
    table = f_sq_table(example_spec, 512)
    assert simpson_mean(np.ones_like(table)) == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(channel_specs())
def test_profile_orders_extremes(spec):
    try:
        prof = compute_profile(spec)
    except SpectrumSingular:
        return
    assert 0.0 < prof.alpha <= prof.beta
    # J lies between the extreme values of the inverse spectrum
    assert 1.0 / prof.beta ** 2 - 1e-9 <= prof.J <= 1.0 / prof.alpha ** 2 + 1e-9


def test_build_Hc_structure(example_spec):
    n = 9
    H = build_Hc(example_spec, n)
    assert H.entries.shape == (n + example_spec.k, n)
    for i in range(H.m):
        for j in range(H.n):
            lag = i - j
            expected = example_spec.c[lag] if 0 <= lag <= example_spec.k else 0.0
            assert H.entries[i, j] == expected


def test_banded_from_taps_validates_shape():
    with pytest.raises(ValueError):
        banded_from_taps(np.zeros((4, 2)), n=4, k=1)  # needs n + k rows


def test_gram_matches_product(example_spec):
    n = 17
    Hc = build_Hc(example_spec, n).entries
    G = gram_matrix(example_spec, n)
    assert np.abs(G - Hc.T @ Hc).max() <= 1e-12


@settings(max_examples=25, deadline=None)
@given(channel_specs(max_k=3), st.integers(min_value=1, max_value=40))
def test_gram_eigenvalues_match_dense(spec, n):
    lam = gram_eigenvalues(spec, n)
    dense = np.linalg.eigvalsh(gram_matrix(spec, n))
    assert np.all(np.diff(lam) >= -1e-12)
    assert np.abs(lam - dense).max() <= GRAM_MATCH_TOL * max(1.0, dense[-1])


@settings(max_examples=25, deadline=None)
@given(channel_specs(max_k=3), st.integers(min_value=2, max_value=48))
def test_gram_eigenvalues_inside_spectrum_range(spec, n):
    try:
        prof = compute_profile(spec)
    except SpectrumSingular:
        return
    lam = gram_eigenvalues(spec, n)
    tol = 1e-8 * prof.beta ** 2
    assert lam[0] >= prof.alpha ** 2 - tol
    assert lam[-1] <= prof.beta ** 2 + tol
