from __future__ import annotations

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_model
from svarpg.filters import FiniteFilter, acs_via_sep, convolve, tilted_convolve
from svarpg.model import check_stability, parse_model
from svarpg.simulate import simulate
from svarpg.spectral import fourier, spectral_density

N_CASES = 200


def _filter_strategy(rows, cols, max_len=4):
    return st.integers(1, max_len).flatmap(
        lambda n: st.lists(
            st.lists(
                st.lists(st.floats(-1.0, 1.0), min_size=cols, max_size=cols),
                min_size=rows,
                max_size=rows,
            ),
            min_size=n,
            max_size=n,
        ).map(lambda v: FiniteFilter(start=0, values=np.asarray(v)))
    )


@settings(max_examples=N_CASES, deadline=None)
@given(a=_filter_strategy(2, 3), b=_filter_strategy(3, 2), c=_filter_strategy(2, 2))
def test_convolution_associative(a, b, c):
    left = convolve(convolve(a, b), c)
    right = convolve(a, convolve(b, c))
    assert left.start == right.start
    assert np.allclose(left.values, right.values, atol=1e-9)


@settings(max_examples=N_CASES, deadline=None)
@given(a=_filter_strategy(3, 3))
def test_unit_filter_neutral(a):
    left = convolve(FiniteFilter.unit(3), a)
    right = convolve(a, FiniteFilter.unit(3))
    assert np.allclose(left.values, a.values) and np.allclose(right.values, a.values)


@settings(max_examples=N_CASES, deadline=None)
@given(a=_filter_strategy(2, 3), b=_filter_strategy(3, 2))
def test_fourier_takes_convolution_to_product(a, b):
    lhs = fourier(convolve(a, b), 16).values
    rhs = np.einsum("wij,wjk->wik", fourier(a, 16).values, fourier(b, 16).values)
    assert np.abs(lhs - rhs).max() < 1e-10


@settings(max_examples=N_CASES, deadline=None)
@given(a=_filter_strategy(2, 3), b=_filter_strategy(3, 2))
def test_fourier_takes_tilted_convolution_to_conjugate_product(a, b):
    lhs = fourier(tilted_convolve(a, b), 16).values
    rhs = np.einsum("wij,wjk->wik", fourier(a, 16).values, np.conj(fourier(b, 16).values))
    assert np.abs(lhs - rhs).max() < 1e-10


@settings(max_examples=N_CASES, deadline=None)
@given(a=_filter_strategy(1, 1, max_len=5))
def test_scalar_tilted_self_product_symmetric(a):
    sym = tilted_convolve(a, a)
    vals = sym.scalar_values()
    assert np.allclose(vals, vals[::-1], atol=1e-12)


def _random_structure(rng):
    n_obs = int(rng.integers(1, 4))
    observed = tuple(f"P{i}" for i in range(n_obs))
    latents = ("H",) if rng.random() < 0.4 and n_obs > 1 else ()
    cross = []
    for i in range(n_obs):
        for j in range(i + 1, n_obs):
            if rng.random() < 0.6:
                cross.append((observed[i], observed[j]))
    for dst in observed:
        if latents and rng.random() < 0.7:
            cross.append(("H", dst))
    return observed, latents, tuple(cross)


def _random_stable(rng):
    observed, latents, cross = _random_structure(rng)
    return random_model(
        rng,
        observed,
        latents,
        cross,
        order=int(rng.integers(1, 4)),
        contemporaneous=bool(rng.random() < 0.3),
    )


def test_spectra_hermitian_psd_random_models():
    rng = np.random.default_rng(101)
    for _ in range(N_CASES):
        m = _random_stable(rng)
        s = spectral_density(m, 16)
        assert s.hermitian_defect() < 1e-10
        assert s.min_eigenvalue() > -1e-8


def test_acs_symmetry_psd_random_models():
    rng = np.random.default_rng(102)
    for _ in range(N_CASES):
        m = _random_stable(rng)
        acs = acs_via_sep(m, L_acs=5, L_filter=24)
        for tau in range(1, 4):
            assert np.allclose(acs.at(-tau), acs.at(tau).T)
        assert np.linalg.eigvalsh(acs.values[0]).min() > -1e-8


def test_seed_reproducibility_random_models():
    rng = np.random.default_rng(103)
    for i in range(N_CASES):
        m = _random_stable(rng)
        a = simulate(m, T=64, seed=i, burn_in=16)
        b = simulate(m, T=64, seed=i, burn_in=16)
        assert np.array_equal(a.values, b.values)


def test_parse_serialize_round_trip_random_models():
    rng = np.random.default_rng(104)
    for _ in range(N_CASES):
        m = _random_stable(rng)
        assert parse_model(m.to_json()) == m


def test_stability_check_deterministic_random_models():
    rng = np.random.default_rng(105)
    for _ in range(50):
        m = _random_stable(rng)
        assert check_stability(m, 64) == check_stability(m, 64)
