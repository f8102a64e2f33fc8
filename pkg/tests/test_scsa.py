import numpy as np
import pytest

from qppg.scsa import (
    InsufficientSpectrum,
    NonPositiveH,
    Signal,
    SignalTooShort,
    build_operator,
    count_bound_states,
    scsa_reconstruction,
    solve_negative_spectrum,
)

from conftest import pulse_train
from oracles import dense_from_tridiag, jacobi_eigvalsh


def sech2_signal(depth=2.0, half_width=15.0, dx=0.05):
    x = np.arange(-half_width, half_width + dx / 2, dx)
    return Signal(samples=depth / np.cosh(x) ** 2, fs=1.0 / dx), x


def test_zero_potential_operator_entries():
    sig = Signal(samples=np.zeros(3), fs=1.0)
    H = build_operator(sig, h=1.0)
    assert np.array_equal(H.diag, [2.0, 2.0, 2.0])
    assert np.array_equal(H.offdiag, [-1.0, -1.0])


def test_operator_symmetry_exact():
    sig = Signal(samples=pulse_train(64), fs=100.0)
    dense = build_operator(sig, h=0.3).dense()
    assert np.array_equal(dense, dense.T)


def test_constant_potential_spectral_floor():
    c = 0.8
    sig = Signal(samples=np.full(128, c), fs=10.0)
    H = build_operator(sig, h=0.2)
    w = jacobi_eigvalsh(dense_from_tridiag(H.diag, H.offdiag))
    assert w[0] >= -c - 1e-9


def test_operator_argument_validation():
    sig = Signal(samples=np.zeros(8), fs=1.0)
    with pytest.raises(NonPositiveH):
        build_operator(sig, h=0.0)
    with pytest.raises(SignalTooShort):
        build_operator(Signal(samples=np.zeros(1), fs=1.0), h=1.0)


def test_sech2_single_bound_state():
    # 2*sech^2 supports exactly one bound state at kappa = 1
    sig, _ = sech2_signal(depth=2.0)
    spectrum = solve_negative_spectrum(build_operator(sig, 1.0), 1.0, sig.dt)
    assert spectrum.n_states == 1
    assert abs(spectrum.kappas[0] - 1.0) <= 1e-3


def test_sech6_two_bound_states():
    # 6*sech^2 supports kappa = 2 and kappa = 1
    sig, _ = sech2_signal(depth=6.0)
    spectrum = solve_negative_spectrum(build_operator(sig, 1.0), 1.0, sig.dt)
    assert spectrum.n_states == 2
    assert abs(spectrum.kappas[0] - 2.0) <= 1e-3
    assert abs(spectrum.kappas[1] - 1.0) <= 1e-3


def test_free_particle_has_no_bound_states():
    sig = Signal(samples=np.zeros(200), fs=50.0)
    spectrum = solve_negative_spectrum(build_operator(sig, 0.5), 0.5, sig.dt)
    assert spectrum.n_states == 0
    assert spectrum.eigenfunctions.shape == (0, 200)


def test_random_potential_matches_dense_oracle():
    rng = np.random.default_rng(42)
    sig = Signal(samples=rng.uniform(0, 1, 64), fs=8.0)
    H = build_operator(sig, h=0.5)
    spectrum = solve_negative_spectrum(H, 0.5, sig.dt)
    ref = jacobi_eigvalsh(dense_from_tridiag(H.diag, H.offdiag))
    ref_neg = ref[ref < 0]
    assert spectrum.n_states == ref_neg.size
    assert np.max(np.abs(np.sort(-spectrum.kappas**2) - ref_neg)) < 1e-8


def test_eigenfunction_normalization_dt_weighted():
    sig = Signal(samples=pulse_train(300), fs=100.0)
    spectrum = solve_negative_spectrum(build_operator(sig, 0.05), 0.05, sig.dt)
    assert spectrum.n_states > 0
    norms = np.sum(spectrum.eigenfunctions**2, axis=1) * sig.dt
    assert np.max(np.abs(norms - 1.0)) <= 1e-8


def test_kappa_floor_and_descending_order():
    sig = Signal(samples=pulse_train(400), fs=100.0)
    spectrum = solve_negative_spectrum(build_operator(sig, 0.03), 0.03, sig.dt)
    assert np.all(spectrum.kappas > 0)
    assert np.all(np.diff(spectrum.kappas) <= 0)
    assert np.all(spectrum.kappas**2 <= sig.samples.max() + 1e-9)


def test_semiclassical_counting_grows_as_h_shrinks():
    sig, _ = sech2_signal(depth=6.0)
    assert count_bound_states(sig, 0.5) >= count_bound_states(sig, 1.0)


def test_reconstruction_of_sech2():
    sig, x = sech2_signal(depth=2.0)
    stack = scsa_reconstruction(1.0, sig, 1)
    n = len(sig)
    lo, hi = int(0.1 * n), int(0.9 * n)
    rmse = np.sqrt(np.mean((stack.reconstruction[lo:hi] - sig.samples[lo:hi]) ** 2))
    assert rmse <= 1e-2


def test_zero_signal_insufficient_spectrum():
    sig = Signal(samples=np.zeros(100), fs=100.0)
    with pytest.raises(InsufficientSpectrum) as exc:
        scsa_reconstruction(1.0, sig, 1)
    assert exc.value.found == 0
    assert exc.value.requested == 1


def test_deeper_truncation_reconstructs_better(ppg_like):
    sig = Signal(samples=ppg_like, fs=100.0)
    h = 0.02
    deep = scsa_reconstruction(h, sig, 20)
    shallow = scsa_reconstruction(h, sig, 5)
    err_deep = np.linalg.norm(sig.samples - deep.reconstruction)
    err_shallow = np.linalg.norm(sig.samples - shallow.reconstruction)
    assert err_deep < err_shallow


def test_components_nonnegative_and_rowsum_exact(ppg_like):
    sig = Signal(samples=ppg_like, fs=100.0)
    stack = scsa_reconstruction(0.02, sig, 10)
    assert stack.components.shape == (10, 500)
    assert np.all(stack.components >= 0)
    assert np.array_equal(stack.reconstruction, stack.components.sum(axis=0))


def test_insufficient_spectrum_reports_found_count(ppg_like):
    sig = Signal(samples=ppg_like, fs=100.0)
    with pytest.raises(InsufficientSpectrum) as exc:
        scsa_reconstruction(4.0, sig, 20)
    assert exc.value.requested == 20
    assert exc.value.found == count_bound_states(sig, 4.0)


def test_signal_validation():
    with pytest.raises(ValueError):
        Signal(samples=np.array([0.0, np.nan]), fs=1.0)
    with pytest.raises(ValueError):
        Signal(samples=np.zeros(4), fs=0.0)
