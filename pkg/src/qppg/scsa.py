"""Schrodinger-operator signal decomposition (SCSA core).

A non-negative 1-D signal y acts as an attractive potential in the
semi-classical operator  -h^2 d^2/dt^2 - y(t).  Its negative eigenvalues
lambda_n = -kappa_n^2 and L2-normalized eigenfunctions psi_n yield
non-negative "Schrodinger components" 4*h*kappa_n*psi_n^2 whose sum
reconstructs the signal; smaller h produces more bound states and a finer
reconstruction.

Discretization: three-point central difference for the second derivative
with Dirichlet (zero) boundaries on the sampling grid dt = 1/fs, giving a
symmetric tridiagonal operator solved by the implicit-QL kernels in
:mod:`qppg.eigen`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eigen import EigenSolverNoConvergence, tridiag_eigh  # noqa: F401  (re-export)


class NonPositiveH(ValueError):
    """Semi-classical parameter must be strictly positive."""


class SignalTooShort(ValueError):
    """At least two samples are needed to discretize the operator."""


class InsufficientSpectrum(RuntimeError):
    """Fewer negative eigenvalues than the requested decomposition depth.

    Signals that h is too large for the requested depth; carries the number
    of bound states actually found.
    """

    def __init__(self, found: int, requested: int):
        self.found = found
        self.requested = requested
        super().__init__(f"found {found} negative eigenvalues, requested {requested}")


@dataclass(frozen=True)
class Signal:
    """Sampled 1-D waveform with its sampling rate in Hz."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if not (self.fs > 0):
            raise ValueError("fs must be > 0")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dt(self) -> float:
        return 1.0 / self.fs


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal operator stored as diagonal + off-diagonal."""

    diag: np.ndarray
    offdiag: np.ndarray

    def dense(self) -> np.ndarray:
        n = self.diag.shape[0]
        H = np.zeros((n, n))
        H[np.arange(n), np.arange(n)] = self.diag
        idx = np.arange(n - 1)
        H[idx, idx + 1] = self.offdiag
        H[idx + 1, idx] = self.offdiag
        return H


@dataclass(frozen=True)
class SchrodingerSpectrum:
    """Negative part of the operator spectrum at a given h.

    kappas are sqrt(-lambda) sorted descending (most-bound state first;
    equal kappas keep ascending-lambda order). eigenfunctions holds one row
    per state, normalized so that sum(psi^2) * dt == 1.
    """

    h: float
    kappas: np.ndarray
    eigenfunctions: np.ndarray
    dt: float

    @property
    def n_states(self) -> int:
        return self.kappas.shape[0]


@dataclass(frozen=True)
class ComponentStack:
    """Truncated stack of Schrodinger components and their row-sum.

    Row n is 4*h*kappa_n*psi_n^2 (entrywise >= 0). ``reconstruction`` is
    exactly ``components.sum(axis=0)`` -- the same summation expression is
    the contract for anyone re-deriving it.
    """

    components: np.ndarray
    h: float
    reconstruction: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "reconstruction", self.components.sum(axis=0))


def build_operator(signal: Signal, h: float) -> TridiagonalOperator:
    """Assemble -h^2 D2 - diag(y) on the signal grid.

    Diagonal entries are 2*h^2/dt^2 - y[i], off-diagonals -h^2/dt^2
    (central difference with Dirichlet boundaries). The kinetic part is
    positive semidefinite, so no eigenvalue can lie below -max(y).
    """
    if not (h > 0):
        raise NonPositiveH(f"h must be > 0, got {h}")
    y = signal.samples
    if y.shape[0] < 2:
        raise SignalTooShort(f"need at least 2 samples, got {y.shape[0]}")
    dt = signal.dt
    k = h * h / (dt * dt)
    diag = 2.0 * k - y
    offdiag = np.full(y.shape[0] - 1, -k)
    return TridiagonalOperator(diag=diag, offdiag=offdiag)


def solve_negative_spectrum(H: TridiagonalOperator, h: float, dt: float) -> SchrodingerSpectrum:
    """Extract all bound states (lambda < 0) of a tridiagonal operator.

    kappa_n = sqrt(-lambda_n); eigenfunction rows are renormalized to the
    dt-weighted discrete L2 norm. The returned spectrum may be empty.
    """
    w, z = tridiag_eigh(H.diag, H.offdiag, vectors=True)
    neg = w < 0.0
    lam = w[neg]  # ascending, so kappas come out descending
    kappas = np.sqrt(-lam)
    psi = z[neg]
    if psi.shape[0]:
        norms = np.sqrt(np.sum(psi * psi, axis=1) * dt)
        psi = psi / norms[:, None]
    return SchrodingerSpectrum(h=h, kappas=kappas, eigenfunctions=psi, dt=dt)


def count_bound_states(signal: Signal, h: float) -> int:
    """Number of negative eigenvalues at h (eigenvalues-only fast path)."""
    H = build_operator(signal, h)
    w, _ = tridiag_eigh(H.diag, H.offdiag, vectors=False)
    return int(np.sum(w < 0.0))


def scsa_reconstruction(h: float, signal: Signal, n_h: int) -> ComponentStack:
    """Decompose ``signal`` into its first ``n_h`` Schrodinger components.

    Builds the operator at h, solves the spectrum, and keeps the n_h
    most-bound components (descending kappa); their row-sum is the
    reconstructed signal.

    Raises InsufficientSpectrum when fewer than n_h bound states exist.
    The cheap eigenvalues-only kernel screens that case first; the count
    from the full solve is still checked (both kernels apply the same
    rotation sequence, so the eigenvalues agree bitwise).
    """
    if not (h > 0):
        raise NonPositiveH(f"h must be > 0, got {h}")
    if n_h < 1:
        raise ValueError(f"n_h must be >= 1, got {n_h}")
    found = count_bound_states(signal, h)
    if found < n_h:
        raise InsufficientSpectrum(found, n_h)
    H = build_operator(signal, h)
    spectrum = solve_negative_spectrum(H, h, signal.dt)
    if spectrum.n_states < n_h:
        raise InsufficientSpectrum(spectrum.n_states, n_h)
    kappas = spectrum.kappas[:n_h]
    psi = spectrum.eigenfunctions[:n_h]
    components = 4.0 * h * kappas[:, None] * (psi * psi)
    return ComponentStack(components=components, h=h)
