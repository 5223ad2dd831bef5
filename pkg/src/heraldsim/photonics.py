"""Dual-rail flying-photon Fock space: beam splitter, emission, loss.

The two flying channels are truncated harmonic oscillators with n_max
photons each (n_max >= 2: the doubly-excited qubit branch interferes into
a two-photon state, so at least |2> must exist).

Port/phase convention, pinned once and tested: the 50/50 beam splitter is
the exponential of -(3*pi/4) * (a^dag b - a b^dag) on the truncated space.
It maps, exactly,

    |00>                  -> |00>
    (|10>+|01>)/sqrt(2)   -> -|10>          (first rail = detector rail)
    (|10>-|01>)/sqrt(2)   -> +|01>          (second rail = cold load)
    |11>                  -> (|20>-|02>)/sqrt(2)   (two-photon interference)

The branch signs are what the generator actually produces; they are
unobservable downstream because the heralding measurement separates the
branches incoherently.  States of total photon number <= n_max are closed
under the truncated generator, so the truncation is exact for every state
the protocol produces.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .qmath import (
    DensityMatrix,
    ValidationError,
    apply_channel,
    basis_ket,
    matrix_exponential,
    tensor,
)


@dataclass(frozen=True)
class FockSpaceSpec:
    """Truncation of the two flying-photon rails."""

    n_max: int = 2
    rails: int = 2

    def __post_init__(self):
        if self.n_max < 2:
            raise ValidationError("n_max must be >= 2")
        if self.rails != 2:
            raise ValidationError("exactly two rails are modeled")

    @property
    def rail_dim(self) -> int:
        return self.n_max + 1


def annihilation(dim: int) -> np.ndarray:
    """Truncated annihilation operator a|n> = sqrt(n)|n-1>."""
    a = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        a[n - 1, n] = np.sqrt(n)
    return a


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=complex))


def beam_splitter_unitary(spec: FockSpaceSpec) -> np.ndarray:
    """50/50 beam splitter on the two-rail space, exp(-3pi/4 (a^dag b - a b^dag)).

    Unitary on the whole truncated space and block diagonal in total photon
    number; see module docstring for the pinned port mapping.
    """
    d = spec.rail_dim
    a = annihilation(d)
    eye = np.eye(d, dtype=complex)
    gen = np.kron(a.conj().T, eye) @ np.kron(eye, a) - np.kron(a, eye) @ np.kron(
        eye, a.conj().T
    )
    return matrix_exponential(-3.0 * np.pi / 4.0 * gen)


def emission_unitary(spec: FockSpaceSpec) -> np.ndarray:
    """Qubit-conditioned photon emission on (qubit x rail).

    Acts as |g,n> -> |g,n> and, for the excited qubit, swaps the rail's
    |0> and |1> levels (|2> untouched): on a vacuum rail this is exactly
    the ideal map |g0> -> |g0>, |e0> -> |e1>.  The conditional-swap
    completion fixes what "emitting into an occupied rail" means for the
    mid-protocol branches where a previous photon is still in flight on
    the load rail; the closed-form dark-count fidelity check pins this
    convention.
    """
    d = spec.rail_dim
    swap01 = np.eye(d, dtype=complex)
    swap01[0, 0] = swap01[1, 1] = 0.0
    swap01[0, 1] = swap01[1, 0] = 1.0
    u = np.zeros((2 * d, 2 * d), dtype=complex)
    u[:d, :d] = np.eye(d)
    u[d:, d:] = swap01
    return u


def entangle_qubit_with_photon(
    state: DensityMatrix, spec: FockSpaceSpec, rail: int = 0
) -> DensityMatrix:
    """Map alpha|g> + beta|e> onto alpha|g0> + beta|e1> (rail starts in vacuum).

    Accepts either a bare qubit (a fresh vacuum rail is appended) or an
    existing qubit x rail state, which is rejected unless the rail is in
    vacuum: the underlying physical operation is only defined from |0>.
    `rail` is a bookkeeping label (0 = first channel, 1 = second) carried
    by callers that track multiple rails.
    """
    if rail not in (0, 1):
        raise ValidationError("rail must be 0 or 1")
    d = spec.rail_dim
    if state.dims == (2,):
        vacuum = DensityMatrix((d,), np.outer(basis_ket(d, 0), basis_ket(d, 0)))
        joint = tensor(state, vacuum)
    elif state.dims == (2, d):
        pops = np.einsum("qnqm->nm", state.matrix.reshape(2, d, 2, d)).real
        if np.abs(pops[1:, 1:]).max() > 1e-12:
            raise ValidationError("photon rail is not in vacuum")
        joint = state
    else:
        raise ValidationError(
            f"expected a qubit or qubit x rail state, got dims {state.dims}"
        )
    u = emission_unitary(spec)
    return DensityMatrix(joint.dims, u @ joint.matrix @ u.conj().T)


def loss_kraus(spec: FockSpaceSpec, eta: float) -> list[np.ndarray]:
    """Kraus operators of the pure-loss channel with transmissivity eta.

    K_k = sum_n sqrt(C(n,k)) sqrt(eta^(n-k) (1-eta)^k) |n-k><n|.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValidationError("eta must lie in [0, 1]")
    d = spec.rail_dim
    ops = []
    for k in range(d):
        m = np.zeros((d, d), dtype=complex)
        for n in range(k, d):
            m[n - k, n] = np.sqrt(comb(n, k) * eta ** (n - k) * (1.0 - eta) ** k)
        ops.append(m)
    return ops


def loss_channel(rho: DensityMatrix, rail: int, eta: float) -> DensityMatrix:
    """Photon loss with transmissivity eta on the subsystem index `rail`.

    eta = 1 is the identity, eta = 0 empties the rail; mean photon number
    of number-diagonal states scales by exactly eta.
    """
    if rail < 0 or rail >= len(rho.dims):
        raise ValidationError(f"rail index {rail} out of range for {rho.dims}")
    d = rho.dims[rail]
    spec = FockSpaceSpec(n_max=d - 1)
    return apply_channel(rho, loss_kraus(spec, eta), targets=(rail,))
