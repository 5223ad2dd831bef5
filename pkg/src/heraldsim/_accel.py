"""Backend selection for the master-equation integrator hot loop.

The fixed-step RK4 propagation of the cascaded master equation is the one
place this package spends real time (thousands of small dense matmuls per
trace, times sweep points).  The kernel exists in two builds from one
source: a numba @njit build and a pure-numpy build.

Selection, checked once at import:

* ``HERALDSIM_BACKEND=numpy``  force the pure-numpy path
* ``HERALDSIM_BACKEND=numba``  require numba (ImportError if missing)
* unset / ``auto``             numba when importable, numpy otherwise

`propagate` is the active kernel; `available_backends` exposes both for
the benchmark in benchmarks/bench_lindblad.py.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    _HAVE_NUMBA = False


def _build(jit: bool):
    if jit:
        decorate = numba.njit(cache=True)
    else:
        def decorate(f):
            return f

    @decorate
    def rhs(rho, c, h0, hp, hm, c_op, c_dag, cdc):
        # drho = -i[H, rho] + C rho C^dag - (1/2){C^dag C, rho}
        h = h0 + c * hp + np.conj(c) * hm
        comm = h @ rho - rho @ h
        return (
            -1j * comm
            + c_op @ rho @ c_dag
            - 0.5 * (cdc @ rho + rho @ cdc)
        )

    @decorate
    def propagate(rho0, h0, hp, hm, c_op, c_dag, cdc, coeffs, dt, n_steps, obs):
        """RK4 over n_steps; coeffs samples the drive on the half-step grid
        (2*n_steps + 1 points).  Returns (n_obs, n_steps+1) real expectation
        traces and the final density matrix."""
        n_obs = obs.shape[0]
        out = np.empty((n_obs, n_steps + 1))
        rho = rho0.copy()
        for j in range(n_obs):
            out[j, 0] = np.trace(obs[j] @ rho).real
        for i in range(n_steps):
            c0 = coeffs[2 * i]
            ch = coeffs[2 * i + 1]
            c1 = coeffs[2 * i + 2]
            k1 = rhs(rho, c0, h0, hp, hm, c_op, c_dag, cdc)
            k2 = rhs(rho + (0.5 * dt) * k1, ch, h0, hp, hm, c_op, c_dag, cdc)
            k3 = rhs(rho + (0.5 * dt) * k2, ch, h0, hp, hm, c_op, c_dag, cdc)
            k4 = rhs(rho + dt * k3, c1, h0, hp, hm, c_op, c_dag, cdc)
            rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            for j in range(n_obs):
                out[j, i + 1] = np.trace(obs[j] @ rho).real
        return out, rho

    return propagate


_propagate_numpy = _build(jit=False)
_propagate_numba = _build(jit=True) if _HAVE_NUMBA else None

_requested = os.environ.get("HERALDSIM_BACKEND", "auto").lower()
if _requested == "numpy":
    BACKEND = "numpy"
elif _requested == "numba":
    if not _HAVE_NUMBA:
        raise ImportError("HERALDSIM_BACKEND=numba but numba is not installed")
    BACKEND = "numba"
elif _requested == "auto":
    BACKEND = "numba" if _HAVE_NUMBA else "numpy"
else:
    raise ValueError(
        f"HERALDSIM_BACKEND={_requested!r} not recognized (auto|numba|numpy)"
    )

propagate = _propagate_numba if BACKEND == "numba" else _propagate_numpy


def available_backends() -> dict:
    """Name -> kernel for every backend importable in this environment."""
    backends = {"numpy": _propagate_numpy}
    if _propagate_numba is not None:
        backends["numba"] = _propagate_numba
    return backends
