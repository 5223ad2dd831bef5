"""Time-domain open-system models of the microwave photon detector.

Two models live here:

* `cascaded_simulate`: the emitter cavity unidirectionally coupled into
  the detector qubit-cavity module (standard input-output cascade: one
  collapse operator sqrt(kappa_A) a + sqrt(kappa_D) d plus the coupling
  Hamiltonian (i/2) sqrt(kappa_A kappa_D) (a^dag d - a d^dag)), with the
  dispersive shift -chi |e><e| d^dag d and a photon-number-selective
  Gaussian qubit pulse.  The emitter starts in a Fock state (emission is
  instantaneous); the detector click probability is the qubit excited
  population after the pulse.

* `sideband_rabi`: the damped three-level model of photon generation --
  a coherent drive cycles |f0> <-> |e1> while the cavity decay kappa
  drains |e1> into |e0>.

Frames and units: everything rotates at the (common) cavity frequency and
the bare qubit frequency, so the only time dependence is the drive
envelope times exp(-i Delta t).  Frequencies are quoted as f = omega/2pi
in MHz, times in ns.

Integration is fixed-step classical RK4 (default 1 ns), deterministic by
construction; the hot loop lives in `_accel` with numba and numpy builds.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import atan, pi, sqrt

import numpy as np

from ._accel import propagate
from .qmath import ValidationError, basis_ket
from .photonics import annihilation

MHZ_TO_RAD_NS = 2.0e-3 * np.pi  # omega [rad/ns] = 2 pi f[MHz] 1e-3

TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-10
GUARD_TOL = 1e-3


class IntegrationError(RuntimeError):
    """The integrator left its tolerance budget; message carries the estimate."""


@dataclass(frozen=True)
class GaussianPulse:
    """Truncated, offset-subtracted Gaussian drive envelope.

    The envelope is exp(-(t-t0)^2 / 2 sigma^2) minus its edge value,
    renormalized, over [start_time, start_time + total_length]; zero
    outside.  With amplitude=None the peak Rabi rate is calibrated so the
    pulse area is pi (a resonant pi pulse).
    """

    sigma: float = 120.0           # ns
    total_length: float | None = None   # ns, defaults to 4 sigma
    amplitude: float | None = None       # MHz peak Rabi rate; None = pi area
    start_time: float = 0.0        # ns

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValidationError("pulse sigma must be positive")
        if self.total_length is None:
            object.__setattr__(self, "total_length", 4.0 * self.sigma)
        if self.total_length <= 0.0:
            raise ValidationError("pulse length must be positive")

    def unit_envelope(self, t: np.ndarray) -> np.ndarray:
        """Envelope with unit peak on an arbitrary time grid."""
        t = np.asarray(t, dtype=float)
        t0 = self.start_time + self.total_length / 2.0
        raw = np.exp(-((t - t0) ** 2) / (2.0 * self.sigma**2))
        edge = np.exp(-((self.total_length / 2.0) ** 2) / (2.0 * self.sigma**2))
        env = (raw - edge) / (1.0 - edge)
        inside = (t >= self.start_time) & (t <= self.start_time + self.total_length)
        return np.where(inside, np.clip(env, 0.0, None), 0.0)

    def peak_rate_rad_ns(self) -> float:
        """Peak Rabi rate in rad/ns, calibrating pi area when amplitude is None."""
        if self.amplitude is not None:
            return float(self.amplitude) * MHZ_TO_RAD_NS
        grid = np.linspace(
            self.start_time, self.start_time + self.total_length, 20001
        )
        area_unit = np.trapezoid(self.unit_envelope(grid), grid)
        return pi / area_unit

    def rate_rad_ns(self, t: np.ndarray) -> np.ndarray:
        return self.peak_rate_rad_ns() * self.unit_envelope(t)


@dataclass(frozen=True)
class CascadedSystemParams:
    """Emitter cavity -> detector qubit-cavity cascade parameters.

    Frequencies are f = omega/2pi in MHz.  Defaults are the measured
    operating point: matched 0.9 MHz cavity linewidths, 3 MHz dispersive
    shift, and the selective pulse driven one dispersive shift below the
    bare qubit line (the single-photon-selective frequency).
    """

    kappa_a: float = 0.9
    kappa_d: float = 0.9
    chi_d: float = 3.0
    emitter_dim: int = 3
    detector_cavity_dim: int = 4
    # Default pulse timing puts the pulse center on the intra-cavity
    # population maximum (2/kappa after release), the detection-optimal
    # delay; `pulse_sweep` over delay reproduces this optimum.
    pulse: GaussianPulse = GaussianPulse(start_time=115.0)
    detuning: float = -3.0

    def __post_init__(self):
        if self.kappa_a < 0.0 or self.kappa_d <= 0.0:
            raise ValidationError("cavity rates must be positive (kappa_a may be 0)")
        if self.emitter_dim < 3:
            raise ValidationError("emitter_dim must be >= 3")
        if self.detector_cavity_dim < 4:
            raise ValidationError("detector_cavity_dim must be >= 4")


@dataclass(frozen=True)
class TimeTraces:
    """Sampled expectation-value trajectories from the cascade integration."""

    times: np.ndarray          # ns
    n_a: np.ndarray            # emitter cavity photon number
    n_d: np.ndarray            # detector cavity photon number
    p_e: np.ndarray            # detector qubit excited population
    pulse: np.ndarray          # drive envelope, rad/ns
    guard_max: float
    trace_error: float

    @property
    def p_click(self) -> float:
        """Click probability: qubit excited population at the final time."""
        return float(self.p_e[-1])

    def write_csv(self, path) -> None:
        """CSV with header time_ns, n_A, n_D, p_e, pulse."""
        data = np.column_stack([self.times, self.n_a, self.n_d, self.p_e, self.pulse])
        header = "time_ns,n_A,n_D,p_e,pulse"
        np.savetxt(path, data, delimiter=",", header=header, comments="")


def _embed(op: np.ndarray, dims: tuple[int, ...], which: int) -> np.ndarray:
    full = np.array([[1.0 + 0.0j]])
    for i, d in enumerate(dims):
        factor = op if i == which else np.eye(d, dtype=complex)
        full = np.kron(full, factor)
    return full


class _CascadeOperators:
    """Hilbert space (emitter cavity, detector qubit, detector cavity)."""

    def __init__(self, params: CascadedSystemParams):
        dims = (params.emitter_dim, 2, params.detector_cavity_dim)
        self.dims = dims
        a = _embed(annihilation(params.emitter_dim), dims, 0)
        d = _embed(annihilation(params.detector_cavity_dim), dims, 2)
        sp = _embed(np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex), dims, 1)
        pe = _embed(np.diag([0.0, 1.0]).astype(complex), dims, 1)

        ka = params.kappa_a * MHZ_TO_RAD_NS
        kd = params.kappa_d * MHZ_TO_RAD_NS
        chi = params.chi_d * MHZ_TO_RAD_NS

        h_casc = 0.5j * sqrt(ka * kd) * (a.conj().T @ d - a @ d.conj().T)
        h_disp = -chi * pe @ (d.conj().T @ d)
        self.h0 = h_casc + h_disp
        self.hp = sp
        self.hm = sp.conj().T
        self.c_op = sqrt(ka) * a + sqrt(kd) * d
        self.c_dag = self.c_op.conj().T
        self.cdc = self.c_dag @ self.c_op

        self.n_a_op = a.conj().T @ a
        self.n_d_op = d.conj().T @ d
        self.p_e_op = pe
        guard = np.zeros(params.detector_cavity_dim)
        guard[-1] = 1.0
        self.guard_op = _embed(np.diag(guard).astype(complex), dims, 2)

    def initial_state(self, emitter_fock: int) -> np.ndarray:
        ket = np.kron(
            np.kron(basis_ket(self.dims[0], emitter_fock), basis_ket(2, 0)),
            basis_ket(self.dims[2], 0),
        )
        return np.outer(ket, ket.conj())


def _integrate(ops: _CascadeOperators, rho0, params, times, dt):
    """One kernel call over a time window; returns traces and final state."""
    n_steps = len(times) - 1
    half_grid = times[0] + 0.5 * dt * np.arange(2 * n_steps + 1)
    envelope = params.pulse.rate_rad_ns(half_grid)
    coeffs = 0.5 * envelope * np.exp(
        -1j * params.detuning * MHZ_TO_RAD_NS * half_grid
    )
    obs = np.stack([ops.n_a_op, ops.n_d_op, ops.p_e_op, ops.guard_op])
    out, rho_final = propagate(
        np.ascontiguousarray(rho0, dtype=complex),
        ops.h0,
        ops.hp,
        ops.hm,
        ops.c_op,
        ops.c_dag,
        ops.cdc,
        coeffs,
        float(dt),
        n_steps,
        obs,
    )
    trace_error = abs(float(np.trace(rho_final).real) - 1.0)
    herm_error = float(np.max(np.abs(rho_final - rho_final.conj().T)))
    if trace_error > TRACE_TOL or herm_error > HERMITICITY_TOL:
        raise IntegrationError(
            f"integrator left tolerance: trace error {trace_error:.2e} "
            f"(budget {TRACE_TOL:.0e}), hermiticity {herm_error:.2e} "
            f"(budget {HERMITICITY_TOL:.0e}); reduce dt"
        )
    return out, rho_final, trace_error


def cascaded_simulate(
    initial_fock: int,
    params: CascadedSystemParams,
    t_total: float = 1200.0,
    dt: float = 1.0,
) -> TimeTraces:
    """Integrate the cascaded master equation for one emitter Fock state.

    The emitter releases its photon(s) from t = 0.  A pulse with negative
    start_time is honored by pre-rolling the drive on the empty system and
    injecting the Fock state at t = 0 (exact: nothing entangles with the
    emitter before its photon exists).  Raises IntegrationError when the
    trace or guard-level budget is exceeded.
    """
    if initial_fock not in range(params.emitter_dim):
        raise ValidationError(
            f"initial_fock {initial_fock} outside emitter dimension"
        )
    ops = _CascadeOperators(params)
    t_min = min(0.0, params.pulse.start_time)
    pieces = []
    trace_error = 0.0

    if t_min < 0.0:
        n_pre = max(1, int(round(-t_min / dt)))
        times_pre = t_min + dt * np.arange(n_pre + 1)
        out_pre, rho_mid, _ = _integrate(
            ops, ops.initial_state(0), params, times_pre, dt
        )
        # swap in the freshly released Fock state; the emitter factor is
        # untouched vacuum up to here, so this is a tensor replacement
        rho_start = _replace_emitter(rho_mid, ops.dims, initial_fock)
        pieces.append((times_pre[:-1], out_pre[:, :-1]))
    else:
        rho_start = ops.initial_state(initial_fock)

    n_steps = max(1, int(round(t_total / dt)))
    times_main = dt * np.arange(n_steps + 1)
    out_main, _, trace_error = _integrate(ops, rho_start, params, times_main, dt)
    pieces.append((times_main, out_main))

    times = np.concatenate([p[0] for p in pieces])
    out = np.concatenate([p[1] for p in pieces], axis=1)
    guard_max = float(out[3].max())
    if guard_max > GUARD_TOL:
        raise IntegrationError(
            f"detector-cavity guard level reached {guard_max:.2e} "
            f"(budget {GUARD_TOL:.0e}); raise detector_cavity_dim"
        )
    envelope = params.pulse.rate_rad_ns(times)
    return TimeTraces(
        times=times,
        n_a=out[0],
        n_d=out[1],
        p_e=out[2],
        pulse=envelope,
        guard_max=guard_max,
        trace_error=trace_error,
    )


def _replace_emitter(rho: np.ndarray, dims, fock: int) -> np.ndarray:
    d_em = dims[0]
    d_rest = dims[1] * dims[2]
    rho_rest = np.einsum(
        "iajb->ab", rho.reshape(d_em, d_rest, d_em, d_rest)
    )
    ket = basis_ket(d_em, fock)
    return np.kron(np.outer(ket, ket.conj()), rho_rest)


@dataclass(frozen=True)
class RobustnessReport:
    baseline_efficiency: float
    variations: tuple
    max_relative_change: float


def parameter_robustness(
    params: CascadedSystemParams,
    variation: float,
    t_total: float = 1200.0,
    dt: float = 1.0,
) -> RobustnessReport:
    """Fock-1 click probability under +/-variation of the matching knobs.

    Varies the cavity-bandwidth match (kappa_d), the pulse length (sigma
    and total length together, amplitude frozen at the baseline calibrated
    value) and the pulse timing (shift by +/-variation of the pulse
    length).  Reports the worst relative efficiency change.
    """
    if variation < 0.0:
        raise ValidationError("variation must be non-negative")
    base_pulse = replace(params.pulse, amplitude=None)
    frozen_amp = base_pulse.peak_rate_rad_ns() / MHZ_TO_RAD_NS
    baseline_params = replace(params, pulse=replace(base_pulse, amplitude=frozen_amp))
    baseline = cascaded_simulate(1, baseline_params, t_total, dt).p_click

    cases = []
    for sign in (+1.0, -1.0):
        f = 1.0 + sign * variation
        cases.append(("bandwidth_mismatch", replace(baseline_params, kappa_d=params.kappa_d * f)))
        cases.append(
            (
                "pulse_length",
                replace(
                    baseline_params,
                    pulse=replace(
                        baseline_params.pulse,
                        sigma=base_pulse.sigma * f,
                        total_length=base_pulse.total_length * f,
                    ),
                ),
            )
        )
        cases.append(
            (
                "pulse_timing",
                replace(
                    baseline_params,
                    pulse=replace(
                        baseline_params.pulse,
                        start_time=base_pulse.start_time
                        + sign * variation * base_pulse.total_length,
                    ),
                ),
            )
        )

    results = []
    worst = 0.0
    for name, varied in cases:
        eta = cascaded_simulate(1, varied, t_total, dt).p_click
        rel = abs(eta - baseline) / baseline if baseline > 0 else 0.0
        worst = max(worst, rel)
        results.append((name, varied.kappa_d, eta, rel))
    return RobustnessReport(baseline, tuple(results), worst)


def pulse_sweep(
    params: CascadedSystemParams,
    axis: str,
    values,
    initial_fock: int = 1,
    t_total: float = 1200.0,
    dt: float = 1.0,
) -> np.ndarray:
    """Click probability versus pulse detuning (MHz) or delay (ns).

    `delay` moves the pulse start relative to the photon release at t = 0
    (negative values start the pulse early).
    """
    if axis not in ("detuning", "delay"):
        raise ValidationError("axis must be 'detuning' or 'delay'")
    p_clicks = np.empty(len(values))
    for i, v in enumerate(values):
        if axis == "detuning":
            varied = replace(params, detuning=float(v))
        else:
            varied = replace(params, pulse=replace(params.pulse, start_time=float(v)))
        p_clicks[i] = cascaded_simulate(initial_fock, varied, t_total, dt).p_click
    return p_clicks


# ---------------------------------------------------------------------------
# damped sideband Rabi model (photon generation)

@dataclass(frozen=True)
class SidebandTraces:
    """Damped Rabi cycling of |f0> <-> |e1> with |e1> -> |e0> decay at kappa."""

    times: np.ndarray
    p_f0: np.ndarray
    p_e1: np.ndarray
    p_e0: np.ndarray
    ef_polarization: np.ndarray   # p_f - p_e
    p_click: np.ndarray           # eta * p_e1


def sideband_rabi(
    drive_rate: float, kappa: float, eta: float, times: np.ndarray
) -> SidebandTraces:
    """Integrate the three-level damped vacuum-Rabi model on a uniform grid.

    drive_rate and kappa are f = omega/2pi values in MHz; eta is the
    lumped path-plus-detector efficiency scaling p_e1 into the click
    signal.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise ValidationError("need at least two time points")
    spacing = np.diff(times)
    if np.max(np.abs(spacing - spacing[0])) > 1e-9:
        raise ValidationError("time grid must be uniform")
    if not 0.0 <= eta <= 1.0:
        raise ValidationError("eta must lie in [0, 1]")

    omega = drive_rate * MHZ_TO_RAD_NS
    k = kappa * MHZ_TO_RAD_NS
    # basis |f0>, |e1>, |e0>
    h0 = np.zeros((3, 3), dtype=complex)
    h0[0, 1] = h0[1, 0] = omega / 2.0
    c_op = np.zeros((3, 3), dtype=complex)
    c_op[2, 1] = sqrt(k)

    sub = max(1, int(np.ceil(spacing[0] / 0.5)))
    dt = spacing[0] / sub
    n_steps = (times.size - 1) * sub
    coeffs = np.zeros(2 * n_steps + 1, dtype=complex)
    zeros = np.zeros((3, 3), dtype=complex)
    obs = np.stack(
        [
            np.diag([1.0, 0.0, 0.0]).astype(complex),
            np.diag([0.0, 1.0, 0.0]).astype(complex),
            np.diag([0.0, 0.0, 1.0]).astype(complex),
        ]
    )
    rho0 = np.zeros((3, 3), dtype=complex)
    rho0[0, 0] = 1.0
    out, _ = propagate(
        rho0, h0, zeros, zeros, c_op, c_op.conj().T,
        c_op.conj().T @ c_op, coeffs, dt, n_steps, obs,
    )
    p_f0, p_e1, p_e0 = out[0][::sub], out[1][::sub], out[2][::sub]
    return SidebandTraces(
        times=times,
        p_f0=p_f0,
        p_e1=p_e1,
        p_e0=p_e0,
        ef_polarization=p_f0 - p_e1 - p_e0,
        p_click=eta * p_e1,
    )


def sideband_pi_time(drive_rate: float, kappa: float) -> float:
    """First maximum of the |f0> -> |e1> transfer, in ns (underdamped only)."""
    omega = drive_rate * MHZ_TO_RAD_NS
    k = kappa * MHZ_TO_RAD_NS
    disc = omega**2 - k**2 / 4.0
    if disc <= 0.0:
        raise ValidationError("overdamped drive has no transfer maximum")
    w_r = sqrt(disc) / 2.0
    return atan(4.0 * w_r / k) / w_r if k > 0.0 else pi / omega


def calibrate_sideband_drive(kappa: float, pi_time: float = 254.0) -> float:
    """Drive rate (MHz) whose damped transfer peaks at the given time."""
    lo, hi = 1e-4, 1e3
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        try:
            t = sideband_pi_time(mid, kappa)
        except ValidationError:
            lo = mid
            continue
        if t > pi_time:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
