"""Shot-level Monte Carlo realization of the protocol with post-selection.

Sampling happens at the outcome-branch level, which is exact for this
model: the analytic engine supplies the four heralding-branch
probabilities and conditional states, each shot draws an initialization
flag, a branch, and a joint-readout outcome through the assignment
matrix.  Tomography settings cycle round-robin over the initialized
shots, mirroring interleaved data taking; post-selection (keeping doubly
heralded shots) happens only in the aggregation step, as in the analysis
of a real dataset.

Randomness is counter-based: one Philox stream keyed by the seed supplies
a fixed block of three uniforms per shot, so shot i's randomness is a
pure function of (seed, i) and identical runs are bit-identical.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .protocol import OutcomeTable, ProtocolConfig, run_two_rounds
from .qmath import PauliVector, ValidationError
from .tomography import (
    AssignmentMatrix,
    TomographySettings,
    outcome_probabilities,
)

BRANCH_ORDER = ((True, True), (True, False), (False, True), (False, False))
OUTCOME_LABELS = ("GG", "GE", "EG", "EE")


@dataclass(frozen=True)
class ShotRecord:
    """One protocol repetition.

    tomo_setting and outcome are -1 when initialization failed (no
    tomography result is recorded for those shots).
    """

    index: int
    init_ok: bool
    click1: bool
    click2: bool
    tomo_setting: int
    outcome: int


@dataclass(frozen=True)
class BinomialEstimate:
    value: float
    sigma: float
    n: int


@dataclass(frozen=True)
class RunSummary:
    """Frequencies with binomial errors plus the post-selected counts.

    post_selected_counts is a raw (9 settings x 4 outcomes) array; the
    per-setting totals are unequal because heralding is random, exactly
    as in conditioned data taking.
    """

    shots: int
    p_init_hat: BinomialEstimate
    p_click1_hat: BinomialEstimate
    p_click2_hat: BinomialEstimate
    post_selected: int
    post_selected_counts: np.ndarray


def _binomial(k: int, n: int) -> BinomialEstimate:
    if n == 0:
        return BinomialEstimate(0.0, 0.0, 0)
    p = k / n
    return BinomialEstimate(p, float(np.sqrt(max(p * (1.0 - p), 0.0) / n)), n)


def sample_shots(
    config: ProtocolConfig,
    settings: TomographySettings,
    n: int,
    seed: int,
    assignment: AssignmentMatrix | None = None,
    table: OutcomeTable | None = None,
) -> list[ShotRecord]:
    """Draw n protocol shots; deterministic given (config, settings, n, seed).

    The OutcomeTable may be passed in to avoid recomputing it across
    calls; it must belong to the same config.
    """
    if n < 0:
        raise ValidationError("shot count must be non-negative")
    if assignment is None:
        assignment = AssignmentMatrix.identity()
    if table is None:
        table = run_two_rounds(config)

    branch_probs = np.array([table.probability(*b) for b in BRANCH_ORDER])
    branch_cum = np.cumsum(branch_probs)
    branch_cum[-1] = 1.0

    # (branch, setting) -> outcome distribution through the readout model
    outcome_cum = np.zeros((4, 9, 4))
    for bi, key in enumerate(BRANCH_ORDER):
        state = table.state(*key)
        if state is None:
            outcome_cum[bi] = np.nan
            continue
        probs = outcome_probabilities(state, assignment)
        outcome_cum[bi] = np.cumsum(probs, axis=1)
        outcome_cum[bi, :, -1] = 1.0

    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    u = rng.random((n, 3))

    init_ok = u[:, 0] < config.p_init
    branch_idx = np.searchsorted(branch_cum, u[:, 1], side="right")
    branch_idx = np.minimum(branch_idx, 3)

    # round-robin settings over initialized shots
    setting_idx = np.full(n, -1, dtype=int)
    which = np.flatnonzero(init_ok)
    setting_idx[which] = np.arange(which.size) % 9

    outcome_idx = np.full(n, -1, dtype=int)
    if which.size:
        cums = outcome_cum[branch_idx[which], setting_idx[which]]
        outcome_idx[which] = np.minimum(
            (u[which, 2, None] >= cums).sum(axis=1), 3
        )

    records = []
    for i in range(n):
        ok = bool(init_ok[i])
        c1, c2 = BRANCH_ORDER[branch_idx[i]] if ok else (False, False)
        records.append(
            ShotRecord(
                index=i,
                init_ok=ok,
                click1=c1 if ok else False,
                click2=c2 if ok else False,
                tomo_setting=int(setting_idx[i]),
                outcome=int(outcome_idx[i]),
            )
        )
    return records


def aggregate(
    records: list[ShotRecord],
    assignment: AssignmentMatrix | None = None,
    branch: tuple[bool, bool] = (True, True),
) -> tuple[RunSummary, PauliVector | None]:
    """Post-select one heralding branch and reconstruct its Pauli vector.

    The default branch is the doubly-heralded one; any branch can be
    selected to check that post-selection is unbiased.  Returns the
    summary and the corrected Pauli vector (None if too few shots to fill
    every setting).
    """
    n = len(records)
    init = [r for r in records if r.init_ok]
    click1 = [r for r in init if r.click1]
    click12 = [r for r in click1 if r.click2]
    selected = [r for r in init if (r.click1, r.click2) == branch]

    counts = np.zeros((9, 4))
    for r in selected:
        counts[r.tomo_setting, r.outcome] += 1.0

    pauli = None
    if counts.sum(axis=1).min() > 0:
        pauli = _reconstruct_unequal(counts, assignment)
    summary = RunSummary(
        shots=n,
        p_init_hat=_binomial(len(init), n),
        p_click1_hat=_binomial(len(click1), len(init)),
        p_click2_hat=_binomial(len(click12), len(click1)),
        post_selected=len(selected),
        post_selected_counts=counts,
    )
    return summary, pauli


def _reconstruct_unequal(counts: np.ndarray, assignment) -> PauliVector:
    """Reconstruction when settings carry unequal shot numbers."""
    from .tomography import _LABEL_TO_SETTINGS, _component_signs
    from .qmath import PAULI_LABELS

    inv = assignment.inverse() if assignment is not None else np.eye(4)
    n_k = counts.sum(axis=1)
    freqs = counts / n_k[:, None]
    corrected = freqs @ inv.T
    covs = []
    for k in range(9):
        q = freqs[k]
        cov_q = (np.diag(q) - np.outer(q, q)) / n_k[k]
        covs.append(inv @ cov_q @ inv.T)

    comps = np.zeros(16)
    sigma = np.zeros(16)
    for idx, label in enumerate(PAULI_LABELS):
        if label == "II":
            comps[idx] = 1.0
            continue
        signs = _component_signs(label)
        ks = _LABEL_TO_SETTINGS[label]
        comps[idx] = float(np.mean([signs @ corrected[k] for k in ks]))
        var = sum(max(float(signs @ covs[k] @ signs), 0.0) for k in ks)
        sigma[idx] = float(np.sqrt(var)) / len(ks)
    return PauliVector(comps, sigma)


CSV_FIELDS = ("index", "init_ok", "click1", "click2", "tomo_setting", "outcome")


def write_shots_csv(records: list[ShotRecord], path) -> None:
    """One row per shot; outcome written as GG/GE/EG/EE or empty."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for r in records:
            writer.writerow(
                [
                    r.index,
                    int(r.init_ok),
                    int(r.click1),
                    int(r.click2),
                    r.tomo_setting if r.tomo_setting >= 0 else "",
                    OUTCOME_LABELS[r.outcome] if r.outcome >= 0 else "",
                ]
            )
