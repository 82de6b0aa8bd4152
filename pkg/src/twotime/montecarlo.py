"""Shot-based simulation of the physical preparation/post-selection protocol.

Each attempt plays out the protocol that realizes a two-time state
operationally:

1. draw an ensemble member r with probability ``p_r``;
2. prepare the system-ancilla entangled state
   ``sum_ij alpha_ij |j>_system |i>_ancilla`` (unit norm);
3. the observer applies one measurement (possibly chosen at random from
   a policy), sampling a fine-grained Kraus branch ``(mu, chi)`` with
   Born probability ``||(A (x) I) state||^2`` and collapsing the state;
4. post-select on the maximally entangled state of system and ancilla;
   the success probability of the collapsed branch works out to
   ``|A . alpha|^2 / (d * born)``, so only the success bit is sampled,
   never the full d^2-outcome projective measurement.

Only ``(mu, success)`` is recorded; coarse-grained outcomes are sampled
at full (mu, chi) detail and lumped in the tally.  Conditioned on
success, outcome frequencies converge to the ensemble probability rule
(mix outcome weights over members, then normalize).

Randomness contract
-------------------
One master seed (uint64) expands into a counter-based family of Philox
streams: attempt ``t`` consumes row ``t % 65536`` of the (65536, 4)
uniform block generated by ``Philox(key=[seed, t // 65536])``.  The
four uniforms drive, in order: member draw, measurement choice, Kraus
branch, success test.  The chunk size 65536 is part of the contract.
Results therefore depend only on (seed, shots), bit-identically, no
matter how attempts are partitioned across workers; partial tallies
merge by summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .core import KrausOperator
from .errors import (
    DimensionMismatchError,
    IncompleteMeasurementError,
    NormalizationError,
    ValidationError,
)
from .measurements import Measurement
from .probability import prob_coarse
from .states import Ensemble, density_from_ensemble, pure_product

__all__ = [
    "CHUNK",
    "ObserverPolicy",
    "SimConfig",
    "SimResult",
    "DiscardDemo",
    "ReversalReport",
    "simulate",
    "simulate_proportion_reversal",
    "reversal_scenario",
    "analytic_success_rate",
]

#: Attempts per Philox key block; part of the randomness contract.
CHUNK = 65536

_MAX_SEED = 2**64


@dataclass(frozen=True, eq=False)
class ObserverPolicy:
    """The observer's (possibly random) choice of measurement.

    Parameters
    ----------
    measurements : tuple of Measurement
        All complete, all of one dimension.
    choice_probs : tuple of float
        Strictly positive, summing to 1 within 1e-12.
    """

    measurements: tuple
    choice_probs: tuple

    def __post_init__(self) -> None:
        ms = tuple(self.measurements)
        ps = tuple(float(p) for p in self.choice_probs)
        if not ms:
            raise ValidationError("policy has no measurements")
        if len(ms) != len(ps):
            raise DimensionMismatchError(
                f"{len(ms)} measurements but {len(ps)} choice probabilities"
            )
        for m in ms:
            if not isinstance(m, Measurement):
                raise DimensionMismatchError(f"{m!r} is not a Measurement")
        dims = {m.dim for m in ms}
        if len(dims) != 1:
            raise DimensionMismatchError(f"measurements have mixed dimensions {sorted(dims)}")
        for p in ps:
            if not math.isfinite(p) or p <= 0.0:
                raise NormalizationError(f"choice probability {p!r} is not strictly positive")
        total = sum(ps)
        if abs(total - 1.0) > 1e-12:
            raise NormalizationError(f"choice probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "measurements", ms)
        object.__setattr__(self, "choice_probs", ps)

    @property
    def dim(self) -> int:
        return self.measurements[0].dim

    @classmethod
    def fixed(cls, measurement: Measurement) -> "ObserverPolicy":
        return cls((measurement,), (1.0,))


@dataclass(frozen=True, eq=False)
class SimConfig:
    """A fully specified simulation: ensemble, policy, shots, seed."""

    ensemble: Ensemble
    policy: ObserverPolicy
    shots: int
    seed: int

    def __post_init__(self) -> None:
        if not isinstance(self.ensemble, Ensemble):
            raise DimensionMismatchError(f"{self.ensemble!r} is not an Ensemble")
        if not isinstance(self.policy, ObserverPolicy):
            raise DimensionMismatchError(f"{self.policy!r} is not an ObserverPolicy")
        if self.ensemble.dim != self.policy.dim:
            raise DimensionMismatchError(
                f"ensemble dim {self.ensemble.dim} != measurement dim {self.policy.dim}"
            )
        shots = int(self.shots)
        if shots < 1:
            raise ValidationError(f"shots must be >= 1, got {self.shots!r}")
        seed = int(self.seed)
        if not (0 <= seed < _MAX_SEED):
            raise ValidationError(f"seed must be a uint64, got {self.seed!r}")
        # Completeness is a physical requirement: the observer's Kraus
        # branches must exhaust the Born rule before post-selection.
        for m in self.policy.measurements:
            if not m.is_complete:
                raise IncompleteMeasurementError(
                    f"policy contains an incomplete measurement (defect "
                    f"{m.completeness_defect:.3e})"
                )
        object.__setattr__(self, "shots", shots)
        object.__setattr__(self, "seed", seed)

    @classmethod
    def fixed(cls, ensemble: Ensemble, measurement: Measurement, shots: int, seed: int) -> "SimConfig":
        return cls(ensemble, ObserverPolicy.fixed(measurement), shots, seed)


@dataclass(frozen=True, eq=False)
class SimResult:
    """Tallies of one simulation.

    Attributes
    ----------
    attempts : int
    attempted : numpy.ndarray
        (n_choices, n_members) attempts per measurement choice and
        ensemble member.
    choice_counts : tuple of numpy.ndarray
        One (n_members, n_outcomes) success-count array per measurement
        choice.
    """

    attempts: int
    attempted: np.ndarray
    choice_counts: tuple

    @property
    def n_choices(self) -> int:
        return len(self.choice_counts)

    @property
    def successes(self) -> int:
        return int(sum(int(c.sum()) for c in self.choice_counts))

    def successes_for(self, choice: int = 0) -> int:
        return int(self.choice_counts[choice].sum())

    def outcome_counts_for(self, choice: int = 0) -> np.ndarray:
        """Per-outcome success counts n_mu for one measurement choice."""
        return self.choice_counts[choice].sum(axis=0)

    def member_counts_for(self, choice: int = 0) -> np.ndarray:
        """Per-ensemble-member success counts for one measurement choice."""
        return self.choice_counts[choice].sum(axis=1)

    def frequencies_for(self, choice: int = 0) -> np.ndarray:
        """Empirical conditional frequencies f_mu = n_mu / successes.

        Zeros when nothing succeeded for that choice.
        """
        n = self.successes_for(choice)
        counts = self.outcome_counts_for(choice)
        return counts / n if n > 0 else np.zeros_like(counts, dtype=float)

    @property
    def counts(self) -> np.ndarray:
        """n_mu for a fixed (single-measurement) policy."""
        if self.n_choices != 1:
            raise ValidationError("counts is defined for fixed policies; use outcome_counts_for")
        return self.outcome_counts_for(0)

    @property
    def frequencies(self) -> np.ndarray:
        """f_mu for a fixed (single-measurement) policy."""
        if self.n_choices != 1:
            raise ValidationError(
                "frequencies is defined for fixed policies; use frequencies_for"
            )
        return self.frequencies_for(0)


def _uniforms(seed: int, start: int, stop: int) -> np.ndarray:
    """Rows [start, stop) of the per-seed uniform table (4 per attempt)."""
    out = np.empty((stop - start, 4))
    pos = 0
    for block_idx in range(start // CHUNK, (stop - 1) // CHUNK + 1):
        gen = Generator(Philox(key=np.array([seed, block_idx], dtype=np.uint64)))
        block = gen.random((CHUNK, 4))
        lo = max(start, block_idx * CHUNK)
        hi = min(stop, (block_idx + 1) * CHUNK)
        out[pos:pos + (hi - lo)] = block[lo - block_idx * CHUNK:hi - block_idx * CHUNK]
        pos += hi - lo
    return out


class _Tables:
    """Precomputed sampling tables; everything the per-attempt loop needs."""

    def __init__(self, cfg: SimConfig) -> None:
        d = cfg.ensemble.dim
        self.dim = d
        self.n_members = len(cfg.ensemble.members)
        self.cum_members = np.cumsum(cfg.ensemble.weights)
        self.cum_choices = np.cumsum(np.array(cfg.policy.choice_probs))
        self.outcome_of = []
        self.n_outcomes = []
        self.cum_branch = []
        self.success = []
        for m in cfg.policy.measurements:
            flat_ops = [op for out in m.outcomes for op in out.kraus]
            outcome_of = np.array(
                [mu for mu, out in enumerate(m.outcomes) for _ in out.kraus], dtype=np.intp
            )
            stack = np.stack([op.entries for op in flat_ops])
            cum_rows = []
            succ_rows = []
            for _, state in cfg.ensemble.members:
                al = state.coeffs
                collapsed = np.einsum("ij,okj->oik", al, stack)
                born = np.einsum("oik,oik->o", collapsed, collapsed.conj()).real
                contr = np.einsum("oij,ij->o", stack, al)
                with np.errstate(divide="ignore", invalid="ignore"):
                    succ = np.abs(contr) ** 2 / (d * born)
                succ[born <= 1e-300] = 0.0
                cum_rows.append(np.cumsum(born))
                succ_rows.append(np.clip(succ, 0.0, 1.0))
            self.outcome_of.append(outcome_of)
            self.n_outcomes.append(m.n_outcomes)
            self.cum_branch.append(cum_rows)
            self.success.append(succ_rows)


def _accumulate(cfg: SimConfig, tables: _Tables, start: int, stop: int,
                attempted: np.ndarray, counts: list) -> None:
    n_members = tables.n_members
    n_choices = len(tables.n_outcomes)
    pos = start
    while pos < stop:
        end = min(stop, pos + CHUNK - (pos % CHUNK))
        u = _uniforms(cfg.seed, pos, end)
        r_idx = np.minimum(
            np.searchsorted(tables.cum_members, u[:, 0], side="right"), n_members - 1
        )
        c_idx = np.minimum(
            np.searchsorted(tables.cum_choices, u[:, 1], side="right"), n_choices - 1
        )
        for c in range(n_choices):
            n_flat = tables.outcome_of[c].size
            for r in range(n_members):
                mask = (c_idx == c) & (r_idx == r)
                n_here = int(np.count_nonzero(mask))
                if n_here == 0:
                    continue
                attempted[c, r] += n_here
                branch = np.minimum(
                    np.searchsorted(tables.cum_branch[c][r], u[mask, 2], side="right"),
                    n_flat - 1,
                )
                wins = u[mask, 3] < tables.success[c][r][branch]
                if wins.any():
                    mu = tables.outcome_of[c][branch[wins]]
                    counts[c][r] += np.bincount(mu, minlength=tables.n_outcomes[c])
        pos = end


def simulate(cfg: SimConfig, _ranges=None) -> SimResult:
    """Run the protocol for ``cfg.shots`` attempts.

    ``_ranges`` (internal) lets tests run disjoint attempt ranges
    separately and verify the merged tally is bit-identical to a single
    pass, which is the partition-independence guarantee of the
    randomness contract.
    """
    tables = _Tables(cfg)
    n_choices = len(cfg.policy.measurements)
    attempted = np.zeros((n_choices, tables.n_members), dtype=np.int64)
    counts = [
        np.zeros((tables.n_members, n), dtype=np.int64) for n in tables.n_outcomes
    ]
    if _ranges is None:
        _ranges = [(0, cfg.shots)]
    for start, stop in _ranges:
        _accumulate(cfg, tables, start, stop, attempted, counts)
    attempted.flags.writeable = False
    for arr in counts:
        arr.flags.writeable = False
    return SimResult(attempts=cfg.shots, attempted=attempted, choice_counts=tuple(counts))


def analytic_success_rate(ensemble: Ensemble, m: Measurement) -> float:
    """Probability that one attempt survives post-selection.

    ``sum_r p_r sum_branches |A . alpha_r|^2 / d``; useful for sizing
    ``shots`` against a wanted number of successes.
    """
    d = ensemble.dim
    total = 0.0
    for w, state in ensemble.members:
        for out in m.outcomes:
            for op in out.kraus:
                total += w * abs(np.sum(op.entries * state.coeffs)) ** 2 / d
    return total


def _binomial_z(freq: float, p: float, n: int) -> float:
    se = math.sqrt(p * (1.0 - p) / n) if n > 0 else 0.0
    if se == 0.0:
        return 0.0 if abs(freq - p) < 1e-12 else math.inf
    return (freq - p) / se


def reversal_scenario() -> tuple[Ensemble, Measurement, Measurement]:
    """The pinned two-member scenario whose proportions reverse.

    Ensemble: equal mixture of "post-select 0, prepare 0" and
    "post-select 0, prepare 1".  First measurement {|0><0|, |+><1|};
    second measurement {|+><0|, |0><1|}: each member succeeds always
    under one measurement and half the time under the other, with the
    roles swapped.
    """
    e0 = np.array([1.0, 0.0])
    e1 = np.array([0.0, 1.0])
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    ensemble = Ensemble((
        (0.5, pure_product(e0, e0)),
        (0.5, pure_product(e0, e1)),
    ))
    m_first = Measurement.detailed(
        [KrausOperator(np.outer(e0, e0)), KrausOperator(np.outer(plus, e1))]
    )
    m_second = Measurement.detailed(
        [KrausOperator(np.outer(plus, e0)), KrausOperator(np.outer(e0, e1))]
    )
    return ensemble, m_first, m_second


@dataclass(frozen=True, eq=False)
class DiscardDemo:
    """Post-hoc equalization: discard half the dominant member's successes.

    Under the first measurement alone, member 0 succeeds twice as often
    as member 1; throwing away every other member-0 success restores
    equal proportions.  ``kept`` holds the counts after discarding,
    ``z`` the binomial z-score of the kept member-0 proportion against
    1/2.
    """

    seed: int
    member_counts: np.ndarray
    kept: np.ndarray
    kept_proportions: np.ndarray
    z: float

    @property
    def equalized(self) -> bool:
        return abs(self.z) <= 4.0


@dataclass(frozen=True, eq=False)
class ReversalReport:
    """Everything :func:`simulate_proportion_reversal` measures.

    ``member_counts[c, r]`` counts successes of ensemble member r when
    measurement c was chosen.  Conditional proportions reverse between
    the measurements (expected 2:1 and 1:2) while overall proportions
    stay 1:1: the post-selector, seeing only successes, cannot define
    "the ensemble the observer saw" without knowing the measurement.
    """

    shots: int
    seed: int
    result: SimResult
    member_counts: np.ndarray
    conditional_proportions: np.ndarray
    expected_conditional: np.ndarray
    conditional_z: np.ndarray
    overall_proportions: np.ndarray
    overall_z: float
    outcome_frequencies: tuple
    outcome_targets: tuple
    outcome_z: tuple
    separation: float
    separation_expected: float
    discard: DiscardDemo

    @property
    def proportions_within_tolerance(self) -> bool:
        return bool(
            np.all(np.abs(self.conditional_z) <= 4.0) and abs(self.overall_z) <= 4.0
        )

    @property
    def proportions_differ(self) -> bool:
        """Conditional proportions under the two measurements separate.

        True when the observed member-0 proportion gap is within 4
        combined standard errors of its expected value 1/3 and at least
        half of it.
        """
        return bool(self.separation >= self.separation_expected / 2.0)

    @property
    def consistent(self) -> bool:
        return (
            self.proportions_within_tolerance
            and self.proportions_differ
            and bool(np.all([np.all(np.abs(z) <= 4.0) for z in self.outcome_z]))
            and self.discard.equalized
        )


def simulate_proportion_reversal(shots: int = 100_000, seed: int = 7) -> ReversalReport:
    """Run the pinned reversal scenario under a 50/50 measurement choice.

    Also runs the first measurement alone with seed+1 for the post-hoc
    discard demonstration.  All statistical comparisons use 4 binomial
    standard errors.
    """
    ensemble, m_first, m_second = reversal_scenario()
    policy = ObserverPolicy((m_first, m_second), (0.5, 0.5))
    result = simulate(SimConfig(ensemble, policy, shots, seed))

    member_counts = np.stack([result.member_counts_for(c) for c in range(2)])
    expected = np.array([[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]])
    cond = np.zeros((2, 2))
    cond_z = np.zeros((2, 2))
    for c in range(2):
        n_c = int(member_counts[c].sum())
        if n_c > 0:
            cond[c] = member_counts[c] / n_c
        cond_z[c, 0] = _binomial_z(cond[c, 0], expected[c, 0], n_c)
        cond_z[c, 1] = _binomial_z(cond[c, 1], expected[c, 1], n_c)

    total_by_member = member_counts.sum(axis=0)
    n_total = int(total_by_member.sum())
    overall = total_by_member / n_total if n_total > 0 else np.zeros(2)
    overall_z = _binomial_z(float(overall[0]), 0.5, n_total)

    eta = density_from_ensemble(ensemble)
    targets = tuple(prob_coarse(eta, m) for m in (m_first, m_second))
    freqs = tuple(result.frequencies_for(c) for c in range(2))
    out_z = tuple(
        np.array([
            _binomial_z(float(f[mu]), float(t[mu]), result.successes_for(c))
            for mu in range(len(t))
        ])
        for c, (f, t) in enumerate(zip(freqs, targets))
    )

    discard_seed = (seed + 1) % _MAX_SEED
    fixed_result = simulate(SimConfig.fixed(ensemble, m_first, shots, discard_seed))
    fixed_members = fixed_result.member_counts_for(0)
    kept = fixed_members.copy()
    kept[0] //= 2
    kept_total = int(kept.sum())
    kept_prop = kept / kept_total if kept_total > 0 else np.zeros(2)
    discard = DiscardDemo(
        seed=discard_seed,
        member_counts=fixed_members,
        kept=kept,
        kept_proportions=kept_prop,
        z=_binomial_z(float(kept_prop[0]), 0.5, kept_total),
    )

    return ReversalReport(
        shots=shots,
        seed=seed,
        result=result,
        member_counts=member_counts,
        conditional_proportions=cond,
        expected_conditional=expected,
        conditional_z=cond_z,
        overall_proportions=overall,
        overall_z=overall_z,
        outcome_frequencies=freqs,
        outcome_targets=targets,
        outcome_z=out_z,
        separation=float(cond[0, 0] - cond[1, 0]),
        separation_expected=1.0 / 3.0,
        discard=discard,
    )
