"""Single-candidate rounds: drafting, verification, sessions, exact law."""

import numpy as np
import pytest

from edgespec.checks import fuzz_categorical, fuzz_truncation
from edgespec.models import ModelPair, calibrate_divergence
from edgespec.perf import expected_tokens_per_round
from edgespec.prob import Categorical, TopK, overlap_mass, truncate, tv_distance
from edgespec.rng import Stream, derive
from edgespec.single import (
    draft_sequence,
    exact_output_law,
    run_session,
    verify_sequence,
)
from tests.conftest import StubPair, cat


@pytest.fixture
def pair():
    return ModelPair(32, 2, 0.35, 6.0, seed=2024)


# ---------------------------------------------------------------------------
# drafting
# ---------------------------------------------------------------------------

def test_point_mass_draft_is_deterministic():
    target = cat(0.5, 0.5)
    draft = cat(0.0, 1.0)
    stub = StubPair(2, target, draft)
    batch = draft_sequence(stub, (0,), 1, None, round_seed=4)
    assert batch.tokens == (1,)
    assert batch.payload_entries == (2,)  # dense transmission ships V entries


def test_full_width_truncation_drafts_identically(pair):
    dense = draft_sequence(pair, (1, 2), 4, None, round_seed=11)
    full = draft_sequence(pair, (1, 2), 4, TopK(32), round_seed=11)
    assert dense.tokens == full.tokens
    for a, b in zip(dense.dists, full.dists):
        # zero discarded mass makes truncation the exact identity
        assert (a.probs == b.probs).all()


def test_truncated_draft_stays_in_kept_set(pair):
    batch = draft_sequence(pair, (1, 2), 4, TopK(2), round_seed=3)
    assert batch.sparse is not None
    for tok, dist, payload in zip(batch.tokens, batch.dists, batch.sparse):
        assert dist.prob(tok) > 0.0
        assert tok in payload.token_ids.tolist()
        assert np.count_nonzero(dist.probs) <= 2
    assert all(e <= 2 for e in batch.payload_entries)
    assert all(s > 0.0 for s in batch.sigmas)


def test_draft_requires_positive_length(pair):
    with pytest.raises(ValueError):
        draft_sequence(pair, (1,), 0, None, round_seed=1)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def test_identical_laws_accept_everything():
    d = cat(0.3, 0.7)
    stub = StubPair(2, d, d)
    batch = draft_sequence(stub, (0,), 4, None, round_seed=8)
    out = verify_sequence(stub, (0,), batch, round_seed=8)
    assert out.accept_flags == (True,) * 4
    assert out.reject_position is None
    assert out.n_generated == 5  # four drafts plus the bonus token
    assert out.accepted == batch.tokens


def test_zero_target_probability_forces_rejection():
    target = cat(1.0, 0.0)  # target never emits token 1
    draft = cat(0.0, 1.0)  # draft always proposes token 1
    stub = StubPair(2, target, draft)
    batch = draft_sequence(stub, (0,), 3, None, round_seed=5)
    out = verify_sequence(stub, (0,), batch, round_seed=5)
    assert out.reject_position == 1
    assert out.accept_flags == (False,)
    assert out.final_token == 0  # resampled from the residual = target
    assert out.n_generated == 1


def test_acceptance_probability_matches_overlap_fraction():
    """Empirical accept rate of position 1 equals sum min(p, q)."""
    target = cat(0.6, 0.3, 0.1)
    draft = cat(0.2, 0.5, 0.3)
    stub = StubPair(3, target, draft)
    accepted = 0
    n = 20_000
    for i in range(n):
        batch = draft_sequence(stub, (0,), 1, None, round_seed=derive(1, i))
        out = verify_sequence(stub, (0,), batch, round_seed=derive(1, i))
        accepted += out.accept_flags[0]
    expect = overlap_mass(target, draft)
    assert abs(accepted / n - expect) < 3 * (expect * (1 - expect) / n) ** 0.5


def test_verify_consumes_position_keyed_streams(pair):
    """Re-verifying the same batch reproduces the outcome bit for bit."""
    batch = draft_sequence(pair, (3, 4), 4, TopK(8), round_seed=21)
    a = verify_sequence(pair, (3, 4), batch, round_seed=21)
    b = verify_sequence(pair, (3, 4), batch, round_seed=21)
    assert a == b


# ---------------------------------------------------------------------------
# sessions
# ---------------------------------------------------------------------------

def test_session_reaches_stop_length(pair):
    res = run_session(pair, (1, 2), 4, None, 40, session_seed=31)
    assert len(res.sequence) >= 40
    assert res.sequence[:2] == (1, 2)
    assert res.generated == sum(r.n_generated for r in res.rounds)


def test_session_rejects_short_stop(pair):
    with pytest.raises(ValueError):
        run_session(pair, (1, 2), 4, None, 2, session_seed=1)


def test_full_width_truncation_session_transcript_identical(pair):
    dense = run_session(pair, (1, 2), 4, None, 48, session_seed=7)
    full = run_session(pair, (1, 2), 4, TopK(32), 48, session_seed=7)
    assert dense.sequence == full.sequence
    for a, b in zip(dense.rounds, full.rounds):
        assert a.accepted == b.accepted
        assert a.final_token == b.final_token
        assert a.accept_flags == b.accept_flags


def test_single_step_session_is_plain_accept_or_resample(pair):
    res = run_session(pair, (1, 2), 1, None, 20, session_seed=13)
    for r in res.rounds:
        assert r.n_generated in (1, 2)
        assert len(r.accept_flags) == 1


def test_session_payload_accounting(pair):
    res = run_session(pair, (1, 2), 4, TopK(8), 40, session_seed=3)
    entries = sum(r.payload_entries for r in res.rounds)
    assert res.payload_bits(21) == entries * 21


def test_mean_tokens_per_round_tracks_formula():
    """Sessions at a calibrated acceptance rate land near the geometric-sum
    prediction for expected tokens per round (light version; the acceptance
    suite runs the full-size variant)."""
    lam = calibrate_divergence(128, 2, 25.0, seed=9, target_alpha=0.7)
    pair = ModelPair(128, 2, lam, 25.0, seed=9)
    total_rounds = 0
    total_tokens = 0
    for trial in range(80):
        res = run_session(pair, (5, 6), 4, None, 60, session_seed=derive(70, trial))
        total_rounds += res.n_rounds
        total_tokens += res.generated
    got = total_tokens / total_rounds
    assert got == pytest.approx(expected_tokens_per_round(0.7, 4), rel=0.05)


# ---------------------------------------------------------------------------
# exact output law
# ---------------------------------------------------------------------------

def test_exact_output_law_equals_target_on_fuzz():
    stream = Stream(404)
    for _ in range(300):
        v = 2 + stream.randint(63)
        p = fuzz_categorical(stream, v)
        q = fuzz_categorical(stream, v)
        law = exact_output_law(p, q)
        assert np.abs(law.probs - p.probs).max() <= 1e-12


def test_exact_output_law_with_truncated_draft():
    stream = Stream(405)
    for _ in range(300):
        v = 2 + stream.randint(63)
        p = fuzz_categorical(stream, v)
        q = fuzz_categorical(stream, v)
        q_hat, _ = truncate(q, fuzz_truncation(stream, v))
        law = exact_output_law(p, q_hat)
        assert np.abs(law.probs - p.probs).max() <= 1e-12


def test_exact_output_law_degenerate_branch():
    p = cat(0.5, 0.5)
    assert (exact_output_law(p, p).probs == p.probs).all()


def test_overlap_equals_one_minus_tv_on_truncated():
    q = cat(0.5, 0.3, 0.15, 0.05)
    p = cat(0.4, 0.1, 0.4, 0.1)
    q_hat, _ = truncate(q, TopK(2))
    assert overlap_mass(q_hat, p) == pytest.approx(1.0 - tv_distance(q_hat, p), abs=1e-12)


# ---------------------------------------------------------------------------
# the inverted-ratio debug flag breaks losslessness
# ---------------------------------------------------------------------------

def test_inverted_accept_ratio_is_lossy():
    """With the swapped ratio min(1, q/p) the emitted law visibly departs
    from the target (the correct rule keeps it exact)."""
    target = cat(0.8, 0.15, 0.05)
    draft = cat(1 / 3, 1 / 3, 1 / 3)
    stub = StubPair(3, target, draft)
    n = 20_000
    counts_ok = np.zeros(3)
    counts_bad = np.zeros(3)
    for i in range(n):
        seed = derive(606, i)
        batch = draft_sequence(stub, (0,), 1, None, round_seed=seed)
        good = verify_sequence(stub, (0,), batch, round_seed=seed)
        bad = verify_sequence(stub, (0,), batch, round_seed=seed, invert_ratio=True)
        counts_ok[good.emitted[0]] += 1
        counts_bad[bad.emitted[0]] += 1
    tv_ok = 0.5 * np.abs(counts_ok / n - target.probs).sum()
    tv_bad = 0.5 * np.abs(counts_bad / n - target.probs).sum()
    assert tv_ok < 0.02
    assert tv_bad > 0.1
