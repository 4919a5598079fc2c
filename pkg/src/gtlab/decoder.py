"""Exhaustive maximum-likelihood decoding over all K-subsets.

The decoder scans candidate sets in lexicographic index order, scores each
with the per-test log-likelihood of the observed outcomes, and returns the
first maximizer.  A tie is any later candidate attaining the same maximum
under exact comparison; candidates with likelihood exactly zero (score
-inf) never participate in tie detection.

Scan order and scoring are deterministic, so results are identical across
platforms and thread counts.  Two exact prunings keep the scan fast
without changing its outcome:

* noise-free and additive channels force every member row of a
  finite-score candidate to be covered by the outcome (a row bit set where
  the outcome is 0 makes the score -inf), so only covered items need
  enumerating;
* for a fixed additive q in (0, 1) the score is a strictly decreasing
  function of the number of uncovered positive tests, an integer, so
  maxima and ties are integer comparisons.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bitops import popcount, unpack_bits
from .errors import CapacityError, ParameterError
from .model import (
    ADDITIVE,
    DILUTION,
    Codebook,
    DefectiveSet,
    NoiseModel,
    OutcomeVector,
    _check_members,
    _or_words,
)

DEFAULT_BUDGET = 10**8
_CHUNK = 8192
_CACHE_LIMIT = 1 << 21  # combination tables up to ~2M rows are memoized


@dataclass(frozen=True)
class DecodeResult:
    best_set: DefectiveSet
    log_likelihood: float
    tie: bool
    n_evaluated: int


def miss_distance(true_set: DefectiveSet, decoded_set: DefectiveSet) -> int:
    """Number of true items absent from the decoded set."""
    if len(true_set) != len(decoded_set):
        raise ParameterError(
            f"sets must have equal cardinality, got {len(true_set)} and {len(decoded_set)}"
        )
    return len(set(true_set.indices) - set(decoded_set.indices))


def _nlog2(count: int, x: float) -> float:
    """count * log2(x) with the conventions 0*log2(0) = 0 and log2(0) = -inf."""
    if count == 0:
        return 0.0
    if x == 0.0:
        return -math.inf
    return count * math.log2(x)


def log_likelihood(
    codebook: Codebook,
    candidate_set: DefectiveSet,
    outcome: OutcomeVector,
    noise_model: NoiseModel,
) -> float:
    """log2 P(outcome | candidate_set) under the channel's per-test law.

    Noise-free: 0 when the OR of the candidate rows equals the outcome,
    -inf otherwise.  Additive: a positive OR with a negative outcome is
    impossible; otherwise each uncovered positive test contributes
    log2 q and each negative test log2(1-q).  Dilution: with c candidate
    members in a test, a negative outcome contributes c*log2 u and a
    positive one log2(1 - u**c).
    """
    if outcome.n_tests != codebook.n_tests:
        raise ParameterError(
            f"outcome has {outcome.n_tests} tests but codebook has {codebook.n_tests}"
        )
    idx = _check_members(codebook, candidate_set)
    or_words = _or_words(codebook, idx)
    y_words = outcome.words

    if noise_model.kind == ADDITIVE:
        if popcount(or_words & ~y_words) > 0:
            return -math.inf
        n_pos = int(popcount(y_words))
        n_covered = int(popcount(or_words))
        return _nlog2(n_pos - n_covered, noise_model.q) + _nlog2(
            codebook.n_tests - n_pos, 1.0 - noise_model.q
        )
    if noise_model.kind == DILUTION:
        counts = unpack_bits(codebook.words[idx], codebook.n_tests).sum(axis=0, dtype=np.int64)
        y = outcome.bits()
        pos_counts = counts[y == 1]
        if (pos_counts == 0).any():
            return -math.inf
        ll = _nlog2(int(counts[y == 0].sum()), noise_model.u)
        if pos_counts.size:
            surviving = 1.0 - np.float_power(noise_model.u, pos_counts)
            if (surviving == 0.0).any():
                return -math.inf
            ll += float(np.log2(surviving).sum())
        return ll
    # noise-free
    return 0.0 if np.array_equal(or_words, y_words) else -math.inf


@lru_cache(maxsize=8)
def _combo_table(n: int, k: int) -> np.ndarray:
    """All K-combinations of range(n) in lexicographic order, as an (M, k) int32 array."""
    combos = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(n), k)),
        dtype=np.int32,
        count=math.comb(n, k) * k,
    )
    return combos.reshape(-1, k)


def _combo_chunks(n: int, k: int, chunk: int = _CHUNK):
    """Yield lexicographic combination blocks as (B, k) int arrays."""
    total = math.comb(n, k)
    if total <= _CACHE_LIMIT:
        table = _combo_table(n, k)
        for start in range(0, total, chunk):
            yield table[start : start + chunk]
        return
    it = itertools.combinations(range(n), k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=np.int32)


def _first_lex_set(k: int) -> DefectiveSet:
    return DefectiveSet(tuple(range(k)))


@dataclass
class _ScanState:
    """Running (max score, first argmax, count at max) over ordered chunks."""

    best: float = -math.inf
    best_idx: np.ndarray | None = None
    at_max: int = 0

    def update(self, scores: np.ndarray, idx: np.ndarray) -> None:
        finite = scores > -math.inf
        if not finite.any():
            return
        m = float(scores[finite].max())
        if m > self.best:
            self.best = m
            hits = np.flatnonzero(scores == m)
            self.best_idx = np.array(idx[hits[0]])
            self.at_max = int(hits.size)
        elif m == self.best:
            self.at_max += int((scores == m).sum())

    def result(self, k: int, n_evaluated: int) -> DecodeResult:
        if self.best_idx is None:
            return DecodeResult(_first_lex_set(k), -math.inf, False, n_evaluated)
        best_set = DefectiveSet(tuple(int(v) for v in self.best_idx))
        return DecodeResult(best_set, self.best, self.at_max >= 2, n_evaluated)


def _covered_items(codebook: Codebook, outcome: OutcomeVector) -> np.ndarray:
    """Items whose rows are bitwise covered by the outcome (row & ~y == 0)."""
    stray = popcount(codebook.words & ~outcome.words[None, :], axis=-1)
    return np.flatnonzero(stray == 0)


def _decode_cover(codebook: Codebook, outcome: OutcomeVector, k: int, total: int) -> DecodeResult:
    """Noise-free law (also additive q=0 and dilution u=0): score 0 iff OR == outcome."""
    pool = _covered_items(codebook, outcome)
    y_pop = int(popcount(outcome.words))
    state = _ScanState()
    if pool.size >= k:
        for local in _combo_chunks(int(pool.size), k):
            rows = codebook.words[pool[local]]
            or_words = np.bitwise_or.reduce(rows, axis=1)
            covered = popcount(or_words, axis=-1) == y_pop
            scores = np.where(covered, 0.0, -math.inf)
            state.update(scores, pool[local])
            # the maximum possible score is 0; once seen, later chunks only add ties
    return state.result(k, total)


def _decode_additive(
    codebook: Codebook, outcome: OutcomeVector, k: int, q: float, total: int
) -> DecodeResult:
    pool = _covered_items(codebook, outcome)
    y_pop = int(popcount(outcome.words))
    base = _nlog2(codebook.n_tests - y_pop, 1.0 - q)
    log_q = math.log2(q)
    state = _ScanState()
    if pool.size >= k:
        for local in _combo_chunks(int(pool.size), k):
            rows = codebook.words[pool[local]]
            or_pop = popcount(np.bitwise_or.reduce(rows, axis=1), axis=-1)
            scores = base + (y_pop - or_pop) * log_q
            state.update(scores, pool[local])
    return state.result(k, total)


def _decode_dilution(
    codebook: Codebook, outcome: OutcomeVector, k: int, u: float, total: int
) -> DecodeResult:
    bits = codebook.dense_bits()
    y = outcome.bits()
    neg_hits = (bits & (y == 0)).sum(axis=1, dtype=np.int64)  # per-item pooled-in-negative count
    pos_bits = bits[:, y == 1]
    log_u = math.log2(u)
    # log2(1 - u**c) for c = 0..k; c = 0 in a positive test is impossible (masked below)
    lut = np.full(k + 1, -math.inf)
    with np.errstate(divide="ignore"):
        lut[1:] = np.log2(1.0 - np.float_power(u, np.arange(1, k + 1)))
    state = _ScanState()
    for idx in _combo_chunks(codebook.n_items, k):
        neg_weight = neg_hits[idx].sum(axis=1)
        counts = pos_bits[idx].sum(axis=1, dtype=np.int64)  # (B, n_positive_tests)
        scores = neg_weight * log_u + lut[counts].sum(axis=1)
        scores[(counts == 0).any(axis=1)] = -math.inf
        state.update(scores, idx)
    return state.result(k, total)


def ml_decode(
    codebook: Codebook,
    outcome: OutcomeVector,
    k: int,
    noise_model: NoiseModel,
    budget: int = DEFAULT_BUDGET,
) -> DecodeResult:
    """Scan all C(N, K) candidate sets; return the first maximizer and a tie flag.

    ``n_evaluated`` reports the logical scan size C(N, K); candidates ruled
    out in bulk (score provably -inf) are scored as a class, which does not
    change the maximizer, the tie flag, or determinism.
    """
    if outcome.n_tests != codebook.n_tests:
        raise ParameterError(
            f"outcome has {outcome.n_tests} tests but codebook has {codebook.n_tests}"
        )
    if not 1 <= k <= codebook.n_items:
        raise ParameterError(f"need 1 <= K <= N, got K={k}, N={codebook.n_items}")
    total = math.comb(codebook.n_items, k)
    if total > budget:
        raise CapacityError(
            f"decoding needs {total} set evaluations, above the budget of {budget}; "
            f"pass budget={total} to force the scan"
        )
    if noise_model.deterministic:
        return _decode_cover(codebook, outcome, k, total)
    if noise_model.kind == ADDITIVE:
        if noise_model.q == 1.0:
            # every test reads positive regardless of the pool: all sets score
            # 0 when the outcome is all ones, -inf otherwise
            all_ones = int(popcount(outcome.words)) == codebook.n_tests
            score = 0.0 if all_ones else -math.inf
            tie = all_ones and total >= 2
            return DecodeResult(_first_lex_set(k), score, tie, total)
        return _decode_additive(codebook, outcome, k, noise_model.q, total)
    if noise_model.u == 1.0:
        all_zero = int(popcount(outcome.words)) == 0
        score = 0.0 if all_zero else -math.inf
        tie = all_zero and total >= 2
        return DecodeResult(_first_lex_set(k), score, tie, total)
    return _decode_dilution(codebook, outcome, k, noise_model.u, total)


def dump_decode_trace(
    codebook: Codebook,
    outcome: OutcomeVector,
    k: int,
    noise_model: NoiseModel,
    path,
    budget: int = DEFAULT_BUDGET,
) -> None:
    """Debug dump: one CSV row (candidate, log2 likelihood) per candidate set.

    Scores every set through the public single-set scorer, so this is slow
    and meant for small instances only."""
    total = math.comb(codebook.n_items, k)
    if total > budget:
        raise CapacityError(f"trace would cover {total} sets, above the budget of {budget}")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["candidate", "log2_likelihood"])
        for members in itertools.combinations(range(codebook.n_items), k):
            score = log_likelihood(codebook, DefectiveSet(members), outcome, noise_model)
            writer.writerow([" ".join(map(str, members)), score])
