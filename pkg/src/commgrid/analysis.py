"""Quantitative metrics over episode logs.

Everything here is a pure function of the logs: collaborative efficiency
(mean steps over a final window), the attenuation rate between conditions,
Shannon entropy and Jensen-Shannon divergence of symbol distributions
(both in bits), Welch's unequal-variance t-test with p-values from the
regularized incomplete beta function, and a contingency-table probing
classifier that predicts the sender's quadrant context from the emitted
symbol.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .gridworld import N_SYMBOLS
from .training import EpisodeRecord, RunResult

DIST_TOL = 1e-9


def _records(run: RunResult | Sequence[EpisodeRecord]) -> list[EpisodeRecord]:
    return list(run.episodes) if isinstance(run, RunResult) else list(run)


def validate_distribution(d: np.ndarray | Sequence[float]) -> np.ndarray:
    """Check a 4-way distribution: non-negative, sums to 1 within 1e-9."""
    d = np.asarray(d, dtype=float)
    if d.shape != (N_SYMBOLS,):
        raise ValueError(f"expected {N_SYMBOLS} probabilities, got shape {d.shape}")
    if np.any(d < 0.0):
        raise ValueError("probabilities must be non-negative")
    if abs(float(d.sum()) - 1.0) > DIST_TOL:
        raise ValueError(f"probabilities sum to {d.sum()!r}, not 1")
    return d


def shannon_entropy(d: np.ndarray | Sequence[float]) -> float:
    """-sum p log2 p in bits, with 0 log 0 = 0. At most 2 bits for 4 symbols."""
    d = validate_distribution(d)
    nz = d[d > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def js_divergence(p: np.ndarray | Sequence[float], q: np.ndarray | Sequence[float]) -> float:
    """JSD(p, q) = H((p+q)/2) - (H(p) + H(q))/2, base 2; lies in [0, 1]."""
    p = validate_distribution(p)
    q = validate_distribution(q)
    return shannon_entropy((p + q) / 2.0) - (shannon_entropy(p) + shannon_entropy(q)) / 2.0


def attenuation_rate(s_psp: float, s_ec: float) -> float:
    """Percent extra steps the pre-defined protocol costs over the emergent one."""
    if s_ec <= 0.0:
        raise ValueError(f"emergent mean steps must be positive, got {s_ec}")
    return (s_psp - s_ec) / s_ec * 100.0


def mean_final_steps(run: RunResult | Sequence[EpisodeRecord], window: int = 100) -> float:
    """Arithmetic mean of episode lengths over the last ``window`` episodes."""
    records = _records(run)
    if not records:
        raise ValueError("no episodes to average")
    if not 1 <= window <= len(records):
        raise ValueError(f"window must be in [1, {len(records)}], got {window}")
    return float(np.mean([r.steps for r in records[-window:]]))


def symbol_counts(
    records: Sequence[EpisodeRecord], window: int, agent: int | None = None
) -> np.ndarray:
    """Raw emission counts per symbol over the last ``window`` episodes."""
    if not 1 <= window <= len(records):
        raise ValueError(f"window must be in [1, {len(records)}], got {window}")
    counts = np.zeros(N_SYMBOLS, dtype=int)
    for record in records[-window:]:
        for entry in record.symbols:
            if agent is None or entry.agent == agent:
                counts[entry.symbol] += 1
    return counts


def symbol_distribution(
    records: RunResult | Sequence[EpisodeRecord], window: int, agent: int | None = None
) -> np.ndarray:
    """Normalized emission frequencies, pooled across agents unless one is given."""
    counts = symbol_counts(_records(records), window, agent)
    total = counts.sum()
    if total == 0:
        raise ValueError("no symbol emissions in the requested window")
    return counts / total


def _betacf(a: float, b: float, x: float, max_iter: int = 300, eps: float = 3e-14) -> float:
    """Continued fraction for the incomplete beta, by the modified Lentz method."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RuntimeError(f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return float(x)
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


class WelchResult(NamedTuple):
    t: float
    df: float
    p: float


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Unequal-variance two-sample t-test, two-tailed.

    Degrees of freedom by Welch-Satterthwaite; the p-value comes from the
    t-distribution tail expressed through the regularized incomplete beta.
    Two degenerate samples (both zero variance) with equal means return
    t=0, p=1 by convention.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError(f"each sample needs at least 2 values, got {a.size} and {b.size}")
    na, nb = a.size, b.size
    va, vb = float(np.var(a, ddof=1)), float(np.var(b, ddof=1))
    mean_diff = float(np.mean(a) - np.mean(b))
    se2 = va / na + vb / nb
    if se2 == 0.0:
        if mean_diff == 0.0:
            return WelchResult(t=0.0, df=float(na + nb - 2), p=1.0)
        raise ValueError("both samples have zero variance but different means")
    t = mean_diff / math.sqrt(se2)
    df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return WelchResult(t=t, df=df, p=min(max(p, 0.0), 1.0))


@dataclass
class ProbeDataset:
    """(symbol, context) pairs plus the episode index used for splitting."""

    symbols: np.ndarray
    contexts: np.ndarray
    episode_index: np.ndarray

    def __len__(self) -> int:
        return len(self.symbols)

    @classmethod
    def from_records(
        cls, records: RunResult | Sequence[EpisodeRecord], window: int | None = None
    ) -> ProbeDataset:
        records = _records(records)
        if window is not None:
            if not 1 <= window <= len(records):
                raise ValueError(f"window must be in [1, {len(records)}], got {window}")
            records = records[-window:]
        symbols, contexts, episodes = [], [], []
        for record in records:
            for entry in record.symbols:
                symbols.append(entry.symbol)
                contexts.append(entry.context)
                episodes.append(record.index)
        return cls(
            symbols=np.array(symbols, dtype=int),
            contexts=np.array(contexts, dtype=int),
            episode_index=np.array(episodes, dtype=int),
        )


def probe_accuracy(data: ProbeDataset, split_seed: int, train_fraction: float = 0.8) -> float:
    """Held-out accuracy of the symbol -> most-frequent-context classifier.

    Episodes (not individual emissions) are shuffled into train and test
    splits so no episode straddles the boundary. Each symbol maps to its
    most frequent training context (ties to the lowest label); a symbol
    never seen in training predicts the global majority context.
    """
    if len(data) == 0:
        raise ValueError("probe dataset is empty")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    episodes = np.unique(data.episode_index)
    n_train = int(train_fraction * len(episodes))
    if n_train == 0 or n_train == len(episodes):
        raise ValueError(
            f"episode split {n_train}/{len(episodes) - n_train} leaves an empty train or test set"
        )
    order = np.random.default_rng(split_seed).permutation(len(episodes))
    train_eps = set(episodes[order[:n_train]].tolist())
    in_train = np.array([e in train_eps for e in data.episode_index])

    table = np.zeros((N_SYMBOLS, N_SYMBOLS), dtype=int)
    np.add.at(table, (data.symbols[in_train], data.contexts[in_train]), 1)
    majority = int(np.argmax(table.sum(axis=0)))
    prediction = np.where(table.sum(axis=1) > 0, np.argmax(table, axis=1), majority)

    test_symbols = data.symbols[~in_train]
    test_contexts = data.contexts[~in_train]
    if test_symbols.size == 0:
        raise ValueError("test split contains no emissions")
    return float(np.mean(prediction[test_symbols] == test_contexts))
