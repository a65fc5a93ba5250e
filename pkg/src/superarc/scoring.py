"""Test scores, prediction-task metrics, the BDM predictor and the betting checker."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .metrics import BdmConfig, bdm

__all__ = [
    "FRACTIONS",
    "BettingResult",
    "PredictionTask",
    "ScoreCard",
    "affine_positive",
    "bdm_predict_next",
    "betting_simulation",
    "delta_k",
    "general_similarity",
    "levenshtein",
    "next_bit_accuracy",
    "predict_continuation",
    "phi",
    "rho_vector",
    "score_records",
    "sort_similarity",
    "split_root_target",
    "supermartingale_value",
]

FRACTIONS = (0.10, 0.25, 0.50, 0.75)
# weights of the three correct classes in the final score
PHI_WEIGHTS = (1.0, 0.5, 0.25)


@dataclass(frozen=True)
class ScoreCard:
    model_id: str
    rho: tuple[float, float, float, float]
    delta: tuple[float, float, float]
    phi_a: float
    phi_b: float
    phi: float
    phi_positive: float | None = None
    counts: tuple[int, int, int, int] = (0, 0, 0, 0)

    def with_positive(self, value: float) -> "ScoreCard":
        return ScoreCard(self.model_id, self.rho, self.delta, self.phi_a, self.phi_b, self.phi, value, self.counts)

    def to_json(self) -> dict:
        return {
            "model_id": self.model_id,
            "rho": list(self.rho),
            "delta": list(self.delta),
            "phi_a": self.phi_a,
            "phi_b": self.phi_b,
            "phi": self.phi,
            "phi_positive": self.phi_positive,
            "counts": list(self.counts),
        }


def rho_vector(records) -> tuple[float, float, float, float]:
    """Fractions of records in (correct non-both, ordinal, print, incorrect)."""
    counts = Counter(r.result_class for r in records)
    total = sum(counts.values())
    if total == 0:
        raise ValueError("rho of an empty record set")
    return tuple(counts[k] / total for k in range(4))


def delta_k(answer_complexities, target_complexities) -> float:
    """Harmonic mean of target/answer complexity ratios: n / sum(M(R) / M(D)).

    Returns 0.0 for an empty class.
    """
    answers = list(answer_complexities)
    targets = list(target_complexities)
    if len(answers) != len(targets):
        raise ValueError("answer and target lists differ in length")
    if not answers:
        return 0.0
    if any(t <= 0 for t in targets):
        raise ValueError("target complexity must be positive")
    return len(answers) / math.fsum(a / t for a, t in zip(answers, targets))


def phi(rho, delta) -> tuple[float, float, float]:
    """Return ``(phi_a, phi_b, phi)`` for a result vector and class weights."""
    if len(rho) != 4 or len(delta) != 3:
        raise ValueError("rho needs 4 entries and delta 3")
    if abs(math.fsum(rho) - 1.0) > 1e-9:
        raise ValueError(f"rho must sum to 1, got {math.fsum(rho)}")
    phi_a = rho[0] + rho[1] + rho[2] - rho[3]
    phi_b = math.fsum(d * r for d, r in zip(delta, rho)) - rho[3]
    value = math.fsum(w * d * r for w, d, r in zip(PHI_WEIGHTS, delta, rho)) - rho[3]
    return phi_a, phi_b, value


def score_records(model_id: str, records) -> ScoreCard:
    """ScoreCard from evaluation records carrying answer and target complexities."""
    records = list(records)
    rho = rho_vector(records)
    delta = tuple(
        delta_k(
            [r.complexity_of_answer for r in records if r.result_class == k],
            [r.target_complexity for r in records if r.result_class == k],
        )
        for k in range(3)
    )
    counts = Counter(r.result_class for r in records)
    phi_a, phi_b, value = phi(rho, delta)
    return ScoreCard(model_id, rho, delta, phi_a, phi_b, value, None, tuple(counts[k] for k in range(4)))


def affine_positive(scores, alpha: float = 1.0, epsilon: float = 0.01) -> list[float]:
    """alpha * (s - min(scores)) + epsilon for every score."""
    scores = list(scores)
    if not scores:
        raise ValueError("no scores")
    if alpha <= 0 or epsilon <= 0:
        raise ValueError("alpha and epsilon must be positive")
    low = min(scores)
    return [alpha * (s - low) + epsilon for s in scores]


@dataclass(frozen=True)
class PredictionTask:
    item_id: str
    root: tuple
    target: tuple
    fraction: float


def split_root_target(item, fraction: float) -> PredictionTask:
    """Hold out the last floor(fraction * len) values (at least one) as the target."""
    if not any(math.isclose(fraction, f) for f in FRACTIONS):
        raise ValueError(f"fraction must be one of {FRACTIONS}")
    values = tuple(item.values)
    if len(values) < 2:
        raise ValueError("need at least two values")
    size = max(1, math.floor(fraction * len(values) + 1e-9))
    if size >= len(values):
        raise ValueError("root would be empty")
    return PredictionTask(item.id, values[:-size], values[-size:], fraction)


def sort_similarity(predicted, target) -> float:
    """Positional matches over |target|."""
    target = list(target)
    if not target:
        return 0.0
    return sum(p == t for p, t in zip(predicted, target)) / len(target)


def general_similarity(predicted, target) -> float:
    """Multiset intersection size over |target|; predictions are cut to |target|."""
    target = list(target)
    if not target:
        return 0.0
    common = Counter(list(predicted)[: len(target)]) & Counter(target)
    return sum(common.values()) / len(target)


def _as_digits(x) -> str:
    return x if isinstance(x, str) else "".join(map(str, x))


def levenshtein(a, b) -> int:
    """Edit distance; sequences are first rendered as comma-free digit strings."""
    a, b = _as_digits(a), _as_digits(b)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def bdm_predict_next(prefix: str, cfg: BdmConfig) -> str:
    """The bit whose extension has the lower BDM; ties go to "0"."""
    if not prefix:
        raise ValueError("empty prefix")
    zero, one = bdm(prefix + "0", cfg), bdm(prefix + "1", cfg)
    return "1" if one < zero else "0"


def predict_continuation(root: str, count: int, cfg: BdmConfig) -> str:
    """Extend ``root`` bit by bit with :func:`bdm_predict_next`."""
    out = root
    for _ in range(count):
        out += bdm_predict_next(out, cfg)
    return out[len(root):]


def next_bit_accuracy(bits: str, cfg: BdmConfig, min_prefix: int = 1) -> float:
    """Fraction of positions ``i >= min_prefix`` where the predictor guesses ``bits[i]`` from ``bits[:i]``."""
    if len(bits) <= min_prefix:
        raise ValueError("sequence too short for the requested prefix")
    hits = [bdm_predict_next(bits[:i], cfg) == bits[i] for i in range(min_prefix, len(bits))]
    return sum(hits) / len(hits)


def supermartingale_value(sigma: str, k: int, complexity) -> float:
    """2**|sigma| / 2**(k + K(sigma)) for a complexity function ``K`` in bits."""
    return 2.0 ** (len(sigma) - k - complexity(sigma))


@dataclass(frozen=True)
class BettingResult:
    trajectory: tuple[float, ...]
    deficiency: float
    band_constant: float | None = None
    band_holds: bool | None = None
    ratios: tuple[float, ...] = field(default=(), repr=False)

    @property
    def initial(self) -> float:
        return self.trajectory[0]

    @property
    def final(self) -> float:
        return self.trajectory[-1]

    @property
    def max_capital(self) -> float:
        return max(self.trajectory)


def betting_simulation(sequence: str, k: int, complexity, band_constant: float | None = None) -> BettingResult:
    """Capital d(sigma[:1]), ..., d(sigma[:n]) of the complexity-driven bettor.

    ``deficiency`` is the smallest C for which every visited prefix satisfies
    2**-C <= (d(s0) + d(s1)) / (2 d(s)) <= 2**C, checked over prefixes of
    length 1..n-1; ``band_holds`` compares it with ``band_constant``.
    """
    if not sequence:
        raise ValueError("empty sequence")
    traj = tuple(supermartingale_value(sequence[:i], k, complexity) for i in range(1, len(sequence) + 1))
    ratios = []
    for i in range(1, len(sequence)):
        s = sequence[:i]
        d0 = supermartingale_value(s + "0", k, complexity)
        d1 = supermartingale_value(s + "1", k, complexity)
        ratios.append((d0 + d1) / (2 * traj[i - 1]))
    deficiency = max((abs(math.log2(r)) for r in ratios), default=0.0)
    holds = None if band_constant is None else deficiency <= band_constant
    return BettingResult(traj, deficiency, band_constant, holds, tuple(ratios))
