"""Test sequences: embedded corpora, seeded generators, climbers, encodings."""
from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .ctm import CtmTable
from .metrics import BdmConfig, bdm, deflate_length, lzw_length, shannon_entropy

__all__ = [
    "CLASSES",
    "ENCODINGS",
    "CorpusIntegrityError",
    "EncodedItem",
    "SequenceItem",
    "by_class",
    "decode",
    "detect_climbers",
    "encode",
    "generate_class_corpus",
    "generate_random_binary",
    "load_corpus_file",
    "load_embedded_corpus",
    "metric_means",
    "write_corpus_file",
]

CLASSES = ("low", "medium", "high", "climber", "random-binary")
ENCODINGS = ("ascii-csv", "fixed-width-binary")

CORPUS_SHA256 = "1386ebd53da3aeb717edcff0418a4ef62aa0ce95a31594cefa3f4b9ec179edda"


class CorpusIntegrityError(ValueError):
    pass


@dataclass(frozen=True)
class SequenceItem:
    id: str
    values: tuple[int, ...]
    alphabet: str
    complexity_class: str
    source: str = "embedded"
    seed: int | None = None
    duplicate_of: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if self.alphabet not in ("binary", "integer"):
            raise ValueError(f"unknown alphabet {self.alphabet!r}")
        if self.complexity_class not in CLASSES:
            raise ValueError(f"unknown class {self.complexity_class!r}")
        if self.alphabet == "binary" and any(v not in (0, 1) for v in self.values):
            raise ValueError(f"{self.id}: binary item with non-binary values")

    @property
    def bits(self) -> str:
        """The values as a 0/1 string (binary items only)."""
        if self.alphabet != "binary":
            raise ValueError(f"{self.id} is not binary")
        return "".join(map(str, self.values))

    def to_json(self) -> dict:
        out = {"id": self.id, "class": self.complexity_class, "values": list(self.values), "source": self.source}
        if self.alphabet == "binary":
            out["alphabet"] = "binary"
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @classmethod
    def from_json(cls, d: dict) -> "SequenceItem":
        klass = d["class"]
        alphabet = d.get("alphabet") or ("binary" if klass in ("climber", "random-binary") else "integer")
        return cls(d["id"], tuple(d["values"]), alphabet, klass, d.get("source", "embedded"), d.get("seed"))


@dataclass(frozen=True)
class EncodedItem:
    item_id: str
    encoding_name: str
    payload: str
    width: int | None = None
    length: int = field(default=0)


@lru_cache(maxsize=1)
def _embedded_bytes() -> bytes:
    return resources.files("superarc").joinpath("data/corpus.json").read_bytes()


def load_embedded_corpus() -> list[SequenceItem]:
    """All shipped sequences; duplicated rows are kept and point at their first copy."""
    raw = _embedded_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != CORPUS_SHA256:
        raise CorpusIntegrityError(f"embedded corpus checksum mismatch: {digest}")
    items = [SequenceItem.from_json(d) for d in json.loads(raw)]
    seen: dict[tuple, str] = {}
    out = []
    for it in items:
        key = (it.complexity_class, it.values)
        dup = seen.setdefault(key, it.id)
        out.append(it if dup == it.id else SequenceItem(**{**asdict(it), "duplicate_of": dup}))
    return out


def by_class(items, klass: str) -> list[SequenceItem]:
    return [it for it in items if it.complexity_class == klass]


def generate_random_binary(length: int, count: int, seed: int) -> list[SequenceItem]:
    if length < 1 or count < 1:
        raise ValueError("length and count must be >= 1")
    rng = random.Random(seed)
    return [
        SequenceItem(
            f"rand-{seed}-{length}-{i:04d}",
            tuple(rng.getrandbits(1) for _ in range(length)),
            "binary",
            "random-binary",
            source="generated",
            seed=seed,
        )
        for i in range(count)
    ]


def _low_family(rng: random.Random, length: int) -> list[int]:
    if rng.random() < 0.5:
        step = rng.randint(1, 5)
        return [step * k for k in range(1, length + 1)]
    start = rng.randint(1, 20)
    return [start + k for k in range(length)]


def _medium_family(rng: random.Random, length: int) -> list[int]:
    kind = rng.choice(["fibonacci", "pell", "catalan", "powers", "squares"])
    if kind == "catalan":
        return [math.comb(2 * k, k) // (k + 1) for k in range(length)]
    if kind == "powers":
        base = rng.randint(2, 3)
        return [base ** k for k in range(length)]
    if kind == "squares":
        return [k * k for k in range(1, length + 1)]
    seq = [0, 1] if kind == "pell" else [rng.randint(1, 3), rng.randint(1, 4)]
    mult = 2 if kind == "pell" else 1
    while len(seq) < length:
        seq.append(mult * seq[-1] + seq[-2])
    return seq[:length]


def _high_family(rng: random.Random, length: int) -> list[int]:
    return sorted(rng.sample(range(1, 501), length))


def generate_class_corpus(per_class: int, seed: int, cfg: BdmConfig, length: int = 10) -> list[SequenceItem]:
    """Parameterised low/medium/high sequences, admitted only if mean BDM rises across classes.

    Raises :class:`CorpusIntegrityError` when the generated batch violates
    the ordering.
    """
    rng = random.Random(seed)
    items = []
    for klass, family in (("low", _low_family), ("medium", _medium_family), ("high", _high_family)):
        for i in range(per_class):
            items.append(
                SequenceItem(f"gen-{klass}-{seed}-{i:03d}", tuple(family(rng, length)), "integer", klass, "generated", seed)
            )
    means = [
        np.mean([bdm(encode(it, "fixed-width-binary").payload, cfg) for it in by_class(items, k)])
        for k in ("low", "medium", "high")
    ]
    if not means[0] < means[1] < means[2]:
        raise CorpusIntegrityError(f"generated batch fails class ordering: mean BDM {means}")
    return items


def encode(item: SequenceItem, encoding_name: str) -> EncodedItem:
    """Render ``item`` as ``ascii-csv`` or ``fixed-width-binary``.

    Fixed-width binary writes every value with the bit length of the largest
    one (at least 1) and concatenates them.
    """
    values = item.values
    if encoding_name == "ascii-csv":
        return EncodedItem(item.id, encoding_name, ",".join(map(str, values)), None, len(values))
    if encoding_name == "fixed-width-binary":
        if any(v < 0 for v in values):
            raise ValueError("fixed-width-binary does not support negative integers")
        width = max(1, max(values, default=0).bit_length())
        payload = "".join(format(v, f"0{width}b") for v in values)
        return EncodedItem(item.id, encoding_name, payload, width, len(values))
    raise ValueError(f"unknown encoding {encoding_name!r}")


def decode(enc: EncodedItem) -> tuple[int, ...]:
    if enc.encoding_name == "ascii-csv":
        return tuple(int(v) for v in enc.payload.split(",")) if enc.payload else ()
    if enc.encoding_name == "fixed-width-binary":
        w = enc.width
        return tuple(int(enc.payload[i:i + w], 2) for i in range(0, len(enc.payload), w))
    raise ValueError(f"unknown encoding {enc.encoding_name!r}")


def detect_climbers(
    table: CtmTable,
    candidates: list[str],
    epsilon: float = 1.0,
    cfg: BdmConfig | None = None,
) -> list[str]:
    """Candidates longer than the 90th length percentile of their complexity bucket.

    Table keys are scored by CTM and candidates by BDM under ``cfg`` (CTM when
    the candidate is itself a key). A candidate's bucket is every table key
    within ``epsilon`` bits of it plus the candidate itself; other candidates
    never enter it, so each verdict is independent of the rest of the batch.
    """
    cfg = cfg or BdmConfig(table)
    keys = list(table.counts)
    key_values = np.array([table.complexity(s) for s in keys])
    key_lengths = np.array([len(s) for s in keys])
    out = []
    for c in dict.fromkeys(candidates):
        value = table.complexity(c) if c in table else bdm(c, cfg)
        near = np.abs(key_values - value) <= epsilon
        lengths = np.append(key_lengths[near], len(c))
        if c in table:
            lengths = key_lengths[near]
        if len(c) > np.percentile(lengths, 90):
            out.append(c)
    return out


ORDERING_METRICS = ("bdm", "entropy", "lzw", "deflate")


def metric_means(
    items,
    cfg: BdmConfig,
    encoding_name: str = "fixed-width-binary",
    entropy_granularity: int = 8,
    classes=("low", "medium", "high"),
    distinct: bool = True,
) -> dict[str, dict[str, float]]:
    """Per-class mean of BDM, block entropy, LZW code count and deflate length.

    Items are encoded with ``encoding_name``; with ``distinct`` set, rows
    flagged as duplicates are left out so each sequence counts once.
    """
    out = {}
    for klass in classes:
        rows = [it for it in by_class(items, klass) if not (distinct and it.duplicate_of)]
        if not rows:
            raise ValueError(f"no items of class {klass!r}")
        payloads = [encode(it, encoding_name).payload for it in rows]
        alphabet = "01" if encoding_name == "fixed-width-binary" else None
        out[klass] = {
            "n": len(rows),
            "bdm": float(np.mean([bdm(p, cfg) for p in payloads])),
            "entropy": float(np.mean([shannon_entropy(p, entropy_granularity) for p in payloads])),
            "lzw": float(np.mean([lzw_length(p, alphabet) for p in payloads])),
            "deflate": float(np.mean([deflate_length(p) for p in payloads])),
        }
    return out


def write_corpus_file(items, path: str | Path) -> None:
    Path(path).write_text(json.dumps([it.to_json() for it in items], indent=1) + "\n")


def load_corpus_file(path: str | Path) -> list[SequenceItem]:
    return [SequenceItem.from_json(d) for d in json.loads(Path(path).read_text())]
