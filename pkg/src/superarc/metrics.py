"""Complexity measures: BDM over a CTM table, block entropy, LZW, deflate."""
from __future__ import annotations

import math
import zlib
from collections import Counter
from dataclasses import dataclass

from .ctm import CtmTable, TableMiss, ctm_complexity

__all__ = [
    "DEFLATE_LEVEL",
    "BdmConfig",
    "bdm",
    "block_counts",
    "deflate_length",
    "lzw_codes",
    "lzw_length",
    "shannon_entropy",
]

#: zlib level used by :func:`deflate_length`; the empty input costs 8 bytes.
DEFLATE_LEVEL = 9

KEEP_REMAINDER = "keep-remainder"
DROP_REMAINDER = "drop-remainder"


@dataclass(frozen=True)
class BdmConfig:
    """Block decomposition settings.

    ``block_size`` defaults to the longest length at which the table holds
    every binary string, so any input decomposes without table misses.
    """

    table: CtmTable
    block_size: int | None = None
    boundary_policy: str = KEEP_REMAINDER

    def __post_init__(self):
        if self.block_size is None:
            object.__setattr__(self, "block_size", self.table.complete_length())
        if self.block_size < 1:
            raise ValueError("block_size must be positive")
        if self.block_size > self.table.max_length():
            raise ValueError(
                f"block_size {self.block_size} exceeds longest table key ({self.table.max_length()})"
            )
        if self.boundary_policy not in (KEEP_REMAINDER, DROP_REMAINDER):
            raise ValueError(f"unknown boundary policy {self.boundary_policy!r}")


def block_counts(s: str, cfg: BdmConfig) -> Counter:
    size = cfg.block_size
    blocks = [s[i:i + size] for i in range(0, len(s), size)]
    if blocks and len(blocks[-1]) < size and cfg.boundary_policy == DROP_REMAINDER:
        blocks.pop()
    return Counter(blocks)


def bdm(s: str, cfg: BdmConfig) -> float:
    """Sum over distinct blocks of CTM(block) + log2(multiplicity), in bits.

    Raises :class:`~superarc.ctm.TableMiss` naming the first block absent from
    the table.
    """
    if not s:
        raise ValueError("bdm of an empty string")
    counts = block_counts(s, cfg)
    if not counts:
        raise ValueError(f"no full block of size {cfg.block_size} in input of length {len(s)}")
    total = 0.0
    for block, mult in sorted(counts.items()):
        if block not in cfg.table:
            raise TableMiss(f"block {block!r} not in CTM table")
        total += ctm_complexity(cfg.table, block) + math.log2(mult)
    return total


def shannon_entropy(s, granularity: int = 1) -> float:
    """Entropy in bits per block of the non-overlapping ``granularity`` blocks.

    ``s`` may be a string or any sequence of hashable symbols; a trailing
    partial block is ignored.
    """
    if len(s) == 0:
        raise ValueError("entropy of empty input")
    if granularity < 1 or len(s) < granularity:
        raise ValueError(f"granularity {granularity} invalid for input of length {len(s)}")
    blocks = Counter(tuple(s[i:i + granularity]) for i in range(0, len(s) - granularity + 1, granularity))
    total = sum(blocks.values())
    return -sum(c / total * math.log2(c / total) for c in blocks.values()) + 0.0


def lzw_codes(s: str, alphabet=None) -> list[int]:
    """Standard LZW with the dictionary seeded by ``alphabet`` (default: symbols of ``s``)."""
    symbols = sorted(set(s) if alphabet is None else set(alphabet))
    if alphabet is not None and not set(s) <= set(symbols):
        raise ValueError("input contains symbols outside the alphabet")
    table = {sym: i for i, sym in enumerate(symbols)}
    out = []
    w = ""
    for ch in s:
        wc = w + ch
        if wc in table:
            w = wc
        else:
            out.append(table[w])
            table[wc] = len(table)
            w = ch
    if w:
        out.append(table[w])
    return out


def lzw_length(s: str, alphabet=None) -> int:
    return len(lzw_codes(s, alphabet))


def deflate_length(s) -> int:
    """Bytes of the zlib stream at :data:`DEFLATE_LEVEL`."""
    data = s.encode("utf-8") if isinstance(s, str) else bytes(s)
    return len(zlib.compress(data, DEFLATE_LEVEL))
