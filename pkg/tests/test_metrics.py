import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superarc.ctm import TableMiss, ctm_complexity
from superarc.metrics import (
    DROP_REMAINDER,
    BdmConfig,
    bdm,
    block_counts,
    deflate_length,
    lzw_codes,
    lzw_length,
    shannon_entropy,
)

bits = st.text(alphabet="01", min_size=1, max_size=60)


def test_default_block_size_is_complete_length(table3, cfg3):
    assert table3.complete_length() == 5
    assert cfg3.block_size == 5


def test_config_validation(table3):
    with pytest.raises(ValueError):
        BdmConfig(table3, block_size=12)
    with pytest.raises(ValueError):
        BdmConfig(table3, block_size=0)
    with pytest.raises(ValueError):
        BdmConfig(table3, boundary_policy="pad")


def test_repeated_blocks(table3, cfg3):
    s = "0" * 10
    assert bdm(s, cfg3) == ctm_complexity(table3, "00000") + 1.0


def test_distinct_blocks_plain_sum(table3, cfg3):
    s = "00000" + "01101"
    assert bdm(s, cfg3) == ctm_complexity(table3, "00000") + ctm_complexity(table3, "01101")


def test_remainder_policies(table3, cfg3):
    s = "0110100110" + "01"
    keep = bdm(s, cfg3)
    drop = bdm(s, BdmConfig(table3, boundary_policy=DROP_REMAINDER))
    assert keep == pytest.approx(drop + ctm_complexity(table3, "01"))
    assert sum(block_counts(s, cfg3).values()) == 3


def test_table_miss_names_block(table3):
    cfg = BdmConfig(table3, block_size=7)
    missing = next(s for s in map("".join, itertools.product("01", repeat=7)) if s not in table3)
    with pytest.raises(TableMiss, match=missing):
        bdm(missing * 2, cfg)


def test_empty_rejected(cfg3):
    with pytest.raises(ValueError):
        bdm("", cfg3)
    with pytest.raises(ValueError):
        shannon_entropy("")


@settings(max_examples=200, deadline=None)
@given(bits)
def test_bdm_complement_invariant(cfg3, s):
    comp = s.translate(str.maketrans("01", "10"))
    assert bdm(s, cfg3) == pytest.approx(bdm(comp, cfg3), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["00000", "01101", "11100", "10010", "00111"]), min_size=1, max_size=5, unique=True))
def test_all_distinct_blocks_is_plain_sum(table3, cfg3, blocks):
    assert bdm("".join(blocks), cfg3) == pytest.approx(sum(ctm_complexity(table3, b) for b in blocks))


def test_entropy_examples():
    assert shannon_entropy("0000") == 0.0
    assert shannon_entropy("0101") == 1.0
    assert shannon_entropy("0001") == pytest.approx(0.811278, abs=1e-6)
    assert shannon_entropy("00011011", 2) == 2.0


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="abc", min_size=1, max_size=40))
def test_entropy_bounded_by_alphabet(s):
    h = shannon_entropy(s)
    k = len(set(s))
    assert h <= math.log2(k) + 1e-12
    counts = {c: s.count(c) for c in set(s)}
    if len(set(counts.values())) == 1:
        assert h == pytest.approx(math.log2(k))
    else:
        assert h < math.log2(k)


def test_lzw_examples():
    assert lzw_codes("0" * 8, "01") == [0, 2, 3, 2]
    assert lzw_length("0" * 8, "01") == 4
    assert lzw_length("", "01") == 0
    rng = random.Random(3)
    noisy = "".join(rng.choice("01") for _ in range(64))
    assert shannon_entropy(noisy) > 0.95
    assert lzw_length("01" * 32, "01") < lzw_length(noisy, "01")


def test_lzw_rejects_foreign_symbols():
    with pytest.raises(ValueError):
        lzw_codes("012", "01")


@settings(max_examples=300, deadline=None)
@given(bits)
def test_lzw_never_longer_than_input(s):
    assert lzw_length(s, "01") <= len(s)


def test_deflate():
    assert deflate_length("") == 8
    rng = random.Random(5)
    noisy = "".join(rng.choice("abcdefghijklmnopqrstuvwxyz0123456789") for _ in range(1000))
    assert deflate_length("0" * 1000) < deflate_length(noisy)
    assert deflate_length("abc") == deflate_length(b"abc")
