"""Coding Theorem Method: exhaustive enumeration of small Turing machines.

Machines are busy-beaver style ``(n, 2)`` machines. Each of the ``2n``
``(state, read)`` pairs maps to one of ``4n + 2`` actions: ``4n`` regular
actions (write, move, next state) and two write-and-halt actions. A machine
index is the base-``(4n+2)`` number whose digit ``2*(state-1) + read`` is the
action code for that pair, so indices and transition tables are in bijection.

Output convention
-----------------
A machine starts in state 1 on a blank tape, head at the origin. The halting
transition writes and stops without moving. On halt the output is the
contiguous region of cells the head visited, read left to right. Machines
still running after ``step_budget`` steps contribute nothing.

Every machine is run on both blank symbols. The run of ``M`` on the all-1
tape is the complement of the run of ``complement(M)`` on the all-0 tape, so
only the all-0 runs are simulated and each halting run also credits the
complemented output. Program identifiers ``p < N`` denote machine ``p`` on
blank 0, ``p >= N`` machine ``p - N`` on blank 1 (``N`` = class size).
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numba
import numpy as np

__all__ = [
    "DEFAULT_BUDGETS",
    "CtmEntry",
    "CtmTable",
    "MachineSpec",
    "ResourceCapExceeded",
    "TableMiss",
    "UnsupportedOperation",
    "class_size",
    "ctm_complexity",
    "enumerate_machines",
    "levin_probability",
    "load_table",
    "program_length_bits",
    "program_set",
    "read_table",
    "simulate",
    "write_table",
]

#: Busy-beaver step maxima for (n, 2) machines under this formalism.
DEFAULT_BUDGETS = {1: 1, 2: 6, 3: 21, 4: 107}

# key layout: output bits in the low 32 bits, output length above them
_LEN_SHIFT = 32
_MAX_OUTPUT_LEN = 32
# dense tally arrays hold 2 << _DENSE_MAX_LEN slots per worker
_DENSE_MAX_LEN = 22


class TableMiss(KeyError):
    """Raised when a string has no entry in a CTM table."""


class UnsupportedOperation(RuntimeError):
    """Raised when a table was built without the data an operation needs."""


class ResourceCapExceeded(RuntimeError):
    """Raised instead of returning a truncated table."""


def class_size(n: int) -> int:
    return (4 * n + 2) ** (2 * n)


def program_length_bits(n: int) -> int:
    """Fixed-width length of a machine index: ceil(2n * log2(4n + 2))."""
    return math.ceil(2 * n * math.log2(4 * n + 2))


@dataclass(frozen=True)
class MachineSpec:
    """Decoded transition table.

    ``table[(state, read)]`` is ``(write, move, next_state)`` with ``move`` in
    ``{-1, +1}``, or ``(write, 0, 0)`` for a halting action. States are 1-based.
    """

    states: int
    table: dict

    @classmethod
    def from_index(cls, n: int, index: int) -> "MachineSpec":
        if not 0 <= index < class_size(n):
            raise ValueError(f"machine index {index} out of range for n={n}")
        base = 4 * n + 2
        table = {}
        for slot in range(2 * n):
            index, code = divmod(index, base)
            table[(slot // 2 + 1, slot % 2)] = _decode_action(n, code)
        return cls(n, table)

    def to_index(self) -> int:
        n = self.states
        if len(self.table) != 2 * n:
            raise ValueError("transition table must have 2n entries")
        base = 4 * n + 2
        index = 0
        for slot in reversed(range(2 * n)):
            entry = self.table[(slot // 2 + 1, slot % 2)]
            index = index * base + _encode_action(n, entry)
        return index


def _decode_action(n: int, code: int) -> tuple[int, int, int]:
    if code >= 4 * n:
        return (code - 4 * n, 0, 0)
    write = code & 1
    move = 1 if (code >> 1) & 1 else -1
    return (write, move, (code >> 2) + 1)


def _encode_action(n: int, entry: tuple[int, int, int]) -> int:
    write, move, nxt = entry
    if write not in (0, 1):
        raise ValueError(f"bad write symbol {write}")
    if move == 0:
        return 4 * n + write
    if move not in (-1, 1) or not 1 <= nxt <= n:
        raise ValueError(f"bad action {entry}")
    return ((nxt - 1) * 2 + (1 if move == 1 else 0)) * 2 + write


@numba.njit(cache=True, nogil=True)
def _run(n, index, budget, blank, tape):
    """Simulate one machine; returns (output_len, output_bits, steps).

    ``output_len`` is -1 for machines that do not halt within ``budget`` and
    -2 for outputs too long for the key space. Two cases are decided early
    without changing any halting result: tables with no halting action, and a
    head entering fresh blank tape in a state that keeps moving the same way
    in the same state.
    """
    base = 4 * n + 2
    codes = np.empty(2 * n, dtype=np.int64)
    rest = index
    halts = False
    for slot in range(2 * n):
        codes[slot] = rest % base
        rest //= base
        if codes[slot] >= 4 * n:
            halts = True
    if not halts:
        return -1, 0, budget
    size = tape.shape[0]
    for i in range(size):
        tape[i] = blank
    head = size // 2
    lo = head
    hi = head
    state = 0
    steps = 0
    while steps < budget:
        code = codes[2 * state + tape[head]]
        steps += 1
        if code >= 4 * n:
            tape[head] = code - 4 * n
            length = hi - lo + 1
            if length > 32:
                return -2, 0, steps
            bits = 0
            for i in range(lo, hi + 1):
                bits = (bits << 1) | tape[i]
            return length, bits, steps
        tape[head] = code & 1
        state = code >> 2
        if (code >> 1) & 1:
            head += 1
            if head > hi:
                hi = head
                nxt = codes[2 * state + blank]
                if nxt < 4 * n and (nxt >> 2) == state and (nxt >> 1) & 1:
                    return -1, 0, budget
        else:
            head -= 1
            if head < lo:
                lo = head
                nxt = codes[2 * state + blank]
                if nxt < 4 * n and (nxt >> 2) == state and not (nxt >> 1) & 1:
                    return -1, 0, budget
    return -1, 0, steps


@numba.njit(cache=True, nogil=True)
def _reflect_index(n, index):
    base = 4 * n + 2
    out = 0
    mult = 1
    rest = index
    for _ in range(2 * n):
        code = rest % base
        rest //= base
        if code < 4 * n:
            code ^= 2
        out += code * mult
        mult *= base
    return out


@numba.njit(cache=True, nogil=True)
def _run_range(n, start, stop, budget, reflect_reduce, keys, steps_out):
    """Fill per-machine output keys and halting steps for ``[start, stop)``.

    With ``reflect_reduce`` only machines with ``index <= reflect(index)`` are
    simulated; the others get key -3 and are credited by their twin.
    """
    tape = np.zeros(2 * budget + 3, dtype=np.int64)
    for i in range(stop - start):
        index = start + i
        if reflect_reduce and _reflect_index(n, index) < index:
            keys[i] = -3
            steps_out[i] = 0
            continue
        length, bits, steps = _run(n, index, budget, 0, tape)
        steps_out[i] = steps
        if length == -2:
            keys[i] = -2
        elif length < 0:
            keys[i] = -1
        else:
            keys[i] = (length << 32) | bits


@numba.njit(cache=True, nogil=True)
def _reverse_bits(bits, length):
    out = 0
    for _ in range(length):
        out = (out << 1) | (bits & 1)
        bits >>= 1
    return out


@numba.njit(cache=True, nogil=True)
def _count_range(n, start, stop, budget, reflect_reduce, max_len, counts, min_steps):
    """Tally blank-0 outputs of ``[start, stop)`` into dense arrays.

    Slot ``(1 << length) | bits`` holds the count for an output. Returns
    ``(max_halting_steps, overflow)``; ``overflow`` is set when an output is
    longer than ``max_len``.
    """
    tape = np.zeros(2 * budget + 3, dtype=np.int64)
    max_steps = 0
    for index in range(start, stop):
        twin = index
        if reflect_reduce:
            twin = _reflect_index(n, index)
            if twin < index:
                continue
        length, bits, steps = _run(n, index, budget, 0, tape)
        if length == -2:
            return max_steps, True
        if length < 0:
            continue
        if length > max_len:
            return max_steps, True
        if steps > max_steps:
            max_steps = steps
        slot = (1 << length) | bits
        counts[slot] += 1
        if steps < min_steps[slot]:
            min_steps[slot] = steps
        if twin != index:
            slot = (1 << length) | _reverse_bits(bits, length)
            counts[slot] += 1
            if steps < min_steps[slot]:
                min_steps[slot] = steps
    return max_steps, False


def _key(length: int, bits: int) -> int:
    return (length << _LEN_SHIFT) | bits


def _key_to_str(key: int) -> str:
    length = key >> _LEN_SHIFT
    return format(key & ((1 << _LEN_SHIFT) - 1), f"0{length}b")


def _str_to_key(s: str) -> int:
    if not s or any(c not in "01" for c in s) or len(s) > _MAX_OUTPUT_LEN:
        return -1
    return _key(len(s), int(s, 2))


def _complement_keys(keys: np.ndarray) -> np.ndarray:
    lengths = keys >> _LEN_SHIFT
    mask = (np.int64(1) << lengths) - 1
    return (lengths << _LEN_SHIFT) | ((keys & ((1 << _LEN_SHIFT) - 1)) ^ mask)


def _reverse_keys(keys: np.ndarray) -> np.ndarray:
    lengths = keys >> _LEN_SHIFT
    bits = keys & ((1 << _LEN_SHIFT) - 1)
    out = np.zeros_like(bits)
    for i in range(int(lengths.max(initial=0))):
        live = lengths > i
        bit = (bits >> i) & 1
        out = np.where(live, out | (bit << np.maximum(lengths - 1 - i, 0)), out)
    return (lengths << _LEN_SHIFT) | out


def _complement_index(n: int, index: np.ndarray) -> np.ndarray:
    """Index of the machine with read and write symbols swapped."""
    base = 4 * n + 2
    digits = []
    rest = index.copy()
    for _ in range(2 * n):
        digits.append(rest % base)
        rest //= base
    out = np.zeros_like(index)
    mult = 1
    for slot in range(2 * n):
        code = digits[slot ^ 1]  # reading 0 becomes reading 1
        code = np.where(code >= 4 * n, 4 * n + (1 - (code - 4 * n)), code ^ 1)
        out += code * mult
        mult *= base
    return out


@dataclass(frozen=True)
class CtmEntry:
    count: int
    complexity_bits: float
    min_halt_steps: int
    programs: tuple[int, ...] | None = None
    programs_truncated: bool = False


@dataclass(frozen=True)
class CtmTable:
    """Empirical output distribution of an ``(n, 2)`` machine class.

    Immutable after construction. ``counts`` maps binary strings to the number
    of halting runs producing them. Program identifiers and their halting
    steps are kept only when the table was built with ``retain_programs``.
    """

    n: int
    step_budget: int
    counts: dict[str, int]
    min_steps: dict[str, int]
    total_halting: int
    machines_examined: int
    max_observed_steps: int = 0
    _programs: dict[str, np.ndarray] | None = field(default=None, repr=False)
    _program_steps: dict[str, np.ndarray] | None = field(default=None, repr=False)

    @property
    def machine_class(self) -> tuple[int, int]:
        return (self.n, 2)

    @property
    def has_programs(self) -> bool:
        return self._programs is not None

    def __contains__(self, s: str) -> bool:
        return s in self.counts

    def __len__(self) -> int:
        return len(self.counts)

    def complexity(self, s: str) -> float:
        return ctm_complexity(self, s)

    def entry(self, s: str) -> CtmEntry:
        if s not in self.counts:
            raise TableMiss(s)
        programs = None
        if self._programs is not None:
            programs = tuple(int(p) for p in self._programs[s])
        return CtmEntry(self.counts[s], ctm_complexity(self, s), self.min_steps[s], programs)

    def strings(self, length: int | None = None) -> list[str]:
        keys = (s for s in self.counts if length is None or len(s) == length)
        return sorted(keys, key=lambda s: (len(s), s))

    def max_length(self) -> int:
        return max(map(len, self.counts), default=0)

    def complete_length(self) -> int:
        """Largest L such that every binary string of length 1..L is a key."""
        per_length = Counter(map(len, self.counts))
        length = 0
        while per_length.get(length + 1, 0) == 2 ** (length + 1):
            length += 1
        return length


def enumerate_machines(
    n: int,
    step_budget: int | None = None,
    retain_programs: bool = False,
    workers: int = 1,
    chunk_size: int | None = None,
    allow_n4: bool = False,
    reflect_reduce: bool | None = None,
    max_machines: int | None = None,
) -> CtmTable:
    """Run every ``(n, 2)`` machine from a blank tape and tabulate outputs.

    The class is split into contiguous index chunks; each chunk is simulated
    by a compiled kernel and reduced to a frequency map, and the maps are merged
    by addition, so the table does not depend on ``workers`` or ``chunk_size``.

    ``n = 4`` (18**8 machines) requires ``allow_n4`` and runs with reflection
    reduction: only one machine of each mirror pair is simulated and the twin
    is credited with the reversed output.

    Raises
    ------
    ValueError
        For ``n`` outside 1..4 or a non-positive budget.
    ResourceCapExceeded
        If the class exceeds ``max_machines``, n=4 is requested without
        ``allow_n4``, or an output outgrows the 32-cell key space.
    """
    if n not in (1, 2, 3, 4):
        raise ValueError(f"n must be in 1..4, got {n}")
    if step_budget is None:
        step_budget = DEFAULT_BUDGETS[n]
    if step_budget < 1:
        raise ValueError("step_budget must be >= 1")
    total = class_size(n)
    if n == 4 and not allow_n4:
        raise ResourceCapExceeded("n=4 enumeration needs allow_n4=True (18**8 machines)")
    if max_machines is not None and total > max_machines:
        raise ResourceCapExceeded(f"class has {total} machines, cap is {max_machines}")
    if reflect_reduce is None:
        reflect_reduce = n == 4
    if reflect_reduce and retain_programs:
        raise ValueError("retain_programs is not supported with reflection reduction")

    if chunk_size is None:
        chunk_size = max(1 << 20, total // 256)
    bounds = [(lo, min(lo + chunk_size, total)) for lo in range(0, total, chunk_size)]
    if retain_programs:
        def work(span):
            lo, hi = span
            keys = np.empty(hi - lo, dtype=np.int64)
            steps = np.empty(hi - lo, dtype=np.int64)
            _run_range(n, lo, hi, step_budget, reflect_reduce, keys, steps)
            if (keys == -2).any():
                raise ResourceCapExceeded(f"output longer than {_MAX_OUTPUT_LEN} cells")
            return _reduce_chunk(n, lo, keys, steps, reflect_reduce, retain_programs)
    else:
        max_len = min(step_budget, _DENSE_MAX_LEN)

        def work(span):
            counts = np.zeros(2 << max_len, dtype=np.int64)
            mins = np.full(2 << max_len, np.iinfo(np.int64).max, dtype=np.int64)
            max_steps, overflow = _count_range(
                n, span[0], span[1], step_budget, reflect_reduce, max_len, counts, mins
            )
            if overflow:
                raise ResourceCapExceeded(f"output longer than {max_len} cells")
            return _dense_to_chunk(counts, mins, max_steps)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(span) for span in bounds]
    return _merge(n, step_budget, total, parts, retain_programs)


def _dense_to_chunk(counts, mins, max_steps):
    slots = np.nonzero(counts)[0]
    lengths = np.frexp(slots.astype(np.float64))[1].astype(np.int64) - 1
    bits = slots - (np.int64(1) << lengths)
    k0 = (lengths << _LEN_SHIFT) | bits
    c0 = counts[slots]
    m0 = mins[slots]
    k_all = np.concatenate([k0, _complement_keys(k0)])
    c_all = np.concatenate([c0, c0])
    m_all = np.concatenate([m0, m0])
    uniq, inverse = np.unique(k_all, return_inverse=True)
    cnt = np.zeros(uniq.shape, dtype=np.int64)
    np.add.at(cnt, inverse, c_all)
    min_steps = np.full(uniq.shape, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(min_steps, inverse, m_all)
    return uniq, cnt, min_steps, int(max_steps), None


def _reduce_chunk(n, lo, keys, steps, reflect_reduce, retain_programs):
    halted = keys >= 0
    idx = np.nonzero(halted)[0]
    k0 = keys[idx]
    st = steps[idx]
    index = idx.astype(np.int64) + lo
    if reflect_reduce:
        twin = _reflect_index_np(n, index)
        has_twin = twin != index
        k0 = np.concatenate([k0, _reverse_keys(k0[has_twin])])
        st = np.concatenate([st, st[has_twin]])
        index = np.concatenate([index, twin[has_twin]])
    # blank-1 runs: complement output, credited to complement(M) on blank 1
    k_all = np.concatenate([k0, _complement_keys(k0)])
    s_all = np.concatenate([st, st])
    p_all = np.concatenate([index, _complement_index(n, index) + class_size(n)])
    uniq, inverse, cnt = np.unique(k_all, return_inverse=True, return_counts=True)
    min_steps = np.full(uniq.shape, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(min_steps, inverse, s_all)
    max_steps = int(st.max(initial=0))
    progs = None
    if retain_programs:
        progs = (k_all, p_all, s_all)
    return uniq, cnt, min_steps, max_steps, progs


def _reflect_index_np(n, index):
    base = 4 * n + 2
    out = np.zeros_like(index)
    rest = index.copy()
    mult = 1
    for _ in range(2 * n):
        code = rest % base
        rest //= base
        code = np.where(code < 4 * n, code ^ 2, code)
        out += code * mult
        mult *= base
    return out


def _merge(n, budget, total, parts, retain_programs):
    counts: Counter = Counter()
    min_steps: dict[int, int] = {}
    max_seen = 0
    for uniq, cnt, mins, max_steps, _ in parts:
        max_seen = max(max_seen, max_steps)
        for k, c, m in zip(uniq.tolist(), cnt.tolist(), mins.tolist()):
            counts[k] += c
            if k not in min_steps or m < min_steps[k]:
                min_steps[k] = m
    programs = program_steps = None
    if retain_programs:
        k_all = np.concatenate([p[4][0] for p in parts]) if parts else np.empty(0, np.int64)
        p_all = np.concatenate([p[4][1] for p in parts]) if parts else np.empty(0, np.int64)
        s_all = np.concatenate([p[4][2] for p in parts]) if parts else np.empty(0, np.int64)
        order = np.lexsort((p_all, k_all))
        k_all, p_all, s_all = k_all[order], p_all[order], s_all[order]
        uniq, starts = np.unique(k_all, return_index=True)
        ends = np.append(starts[1:], len(k_all))
        programs, program_steps = {}, {}
        for k, a, b in zip(uniq.tolist(), starts.tolist(), ends.tolist()):
            s = _key_to_str(k)
            programs[s] = p_all[a:b]
            program_steps[s] = s_all[a:b]
    ordered = sorted(counts, key=lambda k: (k >> _LEN_SHIFT, k & ((1 << _LEN_SHIFT) - 1)))
    return CtmTable(
        n=n,
        step_budget=budget,
        counts={_key_to_str(k): counts[k] for k in ordered},
        min_steps={_key_to_str(k): min_steps[k] for k in ordered},
        total_halting=sum(counts.values()),
        machines_examined=total,
        max_observed_steps=max_seen,
        _programs=programs,
        _program_steps=program_steps,
    )


def ctm_complexity(table: CtmTable, s: str) -> float:
    """-log2(count(s) / total_halting); raises :class:`TableMiss` if absent."""
    if table.total_halting == 0:
        raise ValueError("empty table")
    try:
        count = table.counts[s]
    except KeyError:
        raise TableMiss(s) from None
    return -math.log2(count / table.total_halting)


def program_set(table: CtmTable, s: str) -> list[int]:
    if not table.has_programs:
        raise UnsupportedOperation("table built without retain_programs")
    progs = table._programs.get(s)
    return [] if progs is None else [int(p) for p in progs]


def levin_probability(table: CtmTable, s: str) -> float:
    """Sum of 2**(-|p| - log2 T(p)) over the programs producing ``s``.

    ``|p|`` is :func:`program_length_bits` for the table's class and ``T(p)``
    the halting step count of the run.
    """
    if not table.has_programs:
        raise UnsupportedOperation("table built without per-program step records")
    steps = table._program_steps.get(s)
    if steps is None:
        return 0.0
    plen = program_length_bits(table.n)
    return float(np.sum(2.0 ** (-plen) / steps.astype(np.float64)))


def simulate(n: int, program: int, step_budget: int) -> tuple[str | None, int]:
    """Re-run a program identifier; returns ``(output or None, steps)``."""
    size = class_size(n)
    if not 0 <= program < 2 * size:
        raise ValueError(f"program id {program} out of range")
    blank = program // size
    tape = np.zeros(2 * step_budget + 3, dtype=np.int64)
    length, bits, steps = _run(n, program % size, step_budget, blank, tape)
    if length < 0:
        return None, steps
    return format(bits, f"0{length}b"), steps


def write_table(table: CtmTable, path: str | Path, programs_path: str | Path | None = None) -> None:
    """Write the ``ctm-table v1`` text format, sorted by (length, string)."""
    lines = [f"ctm-table v1 n={table.n} budget={table.step_budget} total={table.total_halting}"]
    for s in table.strings():
        lines.append(f"{s},{table.counts[s]},{ctm_complexity(table, s):.12f}")
    Path(path).write_text("\n".join(lines) + "\n")
    if programs_path is not None:
        if not table.has_programs:
            raise UnsupportedOperation("table built without retain_programs")
        with open(programs_path, "w") as fh:
            for s in table.strings():
                pairs = " ".join(
                    f"{p}:{t}" for p, t in zip(table._programs[s].tolist(), table._program_steps[s].tolist())
                )
                fh.write(f"{s},{pairs}\n")


def read_table(path: str | Path, programs_path: str | Path | None = None) -> CtmTable:
    """Load a table written by :func:`write_table`.

    ``min_steps`` is not part of the file format; it is restored from the
    programs sidecar when given and left at 0 otherwise.
    """
    with open(path) as fh:
        header = fh.readline().split()
        if header[:2] != ["ctm-table", "v1"]:
            raise ValueError(f"{path}: not a ctm-table v1 file")
        meta = dict(tok.split("=", 1) for tok in header[2:])
        counts = {}
        for line in fh:
            if not line.strip():
                continue
            s, count, _bits = line.strip().split(",")
            counts[s] = int(count)
    n, budget, total = int(meta["n"]), int(meta["budget"]), int(meta["total"])
    if sum(counts.values()) != total:
        raise ValueError(f"{path}: counts sum to {sum(counts.values())}, header says {total}")
    programs = program_steps = None
    min_steps = dict.fromkeys(counts, 0)
    if programs_path is not None:
        programs, program_steps = {}, {}
        with open(programs_path) as fh:
            for line in fh:
                s, rest = line.rstrip("\n").split(",", 1)
                pairs = [tok.split(":") for tok in rest.split()]
                programs[s] = np.array([int(p) for p, _ in pairs], dtype=np.int64)
                program_steps[s] = np.array([int(t) for _, t in pairs], dtype=np.int64)
                min_steps[s] = int(program_steps[s].min())
    return CtmTable(
        n=n,
        step_budget=budget,
        counts=counts,
        min_steps=min_steps,
        total_halting=total,
        machines_examined=class_size(n),
        _programs=programs,
        _program_steps=program_steps,
    )


def load_table(n: int = 3) -> CtmTable:
    """The ``(n, 2)`` table shipped in ``superarc/data`` (n = 2, 3 or 4)."""
    ref = resources.files("superarc").joinpath(f"data/ctm_{n}_2.txt")
    if not ref.is_file():
        raise FileNotFoundError(f"no shipped table for n={n}; build one with `superarc build-ctm`")
    with resources.as_file(ref) as path:
        return read_table(path)
