"""Benchmark orchestration: run configs, model clients, prompting and report bundles."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import itertools
import json
import logging
import os
import re
import shutil
import string
import tempfile
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .candidates import DEFAULT_STEP_BUDGET, PRINT, EvaluationRecord, evaluate_answer
from .corpus import (
    CLASSES,
    ENCODINGS,
    SequenceItem,
    by_class,
    encode,
    generate_random_binary,
    load_corpus_file,
    load_embedded_corpus,
    metric_means,
)
from .ctm import CtmTable, load_table, read_table
from .metrics import BdmConfig, bdm, deflate_length, lzw_length
from .scoring import (
    FRACTIONS,
    ScoreCard,
    affine_positive,
    general_similarity,
    levenshtein,
    predict_continuation,
    score_records,
    sort_similarity,
    split_root_target,
)

__all__ = [
    "PAPER_TEMPERATURES",
    "RANKING_HEADER",
    "AuditLog",
    "BenchmarkResult",
    "HttpClient",
    "ModelSpec",
    "ReplayClient",
    "RunConfig",
    "TransportError",
    "emit_report",
    "load_templates",
    "make_client",
    "prediction_rows",
    "prompt_hash",
    "read_records",
    "record_from_json",
    "render_prompt",
    "run_benchmark",
    "select_items",
    "table_for",
    "type_breakdown",
]

log = logging.getLogger(__name__)

PAPER_TEMPERATURES = (1.0, 0.7, 0.5, 0.2, 0.001)
TRANSPORTS = ("replay-file", "http-endpoint")
METRICS = ("bdm", "deflate", "lzw")
RANKING_HEADER = ["id", "rho1", "rho2", "rho3", "rho4", "delta1", "delta2", "delta3", "phi", "phi_positive"]
EQUIVALENCE_NOTE = (
    "equivalence = identical executed outputs over all answer pairs of one item "
    "(pairs taken across temperatures), pooled per model"
)


class TransportError(RuntimeError):
    """No response could be obtained for a prompt."""


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class ModelSpec:
    id: str
    transport: str
    location: str
    credential_env: str = ""
    retries: int = 3

    def __post_init__(self):
        if not re.fullmatch(r"[A-Za-z0-9_\-]+", self.id):
            raise ValueError(f"model id {self.id!r} must be alphanumeric, '-' or '_'")
        if self.transport not in TRANSPORTS:
            raise ValueError(f"unknown transport {self.transport!r}")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


_LIST_FIELDS = {"classes": str, "counts": int, "seeds": int, "temperatures": float}
_SCALAR_TYPES = {int: int, float: float, str: str, bool: lambda v: v == "true"}


@dataclass(frozen=True)
class RunConfig:
    """Everything a benchmark run depends on.

    The text form is one ``key = value`` per line, ``#`` comments, lists
    comma separated and models as ``model.<id>.<field> = value``. Paths are
    resolved against ``base_dir`` (the config file's directory when loaded
    from disk).
    """

    corpus: str = "embedded"
    classes: tuple = ("low", "medium", "high")
    counts: tuple = ()
    seeds: tuple = ()
    random_length: int = 11
    encoding: str = "fixed-width-binary"
    metric: str = "bdm"
    ctm_table: str = "4"
    block_size: int = 0
    temperatures: tuple = PAPER_TEMPERATURES
    allow_custom_temperatures: bool = False
    template: str = "free-form"
    language: str = "Python"
    models: tuple = ()
    step_budget: int = DEFAULT_STEP_BUDGET
    timeout: float = 30.0
    max_in_flight: int = 4
    output_dir: str = "superarc-out"
    alpha: float = 1.0
    epsilon: float = 0.01
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        for name in _LIST_FIELDS:
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "models", tuple(self.models))
        bad = set(self.classes) - set(CLASSES)
        if bad:
            raise ValueError(f"unknown classes {sorted(bad)}")
        if self.counts and len(self.counts) != len(self.classes):
            raise ValueError("counts must be empty or give one count per class")
        if self.encoding not in ENCODINGS:
            raise ValueError(f"unknown encoding {self.encoding!r}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not self.temperatures:
            raise ValueError("at least one temperature is required")
        if not self.allow_custom_temperatures and not set(self.temperatures) <= set(PAPER_TEMPERATURES):
            raise ValueError(f"temperatures must be drawn from {PAPER_TEMPERATURES}")
        if len({m.id for m in self.models}) != len(self.models):
            raise ValueError("duplicate model ids")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        if self.alpha <= 0 or self.epsilon <= 0:
            raise ValueError("alpha and epsilon must be positive")

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def check_fixtures(self) -> None:
        """Raise if a replay file or corpus file named by the config is missing."""
        for m in self.models:
            if m.transport == "replay-file" and not self.resolve(m.location).is_file():
                raise FileNotFoundError(f"replay fixture for {m.id} not found: {m.location}")
        if self.corpus != "embedded" and not self.resolve(self.corpus).is_file():
            raise FileNotFoundError(f"corpus file not found: {self.corpus}")

    def dumps(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            if f.name in ("models", "base_dir"):
                continue
            value = getattr(self, f.name)
            if f.name in _LIST_FIELDS:
                text = ", ".join(map(repr if f.name == "temperatures" else str, value))
            elif isinstance(value, bool):
                text = "true" if value else "false"
            else:
                text = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{f.name} = {text}".rstrip())
        for m in self.models:
            for f in dataclasses.fields(m):
                if f.name != "id":
                    lines.append(f"model.{m.id}.{f.name} = {getattr(m, f.name)}".rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, base_dir: str = ".") -> "RunConfig":
        kwargs: dict = {}
        models: dict[str, dict] = {}
        hints = {f.name: f for f in dataclasses.fields(cls)}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key.startswith("model."):
                parts = key.split(".")
                if len(parts) != 3:
                    raise ValueError(f"line {lineno}: model keys look like model.<id>.<field>")
                models.setdefault(parts[1], {"id": parts[1]})[parts[2]] = value
            elif key in _LIST_FIELDS:
                conv = _LIST_FIELDS[key]
                kwargs[key] = tuple(conv(v.strip()) for v in value.split(",")) if value else ()
            elif key in hints and key != "base_dir":
                kind = type(hints[key].default)
                kwargs[key] = _SCALAR_TYPES[kind](value)
            else:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
        specs = []
        for d in models.values():
            if "retries" in d:
                d["retries"] = int(d["retries"])
            specs.append(ModelSpec(**d))
        return cls(**kwargs, models=tuple(specs), base_dir=base_dir)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        return cls.loads(path.read_text(), base_dir=str(path.parent))


# ---------------------------------------------------------------- clients


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def _temp_key(t: float) -> str:
    return repr(float(t))


class AuditLog:
    """Append-only record of every transport call."""

    def __init__(self):
        self.entries: list[dict] = []

    def add(self, **entry):
        self.entries.append(entry)

    @property
    def network_calls(self) -> int:
        return sum(e["network"] for e in self.entries)


def _load_replay(path: Path, model: str) -> dict:
    table = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            missing = {"prompt_hash", "model", "temperature", "response_text", "timestamp"} - rec.keys()
            if missing:
                raise ValueError(f"{path}:{lineno}: missing fields {sorted(missing)}")
            if rec["model"] == model:
                table[(rec["prompt_hash"], _temp_key(rec["temperature"]))] = rec
    return table


class ReplayClient:
    """Answers prompts from a JSONL replay file; never touches the network."""

    def __init__(self, spec: ModelSpec, path: Path, audit: AuditLog):
        self.spec, self.audit = spec, audit
        self._table = _load_replay(path, spec.id)

    def complete(self, prompt: str, temperature: float) -> dict:
        h = prompt_hash(prompt)
        rec = self._table.get((h, _temp_key(temperature)))
        self.audit.add(model=self.spec.id, transport="replay-file", prompt_hash=h,
                       temperature=temperature, network=False, ok=rec is not None)
        if rec is None:
            raise TransportError(f"{self.spec.id}: no replay entry for prompt {h[:12]} at T={temperature}")
        return rec


class HttpClient:
    """POSTs ``{model, prompt, temperature}`` as JSON and caches answers to a replay file.

    The bearer token is read from the environment variable named by
    ``spec.credential_env`` at call time and never written anywhere. Cached
    answers are reused without a network call.
    """

    def __init__(self, spec: ModelSpec, cache_path: Path, audit: AuditLog, timeout: float = 30.0,
                 backoff: float = 0.5):
        self.spec, self.audit, self.timeout, self.backoff = spec, audit, timeout, backoff
        self.cache_path = cache_path
        self._cache = _load_replay(cache_path, spec.id) if cache_path.is_file() else {}

    def _post(self, prompt: str, temperature: float) -> str:
        body = json.dumps({"model": self.spec.id, "prompt": prompt, "temperature": temperature}).encode()
        req = urllib.request.Request(self.spec.location, data=body, headers={"Content-Type": "application/json"})
        if self.spec.credential_env:
            token = os.environ.get(self.spec.credential_env)
            if token is None:
                raise TransportError(f"environment variable {self.spec.credential_env} is not set")
            req.add_header("Authorization", f"Bearer {token}")
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            payload = json.loads(resp.read().decode("utf-8"))
        if "response_text" in payload:
            return payload["response_text"]
        if "text" in payload:
            return payload["text"]
        return payload["choices"][0]["message"]["content"]

    def complete(self, prompt: str, temperature: float) -> dict:
        h = prompt_hash(prompt)
        key = (h, _temp_key(temperature))
        if key in self._cache:
            self.audit.add(model=self.spec.id, transport="http-endpoint", prompt_hash=h,
                           temperature=temperature, network=False, ok=True)
            return self._cache[key]
        last = None
        for attempt in range(self.spec.retries + 1):
            try:
                text = self._post(prompt, temperature)
            except (urllib.error.URLError, TimeoutError, OSError, KeyError, ValueError) as exc:
                last = exc
                self.audit.add(model=self.spec.id, transport="http-endpoint", prompt_hash=h,
                               temperature=temperature, network=True, ok=False)
                log.warning("%s: attempt %d failed: %s", self.spec.id, attempt + 1, exc)
                if attempt < self.spec.retries:
                    time.sleep(self.backoff * 2 ** attempt)
                continue
            self.audit.add(model=self.spec.id, transport="http-endpoint", prompt_hash=h,
                           temperature=temperature, network=True, ok=True)
            break
        else:
            raise TransportError(f"{self.spec.id}: giving up after {self.spec.retries + 1} attempts: {last}")
        rec = {"prompt_hash": h, "model": self.spec.id, "temperature": temperature,
               "response_text": text, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
        self._cache[key] = rec
        self.cache_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.cache_path, "a") as fh:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return rec


def make_client(spec: ModelSpec, config: RunConfig, audit: AuditLog):
    if spec.transport == "replay-file":
        return ReplayClient(spec, config.resolve(spec.location), audit)
    cache = config.resolve(config.output_dir) / "replay" / f"{spec.id}.jsonl"
    return HttpClient(spec, cache, audit, timeout=config.timeout)


# ---------------------------------------------------------------- prompts


def load_templates() -> dict[str, str]:
    text = resources.files("superarc").joinpath("data/prompts.txt").read_text()
    templates, current, buf = {}, None, []
    for line in text.splitlines():
        m = re.fullmatch(r"\[([\w\-]+)\]", line.strip())
        if m:
            if current:
                templates[current] = "\n".join(buf).strip()
            current, buf = m.group(1), []
        elif current and not line.startswith("#"):
            buf.append(line)
    if current:
        templates[current] = "\n".join(buf).strip()
    return templates


def render_prompt(template_id: str, item: SequenceItem, language: str | None = None,
                  encoding_name: str = "ascii-csv") -> str:
    """Fill a stored template with the encoded sequence (and language for ``code``)."""
    templates = load_templates()
    if template_id not in templates:
        raise KeyError(f"unknown template {template_id!r}; have {sorted(templates)}")
    template = templates[template_id]
    slots = {name for _, name, _, _ in string.Formatter().parse(template) if name}
    payload = encode(item, encoding_name).payload
    if encoding_name == "ascii-csv":
        payload = payload.replace(",", ", ")
    values = {"sequence": payload}
    if language is not None:
        values["language"] = language
    missing = slots - values.keys()
    if missing:
        raise ValueError(f"template {template_id!r} needs {sorted(missing)}")
    return template.format(**values)


# ---------------------------------------------------------------- running


@dataclass
class BenchmarkResult:
    records: list[EvaluationRecord]
    scorecards: list[ScoreCard]
    items: list[SequenceItem]
    audit: AuditLog
    bundle: Path | None = None


def select_items(config: RunConfig) -> list[SequenceItem]:
    """Corpus items for the configured classes, counts and seeds, in a fixed order."""
    pool = load_embedded_corpus() if config.corpus == "embedded" else load_corpus_file(config.resolve(config.corpus))
    pool = [it for it in pool if it.duplicate_of is None]
    out = []
    for i, klass in enumerate(config.classes):
        rows = by_class(pool, klass)
        if klass == "random-binary" and config.seeds:
            count = config.counts[i] if config.counts else 100
            rows = [it for seed in config.seeds for it in generate_random_binary(config.random_length, count, seed)]
        limit = config.counts[i] if config.counts else 0
        out.extend(rows[:limit] if limit else rows)
    if not out:
        raise ValueError("configuration selects no items")
    return out


def table_for(config: RunConfig) -> CtmTable:
    spec = config.ctm_table
    return load_table(int(spec)) if spec.isdigit() else read_table(config.resolve(spec))


def _bits_of_text(text: str) -> str:
    return "".join(format(b, "08b") for b in text.encode("utf-8"))


def metric_functions(config: RunConfig, table: CtmTable | None = None):
    """``(target_complexity(item), answer_complexity(text))`` for the configured M.

    Targets are measured on their configured encoding and answers on their
    UTF-8 bytes; for BDM both go through their bit strings.
    """
    if config.metric == "bdm":
        cfg = BdmConfig(table or table_for(config), config.block_size or None)

        def target(item):
            payload = encode(item, config.encoding).payload
            return bdm(payload if config.encoding == "fixed-width-binary" else _bits_of_text(payload), cfg)

        def answer(text):
            return bdm(_bits_of_text(text), cfg) if text else 0.0

    elif config.metric == "deflate":
        def target(item):
            return 8.0 * deflate_length(encode(item, config.encoding).payload)

        def answer(text):
            return 8.0 * deflate_length(text)

    else:
        def target(item):
            return float(lzw_length(encode(item, config.encoding).payload))

        def answer(text):
            return float(lzw_length(text)) if text else 0.0

    return target, answer


def run_benchmark(config: RunConfig, clients: dict | None = None, write: bool = True) -> BenchmarkResult:
    """Prompt every model on every item at every temperature, then evaluate and score.

    Transport failures become unanswered (Incorrect) records. Records are
    sorted by (model, item, temperature) so concurrency never changes the
    output; with ``write`` the report bundle goes to ``config.output_dir``.
    """
    if not config.models:
        raise ValueError("no models configured")
    config.check_fixtures()
    items = select_items(config)
    target_fn, answer_fn = metric_functions(config)
    targets = {it.id: target_fn(it) for it in items}
    audit = AuditLog()
    clients = clients or {m.id: make_client(m, config, audit) for m in config.models}
    prompts = {
        it.id: render_prompt(config.template, it, config.language if config.template == "code" else None)
        for it in items
    }
    jobs = list(itertools.product(config.models, items, config.temperatures))

    def fetch(job):
        model, item, temp = job
        try:
            return clients[model.id].complete(prompts[item.id], temp)
        except TransportError as exc:
            log.info("unanswered: %s", exc)
            return None

    with ThreadPoolExecutor(config.max_in_flight) as pool:
        responses = list(pool.map(fetch, jobs))

    records = []
    for (model, item, temp), resp in zip(jobs, responses):
        rec = evaluate_answer(
            resp["response_text"] if resp else "",
            item,
            model.id,
            answer_fn,
            temperature=temp,
            budget=config.step_budget,
            unanswered=resp is None,
        )
        rec = dataclasses.replace(rec, target_complexity=targets[item.id])
        declared = resp.get("model_complexity") if resp else None
        if declared is not None:
            value = targets[item.id] if declared == "target" else float(declared)
            rec = dataclasses.replace(rec, complexity_of_answer=value, extra={**rec.extra, "declared_complexity": True})
        records.append(rec)
    records.sort(key=_record_key)
    scorecards = score_models(records, config.alpha, config.epsilon)
    result = BenchmarkResult(records, scorecards, items, audit)
    if write:
        result.bundle = emit_report(records, scorecards, config.resolve(config.output_dir), items=items, config=config)
    return result


def _record_key(r: EvaluationRecord):
    return (r.model_id, r.item_id, -1.0 if r.temperature is None else r.temperature)


def score_models(records, alpha: float = 1.0, epsilon: float = 0.01) -> list[ScoreCard]:
    """One ScoreCard per model (sorted by id) with affine-positive phi filled in."""
    by_model: dict[str, list] = {}
    for r in records:
        by_model.setdefault(r.model_id, []).append(r)
    cards = [score_records(m, by_model[m]) for m in sorted(by_model)]
    positive = affine_positive([c.phi for c in cards], alpha, epsilon)
    return [c.with_positive(p) for c, p in zip(cards, positive)]


# ---------------------------------------------------------------- reporting


def type_breakdown(records) -> dict[str, dict[str, int]]:
    """Per model counts of Known / PureMath / NotFound / Print answers (all and correct only).

    Print is the print kind; NotFound an explicit refusal; Known a
    recurrence; PureMath any other parsed program. Unparsed and unanswered
    answers are counted as Other. ``incorrect_print`` is the derived
    filter print minus correct_print.
    """
    out: dict[str, dict[str, int]] = {}
    for r in records:
        if r.kind == PRINT and r.parsed_ok:
            label = "print"
        elif r.refusal:
            label = "not_found"
        elif not r.parsed_ok:
            label = "other"
        elif r.extra.get("form") == "recurrence":
            label = "known"
        else:
            label = "pure_math"
        row = out.setdefault(r.model_id, {k: 0 for k in _BREAKDOWN_COLUMNS})
        row[label] += 1
        if r.c:
            row[f"correct_{label}"] += 1
        row["unanswered"] += r.unanswered
    for row in out.values():
        row["incorrect_print"] = row["print"] - row["correct_print"]
    return out


_BREAKDOWN_COLUMNS = (
    "known", "pure_math", "not_found", "print", "other",
    "correct_known", "correct_pure_math", "correct_not_found", "correct_print", "correct_other",
    "incorrect_print", "unanswered",
)


def equivalence(records) -> dict[str, float | None]:
    """Fraction of same-item answer pairs with identical executed output, per model."""
    groups: dict[tuple, list] = {}
    for r in records:
        if r.output is not None:
            groups.setdefault((r.model_id, r.item_id), []).append(tuple(r.output))
    same, total = {}, {}
    for (model, _), outs in groups.items():
        for a, b in itertools.combinations(outs, 2):
            same[model] = same.get(model, 0) + (a == b)
            total[model] = total.get(model, 0) + 1
    models = sorted({r.model_id for r in records})
    return {m: (same[m] / total[m] if total.get(m) else None) for m in models}


def prediction_rows(items, cfg: BdmConfig, fractions=FRACTIONS) -> list[dict]:
    """BDM-baseline continuation of every binary item at each root/target split."""
    rows = []
    for it in items:
        if it.alphabet != "binary":
            continue
        for frac in fractions:
            task = split_root_target(it, frac)
            root = "".join(map(str, task.root))
            target = "".join(map(str, task.target))
            guess = predict_continuation(root, len(target), cfg)
            rows.append({
                "item_id": it.id,
                "fraction": frac,
                "target": target,
                "predicted": guess,
                "sort_similarity": sort_similarity(guess, target),
                "general_similarity": general_similarity(guess, target),
                "levenshtein": levenshtein(guess, target),
            })
    return rows


def _fmt(x) -> str:
    return "" if x is None else f"{x:.6f}"


def _csv(rows: list[list]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def ranking_csv(scorecards) -> str:
    order = sorted(scorecards, key=lambda c: (-c.phi, c.model_id))
    rows = [RANKING_HEADER] + [
        [c.model_id, *map(_fmt, c.rho), *map(_fmt, c.delta), _fmt(c.phi), _fmt(c.phi_positive)] for c in order
    ]
    return _csv(rows)


def emit_report(records, scorecards, out_dir: str | Path, items=None, config: RunConfig | None = None,
                predictions=None) -> Path:
    """Write the report bundle into ``out_dir``.

    Files are rendered in memory and staged in a temporary directory first,
    so an error leaves no partial bundle behind.
    """
    records = sorted(records, key=_record_key)
    if not records:
        raise ValueError("no records to report")
    if not scorecards:
        raise ValueError("no scorecards to report")
    files = {
        "ranking.csv": ranking_csv(scorecards),
        "records.jsonl": "".join(json.dumps(r.to_candidate_json(), sort_keys=True) + "\n" for r in records),
        "scorecards.json": json.dumps([c.to_json() for c in scorecards], indent=1, sort_keys=True) + "\n",
    }
    breakdown = type_breakdown(records)
    equiv = equivalence(records)
    files["breakdown.csv"] = _csv(
        [["model", *_BREAKDOWN_COLUMNS, "equivalence"]]
        + [[m, *(breakdown[m][k] for k in _BREAKDOWN_COLUMNS), _fmt(equiv[m])] for m in sorted(breakdown)]
    )
    meta = {"equivalence_definition": EQUIVALENCE_NOTE, "records": len(records), "models": len(scorecards)}
    if config is not None:
        files["config.txt"] = config.dumps()
    if items is not None and config is not None and config.metric == "bdm":
        ordering_items = [it for it in items if it.complexity_class in ("low", "medium", "high")]
        present = [k for k in ("low", "medium", "high") if by_class(ordering_items, k)]
        if present:
            cfg = BdmConfig(table_for(config), config.block_size or None)
            means = metric_means(ordering_items, cfg, classes=present)
            files["metric_ordering.csv"] = _csv(
                [["class", "n", "bdm", "entropy", "lzw", "deflate"]]
                + [[k, means[k]["n"], *(_fmt(means[k][m]) for m in ("bdm", "entropy", "lzw", "deflate"))]
                   for k in present]
            )
    if predictions:
        cols = list(predictions[0])
        files["similarity.csv"] = _csv(
            [cols] + [[_fmt(r[c]) if isinstance(r[c], float) else r[c] for c in cols] for r in predictions]
        )
    files["metadata.json"] = json.dumps(meta, indent=1, sort_keys=True) + "\n"

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    try:
        for name, text in files.items():
            (stage / name).write_text(text)
        for name in files:
            os.replace(stage / name, out / name)
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    return out


def record_from_json(d: dict) -> EvaluationRecord:
    cls, aux = d["classification"], d["aux"]
    return EvaluationRecord(
        item_id=d["item_id"],
        model_id=d["model_id"],
        c=int(cls["correct"]),
        complexity_of_answer=d["complexity_of_answer"],
        length_chars=aux["length_chars"],
        normalized_length=aux["normalized_length"],
        deflate_length=aux["deflate_length"],
        no_compression_percent=aux["no_compression_percent"],
        kind=cls["kind"],
        temperature=d.get("temperature"),
        target_complexity=d.get("target_complexity"),
        refusal=cls.get("refusal", False),
        unanswered=cls.get("unanswered", False),
        parsed_ok=d["parsed_ok"],
        raw_text=d["raw_text"],
        output=d.get("output"),
        detail=cls.get("detail", ""),
        extra=d.get("extra", {}),
    )


def read_records(path: str | Path) -> list[EvaluationRecord]:
    with open(path) as fh:
        return [record_from_json(json.loads(line)) for line in fh if line.strip()]
