import dataclasses
import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from superarc.cli import main
from superarc.corpus import SequenceItem
from superarc.harness import (
    RANKING_HEADER,
    AuditLog,
    HttpClient,
    ModelSpec,
    RunConfig,
    TransportError,
    emit_report,
    prompt_hash,
    read_records,
    render_prompt,
    run_benchmark,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixture_config(tmp_path):
    cfg = RunConfig.load(FIXTURES / "run.cfg")
    return dataclasses.replace(cfg, output_dir=str(tmp_path / "out"))


def _digest(folder):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(Path(folder).iterdir())}


# ---------------------------------------------------------------- config


def test_config_round_trip_fixture():
    cfg = RunConfig.load(FIXTURES / "run.cfg")
    assert RunConfig.loads(cfg.dumps()) == cfg
    assert [m.id for m in cfg.models] == ["ideal", "print-only", "ordinal-only", "mixed"]


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.sampled_from([1.0, 0.7, 0.5, 0.2, 0.001]), min_size=1, max_size=5, unique=True),
    st.lists(st.integers(0, 50), min_size=3, max_size=3),
    st.integers(1, 10 ** 6),
    st.floats(min_value=1e-6, max_value=1e6, allow_nan=False),
    st.sampled_from(["free-form", "code", "python-script"]),
)
def test_config_round_trip_property(temps, counts, budget, alpha, template):
    cfg = RunConfig(
        temperatures=tuple(temps), counts=tuple(counts), step_budget=budget, alpha=alpha, template=template,
        models=(ModelSpec("m1", "replay-file", "a.jsonl"), ModelSpec("m2", "http-endpoint", "http://x/y", "TOKEN", 5)),
    )
    assert RunConfig.loads(cfg.dumps()) == cfg


def test_config_errors(tmp_path):
    with pytest.raises(ValueError):
        RunConfig.loads("temperatures = 0.9\n")
    assert RunConfig.loads("temperatures = 0.9\nallow_custom_temperatures = true\n").temperatures == (0.9,)
    with pytest.raises(ValueError):
        RunConfig.loads("colour = blue\n")
    with pytest.raises(ValueError):
        RunConfig.loads("classes = low, astronomical\n")
    with pytest.raises(ValueError):
        RunConfig.loads("just a line\n")
    cfg = RunConfig.loads("model.m.transport = replay-file\nmodel.m.location = nope.jsonl\n", base_dir=str(tmp_path))
    with pytest.raises(FileNotFoundError):
        cfg.check_fixtures()


# ---------------------------------------------------------------- prompts


def test_render_prompt():
    item = SequenceItem("x", (1, 2, 3), "integer", "low")
    free = render_prompt("free-form", item)
    assert "generate the following list of sequences" in free and "1, 2, 3" in free
    code = render_prompt("code", item, "Python")
    assert "write the code in Python" in code and "[1, 2, 3]" in code
    assert render_prompt("code", item, "Python") == code
    with pytest.raises(ValueError):
        render_prompt("code", item)
    with pytest.raises(KeyError):
        render_prompt("few-shot", item)


# ---------------------------------------------------------------- runs


def test_replay_run_matches_pins(fixture_config):
    result = run_benchmark(fixture_config)
    pinned = json.loads((FIXTURES / "pinned_scorecards.json").read_text())
    assert [c.to_json() for c in result.scorecards] == pinned


def test_ideal_agent_tops_ranking(fixture_config):
    result = run_benchmark(fixture_config)
    ranking = (Path(fixture_config.output_dir) / "ranking.csv").read_text().splitlines()
    assert ranking[0].split(",") == RANKING_HEADER
    top = ranking[1].split(",")
    assert top[0] == "ideal" and top[RANKING_HEADER.index("phi")] == "1.000000"
    ideal = next(c for c in result.scorecards if c.model_id == "ideal")
    assert ideal.rho == (1.0, 0.0, 0.0, 0.0) and ideal.phi == 1.0


def test_personas(fixture_config):
    cards = {c.model_id: c for c in run_benchmark(fixture_config, write=False).scorecards}
    assert cards["print-only"].rho == (0.0, 0.0, 1.0, 0.0)
    assert 0.0 <= cards["print-only"].phi <= 0.25
    assert cards["ordinal-only"].rho[0] == cards["ordinal-only"].rho[2] == 0.0
    assert cards["ordinal-only"].rho[1] > 0


def test_replay_determinism(fixture_config, tmp_path):
    run_benchmark(fixture_config)
    other = dataclasses.replace(fixture_config, output_dir=str(tmp_path / "again"), max_in_flight=1)
    run_benchmark(other)
    first, second = _digest(fixture_config.output_dir), _digest(other.output_dir)
    first.pop("config.txt"), second.pop("config.txt")
    assert first == second


def test_accounting_and_audit(fixture_config):
    result = run_benchmark(fixture_config, write=False)
    expected = len(fixture_config.models) * len(result.items) * len(fixture_config.temperatures)
    assert len(result.records) == expected
    assert sum(sum(c.counts) for c in result.scorecards) == expected
    assert result.audit.network_calls == 0
    assert {e["transport"] for e in result.audit.entries} == {"replay-file"}
    unanswered = [r for r in result.records if r.unanswered]
    assert unanswered and all(r.result_class == 3 for r in unanswered)
    assert any(r.refusal for r in result.records)


def test_all_unanswered(tmp_path):
    (tmp_path / "silent.jsonl").write_text("")
    cfg = RunConfig(
        classes=("low",), counts=(3,), temperatures=(1.0,), base_dir=str(tmp_path), output_dir="out",
        models=(ModelSpec("silent", "replay-file", "silent.jsonl"),),
    )
    card = run_benchmark(cfg).scorecards[0]
    assert card.rho == (0.0, 0.0, 0.0, 1.0) and card.phi == -1.0


def test_emit_report_refuses_empty(tmp_path, fixture_config):
    cards = run_benchmark(fixture_config, write=False).scorecards
    out = tmp_path / "empty"
    with pytest.raises(ValueError):
        emit_report([], cards, out)
    assert not out.exists() or not any(out.iterdir())


def test_emit_report_unwritable(tmp_path, fixture_config):
    result = run_benchmark(fixture_config, write=False)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_report(result.records, result.scorecards, blocker / "sub")


def test_records_round_trip(fixture_config):
    result = run_benchmark(fixture_config)
    back = read_records(Path(fixture_config.output_dir) / "records.jsonl")
    assert [r.to_candidate_json() for r in back] == [r.to_candidate_json() for r in result.records]


# ---------------------------------------------------------------- http


class _Handler(BaseHTTPRequestHandler):
    failures = 0
    seen_auth: list = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        _Handler.seen_auth.append(self.headers.get("Authorization"))
        if _Handler.failures > 0:
            _Handler.failures -= 1
            self.send_response(503)
            self.end_headers()
            return
        payload = json.dumps({"response_text": f"echo {body['temperature']}"}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    srv = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_port}/complete"
    srv.shutdown()


def test_http_client_retries_and_caches(server, tmp_path, monkeypatch):
    monkeypatch.setenv("SUPERARC_TEST_TOKEN", "s3cret")
    _Handler.failures, _Handler.seen_auth = 2, []
    spec = ModelSpec("live", "http-endpoint", server, "SUPERARC_TEST_TOKEN", retries=3)
    audit = AuditLog()
    cache = tmp_path / "replay" / "live.jsonl"
    client = HttpClient(spec, cache, audit, timeout=5, backoff=0.0)
    rec = client.complete("hello", 0.5)
    assert rec["response_text"] == "echo 0.5"
    assert _Handler.seen_auth[-1] == "Bearer s3cret"
    assert audit.network_calls == 3
    line = json.loads(cache.read_text())
    assert set(line) == {"prompt_hash", "model", "temperature", "response_text", "timestamp"}
    assert line["prompt_hash"] == prompt_hash("hello")
    assert "s3cret" not in cache.read_text()
    again = HttpClient(spec, cache, audit, timeout=5, backoff=0.0)
    assert again.complete("hello", 0.5)["response_text"] == "echo 0.5"
    assert audit.network_calls == 3


def test_http_client_gives_up(server, tmp_path):
    _Handler.failures = 10
    spec = ModelSpec("live", "http-endpoint", server, retries=1)
    client = HttpClient(spec, tmp_path / "c.jsonl", AuditLog(), timeout=5, backoff=0.0)
    with pytest.raises(TransportError):
        client.complete("hello", 1.0)
    _Handler.failures = 0


def test_http_client_missing_credential(server, tmp_path, monkeypatch):
    monkeypatch.delenv("SUPERARC_MISSING", raising=False)
    spec = ModelSpec("live", "http-endpoint", server, "SUPERARC_MISSING", retries=0)
    with pytest.raises(TransportError):
        HttpClient(spec, tmp_path / "c.jsonl", AuditLog(), timeout=5).complete("x", 1.0)


# ---------------------------------------------------------------- cli


def test_cli_end_to_end(tmp_path, fixture_config, capsys):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(dataclasses.replace(fixture_config, base_dir=str(FIXTURES)).dumps()
                        .replace("corpus = corpus.json", f"corpus = {FIXTURES / 'corpus.json'}"))
    text = cfg_path.read_text()
    for name in ("ideal", "print_only", "ordinal_only", "mixed"):
        text = text.replace(f"= {name}.jsonl", f"= {FIXTURES / (name + '.jsonl')}")
    cfg_path.write_text(text)
    assert main(["evaluate", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == ",".join(RANKING_HEADER)
    records = Path(fixture_config.output_dir) / "records.jsonl"
    assert main(["score", str(records), "--out", str(tmp_path / "cards.json")]) == 0
    assert json.loads((tmp_path / "cards.json").read_text()) == json.loads(
        (FIXTURES / "pinned_scorecards.json").read_text()
    )
    assert main(["report", str(records), str(tmp_path / "rep"), "--config", str(cfg_path)]) == 0
    assert {"ranking.csv", "records.jsonl", "breakdown.csv", "metric_ordering.csv", "similarity.csv"} <= {
        p.name for p in (tmp_path / "rep").iterdir()
    }
    assert main(["predict", "--classes", "climber", "--fractions", "0.25", "--out", str(tmp_path / "p.csv")]) == 0
    assert (tmp_path / "p.csv").read_text().startswith("item_id,fraction,target,predicted")
    assert main(["gen-corpus", "random-binary", str(tmp_path / "r.json"), "--count", "3", "--seed", "1"]) == 0
    assert len(json.loads((tmp_path / "r.json").read_text())) == 3
    assert main(["gen-corpus", "embedded", str(tmp_path / "e.json"), "--classes", "low", "--distinct"]) == 0
    assert main(["build-ctm", "2", str(tmp_path / "t.txt")]) == 0
    assert (tmp_path / "t.txt").read_text().startswith("ctm-table v1 n=2 budget=6 total=6088")
