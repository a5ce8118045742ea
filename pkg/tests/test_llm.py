import json

import httpx
import pytest

from indlemma.llm import (
    DEFAULT_POOL,
    NAIVE,
    STRATEGY1,
    STRATEGY2,
    LLMClient,
    ModelConfig,
    ProviderError,
    ReplayMiss,
    TranscriptStore,
    candidate_texts,
    extract_conjectures,
    parse_pool,
    render_prompt,
    strategy,
    transcript_key,
)
from indlemma.llm.extract import Diagnostic, Provenance
from indlemma.llm.prompts import PLACEHOLDER
from indlemma.resources import transcripts_dir
from indlemma.smtlib import alpha_equal, parse_formula, preprocess_label


def completion(text, prompt_tokens=11, completion_tokens=7):
    return {"choices": [{"message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": prompt_tokens, "completion_tokens": completion_tokens}}


def live_config(tmp_path, mode="live", **kw):
    return ModelConfig(mode=mode, transcripts=str(tmp_path) if mode != "live" else None,
                       requests_per_minute=0, api_key_env="TEST_LLM_KEY", **kw)


# ---------------------------------------------------------------- prompts

@pytest.mark.parametrize("s", [STRATEGY1, STRATEGY2, NAIVE])
def test_templates_have_one_placeholder(s):
    assert s.template.count(PLACEHOLDER) == 1


def test_render_inserts_labeled_script(nat_task):
    labeled = preprocess_label(nat_task)
    p = render_prompt(STRATEGY1, labeled)
    assert PLACEHOLDER not in p
    assert labeled.full_text.rstrip("\n") in p
    assert p.index("; datatype definitions") < p.index("; proof goal")


def test_strategies_differ(nat_task):
    labeled = preprocess_label(nat_task)
    assert render_prompt(STRATEGY1, labeled) != render_prompt(STRATEGY2, labeled)


def test_pool_parsing():
    assert parse_pool("strategy1,strategy2") == DEFAULT_POOL
    assert parse_pool("naive") == (NAIVE,)
    assert strategy("strategy2") is STRATEGY2
    with pytest.raises(ValueError):
        parse_pool("strategy9")


# ---------------------------------------------------------------- config

def test_model_defaults():
    c = ModelConfig(transcripts="x")
    assert (c.temperature, c.top_p) == (0.9, 0.9)


@pytest.mark.parametrize("kw", [dict(temperature=3), dict(top_p=0), dict(mode="psychic"),
                                dict(max_tokens=0)])
def test_model_validation(kw):
    with pytest.raises(ValueError):
        ModelConfig(transcripts="x", **kw)


def test_replay_needs_directory():
    with pytest.raises(ValueError):
        ModelConfig(mode="replay", transcripts=None)


def test_redacted_never_holds_key(monkeypatch):
    monkeypatch.setenv("OPENROUTER_API_KEY", "sk-very-secret")
    d = ModelConfig(transcripts="x").redacted()
    assert "sk-very-secret" not in json.dumps(d) and d["api_key_set"] is True


# ---------------------------------------------------------------- keys and store

def test_key_depends_on_every_input():
    base = transcript_key("p", "m", 0.9, 0.9, 1)
    assert base == transcript_key("p", "m", 0.9, 0.9, 1)
    others = [transcript_key("q", "m", 0.9, 0.9, 1), transcript_key("p", "n", 0.9, 0.9, 1),
              transcript_key("p", "m", 0.8, 0.9, 1), transcript_key("p", "m", 0.9, 0.8, 1),
              transcript_key("p", "m", 0.9, 0.9, 2)]
    assert len({base, *others}) == 6


def test_replay_hit(replay_client, nat_task, no_network):
    p = render_prompt(STRATEGY1, preprocess_label(nat_task))
    r = replay_client.query(p, 1)
    assert r.replayed
    assert "(forall ((x Nat)(y Nat)) (= (plus (mult y x) y) (mult y (succ x))))" in r.text
    assert r.usage.prompt_tokens > 0 and r.usage.completion_tokens > 0


def test_replay_miss(replay_client, no_network):
    with pytest.raises(ReplayMiss) as e:
        replay_client.query("never recorded", 1)
    assert "no recorded transcript" in str(e.value)


def test_shipped_transcripts_are_consistent():
    store = TranscriptStore(transcripts_dir())
    ts = list(store)
    assert len(ts) == 18
    for t in ts:
        assert store.load(t.key) == t
        assert t.params["temperature"] == 0.9 and t.params["top_p"] == 0.9


def test_store_rejects_renamed_file(tmp_path):
    store = TranscriptStore(tmp_path)
    src = next(iter(TranscriptStore(transcripts_dir())))
    store.save(src)
    (tmp_path / f"{src.key}.json").rename(tmp_path / ("0" * 64 + ".json"))
    with pytest.raises(ValueError, match="does not match"):
        store.load("0" * 64)


# ---------------------------------------------------------------- live / record via mock transport

def test_live_request_shape(tmp_path, monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "k-123")
    seen = {}

    def handler(request):
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json=completion("hello"))

    c = LLMClient(live_config(tmp_path), transport=httpx.MockTransport(handler))
    r = c.query("prompt text", 2)
    assert r.text == "hello" and not r.replayed
    assert (r.usage.prompt_tokens, r.usage.completion_tokens) == (11, 7)
    assert seen["auth"] == "Bearer k-123"
    body = seen["body"]
    assert body["messages"] == [{"role": "user", "content": "prompt text"}]
    assert (body["temperature"], body["top_p"]) == (0.9, 0.9)


def test_record_then_replay(tmp_path, monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "sk-do-not-store")
    transport = httpx.MockTransport(lambda r: httpx.Response(200, json=completion("(forall ((x Nat)) true)")))
    rec = LLMClient(live_config(tmp_path, "record"), transport=transport)
    first = rec.query("p", 1)
    files = list(tmp_path.glob("*.json"))
    assert len(files) == 1
    stored = json.loads(files[0].read_text())
    assert stored["params"]["iteration"] == 1 and stored["usage"]["completion_tokens"] == 7
    assert "sk-do-not-store" not in files[0].read_text()

    def refuse(request):
        raise AssertionError("replay must not touch the network")

    rep = LLMClient(live_config(tmp_path, "replay"), transport=httpx.MockTransport(refuse))
    again = rep.query("p", 1)
    assert again.replayed and again.text == first.text and again.usage == first.usage


def test_transient_errors_retried(tmp_path, monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "k")
    calls = []

    def flaky(request):
        calls.append(1)
        if len(calls) < 3:
            return httpx.Response(429 if len(calls) == 1 else 503, text="busy")
        return httpx.Response(200, json=completion("ok"))

    c = LLMClient(live_config(tmp_path), transport=httpx.MockTransport(flaky), backoff=0.01)
    assert c.query("p", 1).text == "ok" and len(calls) == 3


def test_transport_error_retried_then_gives_up(tmp_path, monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "k")

    def down(request):
        raise httpx.ConnectError("refused")

    c = LLMClient(live_config(tmp_path), transport=httpx.MockTransport(down), retries=2, backoff=0.01)
    with pytest.raises(ProviderError, match="giving up after 3"):
        c.query("p", 1)


def test_auth_error_not_retried(tmp_path, monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "k")
    calls = []

    def deny(request):
        calls.append(1)
        return httpx.Response(401, text="bad key")

    c = LLMClient(live_config(tmp_path), transport=httpx.MockTransport(deny), backoff=0.01)
    with pytest.raises(ProviderError, match="401"):
        c.query("p", 1)
    assert len(calls) == 1


def test_missing_key(tmp_path, monkeypatch):
    monkeypatch.delenv("TEST_LLM_KEY", raising=False)
    c = LLMClient(live_config(tmp_path), transport=httpx.MockTransport(lambda r: httpx.Response(200)))
    with pytest.raises(ProviderError, match="TEST_LLM_KEY"):
        c.query("p", 1)


def test_malformed_payload(tmp_path, monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "k")
    c = LLMClient(live_config(tmp_path), transport=httpx.MockTransport(lambda r: httpx.Response(200, json={"x": 1})))
    with pytest.raises(ProviderError, match="malformed"):
        c.query("p", 1)


# ---------------------------------------------------------------- extraction

RESPONSE = """\
Reasoning about the step case first.

```smt2
(declare-fun plus (Nat Nat) Nat)
(forall ((x Nat) (y Nat)) (= (plus x (succ y)) (succ (plus x y))))
(forall ((a Nat) (b Nat)) (= (plus a (succ b)) (succ (plus a b))))
(forall ((x Nat)) (= (plus x zero) x)
```

Also, inline: (forall ((x Nat)) (= (mult x zero) zero)) and (assert (forall ((z Nat)) (= (plus z zero) z)))
and a broken one (forall ((x Nat)) (= (plus x banana) x))
"""


def test_candidate_texts_order():
    cs = candidate_texts(RESPONSE)
    assert cs[0].startswith("(forall ((x Nat) (y Nat))")
    assert not any(c.startswith("(declare-fun") for c in cs)
    assert any("mult x zero" in c for c in cs)


def test_extraction_filters_and_dedupes(nat_task):
    diags = []
    prov = Provenance("strategy1", 1, 0, "m")
    cs = extract_conjectures(RESPONSE, nat_task, cap=3, provenance=prov, tokens=(5, 6),
                             diagnostics=diags)
    texts = [c.smt2 for c in cs]
    assert texts == [
        "(forall ((x Nat) (y Nat)) (= (plus x (succ y)) (succ (plus x y))))",
        "(forall ((x Nat)) (= (mult x zero) zero))",
        "(forall ((z Nat)) (= (plus z zero) z))",
    ]
    assert all(c.provenance == prov and c.tokens == (5, 6) for c in cs)
    reasons = [d.reason for d in diags]
    assert "duplicate" in reasons
    assert sum(r.startswith("rejected") for r in reasons) == 2  # unbalanced and unknown symbol
    assert all(isinstance(d, Diagnostic) for d in diags)


def test_cap_is_enforced(nat_task):
    diags = []
    cs = extract_conjectures(RESPONSE, nat_task, cap=1, diagnostics=diags)
    assert len(cs) == 1
    assert any("cap" in d.reason for d in diags)


def test_restated_axiom_dropped(nat_task):
    diags = []
    raw = "```\n(forall ((u Nat)) (= (plus zero u) u))\n```"
    assert extract_conjectures(raw, nat_task, diagnostics=diags) == []
    assert diags[0].reason == "restates an axiom"


def test_nothing_to_extract(nat_task):
    assert extract_conjectures("I could not find any lemma.", nat_task) == []


def test_running_example_conjecture(nat_task, replay_client):
    p = render_prompt(STRATEGY1, preprocess_label(nat_task))
    (c,) = extract_conjectures(replay_client.query(p, 1).text, nat_task)
    want = parse_formula("(forall ((x Nat)(y Nat)) (= (plus (mult y x) y) (mult y (succ x))))", nat_task)
    assert alpha_equal(c.formula, want)
