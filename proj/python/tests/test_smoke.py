# Copyright 2026  The minibench Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

import itertools
import json
import math
import struct
import wave

import numpy as np
import pytest

import minibench as mb


def write_record(f, feats):
    """Pure-Python writer of one cache record; returns its byte length."""
    L, T, D = feats.shape
    head = b"MSPB" + struct.pack("<IBHII", 1, 1, L, T, D)
    body = np.ascontiguousarray(feats, dtype="<f4").tobytes()
    f.write(head + body)
    return len(head) + len(body)


def test_foreign_cache_reads_natively(tmp_path):
    rng = np.random.default_rng(3)
    feats = {f"u{i}": rng.standard_normal((2, 3 + i, 5)).astype(np.float32) for i in range(4)}
    offset = 0
    with open(tmp_path / "part.msb", "wb") as f, open(tmp_path / "index.jsonl", "w") as idx:
        for uid, x in feats.items():
            n = write_record(f, x)
            idx.write(json.dumps({"id": uid, "file": "part.msb", "offset": offset, "len": n}) + "\n")
            offset += n
    reader = mb.CacheReader(str(tmp_path))
    assert len(reader) == 4
    assert reader.ids() == list(feats)
    for uid, x in feats.items():
        assert np.array_equal(reader.read(uid), x)


def test_native_cache_matches_python_layout(tmp_path):
    x = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
    entries = mb.write_cache(tmp_path, {"a": x, "b": -x})
    assert [e["id"] for e in entries] == ["a", "b"]
    data = (tmp_path / entries[1]["file"]).read_bytes()
    rec = data[entries[1]["offset"]:entries[1]["offset"] + entries[1]["len"]]
    assert rec[:4] == b"MSPB"
    assert struct.unpack("<IBHII", rec[4:19]) == (1, 1, 2, 3, 4)
    assert np.array_equal(np.frombuffer(rec[19:], "<f4").reshape(2, 3, 4), -x)
    assert mb.encode_record("b", -x) == rec


def test_corrupt_record_raises():
    rec = mb.encode_record("u", np.ones((1, 2, 3), np.float32))
    with pytest.raises(mb.FormatError):
        mb.decode_record(rec[:-1])
    with pytest.raises(mb.FormatError):
        mb.decode_record(b"XSPB" + rec[4:])


def test_pooling_matches_numpy():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 17, 6)).astype(np.float32) * 4 + 1
    xd = x.astype(np.float64)
    mu = xd.mean(-1, keepdims=True)
    var = xd.var(-1, keepdims=True)
    expect = ((xd - mu) / np.sqrt(var + 1e-5)).mean(1)
    assert np.max(np.abs(mb.pool_record(x, True) - expect)) < 1e-5
    assert np.max(np.abs(mb.pool_record(x, False) - xd.mean(1))) < 1e-5


def test_ctc_single_path():
    # One frame, one label: loss is -log p(label).
    lp = np.log(np.array([[0.3, 0.7]]))
    loss, feasible, grad = mb.ctc_loss(lp, [1])
    assert feasible
    assert loss == pytest.approx(-math.log(0.7))
    assert grad.shape == (1, 2)
    loss, feasible, _ = mb.ctc_loss(lp, [1, 1])
    assert not feasible and math.isinf(loss)


def test_ctc_matches_enumeration():
    rng = np.random.default_rng(1)
    T, V, label = 4, 3, [1, 2]
    logits = rng.standard_normal((T, V))
    lp = logits - np.log(np.exp(logits).sum(1, keepdims=True))
    total = 0.0
    for path in itertools.product(range(V), repeat=T):
        collapsed = [k for i, k in enumerate(path) if k != 0 and (i == 0 or path[i - 1] != k)]
        if collapsed == label:
            total += math.exp(sum(lp[t, k] for t, k in enumerate(path)))
    loss, _, _ = mb.ctc_loss(lp, label)
    assert loss == pytest.approx(-math.log(total), rel=1e-10)


def test_signal_and_text_metrics():
    rng = np.random.default_rng(2)
    s = rng.standard_normal(800)
    assert mb.si_sdr(3.0 * s, s) == pytest.approx(100.0)
    n = rng.standard_normal(800)
    e = s + 0.1 * n
    a = e @ s / (s @ s)
    expect = 10 * math.log10((a * a * (s @ s)) / np.sum((a * s - e) ** 2))
    assert mb.si_sdr(e, s) == pytest.approx(expect, rel=1e-9)
    assert mb.si_sdri(e, e, s) == 0.0
    assert mb.wer("a b c d", "a x c") == pytest.approx(0.5)
    with pytest.raises(mb.InvalidArgument):
        mb.si_sdr(s, s[:-1])


def test_ranks_and_spearman():
    assert mb.average_ranks([3.0, 1.0, 1.0]) == [3.0, 1.5, 1.5]
    assert mb.spearman_orders(list("abcd"), list("abcd")) == pytest.approx(1.0)
    assert mb.spearman_orders(list("abcd"), list("dcba")) == pytest.approx(-1.0)
    assert mb.spearman_orders(list("abcd"), list("bacd")) == pytest.approx(1 - 6 * 2 / 60)


def test_scoring():
    assert mb.single_metric("ASR", {"wer": 6.42}) == pytest.approx(93.58)
    assert mb.single_metric("SE", {"pesq": 2.6, "stoi": 90.0}) == pytest.approx(1.75)
    assert mb.normalized_score([2.0, 4.0], [1.0, 2.0], [3.0, 6.0]) == pytest.approx(500.0)
    lb = mb.leaderboard(["ASR", "SID"], {"base": [1, 1], "x": [3, 2], "y": [2, 3]},
                        baseline="base", reference=["x", "y", "base"])
    scores = {e["model"]: e["score"] for e in lb["entries"]}
    assert scores["x"] == pytest.approx(750.0)
    assert scores["y"] == pytest.approx(750.0)
    assert scores["base"] == 0.0
    assert lb["sota"] == ["x", "y"]


def test_cost_model():
    args = dict(upstream_macs=1e10, downstream_macs=1e9, steps_full=1000,
                steps_mini=200, extraction_passes=50, backward_ratio=2.0)
    assert mb.cost_full(**args) == pytest.approx(1e10 * 1000 + 3e9 * 1000)
    assert mb.cost_mini(**args) == pytest.approx(1e10 * 50 + 3e9 * 200)
    arch = {"layers": [{"type": "linear", "in": 4, "out": 6}]}
    assert mb.forward_macs(arch, [10, 5]) == 24 * 15


def write_wav(path, samples, rate=16000):
    pcm = np.clip(np.round(samples * 32767), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(pcm.tobytes())


def test_manifest_storage_and_sampling(tmp_path):
    rng = np.random.default_rng(4)
    lines = []
    for i in range(10):
        n = 4000 + 160 * i
        write_wav(tmp_path / f"u{i}.wav", 0.1 * rng.standard_normal(n))
        lines.append(json.dumps({"id": f"u{i}", "audio": f"u{i}.wav", "n": n,
                                 "speaker": f"s{i % 2}"}))
    (tmp_path / "m.jsonl").write_text("\n".join(lines) + "\n")
    utts = mb.load_manifest(tmp_path / "m.jsonl")
    assert [u["id"] for u in utts] == [f"u{i}" for i in range(10)]

    est = mb.estimate_storage(tmp_path / "m.jsonl", layers=2, dim=3)
    frames = sum((4000 + 160 * i - 400) // 160 + 1 for i in range(10))
    assert est["payload_bytes"] == 4 * 2 * 3 * frames
    assert est["header_bytes"] == 19 * 10
    pooled = mb.estimate_storage(tmp_path / "m.jsonl", layers=2, dim=3, pooled=True)
    assert pooled["payload_bytes"] == 4 * 2 * 3 * 10

    subset, prov = mb.apply_policy(tmp_path / "m.jsonl", {"type": "per_speaker", "count": 2})
    assert len(subset) == 4
    assert prov


def test_extract_fbank_shape():
    t = np.arange(16000) / 16000.0
    x = (0.3 * np.sin(2 * np.pi * 440 * t)).astype(np.float32)
    f = mb.extract({"type": "fbank", "n_mels": 40}, "ASR", "tone", x)
    assert f.shape == (1, (16000 - 400) // 160 + 1, 40)
    assert np.all(np.isfinite(f))
    # CMVN: zero mean per dimension.
    assert np.max(np.abs(f[0].mean(0))) < 1e-4


TINY = {
    "name": "tiny",
    "seed": 5,
    "tasks": {
        task: {
            "synth": dict({"num_train": 8, "num_dev": 2, "num_test": 3, "num_speakers": 2,
                           "min_samples": 4000, "max_samples": 5000},
                          **({"vocab_size": 3} if task == "ASR" else {})),
            "sampling": {"type": "global_fraction", "fraction": 0.5},
            "probe": {"hidden": 4, "blstm_layers": 1, "steps": 6, "batch_size": 2,
                      "log_every": 3, "eval_every": 3, "optimizer": {"lr": 0.01}},
            "steps_full": 1000,
        }
        for task in ("ASR", "SID", "SE", "SS")
    },
    "models": [
        {"name": "FBANK", "extractor": {"type": "fbank", "n_mels": 4}},
        {"name": "stack", "extractor": {"type": "context_stack", "n_mels": 8,
                                        "layers": 2, "context": 1}},
    ],
    "scoring": {"baseline": "FBANK"},
}


def test_run_and_report(tmp_path):
    cfg = tmp_path / "tiny.json"
    cfg.write_text(json.dumps(TINY))
    lb = mb.run(cfg, tmp_path / "run", jobs=2)
    assert {e["model"] for e in lb["entries"]} == {"FBANK", "stack"}
    assert lb["tasks"] == ["ASR", "SID", "SE", "SS"]
    report = mb.render_report(tmp_path / "run")
    assert "stack" in report
    with pytest.raises(mb.ConfigError):
        mb.run(tmp_path / "missing.json", tmp_path / "r2")
