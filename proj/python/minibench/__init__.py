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

"""Python access to the minibench harness."""

import json as _json
import os as _os

from . import _minibench as _core
from ._minibench import (
    CacheReader,
    ConfigError,
    Error,
    FormatError,
    InvalidArgument,
    NotFoundError,
    average_ranks,
    ctc_greedy_decode,
    ctc_loss,
    decode_record,
    encode_record,
    normalized_score,
    pool_record,
    si_sdr,
    si_sdri,
    single_metric,
    wer,
)

__version__ = _core.__version__


def spearman(ranking_a, ranking_b):
    """Spearman rho between two {model: rank} mappings over the same models."""
    a, b = dict(ranking_a), dict(ranking_b)
    return _core.spearman(list(a), list(a.values()), list(b), list(b.values()))


def spearman_orders(order_a, order_b):
    """Spearman rho between two best-first model orders."""
    return spearman({m: i + 1 for i, m in enumerate(order_a)},
                    {m: i + 1 for i, m in enumerate(order_b)})


def leaderboard(tasks, scores, baseline="FBANK", reference=None):
    """Normalized-score leaderboard.  `scores` maps model -> per-task scores."""
    rows = [(m, list(v)) for m, v in scores.items()]
    return _json.loads(_core.leaderboard(list(tasks), rows, baseline, reference))


def cost_full(**inputs):
    return _core.cost_full(_json.dumps(inputs))


def cost_mini(**inputs):
    return _core.cost_mini(_json.dumps(inputs))


def forward_macs(arch, schedule):
    """MACs of `arch` (dict in the config's arch schema) over input lengths."""
    return _core.forward_macs(_json.dumps(arch), list(schedule))


def write_cache(directory, records):
    """Writes {utt_id: [L, T, D] array} and returns the index entries."""
    items = records.items() if hasattr(records, "items") else records
    text = _core.write_cache(_os.fspath(directory), list(items))
    return [_json.loads(line) for line in text.splitlines() if line]


def estimate_storage(manifest, layers, dim, pooled=False, window=400, hop=160):
    return _json.loads(_core.estimate_storage(_os.fspath(manifest), layers, dim,
                                              pooled, window, hop))


def extract(spec, task, utt_id, wave):
    """Features of one waveform from a native extractor spec dict."""
    return _core.extract(_json.dumps(spec), task, utt_id, wave)


def load_manifest(path):
    """Utterance records of a JSON-lines manifest, as dicts."""
    text = _core.load_manifest(_os.fspath(path))
    utts = [_json.loads(line) for line in text.splitlines() if line]
    return [u for u in utts if "_provenance" not in u]


def apply_policy(manifest, policy):
    """Draws a subset; returns (utterance dicts, provenance dict)."""
    text, prov = _core.apply_policy(_os.fspath(manifest), _json.dumps(policy))
    utts = [_json.loads(line) for line in text.splitlines() if line]
    return [u for u in utts if "_provenance" not in u], _json.loads(prov)


def run(config, out, jobs=1, seed=None):
    """Runs every stage and returns the parsed leaderboard."""
    _core.run(_os.fspath(config), _os.fspath(out), jobs, seed)
    with open(_os.path.join(_os.fspath(out), "leaderboard.json")) as f:
        return _json.load(f)


def render_report(run_dir):
    return _core.render_report(_os.fspath(run_dir))
