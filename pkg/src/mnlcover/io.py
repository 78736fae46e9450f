"""JSON (de)serialization. Product indices are 1-based in files and 0-based in memory."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .core import Category, Instance, SolveResult
from .multisegment import MultiSegmentInstance, SegmentAssignment
from .randomized import RandomizedPolicy


def _ids(S) -> list:
    return [i + 1 for i in sorted(S)]


def instance_from_dict(d: dict) -> Instance:
    try:
        cats = [
            Category([int(i) - 1 for i in c["members"]], c["threshold"])
            for c in d.get("categories", [])
        ]
        return Instance(d["revenues"], d["weights"], cats)
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed instance: {e!r}") from None


def instance_to_dict(instance: Instance) -> dict:
    return {
        "revenues": list(instance.revenues),
        "weights": list(instance.weights),
        "categories": [
            {"members": _ids(c.members), "threshold": int(c.threshold)} for c in instance.categories
        ],
    }


def multisegment_from_dict(d: dict) -> MultiSegmentInstance:
    base = instance_from_dict(d)
    try:
        segs = d["segments"]
        return MultiSegmentInstance(base, [s["prob"] for s in segs], [s["weights"] for s in segs])
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed segments: {e!r}") from None


def multisegment_to_dict(ms: MultiSegmentInstance) -> dict:
    d = instance_to_dict(ms.base)
    d["segments"] = [
        {"prob": t, "weights": list(w)} for t, w in zip(ms.arrival_probs, ms.segment_weights)
    ]
    return d


def result_to_dict(res: SolveResult) -> dict:
    return {"assortment": _ids(res.assortment), "value": res.value, "method": res.method}


def policy_to_dict(policy: RandomizedPolicy, value: float) -> dict:
    return {
        "support": [{"assortment": _ids(S), "prob": p} for S, p in policy.support],
        "value": value,
    }


def policy_from_dict(d: dict) -> tuple[RandomizedPolicy, float]:
    support = [([i - 1 for i in e["assortment"]], e["prob"]) for e in d["support"]]
    return RandomizedPolicy(tuple(support)), float(d.get("value", float("nan")))


def assignment_to_dict(a: SegmentAssignment) -> dict:
    return {"assortments": [_ids(S) for S in a.assortments], "value": a.value, "method": a.method}


def framing_to_dict(placement: Sequence, value: float) -> dict:
    return {"placement": [None if i is None else i + 1 for i in placement], "value": value}


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: invalid JSON ({e})") from None


def load_instance(path) -> Instance:
    return instance_from_dict(load_json(path))


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
