"""Dataset descriptors: a flat JSON object describing one prize/pool pair.

Keys (all others are rejected)::

    label            string, required
    pool_size        integer, required
    winner_count     integer, required
    observed_ranks   array of integers or null, required (null = on the list, rank unknown)
    censored_count   integer, required
    list_cutoff_rank integer or null, optional
    notes            string, optional

Serialisation is canonical: fixed key order, two-space indent, UTF-8,
trailing newline.
"""
from __future__ import annotations

import json
import re
import warnings
from importlib import resources
from pathlib import Path

from .inference import DatasetError, PrizeDataset

__all__ = [
    "DescriptorError",
    "PlaceholderRanksWarning",
    "KEYS",
    "BUNDLED",
    "parse_descriptor",
    "loads_descriptor",
    "dumps_descriptor",
    "bundled_path",
    "resolve_descriptor",
]

KEYS = ("label", "pool_size", "winner_count", "observed_ranks", "censored_count",
        "list_cutoff_rank", "notes")
REQUIRED = ("label", "pool_size", "winner_count", "observed_ranks", "censored_count")
BUNDLED = ("nobel", "abel", "fields")


class DescriptorError(ValueError):
    def __init__(self, message, key=None, line=None, source=None):
        where = f"{source or '<descriptor>'}"
        if line is not None:
            where += f":{line}"
        if key is not None:
            where += f" [{key}]"
        super().__init__(f"{where}: {message}")
        self.key = key
        self.line = line


class PlaceholderRanksWarning(UserWarning):
    """The descriptor lists winners on the top list whose ranks are not given."""


def _key_line(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if m is None:
        return None
    return text.count("\n", 0, m.start()) + 1


def _reject_duplicates(pairs):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise DescriptorError(f"duplicate key {k!r}", key=k)
        seen[k] = v
    return seen


def loads_descriptor(text: str, source: str | None = None) -> PrizeDataset:
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as err:
        raise DescriptorError(f"malformed JSON: {err.msg}", line=err.lineno, source=source) from None
    except DescriptorError as err:
        raise DescriptorError(f"duplicate key {err.key!r}", key=err.key,
                              line=_key_line(text, err.key), source=source) from None
    if not isinstance(doc, dict):
        raise DescriptorError("top level must be a JSON object", line=1, source=source)

    for key in doc:
        if key not in KEYS:
            raise DescriptorError(f"unknown key {key!r}", key=key, line=_key_line(text, key),
                                  source=source)
    for key in REQUIRED:
        if key not in doc:
            raise DescriptorError(f"missing required key {key!r}", key=key, source=source)

    def bad(key, msg):
        return DescriptorError(msg, key=key, line=_key_line(text, key), source=source)

    ranks = doc["observed_ranks"]
    if not isinstance(ranks, list):
        raise bad("observed_ranks", "observed_ranks must be an array")
    for k in ranks:
        if k is not None and (isinstance(k, bool) or not isinstance(k, int)):
            raise bad("observed_ranks", f"rank {k!r} is not an integer or null")
    for key in ("label", "notes"):
        if key in doc and not isinstance(doc[key], str):
            raise bad(key, f"{key} must be a string")

    try:
        ds = PrizeDataset(
            pool_size=doc["pool_size"],
            winner_count=doc["winner_count"],
            observed_ranks=tuple(ranks),
            censored_count=doc["censored_count"],
            list_cutoff_rank=doc.get("list_cutoff_rank"),
            label=doc["label"],
            notes=doc.get("notes", ""),
        )
    except DatasetError as err:
        raise bad(err.key, str(err)) from None

    if ds.has_placeholders:
        warnings.warn(
            f"{source or ds.label}: {ds.n_placeholders} observed ranks are placeholders; "
            "likelihoods use only their count",
            PlaceholderRanksWarning,
            stacklevel=2,
        )
    return ds


def parse_descriptor(path) -> PrizeDataset:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise DescriptorError(f"cannot read descriptor: {err.strerror}", source=str(path)) from None
    return loads_descriptor(text, source=str(path))


def dumps_descriptor(ds: PrizeDataset) -> str:
    doc = {
        "label": ds.label,
        "pool_size": int(ds.pool_size),
        "winner_count": int(ds.winner_count),
        "observed_ranks": [None if k is None else int(k) for k in ds.observed_ranks],
        "censored_count": int(ds.censored_count),
        "list_cutoff_rank": None if ds.list_cutoff_rank is None else int(ds.list_cutoff_rank),
        "notes": ds.notes,
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise DescriptorError(f"no bundled descriptor named {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files("prizecorr") / "data" / f"{name}.json"))


def resolve_descriptor(arg: str) -> Path:
    """A file path, or the name of a bundled descriptor when no such file exists."""
    p = Path(arg)
    if not p.exists() and arg in BUNDLED:
        return bundled_path(arg)
    return p
