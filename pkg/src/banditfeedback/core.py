"""Domain types shared by every module: contexts, logged events, datasets.

A context is the vector of organic view counts of one user over the item
catalogue; it is represented as a 1-d integer numpy array of length K. The
parameter vector ``beta`` is a float array of length K*K indexed by
``history_item * K + action``.

Datasets are stored column-wise so the trainers and estimators can work on
whole arrays; :class:`BanditEvent` is the row view.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

LOG_FORMAT = "banditlog-v1"


class DatasetError(ValueError):
    """A dataset violates one of its invariants."""


@dataclass(frozen=True)
class BanditEvent:
    user_id: int
    context: np.ndarray
    action: int
    click: int
    propensity: float


@dataclass(frozen=True, eq=False)
class LogDataset:
    """Logged bandit feedback.

    Attributes
    ----------
    num_items:
        Catalogue size K.
    user_ids, actions, clicks:
        Integer arrays of shape (N,).
    views:
        Integer array of shape (N, K); row n is the context of event n.
    propensities:
        Float array of shape (N,); logging probability of the logged action.
    """

    num_items: int
    user_ids: np.ndarray = field(repr=False)
    views: np.ndarray = field(repr=False)
    actions: np.ndarray = field(repr=False)
    clicks: np.ndarray = field(repr=False)
    propensities: np.ndarray = field(repr=False)

    def __post_init__(self):
        k = int(self.num_items)
        object.__setattr__(self, "num_items", k)
        views = np.asarray(self.views, dtype=np.int64)
        if views.size == 0:
            views = views.reshape(0, k)
        cols = {
            "user_ids": np.asarray(self.user_ids, dtype=np.int64).reshape(-1),
            "views": views,
            "actions": np.asarray(self.actions, dtype=np.int64).reshape(-1),
            "clicks": np.asarray(self.clicks, dtype=np.int64).reshape(-1),
            "propensities": np.asarray(self.propensities, dtype=np.float64).reshape(-1),
        }
        n = cols["actions"].shape[0]
        if views.ndim != 2 or views.shape != (n, k):
            raise DatasetError(f"views must have shape (N, K) = ({n}, {k}), got {views.shape}")
        for name, arr in cols.items():
            if arr.shape[0] != n:
                raise DatasetError(f"column {name} has length {arr.shape[0]}, expected {n}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.actions.shape[0])

    def __iter__(self) -> Iterator[BanditEvent]:
        for n in range(len(self)):
            yield self.event(n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogDataset):
            return NotImplemented
        return self.num_items == other.num_items and all(
            np.array_equal(getattr(self, c), getattr(other, c))
            for c in ("user_ids", "views", "actions", "clicks", "propensities")
        )

    def event(self, n: int) -> BanditEvent:
        return BanditEvent(
            user_id=int(self.user_ids[n]),
            context=self.views[n],
            action=int(self.actions[n]),
            click=int(self.clicks[n]),
            propensity=float(self.propensities[n]),
        )

    @property
    def weights(self) -> np.ndarray:
        """Inverse propensity weights ``1 / propensity``."""
        return 1.0 / self.propensities

    def subset(self, index) -> "LogDataset":
        return LogDataset(
            self.num_items,
            self.user_ids[index],
            self.views[index],
            self.actions[index],
            self.clicks[index],
            self.propensities[index],
        )

    @classmethod
    def from_events(cls, events: Iterable[BanditEvent], num_items: int) -> "LogDataset":
        events = list(events)
        return cls(
            num_items,
            [e.user_id for e in events],
            np.array([np.asarray(e.context) for e in events], dtype=np.int64).reshape(len(events), num_items)
            if events
            else np.zeros((0, num_items), dtype=np.int64),
            [e.action for e in events],
            [e.click for e in events],
            [e.propensity for e in events],
        )

    @classmethod
    def concat(cls, parts: list["LogDataset"]) -> "LogDataset":
        k = parts[0].num_items
        return cls(
            k,
            np.concatenate([p.user_ids for p in parts]),
            np.concatenate([p.views for p in parts]),
            np.concatenate([p.actions for p in parts]),
            np.concatenate([p.clicks for p in parts]),
            np.concatenate([p.propensities for p in parts]),
        )


def validate_dataset(data: LogDataset) -> None:
    """Raise :class:`DatasetError` naming the first offending event, if any."""
    k = data.num_items
    if k < 1:
        raise DatasetError(f"num_items must be >= 1, got {k}")
    if data.views.shape[1] != k:
        raise DatasetError(f"context length at event 0: expected {k}, got {data.views.shape[1]}")
    checks = [
        (data.propensities <= 0, "nonpositive propensity"),
        (~np.isfinite(data.propensities) | (data.propensities > 1), "propensity above 1 or not finite"),
        ((data.actions < 0) | (data.actions >= k), "action out of range"),
        ((data.clicks != 0) & (data.clicks != 1), "click not in {0,1}"),
        ((data.views < 0).any(axis=1), "negative view count"),
    ]
    first = None
    for bad, message in checks:
        idx = np.flatnonzero(bad)
        if idx.size and (first is None or idx[0] < first[0]):
            first = (int(idx[0]), message)
    if first is not None:
        raise DatasetError(f"{first[1]} at event {first[0]}")


def check_beta(beta, num_items: int) -> np.ndarray:
    """Return ``beta`` as a float array, checking length K*K and finiteness."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (num_items * num_items,):
        raise ValueError(f"beta must have length {num_items * num_items}, got shape {beta.shape}")
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta has non-finite entries")
    return beta


# -- banditlog-v1 files ------------------------------------------------------


def write_log(data: LogDataset, path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"num_items": data.num_items, "format": LOG_FORMAT}) + "\n")
        for n in range(len(data)):
            record = {
                "user_id": int(data.user_ids[n]),
                "views": [int(v) for v in data.views[n]],
                "action": int(data.actions[n]),
                "click": int(data.clicks[n]),
                "propensity": float(data.propensities[n]),
            }
            fh.write(json.dumps(record) + "\n")


def read_log(path) -> LogDataset:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise DatasetError(f"{path}: empty log file")
    header = json.loads(lines[0])
    if header.get("format") != LOG_FORMAT:
        raise DatasetError(f"{path}: unsupported log format {header.get('format')!r}")
    k = int(header["num_items"])
    records = [json.loads(line) for line in lines[1:] if line.strip()]
    for i, r in enumerate(records):
        if len(r["views"]) != k:
            raise DatasetError(f"context length at event {i}: expected {k}, got {len(r['views'])}")
    data = LogDataset(
        k,
        [r["user_id"] for r in records],
        np.array([r["views"] for r in records], dtype=np.int64).reshape(len(records), k),
        [r["action"] for r in records],
        [r["click"] for r in records],
        [r["propensity"] for r in records],
    )
    validate_dataset(data)
    return data
