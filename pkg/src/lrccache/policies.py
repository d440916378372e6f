"""Bounded block cache with pluggable eviction: LRU, LFU, LRC, LRC-Online, MIN.

Per-block bookkeeping lives in slot-indexed int64 arrays so the victim scan
can run in the compiled kernel. A block gets a slot the first time the cache
hears about it and keeps it for the cache's lifetime.

Victim order for every policy is ``(policy key, last use, slot)``, smallest
first. Every insert and access advances a logical clock, so last-use stamps
are unique among resident blocks and the slot never decides a tie in practice.
"""
from __future__ import annotations

import bisect
import csv
import io
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import EvictionImpossibleError, InvalidArgumentError, UncacheableError

POLICIES = ("lru", "lfu", "lrc", "lrc-online", "min")
REFCOUNT_POLICIES = ("lrc", "lrc-online")
NEVER = 2**62

LOG_HEADER = ("step", "policy", "event", "block", "key_value")


@dataclass
class EvictionDecision:
    victims: list[str]
    policy: str
    keys: list[int | str] = field(default_factory=list)

    @property
    def reason(self) -> list[tuple[str, int | str]]:
        return list(zip(self.victims, self.keys))


class EvictionLog:
    """Append-only rows of ``step,policy,event,block,key_value``."""

    def __init__(self):
        self.rows: list[tuple] = []

    def append(self, step, policy, event, block, key_value):
        self.rows.append((step, policy, event, block, key_value))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_HEADER)
        w.writerows(self.rows)
        return buf.getvalue()


class Cache:
    """Single-owner mutable cache state for one policy.

    ``profile`` seeds the reference counts for the LRC policies; later changes
    arrive through :meth:`sync_profile`. ``future`` is the complete access
    sequence the MIN oracle looks ahead into; :meth:`record_access` must then
    be called exactly once per element, in order.
    """

    def __init__(self, policy: str, capacity_bytes: int,
                 profile: Mapping[str, int] | None = None,
                 future: Sequence[str] | None = None,
                 log: EvictionLog | None = None):
        if policy not in POLICIES:
            raise InvalidArgumentError(f"unknown policy {policy!r}; choose from {POLICIES}")
        if capacity_bytes < 1:
            raise InvalidArgumentError("capacity_bytes must be >= 1")
        if policy == "min" and future is None:
            raise InvalidArgumentError("min policy needs the future access sequence")
        self.policy = policy
        self.capacity_bytes = int(capacity_bytes)
        self.log = log
        self.step = 0  # stamped onto log rows; the simulator advances it

        self.resident: dict[str, int] = {}
        self.pinned: set[str] = set()
        self.used_bytes = 0
        self._clock = 0

        self._slot: dict[str, int] = {}
        self._ids: list[str] = []
        n = 64
        self._last = np.zeros(n, dtype=np.int64)
        self._freq = np.zeros(n, dtype=np.int64)
        self._rc = np.zeros(n, dtype=np.int64)
        self._negnext = np.zeros(n, dtype=np.int64)
        self._pin = np.zeros(n, dtype=np.uint8)
        self._res = np.zeros(n, dtype=np.int64)
        self._res_pos: dict[int, int] = {}

        self._future_pos: dict[str, list[int]] = {}
        self._cursor = 0
        self._future_len = 0
        if future is not None:
            for i, b in enumerate(future):
                self._future_pos.setdefault(b, []).append(i)
            self._future = list(future)
            self._future_len = len(self._future)

        if profile:
            self.sync_profile(profile)

    # slot storage -----------------------------------------------------

    def _slot_of(self, b: str) -> int:
        s = self._slot.get(b)
        if s is not None:
            return s
        s = len(self._ids)
        if s == len(self._last):
            m = 2 * s
            for name in ("_last", "_freq", "_rc", "_negnext", "_pin"):
                old = getattr(self, name)
                new = np.zeros(m, dtype=old.dtype)
                new[:s] = old
                setattr(self, name, new)
        self._slot[b] = s
        self._ids.append(b)
        return s

    def _primary(self) -> np.ndarray:
        if self.policy == "lru":
            return self._last
        if self.policy == "lfu":
            return self._freq
        if self.policy == "min":
            return self._negnext
        return self._rc

    def _key(self, s: int) -> int | str:
        if self.policy == "lru":
            return int(self._last[s])
        if self.policy == "lfu":
            return int(self._freq[s])
        if self.policy == "min":
            nxt = -int(self._negnext[s])
            return "inf" if nxt >= NEVER else nxt
        return int(self._rc[s])

    def _next_use(self, b: str, start: int) -> int:
        pos = self._future_pos.get(b)
        if not pos:
            return NEVER
        i = bisect.bisect_left(pos, start)
        return pos[i] if i < len(pos) else NEVER

    # queries ----------------------------------------------------------

    def __contains__(self, b: str) -> bool:
        return b in self.resident

    def __len__(self) -> int:
        return len(self.resident)

    @property
    def free_bytes(self) -> int:
        return self.capacity_bytes - self.used_bytes

    def refcount(self, b: str) -> int:
        s = self._slot.get(b)
        return 0 if s is None else int(self._rc[s])

    def frequency(self, b: str) -> int:
        s = self._slot.get(b)
        return 0 if s is None else int(self._freq[s])

    def last_use(self, b: str) -> int:
        s = self._slot.get(b)
        return 0 if s is None else int(self._last[s])

    def next_use(self, b: str) -> int:
        """Position of the next reference to ``b`` in the future sequence (MIN only)."""
        s = self._slot.get(b)
        if s is None or b not in self.resident:
            return self._next_use(b, self._cursor)
        return -int(self._negnext[s])

    @property
    def profile(self) -> dict[str, int]:
        return {b: int(self._rc[s]) for b, s in self._slot.items()}

    def recency_order(self) -> list[str]:
        """Resident blocks from most to least recently used."""
        return sorted(self.resident, key=lambda b: -self._last[self._slot[b]])

    # mutations --------------------------------------------------------

    def record_access(self, b: str, hit: bool = True):
        """Note a reference to ``b``; ``hit`` is informational only."""
        if self._future_len:
            if self._cursor >= self._future_len or self._future[self._cursor] != b:
                expected = self._future[self._cursor] if self._cursor < self._future_len else None
                raise InvalidArgumentError(
                    f"access {b!r} does not match the future sequence (expected {expected!r})")
            self._cursor += 1
        if b not in self.resident:
            return
        s = self._slot[b]
        self._clock += 1
        self._last[s] = self._clock
        self._freq[s] += 1
        if self._future_len:
            self._negnext[s] = -self._next_use(b, self._cursor)

    def pin(self, b: str):
        if b not in self.resident:
            raise InvalidArgumentError(f"cannot pin non-resident block {b!r}")
        self.pinned.add(b)
        self._pin[self._slot[b]] = 1

    def unpin(self, b: str):
        if b in self.pinned:
            self.pinned.discard(b)
            self._pin[self._slot[b]] = 0

    def unpin_all(self):
        for b in list(self.pinned):
            self.unpin(b)

    def sync_profile(self, updates: Mapping[str, int]):
        """Overwrite the listed reference counts; others stay as they are."""
        for b, v in updates.items():
            if v < 0:
                raise InvalidArgumentError(f"negative reference count {v} for {b!r}")
        for b, v in updates.items():
            s = self._slot_of(b)
            self._rc[s] = v
        return self

    def evict_candidate(self) -> str:
        if not self.resident:
            raise EvictionImpossibleError("cache is empty")
        s = kernels.select_victim(self._primary(), self._last, self._res,
                                  len(self.resident), self._pin)
        if s < 0:
            raise EvictionImpossibleError("every resident block is pinned")
        return self._ids[s]

    def evict(self, b: str):
        if b in self.pinned:
            raise InvalidArgumentError(f"cannot evict pinned block {b!r}")
        size = self.resident.pop(b)
        self.used_bytes -= size
        s = self._slot[b]
        pos = self._res_pos.pop(s)
        last = len(self.resident)
        if pos != last:
            moved = int(self._res[last])
            self._res[pos] = moved
            self._res_pos[moved] = pos

    def insert(self, b: str, size: int) -> EvictionDecision | None:
        """Make ``b`` resident, evicting the policy's worst blocks as needed.

        Nothing is evicted when the insert cannot succeed.
        """
        if b in self.resident:
            raise InvalidArgumentError(f"block {b!r} already resident")
        if size > self.capacity_bytes:
            raise UncacheableError(f"block {b!r} ({size} B) exceeds capacity {self.capacity_bytes} B")
        need = self.used_bytes + size - self.capacity_bytes
        decision = None
        if need > 0:
            evictable = sum(sz for x, sz in self.resident.items() if x not in self.pinned)
            if evictable < need:
                raise EvictionImpossibleError(
                    f"need {need} B for {b!r} but only {evictable} B are unpinned")
            decision = EvictionDecision([], self.policy)
            while self.used_bytes + size > self.capacity_bytes:
                victim = self.evict_candidate()
                key = self._key(self._slot[victim])
                self.evict(victim)
                decision.victims.append(victim)
                decision.keys.append(key)
                if self.log is not None:
                    self.log.append(self.step, self.policy, "evict", victim, key)

        s = self._slot_of(b)
        self.resident[b] = size
        self.used_bytes += size
        n = len(self.resident) - 1
        if n >= len(self._res):
            grown = np.zeros(2 * len(self._res), dtype=np.int64)
            grown[: len(self._res)] = self._res
            self._res = grown
        self._res[n] = s
        self._res_pos[s] = n
        self._clock += 1
        self._last[s] = self._clock
        self._freq[s] = 0
        self._pin[s] = 0
        if self._future_len:
            self._negnext[s] = -self._next_use(b, self._cursor)
        if self.log is not None:
            self.log.append(self.step, self.policy, "insert", b, self._key(s))
        return decision

    def preload(self, items: Iterable[tuple[str, int]]):
        for b, size in items:
            self.insert(b, size)
