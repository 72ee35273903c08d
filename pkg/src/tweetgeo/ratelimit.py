"""Request pacing for outbound API calls.

`RateLimiter` admits at most a fixed number of acquisitions in any
sliding time window, by keeping the send log of the last N admissions:
admission n may not happen before admission n-N plus one window. This
is strictly stronger than a refilling bucket, which can double up at a
window boundary after an idle burst.

Fractional ceilings below one request/second are expressed by widening
the window (0.25/s becomes 1 admission per 4-second window). Clock and
sleep are injectable for deterministic tests.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from typing import Callable

__all__ = ["RateLimiter"]


class RateLimiter:
    """Blocks callers so any sliding window holds <= ceiling admissions.

    `slack` is an extra per-admission delay margin; clients facing a
    remote observer (which timestamps arrivals, not sends) use it to
    absorb transport jitter without ever exceeding the ceiling.
    Thread-safe.
    """

    def __init__(
        self,
        ceiling: float,
        window: float = 1.0,
        *,
        slack: float = 0.0,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if ceiling <= 0:
            raise ValueError(f"ceiling must be positive, got {ceiling}")
        if ceiling >= 1:
            self._slots = int(ceiling)
            self._window = window
        else:
            self._slots = 1
            self._window = window / ceiling
        self._slack = slack
        self._clock = clock
        self._sleep = sleep
        self._sent: deque[float] = deque()
        self._lock = threading.Lock()

    @property
    def window(self) -> float:
        return self._window

    @property
    def slots(self) -> int:
        return self._slots

    def acquire(self) -> None:
        """Block until one admission is allowed, then consume it."""
        while True:
            with self._lock:
                now = self._clock()
                if len(self._sent) < self._slots:
                    self._sent.append(now)
                    return
                target = self._sent[0] + self._window + self._slack
                if now >= target:
                    self._sent.popleft()
                    self._sent.append(now)
                    return
                delay = target - now
            self._sleep(delay)

    def try_acquire(self) -> bool:
        """Non-blocking acquire; True when admitted."""
        with self._lock:
            now = self._clock()
            if len(self._sent) < self._slots:
                self._sent.append(now)
                return True
            if now >= self._sent[0] + self._window + self._slack:
                self._sent.popleft()
                self._sent.append(now)
                return True
            return False
