"""Process-wide tallies of expensive linear-algebra events."""
from collections import Counter

COUNTS: Counter = Counter()


def count(event: str, n: int = 1) -> None:
    COUNTS[event] += n


def snapshot() -> Counter:
    return Counter(COUNTS)
