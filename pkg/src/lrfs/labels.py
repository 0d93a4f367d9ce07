"""Track labels: (birth scan, per-scan index) identities."""

from __future__ import annotations

from typing import Iterable, NamedTuple


class Label(NamedTuple):
    """Identity of a track.

    ``birth_time`` is the scan index at which the track can first exist and
    ``index`` distinguishes tracks born in the same scan. Equality is
    field-wise and the total order is lexicographic on (birth_time, index),
    which is exactly the tuple order, so label sets sort deterministically.
    """

    birth_time: int
    index: int

    def __repr__(self) -> str:
        return f"Label({self.birth_time}, {self.index})"


def as_label(value) -> Label:
    """Coerce a Label or a (birth_time, index) pair into a Label."""
    if isinstance(value, Label):
        return value
    s, i = value
    return Label(int(s), int(i))


def sorted_labels(labels: Iterable) -> tuple[Label, ...]:
    """Canonically sorted label tuple; raises on duplicates."""
    out = tuple(sorted(as_label(l) for l in labels))
    for a, b in zip(out, out[1:]):
        if a == b:
            raise ValueError(f"duplicate label {a}")
    return out
