"""Level-of-Evidence label algebra.

The seven OCEBM bands map bijectively onto ordinals 0..6; lower ordinal
means stronger evidence (1a strongest, 4 weakest). All tie-breaking in
the package resolves toward the lower ordinal.
"""

from __future__ import annotations

from dataclasses import dataclass

BANDS = ("1a", "1b", "2a", "2b", "3a", "3b", "4")

_ORDINAL = {band: i for i, band in enumerate(BANDS)}


class LabelError(ValueError):
    """Raised for text that is not one of the seven evidence bands."""


@dataclass(frozen=True, order=True)
class LoELabel:
    """One evidence band plus its ordinal; orderable by evidence strength."""

    ordinal: int
    band: str

    def __str__(self) -> str:
        return self.band


_LABELS = {band: LoELabel(ordinal=i, band=band) for i, band in enumerate(BANDS)}


def parse_label(text: str) -> LoELabel:
    """Parse a band name such as "1a" or "4" (case-insensitive)."""
    key = text.strip().lower()
    label = _LABELS.get(key)
    if label is None:
        raise LabelError(f"not an evidence band: {text!r} (expected one of {', '.join(BANDS)})")
    return label


def from_ordinal(ordinal: int) -> LoELabel:
    if not 0 <= ordinal <= 6:
        raise LabelError(f"ordinal out of range [0,6]: {ordinal}")
    return _LABELS[BANDS[ordinal]]


def all_labels() -> tuple[LoELabel, ...]:
    return tuple(_LABELS[b] for b in BANDS)
