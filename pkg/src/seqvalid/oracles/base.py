from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Verdict:
    valid: bool
    reason: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.valid and self.reason is not None:
            raise ValueError("a valid verdict carries no reason")
        if not self.valid and not self.reason:
            raise ValueError("an invalid verdict needs a reason")

    def __bool__(self) -> bool:
        return self.valid


VALID = Verdict(True)


def invalid(reason: str) -> Verdict:
    return Verdict(False, reason)
