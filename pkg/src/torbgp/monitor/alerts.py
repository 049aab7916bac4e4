from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from torbgp.monitor.stream import Net


class Detector(str, enum.Enum):
    ORIGIN_CHECK = "origin"
    FREQUENCY = "frequency"
    TIME = "time"


@dataclass(frozen=True, order=True)
class Alert:
    detector: Detector
    prefix: Net
    offending_origin: int
    # mismatch flag (1.0) for the origin check, the measured ratio for the analytics
    evidence: float
    first_seen: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "detector": self.detector.value,
                "prefix": str(self.prefix),
                "origin": self.offending_origin,
                "evidence": round(self.evidence, 12),
                "ts": self.first_seen,
            }
        )
