"""Inequality records shared by the verification engines and the campaign runner."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field


@dataclass
class InequalityRecord:
    inequality_id: str
    fixture: str
    params: dict
    lhs: float
    rhs: float
    resolution: int = 0
    stable: bool | None = None
    rejected: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.rejected:
            return math.nan
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs

    @classmethod
    def rejection(cls, inequality_id: str, fixture: str, params: dict, reason: str,
                  resolution: int = 0) -> "InequalityRecord":
        return cls(inequality_id, fixture, params, math.nan, math.nan, resolution, None, reason)

    def row(self, param_keys) -> dict:
        out = {"inequality_id": self.inequality_id, "fixture": self.fixture}
        for k in param_keys:
            out[k] = self.params.get(k, "")
        out.update(lhs=self.lhs, rhs=self.rhs, ratio=self.ratio, resolution=self.resolution,
                   stable="" if self.stable is None else int(self.stable))
        if self.rejected:
            out["rejected"] = self.rejected
        return out

    def to_json(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        return d


class ParameterError(ValueError):
    """A parameter set outside the range where an inequality is stated."""
