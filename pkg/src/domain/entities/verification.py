from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class Suite(str, Enum):
    """Verification suite size."""
    FAST = "fast"
    FULL = "full"


class CriterionStatus(str, Enum):
    """Outcome of one acceptance criterion."""
    PASS = "pass"
    FAIL = "fail"
    ERROR = "error"


class CriterionResult(BaseModel):
    """One acceptance criterion: what was measured against which bound."""

    id: str = Field(..., description="Criterion id, C1..C11")
    description: str = Field(..., description="What the criterion checks")
    measured: Optional[float] = Field(None, description="Worst measured value")
    bound: Optional[float] = Field(None, description="Bound the measured value is compared with")
    passed: bool = Field(False, description="Criterion met")
    status: CriterionStatus = Field(CriterionStatus.FAIL, description="pass, fail, or error for infrastructure failures")
    details: Dict[str, Any] = Field(default_factory=dict, description="Per-case measurements")
    error: Optional[str] = Field(None, description="Failure message when status is error")


class VerificationReport(BaseModel):
    """Results of a verification suite."""

    suite: Suite = Field(..., description="Suite that was run")
    rng_seed: int = Field(0, description="Seed of the random draws")
    criteria: List[CriterionResult] = Field(default_factory=list, description="One entry per criterion")

    @property
    def passed(self) -> bool:
        return all(c.status == CriterionStatus.PASS for c in self.criteria)

    @property
    def has_errors(self) -> bool:
        return any(c.status == CriterionStatus.ERROR for c in self.criteria)

    def get_criterion(self, criterion_id: str) -> Optional[CriterionResult]:
        for criterion in self.criteria:
            if criterion.id == criterion_id:
                return criterion
        return None
