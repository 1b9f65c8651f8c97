"""
Report containers shared by the verification suites.

Every exact number leaves the toolkit as a "num/den" string.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional


def fraction_to_str(value: Fraction | int) -> str:
    """Serialize an exact rational in lowest terms as "num/den"."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def to_jsonable(value: Any) -> Any:
    """Recursively convert Fractions (and tuples) into JSON-friendly values."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return fraction_to_str(value)
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return value


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named check at one parameter point."""

    name: str
    parameters: Dict[str, Any]
    passed: bool
    detail: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        out = {
            "name": self.name,
            "parameters": to_jsonable(self.parameters),
            "passed": self.passed,
        }
        if self.detail is not None:
            out["detail"] = to_jsonable(self.detail)
        return out


@dataclass
class SuiteReport:
    """Collection of CheckResults for one suite run."""

    suite: str
    parameters: Dict[str, Any]
    checks: List[CheckResult] = field(default_factory=list)

    def add(self, check: CheckResult):
        self.checks.append(check)

    def extend(self, checks):
        self.checks.extend(checks)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def summary(self) -> Dict[str, int]:
        failed = len(self.failures)
        return {"total": len(self.checks), "passed": len(self.checks) - failed, "failed": failed}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "parameters": to_jsonable(self.parameters),
            "passed": self.passed,
            "summary": self.summary(),
            # Passing checks are summarized; failures keep their witnesses
            "failures": [check.to_dict() for check in self.failures],
            "checks": [
                {"name": check.name, "parameters": to_jsonable(check.parameters), "passed": check.passed}
                for check in self.checks
            ],
        }
