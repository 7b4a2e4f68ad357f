"""Machine-readable reports written by the command line tools."""

from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field


class CheckReport(BaseModel):
    """Outcome of a single mechanical check."""

    name: str = Field(description="Name of the check")
    passed: bool = Field(description="Whether the check passed")
    n_violations: int = Field(default=0, ge=0, description="Number of violations found")
    violations: list[dict[str, Any]] = Field(
        default_factory=list, description="Violations, in deterministic order"
    )
    summary: dict[str, Any] = Field(
        default_factory=dict, description="Check-specific summary numbers"
    )


class RunReport(BaseModel):
    """Report of a command run. Never holds timestamps, so reruns are byte-identical."""

    command: str
    version: str
    passed: bool = True
    checks: list[CheckReport] = Field(default_factory=list)
    artifacts: dict[str, str] = Field(default_factory=dict)
    summary: dict[str, Any] = Field(default_factory=dict)
    messages: list[str] = Field(default_factory=list)

    def add_check(self, check: CheckReport):
        """Append `check` and fold its outcome into the overall pass flag."""
        self.checks.append(check)
        self.passed = self.passed and check.passed
        return check

    @property
    def exit_code(self) -> int:
        """Return 0 if every check passed, 1 otherwise."""
        return 0 if self.passed else 1

    def export(self, fpath: Path):
        """Write the report as indented JSON."""
        fpath = Path(fpath)
        fpath.parent.mkdir(parents=True, exist_ok=True)
        with open(fpath, "w") as report_file:
            report_file.write(self.model_dump_json(indent=2) + "\n")

    def render(self) -> str:
        """Return a short human-readable rendition of the report."""
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'}"]
        for check in self.checks:
            status = "pass" if check.passed else f"FAIL ({check.n_violations} violations)"
            lines.append(f"  {check.name}: {status}")
            lines.extend(f"    {violation}" for violation in check.violations[:10])
            if check.n_violations > 10:
                lines.append(f"    ... and {check.n_violations - 10} more")
        lines.extend(f"  {key}: {value}" for key, value in self.summary.items())
        lines.extend(f"  {message}" for message in self.messages)
        lines.extend(f"  wrote {name}: {path}" for name, path in self.artifacts.items())
        return "\n".join(lines)
