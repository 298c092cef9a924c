"""Run manifests: SHA-256 digests of stage inputs, output paths, config,
tool version, and wall-clock, so that any input mutation between stages is
detectable and runs are auditable."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IoError

TOOL_VERSION = "polycap 0.1.0"


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                digest.update(chunk)
    except OSError as exc:
        raise IoError(f"cannot digest {path}: {exc}") from exc
    return digest.hexdigest()


@dataclass
class StageRecord:
    stage: str
    inputs: dict[str, str]           # path -> sha256
    outputs: list[str]
    config: dict
    wall_clock_s: float
    timestamp: str
    tool_version: str = TOOL_VERSION

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "config": self.config,
            "wall_clock_s": self.wall_clock_s,
            "timestamp": self.timestamp,
            "tool_version": self.tool_version,
        }


@dataclass
class RunManifest:
    stages: list[StageRecord] = field(default_factory=list)

    def add_stage(self, record: StageRecord) -> None:
        self.stages.append(record)

    def save(self, path: str | Path) -> None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump({"stages": [s.to_json() for s in self.stages]}, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError as exc:
            raise IoError(f"cannot write manifest {path}: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise IoError(f"cannot read manifest {path}: {exc}") from exc
        stages = [
            StageRecord(
                stage=s["stage"],
                inputs=s["inputs"],
                outputs=s["outputs"],
                config=s["config"],
                wall_clock_s=s["wall_clock_s"],
                timestamp=s["timestamp"],
                tool_version=s.get("tool_version", TOOL_VERSION),
            )
            for s in obj["stages"]
        ]
        return cls(stages=stages)

    def verify_inputs(self) -> list[tuple[str, str, str]]:
        """Re-digest every recorded input; returns (stage, path, problem)
        triples for files that changed or disappeared."""
        problems: list[tuple[str, str, str]] = []
        for stage in self.stages:
            for path, recorded in stage.inputs.items():
                try:
                    actual = sha256_file(path)
                except IoError:
                    problems.append((stage.stage, path, "missing"))
                    continue
                if actual != recorded:
                    problems.append((stage.stage, path, f"digest changed ({recorded[:12]} -> {actual[:12]})"))
        return problems
