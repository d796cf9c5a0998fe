"""
On-disk formats of every run artifact.

Training writes, per seed directory: qtable.json, trainlog.csv,
policies.json and manifest.json. Evaluation writes report/curves.csv,
policy_freq.json, final_policy.json, traces.csv and dp_check.json.

CSV floats use 17 significant digits and JSON floats their shortest exact
repr, so every value round-trips. Files are write-once: writing onto an
existing artifact raises ArtifactExistsError. Nothing written here carries a
timestamp, so a rerun reproduces the same bytes.
"""

import csv
import hashlib
import io
import json
import logging
import os
from typing import Any, Dict, List, Mapping, Sequence, Tuple

from .domain import STATES, PwdState, RobotAction
from .evaluation.report import EvalReport
from .evaluation.rollouts import EpisodeTrace
from .qlearning import EpochRecord, PolicyTable, QTable, TrainConfig, TrainLog, policy_keys
from .validators import ValidationError, safe_file_operation

logger = logging.getLogger(__name__)

QTABLE = "qtable.json"
TRAINLOG = "trainlog.csv"
POLICIES = "policies.json"
MANIFEST = "manifest.json"
TRAINING_ARTIFACTS: Tuple[str, ...] = (QTABLE, TRAINLOG, POLICIES)

REPORT_DIR = "report"
CURVES = "curves.csv"
POLICY_FREQ = "policy_freq.json"
FINAL_POLICY = "final_policy.json"
TRACES = "traces.csv"
DP_CHECK = "dp_check.json"
REPORT_ARTIFACTS: Tuple[str, ...] = (CURVES, POLICY_FREQ, FINAL_POLICY, TRACES, DP_CHECK)

TRAINLOG_HEADER = ("epoch", "avg_return", "q_sum", "q_update")
CURVES_HEADER = ("epoch", "epsilon_greedy_ql", "greedy_ql", "random_action", "q_sum", "q_update")
TRACES_HEADER = ("step", "state", "action", "choice")


class ArtifactExistsError(ValidationError):
    """Raised when an artifact would overwrite an existing file."""
    pass


def format_float(value: float) -> str:
    return "%.17g" % value


def seed_dir(output_dir: str, seed: int) -> str:
    return os.path.join(output_dir, f"seed-{seed}")


def report_dir(run_dir: str) -> str:
    return os.path.join(run_dir, REPORT_DIR)


def _write_text(path: str, text: str):
    try:
        with open(path, "x", newline="") as f:
            f.write(text)
    except FileExistsError:
        raise ArtifactExistsError(f"Refusing to overwrite existing artifact: {path}")
    except OSError as e:
        raise ValidationError(f"Cannot write {path}: {str(e)}")
    logger.debug(f"Wrote {path}")


def _read_text(path: str) -> str:
    def read():
        with open(path, "r", newline="") as f:
            return f.read()

    return safe_file_operation(read)


def write_json(path: str, data: Any):
    _write_text(path, json.dumps(data, indent=2) + "\n")


def read_json(path: str) -> Any:
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {str(e)}")


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _csv_rows(path: str, header: Sequence[str]) -> List[Dict[str, str]]:
    reader = csv.DictReader(io.StringIO(_read_text(path)))
    if tuple(reader.fieldnames or ()) != tuple(header):
        raise ValidationError(f"{path} has header {reader.fieldnames}, expected {list(header)}")
    return list(reader)


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()

    def read():
        with open(path, "rb") as f:
            for chunk in iter(lambda: f.read(65536), b""):
                digest.update(chunk)

    safe_file_operation(read)
    return digest.hexdigest()


def sha256_json(data: Any) -> str:
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()


# Training artifacts

def write_qtable(path: str, q: QTable):
    write_json(path, q.to_dict())


def read_qtable(path: str) -> QTable:
    return QTable.from_dict(read_json(path))


def write_trainlog(path: str, log: TrainLog):
    rows = [
        (e.epoch, format_float(e.avg_return), format_float(e.q_sum), format_float(e.q_update))
        for e in log.epochs
    ]
    _write_text(path, _csv_text(TRAINLOG_HEADER, rows))


def read_trainlog(path: str) -> List[EpochRecord]:
    try:
        return [
            EpochRecord(int(r["epoch"]), float(r["avg_return"]), float(r["q_sum"]),
                        float(r["q_update"]))
            for r in _csv_rows(path, TRAINLOG_HEADER)
        ]
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Malformed training log {path}: {str(e)}")


def write_policies(path: str, log: TrainLog):
    write_json(path, {
        "probe": policy_keys(log.probe_policies),
        "snapshots": policy_keys(log.snapshots),
    })


def read_policies(path: str) -> Tuple[List[PolicyTable], List[PolicyTable]]:
    data = read_json(path)
    try:
        return (
            [PolicyTable.from_key(k) for k in data["probe"]],
            [PolicyTable.from_key(k) for k in data["snapshots"]],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError(f"Malformed policies file {path}: {str(e)}")


def write_training_artifacts(run_dir: str, q: QTable, log: TrainLog) -> Dict[str, str]:
    """Write qtable.json, trainlog.csv and policies.json; return their sha256 by name."""
    safe_file_operation(os.makedirs, run_dir, exist_ok=True)
    write_qtable(os.path.join(run_dir, QTABLE), q)
    write_trainlog(os.path.join(run_dir, TRAINLOG), log)
    write_policies(os.path.join(run_dir, POLICIES), log)
    return {name: sha256_file(os.path.join(run_dir, name)) for name in TRAINING_ARTIFACTS}


def read_train_log(run_dir: str, config: TrainConfig) -> TrainLog:
    """Rebuild the TrainLog evaluation needs from a seed directory."""
    epochs = read_trainlog(os.path.join(run_dir, TRAINLOG))
    probe, snapshots = read_policies(os.path.join(run_dir, POLICIES))
    return TrainLog(config=config, epochs=epochs, probe_policies=probe, snapshots=snapshots)


def write_manifest(path: str, manifest: Mapping[str, Any]):
    write_json(path, dict(manifest))


def read_manifest(path: str) -> Dict[str, Any]:
    data = read_json(path)
    for key in ("config", "seed", "model", "artifacts"):
        if key not in data:
            raise ValidationError(f"Manifest {path} missing '{key}'")
    return data


def verify_artifacts(run_dir: str, manifest: Mapping[str, Any]) -> List[str]:
    """Names of artifacts whose sha256 differs from the manifest."""
    return [
        name for name, digest in sorted(manifest.get("artifacts", {}).items())
        if sha256_file(os.path.join(run_dir, name)) != digest
    ]


# Policies and traces

def write_policy(path: str, policy: PolicyTable, extra: Mapping[str, Any] = None):
    data: Dict[str, Any] = {"policy": policy.to_dict(), "policy_key": policy.key()}
    if extra:
        data.update(extra)
    write_json(path, data)


def read_policy(path: str) -> PolicyTable:
    """Load a policy JSON: either a bare state -> action map or one under 'policy'."""
    data = read_json(path)
    if isinstance(data, dict) and isinstance(data.get("policy"), dict):
        data = data["policy"]
    if not isinstance(data, dict):
        raise ValidationError(f"Policy file {path} must hold a state -> action object")
    return PolicyTable.from_dict(data)


def trace_rows(traces: Sequence[EpisodeTrace]) -> List[Tuple[int, str, int, str]]:
    return [
        (row.step, row.state.code(), int(row.action), row.choice.value if row.choice else "")
        for trace in traces
        for row in trace.rows
    ]


def write_traces(path: str, traces: Sequence[EpisodeTrace]):
    _write_text(path, _csv_text(TRACES_HEADER, trace_rows(traces)))


def read_traces(path: str) -> List[Tuple[int, PwdState, RobotAction, str]]:
    return [
        (int(r["step"]), PwdState.parse(r["state"]), RobotAction(int(r["action"])), r["choice"])
        for r in _csv_rows(path, TRACES_HEADER)
    ]


# Report

def write_report(directory: str, report: EvalReport) -> Dict[str, str]:
    """Write every report file into ``directory``; return their sha256 by name."""
    safe_file_operation(os.makedirs, directory, exist_ok=True)

    curves = [
        (epoch,) + tuple(format_float(v) for v in values)
        for epoch, *values in report.curve_rows()
    ]
    _write_text(os.path.join(directory, CURVES), _csv_text(CURVES_HEADER, curves))

    write_json(os.path.join(directory, POLICY_FREQ), {
        "window": sum(report.policy_frequency.values()),
        "policies": [
            {"policy_key": key, "hash": PolicyTable.from_key(key).digest(), "count": count}
            for key, count in report.policy_frequency.items()
        ],
    })

    write_policy(os.path.join(directory, FINAL_POLICY), report.final_policy, {
        "return": report.final_policy_return.to_dict(),
        "selection": [entry.to_dict() for entry in report.selection],
        "tie_break": "highest mean return, then lowest policy hash",
    })

    write_traces(os.path.join(directory, TRACES), report.traces)

    write_json(os.path.join(directory, DP_CHECK), {
        "ok": report.dp_ok,
        "checks": [check.to_dict() for check in report.dp_checks],
    })
    return {name: sha256_file(os.path.join(directory, name)) for name in REPORT_ARTIFACTS}


# Reward comparison

COMPARE_DIR = "compare"
COMPARE_SUMMARY = "compare_summary.json"


def write_comparison(path: str, policies: Mapping[str, PolicyTable]):
    """One row per state: the state code, then each variant's action label."""
    header = ("state",) + tuple(policies)
    rows = [
        (s.code(),) + tuple(policy.action_for(s).label for policy in policies.values())
        for s in STATES
    ]
    _write_text(path, _csv_text(header, rows))


def read_comparison(path: str) -> List[Dict[str, str]]:
    reader = csv.DictReader(io.StringIO(_read_text(path)))
    return list(reader)
