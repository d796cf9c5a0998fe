"""
Qualitative checks on a PwD transition model.

Each constraint compares next-state marginals (P(next response = RR),
P(next emotion = Pos), ...) between actions or between current states:

- C1 difficulty monotonicity (a1 vs a2 vs a3)
- C2 bad-moment penalty on relevant response for prompts
- C3 repeat/explain help a confused PwD compared with a difficult prompt
- C4 comfort helps a PwD in negative emotion compared with a difficult prompt

The report lists one entry per checked (constraint, action(s), state(s)),
in a fixed order, whether satisfied or not.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from ..domain import (
    PROMPT_ACTIONS,
    STATES,
    ConfusionState,
    EmotionLevel,
    PwdState,
    ResponseRelevance,
    RobotAction,
)
from .model import TransitionModel, structural_errors

# float slack for the inequality comparisons
COMPARISON_SLACK = 1e-12


@dataclass(frozen=True)
class ConstraintCheck:
    constraint_id: str
    actions: Tuple[str, ...]
    states: Tuple[str, ...]
    satisfied: bool
    detail: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "constraint": self.constraint_id,
            "actions": list(self.actions),
            "states": list(self.states),
            "satisfied": self.satisfied,
            "detail": self.detail,
        }


@dataclass
class ModelConstraintReport:
    """Outcome of validate_model: structural errors first, then every constraint check."""
    checks: List[ConstraintCheck] = field(default_factory=list)
    structural_errors: List[str] = field(default_factory=list)

    @property
    def violations(self) -> List[ConstraintCheck]:
        return [c for c in self.checks if not c.satisfied]

    @property
    def ok(self) -> bool:
        return not self.structural_errors and not self.violations

    def violated_ids(self) -> List[str]:
        return sorted({c.constraint_id.split(".")[0] for c in self.violations})

    def summary(self) -> Dict[str, Any]:
        by_constraint: Dict[str, Dict[str, int]] = {}
        for check in self.checks:
            key = check.constraint_id.split(".")[0]
            entry = by_constraint.setdefault(key, {"checked": 0, "violated": 0})
            entry["checked"] += 1
            if not check.satisfied:
                entry["violated"] += 1
        return {
            "ok": self.ok,
            "structural_errors": len(self.structural_errors),
            "violations": len(self.violations),
            "constraints": by_constraint,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "summary": self.summary(),
            "structural_errors": list(self.structural_errors),
            "checks": [c.to_dict() for c in self.checks],
        }


def _marginals(m: TransitionModel, action: RobotAction, s: PwdState) -> Dict[str, float]:
    row = m.row(action, s).reshape(3, 3, 2)
    return {
        "rr": float(row[ResponseRelevance.RR].sum()),
        "responds": float(row[ResponseRelevance.IR].sum() + row[ResponseRelevance.RR].sum()),
        "pos": float(row[:, EmotionLevel.POS + 1, :].sum()),
        "neg": float(row[:, EmotionLevel.NEG + 1, :].sum()),
        "confused": float(row[:, :, ConfusionState.YES].sum()),
    }


def _geq(a: float, b: float) -> bool:
    return a + COMPARISON_SLACK >= b


def _check_difficulty(m: TransitionModel) -> List[ConstraintCheck]:
    checks = []
    labels = tuple(a.label for a in PROMPT_ACTIONS)
    for s in STATES:
        easy, moderate, hard = (_marginals(m, a, s) for a in PROMPT_ACTIONS)
        for key, name, descending in (
            ("rr", "C1.response", True),
            ("pos", "C1.emotion", True),
            ("confused", "C1.confusion", False),
        ):
            values = (easy[key], moderate[key], hard[key])
            if descending:
                ok = _geq(values[0], values[1]) and _geq(values[1], values[2])
                relation = ">="
            else:
                ok = _geq(values[1], values[0]) and _geq(values[2], values[1])
                relation = "<="
            detail = f"P({key}) a1={values[0]:.6f} {relation} a2={values[1]:.6f} {relation} a3={values[2]:.6f}"
            checks.append(ConstraintCheck(name, labels, (s.code(),), ok, detail))
    return checks


def _check_bad_moments(m: TransitionModel) -> List[ConstraintCheck]:
    checks = []
    for bad in STATES:
        if not bad.is_bad:
            continue
        for good in STATES:
            if good.is_bad or good.response is not bad.response:
                continue
            for action in PROMPT_ACTIONS:
                p_bad = _marginals(m, action, bad)["rr"]
                p_good = _marginals(m, action, good)["rr"]
                checks.append(ConstraintCheck(
                    "C2",
                    (action.label,),
                    (bad.code(), good.code()),
                    _geq(p_good, p_bad),
                    f"P(RR) bad={p_bad:.6f} <= good={p_good:.6f}",
                ))
    return checks


def _check_repair(m: TransitionModel) -> List[ConstraintCheck]:
    checks = []
    for s in STATES:
        if s.confusion is not ConfusionState.YES:
            continue
        hard = _marginals(m, RobotAction.DIFFICULT_PROMPT, s)
        for action in (RobotAction.REPEAT, RobotAction.EXPLAIN):
            repair = _marginals(m, action, s)
            checks.append(ConstraintCheck(
                "C3.response",
                (action.label, RobotAction.DIFFICULT_PROMPT.label),
                (s.code(),),
                _geq(repair["responds"], hard["responds"]),
                f"P(IR or RR) {action.label}={repair['responds']:.6f} >= a3={hard['responds']:.6f}",
            ))
            checks.append(ConstraintCheck(
                "C3.emotion",
                (action.label, RobotAction.DIFFICULT_PROMPT.label),
                (s.code(),),
                _geq(hard["neg"], repair["neg"]),
                f"P(Neg) {action.label}={repair['neg']:.6f} <= a3={hard['neg']:.6f}",
            ))
    return checks


def _check_comfort(m: TransitionModel) -> List[ConstraintCheck]:
    checks = []
    labels = (RobotAction.COMFORT.label, RobotAction.DIFFICULT_PROMPT.label)
    for s in STATES:
        if s.emotion is not EmotionLevel.NEG:
            continue
        hard = _marginals(m, RobotAction.DIFFICULT_PROMPT, s)
        comfort = _marginals(m, RobotAction.COMFORT, s)
        checks.append(ConstraintCheck(
            "C4.response", labels, (s.code(),),
            _geq(comfort["rr"], hard["rr"]),
            f"P(RR) a6={comfort['rr']:.6f} >= a3={hard['rr']:.6f}",
        ))
        checks.append(ConstraintCheck(
            "C4.emotion", labels, (s.code(),),
            _geq(hard["neg"], comfort["neg"]),
            f"P(Neg) a6={comfort['neg']:.6f} <= a3={hard['neg']:.6f}",
        ))
    return checks


def validate_model(m: TransitionModel) -> ModelConstraintReport:
    """Run the structural check, then C1-C4 over every relevant state."""
    report = ModelConstraintReport()
    report.structural_errors = structural_errors(np.asarray(m.matrices), np.asarray(m.choice))
    if report.structural_errors:
        return report
    report.checks.extend(_check_difficulty(m))
    report.checks.extend(_check_bad_moments(m))
    report.checks.extend(_check_repair(m))
    report.checks.extend(_check_comfort(m))
    return report


def structural_report(errors: List[str]) -> ModelConstraintReport:
    """Report for raw arrays that could not be turned into a model."""
    return ModelConstraintReport(checks=[], structural_errors=list(errors))
