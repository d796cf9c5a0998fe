import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import __version__
from .artifacts import (
    COMPARE_DIR,
    COMPARE_SUMMARY,
    MANIFEST,
    QTABLE,
    TRAINING_ARTIFACTS,
    ArtifactExistsError,
    read_manifest,
    read_policy,
    read_qtable,
    read_train_log,
    report_dir,
    seed_dir,
    sha256_json,
    verify_artifacts,
    write_comparison,
    write_json,
    write_manifest,
    write_report,
    write_traces,
    write_training_artifacts,
)
from .config import ExperimentConfig, experiment_from_manifest
from .domain import PwdState, RewardVariant, RobotAction
from .evaluation.report import EvaluationSettings, build_report
from .evaluation.rollouts import rollout_policy
from .logger import ColoredOutput, RunLogger
from .patient.constraints import ModelConstraintReport, structural_report, validate_model
from .patient.model import ModelStructureError, TransitionModel, save_model
from .qlearning import PolicyTable, greedy_policy, train
from .seeding import stream
from .validators import ValidationError, Validator

logger = logging.getLogger(__name__)

COMPARED_VARIANTS = (RewardVariant.R1, RewardVariant.R2)

# states the reward comparison summarizes
RR_NEU_NO = PwdState.from_triple((2, 0, 0))
NR_NEG_NO = PwdState.from_triple((0, -1, 0))
NR_POS_YES = PwdState.from_triple((0, 1, 1))


def model_digest(model: TransitionModel) -> str:
    return sha256_json(model.to_dict())


def build_manifest(experiment: ExperimentConfig, seed: int, model: TransitionModel,
                   artifacts: Dict[str, str]) -> Dict[str, Any]:
    """Everything needed to regenerate one seed's artifacts; no timestamps."""
    config = experiment.to_dict()
    config["seeds"] = [seed]
    config.pop("workers")
    return {
        "package": "reminiq",
        "version": __version__,
        "seed": seed,
        "config": config,
        "model": {
            "source": experiment.model.source,
            "sha256": model_digest(model),
        },
        "artifacts": dict(sorted(artifacts.items())),
    }


def train_seed(experiment: ExperimentConfig, seed: int) -> Dict[str, Any]:
    """Train one seed and write its artifacts and manifest. Runs in worker processes."""
    run_dir = seed_dir(experiment.output_dir, seed)
    existing = [
        name for name in TRAINING_ARTIFACTS + (MANIFEST,)
        if os.path.exists(os.path.join(run_dir, name))
    ]
    if existing:
        raise ArtifactExistsError(
            f"{run_dir} already holds {', '.join(existing)}; choose a fresh output directory"
        )

    model = experiment.model.load()
    spec = experiment.reward_spec()
    q, log = train(experiment.train_config(seed), model, spec, experiment.env)

    hashes = write_training_artifacts(run_dir, q, log)
    write_manifest(os.path.join(run_dir, MANIFEST), build_manifest(experiment, seed, model, hashes))
    last = log.epochs[-1]
    return {
        "seed": seed,
        "run_dir": run_dir,
        "epochs": len(log.epochs),
        "final_avg_return": last.avg_return,
        "final_q_update": last.q_update,
    }


def load_run(run_dir: str):
    """
    Rebuild (experiment, seed, model) from a seed directory's manifest.

    Raises:
        ValidationError: if artifacts are missing, were modified after
            training, or the model no longer matches the recorded hash
    """
    ok, error = Validator.validate_run_dir(run_dir)
    if not ok:
        raise ValidationError(error)
    manifest = read_manifest(os.path.join(run_dir, MANIFEST))
    modified = verify_artifacts(run_dir, manifest)
    if modified:
        raise ValidationError(f"Artifacts changed since training: {', '.join(modified)}")

    experiment = experiment_from_manifest(manifest)
    model = experiment.model.load()
    if model_digest(model) != manifest["model"]["sha256"]:
        raise ValidationError(f"Patient model for {run_dir} does not match its manifest")
    return experiment, int(manifest["seed"]), model


def evaluate_seed(run_dir: str, settings: EvaluationSettings) -> Dict[str, Any]:
    """Evaluate one trained seed directory and write its report. Runs in worker processes."""
    experiment, seed, model = load_run(run_dir)
    spec = experiment.reward_spec()
    log = read_train_log(run_dir, experiment.train_config(seed))

    report = build_report(log, model, spec, stream(seed, "evaluation"), settings, experiment.env)
    hashes = write_report(report_dir(run_dir), report)
    return {
        "seed": seed,
        "run_dir": run_dir,
        "final_policy": report.final_policy.key(),
        "final_return": report.final_policy_return.to_dict(),
        "dp_ok": report.dp_ok,
        "report": hashes,
    }


class ExperimentRunner:
    """Runs the experiment commands for one resolved configuration."""

    def __init__(self, experiment: ExperimentConfig):
        self.experiment = experiment
        self.output_dir = experiment.output_dir
        self.run_logger: Optional[RunLogger] = None

    def _start(self):
        ok, error = Validator.validate_output_dir(self.output_dir)
        if not ok:
            raise ValidationError(error)
        if self.run_logger is None:
            self.run_logger = RunLogger(
                self.output_dir,
                enabled=self.experiment.logging_enabled,
                level=self.experiment.log_level,
                save_history=self.experiment.save_history,
            )

    def close(self):
        if self.run_logger is not None:
            self.run_logger.close()
            self.run_logger = None

    def _log_operation(self, operation: str, data: Dict[str, Any]):
        if self.run_logger is not None:
            self.run_logger.log_operation(operation, data)

    def _map(self, fn: Callable, *iterables: Sequence) -> List[Any]:
        """Apply ``fn`` across seeds, in a process pool when workers > 1."""
        jobs = len(iterables[0])
        workers = min(self.experiment.workers, jobs)
        if workers <= 1:
            return list(map(fn, *iterables))
        logger.info(f"Running {jobs} jobs on {workers} worker processes")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, *iterables))

    def _check_model(self) -> TransitionModel:
        """Load the configured model before any computation starts."""
        model = self.experiment.model.load()
        logger.info(f"Patient model: {model.metadata.get('label', self.experiment.model.source)}")
        return model

    def cmd_train(self) -> List[Dict[str, Any]]:
        """Train every configured seed; write qtable.json, trainlog.csv, policies.json and manifest.json."""
        self._start()
        self._check_model()
        seeds = list(self.experiment.seeds)
        ColoredOutput.header(f"\nTraining {len(seeds)} seed(s) into {self.output_dir}\n")

        results = self._map(train_seed, [self.experiment] * len(seeds), seeds)
        for result in results:
            ColoredOutput.success(
                f"seed {result['seed']}: final epoch avg return "
                f"{result['final_avg_return']:.3f} -> {result['run_dir']}"
            )
        self._log_operation("train", {"seeds": seeds, "results": results})
        return results

    def cmd_evaluate(self, run_dirs: Optional[Sequence[str]] = None) -> List[Dict[str, Any]]:
        """Evaluate trained seed directories (default: every configured seed)."""
        self._start()
        if run_dirs is None:
            run_dirs = [seed_dir(self.output_dir, seed) for seed in self.experiment.seeds]
        for run_dir in run_dirs:
            ok, error = Validator.validate_run_dir(run_dir)
            if not ok:
                raise ValidationError(error)
        ColoredOutput.header(f"\nEvaluating {len(run_dirs)} run(s)\n")

        settings = self.experiment.evaluation
        results = self._map(evaluate_seed, list(run_dirs), [settings] * len(run_dirs))
        for result in results:
            message = (
                f"seed {result['seed']}: final policy {result['final_policy']} "
                f"mean return {result['final_return']['mean']:.3f}"
            )
            ColoredOutput.success(message)
            if not result["dp_ok"]:
                ColoredOutput.warning(f"seed {result['seed']}: Monte-Carlo vs exact check flagged a discrepancy")
        self._log_operation("evaluate", {"run_dirs": list(run_dirs), "results": results})
        return results

    @staticmethod
    def cmd_validate_model(path: str, out: Optional[str] = None) -> ModelConstraintReport:
        """
        Check a model file's structure and the qualitative constraints.

        Raises:
            ValidationError: if the file is missing or malformed
        """
        ok, error, data = Validator.validate_model_file(path)
        if not ok:
            raise ValidationError(error)
        try:
            report = validate_model(TransitionModel.from_dict(data))
        except ModelStructureError as e:
            report = structural_report(e.errors)
        if out:
            write_json(out, report.to_dict())
        return report

    def cmd_compare_rewards(self) -> Dict[str, Any]:
        """Train and evaluate every seed under R1 and R2; write per-seed policy tables."""
        self._start()
        self._check_model()
        seeds = list(self.experiment.seeds)
        finals: Dict[str, Dict[int, PolicyTable]] = {}

        for variant in COMPARED_VARIANTS:
            variant_experiment = replace(
                self.experiment.with_reward(variant),
                output_dir=os.path.join(self.output_dir, variant.value),
            )
            ColoredOutput.header(f"\nReward {variant.value}\n")
            self._map(train_seed, [variant_experiment] * len(seeds), seeds)
            run_dirs = [seed_dir(variant_experiment.output_dir, s) for s in seeds]
            results = self._map(evaluate_seed, run_dirs,
                                [self.experiment.evaluation] * len(seeds))
            finals[variant.value] = {
                r["seed"]: PolicyTable.from_key(r["final_policy"]) for r in results
            }

        compare_dir = os.path.join(self.output_dir, COMPARE_DIR)
        os.makedirs(compare_dir, exist_ok=True)
        for seed in seeds:
            write_comparison(
                os.path.join(compare_dir, f"seed-{seed}.csv"),
                {v.value: finals[v.value][seed] for v in COMPARED_VARIANTS},
            )

        summary = compare_summary(finals, seeds)
        write_json(os.path.join(compare_dir, COMPARE_SUMMARY), summary)
        for variant, entry in summary["variants"].items():
            ColoredOutput.info(
                f"{variant}: prompts a2/a3 chosen in {entry['moderate_or_difficult_states']} "
                f"states per seed"
            )
        self._log_operation("compare_rewards", {"seeds": seeds, "summary": summary})
        return summary

    def cmd_trace(self, policy_path: Optional[str] = None, run_dir: Optional[str] = None,
                  n: int = 20, out: Optional[str] = None) -> str:
        """
        Roll out a policy and write its traces.

        The policy comes from a policy JSON file or, with ``run_dir``, from the
        greedy policy of that run's final Q-table.
        """
        self._start()
        if policy_path:
            policy = read_policy(policy_path)
        elif run_dir:
            ok, error = Validator.validate_run_dir(run_dir)
            if not ok:
                raise ValidationError(error)
            policy = greedy_policy(read_qtable(os.path.join(run_dir, QTABLE)))
        else:
            raise ValidationError("trace needs a policy file or a run directory")

        model = self._check_model()
        seed = self.experiment.seeds[0]
        result = rollout_policy(policy, model, self.experiment.reward_spec(), stream(seed, "trace"),
                                n, self.experiment.env, record=True)
        out = out or os.path.join(self.output_dir, f"traces-{policy.key()}-seed-{seed}.csv")
        write_traces(out, result.traces)
        ColoredOutput.success(f"{n} traces (mean return {result.mean:.3f}) -> {out}")
        self._log_operation("trace", {"policy": policy.key(), "n": n, "out": out,
                                      "return": result.to_dict()})
        return out

    def cmd_export_model(self, path: str) -> str:
        """Write the configured patient model as a model JSON file."""
        if os.path.exists(path):
            raise ArtifactExistsError(f"Refusing to overwrite existing file: {path}")
        model = self._check_model()
        save_model(model, path)
        ColoredOutput.success(f"Model written to {path}")
        return path


def compare_summary(finals: Dict[str, Dict[int, PolicyTable]], seeds: Sequence[int]) -> Dict[str, Any]:
    """Per-variant counts of the behaviours the reward comparison looks at."""
    harder = {RobotAction.MODERATE_PROMPT, RobotAction.DIFFICULT_PROMPT}
    repair = {RobotAction.REPEAT, RobotAction.EXPLAIN}
    variants: Dict[str, Any] = {}
    for variant, policies in finals.items():
        per_seed = {
            str(seed): sum(1 for a in policies[seed].actions if a in harder) for seed in seeds
        }
        variants[variant] = {
            "moderate_or_difficult_states": per_seed,
            "rr_neu_no_moderate_or_difficult": sum(
                policies[s].action_for(RR_NEU_NO) in harder for s in seeds
            ),
            "nr_neg_no_comfort": sum(
                policies[s].action_for(NR_NEG_NO) is RobotAction.COMFORT for s in seeds
            ),
            "nr_pos_yes_repeat_or_explain": sum(
                policies[s].action_for(NR_POS_YES) in repair for s in seeds
            ),
        }
    r1, r2 = (variants[v.value] for v in COMPARED_VARIANTS)
    return {
        "seeds": list(seeds),
        "variants": variants,
        "r2_at_least_as_aggressive": sum(r2["moderate_or_difficult_states"].values())
        >= sum(r1["moderate_or_difficult_states"].values()),
        "r2_majority_rr_neu_no": r2["rr_neu_no_moderate_or_difficult"] * 2 > len(seeds),
    }
