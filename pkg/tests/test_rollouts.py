import math

import pytest
import scipy.stats

from reminiq.domain import PwdChoice, RobotAction
from reminiq.environment import EnvConfig
from reminiq.evaluation.rollouts import (
    random_baseline,
    random_rollouts,
    rollout_epsilon_greedy,
    rollout_policy,
    run_episode,
    summarize,
)
from reminiq.qlearning import PolicyTable, QTable
from reminiq.seeding import stream
from tests.helpers import FLAT, GOOD, STOP_ONLY, WORST, deterministic_model

ALL_EASY = PolicyTable.uniform(RobotAction.EASY_PROMPT)


class TestRolloutPolicy:
    """Tests for fixed-policy rollouts"""

    def test_all_good_model(self, r1):
        """Test 50 good rounds of easy prompts"""
        result = rollout_policy(ALL_EASY, deterministic_model(GOOD), r1, stream(0, "evaluation"), 5)
        assert result.mean == pytest.approx(237.5)
        assert result.std_error == 0.0
        assert result.n == 5

    def test_stop_on_first_choice(self, r1):
        """Test a session that stops at the first forced choice"""
        m = deterministic_model(WORST, STOP_ONLY)
        result = rollout_policy(ALL_EASY, m, r1, stream(0, "evaluation"), 3, record=True)
        assert result.mean == pytest.approx(-22.5)
        trace = result.traces[0]
        assert [row.step for row in trace.rows] == [0, 1, 2]
        assert [row.action for row in trace.rows] == [
            RobotAction.EASY_PROMPT, RobotAction.EASY_PROMPT, RobotAction.GIVE_CHOICES
        ]
        assert [row.choice for row in trace.rows] == [None, None, PwdChoice.STOP]
        assert trace.rows[1].state == WORST
        assert trace.total_return == pytest.approx(-22.5)

    def test_traces_restart_at_zero(self, r1):
        """Test that every traced episode starts at step 0"""
        result = rollout_policy(ALL_EASY, deterministic_model(GOOD), r1, stream(0, "trace"), 3,
                                env=EnvConfig(max_rounds=4), record=True)
        assert len(result.traces) == 3
        for trace in result.traces:
            assert [row.step for row in trace.rows] == [0, 1, 2, 3]

    def test_no_traces_by_default(self, model, r1):
        """Test that traces are only kept on request"""
        assert rollout_policy(ALL_EASY, model, r1, stream(0, "evaluation"), 2).traces == ()

    def test_needs_one_rollout(self, model, r1):
        """Test that zero rollouts are rejected"""
        with pytest.raises(ValueError):
            rollout_policy(ALL_EASY, model, r1, stream(0, "evaluation"), 0)

    def test_spawned_children(self, model, r1):
        """Test that episode i uses the i-th spawned child, whatever ran before it"""
        result = rollout_policy(ALL_EASY, model, r1, stream(5, "evaluation"), 4)
        children = stream(5, "evaluation").spawn(4)
        alone, _ = run_episode(lambda s, rng: ALL_EASY.action_for(s), model, r1, children[3])
        assert result.returns[3] == alone

    def test_reproducible(self, model, r1):
        """Test that the same parent stream gives the same batch"""
        a = rollout_policy(ALL_EASY, model, r1, stream(9, "evaluation"), 20)
        b = rollout_policy(ALL_EASY, model, r1, stream(9, "evaluation"), 20)
        assert a.returns == b.returns


class TestRandomBaseline:
    """Tests for the random-action baseline"""

    def test_flat_model(self, r1):
        """Test a model where every action earns 1 for 50 rounds"""
        assert random_baseline(deterministic_model(FLAT), r1, stream(0, "evaluation"), 10) == pytest.approx(50.0)

    def test_full_exploration_matches_random(self, model, r1):
        """Test that epsilon 1 behaves like uniform random actions"""
        n = 300
        explore = rollout_epsilon_greedy(QTable.zeros(), 1.0, model, r1, stream(1, "evaluation"), n)
        random = random_rollouts(model, r1, stream(2, "evaluation"), n)
        _, p = scipy.stats.ttest_ind(explore.returns, random.returns, equal_var=False)
        assert p > 0.001


class TestSummarize:
    """Tests for rollout summaries"""

    def test_standard_error(self):
        """Test the standard error of the mean"""
        result = summarize([1.0, 2.0, 3.0])
        assert result.mean == pytest.approx(2.0)
        assert result.std_error == pytest.approx(1.0 / math.sqrt(3))
        assert result.to_dict() == {"mean": 2.0, "std_error": result.std_error, "n": 3}

    def test_single_return(self):
        """Test that one return has zero standard error"""
        assert summarize([4.0]).std_error == 0.0
