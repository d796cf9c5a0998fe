import pytest

from reminiq.domain import RobotAction
from reminiq.environment import EnvConfig
from reminiq.evaluation.exact import exact_policy_value
from reminiq.evaluation.rollouts import rollout_policy
from reminiq.qlearning import PolicyTable
from reminiq.seeding import stream
from tests.helpers import (
    CHANGE_ONLY,
    CONTINUE_ONLY,
    GOOD,
    STOP_ONLY,
    WORST,
    deterministic_model,
)

ALL_EASY = PolicyTable.uniform(RobotAction.EASY_PROMPT)
ALL_DIFFICULT = PolicyTable.uniform(RobotAction.DIFFICULT_PROMPT)


class TestExactPolicyValue:
    """Tests for the dynamic-programming oracle"""

    def test_zero_horizon(self, model, r1):
        """Test that a zero-round session is worth nothing"""
        assert exact_policy_value(ALL_EASY, model, r1, EnvConfig(max_rounds=0)) == 0.0

    def test_single_step(self, r1):
        """Test one difficult prompt answered well"""
        value = exact_policy_value(ALL_DIFFICULT, deterministic_model(GOOD), r1, EnvConfig(max_rounds=1))
        assert value == pytest.approx(7.0)

    def test_all_good_model(self, r1):
        """Test 50 good rounds"""
        assert exact_policy_value(ALL_EASY, deterministic_model(GOOD), r1) == pytest.approx(237.5)

    def test_stop(self, r1):
        """Test a session stopped at the first choice"""
        m = deterministic_model(WORST, STOP_ONLY)
        assert exact_policy_value(ALL_EASY, m, r1) == pytest.approx(-22.5)

    def test_continue_until_round_limit(self, r1):
        """Test a session that always continues: 50 rounds of -7.5"""
        m = deterministic_model(WORST, CONTINUE_ONLY)
        assert exact_policy_value(ALL_EASY, m, r1) == pytest.approx(-375.0)

    def test_change_until_trigger_limit(self, r1):
        """Test a session that changes trigger at every choice"""
        m = deterministic_model(WORST, CHANGE_ONLY)
        exact = exact_policy_value(ALL_EASY, m, r1)
        assert exact == pytest.approx(15 * (-7.5 - 7.5 + 1.0))
        mc = rollout_policy(ALL_EASY, m, r1, stream(0, "evaluation"), 3)
        assert mc.mean == pytest.approx(exact)

    def test_mixed_choices(self, r1):
        """Test stochastic choices on a deterministic bad model against Monte-Carlo"""
        m = deterministic_model(WORST)
        exact = exact_policy_value(ALL_EASY, m, r1)
        mc = rollout_policy(ALL_EASY, m, r1, stream(1, "evaluation"), 4000)
        assert abs(mc.mean - exact) <= 4 * mc.std_error

    @pytest.mark.parametrize("key", ["0" * 18, "2" * 18, "012345" * 3, "530421" * 3])
    def test_default_model(self, model, r1, key):
        """Test the oracle against Monte-Carlo on the default model"""
        policy = PolicyTable.from_key(key)
        exact = exact_policy_value(policy, model, r1)
        mc = rollout_policy(policy, model, r1, stream(2, "evaluation"), 3000)
        assert abs(mc.mean - exact) <= 4 * mc.std_error

    def test_short_sessions(self, model, r2):
        """Test tighter limits against Monte-Carlo"""
        env = EnvConfig(max_rounds=7, max_triggers=2, streak_threshold=1)
        exact = exact_policy_value(ALL_DIFFICULT, model, r2, env)
        mc = rollout_policy(ALL_DIFFICULT, model, r2, stream(3, "evaluation"), 4000, env)
        assert abs(mc.mean - exact) <= 4 * mc.std_error
