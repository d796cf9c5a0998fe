import pytest
from hypothesis import given, settings, strategies as st

from reminiq.domain import INITIAL_STATE, LEARNABLE_ACTIONS, PwdChoice, RewardSpec, RobotAction
from reminiq.environment import (
    DEFAULT_ENV,
    DoneReason,
    EnvConfig,
    IllegalActionError,
    SessionFinishedError,
    forced_action_required,
    reset,
    step,
)
from reminiq.patient.generator import default_model
from reminiq.seeding import stream
from reminiq.validators import ValidationError
from tests.helpers import (
    CHANGE_ONLY,
    CONTINUE_ONLY,
    GOOD,
    STOP_ONLY,
    WORST,
    deterministic_model,
    state,
)

R1 = RewardSpec.preset("R1")
DEFAULT_MODEL = default_model(0)


def drive_to_forced(m, env=DEFAULT_ENV):
    """Two easy prompts into a bad state; the session then requires a7."""
    rng = stream(0, "train")
    ss = reset(env)
    for _ in range(2):
        ss = step(ss, RobotAction.EASY_PROMPT, m, R1, rng, env).session
    return ss, rng


class TestReset:
    """Tests for session reset"""

    def test_initial_session(self):
        """Test the fresh session"""
        ss = reset()
        assert ss.current == INITIAL_STATE
        assert ss.previous is None
        assert (ss.round, ss.triggers_discussed, ss.bad_streak) == (0, 1, 0)
        assert not ss.done
        assert not forced_action_required(ss)

    def test_zero_rounds(self):
        """Test that a zero-round session is over before it starts"""
        ss = reset(EnvConfig(max_rounds=0))
        assert ss.done
        assert ss.done_reason is DoneReason.MAX_ROUNDS

    def test_invalid_limits(self):
        """Test that invalid session limits are rejected"""
        with pytest.raises(ValidationError):
            EnvConfig(max_triggers=0)
        with pytest.raises(ValidationError):
            EnvConfig(max_rounds=-1)


class TestStep:
    """Tests for stepping a session"""

    def test_good_step(self):
        """Test an ordinary step"""
        m = deterministic_model(GOOD)
        out = step(reset(), RobotAction.DIFFICULT_PROMPT, m, R1, stream(0, "train"))
        assert out.next_state == GOOD
        assert out.reward == pytest.approx(7.0)
        assert not out.done
        assert out.forced_choice_taken is None
        assert out.info == (1, 1, 0)
        assert out.session.previous == INITIAL_STATE

    def test_step_does_not_mutate(self):
        """Test that the input session is unchanged"""
        ss = reset()
        step(ss, RobotAction.EASY_PROMPT, DEFAULT_MODEL, R1, stream(0, "train"))
        assert ss == reset()

    def test_forced_after_two_bad_moments(self):
        """Test that two bad moments force GiveChoices"""
        m = deterministic_model(WORST)
        rng = stream(0, "train")
        ss = step(reset(), RobotAction.EASY_PROMPT, m, R1, rng).session
        assert ss.bad_streak == 1
        assert not forced_action_required(ss)
        ss = step(ss, RobotAction.EASY_PROMPT, m, R1, rng).session
        assert ss.bad_streak == 2
        assert forced_action_required(ss)
        with pytest.raises(IllegalActionError):
            step(ss, RobotAction.COMFORT, m, R1, rng)

    def test_give_choices_not_forced(self):
        """Test that a7 is illegal without a bad streak"""
        with pytest.raises(IllegalActionError):
            step(reset(), RobotAction.GIVE_CHOICES, DEFAULT_MODEL, R1, stream(0, "train"))

    def test_good_moment_resets_streak(self):
        """Test that a good moment clears the streak"""
        m = deterministic_model(lambda a, s: WORST if a is RobotAction.EASY_PROMPT else GOOD)
        rng = stream(0, "train")
        ss = step(reset(), RobotAction.EASY_PROMPT, m, R1, rng).session
        ss = step(ss, RobotAction.COMFORT, m, R1, rng).session
        assert ss.bad_streak == 0

    def test_continue(self):
        """Test the continue outcome"""
        bad = state(0, 1, 1)
        ss, rng = drive_to_forced(deterministic_model(bad, CONTINUE_ONLY))
        out = step(ss, RobotAction.GIVE_CHOICES, deterministic_model(bad, CONTINUE_ONLY), R1, rng)
        assert out.forced_choice_taken is PwdChoice.CONTINUE
        assert out.next_state == bad
        assert out.reward == pytest.approx(-2.5)
        assert out.info == (3, 1, 0)
        assert not out.done

    def test_stop(self):
        """Test the stop outcome"""
        m = deterministic_model(WORST, STOP_ONLY)
        ss, rng = drive_to_forced(m)
        out = step(ss, RobotAction.GIVE_CHOICES, m, R1, rng)
        assert out.forced_choice_taken is PwdChoice.STOP
        assert out.done
        assert out.done_reason is DoneReason.STOP_CHOSEN
        assert out.next_state == WORST
        assert out.reward == pytest.approx(-7.5)

    def test_change_trigger(self):
        """Test the change-trigger outcome"""
        m = deterministic_model(WORST, CHANGE_ONLY)
        ss, rng = drive_to_forced(m)
        out = step(ss, RobotAction.GIVE_CHOICES, m, R1, rng)
        assert out.forced_choice_taken is PwdChoice.CHANGE_TRIGGER
        assert out.next_state == INITIAL_STATE
        assert out.reward == pytest.approx(1.0)
        assert out.session.triggers_discussed == 2
        assert out.session.bad_streak == 0
        assert not out.done

    def test_max_triggers(self):
        """Test that changing past the last trigger ends the session"""
        env = EnvConfig(max_triggers=1)
        m = deterministic_model(WORST, CHANGE_ONLY)
        ss, rng = drive_to_forced(m, env)
        out = step(ss, RobotAction.GIVE_CHOICES, m, R1, rng, env)
        assert out.done
        assert out.done_reason is DoneReason.MAX_TRIGGERS
        assert out.session.triggers_discussed == 1

    def test_max_rounds(self):
        """Test that a session ends after max_rounds steps"""
        m = deterministic_model(GOOD)
        rng = stream(0, "train")
        ss = reset()
        for _ in range(49):
            ss = step(ss, RobotAction.EASY_PROMPT, m, R1, rng).session
            assert not ss.done
        out = step(ss, RobotAction.EASY_PROMPT, m, R1, rng)
        assert out.done
        assert out.done_reason is DoneReason.MAX_ROUNDS
        assert out.session.round == 50
        with pytest.raises(SessionFinishedError):
            step(out.session, RobotAction.EASY_PROMPT, m, R1, rng)

    def test_reproducible(self):
        """Test that equal seeds give equal trajectories"""
        def trajectory():
            rng = stream(11, "train")
            ss = reset()
            states = []
            while not ss.done:
                a = RobotAction.GIVE_CHOICES if forced_action_required(ss) else RobotAction.MODERATE_PROMPT
                out = step(ss, a, DEFAULT_MODEL, R1, rng)
                states.append((out.next_state.index, out.reward, out.forced_choice_taken))
                ss = out.session
            return states

        assert trajectory() == trajectory()


class TestSessionProperties:
    """Property tests over random action sequences"""

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1),
           picks=st.lists(st.integers(0, len(LEARNABLE_ACTIONS) - 1), min_size=1, max_size=60))
    def test_invariants(self, seed, picks):
        """Test counters, forcing and illegal-action rejection over arbitrary learnable choices"""
        rng = stream(seed, "train")
        low, high = R1.bounds()
        ss = reset()
        for pick in picks:
            if ss.done:
                break
            forced = forced_action_required(ss)
            if forced:
                for other in LEARNABLE_ACTIONS:
                    with pytest.raises(IllegalActionError):
                        step(ss, other, DEFAULT_MODEL, R1, rng)
            else:
                with pytest.raises(IllegalActionError):
                    step(ss, RobotAction.GIVE_CHOICES, DEFAULT_MODEL, R1, rng)
            a = RobotAction.GIVE_CHOICES if forced else LEARNABLE_ACTIONS[pick]
            out = step(ss, a, DEFAULT_MODEL, R1, rng)
            assert low <= out.reward <= high
            assert out.session.round == ss.round + 1
            assert out.session.round <= DEFAULT_ENV.max_rounds
            assert 1 <= out.session.triggers_discussed <= DEFAULT_ENV.max_triggers
            assert out.session.bad_streak <= DEFAULT_ENV.streak_threshold
            if forced:
                assert out.session.bad_streak == 0
                assert out.forced_choice_taken is not None
            else:
                assert out.session.bad_streak == (ss.bad_streak + 1 if out.next_state.is_bad else 0)
            ss = out.session

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), pick=st.integers(0, 5))
    def test_stop_always_ends_at_first_choice(self, seed, pick):
        """Test that with stop probability 1 the first a7 is the last step"""
        m = default_model(0).with_choice({PwdChoice.STOP: 1.0})
        rng = stream(seed, "train")
        ss = reset()
        choices = 0
        while not ss.done:
            forced = forced_action_required(ss)
            a = RobotAction.GIVE_CHOICES if forced else LEARNABLE_ACTIONS[pick]
            ss = step(ss, a, m, R1, rng).session
            choices += forced
        assert choices <= 1
        if choices:
            assert ss.done_reason is DoneReason.STOP_CHOSEN
