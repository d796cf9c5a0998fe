import logging
import os
import tempfile

from reminiq.logger import PACKAGE_LOGGER, ColoredOutput, RunLogger


class TestLogger:
    """Tests for the RunLogger class"""

    def test_logger_init(self):
        """Test logger initialization"""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = RunLogger(tmpdir, enabled=True, level="INFO")
            try:
                assert logger.enabled is True
                assert os.path.exists(logger.history_dir)
                assert logger.log_file == os.path.join(tmpdir, "logs", "reminiq.log")
            finally:
                logger.close()

    def test_logger_disabled(self):
        """Test disabled logger"""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = RunLogger(tmpdir, enabled=False)
            assert logger.enabled is False
            # Logging should not raise errors when disabled
            logger.info("Test message")
            logger.error("Test error")
            logger.log_operation("train", {"seeds": [0]})
            assert not os.path.exists(logger.log_dir)
            assert logger.get_history() == []

    def test_module_logs_reach_file(self):
        """Test that package module loggers write into the run log"""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = RunLogger(tmpdir, enabled=True, level="DEBUG")
            try:
                logging.getLogger(f"{PACKAGE_LOGGER}.qlearning").debug("epoch 0: avg_return=1.0")
            finally:
                logger.close()
            with open(logger.log_file) as f:
                content = f.read()
            assert "reminiq.qlearning - DEBUG - epoch 0" in content

    def test_close_detaches_handler(self):
        """Test that closing removes the file handler"""
        with tempfile.TemporaryDirectory() as tmpdir:
            package_logger = logging.getLogger(PACKAGE_LOGGER)
            before = len(package_logger.handlers)
            logger = RunLogger(tmpdir, enabled=True)
            assert len(package_logger.handlers) == before + 1
            logger.close()
            assert len(package_logger.handlers) == before

    def test_log_operation(self):
        """Test logging operations"""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = RunLogger(tmpdir, enabled=True)
            try:
                logger.log_operation("train", {"seeds": [0, 1]})

                history = logger.get_history("train", limit=1)
                assert len(history) == 1
                assert history[0]["operation"] == "train"
                assert history[0]["data"]["seeds"] == [0, 1]
            finally:
                logger.close()

    def test_history_disabled(self):
        """Test that operation records can be switched off"""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = RunLogger(tmpdir, enabled=True, save_history=False)
            try:
                logger.log_operation("evaluate", {"run_dirs": []})
                assert logger.get_history() == []
            finally:
                logger.close()

    def test_clear_history(self):
        """Test clearing history"""
        with tempfile.TemporaryDirectory() as tmpdir:
            logger = RunLogger(tmpdir, enabled=True)
            try:
                logger.log_operation("op1", {"data": 1})
                logger.log_operation("op2", {"data": 2})
                assert len(logger.get_history()) >= 2

                logger.clear_history()
                assert len(logger.get_history()) == 0
            finally:
                logger.close()


class TestColoredOutput:
    """Tests for console output"""

    def test_streams(self, capsys):
        """Test that errors and warnings go to stderr"""
        ColoredOutput.success("trained seed 0")
        ColoredOutput.error("model violates C1")
        ColoredOutput.warning("cancelled")
        captured = capsys.readouterr()
        assert "✓ trained seed 0" in captured.out
        assert "✗ model violates C1" in captured.err
        assert "⚠ cancelled" in captured.err

    def test_plain_when_not_a_terminal(self, capsys):
        """Test that captured output carries no ANSI codes"""
        ColoredOutput.header("Evaluation")
        assert "\033[" not in capsys.readouterr().out
