import json
import logging
import os
import sys
from datetime import datetime
from typing import Any, Dict, List, Optional, TextIO

PACKAGE_LOGGER = "reminiq"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class RunLogger:
    """
    Logger for one output directory.

    Attaches a file handler to the package logger so every module's
    ``logging.getLogger(__name__)`` output lands in ``<run_dir>/logs/reminiq.log``,
    and keeps structured operation records under ``<run_dir>/logs/history``.
    Logs are not run artifacts and are never hashed into a manifest.
    """

    def __init__(self, run_dir: str, enabled: bool = True, level: str = "INFO",
                 save_history: bool = True):
        self.run_dir = run_dir
        self.enabled = enabled
        self.save_history = save_history
        self.log_dir = os.path.join(run_dir, "logs")
        self.history_dir = os.path.join(self.log_dir, "history")
        self.log_file = os.path.join(self.log_dir, "reminiq.log")
        self._handler: Optional[logging.Handler] = None

        self.logger = logging.getLogger(PACKAGE_LOGGER)
        self.logger.setLevel(getattr(logging, level.upper(), logging.INFO))

        if self.enabled:
            os.makedirs(self.history_dir, exist_ok=True)
            self._handler = logging.FileHandler(self.log_file)
            self._handler.setFormatter(logging.Formatter(LOG_FORMAT))
            self.logger.addHandler(self._handler)

    def info(self, message: str):
        if self.enabled:
            self.logger.info(message)

    def error(self, message: str):
        if self.enabled:
            self.logger.error(message)

    def warning(self, message: str):
        if self.enabled:
            self.logger.warning(message)

    def debug(self, message: str):
        if self.enabled:
            self.logger.debug(message)

    def log_operation(self, operation: str, data: Dict[str, Any]):
        """Save a structured record of one command run."""
        if not self.enabled or not self.save_history:
            return

        now = datetime.now()
        log_entry = {
            "timestamp": now.isoformat(),
            "operation": operation,
            "data": data,
        }
        history_file = os.path.join(
            self.history_dir,
            f"{operation}_{now.strftime('%Y%m%d_%H%M%S_%f')}.json"
        )
        try:
            with open(history_file, "w") as f:
                json.dump(log_entry, f, indent=2)
            self.info(f"Operation logged: {operation}")
        except OSError as e:
            self.error(f"Failed to log operation: {str(e)}")

    def get_history(self, operation_type: Optional[str] = None, limit: int = 10) -> List[Dict]:
        """Retrieve operation records, newest first."""
        if not self.enabled or not os.path.exists(self.history_dir):
            return []

        history_files = [
            os.path.join(self.history_dir, filename)
            for filename in os.listdir(self.history_dir)
            if filename.endswith(".json")
            and (operation_type is None or filename.startswith(operation_type))
        ]
        # file names carry microsecond timestamps
        history_files.sort(key=lambda p: (os.path.getmtime(p), p), reverse=True)

        entries = []
        for filepath in history_files[:limit]:
            try:
                with open(filepath, "r") as f:
                    entries.append(json.load(f))
            except (OSError, json.JSONDecodeError) as e:
                self.error(f"Error reading history file {filepath}: {str(e)}")
        return entries

    def clear_history(self):
        if not self.enabled or not os.path.exists(self.history_dir):
            return

        for filename in os.listdir(self.history_dir):
            filepath = os.path.join(self.history_dir, filename)
            try:
                os.remove(filepath)
            except OSError as e:
                self.error(f"Error removing history file {filename}: {str(e)}")

    def close(self):
        """Detach and close the file handler."""
        if self._handler is not None:
            self.logger.removeHandler(self._handler)
            self._handler.close()
            self._handler = None


class ColoredOutput:
    """
    Console output for the CLI.

    Errors and warnings go to stderr, everything else to stdout. ANSI colors
    are used only when the stream is a terminal and NO_COLOR is unset.
    """

    RESET = "\033[0m"
    BOLD = "\033[1m"
    RED = "\033[91m"
    GREEN = "\033[92m"
    YELLOW = "\033[93m"
    BLUE = "\033[94m"

    @staticmethod
    def _emit(color: str, message: str, stream: TextIO):
        if stream.isatty() and "NO_COLOR" not in os.environ:
            message = f"{color}{message}{ColoredOutput.RESET}"
        print(message, file=stream)

    @staticmethod
    def success(message: str):
        ColoredOutput._emit(ColoredOutput.GREEN, f"✓ {message}", sys.stdout)

    @staticmethod
    def error(message: str):
        ColoredOutput._emit(ColoredOutput.RED, f"✗ {message}", sys.stderr)

    @staticmethod
    def warning(message: str):
        ColoredOutput._emit(ColoredOutput.YELLOW, f"⚠ {message}", sys.stderr)

    @staticmethod
    def info(message: str):
        ColoredOutput._emit(ColoredOutput.BLUE, f"ℹ {message}", sys.stdout)

    @staticmethod
    def header(message: str):
        ColoredOutput._emit(ColoredOutput.BOLD, message, sys.stdout)
