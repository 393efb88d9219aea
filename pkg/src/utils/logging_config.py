# src/utils/logging_config.py

"""
Centralized logging configuration for the calibration pipeline
Creates rotating daily logs separated by component (main, agents, tools, scripts)
"""

import logging
import logging.handlers
from datetime import datetime
from pathlib import Path
from typing import Optional, Union


class LoggingConfig:
    """Centralized logging configuration with component-based separation"""

    LOG_DIR = Path("./logs")

    # Log components with separate subdirectories
    COMPONENTS = {
        "main": {"loggers": ["__main__", "main"], "subdir": "main"},
        "agents": {"loggers": ["src.agents"], "subdir": "agents"},
        "tools": {"loggers": ["src.tools", "src.utils"], "subdir": "tools"},
        "scripts": {"loggers": ["scripts"], "subdir": "scripts"},
    }

    DEFAULT_LEVEL = logging.INFO
    FILE_LEVEL = logging.DEBUG

    DETAILED_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s"
    SIMPLE_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

    MAX_BYTES = 10 * 1024 * 1024  # 10MB per file
    BACKUP_COUNT = 5

    _configured = False

    @classmethod
    def setup_logging(
        cls,
        console_output: bool = True,
        file_output: bool = True,
        level: Union[int, str] = DEFAULT_LEVEL,
        log_dir: Optional[Union[str, Path]] = None,
    ) -> None:
        """
        Setup logging configuration for the entire application

        Args:
            console_output: Enable console logging
            file_output: Enable file logging with size-based rotation
            level: Root and console level (name or number)
            log_dir: Directory for log files, defaults to LOG_DIR
        """
        if cls._configured:
            return

        if log_dir is not None:
            cls.LOG_DIR = Path(log_dir)
        if isinstance(level, str):
            level = logging.getLevelName(level.upper())
            if not isinstance(level, int):
                level = cls.DEFAULT_LEVEL

        today = datetime.now().strftime("%Y-%m-%d")

        root_logger = logging.getLogger()
        root_logger.setLevel(min(level, cls.FILE_LEVEL) if file_output else level)
        root_logger.handlers.clear()

        if console_output:
            console_handler = logging.StreamHandler()
            console_handler.setLevel(level)
            console_handler.setFormatter(logging.Formatter(cls.SIMPLE_FORMAT))
            root_logger.addHandler(console_handler)

        if file_output:
            cls.LOG_DIR.mkdir(parents=True, exist_ok=True)
            root_logger.addHandler(cls._file_handler(cls.LOG_DIR / f"app_{today}.log"))
            cls._setup_component_loggers(today)

        cls._configured = True

        logger = logging.getLogger(__name__)
        logger.debug(f"Logging initialized - Date: {today}, directory: {cls.LOG_DIR.absolute()}")

    @classmethod
    def _file_handler(cls, path: Path) -> logging.handlers.RotatingFileHandler:
        handler = logging.handlers.RotatingFileHandler(
            path, maxBytes=cls.MAX_BYTES, backupCount=cls.BACKUP_COUNT, encoding="utf-8"
        )
        handler.setLevel(cls.FILE_LEVEL)
        handler.setFormatter(logging.Formatter(cls.DETAILED_FORMAT))
        return handler

    @classmethod
    def _setup_component_loggers(cls, today: str) -> None:
        """Separate log files for each component in subdirectories"""
        for config in cls.COMPONENTS.values():
            subdir = cls.LOG_DIR / config["subdir"]
            subdir.mkdir(exist_ok=True)
            handler = cls._file_handler(subdir / f"{today}.log")

            for prefix in config["loggers"]:
                logger = logging.getLogger(prefix)
                # Avoid duplicate handlers
                if not any(
                    isinstance(h, logging.handlers.RotatingFileHandler) and h.baseFilename == handler.baseFilename
                    for h in logger.handlers
                ):
                    logger.addHandler(handler)

    @classmethod
    def set_level(cls, level: int, component: Optional[str] = None) -> None:
        """
        Change logging level dynamically

        Args:
            level: Logging level
            component: Optional component name to target, or None for root logger
        """
        if component is None:
            logging.getLogger().setLevel(level)
        elif component in cls.COMPONENTS:
            for prefix in cls.COMPONENTS[component]["loggers"]:
                logging.getLogger(prefix).setLevel(level)
        else:
            logging.getLogger(component).setLevel(level)

    @classmethod
    def reset(cls) -> None:
        """Drop handlers so setup_logging can run again"""
        logging.getLogger().handlers.clear()
        for config in cls.COMPONENTS.values():
            for prefix in config["loggers"]:
                for handler in list(logging.getLogger(prefix).handlers):
                    logging.getLogger(prefix).removeHandler(handler)
                    handler.close()
        cls._configured = False


def setup_logging(
    console: bool = True,
    file: bool = True,
    level: Union[int, str] = LoggingConfig.DEFAULT_LEVEL,
    log_dir: Optional[Union[str, Path]] = None,
) -> None:
    """Quick setup function for logging"""
    LoggingConfig.setup_logging(console_output=console, file_output=file, level=level, log_dir=log_dir)
