import logging
from pathlib import Path

from concurrent_log_handler import ConcurrentRotatingFileHandler
from icecream import ic

_LOG_DIR = Path("logs")
# loggers that own a file handler under _LOG_DIR
_FILE_LOGGERS: set[str] = set()


def set_log_dir(path) -> Path:
    """切换日志目录，已配置的文件处理器会被关闭并在下次 get_logger 时重建。

    Args:
        path: 新的日志目录

    Returns:
        Path: 日志目录
    """
    global _LOG_DIR
    _LOG_DIR = Path(path)
    for name in sorted(_FILE_LOGGERS):
        logger = logging.getLogger(name)
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
            handler.close()
    _FILE_LOGGERS.clear()
    return _LOG_DIR


def log_dir() -> Path:
    return _LOG_DIR


def get_logger(name: str, file=None, level=logging.INFO) -> logging.Logger:
    """获取或创建指定名称的logger，确保仅配置一次。

    Args:
        name: 模块唯一标识 (如 'tree')
        file: 日志文件名，写入当前日志目录 (None表示不写文件)
        level: 日志级别

    Returns:
        logging.Logger: 日志记录器
    """
    logger = logging.getLogger(name)

    # 避免重复添加处理器
    if not logger.handlers:
        logger.setLevel(level)
        formatter = logging.Formatter("%(asctime)s [%(levelname)s] %(name)s: %(message)s")

        if file:
            _LOG_DIR.mkdir(parents=True, exist_ok=True)
            file_handler = ConcurrentRotatingFileHandler(
                _LOG_DIR / file, mode="a", maxBytes=1024 * 1024 * 1, backupCount=5
            )
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)
            _FILE_LOGGERS.add(name)

    return logger


def write_errors(errs, errs_txt="errors.txt") -> Path:
    errs_txt = Path(errs_txt)
    errs_txt.parent.mkdir(parents=True, exist_ok=True)
    with open(errs_txt, "w", encoding="utf-8") as f:
        for err in errs:
            f.write(f"{err}\n")
    ic(f"Check {errs_txt} for more information")
    return errs_txt
