from rose import pather
from rose.generator import batch_generator, block_rng
from rose.log import get_logger, log_dir, set_log_dir, write_errors

__all__ = [
    "pather",
    "write_errors",
    "batch_generator",
    "block_rng",
    "get_logger",
    "log_dir",
    "set_log_dir",
]
