from typing import Generator

import numpy as np


def batch_generator(items: list, batch_size: int) -> Generator[list, None, None]:
    """生成任务批次"""
    for i in range(0, len(items), batch_size):
        yield items[i: i + batch_size]


def block_rng(block: int, seed: int) -> np.random.Generator:
    """第 block 个批次的随机数生成器，与进程数无关。

    种子序列为 [block, seed]: 批次号在前，主种子在后。
    """
    return np.random.default_rng([int(block), int(seed)])
