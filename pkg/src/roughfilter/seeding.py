"""Reproducible random streams and ordered Monte-Carlo fan-out."""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# Named sub-streams of a single path seed.
STREAM_NOISE = 0
STREAM_PRICE = 1
STREAM_OBSERVATION = 2


def make_rng(seed: int, stream: int = STREAM_NOISE) -> np.random.Generator:
    """Counter-based generator for one (seed, stream) pair.

    Philox keyed through a SeedSequence spawn key: the draws of a stream do
    not depend on which other streams or paths were generated before it.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(sequence))


def path_seeds(seed: int, count: int) -> List[int]:
    """Derive `count` independent 64-bit path seeds from a master seed."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def fan_out(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Apply `func` to every item, possibly in threads, keeping input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    logger.debug(f"Fanning out {len(items)} tasks over {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))
