"""
Kasamawashi — Декораторы
"""
import asyncio
import time
from functools import wraps
from typing import Callable

from loguru import logger


def measure_time(func: Callable) -> Callable:
    """
    Замер времени выполнения (синхронные и асинхронные функции)

    Пример использования:
        @measure_time
        def sweep(...):
            ...
    """
    if asyncio.iscoroutinefunction(func):
        @wraps(func)
        async def async_wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            try:
                result = await func(*args, **kwargs)
            except Exception as e:
                logger.error(f"{func.__name__} failed after {time.perf_counter() - start_time:.2f}s: {e}")
                raise
            logger.info(f"{func.__name__} completed in {time.perf_counter() - start_time:.2f}s")
            return result

        return async_wrapper

    @wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            logger.error(f"{func.__name__} failed after {time.perf_counter() - start_time:.2f}s: {e}")
            raise
        logger.info(f"{func.__name__} completed in {time.perf_counter() - start_time:.2f}s")
        return result

    return wrapper
