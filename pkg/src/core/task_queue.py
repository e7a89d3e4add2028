"""
Kasamawashi — Пул вычислительных задач
Асинхронный пул с ограничением параллелизма: CPU-задачи уходят
в потоки через asyncio.to_thread, результаты возвращаются в порядке подачи.
"""
import asyncio
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

from loguru import logger

from src.core.config import settings


class JobStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class Job:
    id: str
    name: str
    handler: Callable[..., Any]
    args: tuple = ()
    kwargs: dict = field(default_factory=dict)
    status: JobStatus = JobStatus.PENDING
    result: Any = None
    error: Optional[str] = None
    started_at: Optional[float] = None
    completed_at: Optional[float] = None

    @property
    def duration(self) -> Optional[float]:
        if self.started_at and self.completed_at:
            return self.completed_at - self.started_at
        return None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "status": self.status.value,
            "duration": self.duration,
            "error": self.error,
        }


class TaskQueue:
    """Пул задач: не более max_concurrent одновременно"""

    def __init__(self, max_concurrent: int = None):
        self._max_concurrent = max_concurrent or settings.threads
        self._jobs: list[Job] = []
        self._stats = {
            "total_submitted": 0,
            "total_completed": 0,
            "total_failed": 0,
        }

    def submit(self, name: str, handler: Callable[..., Any], *args, **kwargs) -> Job:
        """Регистрация задачи; выполнение начинается в run()"""
        job = Job(
            id=str(uuid.uuid4())[:8],
            name=name,
            handler=handler,
            args=args,
            kwargs=kwargs,
        )
        self._jobs.append(job)
        self._stats["total_submitted"] += 1
        logger.debug(f"Job submitted: {job.id} '{name}'")
        return job

    async def _execute(self, job: Job, semaphore: asyncio.Semaphore) -> None:
        async with semaphore:
            job.status = JobStatus.RUNNING
            job.started_at = time.time()
            try:
                job.result = await asyncio.to_thread(job.handler, *job.args, **job.kwargs)
                job.status = JobStatus.COMPLETED
                self._stats["total_completed"] += 1
            except Exception as e:
                job.status = JobStatus.FAILED
                job.error = f"{type(e).__name__}: {e}"
                self._stats["total_failed"] += 1
                logger.error(f"Job failed: {job.id} '{job.name}': {job.error}")
            finally:
                job.completed_at = time.time()

    async def run(self) -> list[Job]:
        """Выполнение всех ожидающих задач; список в порядке подачи"""
        semaphore = asyncio.Semaphore(self._max_concurrent)
        pending = [j for j in self._jobs if j.status == JobStatus.PENDING]
        await asyncio.gather(*(self._execute(j, semaphore) for j in pending))
        logger.debug(
            f"TaskQueue finished {len(pending)} jobs "
            f"({self._stats['total_failed']} failed, {self._max_concurrent} threads)"
        )
        return pending

    def get_stats(self) -> dict:
        return {**self._stats, "max_concurrent": self._max_concurrent}


def run_jobs(jobs: list[tuple[str, Callable[..., Any], tuple]],
             max_concurrent: int = None) -> list[Any]:
    """
    Синхронная обёртка: выполняет (имя, функция, аргументы) в пуле и
    возвращает результаты по порядку. Первая ошибка пробрасывается.
    """
    queue = TaskQueue(max_concurrent)
    submitted = [queue.submit(name, fn, *args) for name, fn, args in jobs]
    asyncio.run(queue.run())
    for job in submitted:
        if job.status == JobStatus.FAILED:
            raise RuntimeError(f"Job '{job.name}' failed: {job.error}")
    return [job.result for job in submitted]
