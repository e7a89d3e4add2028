"""
Тесты для ядра системы
"""

import pytest

from src.core.config import Settings
from src.core.task_queue import JobStatus, TaskQueue, run_jobs


def _square(x):
    return x * x


def _fail():
    raise ValueError("boom")


class TestSettings:
    """Тесты для настроек"""

    def test_defaults(self):
        """Тест значений по умолчанию"""
        settings = Settings()
        assert settings.threads >= 1
        assert settings.classification_eps == 1e-9
        assert settings.seed_offset == 1e-4

    def test_env_override(self, monkeypatch):
        """Тест переопределения через переменные окружения"""
        monkeypatch.setenv("KASAMAWASHI_THREADS", "3")
        monkeypatch.setenv("KASAMAWASHI_LOG_LEVEL", "DEBUG")
        settings = Settings()
        assert settings.threads == 3
        assert settings.log_level == "DEBUG"


class TestTaskQueue:
    """Тесты для Task Queue"""

    @pytest.mark.asyncio
    async def test_task_queue_initialization(self):
        """Тест инициализации Task Queue"""
        task_queue = TaskQueue(max_concurrent=3)
        stats = task_queue.get_stats()

        assert stats["max_concurrent"] == 3
        assert stats["total_submitted"] == 0

    @pytest.mark.asyncio
    async def test_submit_and_run(self):
        """Тест выполнения задач в порядке подачи"""
        task_queue = TaskQueue(max_concurrent=2)
        jobs = [task_queue.submit(f"square-{i}", _square, i) for i in range(5)]

        assert all(job.status == JobStatus.PENDING for job in jobs)
        done = await task_queue.run()

        assert [job.result for job in done] == [0, 1, 4, 9, 16]
        assert all(job.status == JobStatus.COMPLETED for job in jobs)
        assert task_queue.get_stats()["total_completed"] == 5

    @pytest.mark.asyncio
    async def test_failed_job(self):
        """Тест задачи с ошибкой"""
        task_queue = TaskQueue(max_concurrent=1)
        bad = task_queue.submit("bad", _fail)
        good = task_queue.submit("good", _square, 3)
        await task_queue.run()

        assert bad.status == JobStatus.FAILED
        assert "ValueError: boom" in bad.error
        assert good.result == 9
        assert bad.to_dict()["status"] == "failed"
        assert task_queue.get_stats()["total_failed"] == 1

    @pytest.mark.asyncio
    async def test_kwargs(self):
        """Тест передачи именованных аргументов"""
        task_queue = TaskQueue()
        job = task_queue.submit("pow", pow, 2, exp=10)
        await task_queue.run()
        assert job.result == 1024
        assert job.duration is not None


class TestRunJobs:
    """Тесты для синхронной обёртки"""

    def test_results_in_order(self):
        """Тест порядка результатов"""
        jobs = [(f"job-{i}", _square, (i,)) for i in range(10)]
        assert run_jobs(jobs, max_concurrent=4) == [i * i for i in range(10)]

    def test_failure_is_raised(self):
        """Тест проброса ошибки"""
        with pytest.raises(RuntimeError, match="bad"):
            run_jobs([("bad", _fail, ())], max_concurrent=1)
