"""
job_queue.py - Background jobs for long synthesis runs
Bounded in-process queue drained by worker threads; handlers report progress per restart
"""

import logging
import queue
import threading
import traceback
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Callable, Dict, Optional

from machine_config import run_config_store

logger = logging.getLogger(__name__)

JobHandler = Callable[[Dict[str, Any], Callable[[float, str], None]], Dict[str, Any]]


class JobStatus(str, Enum):
    QUEUED = "QUEUED"
    RUNNING = "RUNNING"
    DONE = "DONE"
    ERROR = "ERROR"


def _now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass
class Job:
    id: str
    type: str
    params: Dict[str, Any]
    status: JobStatus = JobStatus.QUEUED
    created_at: datetime = field(default_factory=_now)
    started_at: Optional[datetime] = None
    completed_at: Optional[datetime] = None
    progress: float = 0.0
    progress_message: str = ""
    result: Optional[Dict[str, Any]] = None
    error: Optional[str] = None
    finished: threading.Event = field(default_factory=threading.Event, repr=False)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "job_id": self.id,
            "type": self.type,
            "status": self.status.value,
            "progress": self.progress,
            "progress_message": self.progress_message,
            "created_at": self.created_at.isoformat(),
            "started_at": self.started_at.isoformat() if self.started_at else None,
            "completed_at": self.completed_at.isoformat() if self.completed_at else None,
            "result": self.result,
            "error": self.error,
        }


class JobQueue:
    """
    Worker threads pull job ids from a bounded queue; enqueue raises queue.Full when
    the queue is at capacity.
    """

    def __init__(self, max_queue_size: int = 20):
        self.max_queue_size = max_queue_size
        self._queue: "queue.Queue[str]" = queue.Queue(maxsize=max_queue_size)
        self._jobs: Dict[str, Job] = {}
        self._jobs_lock = threading.Lock()
        self._handlers: Dict[str, JobHandler] = {}
        self._workers = []
        self._shutdown = threading.Event()

    def register_handler(self, job_type: str, handler: JobHandler):
        self._handlers[job_type] = handler

    def start_workers(self, num_workers: int = 2):
        self._shutdown.clear()
        for i in range(len(self._workers), num_workers):
            worker = threading.Thread(target=self._worker_loop, name=f"SynthesisWorker-{i}", daemon=True)
            worker.start()
            self._workers.append(worker)
        logger.info(f"✅ {len(self._workers)} job workers running")

    def enqueue(self, job_type: str, params: Dict[str, Any]) -> str:
        if job_type not in self._handlers:
            raise KeyError(f"no handler registered for job type '{job_type}'")
        job = Job(id=str(uuid.uuid4()), type=job_type, params=params)
        with self._jobs_lock:
            self._jobs[job.id] = job
        try:
            self._queue.put(job.id, block=False)
        except queue.Full:
            with self._jobs_lock:
                del self._jobs[job.id]
            raise queue.Full("job queue is full - try again later")
        return job.id

    def get_status(self, job_id: str) -> Optional[Job]:
        with self._jobs_lock:
            return self._jobs.get(job_id)

    def wait(self, job_id: str, timeout: Optional[float] = None) -> Optional[Job]:
        """Block until the job is DONE or ERROR (or the timeout passes)"""
        job = self.get_status(job_id)
        if job is not None:
            job.finished.wait(timeout)
        return job

    def get_queue_depth(self) -> int:
        return self._queue.qsize()

    def get_running_count(self) -> int:
        with self._jobs_lock:
            return sum(1 for job in self._jobs.values() if job.status is JobStatus.RUNNING)

    def _worker_loop(self):
        while not self._shutdown.is_set():
            try:
                job_id = self._queue.get(timeout=0.5)
            except queue.Empty:
                continue
            try:
                self._process_job(job_id)
            finally:
                self._queue.task_done()

    def _process_job(self, job_id: str):
        job = self.get_status(job_id)
        if job is None:
            return
        job.status = JobStatus.RUNNING
        job.started_at = _now()

        def update_progress(progress: float, message: str = ""):
            job.progress = progress
            job.progress_message = message

        try:
            job.result = self._handlers[job.type](job.params, update_progress)
            job.status = JobStatus.DONE
            job.progress = 1.0
        except Exception as e:
            job.status = JobStatus.ERROR
            job.error = str(e)
            logger.error(f"❌ job {job.id} ({job.type}) failed: {e}")
            logger.debug(traceback.format_exc())
        finally:
            job.completed_at = _now()
            job.finished.set()

    def shutdown(self):
        self._shutdown.set()
        for worker in self._workers:
            worker.join(timeout=5.0)
        self._workers.clear()


# Global job queue instance
job_queue = JobQueue(max_queue_size=run_config_store.get_job_queue_size())
