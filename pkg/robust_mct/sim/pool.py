"""
Thread pool for Monte Carlo replicates.

Worker threads pull replicate indices from a shared queue, so fast workers
take more replicates than slow ones. Each result is stored in the slot of its
replicate index and every replicate draws from its own RNG stream, so the
outcome does not depend on the number of workers.
"""

import logging
import threading
from queue import Empty, Queue
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)


class ReplicatePool:
    """Runs ``task(replicate)`` for replicate indices 0..n-1 on worker threads."""

    def __init__(self, max_workers: int = 1):
        self.max_workers = max(1, int(max_workers))
        self.queue: Queue = Queue()
        self.workers: List[threading.Thread] = []
        self.running = False
        self.lock = threading.Lock()
        self.stats = {
            "total_queued": 0,
            "total_executed": 0,
            "total_failed": 0,
            "queue_size": 0,
            "active_workers": 0,
        }
        self._task: Optional[Callable[[int], Any]] = None
        self._results: List[Any] = []
        self._errors: Dict[int, BaseException] = {}

    def start(self):
        """Start the worker threads."""
        if self.running:
            return
        self.running = True
        self.workers = []
        for i in range(self.max_workers):
            worker = threading.Thread(target=self._worker_loop, name=f"ReplicateWorker-{i}", daemon=True)
            worker.start()
            self.workers.append(worker)
        with self.lock:
            self.stats["active_workers"] = len(self.workers)
        logger.debug(f"[POOL] Started {self.max_workers} workers")

    def stop(self):
        """Stop the worker threads once they finish their current replicate."""
        self.running = False
        for worker in self.workers:
            worker.join(timeout=5)
        self.workers = []
        with self.lock:
            self.stats["active_workers"] = 0
        logger.debug("[POOL] Workers stopped")

    def _worker_loop(self):
        while self.running:
            try:
                replicate = self.queue.get(timeout=0.1)
            except Empty:
                continue
            try:
                result = self._task(replicate)
                self._results[replicate] = result
                with self.lock:
                    self.stats["total_executed"] += 1
            except Exception as exc:
                self._errors[replicate] = exc
                with self.lock:
                    self.stats["total_failed"] += 1
                logger.error(f"[POOL] Replicate {replicate} raised {type(exc).__name__}: {exc}")
            finally:
                self.queue.task_done()

    def run(self, task: Callable[[int], Any], n: int) -> List[Any]:
        """
        Execute ``task`` for every replicate index.

        Args:
            task: callable taking the replicate index; must not share mutable state
            n: number of replicates

        Returns:
            list of task results indexed by replicate

        Raises:
            the first (lowest-index) exception raised by a task
        """
        self._task = task
        self._results = [None] * n
        self._errors = {}

        if self.max_workers == 1:
            for replicate in range(n):
                self._results[replicate] = task(replicate)
            with self.lock:
                self.stats["total_queued"] += n
                self.stats["total_executed"] += n
            return self._results

        for replicate in range(n):
            self.queue.put(replicate)
        with self.lock:
            self.stats["total_queued"] += n
            self.stats["queue_size"] = self.queue.qsize()

        started_here = not self.running
        if started_here:
            self.start()
        try:
            self.queue.join()
        finally:
            if started_here:
                self.stop()
        with self.lock:
            self.stats["queue_size"] = self.queue.qsize()

        if self._errors:
            first = min(self._errors)
            raise self._errors[first]
        return self._results

    def get_pool_status(self) -> Dict[str, Any]:
        """Get pool statistics."""
        with self.lock:
            status = dict(self.stats)
        status["running"] = self.running
        status["max_workers"] = self.max_workers
        return status
