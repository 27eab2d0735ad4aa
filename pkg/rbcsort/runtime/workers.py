import logging
import threading
from contextlib import contextmanager
from typing import (
    Any,
    Callable,
    Dict,
    Generator,
    Iterator,
    List,
    NamedTuple,
    Optional,
    Sequence,
    TypeVar,
)

from rbcsort.exceptions import (
    DeadlockError,
    InvalidUseError,
)
from rbcsort.runtime.transport import (
    Endpoint,
    Fabric,
)
from rbcsort.utils.constants import DEFAULT_MAX_ROUNDS

logger = logging.getLogger(__name__)

T = TypeVar('T')

_binding = threading.local()


class Park(NamedTuple):
    """
    Yielded by a rank program that cannot progress until its mailbox version moves past `version`.
    """
    version: int


Program = Generator[Park, None, T]


def current_rank() -> Optional[int]:
    return getattr(_binding, 'rank', None)


@contextmanager
def as_rank(rank: int) -> Iterator[None]:
    previous = current_rank()
    _binding.rank = rank
    try:
        yield
    finally:
        _binding.rank = previous


def bound_rank() -> int:
    rank = current_rank()
    if rank is None:
        raise InvalidUseError('No simulated rank is bound to the calling thread.')
    return rank


def drive(program: Program[T], endpoint: Endpoint) -> T:
    """
    Run a rank program to completion on the calling thread, parking between attempts.
    """
    try:
        signal = next(program)
        while True:
            endpoint.park(signal.version)
            signal = program.send(None)
    except StopIteration as stop:
        return stop.value  # type: ignore


def run_threads(fabric: Fabric, target: Callable[[int], T], ranks: Optional[Sequence[int]]=None) -> List[T]:
    """
    Run `target(rank)` on one thread per rank and return the results in rank order.
    The first failure aborts the fabric so that blocked peers give up, then it is re-raised.
    """
    ranks = list(range(fabric.size)) if ranks is None else list(ranks)
    results: Dict[int, T] = {}
    errors: List[BaseException] = []

    def worker(rank: int) -> None:
        with as_rank(rank):
            try:
                results[rank] = target(rank)
            except BaseException as error:
                errors.append(error)
                fabric.abort()

    threads = [threading.Thread(target=worker, args=(rank,), name=f'rank-{rank}', daemon=True) for rank in ranks]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    if errors:
        primary = next((error for error in errors if not isinstance(error, DeadlockError)), errors[0])
        raise primary
    return [results[rank] for rank in ranks]


class Lockstep:
    """
    Deterministic single-threaded driver. Every round resumes each runnable program
    until it parks; messages sent during a round are delivered when the round ends.
    """
    def __init__(self, fabric: Fabric, max_rounds: int=DEFAULT_MAX_ROUNDS) -> None:
        self.fabric = fabric
        self.max_rounds = max_rounds
        self.rounds = 0
        self.results: Dict[int, Any] = {}
        self._programs: Dict[int, Program[Any]] = {}
        self._parked: Dict[int, int] = {}
        fabric.set_staging(True)

    @property
    def pending(self) -> List[int]:
        return sorted(self._programs)

    def spawn(self, rank: int, program: Program[Any]) -> None:
        if rank in self._programs:
            raise InvalidUseError(f"Rank {rank} already runs a program.")
        self.fabric.endpoint(rank)
        self._programs[rank] = program
        self._parked.pop(rank, None)

    def step(self) -> bool:
        """
        Run one round; returns whether anything happened.
        """
        sent_before = self.fabric.messages_sent
        activity_before = sum(endpoint.activity for endpoint in self.fabric.endpoints)
        finished = False
        for rank in sorted(self._programs):
            version = self._parked.get(rank)
            if version is not None and self.fabric.endpoints[rank].mailbox_version() == version:
                continue
            program = self._programs[rank]
            with as_rank(rank):
                try:
                    signal = next(program)
                except StopIteration as stop:
                    self.results[rank] = stop.value
                    del self._programs[rank]
                    self._parked.pop(rank, None)
                    finished = True
                    continue
            self._parked[rank] = signal.version
        delivered = self.fabric.flush_staged()
        activity_after = sum(endpoint.activity for endpoint in self.fabric.endpoints)
        progressed = (
            finished or delivered > 0
            or self.fabric.messages_sent != sent_before
            or activity_after != activity_before
        )
        if progressed:
            self.rounds += 1
        return progressed

    def run(self) -> Dict[int, Any]:
        while self._programs:
            if self.rounds >= self.max_rounds:
                raise DeadlockError(f"Gave up after {self.rounds} rounds; ranks {self.pending} still running.")
            if not self.step():
                raise DeadlockError(f"No rank can make progress; ranks {self.pending} are waiting.")
        logger.debug('Lockstep finished after %d rounds', self.rounds)
        return self.results

    def close(self) -> None:
        self.fabric.set_staging(False)
