"""Communicators: split-by-color, equal-block all-to-all and reductions.

Two backends share one interface:

* :class:`ThreadComm` runs ``R`` logical ranks on ``R`` threads of one
  process and exchanges buffers through shared memory at barrier-synchronized
  rendezvous points.  Use :func:`run_ranks` to launch a function on every rank.
* :class:`MPIComm` wraps an ``mpi4py`` communicator for runs under a standard
  launcher (``mpirun -n R ...``).

:class:`SerialComm` is the trivial single-rank communicator.
"""
from __future__ import annotations

import operator
import threading

import numpy as np

__all__ = [
    "CommError",
    "Communicator",
    "SerialComm",
    "ThreadComm",
    "MPIComm",
    "run_ranks",
    "mpi_world",
]

_OPS = {"sum": operator.add, "max": max, "min": min}


class CommError(RuntimeError):
    """Collective called inconsistently by the members of a communicator."""


def _pairwise(values, op):
    # rank-ascending pairwise tree: ((v0 op v1) op (v2 op v3)) ...
    values = list(values)
    while len(values) > 1:
        paired = [op(values[i], values[i + 1]) for i in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            paired.append(values[-1])
        values = paired
    return values[0]


class Communicator:
    """Interface shared by all backends."""

    rank = 0
    size = 1

    def split(self, color):
        raise NotImplementedError

    def alltoall(self, send, recv):
        """Send block ``j`` of ``send`` to rank ``j``; block ``i`` of ``recv`` comes from rank ``i``.

        Blocks are equal contiguous slices of the flattened buffers.
        """
        raise NotImplementedError

    def reduce(self, value, op="sum", root=0):
        """Reduce a scalar to ``root``; other ranks receive ``None``."""
        raise NotImplementedError

    def allreduce(self, value, op="sum"):
        raise NotImplementedError

    def bcast(self, value, root=0):
        raise NotImplementedError

    def barrier(self):
        raise NotImplementedError

    def reduce_sum(self, value, root=0):
        return self.reduce(value, "sum", root)

    @staticmethod
    def _check_alltoall(send, recv, size):
        if send.size != recv.size or send.dtype != recv.dtype:
            raise CommError(f"alltoall send/recv mismatch: {send.shape}/{send.dtype} vs "
                            f"{recv.shape}/{recv.dtype}")
        if send.size % size:
            raise CommError(f"alltoall buffer of {send.size} elements not divisible by size {size}")
        if not (send.flags.c_contiguous and recv.flags.c_contiguous):
            raise CommError("alltoall buffers must be C-contiguous")

    def __repr__(self):
        return f"{type(self).__name__}(rank={self.rank}, size={self.size})"


class SerialComm(Communicator):

    def split(self, color):
        return SerialComm()

    def alltoall(self, send, recv):
        self._check_alltoall(send, recv, 1)
        if recv is not send:
            np.copyto(recv.reshape(-1), send.reshape(-1))
        return recv

    def reduce(self, value, op="sum", root=0):
        _OPS[op]
        return value

    def allreduce(self, value, op="sum"):
        _OPS[op]
        return value

    def bcast(self, value, root=0):
        return value

    def barrier(self):
        pass


class _World:
    """Bookkeeping shared by every group spawned from one :func:`run_ranks` call."""

    def __init__(self):
        self.lock = threading.Lock()
        self.barriers = []
        self.aborted = False

    def new_barrier(self, n):
        b = threading.Barrier(n)
        with self.lock:
            self.barriers.append(b)
            if self.aborted:
                b.abort()
        return b

    def abort(self):
        with self.lock:
            self.aborted = True
            for b in self.barriers:
                b.abort()


class _Group:

    def __init__(self, world, size):
        self.world = world
        self.size = size
        self.barrier = world.new_barrier(size)
        self.slots = [None] * size
        self.children = None


class ThreadComm(Communicator):
    """One logical rank of an in-process group; see :func:`run_ranks`."""

    def __init__(self, group, rank):
        self._group = group
        self.rank = rank
        self.size = group.size

    def _wait(self):
        try:
            self._group.barrier.wait()
        except threading.BrokenBarrierError:
            raise CommError("collective aborted: another rank failed") from None

    def _exchange(self, item):
        """Publish ``item`` and return everyone's items, in rank order."""
        g = self._group
        g.slots[self.rank] = item
        self._wait()
        items = list(g.slots)
        self._wait()
        return items

    def split(self, color):
        g = self._group
        colors = self._exchange(int(color))
        if self.rank == 0:
            members = {}
            for r, c in enumerate(colors):
                members.setdefault(c, []).append(r)
            g.children = {c: _Group(g.world, len(m)) for c, m in members.items()}
        self._wait()
        child = g.children[colors[self.rank]]
        local = [r for r, c in enumerate(colors) if c == colors[self.rank]].index(self.rank)
        self._wait()
        return ThreadComm(child, local)

    def alltoall(self, send, recv):
        self._check_alltoall(send, recv, self.size)
        g = self._group
        g.slots[self.rank] = (send, send.size // self.size)
        self._wait()
        specs = list(g.slots)
        if any(s[1] != specs[0][1] or s[0].dtype != send.dtype for s in specs):
            self._wait()
            raise CommError("alltoall block size or dtype differs across ranks")
        flat = recv.reshape(-1)
        for j, (buf, b) in enumerate(specs):
            src = buf.reshape(-1)
            flat[j * b:(j + 1) * b] = src[self.rank * b:(self.rank + 1) * b]
        # senders may not reuse their buffers until every rank has copied
        self._wait()
        return recv

    def reduce(self, value, op="sum", root=0):
        values = self._exchange(value)
        if self.rank == root:
            return _pairwise(values, _OPS[op])
        return None

    def allreduce(self, value, op="sum"):
        return _pairwise(self._exchange(value), _OPS[op])

    def bcast(self, value, root=0):
        return self._exchange(value)[root]

    def barrier(self):
        self._wait()


def run_ranks(size, fn, *args, **kwargs):
    """Call ``fn(comm, *args, **kwargs)`` on ``size`` in-process ranks.

    Returns the per-rank results in rank order.  If any rank raises, all
    pending collectives are aborted and the first exception is re-raised.
    """
    if size == 1:
        return [fn(SerialComm(), *args, **kwargs)]
    world = _World()
    group = _Group(world, size)
    results = [None] * size
    errors = []

    def target(rank):
        try:
            results[rank] = fn(ThreadComm(group, rank), *args, **kwargs)
        except BaseException as e:
            errors.append((rank, e))
            world.abort()

    threads = [threading.Thread(target=target, args=(r,), name=f"rank-{r}") for r in range(size)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if errors:
        # prefer the root cause over the CommErrors it triggered on other ranks
        errors.sort(key=lambda e: (isinstance(e[1], CommError), e[0]))
        raise errors[0][1]
    return results


class MPIComm(Communicator):
    """Adapter over an ``mpi4py.MPI.Comm``."""

    def __init__(self, comm):
        from mpi4py import MPI
        self._MPI = MPI
        self._comm = comm
        self.rank = comm.Get_rank()
        self.size = comm.Get_size()

    def split(self, color):
        return MPIComm(self._comm.Split(int(color), self.rank))

    def alltoall(self, send, recv):
        self._check_alltoall(send, recv, self.size)
        self._comm.Alltoall(send, recv)
        return recv

    def _op(self, op):
        _OPS[op]
        return {"sum": self._MPI.SUM, "max": self._MPI.MAX, "min": self._MPI.MIN}[op]

    def reduce(self, value, op="sum", root=0):
        return self._comm.reduce(value, op=self._op(op), root=root)

    def allreduce(self, value, op="sum"):
        return self._comm.allreduce(value, op=self._op(op))

    def bcast(self, value, root=0):
        return self._comm.bcast(value, root=root)

    def barrier(self):
        self._comm.Barrier()


def mpi_world():
    """``MPIComm`` over ``COMM_WORLD``.  Imports (and initializes) mpi4py."""
    from mpi4py import MPI
    return MPIComm(MPI.COMM_WORLD)
