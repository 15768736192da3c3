"""Round-synchronous propagation engine with an ideal (loss-free) link layer.

Time advances in rounds; a broadcast sent in round t is received by every
neighbor in round t+1.  Each node decides whether to forward exactly once,
on first receipt; among copies arriving in the same round it adopts the
minimum hop (parent = that copy's sender, lowest id on ties), the OR of the
Gossip2 boost flags, and the maximum timeout counter L.  A Gossip3 node
that declined and heard fewer than m copies beyond its first by the end of
round t0 + timeout_rounds broadcasts unconditionally in the next round,
with L incremented.  No node ever broadcasts twice.

Randomness: the per-node forwarding draw comes from child stream `node`
of the execution seed, so a trace is a pure function of
(graph, source, spec, seed) regardless of traversal order.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass
from typing import Iterator, List

import numpy as np

from .protocols import Gossip2, Gossip3, ProtocolSpec, validate_protocol
from .rng import child_seed, unit_uniforms
from .topology import Graph, gather_neighbors

_NO_KEY = np.iinfo(np.int64).max


@dataclass
class ExecutionTrace:
    """Per-node outcome of one simulated propagation."""

    source: int
    protocol: ProtocolSpec
    seed: int
    received: np.ndarray        # bool
    receive_round: np.ndarray   # int32, -1 if never received
    hop: np.ndarray             # int32, hop count of first copy, -1 if none
    parent: np.ndarray          # int32, sender of first copy, -1 if none
    forwarded: np.ndarray       # bool
    timeout_forward: np.ndarray # bool, Gossip3 timeout broadcasts
    L_at_receipt: np.ndarray    # int16, timeout counter on the first copy
    broadcast_count: int

    @property
    def n(self) -> int:
        return self.received.size

    def sent_L(self) -> np.ndarray:
        """L carried by each forwarder's broadcast (timeout forwards add 1)."""
        return (self.L_at_receipt + self.timeout_forward.astype(np.int16))[self.forwarded]

    def same_outcome(self, other: "ExecutionTrace") -> bool:
        """Trace equivalence ignoring the protocol/seed labels."""
        return (
            self.source == other.source
            and self.broadcast_count == other.broadcast_count
            and np.array_equal(self.received, other.received)
            and np.array_equal(self.receive_round, other.receive_round)
            and np.array_equal(self.hop, other.hop)
            and np.array_equal(self.parent, other.parent)
            and np.array_equal(self.forwarded, other.forwarded)
            and np.array_equal(self.timeout_forward, other.timeout_forward)
            and np.array_equal(self.L_at_receipt, other.L_at_receipt)
        )

    def to_csv(self, path_or_file) -> None:
        """One row per node: node,received,round,hop,parent,forwarded,timeout_forward,L."""
        def _write(f):
            f.write("node,received,round,hop,parent,forwarded,timeout_forward,L\n")
            for i in range(self.n):
                f.write(
                    f"{i},{int(self.received[i])},{self.receive_round[i]},{self.hop[i]},"
                    f"{self.parent[i]},{int(self.forwarded[i])},{int(self.timeout_forward[i])},"
                    f"{self.L_at_receipt[i]}\n"
                )

        if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
            with open(path_or_file, "w", newline="\n") as f:
                _write(f)
        else:
            _write(path_or_file)


def run_execution(g: Graph, source: int, spec: ProtocolSpec, seed: int) -> ExecutionTrace:
    """Simulate one propagation of a route request from `source`."""
    validate_protocol(spec)
    if not (0 <= source < g.n):
        raise ValueError(f"source {source} outside graph of size {g.n}")

    n = g.n
    draws = unit_uniforms(seed, np.arange(n, dtype=np.int64))
    deg = g.degrees

    receive_round = np.full(n, -1, dtype=np.int32)
    hop = np.full(n, -1, dtype=np.int32)
    parent = np.full(n, -1, dtype=np.int32)
    forwarded = np.zeros(n, dtype=bool)
    timeout_forward = np.zeros(n, dtype=bool)
    L_first = np.zeros(n, dtype=np.int16)
    boost_first = np.zeros(n, dtype=np.uint8)
    first_key = np.full(n, _NO_KEY, dtype=np.int64)

    out_L = np.zeros(n, dtype=np.int16)
    out_boost = np.zeros(n, dtype=np.uint8)

    is_g2 = isinstance(spec, Gossip2)
    is_g3 = isinstance(spec, Gossip3) and spec.m > 0
    if is_g3:
        copies = np.zeros(n, dtype=np.int32)
    k = spec.k

    sends: dict[int, list[np.ndarray]] = {}
    checks: dict[int, list[np.ndarray]] = {}

    def decide(nodes: np.ndarray, round_: int) -> None:
        # forwarding probability for each new receiver
        if is_g2:
            base = np.where(boost_first[nodes] > 0, spec.p2, spec.p1)
        else:
            base = spec.p
        prob = np.where(hop[nodes] < k, 1.0, base)
        go = draws[nodes] < prob
        fwd = nodes[go]
        if fwd.size:
            forwarded[fwd] = True
            out_L[fwd] = L_first[fwd]
            if is_g2:
                out_boost[fwd] = (deg[fwd] < spec.n_thresh).astype(np.uint8)
            sends.setdefault(round_, []).append(fwd)
        if is_g3:
            declined = nodes[~go]
            if declined.size:
                checks.setdefault(round_ + spec.timeout_rounds, []).append(declined)

    receive_round[source] = 0
    hop[source] = 0
    decide(np.array([source], dtype=np.int64), 0)

    t = 0
    while sends or checks:
        # timeout checks for nodes that first received in round t - timeout_rounds:
        # copies currently reflect everything delivered through round t.
        for cand in checks.pop(t, []):
            extra = copies[cand] - (cand != source)  # the first copy does not count
            late = cand[extra < spec.m]
            if late.size:
                forwarded[late] = True
                timeout_forward[late] = True
                out_L[late] = L_first[late] + 1
                sends.setdefault(t + 1, []).append(late)

        batches = sends.pop(t, [])
        if batches:
            senders = np.concatenate(batches)
            targets, origin = gather_neighbors(g, senders)
            if is_g3:
                np.add.at(copies, targets, 1)
            fresh = receive_round[targets] == -1
            nt = targets[fresh].astype(np.int64)
            if nt.size:
                snd = senders[origin[fresh]]
                key = (hop[snd].astype(np.int64) + 1) * (n + 1) + snd
                np.minimum.at(first_key, nt, key)
                if is_g2:
                    np.maximum.at(boost_first, nt, out_boost[snd])
                if is_g3:
                    np.maximum.at(L_first, nt, out_L[snd])
                newly = np.unique(nt)
                receive_round[newly] = t + 1
                hop[newly] = (first_key[newly] // (n + 1)).astype(np.int32)
                parent[newly] = (first_key[newly] % (n + 1)).astype(np.int32)
                decide(newly, t + 1)
        t += 1

    received = receive_round >= 0
    for arr in (received, receive_round, hop, parent, forwarded, timeout_forward, L_first):
        arr.flags.writeable = False
    return ExecutionTrace(
        source=int(source),
        protocol=spec,
        seed=int(seed),
        received=received,
        receive_round=receive_round,
        hop=hop,
        parent=parent,
        forwarded=forwarded,
        timeout_forward=timeout_forward,
        L_at_receipt=L_first,
        broadcast_count=int(forwarded.sum()),
    )


_POOL_STATE: dict = {}


def _pool_init(g: Graph, source: int, spec: ProtocolSpec) -> None:
    _POOL_STATE["args"] = (g, source, spec)


def _pool_run(seed: int) -> ExecutionTrace:
    g, source, spec = _POOL_STATE["args"]
    return run_execution(g, source, spec, seed)


def iter_batch(
    g: Graph,
    source: int,
    spec: ProtocolSpec,
    runs: int,
    base_seed: int,
    workers: int = 1,
) -> Iterator[ExecutionTrace]:
    """Yield traces for runs 0..runs-1; run i uses seed child(base_seed, i).

    Output is identical for any worker count; with workers > 1 the runs are
    executed by a process pool but still yielded in run order.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    seeds = [child_seed(base_seed, i) for i in range(runs)]
    if workers <= 1:
        for s in seeds:
            yield run_execution(g, source, spec, s)
        return
    ctx = multiprocessing.get_context("fork")
    chunk = max(1, runs // (workers * 8))
    with ctx.Pool(workers, initializer=_pool_init, initargs=(g, source, spec)) as pool:
        yield from pool.imap(_pool_run, seeds, chunksize=chunk)


def run_batch(
    g: Graph,
    source: int,
    spec: ProtocolSpec,
    runs: int,
    base_seed: int,
    workers: int = 1,
) -> List[ExecutionTrace]:
    """Materialized `iter_batch`."""
    return list(iter_batch(g, source, spec, runs, base_seed, workers=workers))
