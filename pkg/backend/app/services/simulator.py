"""
Simulator Service
Slot-level Monte Carlo of SR-ARQ, HARQ, block network coding, the
block-ACK hijack scheme and multi-stream coding.

Timing, shared by every scheme:
- a transmission occupying slots [t, t + len) is acknowledged at
  t + len - 1 + rtt; a TB is one slot, a coded packet tau slots
- all processes (or block lanes) are free at slot 0 and the source is
  saturated; a freed process immediately takes the next packet

Erasures are drawn from one seeded PCG64 stream per run in dispatch order:
packet by packet (block by block), attempt by attempt.
"""
import heapq
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np

from app.schemas.analytic import TimingParams
from app.schemas.channel import BlerTable
from app.schemas.simulation import Release, Scheme, ServiceRecord, SimConfig, SimResult, SummaryStats
from app.services import reports
from app.services.channel import UniformStream, bler_lookup, harq_failure_curve, sample_erasure

logger = logging.getLogger(__name__)

RECORD_HEADER = ["packet_id", "first_tx_slot", "completion_slot", "attempts"]
TAIL_QUANTILE = 0.99


class SimulationError(Exception):
    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)


@dataclass
class _Trace:
    """Column buffers filled by an engine"""
    packet_id: List[int] = field(default_factory=list)
    first_tx_slot: List[int] = field(default_factory=list)
    completion_slot: List[int] = field(default_factory=list)
    attempts: List[int] = field(default_factory=list)
    failed: List[int] = field(default_factory=list)
    last_slot: int = 0

    def complete(self, packet: int, first: int, done: int, attempts: int) -> None:
        self.packet_id.append(packet)
        self.first_tx_slot.append(first)
        self.completion_slot.append(done)
        self.attempts.append(attempts)


# =============================================================================
# STATISTICS
# =============================================================================

def percentile(records: Union[Sequence[ServiceRecord], Sequence[float], np.ndarray], q: float) -> float:
    """Nearest rank: the ceil(q*n)-th smallest service time"""
    if not 0.0 < q <= 1.0:
        raise SimulationError(f"Quantile must be in (0, 1], got {q}")
    if isinstance(records, np.ndarray):
        values = records
    else:
        values = np.array([
            r.service_slots if isinstance(r, ServiceRecord) else r for r in records
        ])
    if values.size == 0:
        raise SimulationError("Percentile of an empty record set")
    rank = max(1, math.ceil(q * values.size - 1e-9))
    return float(np.partition(values, rank - 1)[rank - 1])


def summarize(service_slots: np.ndarray, failed: int, total_slots: int) -> SummaryStats:
    completed = int(service_slots.size)
    if completed:
        mean = float(np.mean(service_slots))
        p99 = percentile(service_slots, TAIL_QUANTILE)
        std_error = float(np.std(service_slots, ddof=1) / math.sqrt(completed)) if completed > 1 else 0.0
    else:
        mean = p99 = float("nan")
        std_error = 0.0
    throughput = completed / total_slots if total_slots else 0.0
    return SummaryStats(
        mean_service_slots=mean,
        p99_service_slots=p99,
        std_error_slots=std_error,
        throughput_packets_per_slot=throughput,
        completed=completed,
        failed=failed,
        total_slots=total_slots,
    )


def _to_result(config: SimConfig, trace: _Trace) -> SimResult:
    first = np.asarray(trace.first_tx_slot, dtype=np.int64)
    done = np.asarray(trace.completion_slot, dtype=np.int64)
    stats = summarize(done - first, len(trace.failed), trace.last_slot)
    if stats.completed + stats.failed != config.num_packets:
        raise SimulationError(
            f"Packet accounting mismatch: {stats.completed} completed + "
            f"{stats.failed} failed != {config.num_packets} injected"
        )
    logger.info(
        "%s: %d packets, mean %.3f slots, p99 %.1f slots, throughput %.4f/slot, %d failed",
        config.scheme.value, config.num_packets, stats.mean_service_slots,
        stats.p99_service_slots, stats.throughput_packets_per_slot, stats.failed,
    )
    return SimResult(
        config=config,
        packet_id=np.asarray(trace.packet_id, dtype=np.int64),
        first_tx_slot=first,
        completion_slot=done,
        attempts=np.asarray(trace.attempts, dtype=np.int64),
        failed_packet_ids=trace.failed,
        stats=stats,
    )


def _check_scheme(config: SimConfig, expected: Scheme) -> None:
    if config.scheme != expected:
        raise SimulationError(
            f"Config scheme {config.scheme.value} cannot run on the {expected.value} engine"
        )
    if config.unlocked:
        logger.warning(
            "Process cap lifted: running %s with %d processes",
            config.scheme.value, config.num_harq_processes,
        )


def _first_attempt_bler(config: SimConfig, table: BlerTable) -> float:
    p = bler_lookup(table, config.mcs, config.snr_db)
    logger.debug("mcs=%d snr=%s dB -> first-attempt BLER %.6g", config.mcs, config.snr_db, p)
    return p


def _attempt_curve(config: SimConfig, table: BlerTable) -> List[float]:
    curve = harq_failure_curve(table, config.mcs, config.snr_db, config.max_retx + 1)
    logger.debug("mcs=%d snr=%s dB -> attempt BLERs %s", config.mcs, config.snr_db, curve[:4])
    return curve.tolist()


def _idle_lanes(heap: List[Tuple[int, int]], slot: int) -> int:
    # heap order: a subtree whose root is busy past `slot` holds no idle lane
    count = 0
    stack = [0] if heap else []
    while stack:
        i = stack.pop()
        if heap[i][0] <= slot:
            count += 1
            stack.extend(c for c in (2 * i + 1, 2 * i + 2) if c < len(heap))
    return count


def check_process_cap(heap: List[Tuple[int, int]], slot: int, width: int, cap: int) -> int:
    """
    HARQ processes busy once a lane of `width` processes is dispatched at
    `slot`, the other lanes being (busy_until, lane) entries of `heap`.
    Raises SimulationError above `cap`.
    """
    active = width * (1 + len(heap) - _idle_lanes(heap, slot))
    if active > cap:
        raise SimulationError(f"{active} HARQ processes busy at slot {slot}, cap is {cap}")
    return active


# =============================================================================
# PER-TB ENGINE (SR-ARQ / HARQ)
# =============================================================================

def _run_per_tb(config: SimConfig, fail_probs: List[float]) -> _Trace:
    """
    Each HARQ process serves one TB at a time: attempt a fails with
    fail_probs[a-1], every attempt costs one RTT.
    """
    processes = config.num_harq_processes
    rtt = config.rtt_slots
    stream = UniformStream(np.random.default_rng(config.seed))
    trace = _Trace()

    free = [(0, proc) for proc in range(processes)]
    heapq.heapify(free)
    for packet in range(config.num_packets):
        slot, proc = heapq.heappop(free)
        check_process_cap(free, slot, 1, processes)
        used = 0
        delivered = False
        for p in fail_probs:
            used += 1
            if not sample_erasure(stream, p):
                delivered = True
                break
        done = slot + used * rtt
        if delivered:
            trace.complete(packet, slot, done, used)
        else:
            trace.failed.append(packet)
        if done > trace.last_slot:
            trace.last_slot = done
        heapq.heappush(free, (done, proc))
    return trace


def run_sr_arq(config: SimConfig, channel: BlerTable) -> SimResult:
    """Same erasure probability on every attempt"""
    _check_scheme(config, Scheme.SR_ARQ)
    p = _first_attempt_bler(config, channel)
    return _to_result(config, _run_per_tb(config, [p] * (config.max_retx + 1)))


def run_harq(config: SimConfig, channel: BlerTable) -> SimResult:
    """Attempt n fails with the BLER at n times the linear SNR"""
    _check_scheme(config, Scheme.HARQ)
    return _to_result(config, _run_per_tb(config, _attempt_curve(config, channel)))


# =============================================================================
# BLOCK ENGINE (NC block / hijack)
# =============================================================================

def _run_blocks(
    config: SimConfig, fail_probs: List[float], lanes: int, width: int, num_packets: int, seed: int
) -> _Trace:
    """
    Blocks of K originals sent as N coded packets, systematic part first,
    one every tau slots. Each lane (width HARQ processes) carries one block
    at a time. After feedback the sender repeats exactly the missing
    degrees of freedom as HARQ retransmissions of the erased packets, so
    repair round r fails with fail_probs[r]; at most max_retx rounds.

    Release.SYSTEMATIC: an intact original completes on its own feedback,
    an erased one on the feedback of the packet carrying the K-th degree
    of freedom.
    Release.BLOCK: a lossless block completes packet by packet; with i
    erasures every original waits, for K + i coded packets when i <= N-K,
    else for the repair that completes the block.
    """
    code = config.code
    rtt = config.rtt_slots
    tau = config.tau_slots
    block_release = config.release == Release.BLOCK
    last_prob = len(fail_probs) - 1
    stream = UniformStream(np.random.default_rng(seed))
    trace = _Trace()

    free = [(0, lane) for lane in range(lanes)]
    heapq.heapify(free)
    next_packet = 0
    while next_packet < num_packets:
        start, lane = heapq.heappop(free)
        check_process_cap(free, start, width, config.num_harq_processes)
        k_eff = min(code.k, num_packets - next_packet)
        n_eff = k_eff + code.redundancy

        intact = [not sample_erasure(stream, fail_probs[0]) for _ in range(n_eff)]
        erased = n_eff - sum(intact)
        received = 0
        decoded = -1
        for c, ok in enumerate(intact):
            received += ok
            if ok and received == k_eff:
                decoded = start + (c + 1) * tau - 1 + rtt
                break
        received = n_eff - erased
        feedback = start + n_eff * tau - 1 + rtt

        rounds = 0
        while received < k_eff and rounds < config.max_retx:
            rounds += 1
            missing = k_eff - received
            p = fail_probs[min(rounds, last_prob)]
            for _ in range(missing):
                if not sample_erasure(stream, p):
                    received += 1
            feedback += missing * tau - 1 + rtt
            if received >= k_eff:
                decoded = feedback

        for j in range(k_eff):
            packet = next_packet + j
            first = start + j * tau
            if erased == 0:
                trace.complete(packet, first, first + tau - 1 + rtt, 1)
            elif block_release:
                if decoded < 0:
                    trace.failed.append(packet)
                elif erased <= code.redundancy:
                    trace.complete(packet, first, start + (k_eff + erased) * tau - 1 + rtt, 1)
                else:
                    trace.complete(packet, first, decoded, 1 + rounds)
            elif intact[j]:
                trace.complete(packet, first, first + tau - 1 + rtt, 1)
            elif decoded < 0:
                trace.failed.append(packet)
            else:
                trace.complete(packet, first, decoded, 1 + rounds)
        if feedback > trace.last_slot:
            trace.last_slot = feedback

        next_packet += k_eff
        heapq.heappush(free, (feedback, lane))
    return trace


def run_nc_block(config: SimConfig, channel: BlerTable) -> SimResult:
    """One coded packet per HARQ process; a block holds N processes"""
    _check_scheme(config, Scheme.NC_BLOCK)
    lanes = config.num_harq_processes // config.code.n
    if lanes < 1:
        raise SimulationError(
            f"Block of n={config.code.n} packets needs more than "
            f"{config.num_harq_processes} HARQ processes"
        )
    trace = _run_blocks(
        config, _attempt_curve(config, channel), lanes, config.code.n, config.num_packets, config.seed
    )
    return _to_result(config, trace)


def run_nc_hijack(config: SimConfig, channel: BlerTable) -> SimResult:
    """Each HARQ process carries a whole coded block with one block ACK"""
    _check_scheme(config, Scheme.NC_HIJACK)
    trace = _run_blocks(
        config, _attempt_curve(config, channel), config.num_harq_processes, 1,
        config.num_packets, config.seed,
    )
    return _to_result(config, trace)


def closed_form_timing(config: SimConfig) -> TimingParams:
    """
    TimingParams under which the block closed form describes this config.
    The closed form adds the packet air time to its RTT, while rtt_slots
    already spans a packet's last slot.
    """
    if config.rtt_slots < 2:
        raise SimulationError(f"rtt_slots must be >= 2 to map onto a closed form, got {config.rtt_slots}")
    return TimingParams(rtt=float(config.rtt_slots - 1), tau=float(config.tau_slots))


# =============================================================================
# MULTI-STREAM
# =============================================================================

def derive_stream_seed(seed: int, index: int) -> int:
    """Child seed of stream `index`, a SeedSequence hash of (seed, index)"""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def run_nc_multistream(config: SimConfig, channel: BlerTable) -> SimResult:
    """
    Packet i goes to stream i mod S; each stream is an independent hijack
    instance with its own processes and derived seed.
    """
    _check_scheme(config, Scheme.NC_MULTISTREAM)
    streams = config.num_streams
    fail_probs = _attempt_curve(config, channel)

    merged = _Trace()
    for s in range(streams):
        local_packets = len(range(s, config.num_packets, streams))
        if local_packets == 0:
            continue
        trace = _run_blocks(
            config, fail_probs, config.num_harq_processes, 1, local_packets,
            derive_stream_seed(config.seed, s),
        )
        merged.packet_id.extend(local * streams + s for local in trace.packet_id)
        merged.first_tx_slot.extend(trace.first_tx_slot)
        merged.completion_slot.extend(trace.completion_slot)
        merged.attempts.extend(trace.attempts)
        merged.failed.extend(local * streams + s for local in trace.failed)
        merged.last_slot = max(merged.last_slot, trace.last_slot)
        logger.debug("Stream %d: %d packets, last feedback at slot %d", s, local_packets, trace.last_slot)

    order = np.argsort(np.asarray(merged.packet_id, dtype=np.int64), kind="stable")
    for name in ("packet_id", "first_tx_slot", "completion_slot", "attempts"):
        column = getattr(merged, name)
        setattr(merged, name, [column[i] for i in order])
    merged.failed.sort()
    return _to_result(config, merged)


# =============================================================================
# DISPATCH & OUTPUT
# =============================================================================

ENGINES: Dict[Scheme, Callable[[SimConfig, BlerTable], SimResult]] = {
    Scheme.SR_ARQ: run_sr_arq,
    Scheme.HARQ: run_harq,
    Scheme.NC_BLOCK: run_nc_block,
    Scheme.NC_HIJACK: run_nc_hijack,
    Scheme.NC_MULTISTREAM: run_nc_multistream,
}


def run(config: SimConfig, channel: BlerTable) -> SimResult:
    logger.debug("Running %s", config.model_dump_json())
    return ENGINES[config.scheme](config, channel)


def write_records_csv(result: SimResult, path: Union[str, Path]) -> Path:
    rows = zip(
        result.packet_id.tolist(),
        result.first_tx_slot.tolist(),
        result.completion_slot.tolist(),
        result.attempts.tolist(),
    )
    return reports.write_csv(Path(path), RECORD_HEADER, rows)
