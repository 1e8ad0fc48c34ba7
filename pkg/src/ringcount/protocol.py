"""Ring protocol: two exponentiation rounds, count extraction, tally orchestration.

Round 1 walks C1 -> C2 -> ... -> CN -> C1, each member raising the
accumulator to its secret e. Round 2 walks C1 -> ... -> CN applying the
d's. The last participant ends up holding x**(2**k) mod n where k is the
number of members in the bucket, recovers k by enumeration, and announces.
"""

import random
from collections import deque
from dataclasses import dataclass, field

from .bigmod import gcd, modpow
from .params import BucketParams, ExponentPair, gen_bucket_params, gen_exponent_pair
from . import transport
from .transport import (BROADCAST, CallLeg, InMemoryNetwork, ProtocolMessage,
                        Transcript, make_leg)

_REDRAW_ATTEMPTS = 10


class ProtocolFault(Exception):
    """Base class for per-bucket protocol failures."""


class CorruptedAccumulatorError(ProtocolFault):
    """Incoming accumulator shares a factor with n."""


class ProtocolOrderError(ProtocolFault):
    """Round 2 reached a participant that never did round 1 for the bucket."""


class TallyMismatchError(ProtocolFault):
    """Final accumulator matches no x**(2**k); someone misbehaved."""


@dataclass
class Accumulator:
    """Running residue for one bucket: x to the product of exponents so far."""

    bucket_id: int
    value: int


@dataclass
class ParticipantState:
    """One ring member's view: secret bits, lazily drawn pairs, phase."""

    index: int
    bits: dict[int, bool]
    rng: random.Random
    params: dict[int, BucketParams] = field(default_factory=dict)
    pairs: dict[int, ExponentPair] = field(default_factory=dict)
    phase: str = "idle"
    counts: dict[int, int] | None = None
    faults: dict[int, str] = field(default_factory=dict)

    def pair_for(self, bucket_params: BucketParams) -> ExponentPair:
        b = bucket_params.bucket_id
        if b not in self.pairs:
            self.pairs[b] = gen_exponent_pair(
                bucket_params.phi, self.bits.get(b, False), self.rng)
        return self.pairs[b]


@dataclass
class TallyResult:
    counts: dict[int, int]
    protocol_calls: int
    announce_calls: int
    faults: dict[int, str] = field(default_factory=dict)


@dataclass
class ProtocolConfig:
    """Knobs the initiator applies when opening a tally."""

    param_mode: str = "random"  # "random" | "fermat"
    bits: int = 64
    announce: str = "calls"  # "calls" | "broadcast"
    paper_faithful: bool = False  # drop the Jacobi +1 base constraint


def round1_step(state: ParticipantState, params: BucketParams,
                incoming: Accumulator, rng: random.Random) -> Accumulator:
    """Apply this participant's e to the round-1 accumulator."""
    if gcd(incoming.value, params.n) != 1:
        raise CorruptedAccumulatorError(
            f"bucket {incoming.bucket_id}: accumulator shares a factor with n")
    for _ in range(_REDRAW_ATTEMPTS):
        pair = state.pair_for(params)
        out = modpow(incoming.value, pair.e, params.n)
        # cannot trigger for coprime input; the check mirrors the protocol text
        if out % params.p != 0 and out % params.q != 0:
            return Accumulator(incoming.bucket_id, out)
        del state.pairs[params.bucket_id]
    raise CorruptedAccumulatorError(
        f"bucket {incoming.bucket_id}: exponentiation kept hitting a factor of n")


def round2_step(state: ParticipantState, params: BucketParams,
                incoming: Accumulator) -> Accumulator:
    """Apply this participant's stored d to the round-2 accumulator."""
    pair = state.pairs.get(incoming.bucket_id)
    if pair is None:
        raise ProtocolOrderError(
            f"bucket {incoming.bucket_id}: round 2 before round 1")
    if gcd(incoming.value, params.n) != 1:
        raise CorruptedAccumulatorError(
            f"bucket {incoming.bucket_id}: accumulator shares a factor with n")
    return Accumulator(incoming.bucket_id, modpow(incoming.value, pair.d, params.n))


def extract_count(params: BucketParams, final: Accumulator) -> int:
    """Unique k in 0..ring_size with x**(2**k) == final (mod n)."""
    for k, power in enumerate(params.square_powers()):
        if power == final.value:
            return k
    raise TallyMismatchError(
        f"bucket {final.bucket_id}: final value matches no x**(2**k)")


class Actor:
    """Drives one ParticipantState leg by leg; transport-agnostic."""

    def __init__(self, state: ParticipantState, ring_size: int, bucket_count: int,
                 config: ProtocolConfig | None = None):
        self.state = state
        self.ring_size = ring_size
        self.bucket_count = bucket_count
        self.config = config or ProtocolConfig()
        self.done = False

    @property
    def _successor(self) -> int:
        return self.state.index % self.ring_size + 1

    def start_leg(self) -> CallLeg:
        """Initiator only: choose all bucket params, apply e1, call the successor."""
        if self.state.index != 1:
            raise ProtocolOrderError("only participant 1 initiates")
        body = []
        for b in range(1, self.bucket_count + 1):
            params = gen_bucket_params(
                self.ring_size, self.config.param_mode, self.config.bits,
                self.state.rng, bucket_id=b,
                require_plus_jacobi=not self.config.paper_faithful)
            self.state.params[b] = params
            try:
                acc = round1_step(self.state, params,
                                  Accumulator(b, params.x), self.state.rng)
            except ProtocolFault as exc:
                self.state.faults[b] = str(exc)
                continue
            body.append(ProtocolMessage(
                transport.R1, b, (params.p, params.q, params.x, acc.value)))
        self.state.phase = "round1-done"
        return make_leg(1, self._successor, self.ring_size, self.bucket_count, body)

    def handle_leg(self, leg: CallLeg) -> list[CallLeg]:
        kinds = {m.kind for m in leg.body()}
        if transport.RESULT in kinds:
            return self._handle_result(leg)
        if transport.R1 in kinds:
            return self._handle_round1(leg)
        if transport.R2 in kinds:
            return self._handle_round2(leg)
        # empty body (every bucket aborted upstream): keep the ring moving
        if self.state.phase == "idle":
            return self._handle_round1(leg)
        if self.state.phase == "round1-done":
            return self._handle_round2(leg)
        return self._handle_result(leg)

    def _handle_round1(self, leg: CallLeg) -> list[CallLeg]:
        i = self.state.index
        body = []
        for msg in leg.body():
            b = msg.bucket_id
            p, q, x, acc = msg.payload
            params = BucketParams.from_primes(b, p, q, x, self.ring_size)
            self.state.params[b] = params
            try:
                out = round1_step(self.state, params, Accumulator(b, acc),
                                  self.state.rng)
            except ProtocolFault as exc:
                self.state.faults[b] = str(exc)
                continue
            if i < self.ring_size:
                body.append(ProtocolMessage(transport.R1, b,
                                            (p, q, x, out.value)))
            else:
                # round-1 return: C1 already knows p, q, x
                body.append(ProtocolMessage(transport.R2, b, (out.value,)))
        self.state.phase = "round1-done"
        receiver = self._successor
        return [make_leg(i, receiver, self.ring_size, self.bucket_count, body)]

    def _handle_round2(self, leg: CallLeg) -> list[CallLeg]:
        i = self.state.index
        outputs: dict[int, int] = {}
        for msg in leg.body():
            b = msg.bucket_id
            params = self.state.params.get(b)
            if params is None:
                self.state.faults[b] = f"bucket {b}: round 2 before round 1"
                continue
            try:
                out = round2_step(self.state, params,
                                  Accumulator(b, msg.payload[0]))
            except ProtocolFault as exc:
                self.state.faults[b] = str(exc)
                continue
            outputs[b] = out.value
        self.state.phase = "round2-done"
        if i < self.ring_size:
            body = [ProtocolMessage(transport.R2, b, (v,))
                    for b, v in sorted(outputs.items())]
            return [make_leg(i, i + 1, self.ring_size, self.bucket_count, body)]
        return self._extract_and_announce(outputs)

    def _extract_and_announce(self, finals: dict[int, int]) -> list[CallLeg]:
        counts: dict[int, int] = {}
        for b in range(1, self.bucket_count + 1):
            if b not in finals:
                self.state.faults.setdefault(b, f"bucket {b}: aborted upstream")
                continue
            try:
                counts[b] = extract_count(self.state.params[b],
                                          Accumulator(b, finals[b]))
            except TallyMismatchError as exc:
                self.state.faults[b] = str(exc)
        self.state.counts = counts
        body = [ProtocolMessage(transport.RESULT, b, (k,))
                for b, k in sorted(counts.items())]
        i = self.state.index
        if self.config.announce == "broadcast":
            legs = [make_leg(i, BROADCAST, self.ring_size, self.bucket_count, body)]
        else:
            legs = [make_leg(i, j, self.ring_size, self.bucket_count, list(body))
                    for j in range(1, self.ring_size + 1) if j != i]
        self.done = True
        return legs

    def _handle_result(self, leg: CallLeg) -> list[CallLeg]:
        self.state.counts = {m.bucket_id: m.payload[0] for m in leg.body()}
        self.done = True
        return []


def run_tally(states: list[ParticipantState], bucket_count: int,
              config: ProtocolConfig | None = None,
              network: InMemoryNetwork | None = None
              ) -> tuple[TallyResult, Transcript]:
    """Execute a full tally in-process over the in-memory transport."""
    if len(states) < 2:
        raise ValueError("need at least 2 participants")
    config = config or ProtocolConfig()
    ring_size = len(states)
    actors = {s.index: Actor(s, ring_size, bucket_count, config) for s in states}
    if sorted(actors) != list(range(1, ring_size + 1)):
        raise ValueError("participant indices must be 1..N")
    network = network or InMemoryNetwork()

    network.send_call(actors[1].start_leg())
    pending: deque[tuple[int, CallLeg]] = deque()
    while True:
        leg = network.next_delivery()
        if leg is not None:
            if leg.receiver == BROADCAST:
                pending.extend((j, leg) for j in sorted(actors)
                               if j != leg.sender)
            else:
                pending.append((leg.receiver, leg))
        if not pending:
            break
        receiver, leg = pending.popleft()
        for out in actors[receiver].handle_leg(leg):
            network.send_call(out)

    extractor = actors[ring_size].state
    transcript = network.transcript
    # the first 2N-1 legs are the protocol proper, the rest announce results
    legs = transcript.legs()
    protocol_calls = min(len(legs), 2 * ring_size - 1)
    announce_calls = len(legs) - protocol_calls
    result = TallyResult(counts=dict(extractor.counts or {}),
                         protocol_calls=protocol_calls,
                         announce_calls=announce_calls,
                         faults=dict(extractor.faults))
    return result, transcript
