"""Message delivery and the public transcript.

One "phone call" is a CallLeg: a HELLO line, one line per bucket, and a
BYE line. Legs travel either over an in-memory FIFO (simulation) or a
one-connection-per-leg TCP channel (node mode); both append to a
transcript that is deliberately world-readable.
"""

import re
import socket
import time
from collections import deque
from dataclasses import dataclass, field

HELLO = "HELLO"
R1 = "R1"
R2 = "R2"
RESULT = "RESULT"
BYE = "BYE"

#: payload arity per message kind
_ARITY = {HELLO: 3, R1: 4, R2: 1, RESULT: 1, BYE: 0}
_BUCKETED = {R1, R2, RESULT}

#: receiver index meaning "everyone else" (conference-call announcement)
BROADCAST = 0

_DECIMAL = re.compile(r"^(0|[1-9][0-9]*)$")


class MalformedLineError(ValueError):
    """A wire line failed strict parsing; .offset is the byte offset of the fault."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class TransportFault(Exception):
    """Connection-level delivery failure."""


class TimeoutFault(TransportFault):
    """No acknowledgment within the leg timeout."""


@dataclass(frozen=True)
class ProtocolMessage:
    """One line of a call: kind, bucket (for R1/R2/RESULT) and numeric payload."""

    kind: str
    bucket_id: int | None
    payload: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown message kind {self.kind!r}")
        if len(self.payload) != _ARITY[self.kind]:
            raise ValueError(
                f"{self.kind} wants {_ARITY[self.kind]} payload numbers, got {len(self.payload)}")
        if (self.bucket_id is not None) != (self.kind in _BUCKETED):
            raise ValueError(f"bucket_id presence wrong for {self.kind}")
        if any(v < 0 for v in self.payload):
            raise ValueError("payload numbers must be nonnegative")


def hello(sender: int, ring_size: int, bucket_count: int) -> ProtocolMessage:
    return ProtocolMessage(HELLO, None, (sender, ring_size, bucket_count))


def bye() -> ProtocolMessage:
    return ProtocolMessage(BYE, None, ())


def encode(message: ProtocolMessage) -> str:
    """One ASCII line, LF-terminated, decimal fields."""
    parts = [message.kind]
    if message.bucket_id is not None:
        parts.append(str(message.bucket_id))
    parts.extend(str(v) for v in message.payload)
    return " ".join(parts) + "\n"


def decode(line: str) -> ProtocolMessage:
    """Strict inverse of encode; rejects unknown kinds, wrong arity,
    non-decimal tokens and leading zeros."""
    raw = line[:-1] if line.endswith("\n") else line
    tokens: list[tuple[int, str]] = []
    offset = 0
    for tok in raw.split(" "):
        tokens.append((offset, tok))
        offset += len(tok) + 1
    off0, kind = tokens[0]
    if kind not in _ARITY:
        raise MalformedLineError(f"unknown message kind {kind!r}", off0)
    numbers = []
    for off, tok in tokens[1:]:
        if not _DECIMAL.match(tok):
            raise MalformedLineError(f"bad decimal token {tok!r}", off)
        numbers.append(int(tok))
    bucketed = kind in _BUCKETED
    expected = _ARITY[kind] + (1 if bucketed else 0)
    if len(numbers) != expected:
        raise MalformedLineError(
            f"{kind} expects {expected} numbers, got {len(numbers)}",
            tokens[-1][0] if len(tokens) > 1 else off0)
    bucket = numbers[0] if bucketed else None
    payload = tuple(numbers[1:]) if bucketed else tuple(numbers)
    return ProtocolMessage(kind, bucket, payload)


@dataclass(frozen=True)
class CallLeg:
    """All bucket lines for one ring hop, HELLO-first, BYE-last."""

    sender: int
    receiver: int
    messages: tuple[ProtocolMessage, ...]

    def validate(self) -> None:
        if len(self.messages) < 2:
            raise ValueError("a leg needs at least HELLO and BYE")
        if self.messages[0].kind != HELLO or self.messages[-1].kind != BYE:
            raise ValueError("leg must open with HELLO and close with BYE")
        if self.messages[0].payload[0] != self.sender:
            raise ValueError("HELLO sender does not match leg sender")
        buckets = [m.bucket_id for m in self.messages[1:-1]]
        if any(b is None for b in buckets):
            raise ValueError("leg body must consist of bucketed lines")
        if any(a >= b for a, b in zip(buckets, buckets[1:])):
            raise ValueError("bucket ids must be strictly ascending")

    def body(self) -> tuple[ProtocolMessage, ...]:
        return self.messages[1:-1]


def make_leg(sender: int, receiver: int, ring_size: int, bucket_count: int,
             body: list[ProtocolMessage]) -> CallLeg:
    leg = CallLeg(sender, receiver,
                  (hello(sender, ring_size, bucket_count), *body, bye()))
    leg.validate()
    return leg


@dataclass(frozen=True)
class TranscriptEntry:
    seq: int
    sender: int
    receiver: int
    message: ProtocolMessage


@dataclass
class Transcript:
    """Ordered public log of every message of every call leg."""

    entries: list[TranscriptEntry] = field(default_factory=list)

    def append_leg(self, leg: CallLeg) -> None:
        # one leg is appended atomically; seq keeps increasing across legs
        seq = self.entries[-1].seq if self.entries else 0
        for m in leg.messages:
            seq += 1
            self.entries.append(TranscriptEntry(seq, leg.sender, leg.receiver, m))

    def legs(self) -> list[CallLeg]:
        """Regroup entries into the call legs they were appended as."""
        out: list[CallLeg] = []
        current: list[ProtocolMessage] = []
        endpoints: tuple[int, int] | None = None
        for entry in self.entries:
            if entry.message.kind == HELLO:
                if current:
                    raise ValueError(f"HELLO inside an open leg at seq {entry.seq}")
                endpoints = (entry.sender, entry.receiver)
            if endpoints is None or (entry.sender, entry.receiver) != endpoints:
                raise ValueError(f"leg interleaving at seq {entry.seq}")
            current.append(entry.message)
            if entry.message.kind == BYE:
                out.append(CallLeg(endpoints[0], endpoints[1], tuple(current)))
                current = []
                endpoints = None
        if current:
            raise ValueError("transcript ends inside an open leg")
        return out

    def persist(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            for entry in self.entries:
                fh.write(f"{entry.seq} {entry.sender} {entry.receiver} "
                         f"{encode(entry.message)}")


def load_transcript(path) -> Transcript:
    transcript = Transcript()
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ", 3)
            if len(parts) != 4:
                raise MalformedLineError(f"line {lineno}: expected 4 fields")
            head_off = 0
            for tok in parts[:3]:
                if not _DECIMAL.match(tok):
                    raise MalformedLineError(
                        f"line {lineno}: bad integer field {tok!r}", head_off)
                head_off += len(tok) + 1
            seq, sender, receiver = (int(t) for t in parts[:3])
            try:
                message = decode(parts[3])
            except MalformedLineError as exc:
                raise MalformedLineError(f"line {lineno}: {exc}", exc.offset) from exc
            if transcript.entries and seq <= transcript.entries[-1].seq:
                raise MalformedLineError(f"line {lineno}: seq not increasing")
            transcript.entries.append(TranscriptEntry(seq, sender, receiver, message))
    return transcript


class InMemoryNetwork:
    """FIFO leg delivery inside one process, recording to a shared transcript."""

    def __init__(self, transcript: Transcript | None = None):
        self.transcript = transcript if transcript is not None else Transcript()
        self._queue: deque[CallLeg] = deque()

    def send_call(self, leg: CallLeg) -> None:
        leg.validate()
        self.transcript.append_leg(leg)
        self._queue.append(leg)

    def next_delivery(self) -> CallLeg | None:
        return self._queue.popleft() if self._queue else None


def parse_roster(path) -> dict[int, tuple[str, int]]:
    """Roster file: one line per participant, `<index> <host:port>`."""
    roster: dict[int, tuple[str, int]] = {}
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                idx_s, addr = line.split()
                host, port_s = addr.rsplit(":", 1)
                roster[int(idx_s)] = (host, int(port_s))
            except ValueError as exc:
                raise ValueError(f"roster line {lineno}: {line!r}") from exc
    return roster


class TcpChannel:
    """Client side of the wire protocol: one connection per leg, then one OK."""

    def __init__(self, roster: dict[int, tuple[str, int]], timeout: float = 30.0,
                 connect_retries: int = 40, retry_delay: float = 0.25,
                 transcript: Transcript | None = None):
        self.roster = roster
        self.timeout = timeout
        self.connect_retries = connect_retries
        self.retry_delay = retry_delay
        self.transcript = transcript

    def send_call(self, leg: CallLeg) -> None:
        leg.validate()
        if leg.receiver == BROADCAST:
            receivers = [i for i in sorted(self.roster) if i != leg.sender]
        else:
            receivers = [leg.receiver]
        for receiver in receivers:
            self._send_one(leg, receiver)
        if self.transcript is not None:
            self.transcript.append_leg(leg)

    def _send_one(self, leg: CallLeg, receiver: int) -> None:
        try:
            host, port = self.roster[receiver]
        except KeyError:
            raise TransportFault(f"no roster entry for participant {receiver}")
        payload = "".join(encode(m) for m in leg.messages).encode("ascii")
        last_err: Exception | None = None
        for attempt in range(1 + self.connect_retries):
            try:
                with socket.create_connection((host, port), timeout=self.timeout) as sock:
                    sock.sendall(payload)
                    ack = _read_line(sock, self.timeout)
                    if ack != "OK":
                        raise TransportFault(f"bad acknowledgment {ack!r} from {receiver}")
                    return
            except socket.timeout as exc:
                raise TimeoutFault(f"no OK from participant {receiver} "
                                   f"within {self.timeout}s") from exc
            except OSError as exc:
                last_err = exc
                if attempt < self.connect_retries:
                    time.sleep(self.retry_delay)
        raise TransportFault(f"cannot reach participant {receiver} "
                             f"at {host}:{port}: {last_err}")


def _read_line(sock: socket.socket, timeout: float) -> str:
    sock.settimeout(timeout)
    chunks = bytearray()
    while True:
        b = sock.recv(1)
        if not b:
            raise TransportFault("connection closed before line end")
        if b == b"\n":
            return chunks.decode("ascii")
        chunks.extend(b)


def receive_leg(conn: socket.socket, receiver: int, timeout: float = 30.0) -> CallLeg:
    """Read one leg from an accepted connection and acknowledge it."""
    messages: list[ProtocolMessage] = []
    while True:
        line = _read_line(conn, timeout)
        messages.append(decode(line + "\n"))
        if messages[-1].kind == BYE:
            break
    if not messages or messages[0].kind != HELLO:
        raise MalformedLineError("leg does not open with HELLO")
    leg = CallLeg(messages[0].payload[0], receiver, tuple(messages))
    leg.validate()
    conn.sendall(b"OK\n")
    return leg
