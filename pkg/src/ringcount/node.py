"""One networked ring participant: the protocol actor over TCP.

Every participant runs one process. Participant 1 initiates; the last
participant extracts the counts and announces them. Each node records
the legs it sends into its own transcript (the union over all nodes is
the full public record).
"""

import socket

from .protocol import Actor
from .scenario import ScenarioConfig
from .transport import TcpChannel, Transcript, receive_leg


def run_node(roster: dict[int, tuple[str, int]], index: int, cfg: ScenarioConfig,
             paper_faithful: bool = False, timeout: float = 30.0,
             connect_retries: int = 40, retry_delay: float = 0.25,
             transcript: Transcript | None = None) -> dict[int, int]:
    """Participate in the ring; returns the announced (or extracted) counts."""
    if index not in roster:
        raise ValueError(f"index {index} not in roster")
    if sorted(roster) != list(range(1, cfg.ring_size + 1)):
        raise ValueError("roster must cover participants 1..N")

    states = {s.index: s for s in cfg.build_states()}
    actor = Actor(states[index], cfg.ring_size, cfg.bucket_count,
                  cfg.protocol_config(paper_faithful))
    channel = TcpChannel(roster, timeout=timeout, connect_retries=connect_retries,
                         retry_delay=retry_delay, transcript=transcript)

    host, port = roster[index]
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        server.bind((host, port))
        server.listen(4)
        server.settimeout(timeout)

        if index == 1:
            channel.send_call(actor.start_leg())

        while not actor.done:
            try:
                conn, _ = server.accept()
            except socket.timeout:
                raise TimeoutError(f"participant {index}: no incoming call "
                                   f"within {timeout}s")
            with conn:
                leg = receive_leg(conn, index, timeout)
            for out in actor.handle_leg(leg):
                channel.send_call(out)
    finally:
        server.close()

    # in broadcast announcement the extractor's RESULT leg fans out via
    # the channel (receiver BROADCAST covers everyone), nothing else to do
    return dict(actor.state.counts or {})
