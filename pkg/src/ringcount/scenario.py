"""Scenario configuration: who participates, with what secrets, which knobs.

File format:
    line 1:  N=<n> B=<b> seed=<s> mode=<m> params=<fermat|random> bits=<k> announce=<calls|broadcast>
    then N lines:  <index> <value-or-bitstring>

In centimillionaire mode the value is the participant's wealth bucket
(1..B); in generic mode it is a B-character bitstring of memberships.
"""

import random
from dataclasses import dataclass, field

from .protocol import ParticipantState, ProtocolConfig


class ConfigError(ValueError):
    """Scenario file is malformed or inconsistent."""


_HEADER_DEFAULTS = {
    "mode": "centimillionaire",
    "params": "random",
    "bits": "64",
    "announce": "calls",
}


def derive_rng(seed: int, *labels) -> random.Random:
    """Deterministic named substream of the scenario seed."""
    return random.Random("|".join([str(seed), *map(str, labels)]))


@dataclass
class ScenarioConfig:
    ring_size: int
    bucket_count: int
    seed: int
    mode: str = "centimillionaire"
    param_mode: str = "random"
    bits: int = 64
    announce: str = "calls"
    values: list = field(default_factory=list)  # index i-1 -> int or bitstring

    def __post_init__(self):
        if self.ring_size < 2:
            raise ConfigError("N must be >= 2")
        if self.bucket_count < 1:
            raise ConfigError("B must be >= 1")
        if self.mode not in ("centimillionaire", "generic"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.param_mode not in ("fermat", "random"):
            raise ConfigError(f"unknown params {self.param_mode!r}")
        if self.announce not in ("calls", "broadcast"):
            raise ConfigError(f"unknown announce {self.announce!r}")
        if len(self.values) != self.ring_size:
            raise ConfigError(
                f"expected {self.ring_size} value lines, got {len(self.values)}")
        for i, v in enumerate(self.values, start=1):
            if self.mode == "centimillionaire":
                if not isinstance(v, int) or not 1 <= v <= self.bucket_count:
                    raise ConfigError(f"participant {i}: value {v!r} outside 1..B")
            else:
                if (not isinstance(v, str) or len(v) != self.bucket_count
                        or set(v) - {"0", "1"}):
                    raise ConfigError(
                        f"participant {i}: need a {self.bucket_count}-bit string")

    def member_bits(self, index: int) -> dict[int, bool]:
        v = self.values[index - 1]
        if self.mode == "centimillionaire":
            return {v: True}
        return {b: v[b - 1] == "1" for b in range(1, self.bucket_count + 1)}

    def build_states(self) -> list[ParticipantState]:
        return [
            ParticipantState(index=i, bits=self.member_bits(i),
                             rng=derive_rng(self.seed, "party", i))
            for i in range(1, self.ring_size + 1)
        ]

    def protocol_config(self, paper_faithful: bool = False) -> ProtocolConfig:
        return ProtocolConfig(param_mode=self.param_mode, bits=self.bits,
                              announce=self.announce,
                              paper_faithful=paper_faithful)

    def dump(self) -> str:
        lines = [
            f"N={self.ring_size} B={self.bucket_count} seed={self.seed} "
            f"mode={self.mode} params={self.param_mode} bits={self.bits} "
            f"announce={self.announce}"
        ]
        lines.extend(f"{i} {v}" for i, v in enumerate(self.values, start=1))
        return "\n".join(lines) + "\n"


def parse_config(text: str) -> ScenarioConfig:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigError("empty config")
    header: dict[str, str] = dict(_HEADER_DEFAULTS)
    for token in lines[0].split():
        if "=" not in token:
            raise ConfigError(f"bad header token {token!r}")
        key, _, value = token.partition("=")
        header[key] = value
    try:
        ring_size = int(header["N"])
        bucket_count = int(header["B"])
        seed = int(header["seed"])
        bits = int(header["bits"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"header needs integer N=, B=, seed=: {exc}") from exc

    mode = header["mode"]
    raw_values: dict[int, str] = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ConfigError(f"bad value line {ln!r}")
        try:
            raw_values[int(parts[0])] = parts[1]
        except ValueError as exc:
            raise ConfigError(f"bad index in line {ln!r}") from exc
    if sorted(raw_values) != list(range(1, ring_size + 1)):
        raise ConfigError("value lines must cover indices 1..N exactly once")
    values: list = []
    for i in range(1, ring_size + 1):
        raw = raw_values[i]
        if mode == "centimillionaire":
            try:
                values.append(int(raw))
            except ValueError as exc:
                raise ConfigError(f"participant {i}: bad bucket {raw!r}") from exc
        else:
            values.append(raw)
    return ScenarioConfig(ring_size=ring_size, bucket_count=bucket_count,
                          seed=seed, mode=mode, param_mode=header["params"],
                          bits=bits, announce=header["announce"], values=values)


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="ascii") as fh:
        return parse_config(fh.read())
