"""Acceptance suite: one test per criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines.
"""

import math
import random
import re
import socket
import subprocess
import sys
import time

import pytest

from ringcount.analysis import collusion_attack, oracle_count
from ringcount.bigmod import gcd, modpow
from ringcount.params import gen_bucket_params, gen_exponent_pair
from ringcount.protocol import Accumulator, extract_count, run_tally
from ringcount.scenario import ScenarioConfig
from ringcount.transport import R1, RESULT, decode, encode, load_transcript


def report(name):
    print(f"\nACCEPTANCE PASS: {name}")


def centi_config(values, buckets, seed, **kw):
    return ScenarioConfig(ring_size=len(values), bucket_count=buckets,
                          seed=seed, values=values, **kw)


@pytest.fixture(scope="module")
def full_run():
    """One paper-scale run: N=20, B=100, 64-bit random-mode parameters."""
    rng = random.Random(2000)
    values = [rng.randrange(1, 101) for _ in range(20)]
    cfg = centi_config(values, 100, seed=58)
    states = cfg.build_states()
    start = time.perf_counter()
    result, transcript = run_tally(states, 100, cfg.protocol_config())
    elapsed = time.perf_counter() - start
    return cfg, states, result, transcript, elapsed


class TestCriterion1CallAccounting:
    def test_39_protocol_and_58_total_calls(self, full_run):
        cfg, _, result, transcript, elapsed = full_run
        legs = transcript.legs()
        protocol_legs = [leg for leg in legs
                         if not any(m.kind == RESULT for m in leg.body())]
        assert len(protocol_legs) == 39
        assert result.protocol_calls == 39
        assert result.announce_calls == 19
        assert len(legs) == 58
        assert elapsed < 10.0, f"run took {elapsed:.1f}s"
        report(f"1 call accounting: 39 protocol + 19 announce = 58 legs "
               f"in {elapsed:.2f}s")


class TestCriterion2FirstCallPayload:
    def test_400_numbers_over_100_lines(self, full_run):
        _, _, _, transcript, _ = full_run
        first = transcript.legs()[0]
        assert (first.sender, first.receiver) == (1, 2)
        body = first.body()
        assert len(body) == 100
        assert all(m.kind == R1 for m in body)
        assert sum(len(m.payload) for m in body) == 400
        report("2 first call carries 100 R1 lines = 400 payload numbers")


class TestCriterion3OracleEquivalence:
    def test_500_seeded_scenarios(self):
        rng = random.Random(500)
        for case in range(500):
            n = rng.randrange(2, 9)
            b = rng.randrange(1, 7)
            mode = "fermat" if case % 2 else "random"
            values = [rng.randrange(1, b + 1) for _ in range(n)]
            cfg = centi_config(values, b, seed=case, param_mode=mode)
            result, _ = run_tally(cfg.build_states(), b, cfg.protocol_config())
            assert not result.faults, (case, result.faults)
            expected = {bb: oracle_count(values, bb) for bb in range(1, b + 1)}
            assert result.counts == expected, case
        report("3a oracle equivalence over 500 seeded scenarios, both modes")

    def test_full_scale_run(self, full_run):
        cfg, _, result, _, _ = full_run
        expected = {b: oracle_count(cfg.values, b) for b in range(1, 101)}
        assert result.counts == expected
        assert sum(result.counts.values()) == 20
        report("3b oracle equivalence on the full N=20, B=100 run")


class TestCriterion4ExtractionInverse:
    def test_exhaustive_over_generated_params(self):
        rng = random.Random(4)
        configs = [(4, "fermat", 64), (8, "fermat", 64),
                   (6, "random", 32), (20, "random", 64)]
        for ring_size, mode, bits in configs:
            params = gen_bucket_params(ring_size, mode, bits, rng)
            for k in range(ring_size + 1):
                final = Accumulator(0, modpow(params.x, 1 << k, params.n))
                assert extract_count(params, final) == k
        report("4 extraction inverts x**(2**k) for every k, all param modes")


class TestCriterion5PairIdentity:
    def test_lift_equals_w_power(self):
        rng = random.Random(5)
        for mode, bits in (("fermat", 64), ("random", 48)):
            params = gen_bucket_params(5, mode, bits, rng)
            for member in (False, True):
                pair = gen_exponent_pair(params.phi, member, rng)
                checked = 0
                while checked < 100:
                    a = rng.randrange(2, params.n)
                    if gcd(a, params.n) != 1:
                        continue
                    lifted = modpow(modpow(a, pair.e, params.n), pair.d,
                                    params.n)
                    assert lifted == modpow(a, pair.w, params.n)
                    checked += 1
        report("5 (a**e)**d == a**w on 100 random coprime a per pair")


class TestCriterion6BoundaryDisclosure:
    def test_k_zero_and_k_full(self):
        cfg = ScenarioConfig(ring_size=5, bucket_count=2, seed=6,
                             mode="generic",
                             values=["10", "10", "10", "10", "10"])
        result, _ = run_tally(cfg.build_states(), 2, cfg.protocol_config())
        assert result.counts == {1: 5, 2: 0}
        report("6 boundary counts k=0 and k=N reported exactly")


class TestCriterion7AttackOn2SmoothParams:
    def test_50_of_50_fermat_inferences(self):
        correct = 0
        for seed in range(50):
            rng = random.Random(seed * 7 + 1)
            n_parties = rng.randrange(4, 16)
            values = [rng.randrange(1, 3) for _ in range(n_parties)]
            cfg = centi_config(values, 2, seed=seed, param_mode="fermat")
            states = cfg.build_states()
            _, transcript = run_tally(states, 2, cfg.protocol_config())
            bucket = rng.randrange(1, 3)
            params = states[0].params[bucket]
            start = time.perf_counter()
            out = collusion_attack(transcript, {1, 3}, 2, params, 2**12)
            elapsed = time.perf_counter() - start
            truth = "member" if values[1] == bucket else "nonmember"
            assert out.inferred_bit == truth, seed
            assert elapsed < 1.0
            correct += 1
        assert correct == 50
        report("7 collusion attack on Fermat-prime parameters: 50/50 correct")


class TestCriterion8BudgetedHardness:
    def test_20_of_20_inconclusive(self):
        sympy = pytest.importorskip("sympy")
        inconclusive = 0
        attempts = 0
        seed = 800
        while inconclusive < 20:
            seed += 1
            attempts += 1
            assert attempts < 60, "could not find enough high-order scenarios"
            rng = random.Random(seed)
            values = [rng.randrange(1, 3) for _ in range(4)]
            cfg = centi_config(values, 2, seed=seed, param_mode="random",
                               bits=64)
            states = cfg.build_states()
            _, transcript = run_tally(states, 2, cfg.protocol_config())
            params = states[0].params[1]
            # independent order check: the target's round-1 input must
            # generate a subgroup larger than 2**40
            g1 = [m for m in transcript.legs()[0].body()
                  if m.bucket_id == 1][0].payload[3]
            ord_p = sympy.n_order(g1 % params.p, params.p)
            ord_q = sympy.n_order(g1 % params.q, params.q)
            if math.lcm(ord_p, ord_q) <= 2**40:
                continue
            out = collusion_attack(transcript, {1, 3}, 2, params, 2**20)
            assert out.inferred_bit == "inconclusive", seed
            assert out.work == 2**20
            inconclusive += 1
        report("8 budgeted attack inconclusive 20/20 on orders > 2**40")


class TestCriterion9WireRoundTrip:
    def test_10k_random_messages(self):
        rng = random.Random(9)
        kinds = ["HELLO", "R1", "R2", "RESULT", "BYE"]
        arity = {"HELLO": 3, "R1": 4, "R2": 1, "RESULT": 1, "BYE": 0}
        from ringcount.transport import ProtocolMessage
        for _ in range(10_000):
            kind = rng.choice(kinds)
            if kind == "HELLO":
                m = ProtocolMessage(kind, None,
                                    tuple(rng.randrange(1, 10**6)
                                          for _ in range(3)))
            elif kind == "BYE":
                m = ProtocolMessage(kind, None, ())
            else:
                m = ProtocolMessage(kind, rng.randrange(1, 10**4),
                                    tuple(rng.getrandbits(rng.randrange(1, 256))
                                          for _ in range(arity[kind])))
            assert decode(encode(m)) == m
        report("9a decode(encode(m)) == m over 10^4 random messages")

    def test_persist_load_byte_identical_full_run(self, full_run, tmp_path):
        _, _, _, transcript, _ = full_run
        path = tmp_path / "full.transcript"
        transcript.persist(path)
        loaded = load_transcript(path)
        assert loaded == transcript
        path2 = tmp_path / "again.transcript"
        loaded.persist(path2)
        assert path.read_bytes() == path2.read_bytes()
        report("9b persist/load byte-identical on the full run")


class TestCriterion10TransportEquivalence:
    def test_three_tcp_nodes_match_simulation(self, tmp_path):
        config_text = ("N=3 B=3 seed=1010 params=random bits=64\n"
                       "1 2\n2 3\n3 2\n")
        cfg_path = tmp_path / "scenario.cfg"
        cfg_path.write_text(config_text)

        socks = [socket.socket() for _ in range(3)]
        for s in socks:
            s.bind(("127.0.0.1", 0))
        ports = [s.getsockname()[1] for s in socks]
        for s in socks:
            s.close()
        roster_path = tmp_path / "roster.txt"
        roster_path.write_text("".join(
            f"{i + 1} 127.0.0.1:{port}\n" for i, port in enumerate(ports)))

        procs = [
            subprocess.Popen(
                [sys.executable, "-m", "ringcount", "node", str(roster_path),
                 str(i), str(cfg_path)],
                stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
            for i in (1, 2, 3)
        ]
        outputs = {}
        for i, proc in zip((1, 2, 3), procs):
            out, err = proc.communicate(timeout=60)
            assert proc.returncode == 0, (i, err)
            outputs[i] = out

        from ringcount.scenario import parse_config
        cfg = parse_config(config_text)
        sim_result, _ = run_tally(cfg.build_states(), 3, cfg.protocol_config())
        for i in (1, 2, 3):
            counts = {int(m[1]): int(m[2]) for m in
                      re.finditer(r"^COUNT (\d+) (\d+)$", outputs[i], re.M)}
            assert counts == sim_result.counts, i
        assert sim_result.counts == {1: 0, 2: 2, 3: 1}
        report("10 TCP ring counts identical to in-process simulation")
