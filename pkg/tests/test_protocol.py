import random

import pytest

from ringcount.analysis import oracle_count
from ringcount.params import BucketParams, ExponentPair
from ringcount.protocol import (Accumulator, Actor, CorruptedAccumulatorError,
                                ParticipantState,
                                ProtocolOrderError, TallyMismatchError,
                                extract_count, round1_step, round2_step,
                                run_tally)
from ringcount.scenario import ScenarioConfig
from ringcount.transport import RESULT


PARAMS_85 = BucketParams.from_primes(1, 5, 17, 3, 3)


def state_with_pair(e, d, member=False):
    state = ParticipantState(index=2, bits={1: member}, rng=random.Random(0))
    state.pairs[1] = ExponentPair(e=e, d=d, member=member)
    return state


class TestRound1Step:
    def test_exponent_three(self):
        state = state_with_pair(3, 43)
        out = round1_step(state, PARAMS_85, Accumulator(1, 9), state.rng)
        assert out.value == 49  # 9**3 = 729 = 8*85 + 49

    def test_identity_exponent(self):
        state = state_with_pair(1, 1)
        out = round1_step(state, PARAMS_85, Accumulator(1, 27), state.rng)
        assert out.value == 27

    def test_corrupted_accumulator(self):
        state = state_with_pair(3, 43)
        with pytest.raises(CorruptedAccumulatorError):
            round1_step(state, PARAMS_85, Accumulator(1, 5), state.rng)

    def test_lazy_pair_generation(self):
        state = ParticipantState(index=2, bits={1: True}, rng=random.Random(1))
        assert not state.pairs
        round1_step(state, PARAMS_85, Accumulator(1, 9), state.rng)
        assert 1 in state.pairs
        pair = state.pairs[1]
        assert pair.e * pair.d % 64 == 2


class TestRound2Step:
    def test_round2_inverts_round1_for_nonmember(self):
        state = state_with_pair(3, 43)
        for a in (2, 3, 9, 49, 84):
            mid = round1_step(state, PARAMS_85, Accumulator(1, a), state.rng)
            back = round2_step(state, PARAMS_85, mid)
            assert back.value == a

    def test_exponent_43_on_27(self):
        state = state_with_pair(3, 43)
        out = round2_step(state, PARAMS_85, Accumulator(1, 27))
        assert out.value == 3  # 27 = 3**3 and 3*43 == 1 (mod 64)

    def test_missing_pair_is_order_fault(self):
        state = ParticipantState(index=2, bits={}, rng=random.Random(0))
        with pytest.raises(ProtocolOrderError):
            round2_step(state, PARAMS_85, Accumulator(1, 27))


class TestExtractCount:
    def test_k0(self):
        assert extract_count(PARAMS_85, Accumulator(1, 3)) == 0

    def test_k2(self):
        assert extract_count(PARAMS_85, Accumulator(1, 81)) == 2

    def test_mismatch(self):
        with pytest.raises(TallyMismatchError):
            extract_count(PARAMS_85, Accumulator(1, 7))


def centi_config(values, bucket_count, seed=0, **kw):
    return ScenarioConfig(ring_size=len(values), bucket_count=bucket_count,
                          seed=seed, values=values, **kw)


class TestRunTally:
    def test_three_party_counts_match_oracle(self):
        cfg = centi_config([2, 4, 2], 4, seed=5)
        result, _ = run_tally(cfg.build_states(), 4, cfg.protocol_config())
        assert result.counts == {b: oracle_count(cfg.values, b)
                                 for b in range(1, 5)}
        assert not result.faults

    def test_call_accounting(self):
        for n in (2, 3, 5):
            cfg = centi_config([1] * n, 2, seed=n)
            result, transcript = run_tally(cfg.build_states(), 2,
                                           cfg.protocol_config())
            assert result.protocol_calls == 2 * n - 1
            assert result.announce_calls == n - 1
            assert len(transcript.legs()) == 3 * n - 2

    def test_broadcast_announcement(self):
        cfg = centi_config([1, 2, 1], 2, seed=8, announce="broadcast")
        result, _ = run_tally(cfg.build_states(), 2, cfg.protocol_config())
        assert result.announce_calls == 1
        assert result.counts == {1: 2, 2: 1}

    def test_counts_sum_to_ring_size(self):
        cfg = centi_config([3, 1, 3, 2, 3], 3, seed=4)
        result, _ = run_tally(cfg.build_states(), 3, cfg.protocol_config())
        assert sum(result.counts.values()) == 5

    def test_all_members_of_one_bucket(self):
        cfg = centi_config([2, 2, 2, 2], 3, seed=1)
        result, _ = run_tally(cfg.build_states(), 3, cfg.protocol_config())
        assert result.counts == {1: 0, 2: 4, 3: 0}

    def test_order_independence(self):
        values = [1, 2, 2, 3]
        counts = []
        for perm in ([1, 2, 2, 3], [2, 1, 3, 2], [3, 2, 2, 1]):
            cfg = centi_config(perm, 3, seed=2)
            result, _ = run_tally(cfg.build_states(), 3, cfg.protocol_config())
            counts.append(result.counts)
        assert counts[0] == counts[1] == counts[2]
        assert counts[0] == {b: oracle_count(values, b) for b in (1, 2, 3)}

    def test_fermat_mode(self):
        cfg = centi_config([1, 2, 1, 1], 2, seed=3, param_mode="fermat")
        result, _ = run_tally(cfg.build_states(), 2, cfg.protocol_config())
        assert result.counts == {1: 3, 2: 1}

    def test_generic_mode_multiple_memberships(self):
        cfg = ScenarioConfig(ring_size=3, bucket_count=4, seed=6, mode="generic",
                             values=["1100", "0110", "1111"])
        result, _ = run_tally(cfg.build_states(), 4, cfg.protocol_config())
        assert result.counts == {1: 2, 2: 3, 3: 2, 4: 1}

    def test_seeded_determinism(self):
        cfg = centi_config([2, 1, 2], 3, seed=9)
        r1, t1 = run_tally(cfg.build_states(), 3, cfg.protocol_config())
        r2, t2 = run_tally(cfg.build_states(), 3, cfg.protocol_config())
        assert r1 == r2
        assert t1 == t2

    def test_random_scenarios_match_oracle(self):
        rng = random.Random(1234)
        for case in range(40):
            n = rng.randrange(2, 7)
            b = rng.randrange(1, 5)
            mode = "fermat" if case % 2 else "random"
            values = [rng.randrange(1, b + 1) for _ in range(n)]
            cfg = centi_config(values, b, seed=case, param_mode=mode, bits=32)
            result, _ = run_tally(cfg.build_states(), b, cfg.protocol_config())
            assert not result.faults
            assert result.counts == {bb: oracle_count(values, bb)
                                     for bb in range(1, b + 1)}


class TestCountSecrecyBeforeAnnouncement:
    def test_only_extractor_holds_counts(self):
        cfg = centi_config([1, 2, 2], 2, seed=11)
        states = {s.index: s for s in cfg.build_states()}
        actors = {i: Actor(states[i], 3, 2, cfg.protocol_config())
                  for i in states}
        legs = [actors[1].start_leg()]
        announce_legs = []
        while legs:
            leg = legs.pop(0)
            outs = actors[leg.receiver].handle_leg(leg)
            if outs and any(m.kind == RESULT for m in outs[0].body()):
                announce_legs = outs
                break
            legs.extend(outs)
        # extraction happened, announcement not yet delivered
        assert states[3].counts is not None
        assert states[1].counts is None and states[2].counts is None
        for leg in announce_legs:
            actors[leg.receiver].handle_leg(leg)
        assert states[1].counts == states[3].counts == states[2].counts


class TestTelescoping:
    def test_final_accumulator_is_x_to_power_2_k(self):
        cfg = centi_config([2, 2, 1], 2, seed=13)
        states = cfg.build_states()
        result, transcript = run_tally(states, 2, cfg.protocol_config())
        params = states[0].params[2]
        legs = transcript.legs()
        # last round-2 leg carries the value before the extractor's own d
        final_in = [m for m in legs[2 * 3 - 2].body() if m.bucket_id == 2]
        pair = states[2].pairs[2]
        final = pow(final_in[0].payload[0], pair.d, params.n)
        assert final == pow(params.x, 1 << result.counts[2], params.n)
        assert result.counts[2] == 2
