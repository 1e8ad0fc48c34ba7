"""Secure counting over a ring of modular exponentiations.

N participants learn, per bucket, how many of them belong to it without
revealing who, by threading an accumulator through two rounds of secret
exponentiations mod p*q. Includes transcript tooling and discrete-log
attack diagnostics that probe the scheme's parameter sensitivity.
"""

from .bigmod import gcd, is_probable_prime, jacobi, modinv, modpow, random_prime
from .params import (BucketParams, ExponentPair, FERMAT_PRIMES,
                     gen_bucket_params, gen_exponent_pair, select_x)
from .protocol import (Accumulator, ParticipantState, ProtocolConfig,
                       TallyResult, extract_count, round1_step, round2_step,
                       run_tally)
from .transport import (CallLeg, ProtocolMessage, Transcript, decode, encode,
                        load_transcript)
from .analysis import (AttackOutcome, collusion_attack, discrete_log_bruteforce,
                       jacobi_probe, oracle_count, pohlig_hellman_pow2)
from .scenario import ScenarioConfig, derive_rng, load_config, parse_config

__version__ = "0.1.0"
