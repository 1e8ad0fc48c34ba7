"""Public bucket parameters and secret exponent pairs.

The initiator picks, per bucket, two primes p and q and a base x whose
repeated squares mod n = p*q stay pairwise distinct (and never hit 1)
for as many squarings as there are ring members. Each participant then
holds a secret (e, d) pair with e*d == 1 or 2 (mod (p-1)(q-1)) encoding
its membership bit for the bucket.
"""

import random
from dataclasses import dataclass

from .bigmod import gcd, is_probable_prime, jacobi, modinv, random_prime

#: The five known primes of the form 2**k + 1.
FERMAT_PRIMES = (3, 5, 17, 257, 65537)

_SELECT_X_ATTEMPTS = 4096
_PAIR_ATTEMPTS = 10_000


class UnsatisfiableError(RuntimeError):
    """No parameters satisfying the requested constraints exist or were found."""


@dataclass(frozen=True)
class BucketParams:
    """Public per-bucket numbers chosen by the initiator."""

    bucket_id: int
    p: int
    q: int
    n: int
    phi: int
    x: int
    ring_size: int

    @classmethod
    def from_primes(cls, bucket_id: int, p: int, q: int, x: int, ring_size: int) -> "BucketParams":
        return cls(bucket_id=bucket_id, p=p, q=q, n=p * q,
                   phi=(p - 1) * (q - 1), x=x, ring_size=ring_size)

    def square_powers(self) -> list[int]:
        """x**(2**k) mod n for k = 0..ring_size."""
        out = [self.x % self.n]
        for _ in range(self.ring_size):
            out.append(out[-1] * out[-1] % self.n)
        return out

    def validate(self) -> None:
        if not (is_probable_prime(self.p) and is_probable_prime(self.q)):
            raise UnsatisfiableError("p and q must both be prime")
        if self.p == self.q:
            raise UnsatisfiableError("p and q must be distinct")
        if self.n != self.p * self.q or self.phi != (self.p - 1) * (self.q - 1):
            raise UnsatisfiableError("n/phi inconsistent with p, q")
        if gcd(self.x, self.n) != 1:
            raise UnsatisfiableError("x shares a factor with n")
        powers = self.square_powers()
        if 1 in powers or len(set(powers)) != len(powers):
            raise UnsatisfiableError("square powers of x collide or reach 1")


@dataclass(frozen=True)
class ExponentPair:
    """One participant's secret for one bucket: e*d == w (mod phi), w = 1 + member."""

    e: int
    d: int
    member: bool

    @property
    def w(self) -> int:
        return 2 if self.member else 1


def is_valid_base(x: int, p: int, q: int, ring_size: int,
                  require_plus_jacobi: bool = True) -> bool:
    """Whether x qualifies as the protocol base for (p, q, ring_size)."""
    n = p * q
    if not 2 <= x <= n - 2:
        return False
    if x % p == 0 or x % q == 0:
        return False
    if require_plus_jacobi and jacobi(x, n) != 1:
        return False
    seen = set()
    v = x % n
    for _ in range(ring_size + 1):
        if v == 1 or v in seen:
            return False
        seen.add(v)
        v = v * v % n
    return True


def select_x(p: int, q: int, ring_size: int, rng: random.Random,
             require_plus_jacobi: bool = True) -> int:
    """Sample a base x in [2, n-2] satisfying the distinct-squares condition.

    By default x is additionally constrained to Jacobi symbol +1 mod n,
    which closes a parity side channel in the public transcript; pass
    require_plus_jacobi=False for the unconstrained behaviour.
    """
    n = p * q
    for _ in range(_SELECT_X_ATTEMPTS):
        x = rng.randrange(2, n - 1)
        if is_valid_base(x, p, q, ring_size, require_plus_jacobi):
            return x
    raise UnsatisfiableError(
        f"no valid base found for p={p}, q={q}, ring_size={ring_size} "
        f"within {_SELECT_X_ATTEMPTS} attempts"
    )


def _two_adic_valuation(n: int) -> int:
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    return v


def gen_bucket_params(ring_size: int, mode: str, bits: int, rng: random.Random,
                      bucket_id: int = 0,
                      require_plus_jacobi: bool = True) -> BucketParams:
    """Generate one bucket's public parameters.

    mode="fermat" draws p, q from the known Fermat primes; the distinct-
    squares condition then needs max(v2(p-1), v2(q-1)) >= ring_size + 1,
    which caps ring_size at 15. mode="random" draws `bits`-bit primes
    with p == 1 (mod 2**(ring_size+1)) so a suitable base always exists.
    """
    if ring_size < 2:
        raise ValueError("ring_size must be >= 2")
    if mode == "fermat":
        candidates = [
            (p, q)
            for p in FERMAT_PRIMES
            for q in FERMAT_PRIMES
            if p < q and max(_two_adic_valuation(p - 1),
                             _two_adic_valuation(q - 1)) >= ring_size + 1
        ]
        if not candidates:
            raise UnsatisfiableError(
                f"ring_size={ring_size} needs an element of order 2**{ring_size + 1}, "
                "but the known Fermat primes top out at order 2**16"
            )
        p, q = candidates[rng.randrange(len(candidates))]
    elif mode == "random":
        p = random_prime(bits, residue=1, modulus=1 << (ring_size + 1), rng=rng)
        while True:
            q = random_prime(bits, residue=1, modulus=2, rng=rng)
            if q != p:
                break
    else:
        raise ValueError(f"unknown parameter mode {mode!r}")
    x = select_x(p, q, ring_size, rng, require_plus_jacobi)
    return BucketParams.from_primes(bucket_id, p, q, x, ring_size)


def gen_exponent_pair(phi: int, member: bool, rng: random.Random) -> ExponentPair:
    """Draw a secret (e, d) with e odd, gcd(e, phi) = 1 and e*d == 1+member (mod phi)."""
    if phi < 8 or phi % 2 != 0:
        raise ValueError("phi must be even and >= 8")
    for _ in range(_PAIR_ATTEMPTS):
        e = 2 * rng.randrange(1, phi // 2) + 1
        if e < 3 or gcd(e, phi) != 1:
            continue
        d = (1 + member) * modinv(e, phi) % phi
        if d == 0:  # unreachable for phi >= 8, kept for form
            d = phi
        return ExponentPair(e=e, d=d, member=member)
    raise UnsatisfiableError("could not draw a unit exponent; phi suspect")
