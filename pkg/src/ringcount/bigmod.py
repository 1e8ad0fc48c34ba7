"""Arbitrary-precision number theory primitives.

Everything here operates on plain Python ints (nonnegative unless noted)
and is pure given its inputs; randomness is always an explicit argument
or derived deterministically, so the functions are safe to call from
anywhere concurrently.
"""

import math
import random

# Below this bound primality is decided by exhaustive trial division.
_TRIAL_DIVISION_BOUND = 10**6

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


class InvalidModulusError(ValueError):
    """Modulus is smaller than 2 (or otherwise unusable)."""


class NotInvertibleError(ValueError):
    """Requested inverse does not exist (gcd != 1)."""


class PrimeSearchError(RuntimeError):
    """Prime search exhausted its attempt budget."""


def modpow(base: int, exponent: int, modulus: int) -> int:
    """base**exponent mod modulus via square-and-multiply."""
    if modulus < 2:
        raise InvalidModulusError(f"modulus must be >= 2, got {modulus}")
    if exponent < 0:
        raise ValueError("exponent must be nonnegative")
    return pow(base, exponent, modulus)


def gcd(a: int, b: int) -> int:
    return math.gcd(a, b)


def modinv(a: int, m: int) -> int:
    """Inverse of a modulo m, in (0, m). Raises NotInvertibleError if gcd(a, m) != 1."""
    if m < 2:
        raise InvalidModulusError(f"modulus must be >= 2, got {m}")
    g, t, _ = _extended_gcd(a % m, m)
    if g != 1:
        raise NotInvertibleError(f"{a} is not invertible mod {m} (gcd={g})")
    return t % m


def _extended_gcd(a: int, b: int) -> tuple[int, int, int]:
    """Returns (g, x, y) with a*x + b*y = g = gcd(a, b)."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    return old_r, old_x, old_y


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a|n) for odd n >= 3."""
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Jacobi symbol needs odd n >= 3, got {n}")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def is_probable_prime(n: int, rounds: int = 32, rng: random.Random | None = None) -> bool:
    """Primality test: exact below 10**6, Miller-Rabin above.

    Error probability below 4**-rounds for composites. The Miller-Rabin
    bases come from `rng`, or deterministically from n itself when no
    generator is supplied (so repeated calls agree).
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if n < 2:
        return False
    if n < _TRIAL_DIVISION_BOUND:
        if n in (2, 3):
            return True
        if n % 2 == 0:
            return False
        f = 3
        while f * f <= n:
            if n % f == 0:
                return False
            f += 2
        return True

    for p in _SMALL_PRIMES:
        if n % p == 0:
            return False

    if rng is None:
        rng = random.Random(f"miller-rabin:{n}")
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def random_prime(bits: int, residue: int, modulus: int, rng: random.Random) -> int:
    """Random prime with exactly `bits` bits and p == residue (mod modulus).

    Sampling is rejection-based with a budget of 50*bits candidates;
    raises PrimeSearchError when the constraint leaves too few (or no)
    candidates in range.
    """
    if bits < 8:
        raise ValueError("bits must be >= 8")
    if modulus < 1:
        raise ValueError("modulus must be >= 1")
    residue %= modulus if modulus > 1 else 1
    if modulus % 2 == 0 and residue % 2 == 0:
        raise ValueError("even residue class mod even modulus contains no odd prime")
    lo = 1 << (bits - 1)
    hi = (1 << bits) - 1
    for _ in range(50 * bits):
        c = rng.randrange(lo, hi + 1)
        c -= (c - residue) % modulus
        if c < lo:
            c += modulus
        if c > hi or c < lo:
            continue
        if modulus % 2 == 1 and c % 2 == 0:
            c += modulus
            if c > hi:
                continue
        if is_probable_prime(c, rounds=32, rng=rng):
            return c
    raise PrimeSearchError(
        f"no {bits}-bit prime == {residue} (mod {modulus}) found within budget"
    )
