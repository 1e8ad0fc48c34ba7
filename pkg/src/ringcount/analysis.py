"""Reference oracle and cryptanalysis of public transcripts.

A transcript is public by design; these functions probe what an
eavesdropper or a coalition of colluders can actually learn from it.
The collusion attack recovers a sandwiched target's secret exponents by
discrete logarithm — trivially when the group order is 2-smooth (Fermat
prime parameters), otherwise only within an explicit step budget.
"""

from dataclasses import dataclass

from .bigmod import jacobi, modinv, modpow
from .params import BucketParams
from .transport import CallLeg, Transcript


class NoSolutionError(ValueError):
    """h lies outside the subgroup generated by g."""


class MissingDataError(ValueError):
    """Transcript lacks the legs the attack needs."""


@dataclass(frozen=True)
class AttackOutcome:
    target: int
    inferred_bit: str  # "member" | "nonmember" | "inconclusive"
    work: int


def oracle_count(values, bucket: int) -> int:
    """Direct member count for a bucket, no privacy: the ground truth."""
    count = 0
    for v in values:
        if isinstance(v, str):
            count += v[bucket - 1] == "1"
        else:
            count += v == bucket
    return count


def discrete_log_bruteforce(g: int, h: int, n: int, max_steps: int) -> int | None:
    """Smallest t <= max_steps with g**t == h (mod n), else None."""
    acc = 1 % n
    g %= n
    h %= n
    for t in range(max_steps + 1):
        if acc == h:
            return t
        acc = acc * g % n
    return None


def _two_adic_order(g: int, p: int) -> int:
    """a with ord_p(g) = 2**a; raises if the order is not a power of two."""
    g %= p
    if g == 0:
        raise ValueError("g divisible by p")
    a = 0
    v = g
    while v != 1:
        v = v * v % p
        a += 1
        if a > (p - 1).bit_length():
            raise ValueError(f"order of {g} mod {p} is not a power of two")
    return a


def _dlog_pow2_prime(g: int, h: int, p: int) -> tuple[int, int]:
    """Bitwise lifting of t with g**t == h (mod p), ord(g) a power of two.

    Returns (t mod 2**a, a).
    """
    g %= p
    h %= p
    a = _two_adic_order(g, p)
    if a == 0:
        if h != 1:
            raise NoSolutionError("g trivial but h != 1")
        return 0, 0
    omega = pow(g, 1 << (a - 1), p)  # the order-2 element, i.e. -1 mod p
    ginv = modinv(g, p)
    t = 0
    for i in range(a):
        z = pow(h * pow(ginv, t, p) % p, 1 << (a - 1 - i), p)
        if z == omega:
            t |= 1 << i
        elif z != 1:
            raise NoSolutionError("h outside the subgroup generated by g")
    if pow(g, t, p) != h:
        raise NoSolutionError("lifting failed; h outside <g>")
    return t, a


def pohlig_hellman_pow2(g: int, h: int, n: int, p: int, q: int) -> int:
    """Discrete log of h base g mod n = p*q when ord(g) is a power of two.

    Solves independently mod p and mod q and reconciles the two residues;
    the result is t mod ord(g). Work is O(log^2 ord)."""
    tp, ap = _dlog_pow2_prime(g, h, p)
    tq, aq = _dlog_pow2_prime(g, h, q)
    if ap < aq:
        tp, ap, tq, aq = tq, aq, tp, ap
    if tp % (1 << aq) != tq:
        raise NoSolutionError("incompatible residues mod p and mod q")
    return tp


def _ring_size(legs: list[CallLeg]) -> int:
    if not legs:
        raise MissingDataError("empty transcript")
    return legs[0].messages[0].payload[1]


def _leg_between(legs, sender: int, receiver: int) -> CallLeg:
    for leg in legs:
        if leg.sender == sender and leg.receiver == receiver:
            return leg
    raise MissingDataError(f"no leg {sender} -> {receiver} in that round")


def _acc_of(leg: CallLeg, bucket: int) -> int:
    for m in leg.body():
        if m.bucket_id == bucket:
            return m.payload[-1]
    raise MissingDataError(f"leg {leg.sender}->{leg.receiver} has no line "
                           f"for bucket {bucket}")


def _two_adic_valuation_of_order(g: int, n: int, phi: int) -> int:
    """v2(ord_n(g)), using the public phi = (p-1)(q-1)."""
    m = phi
    cap = 0
    while m % 2 == 0:
        m //= 2
        cap += 1
    v = 0
    base = pow(g, m, n)
    while base != 1:
        base = base * base % n
        v += 1
        if v > cap:
            raise ValueError("element order does not divide phi; bad parameters")
    return v


def collusion_attack(transcript: Transcript, colluders: set[int], target: int,
                     params: BucketParams, dl_budget: int,
                     colluder_bits: dict[int, bool] | None = None) -> AttackOutcome:
    """Infer whether `target` is a member of params' bucket.

    Colluders adjacent to the target read its round-1 and round-2
    input/output pairs off the public transcript and solve for e and d:
    by 2-power Pohlig-Hellman when (p-1)(q-1) is a power of two,
    otherwise by brute force within dl_budget steps. Membership follows
    from e*d mod the largest power of two both logs are valid against.
    """
    legs = transcript.legs()
    ring_size = _ring_size(legs)
    bucket = params.bucket_id
    n, phi = params.n, params.phi
    round1 = legs[:ring_size]
    round2 = legs[ring_size:2 * ring_size - 1]

    others = set(range(1, ring_size + 1)) - {target}
    if colluders >= others and colluder_bits is not None:
        announced = [leg for leg in legs[2 * ring_size - 1:]
                     if any(m.bucket_id == bucket for m in leg.body())]
        if announced:
            k = _acc_of(announced[0], bucket)
            mine = sum(bool(colluder_bits.get(i, False)) for i in others)
            return AttackOutcome(target, "member" if k - mine == 1 else "nonmember", 0)

    pred = target - 1 if target > 1 else ring_size
    succ = target % ring_size + 1
    if pred not in colluders or succ not in colluders:
        raise ValueError(f"target {target} is not sandwiched between colluders")

    g1 = _acc_of(_leg_between(round1, pred, target), bucket)
    h1 = _acc_of(_leg_between(round1, target, succ), bucket)
    if target == 1:
        g2 = _acc_of(_leg_between(round1, ring_size, 1), bucket)
    else:
        g2 = _acc_of(_leg_between(round2, target - 1, target), bucket)
    if target < ring_size:
        h2 = _acc_of(_leg_between(round2, target, target + 1), bucket)
    else:
        # the extractor's own d is applied silently; reconstruct its output
        # from the announced count: x**(2**k) mod n
        announced = [leg for leg in legs[2 * ring_size - 1:]
                     if any(m.bucket_id == bucket for m in leg.body())]
        if not announced:
            raise MissingDataError("no announcement to reconstruct the final value")
        k = _acc_of(announced[0], bucket)
        h2 = modpow(params.x, 1 << k, n)

    pow2_smooth = phi & (phi - 1) == 0
    work = 0
    logs = []
    for g, h in ((g1, h1), (g2, h2)):
        if pow2_smooth:
            try:
                t = pohlig_hellman_pow2(g, h, n, params.p, params.q)
            except NoSolutionError:
                return AttackOutcome(target, "inconclusive", work)
            work += phi.bit_length() ** 2
        else:
            t = discrete_log_bruteforce(g, h, n, dl_budget)
            work += t if t is not None else dl_budget
            if t is None:
                return AttackOutcome(target, "inconclusive", work)
        logs.append(t)

    v = min(_two_adic_valuation_of_order(g1, n, phi),
            _two_adic_valuation_of_order(g2, n, phi))
    if v < 1:
        return AttackOutcome(target, "inconclusive", work)
    modulus = 1 << v
    residue = logs[0] * logs[1] % modulus
    if residue == 2 % modulus:
        bit = "member"
    elif residue == 1 % modulus:
        bit = "nonmember"
    else:
        bit = "inconclusive"
    return AttackOutcome(target, bit, work)


def jacobi_probe(transcript: Transcript, params: BucketParams) -> int | None:
    """Eavesdropper diagnostic: first member index via the Jacobi parity channel.

    Only informative when jacobi(x, n) = -1 (paper-faithful parameters):
    round-2 accumulators keep symbol -1 until the first even d — that is,
    the first member along the chain — flips it to +1 for good.
    """
    n, x = params.n, params.x
    if jacobi(x, n) == 1:
        return None
    legs = transcript.legs()
    ring_size = _ring_size(legs)
    for leg in legs[ring_size:2 * ring_size - 1]:
        try:
            acc = _acc_of(leg, params.bucket_id)
        except MissingDataError:
            return None
        if jacobi(acc, n) == 1:
            return leg.sender
    return None
