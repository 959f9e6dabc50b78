"""Key-insulated mutual authentication: algorithms and session state machines.

A session is four flights between a server and one tag:

1. server -> tag: a fresh challenge ``x_s``
2. tag -> server: a fresh nonce ``x_t``
3. server -> tag: per-candidate ``(sigma, delta)`` where
   ``x = H_i(SK*, k)`` is the session's partial key derived from the
   server-only master secret, ``sigma = H(k' || x, x_s || x_t)``
   authenticates the server, and ``delta = k XOR x`` one-time-pads the
   partial key under the shared key
4. tag -> server: ``sigma' = H(x_t || x_s, sk)`` with session key
   ``sk = k' || x'``; both sides then ratchet ``k -> H(k'' || x'', x_s)``

``k'``/``k''`` and ``x'``/``x''`` are the left/right halves of ``k`` and
``x``. The tag keeps only its current key (and a session counter) between
sessions; the server keeps, per tag, the current key plus one previous-key
slot used for desynchronization recovery.

The server never learns which tag it is talking to from the wire: flight 3
carries one candidate per (record, key slot), shuffled, and flight 4
identifies the record by matching ``sigma'`` against precomputed
expectations. On a failed or missing flight 4 the server parks the
candidate next-key in the record's previous-key slot so that a tag which
did ratchet can still be matched next session; two consecutive failures
flag the record as desynchronized (a second blocked final flight is
unrecoverable by design).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .bits import BitString, HashSpec, OpMeter, Prng, counter_hash, hash2, metered, prng_next, split, xor


class ProtocolError(Exception):
    pass


class ParameterError(ProtocolError):
    """Invalid protocol parameters (bad key width, no tags, ...)."""


class SessionOrderError(ProtocolError):
    """A session step ran with no matching session in flight (driver bug,
    not an attack: attacks are modelled as values, not exceptions)."""


class LengthError(ProtocolError, ValueError):
    def __init__(self, *parts: "BitString"):
        super().__init__(f"inconsistent operand lengths: {[len(p) for p in parts]}")


# ---------------------------------------------------------------------------
# State and message types.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MasterKey:
    """Server-only master secret. Never serialized into tag state or wire
    messages; only :func:`partial_key` consumes it."""

    value: BitString


@dataclass
class _PendingTagSession:
    x_s: Optional[BitString]
    x_t: BitString


@dataclass
class TagState:
    """One tag. Persistent state between sessions is exactly the current
    key and the session counter; everything else is transient."""

    key: BitString
    counter: int
    prng: Prng
    hardened_scan: bool = True
    meter: OpMeter = field(default_factory=OpMeter)
    pending: Optional[_PendingTagSession] = field(default=None, repr=False)

    @property
    def persistent_secret_bits(self) -> int:
        return len(self.key)


@dataclass
class ServerTagRecord:
    label: str
    key_current: BitString
    key_previous: Optional[BitString]
    counter: int
    consecutive_failures: int = 0
    desynchronized: bool = False


@dataclass
class ServerState:
    master: MasterKey
    records: dict[str, ServerTagRecord]
    prng: Prng

    @property
    def lam(self) -> int:
        return len(self.master.value)


@dataclass(frozen=True)
class Challenge:
    x_s: BitString


@dataclass(frozen=True)
class TagNonce:
    x_t: BitString


@dataclass(frozen=True)
class ServerAuthCandidate:
    sigma: BitString
    delta: BitString


@dataclass(frozen=True)
class BroadcastAuth:
    candidates: tuple[ServerAuthCandidate, ...]


@dataclass(frozen=True)
class TagAuth:
    sigma_prime: BitString


@dataclass(frozen=True)
class PendingCandidate:
    label: str
    slot: str  # "current" | "previous"
    sigma: BitString
    delta: BitString
    expected_sigma_prime: BitString
    next_key: BitString


@dataclass(frozen=True)
class PendingSession:
    """Server-side bookkeeping for one in-flight session. Discarded after
    finalize/timeout; never persisted."""

    x_s: BitString
    x_t: BitString
    candidates: tuple[PendingCandidate, ...]


@dataclass(frozen=True)
class AuthResult:
    accepted: bool
    label: Optional[str] = None
    key_updated: bool = False
    matched_slot: Optional[str] = None

    @property
    def outcome(self) -> str:
        return f"accepted({self.label})" if self.accepted else "rejected"


# ---------------------------------------------------------------------------
# The algorithm suite.
# ---------------------------------------------------------------------------

def keygen(lam: int, n: int, prng: Prng, labels: Optional[list[str]] = None) -> tuple[ServerState, list[TagState]]:
    """Provision a server and ``n`` tags.

    Draw order (fixed, relied on by the known-answer fixtures): master key,
    each tag's initial key in label order, then a 64-bit base for the
    per-entity child streams (server is stream 0, tag ``l`` is stream 1+l).
    """
    if lam < 8 or lam % 2:
        raise ParameterError(f"key width must be even and >= 8, got {lam}")
    if n < 1:
        raise ParameterError("need at least one tag")
    if labels is None:
        labels = [f"t{j:03d}" for j in range(1, n + 1)]
    if len(labels) != n or len(set(labels)) != n:
        raise ParameterError("labels must be unique and match the tag count")

    master = MasterKey(prng_next(prng, lam))
    initial_keys = [prng_next(prng, lam) for _ in range(n)]
    stream_base = prng_next(prng, 64).value

    records = {
        label: ServerTagRecord(label=label, key_current=key, key_previous=None, counter=1)
        for label, key in zip(labels, initial_keys)
    }
    server = ServerState(master=master, records=records, prng=Prng(stream_base, 0))
    tags = [
        TagState(key=key, counter=1, prng=Prng(stream_base, 1 + idx))
        for idx, key in enumerate(initial_keys)
    ]
    return server, tags


def partial_key(spec: HashSpec, i: int, sk_star: MasterKey, k: BitString) -> BitString:
    """Session ``i`` partial key ``x_i = H_i(SK*, k_i)``. Only a holder of
    the master secret can produce it."""
    return counter_hash(spec, i, sk_star.value, k)


def session_key(k_prime: BitString, x_prime: BitString) -> BitString:
    """Session key ``sk = k' || x'`` from the two left halves."""
    if len(k_prime) != len(x_prime):
        raise LengthError(k_prime, x_prime)
    return k_prime + x_prime


def key_update(spec: HashSpec, k_dprime: BitString, x_dprime: BitString, x_s: BitString) -> BitString:
    """Next key ``k_{i+1} = H(k'' || x'', x_s)`` from the two right halves
    and the session challenge."""
    if len(k_dprime) != len(x_dprime) or len(x_s) != 2 * len(k_dprime):
        raise LengthError(k_dprime, x_dprime, x_s)
    return hash2(spec, k_dprime + x_dprime, x_s)


def auth_server_tag(spec: HashSpec, k_prime: BitString, x: BitString, x_s: BitString, x_t: BitString) -> BitString:
    """Server authenticator ``sigma = H(k' || x, x_s || x_t)``."""
    if not (2 * len(k_prime) == len(x) == len(x_s) == len(x_t)):
        raise LengthError(k_prime, x, x_s, x_t)
    return hash2(spec, k_prime + x, x_s + x_t)


def auth_tag_msg(spec: HashSpec, x_t: BitString, x_s: BitString, sk: BitString) -> BitString:
    """Tag authenticator ``sigma' = H(x_t || x_s, sk)``."""
    if not (len(x_t) == len(x_s) == len(sk)):
        raise LengthError(x_t, x_s, sk)
    return hash2(spec, x_t + x_s, sk)


# ---------------------------------------------------------------------------
# Session state machines.
# ---------------------------------------------------------------------------

def server_begin(server: ServerState) -> Challenge:
    """Flight 1: fresh random challenge."""
    return Challenge(prng_next(server.prng, server.lam))


def tag_respond_nonce(tag: TagState, challenge: Optional[Challenge] = None) -> TagNonce:
    """Flight 2: fresh random nonce; buffers the in-flight session values.

    The challenge argument is optional because the oracle decomposition of
    the security games produces the nonce without showing the tag a
    challenge first; the channel simulator always passes the delivered one.
    """
    with metered(tag.meter):
        x_t = prng_next(tag.prng, len(tag.key))
    tag.pending = _PendingTagSession(x_s=challenge.x_s if challenge else None, x_t=x_t)
    return TagNonce(x_t)


def make_candidate(spec: HashSpec, counter: int, master: MasterKey, key: BitString,
                   x_s: BitString, x_t: BitString, label: str = "", slot: str = "current") -> PendingCandidate:
    """Flight-3 computation for one (record, key slot): the wire pair
    ``(sigma, delta)`` plus the expected ``sigma'`` and the next key the
    server will commit if that expectation is met."""
    x = partial_key(spec, counter, master, key)
    k_prime, k_dprime = split(key)
    x_prime, x_dprime = split(x)
    sigma = auth_server_tag(spec, k_prime, x, x_s, x_t)
    delta = xor(key, x)
    expected = auth_tag_msg(spec, x_t, x_s, session_key(k_prime, x_prime))
    next_key = key_update(spec, k_dprime, x_dprime, x_s)
    return PendingCandidate(label=label, slot=slot, sigma=sigma, delta=delta,
                            expected_sigma_prime=expected, next_key=next_key)


def server_prepare(server: ServerState, x_s: BitString, x_t: BitString, spec: HashSpec) -> tuple[BroadcastAuth, PendingSession]:
    """Flight 3: one candidate per (record, available key slot), shuffled so
    broadcast position leaks nothing about registry order."""
    entries: list[PendingCandidate] = []
    for rec in server.records.values():
        entries.append(make_candidate(spec, rec.counter, server.master, rec.key_current,
                                      x_s, x_t, label=rec.label, slot="current"))
        if rec.key_previous is not None:
            entries.append(make_candidate(spec, rec.counter, server.master, rec.key_previous,
                                          x_s, x_t, label=rec.label, slot="previous"))
    server.prng.shuffle(entries)
    broadcast = BroadcastAuth(tuple(ServerAuthCandidate(e.sigma, e.delta) for e in entries))
    return broadcast, PendingSession(x_s=x_s, x_t=x_t, candidates=tuple(entries))


def tag_verify_and_respond(tag: TagState, x_s: BitString, broadcast: BroadcastAuth, spec: HashSpec) -> TagAuth:
    """Flight 4: authenticate the server, then answer.

    On a verified candidate: derive the session key, emit ``sigma'``,
    ratchet the tag key, bump the counter. On no match: emit fresh random
    bits of the same width and keep the key, so success and failure are
    indistinguishable on the wire (and, with ``hardened_scan``, take the
    same number of hash operations regardless of where a match sits).
    """
    if tag.pending is None:
        raise SessionOrderError("no session in flight on this tag")
    x_t = tag.pending.x_t
    with metered(tag.meter):
        k_prime, k_dprime = split(tag.key)
        matched_x: Optional[BitString] = None
        for cand in broadcast.candidates:
            x_hat = xor(cand.delta, tag.key)
            sigma_hat = auth_server_tag(spec, k_prime, x_hat, x_s, x_t)
            if sigma_hat == cand.sigma and matched_x is None:
                matched_x = x_hat
                if not tag.hardened_scan:
                    break
        if matched_x is None:
            sigma_prime = prng_next(tag.prng, len(tag.key))
            tag.pending = None
            return TagAuth(sigma_prime)
        x_prime, x_dprime = split(matched_x)
        sk = session_key(k_prime, x_prime)
        sigma_prime = auth_tag_msg(spec, x_t, x_s, sk)
        tag.key = key_update(spec, k_dprime, x_dprime, x_s)
    tag.counter += 1
    tag.pending = None
    return TagAuth(sigma_prime)


def server_finalize(server: ServerState, pending: PendingSession, ta: TagAuth) -> AuthResult:
    """Flight-4 receipt: identify the tag by its authenticator.

    Exactly one candidate expectation must match; ties fail closed (an
    expectation collision at real widths is an attack or a bug). On a match
    the record commits: previous slot takes the matched key, current takes
    the candidate's next key. Anything else is a rejection, which hedges
    (see :func:`_hedge_on_failure`).
    """
    matches = [c for c in pending.candidates if c.expected_sigma_prime == ta.sigma_prime]
    if len(matches) == 1:
        cand = matches[0]
        rec = server.records[cand.label]
        matched_key = rec.key_current if cand.slot == "current" else rec.key_previous
        rec.key_previous = matched_key
        rec.key_current = cand.next_key
        rec.counter += 1
        rec.consecutive_failures = 0
        rec.desynchronized = False
        return AuthResult(accepted=True, label=cand.label, key_updated=True, matched_slot=cand.slot)
    _hedge_on_failure(server, pending)
    return AuthResult(accepted=False)


def server_timeout(server: ServerState, pending: PendingSession) -> AuthResult:
    """Flight 4 never arrived: same rejection handling as an invalid one."""
    _hedge_on_failure(server, pending)
    return AuthResult(accepted=False)


def _hedge_on_failure(server: ServerState, pending: PendingSession) -> None:
    # A failed session is anonymous: the tag may have ratcheted (its sigma'
    # was lost or mangled) or not (it rejected the broadcast). Park each
    # record's would-be next key in the previous-key slot so both cases can
    # be matched next session. Counted per record; two consecutive failures
    # without an accept mean the recovery slot itself was lost.
    for cand in pending.candidates:
        if cand.slot != "current":
            continue
        rec = server.records[cand.label]
        rec.key_previous = cand.next_key
        rec.consecutive_failures += 1
        if rec.consecutive_failures >= 2:
            rec.desynchronized = True
