"""Mechanized privacy games: oracles, distinguishers, and advantage estimation.

Three games run against a live world (one server, ``n`` tags):

* ``ind`` -- can the adversary tell a tag's real session transcript from
  uniform random values of the same shape?
* ``forward`` -- after revealing a tag's current key, can it tell the
  *previous* instance's transcript from random?
* ``backward`` -- after revealing the key while being denied the challenge
  values that drive key updates, can it tell the *next* instance's
  transcript from random?

``ind2tag`` is the two-tag variant: the test material comes from one of two
challenge tags and the adversary guesses which.

The adversary is a :class:`Distinguisher` that touches the world only
through an :class:`OracleHandle`. Each oracle call is budgeted; the
``*_b`` oracles model the restricted view in which the server's true
challenge is consumed internally but withheld from the adversary (a decoy
``x_rand`` is shown instead). ``test`` may be called once per world: it
flips a coin and returns either the real recorded instance or uniform
bitstrings of identical shape.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Optional, Union

from .bits import BitString, HashSpec, Prng, prng_next, split, xor
from .channel import SessionTranscript
from .protocol import (
    BroadcastAuth,
    Challenge,
    PendingCandidate,
    PendingSession,
    ServerAuthCandidate,
    ServerState,
    SessionOrderError,
    TagAuth,
    TagNonce,
    TagState,
    auth_server_tag,
    key_update,
    keygen,
    make_candidate,
    server_begin,
    server_finalize,
    tag_respond_nonce,
    tag_verify_and_respond,
)


class GameError(Exception):
    pass


class BudgetExceededError(GameError):
    pass


class OracleMisuseError(GameError):
    """An oracle was called outside the active definition's allowed set or
    against the game's phase rules."""


class DoubleTestError(GameError):
    pass


_DEFINITION_NAMES = {1: "ind", 2: "forward", 3: "backward", "ind": "ind",
                     "forward": "forward", "backward": "backward", "ind2tag": "ind2tag"}

# Oracles each definition admits. The backward game admits plain execute as
# well: its stated adversary boundary counts execute queries, and the
# leak-control arm of the restriction experiment needs them.
_ALLOWED = {
    "ind": {"query_s", "query_t", "reply", "reply_prime", "execute", "test"},
    "forward": {"query_s", "query_t", "reply", "reply_prime", "execute", "reveal_secret", "test"},
    "backward": {"query_b", "query_t", "reply", "reply_b", "execute", "execute_b",
                 "reveal_secret", "test"},
    "ind2tag": {"query_s", "query_t", "reply", "reply_prime", "execute", "test"},
}

_TEST_OFFSET = {"ind": 0, "forward": -1, "backward": +1, "ind2tag": 0}


@dataclass(frozen=True)
class GameConfig:
    lam: int
    n: int
    e1: int = 16
    e2: int = 16
    r1: int = 64
    r2: int = 64
    rb: int = 64
    trials: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1 or self.trials < 1:
            raise ValueError("need n >= 1 and trials >= 1")
        if min(self.e1, self.e2, self.r1, self.r2, self.rb) < 0:
            raise ValueError("budgets must be >= 0")

    def session_horizon(self, definition: Union[int, str]) -> int:
        """Most full sessions the budgets allow in one world: the execute
        budget plus however many sessions the paired query/reply budgets can
        compose by hand."""
        name = _DEFINITION_NAMES[definition]
        if name == "backward":
            return self.e2 + min(self.rb, self.r1, self.r2)
        return self.e1 + min(self.r1, self.r2)


@dataclass(frozen=True)
class Quintuplet:
    """One completed instance as recorded inside the world (the true
    challenge included, whether or not the adversary saw it)."""

    x_s: BitString
    sigma: BitString
    delta: BitString
    x_t: BitString
    sigma_prime: BitString

    def fields(self) -> tuple[BitString, ...]:
        return (self.x_s, self.sigma, self.delta, self.x_t, self.sigma_prime)


@dataclass(frozen=True)
class RestrictedTranscript:
    """Adversary view of a restricted eavesdrop: everything except the true
    challenge, with the decoy ``x_rand`` in its place."""

    x_rand: BitString
    x_t: BitString
    sigma: BitString
    delta: BitString
    sigma_prime: BitString
    session_seq: int
    tag_updated: bool


@dataclass
class _PendingReply:
    x_s: BitString
    x_t: BitString
    candidate: PendingCandidate


class OracleHandle:
    """The adversary's sole access to a game world."""

    def __init__(self, server: ServerState, tags: list[TagState], spec: HashSpec,
                 cfg: GameConfig, definition: Union[int, str], aux_prng: Prng):
        self.server = server
        self.tags = tags
        self.spec = spec
        self.cfg = cfg
        self.definition = _DEFINITION_NAMES[definition]
        self.aux = aux_prng
        self.counters: dict[str, int] = {}
        self.test_used = False
        self.coin: Optional[int] = None
        self.challenge: Optional[int] = None
        self.challenge_pair: Optional[tuple[int, int]] = None
        self.revealed: set[int] = set()
        self.recorded: dict[int, dict[int, Quintuplet]] = {i: {} for i in range(len(tags))}
        self._pending_x_s: Optional[BitString] = None
        self._pending_reply: dict[int, _PendingReply] = {}
        self._labels = list(server.records)

    # -- bookkeeping -------------------------------------------------------

    @property
    def n_tags(self) -> int:
        return len(self.tags)

    def clone(self) -> "OracleHandle":
        """Deep-copy snapshot of the whole world (states, streams, counters)."""
        return copy.deepcopy(self)

    def choose_challenge(self, tag: int) -> None:
        if self.challenge is not None or self.challenge_pair is not None:
            raise OracleMisuseError("challenge already chosen")
        self._check_tag(tag)
        self.challenge = tag

    def choose_challenge_pair(self, tag_a: int, tag_b: int) -> None:
        if self.definition != "ind2tag":
            raise OracleMisuseError("challenge pairs exist only in the two-tag game")
        if self.challenge is not None or self.challenge_pair is not None:
            raise OracleMisuseError("challenge already chosen")
        self._check_tag(tag_a)
        self._check_tag(tag_b)
        if tag_a == tag_b:
            raise OracleMisuseError("challenge pair must be two distinct tags")
        self.challenge_pair = (tag_a, tag_b)

    def _check_tag(self, tag: int) -> None:
        if not 0 <= tag < len(self.tags):
            raise OracleMisuseError(f"no tag {tag}")

    def _check(self, oracle: str) -> None:
        if oracle not in _ALLOWED[self.definition]:
            raise OracleMisuseError(f"{oracle} is not in the {self.definition} game's oracle set")

    def _budget(self, oracle: str, limit: int) -> None:
        used = self.counters.get(oracle, 0)
        if used >= limit:
            raise BudgetExceededError(f"{oracle} budget of {limit} exhausted")
        self.counters[oracle] = used + 1

    # -- core steps (unbudgeted; composed by execute/execute_b) -------------

    def _query_s_core(self) -> BitString:
        x_s = server_begin(self.server).x_s
        self._pending_x_s = x_s
        return x_s

    def _query_b_core(self) -> tuple[BitString, BitString]:
        x_s = server_begin(self.server).x_s
        x_rand = server_begin(self.server).x_s
        self._pending_x_s = x_s
        return x_s, x_rand

    def _query_t_core(self, tag: int) -> BitString:
        return tag_respond_nonce(self.tags[tag]).x_t

    def _reply_core(self, tag: int, x_t: BitString) -> tuple[BitString, BitString]:
        if self._pending_x_s is None:
            raise SessionOrderError("reply needs a pending server challenge")
        x_s, self._pending_x_s = self._pending_x_s, None
        rec = self.server.records[self._labels[tag]]
        cand = make_candidate(self.spec, rec.counter, self.server.master, rec.key_current,
                              x_s, x_t, label=rec.label, slot="current")
        self._pending_reply[tag] = _PendingReply(x_s=x_s, x_t=x_t, candidate=cand)
        return cand.sigma, cand.delta

    def _reply_prime_core(self, tag: int, x_s: BitString, sigma: BitString,
                          delta: BitString) -> tuple[BitString, bool, Optional[object]]:
        state = self.tags[tag]
        if state.pending is None:
            raise SessionOrderError("reply' needs a pending tag nonce")
        x_t = state.pending.x_t
        period = state.counter
        bc = BroadcastAuth((ServerAuthCandidate(sigma, delta),))
        ta = tag_verify_and_respond(state, x_s, bc, self.spec)
        updated = state.counter != period
        pend = self._pending_reply.pop(tag, None)
        outcome = None
        if pend is not None:
            ps = PendingSession(x_s=pend.x_s, x_t=pend.x_t, candidates=(pend.candidate,))
            outcome = server_finalize(self.server, ps, ta)
        if updated:
            self.recorded[tag][period] = Quintuplet(
                x_s=x_s, sigma=sigma, delta=delta, x_t=x_t, sigma_prime=ta.sigma_prime)
        return ta.sigma_prime, updated, outcome

    # -- public oracles ------------------------------------------------------

    def query_s(self) -> BitString:
        """Fresh server challenge for the current period."""
        self._check("query_s")
        self._budget("query_s", self.cfg.r1)
        return self._query_s_core()

    def query_t(self, tag: int) -> BitString:
        """Fresh nonce from the named tag."""
        self._check("query_t")
        self._budget("query_t", self.cfg.r2)
        self._check_tag(tag)
        return self._query_t_core(tag)

    def query_b(self) -> BitString:
        """Starts a session whose true challenge stays inside the world;
        the adversary only gets a decoy."""
        self._check("query_b")
        self._budget("query_b", self.cfg.rb)
        _, x_rand = self._query_b_core()
        return x_rand

    def reply(self, tag: int, x_t: BitString) -> tuple[BitString, BitString]:
        """Server flight-3 computation for the named tag's current key."""
        self._check("reply")
        self._budget("reply", self.cfg.r1)
        self._check_tag(tag)
        return self._reply_core(tag, x_t)

    def reply_prime(self, tag: int, x_s: BitString, sigma: BitString, delta: BitString) -> BitString:
        """Tag flight-4 computation (verify, answer, ratchet on success);
        the answer is forwarded to the server."""
        self._check("reply_prime")
        self._budget("reply_prime", self.cfg.r2)
        self._check_tag(tag)
        sigma_prime, _, _ = self._reply_prime_core(tag, x_s, sigma, delta)
        return sigma_prime

    def reply_b(self, tag: int, x_rand: BitString, sigma: BitString, delta: BitString) -> BitString:
        """Like reply_prime, but the tag is fed the session's hidden true
        challenge; ``x_rand`` is only the adversary's view of flight 1."""
        self._check("reply_b")
        self._budget("reply_b", self.cfg.rb)
        self._check_tag(tag)
        pend = self._pending_reply.get(tag)
        if pend is None:
            raise SessionOrderError("reply_b needs a pending restricted session")
        sigma_prime, _, _ = self._reply_prime_core(tag, pend.x_s, sigma, delta)
        return sigma_prime

    def execute(self, tag: int) -> SessionTranscript:
        """Eavesdrop one full honest session."""
        self._check("execute")
        self._budget("execute", self.cfg.e1)
        self._check_tag(tag)
        period = self.tags[tag].counter
        x_s = self._query_s_core()
        x_t = self._query_t_core(tag)
        sigma, delta = self._reply_core(tag, x_t)
        sigma_prime, updated, outcome = self._reply_prime_core(tag, x_s, sigma, delta)
        return SessionTranscript(
            session_seq=period, label=self._labels[tag],
            x_s=Challenge(x_s), x_t=TagNonce(x_t),
            broadcast=BroadcastAuth((ServerAuthCandidate(sigma, delta),)),
            sigma_prime=TagAuth(sigma_prime), tag_updated=updated, outcome_server=outcome)

    def execute_b(self, tag: int) -> RestrictedTranscript:
        """Eavesdrop one honest session except the true challenge: the world
        still performs the real key update internally."""
        self._check("execute_b")
        self._budget("execute_b", self.cfg.e2)
        self._check_tag(tag)
        period = self.tags[tag].counter
        x_s, x_rand = self._query_b_core()
        x_t = self._query_t_core(tag)
        sigma, delta = self._reply_core(tag, x_t)
        sigma_prime, updated, _ = self._reply_prime_core(tag, x_s, sigma, delta)
        return RestrictedTranscript(x_rand=x_rand, x_t=x_t, sigma=sigma, delta=delta,
                                    sigma_prime=sigma_prime, session_seq=period,
                                    tag_updated=updated)

    def reveal_secret(self, tag: int) -> BitString:
        """The named tag's current key. Allowed on the challenge tag only."""
        self._check("reveal_secret")
        self._check_tag(tag)
        if self.challenge is None:
            raise OracleMisuseError("choose a challenge tag before revealing")
        if tag != self.challenge:
            raise OracleMisuseError("reveal_secret is allowed on the challenge tag only")
        self.revealed.add(tag)
        return self.tags[tag].key

    def test(self, tag: int, period: int) -> Quintuplet:
        """Single-use challenge: returns the real instance at the game's
        period offset, or five uniform strings of identical shape."""
        if self.test_used:
            raise DoubleTestError("test may be called only once")
        self._check("test")
        if self.definition == "ind2tag":
            raise OracleMisuseError("the two-tag game uses test_pair")
        if self.challenge is None or tag != self.challenge:
            raise OracleMisuseError("test must target the chosen challenge tag")
        target = period + _TEST_OFFSET[self.definition]
        quint = self.recorded[tag].get(target)
        if quint is None:
            raise OracleMisuseError(f"instance {target} of tag {tag} was never materialized")
        self.test_used = True
        self.coin = prng_next(self.aux, 1).value
        if self.coin == 1:
            return quint
        return self._random_like(quint)

    def test_pair(self, tag_a: int, tag_b: int, period: int) -> Quintuplet:
        """Two-tag variant: the material is one challenge tag's real
        instance; the adversary guesses which tag produced it."""
        if self.test_used:
            raise DoubleTestError("test may be called only once")
        self._check("test")
        if self.definition != "ind2tag":
            raise OracleMisuseError("test_pair exists only in the two-tag game")
        if self.challenge_pair != (tag_a, tag_b):
            raise OracleMisuseError("test_pair must target the chosen challenge pair")
        quints = (self.recorded[tag_a].get(period), self.recorded[tag_b].get(period))
        if quints[0] is None or quints[1] is None:
            raise OracleMisuseError(f"instance {period} missing for a challenge tag")
        self.test_used = True
        self.coin = prng_next(self.aux, 1).value
        return quints[self.coin]

    def _random_like(self, quint: Quintuplet) -> Quintuplet:
        vals = [prng_next(self.aux, len(f)) for f in quint.fields()]
        return Quintuplet(*vals)


# ---------------------------------------------------------------------------
# Distinguishers.
# ---------------------------------------------------------------------------

class Distinguisher:
    """A strategy: ``interact`` drives the oracles through the learning and
    challenge phases (and must call ``test`` exactly once); ``guess``
    returns the bit."""

    name = "abstract"

    def reset(self, prng: Prng) -> None:
        self.prng = prng

    def interact(self, oracles: OracleHandle) -> None:
        raise NotImplementedError

    def guess(self) -> int:
        raise NotImplementedError


class RandomGuess(Distinguisher):
    """Null strategy for calibration: drives the phases, ignores everything,
    flips its own coin."""

    name = "random-guess"

    def interact(self, h: OracleHandle) -> None:
        flavor = h.execute_b if h.definition == "backward" else h.execute
        if h.definition == "ind2tag":
            a, b = h.n_tags - 2, h.n_tags - 1
            h.choose_challenge_pair(a, b)
            for t in range(h.n_tags):
                if t not in (a, b):
                    flavor(t)
            flavor(a)
            flavor(b)
            h.test_pair(a, b, 1)
            return
        c = h.n_tags - 1
        h.choose_challenge(c)
        for t in range(h.n_tags):
            if t != c:
                flavor(t)
        if h.definition == "ind":
            flavor(c)
            h.test(c, 1)
        elif h.definition == "forward":
            flavor(c)
            flavor(c)
            h.test(c, 2)
        else:
            flavor(c)
            flavor(c)
            h.test(c, 1)

    def guess(self) -> int:
        return prng_next(self.prng, 1).value


class KeyKnowledge(Distinguisher):
    """Traces a tag through its revealed key.

    Reveal the challenge tag's key, evolve it forward through every
    subsequently observed transcript whose challenge is visible, then check
    whether the test material is consistent with the evolved key (the
    server-authenticator recomputes under it). Consistent means "this is the
    tag's real instance".

    With restricted eavesdrops the update-driving challenge is missing, the
    key cannot be evolved, and the check degenerates to chance. The leaky
    variant substitutes full eavesdrops and wins outright, demonstrating
    that withholding the challenge is what buys backward security.
    """

    def __init__(self, leaky: bool = False):
        self.leaky = leaky
        self.name = "key-knowledge-leaky" if leaky else "key-knowledge"
        self.match = False

    def _eavesdrop(self, h: OracleHandle, tag: int):
        if h.definition == "backward" and not self.leaky:
            return h.execute_b(tag)
        return h.execute(tag)

    @staticmethod
    def _view(transcript) -> tuple[Optional[BitString], BitString]:
        """(visible challenge or None, delta) of an observed transcript."""
        if isinstance(transcript, RestrictedTranscript):
            return None, transcript.delta
        return transcript.x_s.x_s, transcript.broadcast.candidates[0].delta

    @staticmethod
    def _evolve(spec: HashSpec, key: BitString, x_s: Optional[BitString],
                delta: BitString) -> BitString:
        if x_s is None:
            return key  # update computation is blocked without the challenge
        x = xor(delta, key)
        _, k_dprime = split(key)
        _, x_dprime = split(x)
        return key_update(spec, k_dprime, x_dprime, x_s)

    @staticmethod
    def _consistent(spec: HashSpec, key: BitString, material: Quintuplet) -> bool:
        x_hat = xor(material.delta, key)
        k_prime, _ = split(key)
        sigma_hat = auth_server_tag(spec, k_prime, x_hat, material.x_s, material.x_t)
        return sigma_hat == material.sigma

    def interact(self, h: OracleHandle) -> None:
        self.match = False
        c = h.n_tags - 1
        h.choose_challenge(c)
        for t in range(h.n_tags):
            if t != c:
                self._eavesdrop(h, t)
        if h.definition == "backward":
            self._eavesdrop(h, c)                   # instance 1
            key = h.reveal_secret(c)                # key of period 2
            seen = self._eavesdrop(h, c)            # instance 2
            key = self._evolve(h.spec, key, *self._view(seen))
            self._eavesdrop(h, c)                   # instance 3, the tested one
            material = h.test(c, 2)
            self.match = self._consistent(h.spec, key, material)
        elif h.definition == "forward":
            self._eavesdrop(h, c)                   # instance 1
            self._eavesdrop(h, c)                   # instance 2, the tested one
            key = h.reveal_secret(c)                # key of period 3
            material = h.test(c, 3)
            self.match = self._consistent(h.spec, key, material)
        else:
            raise OracleMisuseError("key-knowledge needs a reveal oracle; run it on the "
                                    "forward or backward game")

    def guess(self) -> int:
        return 1 if self.match else 0


DISTINGUISHERS = {
    "random-guess": RandomGuess,
    "key-knowledge": lambda: KeyKnowledge(leaky=False),
    "key-knowledge-leaky": lambda: KeyKnowledge(leaky=True),
}


def make_distinguisher(name: str) -> Distinguisher:
    try:
        factory = DISTINGUISHERS[name]
    except KeyError:
        raise ValueError(f"unknown distinguisher {name!r} "
                         f"(have: {', '.join(sorted(DISTINGUISHERS))})") from None
    return factory()


# ---------------------------------------------------------------------------
# Running games.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GameResult:
    definition: str
    distinguisher: str
    cfg: GameConfig
    wins: int
    trials: int

    @property
    def win_rate(self) -> float:
        return self.wins / self.trials

    @property
    def advantage(self) -> float:
        return abs(self.win_rate - 0.5)

    @property
    def ci95(self) -> float:
        return wilson_halfwidth(self.wins, self.trials)

    def to_line(self) -> str:
        c = self.cfg
        return (f"gameresult definition={self.definition} distinguisher={self.distinguisher} "
                f"lambda={c.lam} n={c.n} e1={c.e1} e2={c.e2} r1={c.r1} r2={c.r2} rb={c.rb} "
                f"trials={self.trials} wins={self.wins} advantage={self.advantage:.6f} "
                f"ci95={self.ci95:.6f} seed={c.seed}")


def wilson_halfwidth(wins: int, trials: int, z: float = 1.959964) -> float:
    """Half-width of the 95% Wilson score interval for the win rate."""
    p = wins / trials
    denom = 1.0 + z * z / trials
    return z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom


# aux/distinguisher PRNG streams live far from the per-trial world streams,
# and differ per definition so repeated games on one seed stay independent
_AUX_STREAM_BASE = 1 << 32
_DIST_STREAM_BASE = 1 << 33
_DEF_STRIDE = 1 << 28


def _def_index(name: str) -> int:
    return ("ind", "forward", "backward", "ind2tag").index(name)


def new_world(cfg: GameConfig, definition: Union[int, str], spec: HashSpec,
              trial: int = 0) -> OracleHandle:
    """One fresh game world, fully determined by (cfg.seed, definition, trial)."""
    name = _DEFINITION_NAMES[definition]
    server, tags = keygen(cfg.lam, cfg.n, Prng(cfg.seed, trial))
    aux = Prng(cfg.seed, _AUX_STREAM_BASE + _def_index(name) * _DEF_STRIDE + trial)
    return OracleHandle(server, tags, spec, cfg, name, aux)


def run_game(definition: Union[int, str], cfg: GameConfig, d: Distinguisher,
             spec: Optional[HashSpec] = None) -> GameResult:
    """Play ``cfg.trials`` independent worlds and tally the distinguisher's
    correct guesses against the test coin."""
    name = _DEFINITION_NAMES[definition]
    if spec is None:
        spec = HashSpec.toy(cfg.lam) if cfg.lam <= 32 else HashSpec.production(cfg.lam)
    wins = 0
    for trial in range(cfg.trials):
        handle = new_world(cfg, name, spec, trial)
        d.reset(Prng(cfg.seed, _DIST_STREAM_BASE + _def_index(name) * _DEF_STRIDE + trial))
        d.interact(handle)
        if not handle.test_used:
            raise GameError(f"distinguisher {d.name} never called test")
        if d.guess() == handle.coin:
            wins += 1
    return GameResult(definition=name, distinguisher=d.name, cfg=cfg,
                      wins=wins, trials=cfg.trials)


# ---------------------------------------------------------------------------
# The one-time-pad bijection check.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BijectionReport:
    k: int
    mask: BitString
    distinct_images: int
    bijection: bool
    pairs: Optional[tuple[tuple[int, int], ...]] = None

    def to_line(self) -> str:
        return (f"lemma1 k={self.k} mask={self.mask.to_text()} "
                f"distinct={self.distinct_images}/{2 ** self.k} "
                f"bijection={'yes' if self.bijection else 'no'}")


def lemma1_bijection_check(k: int, mask: Optional[BitString] = None,
                           prng: Optional[Prng] = None) -> BijectionReport:
    """Exhaustively verify that for fixed ``L``, ``y -> L XOR y`` is a
    bijection on k-bit strings (the one-time-pad property behind delta)."""
    if not 1 <= k <= 16:
        raise ValueError("k must be in 1..16 (the check is exhaustive)")
    if mask is None:
        mask = prng_next(prng if prng is not None else Prng(0, 0), k)
    if len(mask) != k:
        raise ValueError("mask width must equal k")
    images = {xor(mask, BitString(y, k)).value for y in range(2 ** k)}
    pairs = None
    if k <= 4:
        pairs = tuple((xor(mask, BitString(y, k)).value, y) for y in range(2 ** k))
    return BijectionReport(k=k, mask=mask, distinct_images=len(images),
                        bijection=len(images) == 2 ** k, pairs=pairs)
