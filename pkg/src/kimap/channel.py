"""In-memory lossy/adversarial channel driving sessions between endpoints.

The channel is a four-flight pipe. An :class:`AdversaryAction` intercepts
one flight of one session: pass it, drop it, replace the payload, or replay
a recorded flight from an earlier session. The simulator itself never
mutates payloads; every transcript field is exactly what an endpoint
emitted or an action substituted, and a field is present only if its flight
was delivered.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .bits import HashSpec
from .protocol import (
    AuthResult,
    BroadcastAuth,
    Challenge,
    ServerState,
    TagAuth,
    TagNonce,
    TagState,
    server_begin,
    server_finalize,
    server_prepare,
    server_timeout,
    tag_respond_nonce,
    tag_verify_and_respond,
)

FLIGHT_CHALLENGE = 1
FLIGHT_NONCE = 2
FLIGHT_BROADCAST = 3
FLIGHT_TAG_AUTH = 4

_PAYLOAD_TYPES = {1: Challenge, 2: TagNonce, 3: BroadcastAuth, 4: TagAuth}
_DIRECTIONS = {1: "server->tag", 2: "tag->server", 3: "server->tag", 4: "tag->server"}

Payload = Union[Challenge, TagNonce, BroadcastAuth, TagAuth]


class ScheduleError(ValueError):
    """Malformed adversary action or schedule (unknown replay source,
    payload of the wrong shape for its flight, duplicate slot)."""


@dataclass(frozen=True)
class WireMessage:
    direction: str
    flight: int
    payload: Payload
    session_seq: int


@dataclass(frozen=True)
class AdversaryAction:
    """One interception. ``session_seq`` of ``None`` matches any session
    (useful when passing actions straight to :func:`run_session`)."""

    kind: str  # "pass" | "drop" | "replace" | "replay"
    flight: int
    session_seq: Optional[int] = None
    payload: Optional[Payload] = None
    source_session: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in ("pass", "drop", "replace", "replay"):
            raise ScheduleError(f"unknown action kind {self.kind!r}")
        if self.flight not in (1, 2, 3, 4):
            raise ScheduleError(f"flight must be 1-4, got {self.flight}")
        if self.kind == "replace":
            if not isinstance(self.payload, _PAYLOAD_TYPES[self.flight]):
                raise ScheduleError(
                    f"replace payload for flight {self.flight} must be "
                    f"{_PAYLOAD_TYPES[self.flight].__name__}")
        if self.kind == "replay" and self.source_session is None:
            raise ScheduleError("replay needs a source session")

    @classmethod
    def drop(cls, flight: int, session_seq: Optional[int] = None) -> "AdversaryAction":
        return cls("drop", flight, session_seq)

    @classmethod
    def replace(cls, flight: int, payload: Payload, session_seq: Optional[int] = None) -> "AdversaryAction":
        return cls("replace", flight, session_seq, payload=payload)

    @classmethod
    def replay(cls, flight: int, source_session: int, session_seq: Optional[int] = None) -> "AdversaryAction":
        return cls("replay", flight, session_seq, source_session=source_session)


@dataclass
class FaultSchedule:
    """Ordered interceptions for a multi-session run. Each (session, flight)
    slot may carry at most one action."""

    actions: list[AdversaryAction] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen = set()
        for a in self.actions:
            slot = (a.session_seq, a.flight)
            if slot in seen:
                raise ScheduleError(f"duplicate action for session {a.session_seq} flight {a.flight}")
            seen.add(slot)

    def for_session(self, seq: int) -> list[AdversaryAction]:
        return [a for a in self.actions if a.session_seq in (None, seq)]


@dataclass
class SessionTranscript:
    """Wire view of one session plus both endpoints' outcomes. Message
    fields hold the delivered payloads; ``None`` means the flight was lost.
    ``outcome_server`` is ``None`` when the session died before the server
    had an authentication decision to make (flight 1 or 2 lost)."""

    session_seq: int
    label: str
    x_s: Optional[Challenge] = None
    x_t: Optional[TagNonce] = None
    broadcast: Optional[BroadcastAuth] = None
    sigma_prime: Optional[TagAuth] = None
    tag_updated: bool = False
    outcome_server: Optional[AuthResult] = None

    @property
    def outcome_tag(self) -> str:
        return "updated" if self.tag_updated else "not_updated"

    @property
    def accepted(self) -> bool:
        return self.outcome_server is not None and self.outcome_server.accepted


Recording = dict[tuple[int, int], WireMessage]


def _deliver(flight: int, emitted: Payload, actions: list[AdversaryAction],
             session_seq: int, recording: Recording) -> Optional[Payload]:
    recording[(session_seq, flight)] = WireMessage(_DIRECTIONS[flight], flight, emitted, session_seq)
    action = next((a for a in actions if a.flight == flight), None)
    if action is None or action.kind == "pass":
        return emitted
    if action.kind == "drop":
        return None
    if action.kind == "replace":
        return action.payload
    source = recording.get((action.source_session, flight))
    if source is None:
        raise ScheduleError(
            f"replay source session {action.source_session} flight {flight} was never recorded")
    return source.payload


def run_session(server: ServerState, tag: TagState, actions: list[AdversaryAction],
                spec: HashSpec, *, session_seq: int = 1, label: str = "",
                recording: Optional[Recording] = None) -> SessionTranscript:
    """Drive the four flights once, applying each matching action.

    Drops and rejections are recorded outcomes, never exceptions. A lost
    flight 3 or 4 leaves the server with an unanswered session, which it
    treats exactly like an invalid answer (timeout path).
    """
    if recording is None:
        recording = {}
    t = SessionTranscript(session_seq=session_seq, label=label)

    challenge = server_begin(server)
    delivered_ch = _deliver(1, challenge, actions, session_seq, recording)
    t.x_s = delivered_ch
    if delivered_ch is None:
        return t

    nonce = tag_respond_nonce(tag, delivered_ch)
    delivered_nonce = _deliver(2, nonce, actions, session_seq, recording)
    t.x_t = delivered_nonce
    if delivered_nonce is None:
        tag.pending = None
        return t

    broadcast, pending = server_prepare(server, challenge.x_s, delivered_nonce.x_t, spec)
    delivered_bc = _deliver(3, broadcast, actions, session_seq, recording)
    t.broadcast = delivered_bc
    if delivered_bc is None:
        tag.pending = None
        t.outcome_server = server_timeout(server, pending)
        return t

    counter_before = tag.counter
    ta = tag_verify_and_respond(tag, delivered_ch.x_s, delivered_bc, spec)
    t.tag_updated = tag.counter != counter_before
    delivered_ta = _deliver(4, ta, actions, session_seq, recording)
    t.sigma_prime = delivered_ta
    if delivered_ta is None:
        t.outcome_server = server_timeout(server, pending)
        return t

    t.outcome_server = server_finalize(server, pending, delivered_ta)
    return t


def run_schedule(server: ServerState, tags: list[TagState], schedule: FaultSchedule,
                 n_sessions: int, spec: HashSpec,
                 labels: Optional[list[str]] = None) -> list[SessionTranscript]:
    """Run ``n_sessions`` sessions round-robin over ``tags``, applying the
    scheduled actions. Deterministic under fixed endpoint seeds."""
    if n_sessions < 1:
        raise ValueError("n_sessions must be >= 1")
    if labels is None:
        labels = list(server.records)
    recording: Recording = {}
    transcripts = []
    for seq in range(1, n_sessions + 1):
        idx = (seq - 1) % len(tags)
        transcripts.append(run_session(
            server, tags[idx], schedule.for_session(seq), spec,
            session_seq=seq, label=labels[idx], recording=recording))
    return transcripts


# ---------------------------------------------------------------------------
# Transcript dump format (consumed by the CLI reporter).
# ---------------------------------------------------------------------------

def transcript_line(t: SessionTranscript) -> str:
    """One session as a single structured-text record."""
    def enc(v) -> str:
        return "-" if v is None else v.to_text()

    bc = "-"
    if t.broadcast is not None:
        bc = ",".join(f"{c.sigma.to_text()}/{c.delta.to_text()}" for c in t.broadcast.candidates)
    server = "-" if t.outcome_server is None else t.outcome_server.outcome
    return (f"transcript session={t.session_seq} tag={t.label} "
            f"x_s={enc(t.x_s.x_s if t.x_s else None)} "
            f"x_t={enc(t.x_t.x_t if t.x_t else None)} "
            f"broadcast={bc} "
            f"sigma_prime={enc(t.sigma_prime.sigma_prime if t.sigma_prime else None)} "
            f"tag={t.outcome_tag} server={server}")
