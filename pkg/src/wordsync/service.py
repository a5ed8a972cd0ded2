"""Interactive decode sessions over a local stream socket and an equivalent
HTTP request/response mapping.

Wire format (socket): each message is a 4-byte big-endian length followed by
a UTF-8 JSON object ``{"kind": ..., "session_id": ..., "payload": {...}}``.
Kinds and payloads:

  hello          client->server  {"frames": {"phonemes": [...], "probs": [[...]]}
                                  or "frames_path": str, "config": {...}}
  candidates     server->client  {"position": int,
                                  "candidates": [{"word", "score", "rank"}]}
  select         client->server  {"word": str}
  auto_accepted  server->client  {"position": int, "word": str, "score": float}
  result         server->client  {"transcript": [str]}
  stats          server->client  {"transcript": [str], "selections":
                                  [{"position","word","rank","auto","gap"}]}
  stop           client->server  {}
  error          server->client  {"code": str, "message": str, "fatal": bool}

Every ``candidates`` message is answered by exactly one valid ``select`` (or
``stop``) before decoding proceeds; selecting a word that is not on the list
yields a non-fatal ``error`` and the same candidate list stays in force.

HTTP mapping: POST /api/sessions (hello body) -> {"session_id", "events"},
POST /api/sessions/<id>/select {"word"} -> {"events"}, POST
/api/sessions/<id>/stop -> {"events"}, GET /api/sessions/<id> -> summary.
``events`` carries the same message objects, batched up to the next
interaction point or the end of the session.
"""

from __future__ import annotations

import json
import math
import queue
import socket
import socketserver
import struct
import threading
import time
import uuid
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

import numpy as np

from wordsync.ctc import FrameProbs
from wordsync.decoder import (
    Candidate,
    DecodeConfig,
    InteractionOutcome,
    auto_accept_gap,
    interactive_decode,
)
from wordsync.fst import WeightedFst

_RENDEZVOUS_TIMEOUT = 300.0


def make_message(kind: str, session_id: str, **payload) -> dict:
    return {"kind": kind, "session_id": session_id, "payload": payload}


def frames_from_payload(payload: dict, base_dir: Optional[Path] = None) -> FrameProbs:
    inline = payload.get("frames")
    path = payload.get("frames_path")
    if (inline is None) == (path is None):
        raise ValueError("hello needs exactly one of 'frames' (inline) or 'frames_path'")
    if inline is not None:
        return FrameProbs.from_linear(inline["phonemes"], np.array(inline["probs"], dtype=np.float64))
    p = Path(path)
    if base_dir is not None and not p.is_absolute():
        p = base_dir / p
    return FrameProbs.load(p)


def config_from_payload(payload: dict, default: DecodeConfig) -> DecodeConfig:
    raw = payload.get("config")
    if not raw:
        return default
    allowed = {"beam_width", "fst_branch_cap", "candidate_cap", "phoneme_floor", "auto_accept_threshold"}
    unknown = set(raw) - allowed
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    merged = {**default.__dict__, **raw}
    return DecodeConfig(**merged)


class Session:
    """One decode; the chooser is a rendezvous between the decode thread and
    the transport that relays the user's selections."""

    def __init__(self, sid: str, graph: WeightedFst, frames: FrameProbs, config: DecodeConfig):
        self.sid = sid
        self.graph = graph
        self.frames = frames
        # auto-accept is applied here (so the transport can announce it);
        # the decoder itself always asks.
        self.auto_threshold = config.auto_accept_threshold
        self.config = replace(config, auto_accept_threshold=None)
        self.events: "queue.Queue[dict]" = queue.Queue()
        self._inbox: "queue.Queue[tuple[str, Optional[str]]]" = queue.Queue()
        self.lock = threading.Lock()
        self.status = "decoding"
        self.transcript: tuple[str, ...] = ()
        self.position = 0
        self.awaiting: Optional[list[Candidate]] = None
        self.selections: list[dict] = []
        self.last_activity = time.monotonic()
        self._thread = threading.Thread(target=self._run, name=f"decode-{sid}", daemon=True)

    def start(self) -> None:
        self._thread.start()

    # -- decode side -------------------------------------------------------

    def _chooser(self, candidates: list[Candidate]) -> InteractionOutcome:
        gap = candidates[1].score - candidates[0].score if len(candidates) > 1 else math.inf
        use_auto = self.auto_threshold is not None and math.isfinite(self.auto_threshold)
        if use_auto and auto_accept_gap(candidates, self.auto_threshold):
            word = candidates[0].word
            self._record(word, 0, True, gap)
            self.events.put(
                make_message(
                    "auto_accepted",
                    self.sid,
                    position=self.position,
                    word=word,
                    score=candidates[0].score,
                )
            )
            self.position += 1
            return InteractionOutcome(selected=word)
        self.awaiting = candidates
        self.status = "awaiting_selection"
        self.events.put(
            make_message(
                "candidates",
                self.sid,
                position=self.position,
                candidates=[{"word": c.word, "score": c.score, "rank": c.rank} for c in candidates],
            )
        )
        kind, word = self._inbox.get()
        self.awaiting = None
        self.status = "decoding"
        if kind == "stop":
            return InteractionOutcome(stop=True)
        rank = next(c.rank for c in candidates if c.word == word)
        self._record(word, rank, False, gap)
        self.position += 1
        return InteractionOutcome(selected=word)

    def _record(self, word: str, rank: int, auto: bool, gap: float) -> None:
        self.selections.append(
            {
                "position": self.position,
                "word": word,
                "rank": rank,
                "auto": auto,
                "gap": None if math.isinf(gap) else gap,
            }
        )

    def _run(self) -> None:
        try:
            result = interactive_decode(self.graph, self.frames, self._chooser, self.config)
            self.transcript = result.transcript
            self.status = "done"
            self.events.put(make_message("result", self.sid, transcript=list(result.transcript)))
            self.events.put(
                make_message(
                    "stats",
                    self.sid,
                    transcript=list(result.transcript),
                    selections=self.selections,
                )
            )
        except Exception as exc:  # noqa: BLE001 - report decode failures to the client
            self.status = "error"
            self.events.put(
                make_message("error", self.sid, code="internal", message=str(exc), fatal=True)
            )

    # -- transport side ------------------------------------------------------

    def submit_select(self, word: Optional[str]) -> Optional[dict]:
        """Relay a selection; returns a non-fatal error message when invalid."""
        with self.lock:
            self.last_activity = time.monotonic()
            if self.status in ("done", "error", "stopped"):
                return make_message(
                    "error", self.sid, code="finished", message="session is over", fatal=False
                )
            if self.awaiting is None:
                return make_message(
                    "error", self.sid, code="not_awaiting", message="no pending candidates", fatal=False
                )
            if word is None or word not in {c.word for c in self.awaiting}:
                return make_message(
                    "error",
                    self.sid,
                    code="unknown_word",
                    message=f"word {word!r} is not among the current candidates",
                    fatal=False,
                )
            self._inbox.put(("select", word))
            return None

    def submit_stop(self) -> Optional[dict]:
        with self.lock:
            self.last_activity = time.monotonic()
            if self.status in ("done", "error", "stopped"):
                return make_message(
                    "error", self.sid, code="finished", message="session is over", fatal=False
                )
            if self.awaiting is None:
                return make_message(
                    "error", self.sid, code="not_awaiting", message="no pending candidates", fatal=False
                )
            self._inbox.put(("stop", None))
            return None

    def drain_until_rendezvous(self, timeout: float = _RENDEZVOUS_TIMEOUT) -> list[dict]:
        """Collect events until the next point that needs client input, or
        the end of the session."""
        out: list[dict] = []
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                out.append(
                    make_message("error", self.sid, code="timeout", message="decode stalled", fatal=True)
                )
                return out
            try:
                msg = self.events.get(timeout=remaining)
            except queue.Empty:
                continue
            out.append(msg)
            kind = msg["kind"]
            if kind == "candidates" or kind == "stats":
                return out
            if kind == "error" and msg["payload"].get("fatal"):
                return out


class SessionManager:
    def __init__(self, graph: WeightedFst, default_config: DecodeConfig, idle_timeout: float = 600.0):
        self.graph = graph
        self.default_config = default_config
        self.idle_timeout = idle_timeout
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self._reaper = threading.Thread(target=self._reap, name="session-reaper", daemon=True)
        self._stop = threading.Event()
        self._reaper.start()

    def create(self, hello_payload: dict, base_dir: Optional[Path] = None) -> Session:
        frames = frames_from_payload(hello_payload, base_dir)
        config = config_from_payload(hello_payload, self.default_config)
        sid = uuid.uuid4().hex
        session = Session(sid, self.graph, frames, config)
        with self.lock:
            self.sessions[sid] = session
        session.start()
        return session

    def get(self, sid: str) -> Optional[Session]:
        with self.lock:
            return self.sessions.get(sid)

    def shutdown(self) -> None:
        self._stop.set()

    def _reap(self) -> None:
        while not self._stop.wait(min(self.idle_timeout / 4.0, 30.0)):
            now = time.monotonic()
            with self.lock:
                expired = [
                    s
                    for s in self.sessions.values()
                    if now - s.last_activity > self.idle_timeout
                ]
            for s in expired:
                if s.awaiting is not None:
                    s.submit_stop()
                with self.lock:
                    self.sessions.pop(s.sid, None)


# ---------------------------------------------------------------------------
# Socket transport
# ---------------------------------------------------------------------------


def send_frame(sock: socket.socket, message: dict) -> None:
    blob = json.dumps(message, sort_keys=True).encode("utf-8")
    sock.sendall(struct.pack(">I", len(blob)) + blob)


def recv_frame(sock: socket.socket) -> Optional[dict]:
    header = _recv_exact(sock, 4)
    if header is None:
        return None
    (length,) = struct.unpack(">I", header)
    body = _recv_exact(sock, length)
    if body is None:
        return None
    return json.loads(body.decode("utf-8"))


def _recv_exact(sock: socket.socket, n: int) -> Optional[bytes]:
    chunks = b""
    while len(chunks) < n:
        part = sock.recv(n - len(chunks))
        if not part:
            return None
        chunks += part
    return chunks


class _SocketHandler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        manager: SessionManager = self.server.manager  # type: ignore[attr-defined]
        sock = self.request
        session: Optional[Session] = None
        pump: Optional[threading.Thread] = None
        try:
            while True:
                try:
                    msg = recv_frame(sock)
                except (json.JSONDecodeError, UnicodeDecodeError, struct.error) as exc:
                    send_frame(sock, make_message("error", "", code="bad_message", message=str(exc), fatal=True))
                    return
                if msg is None:
                    return
                kind = msg.get("kind")
                payload = msg.get("payload") or {}
                if session is None:
                    if kind != "hello":
                        send_frame(
                            sock,
                            make_message("error", "", code="bad_message", message="expected hello", fatal=True),
                        )
                        return
                    try:
                        session = manager.create(payload)
                    except Exception as exc:  # noqa: BLE001 - malformed hello is a client error
                        send_frame(
                            sock,
                            make_message("error", "", code="bad_frames", message=str(exc), fatal=True),
                        )
                        return
                    pump = threading.Thread(
                        target=self._pump, args=(sock, session), name=f"pump-{session.sid}", daemon=True
                    )
                    pump.start()
                elif kind == "select":
                    err = session.submit_select(payload.get("word"))
                    if err is not None:
                        send_frame(sock, err)
                elif kind == "stop":
                    err = session.submit_stop()
                    if err is not None:
                        send_frame(sock, err)
                else:
                    send_frame(
                        sock,
                        make_message(
                            "error", session.sid, code="bad_message", message=f"unexpected kind {kind!r}", fatal=True
                        ),
                    )
                    return
        finally:
            if pump is not None:
                pump.join(timeout=_RENDEZVOUS_TIMEOUT)

    @staticmethod
    def _pump(sock: socket.socket, session: Session) -> None:
        while True:
            msg = session.events.get()
            try:
                send_frame(sock, msg)
            except OSError:
                return
            if msg["kind"] == "stats" or (msg["kind"] == "error" and msg["payload"].get("fatal")):
                return


class _SocketServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


# ---------------------------------------------------------------------------
# HTTP transport
# ---------------------------------------------------------------------------


class _HttpHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    @property
    def manager(self) -> SessionManager:
        return self.server.manager  # type: ignore[attr-defined]

    def _send_json(self, status: int, obj: dict) -> None:
        blob = json.dumps(obj, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(blob)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        return json.loads(self.rfile.read(length).decode("utf-8"))

    def do_OPTIONS(self) -> None:  # CORS preflight
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_POST(self) -> None:
        parts = [p for p in self.path.split("/") if p]
        try:
            body = self._read_body()
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            self._send_json(400, {"error": {"code": "bad_message", "message": str(exc)}})
            return
        if parts == ["api", "sessions"]:
            try:
                session = self.manager.create(body)
            except Exception as exc:  # noqa: BLE001
                self._send_json(400, {"error": {"code": "bad_frames", "message": str(exc)}})
                return
            events = session.drain_until_rendezvous()
            self._send_json(200, {"session_id": session.sid, "events": events})
            return
        if len(parts) == 4 and parts[:2] == ["api", "sessions"] and parts[3] in ("select", "stop"):
            session = self.manager.get(parts[2])
            if session is None:
                self._send_json(404, {"error": {"code": "unknown_session", "message": parts[2]}})
                return
            if parts[3] == "select":
                err = session.submit_select(body.get("word"))
            else:
                err = session.submit_stop()
            if err is not None:
                self._send_json(200, {"session_id": session.sid, "events": [err]})
                return
            events = session.drain_until_rendezvous()
            self._send_json(200, {"session_id": session.sid, "events": events})
            return
        self._send_json(404, {"error": {"code": "not_found", "message": self.path}})

    def do_GET(self) -> None:
        parts = [p for p in self.path.split("/") if p]
        if len(parts) == 3 and parts[:2] == ["api", "sessions"]:
            session = self.manager.get(parts[2])
            if session is None:
                self._send_json(404, {"error": {"code": "unknown_session", "message": parts[2]}})
                return
            self._send_json(
                200,
                {
                    "session_id": session.sid,
                    "status": session.status,
                    "position": session.position,
                    "transcript": list(session.transcript),
                },
            )
            return
        static_dir: Optional[Path] = self.server.static_dir  # type: ignore[attr-defined]
        if static_dir is not None:
            self._serve_static(static_dir)
            return
        self._send_json(404, {"error": {"code": "not_found", "message": self.path}})

    def _serve_static(self, root: Path) -> None:
        rel = self.path.split("?")[0].lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            self._send_json(404, {"error": {"code": "not_found", "message": self.path}})
            return
        blob = target.read_bytes()
        ctype = {
            ".html": "text/html",
            ".js": "text/javascript",
            ".css": "text/css",
            ".json": "application/json",
        }.get(target.suffix, "application/octet-stream")
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)


# ---------------------------------------------------------------------------
# Service wrapper
# ---------------------------------------------------------------------------


@dataclass
class SessionService:
    graph: WeightedFst
    host: str = "127.0.0.1"
    socket_port: int = 0
    http_port: int = 0
    default_config: Optional[DecodeConfig] = None
    idle_timeout: float = 600.0
    static_dir: Optional[str] = None

    def start(self) -> "SessionService":
        self.manager = SessionManager(
            self.graph, self.default_config or DecodeConfig(), self.idle_timeout
        )
        self._socket_server = _SocketServer((self.host, self.socket_port), _SocketHandler)
        self._socket_server.manager = self.manager  # type: ignore[attr-defined]
        self.socket_port = self._socket_server.server_address[1]
        self._http_server = ThreadingHTTPServer((self.host, self.http_port), _HttpHandler)
        self._http_server.manager = self.manager  # type: ignore[attr-defined]
        self._http_server.static_dir = Path(self.static_dir) if self.static_dir else None  # type: ignore[attr-defined]
        self.http_port = self._http_server.server_address[1]
        self._threads = [
            threading.Thread(target=self._socket_server.serve_forever, daemon=True),
            threading.Thread(target=self._http_server.serve_forever, daemon=True),
        ]
        for t in self._threads:
            t.start()
        return self

    def shutdown(self) -> None:
        self._socket_server.shutdown()
        self._http_server.shutdown()
        self._socket_server.server_close()
        self._http_server.server_close()
        self.manager.shutdown()


def serve_sessions(
    graph: WeightedFst,
    host: str = "127.0.0.1",
    socket_port: int = 7071,
    http_port: int = 7070,
    default_config: Optional[DecodeConfig] = None,
    idle_timeout: float = 600.0,
    static_dir: Optional[str] = None,
) -> None:
    """Blocking entry point used by the CLI."""
    service = SessionService(
        graph,
        host=host,
        socket_port=socket_port,
        http_port=http_port,
        default_config=default_config,
        idle_timeout=idle_timeout,
        static_dir=static_dir,
    ).start()
    print(f"socket protocol on {host}:{service.socket_port}, HTTP on {host}:{service.http_port}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        service.shutdown()


# ---------------------------------------------------------------------------
# Socket client (used by tests and scripted drivers)
# ---------------------------------------------------------------------------


class SocketSessionClient:
    """Minimal client for the stream-socket protocol."""

    def __init__(self, host: str, port: int, timeout: float = _RENDEZVOUS_TIMEOUT):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.session_id = ""

    def hello(self, frames: Optional[FrameProbs] = None, frames_path: Optional[str] = None, config: Optional[dict] = None):
        payload: dict = {}
        if frames is not None:
            payload["frames"] = {
                "phonemes": list(frames.phoneme_table),
                "probs": np.exp(frames.log_probs).tolist(),
            }
        if frames_path is not None:
            payload["frames_path"] = frames_path
        if config:
            payload["config"] = config
        send_frame(self.sock, make_message("hello", "", **payload))

    def select(self, word: str) -> None:
        send_frame(self.sock, make_message("select", self.session_id, word=word))

    def stop(self) -> None:
        send_frame(self.sock, make_message("stop", self.session_id))

    def recv(self) -> Optional[dict]:
        msg = recv_frame(self.sock)
        if msg is not None and msg.get("session_id"):
            self.session_id = msg["session_id"]
        return msg

    def close(self) -> None:
        self.sock.close()
