"""WebSocket gateway: live chat in, bot actions out, everything audited.

Each channel gets one asyncio lock so the engine sees a totally ordered
event stream per channel regardless of how many testers are connected.
A ticker task feeds wall-clock time into the engine so reminders and
suggestions fire while testers stay quiet. History and attachments ride
on side HTTP endpoints to keep chat frames small.
"""

from __future__ import annotations

import asyncio
import logging
import re
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles

from .config import EngineConfig
from .engine import Engine
from .eventlog import EventStore, FileEventStore
from .knowledge import Catalog, load_catalog, load_default_catalog
from .messages import Attachment, InboundMessage, MediaKind, OutboundAction
from .wire import (
    PROTOCOL_VERSION,
    AttachmentRef,
    FrameType,
    WireFrame,
    decode_frame,
    encode_frame,
    error_frame,
)

log = logging.getLogger(__name__)

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".gif", ".webp", ".bmp"}


def _now_ms() -> int:
    return int(time.time() * 1000)


def _guess_media_kind(filename: str) -> str:
    return "image" if Path(filename).suffix.lower() in _IMAGE_SUFFIXES else "file"


@dataclass
class Connection:
    ws: WebSocket
    channel: str
    user: str
    out_seq: int = 0
    last_in_seq: int = -1

    async def send(self, frame: WireFrame) -> None:
        self.out_seq += 1
        stamped = WireFrame(
            type=frame.type,
            seq=self.out_seq,
            channel=frame.channel,
            user=frame.user,
            text=frame.text,
            attachments=frame.attachments,
            kind=frame.kind,
            session=frame.session,
            error=frame.error,
        )
        await self.ws.send_text(encode_frame(stamped).decode("utf-8"))


class GatewayState:
    def __init__(self, config: EngineConfig, store: EventStore, catalog: Catalog):
        self.config = config
        self.store = store
        self.catalog = catalog
        self.engine = Engine(config, store, catalog)
        self.locks: dict[str, asyncio.Lock] = {}
        self.connections: dict[str, list[Connection]] = {}
        self.attachment_count = 0
        self.ticker: asyncio.Task | None = None

    def lock(self, channel: str) -> asyncio.Lock:
        return self.locks.setdefault(channel, asyncio.Lock())

    def session_payload(self, channel: str):
        state = self.engine.channel(channel)
        session = state.active_session
        if session is None:
            return WireFrame.session_payload(False, 0)
        remaining = max(0.0, (session.ends_at - _now_ms()) / 1000)
        return WireFrame.session_payload(True, round(remaining, 1))

    async def broadcast_actions(self, channel: str, actions: list[OutboundAction]) -> None:
        if not actions:
            return
        payload = self.session_payload(channel)
        for action in actions:
            frame = WireFrame(
                type=FrameType.ACTION,
                seq=0,
                channel=channel,
                user="bot",
                text=action.text,
                kind=action.kind.value,
                session=payload,
            )
            await self._fanout(channel, frame)

    async def relay_message(self, channel: str, sender: Connection, frame: WireFrame) -> None:
        relayed = WireFrame(
            type=FrameType.MESSAGE,
            seq=0,
            channel=channel,
            user=sender.user,
            text=frame.text,
            attachments=frame.attachments,
        )
        await self._fanout(channel, relayed, skip=sender)

    async def _fanout(
        self, channel: str, frame: WireFrame, skip: Connection | None = None
    ) -> None:
        for conn in list(self.connections.get(channel, [])):
            if conn is skip:
                continue
            try:
                await conn.send(frame)
            except Exception:  # connection died mid-send; reader will clean up
                log.debug("dropping dead connection on %s", channel, exc_info=True)

    async def tick_loop(self) -> None:
        while True:
            await asyncio.sleep(self.config.tick_interval_s)
            now = _now_ms()
            for channel in list(self.locks):
                state = self.engine.channel(channel)
                if state.timers is None or not state.timers.session.active:
                    continue
                async with self.lock(channel):
                    actions = self.engine.advance_clock(channel, max(now, state.last_timestamp))
                    await self.broadcast_actions(channel, actions)
                # keep countdowns fresh even when nothing fired
                payload = self.session_payload(channel)
                tick = WireFrame(
                    type=FrameType.ACTION,
                    seq=0,
                    channel=channel,
                    user="bot",
                    kind="session",
                    session=payload,
                )
                await self._fanout(channel, tick)


def create_app(
    config: EngineConfig | None = None,
    store: EventStore | None = None,
    catalog: Catalog | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    config = config or EngineConfig()
    if store is None:
        store = FileEventStore(config.store_path)
    if catalog is None:
        catalog = (
            load_catalog(config.catalog_path)
            if config.catalog_path
            else load_default_catalog()
        )
    gateway = GatewayState(config, store, catalog)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        gateway.ticker = asyncio.create_task(gateway.tick_loop())
        try:
            yield
        finally:
            gateway.ticker.cancel()

    app = FastAPI(title="etbot gateway", lifespan=lifespan)
    app.state.gateway = gateway

    @app.get("/health")
    async def health():
        return {"status": "ok", "protocol_version": PROTOCOL_VERSION}

    @app.get("/channels/{channel_id}/history")
    async def history(channel_id: str):
        records = gateway.store.query(channel_id=channel_id)
        return {"records": [r.to_dict() for r in records]}

    @app.post("/attachments")
    async def upload_attachment(request: Request, filename: str = "upload.bin"):
        body = await request.body()
        if not body:
            raise HTTPException(status_code=400, detail="empty upload")
        safe = re.sub(r"[^A-Za-z0-9._-]", "_", filename) or "upload.bin"
        gateway.attachment_count += 1
        ref = f"att-{gateway.attachment_count}-{safe}"
        directory = Path(gateway.config.attachments_dir)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / ref).write_bytes(body)
        return {
            "ref": ref,
            "filename": filename,
            "size_bytes": len(body),
            "media_kind": _guess_media_kind(filename),
        }

    @app.get("/attachments/{ref}")
    async def fetch_attachment(ref: str):
        path = Path(gateway.config.attachments_dir) / ref
        if "/" in ref or not path.is_file():
            raise HTTPException(status_code=404, detail="no such attachment")
        return FileResponse(path)

    @app.websocket("/ws")
    async def websocket_endpoint(ws: WebSocket):
        await ws.accept()
        conn = await _handshake(gateway, ws)
        if conn is None:
            return
        channel_conns = gateway.connections.setdefault(conn.channel, [])
        channel_conns.append(conn)
        try:
            await _read_loop(gateway, conn)
        except WebSocketDisconnect:
            pass
        finally:
            if conn in channel_conns:
                channel_conns.remove(conn)

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


async def _handshake(gateway: GatewayState, ws: WebSocket) -> Connection | None:
    raw = await ws.receive_text()
    frame = decode_frame(raw, gateway.config.max_frame_bytes)
    if frame.type is not FrameType.HELLO or frame.error is not None:
        await ws.send_text(
            encode_frame(error_frame("expected a hello frame first", seq=1)).decode("utf-8")
        )
        await ws.close(code=1002)
        return None
    if frame.text != PROTOCOL_VERSION:
        diag = f"protocol version mismatch: server speaks {PROTOCOL_VERSION}, client sent {frame.text!r}"
        await ws.send_text(encode_frame(error_frame(diag, seq=1)).decode("utf-8"))
        await ws.close(code=1002)
        return None
    if not frame.channel or not frame.user:
        await ws.send_text(
            encode_frame(error_frame("hello needs channel and user", seq=1)).decode("utf-8")
        )
        await ws.close(code=1002)
        return None
    conn = Connection(ws=ws, channel=frame.channel, user=frame.user, last_in_seq=frame.seq)
    ack = WireFrame(
        type=FrameType.HELLO,
        seq=0,
        channel=frame.channel,
        user="bot",
        text=PROTOCOL_VERSION,
        session=gateway.session_payload(frame.channel),
    )
    await conn.send(ack)
    return conn


async def _read_loop(gateway: GatewayState, conn: Connection) -> None:
    while True:
        raw = await conn.ws.receive_text()
        frame = decode_frame(raw, gateway.config.max_frame_bytes)
        if frame.error is not None:
            await conn.send(error_frame(frame.error))
            continue
        if frame.seq <= conn.last_in_seq:
            await conn.send(
                error_frame(
                    f"seq must increase: got {frame.seq} after {conn.last_in_seq}"
                )
            )
            continue
        conn.last_in_seq = frame.seq

        if frame.type is FrameType.PING:
            await conn.send(WireFrame(type=FrameType.PING, seq=0, channel=conn.channel))
            continue
        if frame.type is FrameType.HELLO:
            await conn.send(error_frame("already said hello"))
            continue
        if frame.type is not FrameType.MESSAGE:
            await conn.send(error_frame(f"client cannot send {frame.type.value} frames"))
            continue

        attachments = tuple(
            Attachment(
                filename=a.filename,
                media_kind=MediaKind.IMAGE if a.media_kind == "image" else MediaKind.FILE,
                content_ref=a.ref,
                size_bytes=a.size_bytes,
            )
            for a in frame.attachments
        )
        if not frame.text and not attachments:
            await conn.send(error_frame("message needs text or an attachment"))
            continue

        async with gateway.lock(conn.channel):
            state = gateway.engine.channel(conn.channel)
            now = max(_now_ms(), state.last_timestamp)
            msg = InboundMessage(
                channel_id=conn.channel,
                user_id=conn.user,
                text=frame.text,
                timestamp=now,
                attachments=attachments,
            )
            actions = gateway.engine.handle_message(msg)
            await gateway.relay_message(conn.channel, conn, frame)
            await gateway.broadcast_actions(conn.channel, actions)


def serve(
    config: EngineConfig,
    ui_dir: str | Path | None = None,
) -> None:  # pragma: no cover - thin uvicorn wrapper
    import uvicorn

    app = create_app(config, ui_dir=ui_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
