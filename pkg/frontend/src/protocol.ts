// Wire protocol shared with the gateway. One JSON object per WebSocket
// text frame; seq strictly increasing per connection and direction.
// Mirrors docs/wire-protocol.md in the server repo.

export const PROTOCOL_VERSION = "1";

export type FrameType = "hello" | "message" | "action" | "error" | "ping";

export interface AttachmentRef {
  filename: string;
  media_kind: string;
  ref: string;
  size_bytes: number;
}

export interface SessionInfo {
  active: boolean;
  remaining_seconds: number;
}

export interface WireFrame {
  type: FrameType;
  seq: number;
  channel?: string;
  user?: string;
  text?: string;
  attachments?: AttachmentRef[];
  kind?: string;
  session?: SessionInfo;
  error?: string;
}

const FRAME_TYPES: ReadonlySet<string> = new Set([
  "hello",
  "message",
  "action",
  "error",
  "ping",
]);

export function encodeFrame(frame: WireFrame): string {
  const out: Record<string, unknown> = { type: frame.type, seq: frame.seq };
  if (frame.channel) out.channel = frame.channel;
  if (frame.user) out.user = frame.user;
  if (frame.text) out.text = frame.text;
  if (frame.attachments && frame.attachments.length > 0) {
    out.attachments = frame.attachments;
  }
  if (frame.kind !== undefined) out.kind = frame.kind;
  if (frame.session !== undefined) out.session = frame.session;
  if (frame.error !== undefined) out.error = frame.error;
  return JSON.stringify(out);
}

export class FrameError extends Error {}

export function decodeFrame(payload: string): WireFrame {
  let raw: unknown;
  try {
    raw = JSON.parse(payload);
  } catch (err) {
    throw new FrameError(`malformed frame: ${String(err)}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new FrameError("malformed frame: payload must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  if (typeof obj.type !== "string" || !FRAME_TYPES.has(obj.type)) {
    throw new FrameError(`unknown frame type: ${String(obj.type)}`);
  }
  if (typeof obj.seq !== "number" || !Number.isInteger(obj.seq) || obj.seq < 0) {
    throw new FrameError(`malformed frame: bad seq ${String(obj.seq)}`);
  }
  const frame: WireFrame = { type: obj.type as FrameType, seq: obj.seq };
  for (const key of ["channel", "user", "text", "kind", "error"] as const) {
    const value = obj[key];
    if (value !== undefined) {
      if (typeof value !== "string") {
        throw new FrameError(`malformed frame: ${key} must be a string`);
      }
      frame[key] = value;
    }
  }
  if (obj.attachments !== undefined) {
    if (!Array.isArray(obj.attachments)) {
      throw new FrameError("malformed frame: attachments must be a list");
    }
    frame.attachments = obj.attachments.map((entry) => {
      const a = entry as Record<string, unknown>;
      if (typeof a.filename !== "string" || typeof a.ref !== "string") {
        throw new FrameError("malformed frame: bad attachment entry");
      }
      return {
        filename: a.filename,
        media_kind: typeof a.media_kind === "string" ? a.media_kind : "file",
        ref: a.ref,
        size_bytes: typeof a.size_bytes === "number" ? a.size_bytes : 0,
      };
    });
  }
  if (obj.session !== undefined) {
    const s = obj.session as Record<string, unknown>;
    if (typeof s !== "object" || s === null) {
      throw new FrameError("malformed frame: session must be an object");
    }
    frame.session = {
      active: Boolean(s.active),
      remaining_seconds: typeof s.remaining_seconds === "number" ? s.remaining_seconds : 0,
    };
  }
  return frame;
}

export function helloFrame(channel: string, user: string): WireFrame {
  return { type: "hello", seq: 1, channel, user, text: PROTOCOL_VERSION };
}
