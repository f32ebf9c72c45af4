// Chat view state, kept free of DOM so it can be unit-tested.
// Nothing here is authoritative: the server's history endpoint rebuilds
// this state from scratch on every (re)connect.

import { AttachmentRef, SessionInfo, WireFrame } from "./protocol.js";

export type Author = "bot" | "self" | "other";
export type MessageKind =
  | "normal"
  | "prompt"
  | "reminder"
  | "suggestion"
  | "system";

export interface UiMessage {
  author: Author;
  user: string;
  text: string;
  kind: MessageKind;
  attachments: AttachmentRef[];
  timestamp: number;
}

export interface HistoryRecord {
  offset: number;
  timestamp: number;
  direction: "inbound" | "outbound" | "internal";
  payload_kind: string;
  text: string;
  user_id?: string;
  attachments?: {
    filename: string;
    media_kind: string;
    content_ref: string;
    size_bytes: number;
  }[];
}

const BOT_KINDS: Record<string, MessageKind> = {
  reply: "normal",
  prompt: "prompt",
  reminder: "reminder",
  suggestion: "suggestion",
  system: "system",
};

export class ChatState {
  messages: UiMessage[] = [];
  session: SessionInfo = { active: false, remaining_seconds: 0 };
  connected = false;
  banner: string | null = null;
  private lastServerSeq = -1;

  constructor(readonly selfName: string) {}

  reset(): void {
    this.messages = [];
    this.lastServerSeq = -1;
  }

  loadHistory(records: HistoryRecord[]): void {
    this.messages = [];
    for (const record of records) {
      const message = messageFromRecord(record, this.selfName);
      if (message) this.messages.push(message);
    }
  }

  // Returns true when the frame changed the message list.
  applyFrame(frame: WireFrame): boolean {
    if (frame.seq <= this.lastServerSeq) return false; // duplicate or replay
    this.lastServerSeq = frame.seq;
    if (frame.session) this.session = frame.session;

    if (frame.type === "action") {
      if (frame.kind === "session") return false; // countdown tick, not chat
      this.messages.push({
        author: "bot",
        user: frame.user ?? "bot",
        text: frame.text ?? "",
        kind: BOT_KINDS[frame.kind ?? "reply"] ?? "normal",
        attachments: frame.attachments ?? [],
        timestamp: Date.now(),
      });
      return true;
    }
    if (frame.type === "message") {
      this.messages.push({
        author: "other",
        user: frame.user ?? "?",
        text: frame.text ?? "",
        kind: "normal",
        attachments: frame.attachments ?? [],
        timestamp: Date.now(),
      });
      return true;
    }
    if (frame.type === "error") {
      this.banner = frame.error ?? "protocol error";
    }
    return false;
  }

  echoSelf(text: string, attachments: AttachmentRef[]): void {
    this.messages.push({
      author: "self",
      user: this.selfName,
      text,
      kind: "normal",
      attachments,
      timestamp: Date.now(),
    });
  }

  countdownText(): string {
    if (!this.session.active) return "";
    const total = Math.max(0, Math.round(this.session.remaining_seconds));
    const minutes = String(Math.floor(total / 60)).padStart(2, "0");
    const seconds = String(total % 60).padStart(2, "0");
    return `${minutes}:${seconds}`;
  }
}

export function messageFromRecord(
  record: HistoryRecord,
  selfName: string,
): UiMessage | null {
  if (record.direction === "internal") return null;
  const attachments: AttachmentRef[] = (record.attachments ?? []).map((a) => ({
    filename: a.filename,
    media_kind: a.media_kind,
    ref: a.content_ref,
    size_bytes: a.size_bytes,
  }));
  if (record.direction === "outbound") {
    return {
      author: "bot",
      user: "bot",
      text: record.text,
      kind: BOT_KINDS[record.payload_kind] ?? "normal",
      attachments,
      timestamp: record.timestamp,
    };
  }
  return {
    author: record.user_id === selfName ? "self" : "other",
    user: record.user_id ?? "?",
    text: record.text,
    kind: "normal",
    attachments,
    timestamp: record.timestamp,
  };
}
