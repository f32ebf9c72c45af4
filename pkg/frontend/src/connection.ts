// WebSocket connection with hello handshake, auto-retry, history reload,
// and attachment upload through the gateway's side endpoint.

import {
  AttachmentRef,
  PROTOCOL_VERSION,
  WireFrame,
  decodeFrame,
  encodeFrame,
  helloFrame,
} from "./protocol.js";
import { HistoryRecord } from "./state.js";

export interface ConnectionEvents {
  onFrame(frame: WireFrame): void;
  onHistory(records: HistoryRecord[]): void;
  onStatus(connected: boolean, detail: string): void;
}

export function backoffDelayMs(attempt: number): number {
  // 1s, 2s, 4s, ... capped at 15s
  return Math.min(1000 * 2 ** attempt, 15000);
}

export class ChatConnection {
  private ws: WebSocket | null = null;
  private seq = 1;
  private attempt = 0;
  private closed = false;
  private helloAcked = false;

  constructor(
    readonly httpBase: string,
    readonly channel: string,
    readonly user: string,
    readonly events: ConnectionEvents,
  ) {}

  get wsUrl(): string {
    const url = new URL(this.httpBase);
    url.protocol = url.protocol === "https:" ? "wss:" : "ws:";
    url.pathname = "/ws";
    return url.toString();
  }

  open(): void {
    this.closed = false;
    this.connect();
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }

  private connect(): void {
    this.helloAcked = false;
    this.events.onStatus(false, this.attempt === 0 ? "connecting" : "reconnecting");
    const ws = new WebSocket(this.wsUrl);
    this.ws = ws;
    ws.onopen = () => {
      this.seq = 1;
      ws.send(encodeFrame(helloFrame(this.channel, this.user)));
    };
    ws.onmessage = (event: MessageEvent) => {
      let frame: WireFrame;
      try {
        frame = decodeFrame(String(event.data));
      } catch {
        return; // drop undecodable frames; the server logs its side
      }
      if (!this.helloAcked) {
        if (frame.type === "hello" && frame.text === PROTOCOL_VERSION) {
          this.helloAcked = true;
          this.attempt = 0;
          this.events.onStatus(true, "connected");
          if (frame.session) this.events.onFrame(frame);
          void this.reloadHistory();
        } else {
          const detail = frame.error ?? "incompatible server";
          this.closed = frame.error?.includes("version mismatch") ?? false;
          this.events.onStatus(false, detail);
        }
        return;
      }
      this.events.onFrame(frame);
    };
    ws.onclose = () => {
      if (this.closed) return;
      const delay = backoffDelayMs(this.attempt);
      this.attempt += 1;
      this.events.onStatus(false, `disconnected, retrying in ${Math.round(delay / 1000)}s`);
      setTimeout(() => {
        if (!this.closed) this.connect();
      }, delay);
    };
  }

  async reloadHistory(): Promise<void> {
    const response = await fetch(
      `${this.httpBase}/channels/${encodeURIComponent(this.channel)}/history`,
    );
    if (!response.ok) return;
    const body = (await response.json()) as { records: HistoryRecord[] };
    this.events.onHistory(body.records);
  }

  // Returns false when the socket is not open (caller shows the status).
  send(text: string, attachments: AttachmentRef[] = []): boolean {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN || !this.helloAcked) {
      return false;
    }
    this.seq += 1;
    const frame: WireFrame = { type: "message", seq: this.seq, text };
    if (attachments.length > 0) frame.attachments = attachments;
    this.ws.send(encodeFrame(frame));
    return true;
  }

  async upload(file: File): Promise<AttachmentRef> {
    const response = await fetch(
      `${this.httpBase}/attachments?filename=${encodeURIComponent(file.name)}`,
      { method: "POST", body: file },
    );
    if (!response.ok) {
      throw new Error(`upload failed: ${response.status}`);
    }
    const body = (await response.json()) as {
      ref: string;
      filename: string;
      size_bytes: number;
      media_kind: string;
    };
    return {
      filename: body.filename,
      media_kind: body.media_kind,
      ref: body.ref,
      size_bytes: body.size_bytes,
    };
  }
}
