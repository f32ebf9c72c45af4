// Bootstrap: read channel/name from the query string (prompting as a
// fallback), connect, and keep the view in sync.

import { ChatConnection } from "./connection.js";
import { ChatState, HistoryRecord } from "./state.js";
import { ChatView } from "./view.js";
import { WireFrame } from "./protocol.js";

function param(name: string, fallback: string): string {
  const value = new URLSearchParams(window.location.search).get(name);
  if (value) return value;
  return window.prompt(`${name}?`, fallback) || fallback;
}

function main(): void {
  const channel = param("channel", "team-room");
  const user = param("name", "tester");
  const state = new ChatState(user);

  const connection = new ChatConnection(window.location.origin, channel, user, {
    onFrame(frame: WireFrame) {
      state.applyFrame(frame);
      view.render();
    },
    onHistory(records: HistoryRecord[]) {
      state.loadHistory(records);
      view.render();
    },
    onStatus(connected: boolean, detail: string) {
      state.connected = connected;
      state.banner = connected ? null : detail;
      view.render();
    },
  });

  const view = new ChatView(document, state, {
    send: (text, attachments) => connection.send(text, attachments),
    upload: (file) => connection.upload(file),
  });

  document.getElementById("channel-name")!.textContent = `#${channel}`;
  connection.open();
}

window.addEventListener("DOMContentLoaded", main);
