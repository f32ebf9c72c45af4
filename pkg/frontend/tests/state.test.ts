import { describe, expect, it } from "vitest";

import { backoffDelayMs } from "../src/connection.js";
import { ChatState, HistoryRecord, messageFromRecord } from "../src/state.js";

function historyFixture(): HistoryRecord[] {
  return [
    {
      offset: 0,
      timestamp: 1000,
      direction: "inbound",
      payload_kind: "command",
      text: "?commands",
      user_id: "beth",
    },
    {
      offset: 1,
      timestamp: 1000,
      direction: "outbound",
      payload_kind: "system",
      text: "Hello! I am your assistant.",
    },
    {
      offset: 2,
      timestamp: 1000,
      direction: "outbound",
      payload_kind: "reply",
      text: "Here is what I understand: ...",
    },
    {
      offset: 3,
      timestamp: 2000,
      direction: "internal",
      payload_kind: "timer",
      text: "reminder_due 0.5",
    },
    {
      offset: 4,
      timestamp: 2000,
      direction: "outbound",
      payload_kind: "reminder",
      text: "Time check: 07:30 remaining in this session.",
    },
    {
      offset: 5,
      timestamp: 2500,
      direction: "inbound",
      payload_kind: "plain",
      text: "anyone else seeing this?",
      user_id: "amy",
    },
  ];
}

describe("history rendering", () => {
  it("maps records to view messages in offset order", () => {
    const state = new ChatState("beth");
    state.loadHistory(historyFixture());
    expect(state.messages.map((m) => m.author)).toEqual([
      "self",
      "bot",
      "bot",
      "bot",
      "other",
    ]);
  });

  it("drops internal records", () => {
    const state = new ChatState("beth");
    state.loadHistory(historyFixture());
    expect(state.messages.some((m) => m.text.includes("reminder_due"))).toBe(false);
  });

  it("gives reminders and suggestions their distinct kinds", () => {
    const reminder = messageFromRecord(historyFixture()[4], "beth");
    expect(reminder?.kind).toBe("reminder");
    const suggestion = messageFromRecord(
      {
        offset: 9,
        timestamp: 1,
        direction: "outbound",
        payload_kind: "suggestion",
        text: "While you explore - try the Landmark Tour",
      },
      "beth",
    );
    expect(suggestion?.kind).toBe("suggestion");
  });

  it("maps attachment refs", () => {
    const message = messageFromRecord(
      {
        offset: 7,
        timestamp: 1,
        direction: "inbound",
        payload_kind: "flow_reply",
        text: "",
        user_id: "beth",
        attachments: [
          { filename: "crash.png", media_kind: "image", content_ref: "att-1", size_bytes: 9 },
        ],
      },
      "beth",
    );
    expect(message?.attachments[0]).toEqual({
      filename: "crash.png",
      media_kind: "image",
      ref: "att-1",
      size_bytes: 9,
    });
  });
});

describe("live frames", () => {
  it("renders each server frame exactly once, in seq order", () => {
    const state = new ChatState("beth");
    expect(state.applyFrame({ type: "action", seq: 1, text: "a", kind: "reply" })).toBe(true);
    expect(state.applyFrame({ type: "action", seq: 1, text: "a", kind: "reply" })).toBe(false);
    expect(state.applyFrame({ type: "action", seq: 2, text: "b", kind: "reply" })).toBe(true);
    expect(state.messages.map((m) => m.text)).toEqual(["a", "b"]);
  });

  it("session ticks update the countdown without adding messages", () => {
    const state = new ChatState("beth");
    const changed = state.applyFrame({
      type: "action",
      seq: 1,
      kind: "session",
      session: { active: true, remaining_seconds: 125 },
    });
    expect(changed).toBe(false);
    expect(state.messages).toHaveLength(0);
    expect(state.countdownText()).toBe("02:05");
  });

  it("countdown hides when no session is active", () => {
    const state = new ChatState("beth");
    state.applyFrame({
      type: "action",
      seq: 1,
      kind: "session",
      session: { active: false, remaining_seconds: 0 },
    });
    expect(state.countdownText()).toBe("");
  });

  it("other testers' messages render as other", () => {
    const state = new ChatState("beth");
    state.applyFrame({ type: "message", seq: 1, user: "amy", text: "hi" });
    expect(state.messages[0].author).toBe("other");
    expect(state.messages[0].user).toBe("amy");
  });

  it("error frames surface as a banner", () => {
    const state = new ChatState("beth");
    state.applyFrame({ type: "error", seq: 1, error: "seq must increase" });
    expect(state.banner).toContain("seq must increase");
  });

  it("self echo appends immediately", () => {
    const state = new ChatState("beth");
    state.echoSelf("?report", []);
    expect(state.messages[0]).toMatchObject({ author: "self", text: "?report" });
  });

  it("reset clears messages so history can rebuild the identical view", () => {
    const state = new ChatState("beth");
    state.applyFrame({ type: "action", seq: 5, text: "x", kind: "reply" });
    state.reset();
    expect(state.messages).toHaveLength(0);
    // after reset a lower seq is acceptable again (fresh connection)
    expect(state.applyFrame({ type: "action", seq: 1, text: "y", kind: "reply" })).toBe(true);
  });
});

describe("reconnect backoff", () => {
  it("doubles up to the cap", () => {
    expect(backoffDelayMs(0)).toBe(1000);
    expect(backoffDelayMs(1)).toBe(2000);
    expect(backoffDelayMs(3)).toBe(8000);
    expect(backoffDelayMs(10)).toBe(15000);
  });
});
