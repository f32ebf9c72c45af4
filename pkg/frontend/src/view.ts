// Thin DOM layer: renders ChatState into the page and wires the composer.

import { AttachmentRef } from "./protocol.js";
import { ChatState, UiMessage } from "./state.js";

export interface ViewHooks {
  send(text: string, attachments: AttachmentRef[]): boolean;
  upload(file: File): Promise<AttachmentRef>;
}

export class ChatView {
  private list: HTMLElement;
  private countdown: HTMLElement;
  private banner: HTMLElement;
  private input: HTMLInputElement;
  private fileInput: HTMLInputElement;
  private pendingAttachments: AttachmentRef[] = [];
  private pendingLabel: HTMLElement;

  constructor(
    root: Document,
    readonly state: ChatState,
    readonly hooks: ViewHooks,
  ) {
    this.list = root.getElementById("messages")!;
    this.countdown = root.getElementById("countdown")!;
    this.banner = root.getElementById("banner")!;
    this.input = root.getElementById("composer-input") as HTMLInputElement;
    this.fileInput = root.getElementById("composer-file") as HTMLInputElement;
    this.pendingLabel = root.getElementById("pending-attachments")!;

    root.getElementById("composer-form")!.addEventListener("submit", (event) => {
      event.preventDefault();
      this.submit();
    });
    this.fileInput.addEventListener("change", () => void this.attachSelected());
  }

  private submit(): void {
    const text = this.input.value.trim();
    if (!text && this.pendingAttachments.length === 0) return;
    const attachments = this.pendingAttachments;
    if (!this.hooks.send(text, attachments)) {
      this.showBanner("not connected - message not sent");
      return;
    }
    this.state.echoSelf(text, attachments);
    this.pendingAttachments = [];
    this.input.value = "";
    this.render();
  }

  private async attachSelected(): Promise<void> {
    const file = this.fileInput.files?.[0];
    if (!file) return;
    try {
      const ref = await this.hooks.upload(file);
      this.pendingAttachments.push(ref);
      this.render();
    } catch (err) {
      this.showBanner(String(err));
    } finally {
      this.fileInput.value = "";
    }
  }

  showBanner(text: string | null): void {
    this.banner.textContent = text ?? "";
    this.banner.hidden = !text;
  }

  render(): void {
    this.list.replaceChildren(
      ...this.state.messages.map((message) => renderMessage(message)),
    );
    this.list.scrollTop = this.list.scrollHeight;

    const clock = this.state.countdownText();
    this.countdown.textContent = clock ? `session ${clock}` : "";
    this.countdown.hidden = !clock;

    this.pendingLabel.textContent =
      this.pendingAttachments.length > 0
        ? this.pendingAttachments.map((a) => a.filename).join(", ")
        : "";
    this.showBanner(this.state.banner);
  }
}

function renderMessage(message: UiMessage): HTMLElement {
  const item = document.createElement("div");
  item.className = `msg msg-${message.author} msg-kind-${message.kind}`;
  const who = document.createElement("span");
  who.className = "msg-user";
  who.textContent = message.author === "bot" ? "bot" : message.user;
  const body = document.createElement("span");
  body.className = "msg-text";
  body.textContent = message.text;
  item.append(who, body);
  for (const attachment of message.attachments) {
    const link = document.createElement("a");
    link.className = "msg-attachment";
    link.href = `/attachments/${encodeURIComponent(attachment.ref)}`;
    link.textContent = `📎 ${attachment.filename}`;
    item.append(link);
  }
  return item;
}
