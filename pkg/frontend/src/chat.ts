/**
 * Chat view state machine. Framework-free: the controller mutates a plain
 * state object and invokes `onChange` after every transition, so it can be
 * driven headlessly in tests and bound to the DOM in main.ts.
 *
 * Consent rules: no message can be sent before consent is explicitly set,
 * and consent freezes once the first message is away (one session, one
 * consent decision).
 */

import { ApiClient, ApiError, Reference } from "./api.js";

export interface ChatMessage {
  role: "user" | "assistant" | "error";
  text: string;
  references: Reference[];
  degraded?: boolean;
  retryable?: boolean;
}

export interface ChatViewState {
  sessionId: string | null;
  messages: ChatMessage[];
  consent: boolean | null; // null until the user explicitly chooses
  pending: boolean;
}

export class ConsentNotSetError extends Error {
  constructor() {
    super("set the consent toggle before sending a message");
  }
}

export class ConsentLockedError extends Error {
  constructor() {
    super("consent is fixed for the rest of the session");
  }
}

export class ChatController {
  readonly state: ChatViewState = {
    sessionId: null,
    messages: [],
    consent: null,
    pending: false,
  };

  private lastFailedText: string | null = null;

  constructor(
    private api: ApiClient,
    private onChange: (state: ChatViewState) => void = () => {},
  ) {}

  get consentLocked(): boolean {
    return this.state.messages.some((m) => m.role === "user");
  }

  setConsent(consent: boolean): void {
    if (this.consentLocked) throw new ConsentLockedError();
    this.state.consent = consent;
    this.onChange(this.state);
  }

  canSend(): boolean {
    return this.state.consent !== null && !this.state.pending;
  }

  async send(text: string): Promise<void> {
    if (this.state.consent === null) throw new ConsentNotSetError();
    if (this.state.pending) throw new Error("a message is already in flight");
    if (!text.trim()) throw new Error("message must be nonempty");

    // optimistic user bubble + pending indicator
    this.state.messages.push({ role: "user", text, references: [] });
    this.state.pending = true;
    this.lastFailedText = null;
    this.onChange(this.state);

    try {
      if (this.state.sessionId === null) {
        const session = await this.api.createSession(this.state.consent);
        this.state.sessionId = session.session_id;
      }
      const reply = await this.api.sendMessage(this.state.sessionId, text);
      this.state.messages.push({
        role: "assistant",
        text: reply.text,
        references: reply.references,
        degraded: reply.degraded,
      });
    } catch (error) {
      this.lastFailedText = text;
      const detail =
        error instanceof ApiError
          ? `service error (${error.status}): ${error.message}`
          : `network error: ${(error as Error).message}`;
      this.state.messages.push({
        role: "error",
        text: detail,
        references: [],
        retryable: true,
      });
    } finally {
      this.state.pending = false;
      this.onChange(this.state);
    }
  }

  canRetry(): boolean {
    return this.lastFailedText !== null && !this.state.pending;
  }

  async retry(): Promise<void> {
    const text = this.lastFailedText;
    if (text === null) throw new Error("nothing to retry");
    // drop the error bubble and the optimistic user bubble it duplicates
    while (
      this.state.messages.length > 0 &&
      ["error", "user"].includes(this.state.messages[this.state.messages.length - 1].role)
    ) {
      const last = this.state.messages[this.state.messages.length - 1];
      this.state.messages.pop();
      if (last.role === "user") break;
    }
    this.lastFailedText = null;
    await this.send(text);
  }

  /** References of the most recent assistant message, for the side panel. */
  lastReferences(): Reference[] {
    for (let i = this.state.messages.length - 1; i >= 0; i--) {
      if (this.state.messages[i].role === "assistant") {
        return this.state.messages[i].references;
      }
    }
    return [];
  }
}
