import { ApiError, type ApiClient } from "./api.js";
import type { UiState } from "./state.js";

export interface ChatView {
  render(log: readonly import("./state.js").ChatEntry[]): void;
  setSendEnabled(enabled: boolean): void;
}

/** Chat tab: one in-flight ask at a time, errors become bubbles, log kept. */
export class ChatController {
  constructor(
    private api: ApiClient,
    private state: UiState,
    private view: ChatView,
    private lectureId: string,
  ) {}

  canSend(text: string): boolean {
    return text.trim().length > 0 && !this.state.askInFlight;
  }

  async send(text: string): Promise<void> {
    const question = text.trim();
    if (!question || !this.state.askStarted()) return;
    this.view.setSendEnabled(false);
    this.state.appendChat({ role: "student", text: question });
    this.view.render(this.state.chatLog);
    try {
      const resp = await this.api.ask(this.lectureId, question, this.state.pauseTime);
      this.state.appendChat({
        role: "assistant",
        text: resp.answer,
        evidence: resp.evidence,
      });
    } catch (err) {
      const message =
        err instanceof ApiError
          ? `The ${err.stage ?? "service"} backend failed (${err.status}). Please try again.`
          : "Could not reach the lecture service.";
      this.state.appendChat({ role: "error", text: message });
    } finally {
      this.state.askFinished();
      this.view.setSendEnabled(true);
      this.view.render(this.state.chatLog);
    }
  }
}
