import type { ApiClient } from "./api.js";
import type { AvatarPlayer } from "./avatarPlayer.js";
import type { UiState } from "./state.js";

/** The slice of the lecture <video> element the app observes. */
export interface LectureVideoLike {
  currentTime: number;
  addEventListener(type: "pause" | "play", listener: () => void): void;
}

export interface ModalSurface {
  open(): void;
  close(): void;
}

/**
 * Page-level wiring: a lecture pause opens the Q&A modal with the pause
 * position captured; resuming closes it, halts any avatar response, and ends
 * the session (temp media cleanup). Page unload fires a best-effort cleanup.
 */
export class LectureApp {
  private cleanedSessions = new Set<string>();

  constructor(
    private video: LectureVideoLike,
    private state: UiState,
    private api: ApiClient,
    private avatar: AvatarPlayer,
    private modal: ModalSurface,
  ) {}

  attach(): void {
    this.video.addEventListener("pause", () => this.handlePause());
    this.video.addEventListener("play", () => this.handleResume());
  }

  handlePause(): void {
    if (this.state.onPause(this.video.currentTime)) {
      this.modal.open();
    }
  }

  handleResume(): void {
    this.state.onResume();
    this.modal.close();
    if (this.state.avatar.kind !== "idle") {
      this.avatar.cancel();
    }
    this.endSession();
  }

  /** Cleanup once per session; safe to call again (server side is idempotent). */
  endSession(): void {
    const sessionId = this.avatar.sessionId;
    if (!sessionId || this.cleanedSessions.has(sessionId)) return;
    this.cleanedSessions.add(sessionId);
    this.avatar.sessionId = null;
    void this.api.cleanup(sessionId).catch(() => undefined);
  }

  /** beforeunload path: beacon, no response expected. */
  pageUnload(): void {
    const sessionId = this.avatar.sessionId;
    if (!sessionId || this.cleanedSessions.has(sessionId)) return;
    this.cleanedSessions.add(sessionId);
    this.api.cleanupBeacon(sessionId);
  }
}
