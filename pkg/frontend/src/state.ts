import type { EvidenceItem } from "./types.js";

export type PlaybackState = { kind: "playing" } | { kind: "paused"; time: number };

export type ModalTab = "chat" | "voice";
export type ModalState = { kind: "closed" } | { kind: "open"; tab: ModalTab };

export type AvatarState =
  | { kind: "idle" }
  | { kind: "generating" }
  | { kind: "playing"; seq: number }
  | { kind: "stopped"; seq: number };

export interface ChatEntry {
  role: "student" | "assistant" | "error";
  text: string;
  evidence?: EvidenceItem[];
}

/**
 * Single source of truth for the page. Invariants:
 *  - the modal is only ever open while lecture playback is paused
 *  - the chat log is append-only within a session
 *  - at most one ask request is in flight
 */
export class UiState {
  playback: PlaybackState = { kind: "playing" };
  modal: ModalState = { kind: "closed" };
  avatar: AvatarState = { kind: "idle" };
  askInFlight = false;

  private log: ChatEntry[] = [];

  get chatLog(): readonly ChatEntry[] {
    return this.log;
  }

  get pauseTime(): number {
    return this.playback.kind === "paused" ? this.playback.time : 0;
  }

  /** Returns true when this pause newly opened the modal (double-pause is a no-op). */
  onPause(time: number): boolean {
    this.playback = { kind: "paused", time };
    if (this.modal.kind === "open") {
      this.assertInvariants();
      return false;
    }
    this.modal = { kind: "open", tab: "chat" };
    this.assertInvariants();
    return true;
  }

  onResume(): void {
    this.playback = { kind: "playing" };
    this.modal = { kind: "closed" };
    this.assertInvariants();
  }

  setTab(tab: ModalTab): void {
    if (this.modal.kind === "open") this.modal = { kind: "open", tab };
  }

  appendChat(entry: ChatEntry): void {
    this.log.push(entry);
  }

  /** Claims the single ask slot; false means a request is already in flight. */
  askStarted(): boolean {
    if (this.askInFlight) return false;
    this.askInFlight = true;
    return true;
  }

  askFinished(): void {
    this.askInFlight = false;
  }

  avatarGenerating(): void {
    this.avatar = { kind: "generating" };
  }

  avatarPlaying(seq: number): void {
    this.avatar = { kind: "playing", seq };
  }

  avatarStopped(): void {
    if (this.avatar.kind === "playing") {
      this.avatar = { kind: "stopped", seq: this.avatar.seq };
    }
  }

  avatarIdle(): void {
    this.avatar = { kind: "idle" };
  }

  assertInvariants(): void {
    if (this.modal.kind === "open" && this.playback.kind !== "paused") {
      throw new Error("invariant violated: modal open while lecture is playing");
    }
  }
}
