import type { ApiClient } from "./api.js";
import type { UiState } from "./state.js";
import type { SegmentFetch } from "./types.js";

export const PREFETCH_COUNT = 2;
export const LOOKAHEAD = 2;

/**
 * Rendering surface for avatar segments. playSegment resolves when the
 * segment finishes; a view must also settle any outstanding playSegment
 * promise when showPortrait() interrupts playback.
 */
export interface AvatarView {
  showGenerating(): void;
  playSegment(url: string): Promise<void>;
  pauseSegment(): void;
  resumeSegment(): void;
  showPortrait(): void;
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Segmented avatar playback: the first segments are prefetched before
 * playback starts, and while segment i plays the media for segment
 * i + LOOKAHEAD is requested and fetched in the background. Failed segments
 * are skipped; Stop/Resume touch only the avatar surface; the instructor
 * portrait is restored when the response completes.
 */
export class AvatarPlayer {
  sessionId: string | null = null;

  private fetches = new Map<number, Promise<SegmentFetch>>();
  private total = 0;
  private stopRequested = false;
  private cancelled = false;
  private resumeWaiters: Array<() => void> = [];

  constructor(
    private api: ApiClient,
    private view: AvatarView,
    private state: UiState,
    private pollMs = 150,
  ) {}

  async present(answerText: string): Promise<number[]> {
    this.cancelled = false;
    this.stopRequested = false;
    this.fetches.clear();
    this.state.avatarGenerating();
    this.view.showGenerating();

    const start = await this.api.avatarStart(answerText, this.sessionId ?? undefined);
    this.sessionId = start.session_id;
    this.total = start.segments.length;
    for (let seq = 0; seq < Math.min(PREFETCH_COUNT, this.total); seq++) {
      this.prefetch(seq);
    }

    const playedOrder: number[] = [];
    for (let seq = 0; seq < this.total; seq++) {
      const media = await this.fetchFor(seq);
      if (this.cancelled) break;
      if (media.kind !== "ready") {
        // Reporting a failed segment records the skip engine-side and still
        // slides the synthesis window forward.
        await this.api.played(this.sessionId, seq);
        continue;
      }
      await this.waitWhileStopped();
      if (this.cancelled) break;
      await this.api.played(this.sessionId, seq);
      this.prefetch(seq + LOOKAHEAD);
      this.state.avatarPlaying(seq);
      playedOrder.push(seq);
      await this.view.playSegment(media.url);
    }

    this.view.showPortrait();
    this.state.avatarIdle();
    return playedOrder;
  }

  /** Halts avatar playback only; the lecture video is never touched. */
  stop(): void {
    if (this.state.avatar.kind !== "playing") return;
    this.stopRequested = true;
    this.view.pauseSegment();
    this.state.avatarStopped();
  }

  resume(): void {
    if (!this.stopRequested) return;
    this.stopRequested = false;
    if (this.state.avatar.kind === "stopped") {
      this.state.avatarPlaying(this.state.avatar.seq);
    }
    this.view.resumeSegment();
    this.wake();
  }

  /** Abandon the response (modal closed); the portrait comes back at once. */
  cancel(): void {
    this.cancelled = true;
    this.stopRequested = false;
    this.wake();
    this.view.showPortrait();
    this.state.avatarIdle();
  }

  private wake(): void {
    const waiters = this.resumeWaiters;
    this.resumeWaiters = [];
    for (const waiter of waiters) waiter();
  }

  private prefetch(seq: number): void {
    if (seq >= this.total || this.fetches.has(seq)) return;
    this.fetches.set(seq, this.pollUntilSettled(seq));
  }

  private fetchFor(seq: number): Promise<SegmentFetch> {
    this.prefetch(seq);
    return this.fetches.get(seq)!;
  }

  private async pollUntilSettled(seq: number): Promise<SegmentFetch> {
    while (!this.cancelled) {
      const result = await this.api.fetchSegment(this.sessionId!, seq);
      if (result.kind !== "pending") return result;
      await sleep(this.pollMs);
    }
    return { kind: "failed" };
  }

  private waitWhileStopped(): Promise<void> {
    if (!this.stopRequested || this.cancelled) return Promise.resolve();
    return new Promise((resolve) => this.resumeWaiters.push(resolve));
  }
}
