import type { ApiClient } from "./api.js";
import type { UiState } from "./state.js";
import type { VoiceAnswerResponse } from "./types.js";
import { isNoSpeech } from "./types.js";
import { encodeWav, resample } from "./wav.js";

export type VoiceStatus =
  | "idle"
  | "listening"
  | "transcribing"
  | "thinking"
  | "retry"
  | "disabled";

export interface VoiceView {
  setStatus(status: VoiceStatus, message?: string): void;
}

export interface RecorderLike {
  start(): Promise<void>;
  stop(): Promise<{ pcm: Float32Array; sampleRate: number }>;
}

/**
 * Voice tab: Listening while recording, Transcribing once audio is sent,
 * Thinking before the grounded answer lands. Silence asks the student to
 * retry; a denied microphone disables the tab with a message.
 */
export class VoiceController {
  private recorder: RecorderLike | null = null;
  private disabled = false;

  constructor(
    private api: ApiClient,
    private state: UiState,
    private view: VoiceView,
    private recorderFactory: () => Promise<RecorderLike>,
    private lectureId: string,
  ) {}

  get isDisabled(): boolean {
    return this.disabled;
  }

  async beginRecording(): Promise<boolean> {
    if (this.disabled) return false;
    try {
      this.recorder = await this.recorderFactory();
    } catch {
      this.disabled = true;
      this.view.setStatus("disabled", "Microphone unavailable; voice questions are off.");
      return false;
    }
    await this.recorder.start();
    this.view.setStatus("listening");
    return true;
  }

  async finishRecording(): Promise<VoiceAnswerResponse | null> {
    if (!this.recorder) return null;
    const { pcm, sampleRate } = await this.recorder.stop();
    this.recorder = null;
    this.view.setStatus("transcribing");
    const wav = encodeWav(resample(pcm, sampleRate));
    const resp = await this.api.voice(wav, this.lectureId, this.state.pauseTime);
    if (isNoSpeech(resp)) {
      this.view.setStatus("retry", "No speech detected — please try again.");
      return null;
    }
    this.view.setStatus("thinking");
    this.state.appendChat({ role: "student", text: resp.transcript });
    this.state.appendChat({ role: "assistant", text: resp.answer, evidence: resp.evidence });
    this.view.setStatus("idle");
    return resp;
  }
}
