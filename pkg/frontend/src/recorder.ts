import type { RecorderLike } from "./voice.js";

/**
 * Microphone capture via the standard audio APIs, collecting raw PCM so the
 * upload is plain WAV regardless of browser codec support.
 */
export class MicRecorder implements RecorderLike {
  private chunks: Float32Array[] = [];
  private context: AudioContext | null = null;
  private stream: MediaStream | null = null;
  private processor: ScriptProcessorNode | null = null;

  static async create(): Promise<MicRecorder> {
    const recorder = new MicRecorder();
    recorder.stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    return recorder;
  }

  async start(): Promise<void> {
    if (!this.stream) throw new Error("recorder has no microphone stream");
    this.context = new AudioContext();
    const source = this.context.createMediaStreamSource(this.stream);
    this.processor = this.context.createScriptProcessor(4096, 1, 1);
    this.processor.onaudioprocess = (event) => {
      this.chunks.push(new Float32Array(event.inputBuffer.getChannelData(0)));
    };
    source.connect(this.processor);
    this.processor.connect(this.context.destination);
  }

  async stop(): Promise<{ pcm: Float32Array; sampleRate: number }> {
    const sampleRate = this.context?.sampleRate ?? 48_000;
    this.processor?.disconnect();
    this.stream?.getTracks().forEach((track) => track.stop());
    await this.context?.close();

    const total = this.chunks.reduce((n, c) => n + c.length, 0);
    const pcm = new Float32Array(total);
    let offset = 0;
    for (const chunk of this.chunks) {
      pcm.set(chunk, offset);
      offset += chunk.length;
    }
    this.chunks = [];
    return { pcm, sampleRate };
  }
}
