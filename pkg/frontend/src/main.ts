import { ApiClient } from "./api.js";
import { AvatarPlayer, type AvatarView } from "./avatarPlayer.js";
import { LectureApp } from "./app.js";
import { ChatController, type ChatView } from "./chat.js";
import { MicRecorder } from "./recorder.js";
import { UiState, type ChatEntry } from "./state.js";
import { VoiceController, type VoiceStatus } from "./voice.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function formatStamp(seconds: number): string {
  const s = Math.floor(seconds);
  return `${String(Math.floor(s / 60)).padStart(2, "0")}:${String(s % 60).padStart(2, "0")}`;
}

class DomChatView implements ChatView {
  constructor(
    private list: HTMLUListElement,
    private sendButton: HTMLButtonElement,
    private onSeek: (time: number) => void,
    private onPlayAvatar: (answer: string) => void,
  ) {}

  render(log: readonly ChatEntry[]): void {
    this.list.replaceChildren();
    for (const entry of log) {
      const item = document.createElement("li");
      item.className = entry.role;
      item.textContent = entry.text;
      if (entry.role === "assistant") {
        if (entry.evidence?.length) {
          const links = document.createElement("div");
          links.className = "evidence";
          for (const ev of entry.evidence) {
            const link = document.createElement("a");
            link.textContent = `[${formatStamp(ev.start)}–${formatStamp(ev.end)}]`;
            link.title = ev.text;
            link.addEventListener("click", () => this.onSeek(ev.start));
            links.appendChild(link);
          }
          item.appendChild(links);
        }
        const speak = document.createElement("button");
        speak.type = "button";
        speak.textContent = "Play as avatar";
        speak.addEventListener("click", () => this.onPlayAvatar(entry.text));
        item.appendChild(speak);
      }
      this.list.appendChild(item);
    }
    this.list.scrollTop = this.list.scrollHeight;
  }

  setSendEnabled(enabled: boolean): void {
    this.sendButton.disabled = !enabled;
  }
}

class DomAvatarView implements AvatarView {
  private settle: (() => void) | null = null;

  constructor(private video: HTMLVideoElement, private badge: HTMLElement) {
    this.video.addEventListener("ended", () => this.finish());
  }

  private finish(): void {
    this.video.classList.remove("visible");
    const settle = this.settle;
    this.settle = null;
    settle?.();
  }

  showGenerating(): void {
    this.badge.classList.remove("hidden");
  }

  playSegment(url: string): Promise<void> {
    this.badge.classList.add("hidden");
    return new Promise((resolve) => {
      this.settle = resolve;
      this.video.src = url;
      this.video.classList.add("visible");
      void this.video.play().catch(() => this.finish());
    });
  }

  pauseSegment(): void {
    this.video.pause();
  }

  resumeSegment(): void {
    void this.video.play().catch(() => this.finish());
  }

  showPortrait(): void {
    this.badge.classList.add("hidden");
    this.video.pause();
    this.video.removeAttribute("src");
    this.finish();
  }
}

async function bootstrap(): Promise<void> {
  const api = new ApiClient("");
  const state = new UiState();

  const lectureVideo = byId<HTMLVideoElement>("lecture-video");
  const modalEl = byId<HTMLDivElement>("qa-modal");
  const pauseStamp = byId<HTMLSpanElement>("pause-stamp");
  const chatInput = byId<HTMLInputElement>("chat-input");
  const chatSend = byId<HTMLButtonElement>("chat-send");
  const voiceButton = byId<HTMLButtonElement>("voice-button");
  const voiceStatusEl = byId<HTMLParagraphElement>("voice-status");

  const params = new URLSearchParams(location.search);
  const health = await api.health().catch(() => null);
  const lectureId = params.get("lecture") ?? health?.lectures[0] ?? "lecture";
  const videoSrc = params.get("video");
  if (videoSrc) lectureVideo.src = videoSrc;

  const avatarView = new DomAvatarView(byId("avatar-video"), byId("avatar-badge"));
  const avatar = new AvatarPlayer(api, avatarView, state);

  const chatView = new DomChatView(
    byId("chat-log"),
    chatSend,
    (time) => {
      lectureVideo.currentTime = time;
    },
    (answer) => void avatar.present(answer).catch(() => avatarView.showPortrait()),
  );
  const chat = new ChatController(api, state, chatView, lectureId);

  const voiceStatus = (status: VoiceStatus, message?: string) => {
    const labels: Record<VoiceStatus, string> = {
      idle: "Hold the button and speak.",
      listening: "Listening…",
      transcribing: "Transcribing…",
      thinking: "Thinking…",
      retry: "No speech detected — please try again.",
      disabled: "Voice input is unavailable.",
    };
    voiceStatusEl.textContent = message ?? labels[status];
    voiceButton.disabled = status === "disabled";
    chatView.render(state.chatLog);
  };
  const voice = new VoiceController(
    api,
    state,
    { setStatus: voiceStatus },
    () => MicRecorder.create(),
    lectureId,
  );

  const app = new LectureApp(lectureVideo, state, api, avatar, {
    open: () => {
      modalEl.classList.remove("hidden");
      pauseStamp.textContent = `paused at ${formatStamp(state.pauseTime)}`;
      chatInput.focus();
    },
    close: () => modalEl.classList.add("hidden"),
  });
  app.attach();

  byId<HTMLFormElement>("chat-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const text = chatInput.value;
    if (!chat.canSend(text)) return;
    chatInput.value = "";
    void chat.send(text);
  });
  chatInput.addEventListener("input", () => {
    chatSend.disabled = !chat.canSend(chatInput.value);
  });

  voiceButton.addEventListener("mousedown", () => void voice.beginRecording());
  voiceButton.addEventListener("mouseup", () => void voice.finishRecording());

  const tabChat = byId<HTMLButtonElement>("tab-chat");
  const tabVoice = byId<HTMLButtonElement>("tab-voice");
  const panelChat = byId<HTMLDivElement>("panel-chat");
  const panelVoice = byId<HTMLDivElement>("panel-voice");
  const selectTab = (tab: "chat" | "voice") => {
    state.setTab(tab);
    tabChat.classList.toggle("active", tab === "chat");
    tabVoice.classList.toggle("active", tab === "voice");
    panelChat.classList.toggle("hidden", tab !== "chat");
    panelVoice.classList.toggle("hidden", tab !== "voice");
  };
  tabChat.addEventListener("click", () => selectTab("chat"));
  tabVoice.addEventListener("click", () => selectTab("voice"));

  byId<HTMLButtonElement>("avatar-stop").addEventListener("click", () => avatar.stop());
  byId<HTMLButtonElement>("avatar-resume").addEventListener("click", () => avatar.resume());

  window.addEventListener("beforeunload", () => app.pageUnload());
}

void bootstrap();
