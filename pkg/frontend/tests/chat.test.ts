import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { ChatController, type ChatView } from "../src/chat.js";
import { UiState } from "../src/state.js";
import type { AskResponse } from "../src/types.js";

const ANSWER: AskResponse = {
  answer: "Grounded answer.",
  evidence: [
    {
      segment_id: "lec01-0002",
      start: 40,
      end: 55,
      text: "excerpt",
      semantic_score: 0.9,
      adjusted_score: 0.85,
    },
  ],
  timings: { retrieval: 0.002, llm: 0.001 },
};

function makeView(): ChatView & { renders: number; enabled: boolean[] } {
  const view = {
    renders: 0,
    enabled: [] as boolean[],
    render() {
      view.renders += 1;
    },
    setSendEnabled(on: boolean) {
      view.enabled.push(on);
    },
  };
  return view;
}

function controllerWith(ask: (...args: unknown[]) => Promise<AskResponse>) {
  const api = new ApiClient("");
  const askSpy = vi.fn(ask);
  (api as unknown as { ask: typeof askSpy }).ask = askSpy;
  const state = new UiState();
  state.onPause(62.5);
  const view = makeView();
  return { chat: new ChatController(api, state, view, "lec01"), state, view, askSpy };
}

describe("ChatController", () => {
  it("renders the question and the grounded answer with evidence", async () => {
    const { chat, state, askSpy } = controllerWith(async () => ANSWER);
    await chat.send("why a ramp filter?");
    expect(askSpy).toHaveBeenCalledWith("lec01", "why a ramp filter?", 62.5);
    expect(state.chatLog.map((e) => e.role)).toEqual(["student", "assistant"]);
    expect(state.chatLog[1].evidence?.[0].segment_id).toBe("lec01-0002");
    expect(state.askInFlight).toBe(false);
  });

  it("the captured pause position rides along on every ask", async () => {
    const { chat, state, askSpy } = controllerWith(async () => ANSWER);
    state.onResume();
    state.onPause(125.25);
    await chat.send("q");
    expect(askSpy).toHaveBeenCalledWith("lec01", "q", 125.25);
  });

  it("empty input sends nothing", async () => {
    const { chat, askSpy } = controllerWith(async () => ANSWER);
    expect(chat.canSend("   ")).toBe(false);
    await chat.send("   ");
    expect(askSpy).not.toHaveBeenCalled();
  });

  it("double-click cannot fire a duplicate request", async () => {
    let release: (value: AskResponse) => void;
    const gate = new Promise<AskResponse>((resolve) => {
      release = resolve;
    });
    const { chat, state, askSpy } = controllerWith(() => gate);
    const first = chat.send("question");
    const second = chat.send("question");
    release!(ANSWER);
    await Promise.all([first, second]);
    expect(askSpy).toHaveBeenCalledTimes(1);
    expect(state.chatLog.filter((e) => e.role === "assistant").length).toBe(1);
  });

  it("a 502 becomes an error bubble and the log survives", async () => {
    const { chat, state } = controllerWith(async () => {
      throw new ApiError(502, "llm down", "llm");
    });
    state.appendChat({ role: "student", text: "earlier question" });
    state.appendChat({ role: "assistant", text: "earlier answer" });
    await chat.send("next question");
    const roles = state.chatLog.map((e) => e.role);
    expect(roles).toEqual(["student", "assistant", "student", "error"]);
    expect(state.chatLog[3].text).toContain("llm");
    expect(state.askInFlight).toBe(false);
  });
});
