export interface EvidenceItem {
  segment_id: string;
  start: number;
  end: number;
  text: string;
  semantic_score: number;
  adjusted_score: number;
}

export interface AskResponse {
  answer: string;
  evidence: EvidenceItem[];
  timings: Record<string, number>;
}

export interface VoiceAnswerResponse extends AskResponse {
  transcript: string;
}

export interface NoSpeechResponse {
  no_speech: true;
  timings: Record<string, number>;
}

export type VoiceResponse = VoiceAnswerResponse | NoSpeechResponse;

export function isNoSpeech(resp: VoiceResponse): resp is NoSpeechResponse {
  return (resp as NoSpeechResponse).no_speech === true;
}

export interface AvatarSegmentInfo {
  seq: number;
  text: string;
}

export interface AvatarStartResponse {
  session_id: string;
  segments: AvatarSegmentInfo[];
}

export type SegmentFetch =
  | { kind: "ready"; url: string }
  | { kind: "pending" }
  | { kind: "failed" };

export interface CleanupResponse {
  deleted: number;
  already_absent: number;
}

export interface HealthResponse {
  status: string;
  adapters: Record<string, string>;
  lectures: string[];
  segments: number;
}
