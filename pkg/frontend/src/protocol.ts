// Wire protocol: one JSON object per websocket text frame, strict both ways.
// The client refuses malformed server frames outright rather than guessing.

export const PROTO_VERSION = 1;
export const MAX_PAYLOAD_BYTES = 64 * 1024;

export class ProtocolError extends Error {}

export interface RoomConfigInfo {
  numChannels: number;
  maxUsers: number;
  hearingRadius: number;
}

export interface RosterEntry {
  userId: string;
  name: string;
  x: number;
  y: number;
}

export type ServerFrame =
  | { type: "WELCOME"; userId: string; roomConfig: RoomConfigInfo }
  | { type: "ROOM_STATE"; users: RosterEntry[] }
  | { type: "USER_JOINED"; userId: string; name: string; x: number; y: number }
  | { type: "USER_LEFT"; userId: string }
  | { type: "USER_MOVED"; userId: string; x: number; y: number }
  | { type: "AUDIO"; speakerId: string; seq: number; payload: string }
  | { type: "CHANNEL_ACK"; channel: number | null; effect: "join" | "switch" | "leave" }
  | { type: "ERROR"; code: string; message: string }
  | { type: "PONG"; nonce: number };

const ERROR_CODES = new Set([
  "BAD_MESSAGE",
  "UNKNOWN_ROOM",
  "ROOM_FULL",
  "INVALID_CHANNEL",
  "NOT_IN_CHANNEL",
  "PROTOCOL_VERSION",
]);

function fail(why: string): never {
  throw new ProtocolError(why);
}

function isRecord(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

function str(obj: Record<string, unknown>, key: string): string {
  const v = obj[key];
  if (typeof v !== "string") fail(`${key} must be a string`);
  return v;
}

function num(obj: Record<string, unknown>, key: string): number {
  const v = obj[key];
  if (typeof v !== "number" || !Number.isFinite(v)) fail(`${key} must be a finite number`);
  return v;
}

function int(obj: Record<string, unknown>, key: string): number {
  const v = num(obj, key);
  if (!Number.isInteger(v)) fail(`${key} must be an integer`);
  return v;
}

function exactKeys(obj: Record<string, unknown>, keys: string[]): void {
  const got = Object.keys(obj).sort();
  const want = [...keys].sort();
  if (got.length !== want.length || got.some((k, i) => k !== want[i])) {
    fail(`expected keys {${want.join(",")}}, got {${got.join(",")}}`);
  }
}

export function decodeServerFrame(text: string): ServerFrame {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    fail("frame is not valid JSON");
  }
  if (!isRecord(raw)) fail("frame must be a JSON object");
  const obj = raw;
  const type = str(obj, "type");
  switch (type) {
    case "WELCOME": {
      exactKeys(obj, ["type", "user_id", "room_config"]);
      const rc = obj["room_config"];
      if (!isRecord(rc)) fail("room_config must be an object");
      exactKeys(rc, ["num_channels", "max_users", "hearing_radius"]);
      return {
        type,
        userId: str(obj, "user_id"),
        roomConfig: {
          numChannels: int(rc, "num_channels"),
          maxUsers: int(rc, "max_users"),
          hearingRadius: num(rc, "hearing_radius"),
        },
      };
    }
    case "ROOM_STATE": {
      exactKeys(obj, ["type", "users"]);
      const users = obj["users"];
      if (!Array.isArray(users)) fail("users must be an array");
      return {
        type,
        users: users.map((u) => {
          if (!isRecord(u)) fail("roster entry must be an object");
          exactKeys(u, ["user_id", "display_name", "x", "y"]);
          return {
            userId: str(u, "user_id"),
            name: str(u, "display_name"),
            x: num(u, "x"),
            y: num(u, "y"),
          };
        }),
      };
    }
    case "USER_JOINED":
      exactKeys(obj, ["type", "user_id", "display_name", "x", "y"]);
      return {
        type,
        userId: str(obj, "user_id"),
        name: str(obj, "display_name"),
        x: num(obj, "x"),
        y: num(obj, "y"),
      };
    case "USER_LEFT":
      exactKeys(obj, ["type", "user_id"]);
      return { type, userId: str(obj, "user_id") };
    case "USER_MOVED":
      exactKeys(obj, ["type", "user_id", "x", "y"]);
      return { type, userId: str(obj, "user_id"), x: num(obj, "x"), y: num(obj, "y") };
    case "AUDIO":
      exactKeys(obj, ["type", "speaker_id", "seq", "payload"]);
      return {
        type,
        speakerId: str(obj, "speaker_id"),
        seq: int(obj, "seq"),
        payload: str(obj, "payload"),
      };
    case "CHANNEL_ACK": {
      exactKeys(obj, ["type", "channel", "effect"]);
      const effect = str(obj, "effect");
      if (effect !== "join" && effect !== "switch" && effect !== "leave") {
        fail(`unknown effect ${effect}`);
      }
      const channel = obj["channel"];
      if (channel !== null && (typeof channel !== "number" || !Number.isInteger(channel))) {
        fail("channel must be an integer or null");
      }
      if ((channel === null) !== (effect === "leave")) fail("channel/effect pairing violated");
      return { type, channel: channel as number | null, effect };
    }
    case "ERROR": {
      exactKeys(obj, ["type", "code", "message"]);
      const code = str(obj, "code");
      if (!ERROR_CODES.has(code)) fail(`unknown error code ${code}`);
      return { type, code, message: str(obj, "message") };
    }
    case "PONG":
      exactKeys(obj, ["type", "nonce"]);
      return { type, nonce: int(obj, "nonce") };
    default:
      fail(`unknown frame type ${type}`);
  }
}

// Client frames carry the type first so transcripts read naturally.
export function helloFrame(displayName: string): string {
  if (displayName.length < 1 || displayName.length > 64) {
    throw new ProtocolError("display name must be 1..64 chars");
  }
  return JSON.stringify({ type: "HELLO", proto_version: PROTO_VERSION, display_name: displayName });
}

export function joinRoomFrame(roomId: string): string {
  return JSON.stringify({ type: "JOIN_ROOM", room_id: roomId });
}

export function moveFrame(x: number, y: number): string {
  if (!Number.isFinite(x) || !Number.isFinite(y)) throw new ProtocolError("coordinates must be finite");
  return JSON.stringify({ type: "MOVE", x, y });
}

export function speakFrame(seq: number, payloadB64: string): string {
  if (b64DecodedLength(payloadB64) > MAX_PAYLOAD_BYTES) {
    throw new ProtocolError("payload exceeds 64 KiB");
  }
  return JSON.stringify({ type: "SPEAK", seq, payload: payloadB64 });
}

export function enterChannelFrame(channel: number): string {
  return JSON.stringify({ type: "ENTER_CHANNEL", channel });
}

export function exitChannelFrame(): string {
  return JSON.stringify({ type: "EXIT_CHANNEL" });
}

export function pingFrame(nonce: number): string {
  return JSON.stringify({ type: "PING", nonce });
}

// Base64 helpers that work in both the browser and node test processes.
export function textToB64(text: string): string {
  const bytes = new TextEncoder().encode(text);
  let binary = "";
  for (const b of bytes) binary += String.fromCharCode(b);
  return btoa(binary);
}

export function b64ToText(payload: string): string {
  let binary: string;
  try {
    binary = atob(payload);
  } catch {
    throw new ProtocolError("payload is not valid base64");
  }
  const bytes = Uint8Array.from(binary, (c) => c.charCodeAt(0));
  return new TextDecoder("utf-8", { fatal: false }).decode(bytes);
}

function b64DecodedLength(payload: string): number {
  const padding = payload.endsWith("==") ? 2 : payload.endsWith("=") ? 1 : 0;
  return Math.floor((payload.length * 3) / 4) - padding;
}
