// Client-side room state. Deliberately narrow: the only channel information
// this model can hold is the user's own; roster entries have no channel slot,
// and heard lines never say whether speech was public or private.

import { RosterEntry, ServerFrame } from "./protocol.js";
import { b64ToText } from "./protocol.js";

export type Connection = "connecting" | "joined" | "closed";

export interface HeardLine {
  speaker: string;
  text: string;
  t: number;
}

export interface LocalEffect {
  kind: "join" | "leave";
  at: number;
}

export class ClientViewModel {
  connection: Connection = "connecting";
  myId: string | null = null;
  myChannel: number | null = null;
  roomConfig: { numChannels: number; maxUsers: number; hearingRadius: number } | null = null;
  roster = new Map<string, RosterEntry>();
  hearLog: HeardLine[] = [];
  // Feedback for the acting user only; nothing about it goes on the wire.
  lastEffect: LocalEffect | null = null;
  toast: string | null = null;
  lastPongNonce: number | null = null;

  get myEntry(): RosterEntry | null {
    return this.myId !== null ? this.roster.get(this.myId) ?? null : null;
  }

  nameOf(userId: string): string {
    return this.roster.get(userId)?.name ?? userId;
  }

  applyFrame(frame: ServerFrame, now: number): void {
    switch (frame.type) {
      case "WELCOME":
        this.myId = frame.userId;
        this.roomConfig = frame.roomConfig;
        this.connection = "joined";
        break;
      case "ROOM_STATE":
        this.roster.clear();
        for (const entry of frame.users) this.roster.set(entry.userId, entry);
        break;
      case "USER_JOINED":
        this.roster.set(frame.userId, {
          userId: frame.userId,
          name: frame.name,
          x: frame.x,
          y: frame.y,
        });
        break;
      case "USER_LEFT":
        this.roster.delete(frame.userId);
        break;
      case "USER_MOVED": {
        const entry = this.roster.get(frame.userId);
        if (entry) {
          entry.x = frame.x;
          entry.y = frame.y;
        }
        break;
      }
      case "AUDIO":
        this.hearLog.push({
          speaker: this.nameOf(frame.speakerId),
          text: b64ToText(frame.payload),
          t: now,
        });
        break;
      case "CHANNEL_ACK":
        this.myChannel = frame.channel;
        this.lastEffect = { kind: frame.effect === "leave" ? "leave" : "join", at: now };
        break;
      case "ERROR":
        this.toast = `${frame.code}: ${frame.message}`;
        break;
      case "PONG":
        this.lastPongNonce = frame.nonce;
        break;
    }
  }

  markClosed(): void {
    this.connection = "closed";
  }

  hudLabel(): string {
    if (this.connection !== "joined") return this.connection;
    return this.myChannel === null ? "Public" : `Channel ${this.myChannel}`;
  }
}
