// Socket wrapper around the wire protocol. The WebSocket constructor is
// injectable so the same code drives the browser and the node test process.

import {
  ProtocolError,
  ServerFrame,
  decodeServerFrame,
  enterChannelFrame,
  exitChannelFrame,
  helloFrame,
  joinRoomFrame,
  moveFrame,
  pingFrame,
  speakFrame,
  textToB64,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketCtor = new (url: string) => SocketLike;

export interface NetHandlers {
  onOpen?: () => void;
  onFrame?: (frame: ServerFrame) => void;
  onClose?: () => void;
  onBadFrame?: (error: ProtocolError, raw: string) => void;
}

export class Net {
  private socket: SocketLike;
  private seq = 0;
  private nonce = 0;
  closed = false;

  constructor(url: string, handlers: NetHandlers, ctor?: SocketCtor) {
    const Socket = ctor ?? ((globalThis as { WebSocket?: SocketCtor }).WebSocket as SocketCtor);
    if (!Socket) throw new Error("no WebSocket implementation available");
    this.socket = new Socket(url);
    this.socket.onopen = () => handlers.onOpen?.();
    this.socket.onmessage = (ev) => {
      const raw = typeof ev.data === "string" ? ev.data : String(ev.data);
      let frame: ServerFrame;
      try {
        frame = decodeServerFrame(raw);
      } catch (error) {
        if (error instanceof ProtocolError) {
          handlers.onBadFrame?.(error, raw);
          return;
        }
        throw error;
      }
      handlers.onFrame?.(frame);
    };
    this.socket.onclose = () => {
      this.closed = true;
      handlers.onClose?.();
    };
    this.socket.onerror = () => undefined;
  }

  hello(displayName: string): void {
    this.socket.send(helloFrame(displayName));
  }

  joinRoom(roomId: string): void {
    this.socket.send(joinRoomFrame(roomId));
  }

  move(x: number, y: number): void {
    this.socket.send(moveFrame(x, y));
  }

  speak(text: string): void {
    this.seq += 1;
    this.socket.send(speakFrame(this.seq, textToB64(text)));
  }

  enterChannel(channel: number): void {
    this.socket.send(enterChannelFrame(channel));
  }

  exitChannel(): void {
    this.socket.send(exitChannelFrame());
  }

  ping(): number {
    this.nonce += 1;
    this.socket.send(pingFrame(this.nonce));
    return this.nonce;
  }

  close(): void {
    this.socket.close();
  }
}
