// DOM and canvas rendering. Everything shown about other users comes from
// roster positions and heard lines; there is no channel badge to draw for
// anyone but the local user's own HUD.

import { HoldGate } from "./holdgate.js";
import { ClientViewModel } from "./viewmodel.js";

const EFFECT_MS = 600;
const SCALE = 6; // pixels per world unit

export interface Dom {
  hud: HTMLElement;
  status: HTMLElement;
  canvas: HTMLCanvasElement;
  buttons: HTMLElement;
  exitButton: HTMLButtonElement;
  exitHint: HTMLElement;
  log: HTMLElement;
  toast: HTMLElement;
  reconnect: HTMLElement;
}

export function grabDom(): Dom {
  const get = (id: string) => {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el;
  };
  return {
    hud: get("hud"),
    status: get("status"),
    canvas: get("map") as HTMLCanvasElement,
    buttons: get("channel-buttons"),
    exitButton: get("exit-button") as HTMLButtonElement,
    exitHint: get("exit-hint"),
    log: get("hear-log"),
    toast: get("toast"),
    reconnect: get("reconnect"),
  };
}

export function buildChannelButtons(
  dom: Dom,
  numChannels: number,
  onEnter: (channel: number) => void,
): void {
  dom.buttons.replaceChildren();
  for (let channel = 1; channel <= numChannels; channel++) {
    const button = document.createElement("button");
    button.textContent = String(channel);
    button.title = `Channel ${channel}`;
    button.addEventListener("click", () => onEnter(channel));
    dom.buttons.appendChild(button);
  }
}

export function render(vm: ClientViewModel, gate: HoldGate, dom: Dom, now: number): void {
  dom.hud.textContent = vm.hudLabel();
  dom.status.textContent = vm.connection;
  dom.toast.textContent = vm.toast ?? "";
  dom.reconnect.style.display = vm.connection === "closed" ? "flex" : "none";
  dom.exitButton.style.display = gate.visible(now) ? "inline-block" : "none";
  dom.exitHint.style.display = vm.myChannel !== null && !gate.visible(now) ? "block" : "none";

  const lines = vm.hearLog.slice(-12).map((line) => `${line.speaker}: ${line.text}`);
  if (dom.log.textContent !== lines.join("\n")) dom.log.textContent = lines.join("\n");

  drawMap(vm, dom.canvas, now);
}

function drawMap(vm: ClientViewModel, canvas: HTMLCanvasElement, now: number): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, w, h);

  const me = vm.myEntry;
  const cx = me ? me.x : 0;
  const cy = me ? me.y : 0;
  const toScreen = (x: number, y: number): [number, number] => [
    w / 2 + (x - cx) * SCALE,
    h / 2 + (y - cy) * SCALE,
  ];

  ctx.strokeStyle = "#222a33";
  for (let gx = Math.floor(cx / 10) * 10 - 60; gx <= cx + 60; gx += 10) {
    const [sx] = toScreen(gx, 0);
    ctx.beginPath();
    ctx.moveTo(sx, 0);
    ctx.lineTo(sx, h);
    ctx.stroke();
  }
  for (let gy = Math.floor(cy / 10) * 10 - 60; gy <= cy + 60; gy += 10) {
    const [, sy] = toScreen(0, gy);
    ctx.beginPath();
    ctx.moveTo(0, sy);
    ctx.lineTo(w, sy);
    ctx.stroke();
  }

  if (me && vm.roomConfig) {
    const [sx, sy] = toScreen(me.x, me.y);
    ctx.strokeStyle = "#2c4a66";
    ctx.setLineDash([6, 6]);
    ctx.beginPath();
    ctx.arc(sx, sy, vm.roomConfig.hearingRadius * SCALE, 0, Math.PI * 2);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  for (const entry of vm.roster.values()) {
    const [sx, sy] = toScreen(entry.x, entry.y);
    const mine = entry.userId === vm.myId;
    ctx.fillStyle = mine ? "#7dd3a0" : "#9db4cc";
    ctx.beginPath();
    ctx.arc(sx, sy, 8, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = "#d7e3f0";
    ctx.font = "12px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(entry.name, sx, sy - 14);

    // Join/leave feedback renders on the local avatar only.
    if (mine && vm.lastEffect && now - vm.lastEffect.at < EFFECT_MS) {
      const age = (now - vm.lastEffect.at) / EFFECT_MS;
      ctx.strokeStyle = vm.lastEffect.kind === "join" ? "#4caf7d" : "#e08a3c";
      ctx.lineWidth = 3 * (1 - age);
      ctx.beginPath();
      ctx.arc(sx, sy, 10 + age * 26, 0, Math.PI * 2);
      ctx.stroke();
      ctx.lineWidth = 1;
    }
  }
}

export function canvasToWorld(
  vm: ClientViewModel,
  canvas: HTMLCanvasElement,
  px: number,
  py: number,
): [number, number] {
  const me = vm.myEntry;
  const cx = me ? me.x : 0;
  const cy = me ? me.y : 0;
  return [cx + (px - canvas.width / 2) / SCALE, cy + (py - canvas.height / 2) / SCALE];
}
