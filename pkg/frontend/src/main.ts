// Browser entry point. Reads the server address and display name from the
// URL query, holds one socket for the session, and refreshes the view each
// animation frame.

import { HoldGate } from "./holdgate.js";
import { Net } from "./net.js";
import { buildChannelButtons, canvasToWorld, grabDom, render } from "./render.js";
import { ClientViewModel } from "./viewmodel.js";

function main(): void {
  const query = new URLSearchParams(window.location.search);
  const server = query.get("server") ?? "127.0.0.1:7440";
  const name = query.get("name") ?? `guest-${Math.floor(Math.random() * 1000)}`;
  const room = query.get("room") ?? "main";

  const dom = grabDom();
  const vm = new ClientViewModel();
  const gate = new HoldGate();

  const net = new Net(`ws://${server}/`, {
    onOpen: () => {
      net.hello(name);
      net.joinRoom(room);
    },
    onFrame: (frame) => {
      vm.applyFrame(frame, performance.now());
      if (frame.type === "WELCOME") {
        buildChannelButtons(dom, frame.roomConfig.numChannels, (channel) =>
          net.enterChannel(channel),
        );
      }
      if (frame.type === "CHANNEL_ACK" && frame.effect === "leave") gate.endConfirm();
    },
    onClose: () => vm.markClosed(),
    onBadFrame: (err) => {
      vm.toast = `bad frame from server: ${err.message}`;
    },
  });

  dom.canvas.addEventListener("click", (ev) => {
    const rect = dom.canvas.getBoundingClientRect();
    const [x, y] = canvasToWorld(vm, dom.canvas, ev.clientX - rect.left, ev.clientY - rect.top);
    net.move(x, y);
  });

  // The exit control stays hidden until the reveal key is held down.
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Shift") gate.press(performance.now());
  });
  window.addEventListener("keyup", (ev) => {
    if (ev.key === "Shift") gate.release();
  });
  window.addEventListener("blur", () => gate.release());

  dom.exitButton.addEventListener("click", () => {
    gate.beginConfirm();
    net.exitChannel();
  });

  const input = document.getElementById("say-input") as HTMLInputElement;
  const sayForm = document.getElementById("say-form") as HTMLFormElement;
  sayForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const text = input.value.trim();
    if (text) net.speak(text);
    input.value = "";
  });

  const reconnectButton = document.getElementById("reconnect-button") as HTMLButtonElement;
  reconnectButton.addEventListener("click", () => window.location.reload());

  const frame = () => {
    render(vm, gate, dom, performance.now());
    window.requestAnimationFrame(frame);
  };
  window.requestAnimationFrame(frame);
}

main();
