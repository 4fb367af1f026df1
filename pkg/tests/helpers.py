"""Shared test plumbing: embedded and subprocess server lifecycles."""

from __future__ import annotations

import contextlib
import dataclasses
import queue
import re
import signal
import subprocess
import sys
import threading

from hushsim.config import ServerConfig
from hushsim.server import RelayServer

_LISTENING = re.compile(r"listening on ([0-9.]+):(\d+)")


@contextlib.asynccontextmanager
async def embedded_server(config: ServerConfig | None = None):
    """A real websocket server on an ephemeral port, inside this event loop."""
    config = config or ServerConfig()
    config = dataclasses.replace(config, listen="127.0.0.1:0")
    server = RelayServer(config)
    host, port = await server.start()
    try:
        yield server, f"{host}:{port}"
    finally:
        await server.stop()


class ServerProcess:
    """``python -m hushsim.server`` as a child process on an ephemeral port."""

    def __init__(self, *extra_args: str):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "hushsim.server", "--listen", "127.0.0.1:0", *extra_args],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        self._stderr_lines: queue.Queue[str | None] = queue.Queue()
        self._drain = threading.Thread(target=self._pump_stderr, daemon=True)
        self._drain.start()
        self.addr = self._wait_for_listen()

    def _pump_stderr(self) -> None:
        for line in self.proc.stderr:
            self._stderr_lines.put(line)
        self._stderr_lines.put(None)

    def _wait_for_listen(self) -> str:
        while True:
            try:
                line = self._stderr_lines.get(timeout=10)
            except queue.Empty:
                self.stop()
                raise RuntimeError("server never reported its listen address")
            if line is None:
                raise RuntimeError(f"server exited early (rc={self.proc.wait()})")
            match = _LISTENING.search(line)
            if match:
                return f"{match.group(1)}:{match.group(2)}"

    def stop(self) -> str:
        """Terminate and return captured stdout (the structured event log)."""
        if self.proc.poll() is None:
            self.proc.send_signal(signal.SIGINT)
            try:
                self.proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait(timeout=10)
        out = self.proc.stdout.read()
        self.proc.stdout.close()
        self._drain.join(timeout=5)
        return out
