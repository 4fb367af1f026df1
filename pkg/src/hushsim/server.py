"""Websocket front end for the relay router.

Each client connection becomes one router session. asyncio gives the router a
single serialized command order; a per-connection outbound queue keeps one
slow reader from stalling everyone else while preserving per-receiver frame
order. A periodic tick flushes coalesced position broadcasts.

Runs standalone (``hushrelay`` / ``python -m hushsim.server``) or embedded in
tests via ``RelayServer.start()`` with an ephemeral port.
"""

from __future__ import annotations

import argparse
import asyncio
import contextlib
import json
import logging
import signal
import sys
import time
from dataclasses import replace

from websockets.asyncio.server import Server, ServerConnection, serve
from websockets.exceptions import ConnectionClosed

from hushsim import wire
from hushsim.config import ConfigInvalid, ServerConfig, load_config, split_listen
from hushsim.router import RelayRouter, TurnOutput

log = logging.getLogger("hushsim.server")
# One JSON line per state transition; handlers attached in main() (stdout).
event_log = logging.getLogger("hushsim.events")
event_log.propagate = False

TICK_INTERVAL_MS = 25
_CLOSE = None  # outbox sentinel: flush then close the websocket


class RelayServer:
    """Serves the relay protocol over websockets for one ServerConfig."""

    def __init__(self, config: ServerConfig | None = None):
        self.config = config or ServerConfig()
        self.router = RelayRouter(self.config, on_event=self._log_event)
        self._outboxes: dict[str, asyncio.Queue[str | None]] = {}
        self._server: Server | None = None
        self._ticker: asyncio.Task | None = None
        self._session_counter = 0
        self._started_at = time.monotonic()

    # -- lifecycle -------------------------------------------------------------

    async def start(self) -> tuple[str, int]:
        """Bind and serve; returns the bound (host, port)."""
        host, port = split_listen(self.config.listen)
        self._server = await serve(
            self._handle_connection, host, port, max_size=2 * wire.MAX_FRAME_BYTES
        )
        self._ticker = asyncio.create_task(self._tick_loop())
        bound = next(iter(self._server.sockets)).getsockname()
        log.info("listening on %s:%d", bound[0], bound[1])
        return bound[0], bound[1]

    async def stop(self) -> None:
        if self._ticker is not None:
            self._ticker.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._ticker
            self._ticker = None
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    # -- connection handling -----------------------------------------------------

    async def _handle_connection(self, ws: ServerConnection) -> None:
        self._session_counter += 1
        sid = f"s{self._session_counter}"
        outbox: asyncio.Queue[str | None] = asyncio.Queue()
        self._outboxes[sid] = outbox
        self.router.connect(sid)
        writer = asyncio.create_task(self._write_loop(ws, outbox))
        try:
            async for frame in ws:
                out = self.router.handle_frame(
                    sid, frame, self._now_ms(), binary=isinstance(frame, (bytes, bytearray))
                )
                self._deliver(out)
        except ConnectionClosed:
            pass
        finally:
            self._deliver(self.router.disconnect(sid, self._now_ms()))
            self._outboxes.pop(sid, None)
            outbox.put_nowait(_CLOSE)
            with contextlib.suppress(ConnectionClosed):
                await writer

    async def _write_loop(self, ws: ServerConnection, outbox: asyncio.Queue[str | None]) -> None:
        try:
            while True:
                item = await outbox.get()
                if item is _CLOSE:
                    await ws.close()
                    return
                await ws.send(item)
        except ConnectionClosed:
            return

    async def _tick_loop(self) -> None:
        while True:
            await asyncio.sleep(TICK_INTERVAL_MS / 1000)
            self._deliver(self.router.poll_timers(self._now_ms()))

    # -- plumbing ------------------------------------------------------------------

    def _deliver(self, out: TurnOutput) -> None:
        for sid, msg in out.sends:
            outbox = self._outboxes.get(sid)
            if outbox is not None:
                outbox.put_nowait(wire.encode(msg))
        for sid in out.closes:
            outbox = self._outboxes.get(sid)
            if outbox is not None:
                outbox.put_nowait(_CLOSE)

    def _now_ms(self) -> int:
        return int((time.monotonic() - self._started_at) * 1000)

    def _log_event(self, event: dict) -> None:
        event_log.info("%s", json.dumps(event, sort_keys=True))


async def _serve_forever(config: ServerConfig) -> None:
    server = RelayServer(config)
    await server.start()
    stop = asyncio.Event()
    loop = asyncio.get_running_loop()
    for signum in (signal.SIGINT, signal.SIGTERM):
        with contextlib.suppress(NotImplementedError):
            loop.add_signal_handler(signum, stop.set)
    try:
        await stop.wait()
    finally:
        await server.stop()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hushrelay", description="Selective audio-routing relay server."
    )
    parser.add_argument("--listen", help="host:port to bind (overrides config file)")
    parser.add_argument("--config", help="path to a TOML config file")
    parser.add_argument(
        "--log-level",
        choices=["debug", "info", "warning", "error"],
        help="log verbosity (overrides config file)",
    )
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.listen is not None:
            split_listen(args.listen)
            config = replace(config, listen=args.listen)
    except ConfigInvalid as exc:
        print(f"hushrelay: {exc}", file=sys.stderr)
        return 2
    if args.log_level is not None:
        config = replace(config, log_level=args.log_level)

    logging.basicConfig(
        level=getattr(logging, config.log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
        stream=sys.stderr,
    )
    events_to_stdout = logging.StreamHandler(sys.stdout)
    events_to_stdout.setFormatter(logging.Formatter("%(message)s"))
    event_log.addHandler(events_to_stdout)
    event_log.setLevel(logging.INFO)
    try:
        asyncio.run(_serve_forever(config))
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
