"""Selective audio-routing relay: room state core, strict wire codec,
deterministic router, websocket server, and a simulation harness."""

__version__ = "0.1.0"
