"""Run the gateway under a real loopback uvicorn server for streaming tests.

The in-process ASGI test transport buffers whole responses, which hides
streaming behaviour; chunk-timing assertions need actual sockets.
"""

from __future__ import annotations

import contextlib
import socket
import threading
import time

import httpx
import uvicorn


@contextlib.contextmanager
def run_gateway(app):
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 5.0
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("gateway server failed to start")
        time.sleep(0.01)
    base_url = f"http://127.0.0.1:{port}"
    client = httpx.Client(base_url=base_url, timeout=10.0)
    client.get("/api/health")  # absorb first-request setup cost
    try:
        yield client
    finally:
        client.close()
        server.should_exit = True
        thread.join(timeout=5.0)
