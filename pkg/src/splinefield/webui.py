"""Static hosting and a WebSocket bridge for the browser playground.

The simulation protocol runs over plain TCP (one JSON object per line).
Browsers cannot open raw sockets, so `serve --ui` also starts an HTTP
server that (a) serves the playground's static bundle and (b) upgrades
`GET /ws` to a WebSocket and pipes frames to/from a local TCP connection:
one text frame <-> one protocol line.  RFC 6455 subset: text/close/ping
frames, server-to-client unmasked, no extensions.
"""

from __future__ import annotations

import base64
import hashlib
import http.server
import os
import socket
import struct
import threading

_WS_MAGIC = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _accept_key(key: str) -> str:
    digest = hashlib.sha1((key + _WS_MAGIC).encode()).digest()
    return base64.b64encode(digest).decode()


def encode_frame(opcode: int, payload: bytes) -> bytes:
    """Server-to-client frame (FIN set, unmasked)."""
    first = 0x80 | opcode
    length = len(payload)
    if length < 126:
        header = struct.pack("!BB", first, length)
    elif length < 1 << 16:
        header = struct.pack("!BBH", first, 126, length)
    else:
        header = struct.pack("!BBQ", first, 127, length)
    return header + payload


def encode_text_frame(payload: bytes) -> bytes:
    return encode_frame(0x1, payload)


def _read_exact(sock: socket.socket, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise ConnectionError("websocket peer closed")
        buf += chunk
    return buf


def read_frame(sock: socket.socket) -> tuple[int, bytes]:
    """Returns (opcode, payload) of one client frame (client frames are masked)."""
    head = _read_exact(sock, 2)
    opcode = head[0] & 0x0F
    masked = head[1] & 0x80
    length = head[1] & 0x7F
    if length == 126:
        length = struct.unpack("!H", _read_exact(sock, 2))[0]
    elif length == 127:
        length = struct.unpack("!Q", _read_exact(sock, 8))[0]
    mask = _read_exact(sock, 4) if masked else b"\x00" * 4
    payload = bytearray(_read_exact(sock, length))
    if masked:
        for i in range(length):
            payload[i] ^= mask[i % 4]
    return opcode, bytes(payload)


def _pump_ws_to_tcp(ws: socket.socket, tcp: socket.socket) -> None:
    try:
        while True:
            opcode, payload = read_frame(ws)
            if opcode == 0x8:  # close
                break
            if opcode == 0x9:  # ping -> pong
                ws.sendall(encode_frame(0xA, payload))
                continue
            if opcode in (0x1, 0x2):
                tcp.sendall(payload.rstrip(b"\n") + b"\n")
    except (ConnectionError, OSError):
        pass
    finally:
        for s in (ws, tcp):
            try:
                s.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass


def _pump_tcp_to_ws(tcp: socket.socket, ws: socket.socket) -> None:
    try:
        buf = b""
        while True:
            chunk = tcp.recv(65536)
            if not chunk:
                break
            buf += chunk
            while b"\n" in buf:
                line, buf = buf.split(b"\n", 1)
                if line:
                    ws.sendall(encode_text_frame(line))
    except (ConnectionError, OSError):
        pass
    finally:
        for s in (ws, tcp):
            try:
                s.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass


def default_ui_dir() -> str:
    packaged = os.path.join(os.path.dirname(__file__), "ui")
    if os.path.isdir(packaged):
        return packaged
    return os.path.join(os.getcwd(), "frontend", "dist")


class _UIHandler(http.server.SimpleHTTPRequestHandler):
    # Set per server instance.
    sim_host = "127.0.0.1"
    sim_port = 7878

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def do_GET(self):
        if self.path.split("?")[0] == "/ws":
            self._upgrade_websocket()
            return
        super().do_GET()

    def _upgrade_websocket(self):
        key = self.headers.get("Sec-WebSocket-Key")
        if self.headers.get("Upgrade", "").lower() != "websocket" or not key:
            self.send_error(400, "expected a websocket upgrade")
            return
        try:
            tcp = socket.create_connection((self.sim_host, self.sim_port), timeout=5.0)
        except OSError as exc:
            self.send_error(502, f"simulation service unreachable: {exc}")
            return
        self.send_response(101, "Switching Protocols")
        self.send_header("Upgrade", "websocket")
        self.send_header("Connection", "Upgrade")
        self.send_header("Sec-WebSocket-Accept", _accept_key(key))
        self.end_headers()
        self.wfile.flush()
        ws = self.connection
        ws.settimeout(None)
        tcp.settimeout(None)
        t = threading.Thread(target=_pump_tcp_to_ws, args=(tcp, ws), daemon=True)
        t.start()
        _pump_ws_to_tcp(ws, tcp)
        t.join(timeout=1.0)
        self.close_connection = True


def start_ui_server(http_port: int, ui_dir: str | None, sim_host: str, sim_port: int):
    """Serve the static bundle and the /ws bridge in a background thread."""
    directory = ui_dir or default_ui_dir()

    class Handler(_UIHandler):
        pass

    Handler.sim_host = sim_host
    Handler.sim_port = sim_port

    def factory(*args, **kwargs):
        return Handler(*args, directory=directory, **kwargs)

    httpd = http.server.ThreadingHTTPServer(("127.0.0.1", http_port), factory)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    return httpd
