/** Line-oriented transport abstraction: WebSocket in the browser, anything in tests. */

export interface Transport {
  send(line: string): void;
  close(): void;
  onLine: ((line: string) => void) | null;
  onOpen: (() => void) | null;
  onClose: (() => void) | null;
}

/** One WebSocket text frame carries exactly one protocol line. */
export class WebSocketTransport implements Transport {
  onLine: ((line: string) => void) | null = null;
  onOpen: (() => void) | null = null;
  onClose: (() => void) | null = null;
  private ws: WebSocket;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => this.onOpen?.();
    this.ws.onclose = () => this.onClose?.();
    this.ws.onerror = () => this.onClose?.();
    this.ws.onmessage = (event) => {
      if (typeof event.data === "string") {
        this.onLine?.(event.data);
      }
    };
  }

  send(line: string): void {
    if (this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(line);
    }
  }

  close(): void {
    this.ws.close();
  }
}
