// WebSocket client with auto-retry. The socket constructor is injectable
// so tests can run under node (ws package) and the browser uses the
// native one.

import { parseEvent, resetCommand, TrajectoryEvent } from "./protocol.js";
import { ConnectionStatus } from "./state.js";

export interface SocketLike {
    binaryType: string;
    onopen: ((ev?: unknown) => void) | null;
    onclose: ((ev?: unknown) => void) | null;
    onerror: ((ev?: unknown) => void) | null;
    onmessage: ((ev: { data: unknown }) => void) | null;
    send(data: string | ArrayBuffer): void;
    close(): void;
}

export interface StreamClientOptions {
    url: string;
    socketFactory?: (url: string) => SocketLike;
    onEvent?: (event: TrajectoryEvent) => void;
    onStatus?: (status: ConnectionStatus) => void;
    initialBackoffMs?: number;
    maxBackoffMs?: number;
}

export class StreamClient {
    private socket: SocketLike | null = null;
    private backoffMs: number;
    private stopped = false;
    private retryTimer: ReturnType<typeof setTimeout> | null = null;

    constructor(private options: StreamClientOptions) {
        this.backoffMs = options.initialBackoffMs ?? 250;
    }

    connect(): void {
        this.stopped = false;
        this.open();
    }

    private open(): void {
        const factory = this.options.socketFactory
            ?? ((url: string) => new WebSocket(url) as unknown as SocketLike);
        this.emitStatus(this.socket === null ? "connecting" : "retrying");
        const socket = factory(this.options.url);
        socket.binaryType = "arraybuffer";
        socket.onopen = () => {
            this.backoffMs = this.options.initialBackoffMs ?? 250;
            this.emitStatus("open");
        };
        socket.onmessage = (ev) => {
            if (typeof ev.data === "string") {
                const event = parseEvent(ev.data);
                if (event) {
                    this.options.onEvent?.(event);
                } else {
                    console.warn("ignoring malformed server frame", ev.data);
                }
            }
        };
        socket.onerror = () => { /* onclose follows */ };
        socket.onclose = () => {
            this.socket = null;
            if (this.stopped) {
                this.emitStatus("closed");
                return;
            }
            this.emitStatus("retrying");
            this.retryTimer = setTimeout(() => this.open(), this.backoffMs);
            this.backoffMs = Math.min(this.backoffMs * 2, this.options.maxBackoffMs ?? 4000);
        };
        this.socket = socket;
    }

    get isOpen(): boolean {
        return this.socket !== null;
    }

    sendAudio(samples: Int16Array): void {
        // copy out: the frame may be a view into a larger capture buffer
        const bytes = new ArrayBuffer(samples.byteLength);
        new Int16Array(bytes).set(samples);
        this.socket?.send(bytes);
    }

    sendReset(): void {
        this.socket?.send(resetCommand());
    }

    /** For tests: simulate a network drop. */
    dropConnection(): void {
        this.socket?.close();
    }

    close(): void {
        this.stopped = true;
        if (this.retryTimer !== null) {
            clearTimeout(this.retryTimer);
            this.retryTimer = null;
        }
        this.socket?.close();
        this.socket = null;
        this.emitStatus("closed");
    }

    private emitStatus(status: ConnectionStatus): void {
        this.options.onStatus?.(status);
    }
}
