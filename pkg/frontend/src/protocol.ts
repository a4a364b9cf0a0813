// Wire protocol: the service pushes one JSON text frame per trajectory
// event; we send binary PCM frames and JSON control frames.

export interface TrajectoryEvent {
    trajectory: number[]; // thumb, index, middle, ring, pinky
    latencyMs: number;
    tsMs: number;
}

export const FINGER_NAMES = ["thumb", "index", "middle", "ring", "pinky"] as const;

export function clamp01(v: number): number {
    return v < 0 ? 0 : v > 1 ? 1 : v;
}

/**
 * Parse a server text frame. Returns null for anything that is not a
 * well-formed event (including {"error": ...} frames) — the caller logs
 * and keeps the connection.
 */
export function parseEvent(text: string): TrajectoryEvent | null {
    let raw: unknown;
    try {
        raw = JSON.parse(text);
    } catch {
        return null;
    }
    if (typeof raw !== "object" || raw === null) {
        return null;
    }
    const obj = raw as Record<string, unknown>;
    const traj = obj["trajectory"];
    if (!Array.isArray(traj) || traj.length !== 5 || !traj.every((v) => typeof v === "number" && isFinite(v))) {
        return null;
    }
    if (typeof obj["latency_ms"] !== "number" || typeof obj["ts_ms"] !== "number") {
        return null;
    }
    return {
        trajectory: traj.map(clamp01),
        latencyMs: obj["latency_ms"],
        tsMs: obj["ts_ms"],
    };
}

export function resetCommand(): string {
    return JSON.stringify({ cmd: "reset" });
}
