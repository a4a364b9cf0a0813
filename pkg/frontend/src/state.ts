// UI state machine: pure update functions so the logic is testable
// without a DOM or a socket.

import { TrajectoryEvent } from "./protocol.js";

export type ConnectionStatus = "idle" | "connecting" | "open" | "retrying" | "closed";

export interface UiState {
    status: ConnectionStatus;
    talking: boolean; // push-to-talk engaged
    latest: number[]; // last received trajectory (clamped)
    previous: number[]; // trajectory before `latest`, animation start point
    lastEventAtMs: number; // wall clock of `latest`
    interEventMs: number; // spacing used for interpolation
    latencyMs: number;
    eventsPerSecond: number;
    history: { atMs: number; trajectory: number[] }[]; // rolling 10 s
}

export const HISTORY_WINDOW_MS = 10_000;
const RATE_WINDOW_MS = 2_000;
const DEFAULT_INTER_EVENT_MS = 200;

export function initialState(): UiState {
    return {
        status: "idle",
        talking: false,
        latest: [0, 0, 0, 0, 0],
        previous: [0, 0, 0, 0, 0],
        lastEventAtMs: 0,
        interEventMs: DEFAULT_INTER_EVENT_MS,
        latencyMs: 0,
        eventsPerSecond: 0,
        history: [],
    };
}

export function onStatus(state: UiState, status: ConnectionStatus): UiState {
    // a dropped connection must not leave the hand mid-animation
    const settled = status === "open" ? state : { ...state, previous: state.latest };
    return { ...settled, status, talking: status === "open" ? state.talking : false };
}

export function onPushToTalk(state: UiState, engaged: boolean): UiState {
    return { ...state, talking: engaged && state.status === "open" };
}

export function onEvent(state: UiState, event: TrajectoryEvent, nowMs: number): UiState {
    const history = state.history
        .filter((h) => nowMs - h.atMs <= HISTORY_WINDOW_MS)
        .concat([{ atMs: nowMs, trajectory: event.trajectory }]);
    const recent = history.filter((h) => nowMs - h.atMs <= RATE_WINDOW_MS).length;
    const interEventMs = state.lastEventAtMs > 0
        ? Math.max(1, Math.min(2000, nowMs - state.lastEventAtMs))
        : DEFAULT_INTER_EVENT_MS;
    return {
        ...state,
        previous: state.latest,
        latest: event.trajectory,
        lastEventAtMs: nowMs,
        interEventMs,
        latencyMs: event.latencyMs,
        eventsPerSecond: recent / (RATE_WINDOW_MS / 1000),
        history,
    };
}

/**
 * Finger positions to draw at `nowMs`: linear motion from the previous
 * trajectory to the latest one over the inter-event interval, so updates
 * animate instead of jumping.
 */
export function renderedTrajectory(state: UiState, nowMs: number): number[] {
    if (state.lastEventAtMs === 0) {
        return state.latest.slice();
    }
    const t = Math.min(1, Math.max(0, (nowMs - state.lastEventAtMs) / state.interEventMs));
    return state.latest.map((v, i) => state.previous[i] + (v - state.previous[i]) * t);
}
