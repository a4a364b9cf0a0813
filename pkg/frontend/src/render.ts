// Hand view: five flexion bars plus a schematic hand whose fingers
// shorten as they close. 0 = fully open, 1 = fully closed.

import { FINGER_NAMES } from "./protocol.js";
import { renderedTrajectory, UiState } from "./state.js";

export interface HandView {
    root: HTMLElement;
    update(state: UiState, nowMs: number): void;
}

export function createHandView(container: HTMLElement): HandView {
    container.innerHTML = "";
    const bars: HTMLElement[] = [];
    const values: HTMLElement[] = [];
    const fingers: HTMLElement[] = [];

    const hand = document.createElement("div");
    hand.className = "hand";
    for (let i = 0; i < 5; i++) {
        const finger = document.createElement("div");
        finger.className = "finger";
        hand.appendChild(finger);
        fingers.push(finger);
    }
    container.appendChild(hand);

    const barsBox = document.createElement("div");
    barsBox.className = "bars";
    FINGER_NAMES.forEach((name) => {
        const row = document.createElement("div");
        row.className = "bar-row";
        const label = document.createElement("span");
        label.className = "bar-label";
        label.textContent = name;
        const track = document.createElement("div");
        track.className = "bar-track";
        const fill = document.createElement("div");
        fill.className = "bar-fill";
        track.appendChild(fill);
        const value = document.createElement("span");
        value.className = "bar-value";
        row.append(label, track, value);
        barsBox.appendChild(row);
        bars.push(fill);
        values.push(value);
    });
    container.appendChild(barsBox);

    return {
        root: container,
        update(state: UiState, nowMs: number): void {
            const traj = renderedTrajectory(state, nowMs);
            for (let i = 0; i < 5; i++) {
                bars[i].style.width = `${(traj[i] * 100).toFixed(1)}%`;
                values[i].textContent = traj[i].toFixed(2);
                // closing a finger curls it: shrink its visible length
                fingers[i].style.height = `${(72 - 46 * traj[i]).toFixed(0)}px`;
            }
        },
    };
}

export function formatBadges(state: UiState): string {
    const rate = state.eventsPerSecond.toFixed(1);
    const latency = state.latencyMs.toFixed(1);
    return `${state.status} | ${rate} ev/s | ${latency} ms`;
}
