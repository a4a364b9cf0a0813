// Wiring: query parameters pick the service (?host=...&port=...), a
// push-to-talk button gates the microphone, events animate the hand.

import { MicrophoneCapture } from "./capture.js";
import { StreamClient } from "./client.js";
import { createHandView, formatBadges } from "./render.js";
import { initialState, onEvent, onPushToTalk, onStatus, UiState } from "./state.js";

function serviceUrl(): string {
    const params = new URLSearchParams(location.search);
    const host = params.get("host") ?? location.hostname ?? "127.0.0.1";
    const port = params.get("port") ?? (location.port || "8765");
    return `ws://${host}:${port}/stream`;
}

function start(): void {
    let state: UiState = initialState();
    const view = createHandView(document.getElementById("hand-container")!);
    const badges = document.getElementById("badges")!;
    const talkButton = document.getElementById("talk") as HTMLButtonElement;

    const client = new StreamClient({
        url: serviceUrl(),
        onEvent: (event) => {
            state = onEvent(state, event, performance.now());
        },
        onStatus: (status) => {
            state = onStatus(state, status);
            talkButton.disabled = status !== "open";
        },
    });

    const capture = new MicrophoneCapture((frame) => client.sendAudio(frame));

    const setTalking = async (engaged: boolean) => {
        if (engaged) {
            try {
                await capture.start();
            } catch (err) {
                badges.textContent = "microphone permission denied";
                return;
            }
        }
        state = onPushToTalk(state, engaged);
        capture.setPushToTalk(state.talking);
        talkButton.classList.toggle("active", state.talking);
        if (!engaged) {
            client.sendReset(); // clear the server ring when the key is released
        }
    };

    talkButton.addEventListener("mousedown", () => void setTalking(true));
    talkButton.addEventListener("mouseup", () => void setTalking(false));
    talkButton.addEventListener("mouseleave", () => void setTalking(false));
    talkButton.addEventListener("touchstart", (e) => { e.preventDefault(); void setTalking(true); });
    talkButton.addEventListener("touchend", (e) => { e.preventDefault(); void setTalking(false); });
    window.addEventListener("keydown", (e) => {
        if (e.code === "Space" && !e.repeat) void setTalking(true);
    });
    window.addEventListener("keyup", (e) => {
        if (e.code === "Space") void setTalking(false);
    });

    const tick = () => {
        view.update(state, performance.now());
        badges.textContent = formatBadges(state);
        requestAnimationFrame(tick);
    };
    client.connect();
    requestAnimationFrame(tick);
}

document.addEventListener("DOMContentLoaded", start);
