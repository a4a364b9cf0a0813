// Microphone capture (browser only). Audio flows:
//   getUserMedia -> AudioWorklet (or ScriptProcessor fallback)
//   -> downsample to 16 kHz -> int16 -> 1024-sample frames -> callback
// Frames are only delivered while push-to-talk is engaged; releasing it
// also tells the caller so the server ring can be reset.

import { downsampleTo16k, floatToInt16, FrameChunker } from "./resample.js";

const WORKLET_SOURCE = `
class PcmTapProcessor extends AudioWorkletProcessor {
  process(inputs) {
    const ch0 = inputs[0] && inputs[0][0];
    if (ch0 && ch0.length) {
      const copy = new Float32Array(ch0.length);
      copy.set(ch0);
      this.port.postMessage(copy, [copy.buffer]);
    }
    return true;
  }
}
registerProcessor("pcm-tap", PcmTapProcessor);
`;

export class MicrophoneCapture {
    private context: AudioContext | null = null;
    private stream: MediaStream | null = null;
    private chunker = new FrameChunker();
    private engaged = false;

    constructor(private onFrame: (frame: Int16Array) => void) {}

    async start(): Promise<void> {
        if (this.context) {
            return;
        }
        this.stream = await navigator.mediaDevices.getUserMedia({
            audio: { channelCount: 1, echoCancellation: true, noiseSuppression: true },
        });
        const context = new AudioContext();
        this.context = context;
        const source = context.createMediaStreamSource(this.stream);
        const deviceRate = context.sampleRate;
        const deliver = (chunk: Float32Array) => {
            if (!this.engaged) {
                return;
            }
            const lo = downsampleTo16k(chunk, deviceRate);
            for (const frame of this.chunker.push(floatToInt16(lo))) {
                this.onFrame(frame);
            }
        };
        if (context.audioWorklet) {
            const url = URL.createObjectURL(
                new Blob([WORKLET_SOURCE], { type: "application/javascript" }));
            await context.audioWorklet.addModule(url);
            const tap = new AudioWorkletNode(context, "pcm-tap");
            tap.port.onmessage = (ev: MessageEvent<Float32Array>) => deliver(ev.data);
            source.connect(tap);
        } else {
            // older browsers
            const processor = context.createScriptProcessor(4096, 1, 1);
            processor.onaudioprocess = (ev) => deliver(ev.inputBuffer.getChannelData(0));
            source.connect(processor);
            processor.connect(context.destination);
        }
    }

    setPushToTalk(engaged: boolean): void {
        this.engaged = engaged;
        if (!engaged) {
            this.chunker.flush(); // discard the partial frame
        }
    }

    async stop(): Promise<void> {
        this.stream?.getTracks().forEach((t) => t.stop());
        this.stream = null;
        await this.context?.close();
        this.context = null;
    }
}
