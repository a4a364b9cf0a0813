// Capture-path audio conversion: device-rate Float32 -> 16 kHz signed
// 16-bit PCM in fixed 1024-sample frames.

export const TARGET_RATE = 16000;
export const FRAME_SAMPLES = 1024;

/**
 * Downsample to 16 kHz: a short boxcar smooths the signal before linear
 * interpolation so the decimation does not alias badly. Good enough for
 * speech; not a brick-wall filter.
 */
export function downsampleTo16k(input: Float32Array, inRate: number): Float32Array {
    if (inRate === TARGET_RATE) {
        return input;
    }
    if (inRate < TARGET_RATE) {
        throw new Error(`cannot upsample from ${inRate} Hz`);
    }
    const smoothed = boxcar4(input);
    const n = input.length;
    const outLength = Math.floor(n * TARGET_RATE / inRate);
    const out = new Float32Array(outLength);
    const step = inRate / TARGET_RATE;
    for (let i = 0; i < outLength; i++) {
        const pos = i * step;
        const i0 = Math.min(Math.floor(pos), n - 1);
        const i1 = Math.min(i0 + 1, n - 1);
        const frac = pos - i0;
        out[i] = (1 - frac) * smoothed[i0] + frac * smoothed[i1];
    }
    return out;
}

// centered-ish 4-tap moving average, matching mode="same" convolution
// with kernel [1,1,1,1]/4 (window spans i-2..i+1)
function boxcar4(x: Float32Array): Float32Array {
    const n = x.length;
    const out = new Float32Array(n);
    for (let i = 0; i < n; i++) {
        let sum = 0;
        for (let k = -2; k <= 1; k++) {
            const j = i + k;
            if (j >= 0 && j < n) {
                sum += x[j];
            }
        }
        out[i] = sum / 4;
    }
    return out;
}

/** Quantize [-1, 1] floats to int16, clamping out-of-range samples. */
export function floatToInt16(input: Float32Array): Int16Array {
    const out = new Int16Array(input.length);
    for (let i = 0; i < input.length; i++) {
        const v = Math.round(input[i] * 32768);
        out[i] = Math.max(-32768, Math.min(32767, v));
    }
    return out;
}

/**
 * Stateful splitter into fixed frames (~64 ms at 16 kHz). Leftover
 * samples wait for the next push; flush() drains them as a short frame.
 */
export class FrameChunker {
    private pending: Int16Array = new Int16Array(0);

    constructor(private frameSamples: number = FRAME_SAMPLES) {}

    push(samples: Int16Array): Int16Array[] {
        const merged = new Int16Array(this.pending.length + samples.length);
        merged.set(this.pending);
        merged.set(samples, this.pending.length);
        const frames: Int16Array[] = [];
        let offset = 0;
        while (merged.length - offset >= this.frameSamples) {
            frames.push(merged.slice(offset, offset + this.frameSamples));
            offset += this.frameSamples;
        }
        this.pending = merged.slice(offset);
        return frames;
    }

    flush(): Int16Array | null {
        if (this.pending.length === 0) {
            return null;
        }
        const out = this.pending;
        this.pending = new Int16Array(0);
        return out;
    }
}
