/**
 * Plain float64 MLP: ReLU hidden layers, identity logits, softmax
 * cross-entropy loss. Everything is explicit loops over Float64Array so the
 * arithmetic is reproducible and easy to compare against other runtimes.
 */

import { Rng } from "./rng.js";

export interface DenseLayer {
  nIn: number;
  nOut: number;
  /** Row-major nOut x nIn. */
  w: Float64Array;
  b: Float64Array;
}

export interface Mlp {
  arch: number[];
  layers: DenseLayer[];
}

/** Kaiming-normal weights (std sqrt(2/fanIn)), zero biases. */
export function createMlp(arch: number[], rng: Rng): Mlp {
  if (arch.length < 2) throw new Error("architecture needs at least input and output sizes");
  const layers: DenseLayer[] = [];
  for (let l = 0; l < arch.length - 1; l++) {
    const nIn = arch[l];
    const nOut = arch[l + 1];
    const w = new Float64Array(nOut * nIn);
    const std = Math.sqrt(2.0 / nIn);
    for (let i = 0; i < w.length; i++) w[i] = std * rng.normal();
    layers.push({ nIn, nOut, w, b: new Float64Array(nOut) });
  }
  return { arch: arch.slice(), layers };
}

export function cloneMlp(mlp: Mlp): Mlp {
  return {
    arch: mlp.arch.slice(),
    layers: mlp.layers.map((l) => ({
      nIn: l.nIn,
      nOut: l.nOut,
      w: l.w.slice(),
      b: l.b.slice(),
    })),
  };
}

/** Per-layer post-activation values kept for backprop. acts[0] is the input. */
export interface ForwardTrace {
  acts: Float64Array[];
  /** Pre-activations per layer, same indexing as layers. */
  pre: Float64Array[];
  logits: Float64Array;
}

/**
 * Forward pass. dropMask, when given, multiplies the post-activation of the
 * layer with the matching index (inverted-dropout scaling baked into the
 * mask), which is how training-time dropout enters.
 */
export function forward(mlp: Mlp, x: Float64Array, dropMask?: { layer: number; mask: Float64Array }): ForwardTrace {
  const acts: Float64Array[] = [x];
  const pre: Float64Array[] = [];
  let cur = x;
  const last = mlp.layers.length - 1;
  for (let l = 0; l < mlp.layers.length; l++) {
    const { nIn, nOut, w, b } = mlp.layers[l];
    const z = new Float64Array(nOut);
    for (let i = 0; i < nOut; i++) {
      let s = b[i];
      const off = i * nIn;
      for (let j = 0; j < nIn; j++) s += w[off + j] * cur[j];
      z[i] = s;
    }
    pre.push(z);
    if (l === last) {
      acts.push(z);
      cur = z;
      break;
    }
    const h = new Float64Array(nOut);
    for (let i = 0; i < nOut; i++) h[i] = z[i] > 0 ? z[i] : 0;
    if (dropMask && dropMask.layer === l) {
      for (let i = 0; i < nOut; i++) h[i] *= dropMask.mask[i];
    }
    acts.push(h);
    cur = h;
  }
  return { acts, pre, logits: acts[acts.length - 1] };
}

export function forwardLogits(mlp: Mlp, x: Float64Array): Float64Array {
  return forward(mlp, x).logits;
}

/** Softmax cross-entropy; returns the loss and d(loss)/d(logits). */
export function softmaxXent(logits: Float64Array, label: number): { loss: number; dLogits: Float64Array } {
  let max = -Infinity;
  for (const v of logits) if (v > max) max = v;
  let sum = 0;
  const exps = new Float64Array(logits.length);
  for (let i = 0; i < logits.length; i++) {
    exps[i] = Math.exp(logits[i] - max);
    sum += exps[i];
  }
  const dLogits = new Float64Array(logits.length);
  for (let i = 0; i < logits.length; i++) {
    const p = exps[i] / sum;
    dLogits[i] = p - (i === label ? 1 : 0);
  }
  const loss = Math.log(sum) + max - logits[label];
  return { loss, dLogits };
}

export interface Gradients {
  dW: Float64Array[];
  dB: Float64Array[];
  /** Gradient with respect to the input, for PGD. */
  dX: Float64Array;
}

export function zeroGradients(mlp: Mlp): Gradients {
  return {
    dW: mlp.layers.map((l) => new Float64Array(l.w.length)),
    dB: mlp.layers.map((l) => new Float64Array(l.b.length)),
    dX: new Float64Array(mlp.arch[0]),
  };
}

/**
 * Backprop from dLogits through the trace; accumulates into grads so a batch
 * can sum before the update. ReLU subgradient at exactly zero is taken as 0,
 * so fully dead units stop receiving weight updates.
 */
export function backward(
  mlp: Mlp,
  trace: ForwardTrace,
  dLogits: Float64Array,
  grads: Gradients,
  dropMask?: { layer: number; mask: Float64Array },
): void {
  let delta = dLogits;
  for (let l = mlp.layers.length - 1; l >= 0; l--) {
    const { nIn, nOut, w } = mlp.layers[l];
    const below = trace.acts[l];
    const dW = grads.dW[l];
    const dB = grads.dB[l];
    for (let i = 0; i < nOut; i++) {
      const d = delta[i];
      dB[i] += d;
      const off = i * nIn;
      for (let j = 0; j < nIn; j++) dW[off + j] += d * below[j];
    }
    const dBelow = new Float64Array(nIn);
    for (let i = 0; i < nOut; i++) {
      const d = delta[i];
      const off = i * nIn;
      for (let j = 0; j < nIn; j++) dBelow[j] += d * w[off + j];
    }
    if (l > 0) {
      const preBelow = trace.pre[l - 1];
      if (dropMask && dropMask.layer === l - 1) {
        for (let j = 0; j < nIn; j++) dBelow[j] *= dropMask.mask[j];
      }
      for (let j = 0; j < nIn; j++) {
        if (preBelow[j] <= 0) dBelow[j] = 0;
      }
    }
    delta = dBelow;
  }
  for (let j = 0; j < delta.length; j++) grads.dX[j] += delta[j];
}

export function predict(mlp: Mlp, x: Float64Array): number {
  const logits = forwardLogits(mlp, x);
  let best = 0;
  for (let i = 1; i < logits.length; i++) if (logits[i] > logits[best]) best = i;
  return best;
}

export function accuracy(mlp: Mlp, xs: Float64Array[], ys: Int32Array): number {
  if (xs.length === 0) return 0;
  let hits = 0;
  for (let i = 0; i < xs.length; i++) if (predict(mlp, xs[i]) === ys[i]) hits++;
  return hits / xs.length;
}
