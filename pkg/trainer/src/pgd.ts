/**
 * Projected gradient descent attack in the l-infinity ball, used for
 * adversarial training. Inputs live in [0, 1]; iterates are projected onto
 * the intersection of the epsilon-ball around the clean point and that box.
 */

import { Mlp, forward, softmaxXent, backward, zeroGradients, Gradients } from "./mlp.js";
import { Rng } from "./rng.js";

export interface PgdSpec {
  epsilon: number;
  steps: number;
  stepSize: number;
}

export function pgdAttack(
  mlp: Mlp,
  x: Float64Array,
  label: number,
  spec: PgdSpec,
  rng: Rng,
  grads?: Gradients,
): Float64Array {
  const n = x.length;
  const lo = new Float64Array(n);
  const hi = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    lo[i] = Math.max(0, x[i] - spec.epsilon);
    hi[i] = Math.min(1, x[i] + spec.epsilon);
  }
  const adv = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const v = x[i] + rng.uniform(-spec.epsilon, spec.epsilon);
    adv[i] = v < lo[i] ? lo[i] : v > hi[i] ? hi[i] : v;
  }
  const g = grads ?? zeroGradients(mlp);
  for (let s = 0; s < spec.steps; s++) {
    const trace = forward(mlp, adv);
    const { dLogits } = softmaxXent(trace.logits, label);
    zeroGradientsInPlace(g);
    backward(mlp, trace, dLogits, g);
    for (let i = 0; i < n; i++) {
      const step = g.dX[i] > 0 ? spec.stepSize : g.dX[i] < 0 ? -spec.stepSize : 0;
      const v = adv[i] + step;
      adv[i] = v < lo[i] ? lo[i] : v > hi[i] ? hi[i] : v;
    }
  }
  return adv;
}

function zeroGradientsInPlace(g: Gradients): void {
  for (const w of g.dW) w.fill(0);
  for (const b of g.dB) b.fill(0);
  g.dX.fill(0);
}
