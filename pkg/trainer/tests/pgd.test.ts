import { describe, expect, test } from "vitest";

import { forward, softmaxXent } from "../src/mlp.js";
import { pgdAttack } from "../src/pgd.js";
import { Rng } from "../src/rng.js";
import { syntheticDigits } from "../src/data.js";
import { defaultSpec, train } from "../src/train.js";

describe("projected gradient attack", () => {
  test("iterates stay inside the epsilon ball intersected with [0,1]", () => {
    const data = syntheticDigits(0, 64, 8, 16);
    const spec = defaultSpec([16, 8, 10], "vanilla", 0);
    spec.epochs = 3;
    const { mlp } = train(spec, data);
    const pgd = { epsilon: 0.15, steps: 25, stepSize: 0.1 };
    const rng = new Rng(123);
    for (let k = 0; k < 5; k++) {
      const x = data.test.images[k];
      const adv = pgdAttack(mlp, x, data.test.labels[k], pgd, rng);
      expect(adv.length).toBe(x.length);
      for (let i = 0; i < x.length; i++) {
        expect(adv[i]).toBeGreaterThanOrEqual(Math.max(0, x[i] - pgd.epsilon) - 1e-12);
        expect(adv[i]).toBeLessThanOrEqual(Math.min(1, x[i] + pgd.epsilon) + 1e-12);
      }
    }
  });

  test("is deterministic for a fixed rng seed", () => {
    const data = syntheticDigits(1, 64, 4, 16);
    const spec = defaultSpec([16, 6, 10], "vanilla", 1);
    spec.epochs = 2;
    const { mlp } = train(spec, data);
    const pgd = { epsilon: 0.1, steps: 10, stepSize: 0.05 };
    const a = pgdAttack(mlp, data.test.images[0], data.test.labels[0], pgd, new Rng(9));
    const b = pgdAttack(mlp, data.test.images[0], data.test.labels[0], pgd, new Rng(9));
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  test("raises the loss relative to the clean input on a trained model", () => {
    const data = syntheticDigits(2, 200, 40, 16);
    const spec = defaultSpec([16, 12, 10], "vanilla", 2);
    spec.epochs = 15;
    const { mlp } = train(spec, data);
    const pgd = { epsilon: 0.15, steps: 30, stepSize: 0.05 };
    const rng = new Rng(55);
    let clean = 0;
    let attacked = 0;
    for (let k = 0; k < 20; k++) {
      const x = data.test.images[k];
      const y = data.test.labels[k];
      clean += softmaxXent(forward(mlp, x).logits, y).loss;
      const adv = pgdAttack(mlp, x, y, pgd, rng);
      attacked += softmaxXent(forward(mlp, adv).logits, y).loss;
    }
    expect(attacked).toBeGreaterThan(clean);
  });

  test("zero steps still randomizes within the ball", () => {
    const data = syntheticDigits(3, 32, 4, 16);
    const spec = defaultSpec([16, 4, 10], "vanilla", 3);
    spec.epochs = 1;
    const { mlp } = train(spec, data);
    const x = data.test.images[0];
    const adv = pgdAttack(mlp, x, data.test.labels[0], { epsilon: 0.1, steps: 0, stepSize: 0.1 }, new Rng(4));
    let moved = 0;
    for (let i = 0; i < x.length; i++) {
      moved += Math.abs(adv[i] - x[i]);
      expect(Math.abs(adv[i] - x[i])).toBeLessThanOrEqual(0.1 + 1e-12);
    }
    expect(moved).toBeGreaterThan(0);
  });
});
