/**
 * Network interchange format: version-1 JSON with explicit per-layer weight
 * matrices (rows = output units), biases, and activation tags. Trained
 * classifiers are exported with ReLU hidden layers and an identity output
 * layer holding the logits, so downstream analysis tools see the full
 * piecewise-linear map. Metadata values must be strings.
 */

import * as fs from "node:fs";

import { Mlp, DenseLayer } from "./mlp.js";

export interface LayerDoc {
  weights: number[][];
  bias: number[];
  activation: "relu" | "identity";
}

export interface NetworkDoc {
  version: 1;
  input_dim: number;
  layers: LayerDoc[];
  metadata: Record<string, string>;
}

export function exportNetwork(mlp: Mlp, metadata: Record<string, string>): NetworkDoc {
  const layers: LayerDoc[] = mlp.layers.map((layer, idx) => ({
    weights: weightRows(layer),
    bias: Array.from(layer.b),
    activation: idx === mlp.layers.length - 1 ? "identity" : "relu",
  }));
  return { version: 1, input_dim: mlp.arch[0], layers, metadata };
}

function weightRows(layer: DenseLayer): number[][] {
  const rows: number[][] = [];
  for (let i = 0; i < layer.nOut; i++) {
    const row = new Array<number>(layer.nIn);
    for (let j = 0; j < layer.nIn; j++) row[j] = layer.w[i * layer.nIn + j];
    rows.push(row);
  }
  return rows;
}

export function serializeNetwork(doc: NetworkDoc): string {
  return JSON.stringify(doc, null, 1) + "\n";
}

export function writeNetworkFile(path: string, doc: NetworkDoc): void {
  fs.writeFileSync(path, serializeNetwork(doc), "utf-8");
}

export function parseNetworkDoc(text: string): NetworkDoc {
  const doc = JSON.parse(text) as NetworkDoc;
  if (doc.version !== 1) throw new Error(`unsupported interchange version ${doc.version}`);
  if (!Number.isInteger(doc.input_dim) || doc.input_dim <= 0) throw new Error("bad input_dim");
  if (!Array.isArray(doc.layers) || doc.layers.length === 0) throw new Error("layers missing");
  let prev = doc.input_dim;
  for (const layer of doc.layers) {
    if (layer.activation !== "relu" && layer.activation !== "identity") {
      throw new Error(`unknown activation ${String(layer.activation)}`);
    }
    if (layer.weights.length !== layer.bias.length) throw new Error("weights/bias mismatch");
    for (const row of layer.weights) {
      if (row.length !== prev) throw new Error("ragged weights");
    }
    prev = layer.weights.length;
  }
  return doc;
}

export function readNetworkFile(path: string): NetworkDoc {
  return parseNetworkDoc(fs.readFileSync(path, "utf-8"));
}

/** Rebuild an Mlp from a doc shaped as relu hidden layers + identity output. */
export function importNetwork(doc: NetworkDoc): Mlp {
  const layers: DenseLayer[] = [];
  const arch = [doc.input_dim];
  doc.layers.forEach((layerDoc, idx) => {
    const expected = idx === doc.layers.length - 1 ? "identity" : "relu";
    if (layerDoc.activation !== expected) {
      throw new Error(`layer ${idx + 1}: expected ${expected}, got ${layerDoc.activation}`);
    }
    const nOut = layerDoc.weights.length;
    const nIn = idx === 0 ? doc.input_dim : arch[arch.length - 1];
    const w = new Float64Array(nOut * nIn);
    for (let i = 0; i < nOut; i++) {
      for (let j = 0; j < nIn; j++) w[i * nIn + j] = layerDoc.weights[i][j];
    }
    layers.push({ nIn, nOut, w, b: Float64Array.from(layerDoc.bias) });
    arch.push(nOut);
  });
  return { arch, layers };
}

/** Evaluate the doc directly (mirrors the schema semantics, not the Mlp). */
export function forwardDoc(doc: NetworkDoc, x: number[]): number[] {
  let cur = x;
  for (const layer of doc.layers) {
    const next = new Array<number>(layer.weights.length);
    for (let i = 0; i < layer.weights.length; i++) {
      let acc = layer.bias[i];
      const row = layer.weights[i];
      for (let j = 0; j < row.length; j++) acc += row[j] * cur[j];
      next[i] = layer.activation === "relu" ? Math.max(0, acc) : acc;
    }
    cur = next;
  }
  return cur;
}
