/**
 * Dataset plumbing: MNIST from local IDX files (gz or raw, downloader
 * included), with a deterministic synthetic digit set as fallback so training
 * works on machines with no network and no cached data.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import * as zlib from "node:zlib";
import * as https from "node:https";

import { Rng } from "./rng.js";

export interface Dataset {
  images: Float64Array[];
  labels: Int32Array;
}

export interface DataSplit {
  train: Dataset;
  test: Dataset;
  source: "mnist" | "synthetic";
}

const MNIST_FILES = {
  trainImages: "train-images-idx3-ubyte",
  trainLabels: "train-labels-idx1-ubyte",
  testImages: "t10k-images-idx3-ubyte",
  testLabels: "t10k-labels-idx1-ubyte",
};

const MNIST_BASE = "https://ossci-datasets.s3.amazonaws.com/mnist/";

function readMaybeGz(file: string): Buffer | null {
  if (fs.existsSync(file)) return fs.readFileSync(file);
  if (fs.existsSync(file + ".gz")) return zlib.gunzipSync(fs.readFileSync(file + ".gz"));
  return null;
}

export function parseIdxImages(buf: Buffer): Float64Array[] {
  const magic = buf.readUInt32BE(0);
  if (magic !== 0x00000803) throw new Error(`bad image magic 0x${magic.toString(16)}`);
  const n = buf.readUInt32BE(4);
  const rows = buf.readUInt32BE(8);
  const cols = buf.readUInt32BE(12);
  const dim = rows * cols;
  const out: Float64Array[] = [];
  let off = 16;
  for (let k = 0; k < n; k++) {
    const img = new Float64Array(dim);
    for (let i = 0; i < dim; i++) img[i] = buf[off + i] / 255.0;
    out.push(img);
    off += dim;
  }
  return out;
}

export function parseIdxLabels(buf: Buffer): Int32Array {
  const magic = buf.readUInt32BE(0);
  if (magic !== 0x00000801) throw new Error(`bad label magic 0x${magic.toString(16)}`);
  const n = buf.readUInt32BE(4);
  const out = new Int32Array(n);
  for (let k = 0; k < n; k++) out[k] = buf[8 + k];
  return out;
}

function fetchTo(url: string, dest: string): Promise<void> {
  return new Promise((resolve, reject) => {
    const file = fs.createWriteStream(dest);
    https
      .get(url, (res) => {
        if (res.statusCode !== 200) {
          file.close();
          fs.rmSync(dest, { force: true });
          reject(new Error(`HTTP ${res.statusCode} for ${url}`));
          return;
        }
        res.pipe(file);
        file.on("finish", () => file.close(() => resolve()));
      })
      .on("error", (err) => {
        file.close();
        fs.rmSync(dest, { force: true });
        reject(err);
      });
  });
}

export async function downloadMnist(dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  for (const name of Object.values(MNIST_FILES)) {
    const dest = path.join(dir, name + ".gz");
    if (fs.existsSync(dest) || fs.existsSync(path.join(dir, name))) continue;
    await fetchTo(MNIST_BASE + name + ".gz", dest);
  }
}

export function loadMnist(dir: string): DataSplit | null {
  const bufs: Record<string, Buffer> = {};
  for (const [key, name] of Object.entries(MNIST_FILES)) {
    const b = readMaybeGz(path.join(dir, name));
    if (b === null) return null;
    bufs[key] = b;
  }
  return {
    train: { images: parseIdxImages(bufs.trainImages), labels: parseIdxLabels(bufs.trainLabels) },
    test: { images: parseIdxImages(bufs.testImages), labels: parseIdxLabels(bufs.testLabels) },
    source: "mnist",
  };
}

/**
 * Synthetic stand-in: each class is a fixed random stroke pattern on 28x28;
 * samples vary by per-pixel noise and intensity jitter. Same seed, same data.
 */
export function syntheticDigits(seed: number, nTrain: number, nTest: number, inputDim = 784): DataSplit {
  const rng = new Rng(0xd1917 ^ seed);
  const nClasses = 10;
  const side = Math.round(Math.sqrt(inputDim));
  const templates: Float64Array[] = [];
  for (let c = 0; c < nClasses; c++) {
    const t = new Float64Array(inputDim);
    // a handful of blurred bars per class
    for (let s = 0; s < 4; s++) {
      const horizontal = rng.next() < 0.5;
      const pos = 3 + rng.int(Math.max(1, side - 6));
      const start = rng.int(Math.max(1, side / 2));
      const len = Math.min(side - start, 5 + rng.int(side / 2));
      for (let k = start; k < start + len; k++) {
        for (let wdt = -1; wdt <= 1; wdt++) {
          const r = horizontal ? pos + wdt : k;
          const cc = horizontal ? k : pos + wdt;
          if (r < 0 || r >= side || cc < 0 || cc >= side) continue;
          const idx = r * side + cc;
          if (idx < inputDim) t[idx] = Math.min(1, t[idx] + (wdt === 0 ? 0.9 : 0.45));
        }
      }
    }
    templates.push(t);
  }
  const make = (n: number): Dataset => {
    const images: Float64Array[] = [];
    const labels = new Int32Array(n);
    for (let k = 0; k < n; k++) {
      const c = k % nClasses;
      const gain = 0.75 + 0.5 * rng.next();
      const img = new Float64Array(inputDim);
      const t = templates[c];
      for (let i = 0; i < inputDim; i++) {
        const v = t[i] * gain + 0.08 * rng.normal();
        img[i] = v < 0 ? 0 : v > 1 ? 1 : v;
      }
      images.push(img);
      labels[k] = c;
    }
    return { images, labels };
  };
  return { train: make(nTrain), test: make(nTest), source: "synthetic" };
}

export interface DataRequest {
  dataDir?: string;
  download?: boolean;
  seed: number;
  nTrain: number;
  nTest: number;
  inputDim: number;
}

/** Local MNIST when present (downloading if asked), synthetic otherwise. */
export async function getData(req: DataRequest): Promise<DataSplit> {
  if (req.dataDir && req.inputDim === 784) {
    if (req.download) {
      try {
        await downloadMnist(req.dataDir);
      } catch {
        // fall through to whatever is on disk, then to synthetic
      }
    }
    const mnist = loadMnist(req.dataDir);
    if (mnist) {
      return {
        train: subsample(mnist.train, req.nTrain),
        test: subsample(mnist.test, req.nTest),
        source: "mnist",
      };
    }
  }
  return syntheticDigits(req.seed, req.nTrain, req.nTest, req.inputDim);
}

function subsample(d: Dataset, n: number): Dataset {
  if (n >= d.images.length) return d;
  return { images: d.images.slice(0, n), labels: d.labels.slice(0, n) };
}
