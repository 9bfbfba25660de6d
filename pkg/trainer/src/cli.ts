#!/usr/bin/env node
/**
 * Command-line entry point: train one MLP classifier under a named regime
 * and export it as an interchange JSON file, with an optional training log.
 */

import * as fs from "node:fs";
import { pathToFileURL } from "node:url";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { getData } from "./data.js";
import { accuracy } from "./mlp.js";
import { defaultSpec, train, Regime, REGIMES } from "./train.js";
import { exportNetwork, writeNetworkFile } from "./interchange.js";

export function parseArch(text: string): number[] {
  const parts = text.split(",").map((p) => p.trim());
  const arch = parts.map((p) => Number(p));
  if (arch.length < 2 || arch.some((v) => !Number.isInteger(v) || v <= 0)) {
    throw new Error(`bad architecture ${JSON.stringify(text)}: need comma-separated positive widths`);
  }
  return arch;
}

interface TrainArgs {
  arch: string;
  regime: string;
  seed: number;
  out: string;
  epochs: number;
  samples: number;
  testSamples: number;
  data?: string;
  download: boolean;
  pgdSteps?: number;
  batch?: number;
  log?: string;
  quiet: boolean;
}

export async function runTrain(argv: TrainArgs): Promise<void> {
  const arch = parseArch(argv.arch);
  const regime = argv.regime as Regime;
  const spec = defaultSpec(arch, regime, argv.seed);
  spec.epochs = argv.epochs;
  if (argv.batch !== undefined) spec.batchSize = argv.batch;
  if (argv.pgdSteps !== undefined) spec.pgd = { ...spec.pgd, steps: argv.pgdSteps };

  const data = await getData({
    dataDir: argv.data,
    download: argv.download,
    seed: argv.seed,
    nTrain: argv.samples,
    nTest: argv.testSamples,
    inputDim: arch[0],
  });
  if (!argv.quiet) process.stderr.write(`data: ${data.source} (${data.train.images.length} train / ${data.test.images.length} test)\n`);

  const result = train(spec, data, (e) => {
    if (!argv.quiet) {
      process.stderr.write(
        `epoch ${e.epoch}: lr ${e.lr} loss ${e.trainLoss.toFixed(4)} val ${e.valAccuracy.toFixed(4)}\n`,
      );
    }
  });
  const valAcc = accuracy(result.mlp, data.test.images, data.test.labels);

  const doc = exportNetwork(result.mlp, {
    regime,
    seed: String(argv.seed),
    val_accuracy: valAcc.toFixed(6),
    arch: arch.join(","),
    epochs: String(spec.epochs),
    data_source: data.source,
    converged: String(result.converged),
  });
  writeNetworkFile(argv.out, doc);

  if (argv.log) {
    const logDoc = {
      arch,
      regime,
      seed: argv.seed,
      epochs: spec.epochs,
      batch_size: spec.batchSize,
      data_source: data.source,
      converged: result.converged,
      val_accuracy: valAcc,
      history: result.log,
    };
    fs.writeFileSync(argv.log, JSON.stringify(logDoc, null, 1) + "\n", "utf-8");
  }

  const note = result.converged ? "" : " (did not converge)";
  process.stdout.write(`wrote ${argv.out}: val accuracy ${valAcc.toFixed(4)}${note}\n`);
}

export function buildParser(argvRaw: string[]) {
  return yargs(argvRaw)
    .scriptName("model-zoo")
    .command(
      "train",
      "train a classifier and export interchange JSON",
      (y) =>
        y
          .option("arch", { type: "string", demandOption: true, describe: "comma-separated layer widths, e.g. 784,5,5,5,10" })
          .option("regime", { type: "string", choices: REGIMES as unknown as string[], default: "vanilla" })
          .option("seed", { type: "number", default: 0 })
          .option("out", { type: "string", demandOption: true, describe: "output interchange JSON path" })
          .option("epochs", { type: "number", default: 120 })
          .option("samples", { type: "number", default: 3000, describe: "training samples to use" })
          .option("test-samples", { type: "number", default: 500 })
          .option("data", { type: "string", describe: "directory holding/caching the image dataset" })
          .option("download", { type: "boolean", default: false, describe: "fetch the dataset into --data if missing" })
          .option("pgd-steps", { type: "number", describe: "override attack step count for adv regimes" })
          .option("batch", { type: "number", describe: "override batch size" })
          .option("log", { type: "string", describe: "write a JSON training log here" })
          .option("quiet", { type: "boolean", default: false }),
      async (argv) => {
        await runTrain(argv as unknown as TrainArgs);
      },
    )
    .demandCommand(1)
    .strict()
    .help();
}

const invokedDirectly = process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  buildParser(hideBin(process.argv))
    .fail((msg, err) => {
      process.stderr.write(`${msg ?? err?.message ?? "error"}\n`);
      process.exit(2);
    })
    .parse();
}
