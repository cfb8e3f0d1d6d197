/**
 * Thin bindings exposing the toposeg combined loss (value + gradient) and
 * the segmentation metric report to JavaScript/TypeScript callers over
 * contiguous row-major float32 buffers.
 *
 * Images travel to the CLI as raw little-endian float32 blobs with JSON
 * sidecars, the toolkit's bit-exact exchange format, so results are
 * identical to invoking the CLI directly on the same buffers. Buffers are
 * copied at the boundary; no state is shared between calls.
 */

import { execFileSync } from "node:child_process";
import { mkdirSync, mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface BufferImage {
  height: number;
  width: number;
  /** Row-major intensities in [0, 1]; length must equal height * width. */
  data: Float32Array;
}

/** Flat key/value map mirroring the CLI run-config names. */
export type ConfigMap = Record<string, number | string | boolean>;

export interface LossComponents {
  bce: number;
  tc: number;
  ts: number;
}

export interface LossWithGrad {
  value: number;
  components: LossComponents;
  grad: BufferImage;
}

export interface MetricRow {
  image: string;
  acc: number;
  dice: number;
  sp: number;
  se: number;
  pr: number;
  f1: number;
  mcc: number;
  cldice: number;
  betti0_err: number;
  betti1_err: number;
}

function pythonCommand(): string {
  return process.env.TOPOSEG_PYTHON ?? "python3";
}

export function runCli(args: string[]): string {
  return execFileSync(pythonCommand(), ["-m", "toposeg", ...args], {
    encoding: "utf8",
  });
}

function checkImage(img: BufferImage, name: string): void {
  if (!Number.isInteger(img.height) || !Number.isInteger(img.width)
      || img.height < 1 || img.width < 1) {
    throw new Error(`${name}: height/width must be positive integers`);
  }
  if (img.data.length !== img.height * img.width) {
    throw new Error(`${name}: buffer length ${img.data.length} != height*width`);
  }
  for (let i = 0; i < img.data.length; i++) {
    const v = img.data[i];
    if (!Number.isFinite(v)) {
      throw new Error(`${name}: non-finite value at index ${i}`);
    }
    if (v < 0 || v > 1) {
      throw new Error(`${name}: value ${v} at index ${i} outside [0, 1]`);
    }
  }
}

function checkSameShape(a: BufferImage, b: BufferImage): void {
  if (a.height !== b.height || a.width !== b.width) {
    throw new Error(
      `shape mismatch: ${a.height}x${a.width} vs ${b.height}x${b.width}`,
    );
  }
}

/** Write a little-endian float32 blob plus its `<path>.json` sidecar. */
export function writeBlob(path: string, img: BufferImage): void {
  const bytes = Buffer.alloc(img.data.length * 4);
  for (let i = 0; i < img.data.length; i++) {
    bytes.writeFloatLE(img.data[i], i * 4);
  }
  writeFileSync(path, bytes);
  writeFileSync(
    `${path}.json`,
    JSON.stringify({ height: img.height, width: img.width }),
  );
}

/** Read a little-endian float32 blob written by the toolkit. */
export function readBlob(path: string): BufferImage {
  const meta = JSON.parse(readFileSync(`${path}.json`, "utf8")) as {
    height: number;
    width: number;
  };
  const bytes = readFileSync(path);
  const n = meta.height * meta.width;
  if (bytes.length !== 4 * n) {
    throw new Error(`blob size mismatch for ${path}`);
  }
  const data = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    data[i] = bytes.readFloatLE(i * 4);
  }
  return { height: meta.height, width: meta.width, data };
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "toposeg-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function configArgs(dir: string, config: ConfigMap): string[] {
  if (Object.keys(config).length === 0) {
    return [];
  }
  const path = join(dir, "config.json");
  writeFileSync(path, JSON.stringify(config));
  return ["--config", path];
}

/**
 * Combined loss (pixel cross entropy + weighted topological terms) and its
 * gradient with respect to the prediction pixels.
 *
 * Numerically identical to running `toposeg loss` on the same buffers.
 */
export function lossWithGrad(
  pred: BufferImage,
  gt: BufferImage,
  config: ConfigMap = {},
): LossWithGrad {
  checkImage(pred, "pred");
  checkImage(gt, "gt");
  checkSameShape(pred, gt);
  return withTempDir((dir) => {
    const predPath = join(dir, "pred.f32");
    const gtPath = join(dir, "gt.f32");
    writeBlob(predPath, pred);
    writeBlob(gtPath, gt);
    const out = runCli([
      "loss", predPath, gtPath,
      "--out-dir", dir,
      ...configArgs(dir, config),
    ]);
    const parsed = JSON.parse(out) as {
      total: number;
      bce: number;
      tc: number;
      ts: number;
    };
    const grad = readBlob(join(dir, "pred.grad.f32"));
    return {
      value: parsed.total,
      components: { bce: parsed.bce, tc: parsed.tc, ts: parsed.ts },
      grad,
    };
  });
}

/**
 * Per-image metric rows (accuracy, Dice, specificity, sensitivity,
 * precision, F1, MCC, clDice, Betti errors) for a batch of prediction /
 * ground-truth pairs, equal to the rows `toposeg eval` reports.
 */
export function metricsReport(
  predBatch: BufferImage[],
  gtBatch: BufferImage[],
  binThreshold = 0.5,
): MetricRow[] {
  if (predBatch.length !== gtBatch.length) {
    throw new Error(
      `batch length mismatch: ${predBatch.length} vs ${gtBatch.length}`,
    );
  }
  if (predBatch.length === 0) {
    return [];
  }
  predBatch.forEach((img, i) => checkImage(img, `pred[${i}]`));
  gtBatch.forEach((img, i) => checkImage(img, `gt[${i}]`));
  predBatch.forEach((img, i) => checkSameShape(img, gtBatch[i]));

  return withTempDir((dir) => {
    const predDir = join(dir, "pred");
    const gtDir = join(dir, "gt");
    mkdirSync(predDir);
    mkdirSync(gtDir);
    const pad = String(predBatch.length - 1).length;
    for (let i = 0; i < predBatch.length; i++) {
      const stem = `img${String(i).padStart(pad, "0")}.f32`;
      writeBlob(join(predDir, stem), predBatch[i]);
      writeBlob(join(gtDir, stem), gtBatch[i]);
    }
    runCli([
      "eval", predDir, gtDir,
      "--bin-threshold", String(binThreshold),
      "--out-dir", dir,
    ]);
    const report = JSON.parse(readFileSync(join(dir, "report.json"), "utf8")) as {
      rows: MetricRow[];
    };
    return report.rows;
  });
}
