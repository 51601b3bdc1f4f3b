/**
 * Independent reimplementation of the genome model and synthetic formula.
 *
 * Nothing here is imported from the engine: the worker re-derives the
 * architecture decoding, the parameter count and the frozen synthetic
 * training formula from the documented conventions, so a golden test
 * between the two sides actually checks two implementations against
 * each other.
 */

import { portableExp, portableLog, roundHalfUp } from "./portable.js";

export const OPERATIONS = ["CONV2D", "CONV3D", "P3D"] as const;
export type Operation = (typeof OPERATIONS)[number];

export const FIELD_NAMES = [
  "i2",
  "i3",
  "i4",
  "o1",
  "o2",
  "o3",
  "o4",
  "n_c",
  "n_f",
  "lr_level",
] as const;
export type FieldName = (typeof FIELD_NAMES)[number];

export const FIELD_DOMAINS: Record<FieldName, readonly (number | string)[]> = {
  i2: [0, 1],
  i3: [0, 1, 2],
  i4: [0, 1, 2, 3],
  o1: OPERATIONS,
  o2: OPERATIONS,
  o3: OPERATIONS,
  o4: OPERATIONS,
  n_c: [2, 3, 4],
  n_f: [3, 4, 5],
  lr_level: [1, 2, 3, 4, 5, 6, 7, 8, 9],
};

export interface Genome {
  i2: number;
  i3: number;
  i4: number;
  o1: Operation;
  o2: Operation;
  o3: Operation;
  o4: Operation;
  n_c: number;
  n_f: number;
  lr_level: number;
}

/** A request was well-formed JSON but violates the protocol contract. */
export class RequestError extends Error {}

/** Validate an untyped genome payload field by field. */
export function parseGenome(data: unknown): Genome {
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new RequestError("genome must be an object");
  }
  const record = data as Record<string, unknown>;
  const out: Record<string, number | string> = {};
  for (const name of FIELD_NAMES) {
    if (!(name in record)) {
      throw new RequestError(`genome is missing field ${name}`);
    }
    const value = record[name];
    const domain = FIELD_DOMAINS[name];
    const wantsInt = typeof domain[0] === "number";
    if (wantsInt ? !Number.isInteger(value) : typeof value !== "string") {
      throw new RequestError(`genome field ${name} has the wrong type`);
    }
    if (!domain.includes(value as number | string)) {
      throw new RequestError(
        `genome field ${name} value ${JSON.stringify(value)} is out of domain`
      );
    }
    out[name] = value as number | string;
  }
  return out as unknown as Genome;
}

export interface NodeSpec {
  source: number; // 0 is the cell input; k >= 1 is the output of node k
  op: Operation;
}

export interface Architecture {
  numCells: number;
  cellFilters: number[];
  nodes: NodeSpec[];
}

/**
 * Expand a genome into its macro structure: n_c encoder cells, one
 * bottleneck and n_c decoder cells, cell i carrying 2**n_f * 2**min(i,
 * 2*n_c - i) filters, with the shared four-node block wired by i2..i4.
 */
export function decode(genome: Genome): Architecture {
  const nC = genome.n_c;
  const nf1 = 2 ** genome.n_f;
  const numCells = 2 * nC + 1;
  const cellFilters: number[] = [];
  for (let i = 0; i < numCells; i++) {
    cellFilters.push(nf1 * 2 ** Math.min(i, 2 * nC - i));
  }
  const nodes: NodeSpec[] = [
    { source: 0, op: genome.o1 },
    { source: genome.i2, op: genome.o2 },
    { source: genome.i3, op: genome.o3 },
    { source: genome.i4, op: genome.o4 },
  ];
  return { numCells, cellFilters, nodes };
}

/** Length of the longest source-to-node chain inside one cell (1..4). */
export function longestChain(arch: Architecture): number {
  const depths = [0];
  for (const node of arch.nodes) {
    depths.push(depths[node.source] + 1);
  }
  return Math.max(...depths.slice(1));
}

function convParams(op: Operation, cIn: number, cOut: number): number {
  if (op === "CONV2D") {
    return 9 * cIn * cOut + cOut; // 3x3x1 kernel with bias
  }
  if (op === "CONV3D") {
    return 27 * cIn * cOut + cOut; // 3x3x3 kernel with bias
  }
  // P3D: 3x3x1 spatial conv into 1x1x3 temporal conv, mid channels = cOut,
  // both with bias.
  return 9 * cIn * cOut + cOut + (3 * cOut * cOut + cOut);
}

/**
 * Exact trainable-parameter count for a decoded architecture.
 *
 * Every node adds an affine instance norm (2F); a node reading the cell
 * input sees the cell's input channels, other nodes see F.  The first
 * cell sees inChannels, later encoder cells and the bottleneck see the
 * previous cell's F (pooling is parameter-free), decoder cells see their
 * own F because the 2x2x2 transpose conv ahead of them halves channels.
 * The head is a 1x1x1 conv to numClasses with bias.
 */
export function countParams(
  arch: Architecture,
  numClasses: number,
  inChannels = 1
): number {
  const filters = arch.cellFilters;
  const nCells = arch.numCells;
  const half = Math.floor(nCells / 2);
  let total = 0;
  for (let ci = 0; ci < nCells; ci++) {
    const f = filters[ci];
    let cellIn: number;
    if (ci === 0) {
      cellIn = inChannels;
    } else if (ci <= half) {
      cellIn = filters[ci - 1];
    } else {
      cellIn = f;
    }
    for (const node of arch.nodes) {
      const srcChannels = node.source === 0 ? cellIn : f;
      total += convParams(node.op, srcChannels, f);
      total += 2 * f;
    }
  }
  for (let ci = half; ci < nCells - 1; ci++) {
    total += 8 * filters[ci] * filters[ci + 1] + filters[ci + 1];
  }
  total += filters[0] * numClasses + numClasses;
  return total;
}

export const OPERATION_QUALITY: Record<Operation, number> = {
  CONV3D: 1.0,
  P3D: 0.92,
  CONV2D: 0.8,
};

export interface Metrics {
  mc_dice_train: number;
  mc_dice_val: number;
  e_max: number;
}

/**
 * The frozen synthetic training formula.
 *
 *     capacity = ln(countParams(...))
 *     quality  = mean per-node operation quality
 *     conn     = 0.9 + 0.025 * longest node chain
 *     pen      = 1 - 0.02 * |lr_level - 4|
 *     t        = 1 - exp(-capacity / 12)
 *     mc_dice_val   = clip(C * t * quality * conn * pen, 0, C)
 *     mc_dice_train = min(C, 1.05 * mc_dice_val)
 *     e_max    = clip(roundHalfUp(E * (0.5 + 0.5 * t)), 1, E)
 *
 * The operation order matches the engine's exactly; together with the
 * portable log/exp this makes the outputs bitwise reproducible.
 */
export function syntheticMetrics(
  genome: Genome,
  numClasses: number,
  totalEpochs: number
): Metrics {
  const arch = decode(genome);
  const p = countParams(arch, numClasses);
  const capacity = portableLog(p);
  const quality =
    (OPERATION_QUALITY[genome.o1] +
      OPERATION_QUALITY[genome.o2] +
      OPERATION_QUALITY[genome.o3] +
      OPERATION_QUALITY[genome.o4]) /
    4.0;
  const connectivity = 0.9 + 0.025 * longestChain(arch);
  const t = 1.0 - portableExp(-capacity / 12.0);
  const valBase = numClasses * t * quality * connectivity;
  const eRaw = totalEpochs * (0.5 + 0.5 * t);
  let eMax = roundHalfUp(eRaw);
  if (eMax < 1) {
    eMax = 1;
  } else if (eMax > totalEpochs) {
    eMax = totalEpochs;
  }
  const pen = 1.0 - 0.02 * Math.abs(genome.lr_level - 4);
  let val = valBase * pen;
  if (val < 0.0) {
    val = 0.0;
  } else if (val > numClasses) {
    val = numClasses;
  }
  let train = 1.05 * val;
  if (train > numClasses) {
    train = numClasses;
  }
  return { mc_dice_train: train, mc_dice_val: val, e_max: eMax };
}
