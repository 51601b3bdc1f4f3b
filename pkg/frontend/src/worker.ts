/**
 * Entry point: a single-threaded request loop over stdin/stdout.
 *
 * Invoked by the engine as a child process (for example
 * `node dist/worker.js` in the evaluator command).  Reads until
 * end-of-input and then exits cleanly, one response line per request
 * line, in order.
 */

import { createInterface } from "node:readline";

import { handleLine } from "./protocol.js";

// A write error on stdout means the caller is gone; there is nobody left
// to answer, so stop quietly instead of crashing.
process.stdout.on("error", () => {
  process.exitCode = 0;
  process.stdin.destroy();
});

const rl = createInterface({ input: process.stdin, terminal: false });
rl.on("line", (line) => {
  const response = handleLine(line);
  if (response !== null) {
    process.stdout.write(response + "\n");
  }
});
