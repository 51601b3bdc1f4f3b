/**
 * Request handling for the line protocol.
 *
 * One JSON object per line.  A request carries an id, a genome and the
 * two evaluation settings; the matching response echoes the id with the
 * three metric fields.  Anything that parses but breaks the contract is
 * answered with an error response carrying the offending id, so the
 * caller can fail just that candidate; a line that cannot be attributed
 * to any request at all is answered with an id of null.
 */

import { parseGenome, RequestError, syntheticMetrics } from "./model.js";

function requireInt(
  request: Record<string, unknown>,
  name: string,
  min: number
): number {
  if (!(name in request)) {
    throw new RequestError(`request is missing field ${name}`);
  }
  const value = request[name];
  if (!Number.isInteger(value)) {
    throw new RequestError(`request field ${name} must be an integer`);
  }
  const n = value as number;
  if (n < min) {
    throw new RequestError(`request field ${name} must be at least ${min}`);
  }
  return n;
}

/**
 * Answer one input line.  Returns the response line without its trailing
 * newline, or null for blank input (which is skipped, not answered).
 */
export function handleLine(line: string): string | null {
  const text = line.trim();
  if (text === "") {
    return null;
  }
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch {
    return JSON.stringify({ id: null, error: "unparseable request line" });
  }
  if (typeof data !== "object" || data === null || Array.isArray(data) || !("id" in data)) {
    return JSON.stringify({ id: null, error: "request must be an object with an id" });
  }
  const request = data as Record<string, unknown>;
  const id = request.id;
  try {
    const genome = parseGenome(request.genome);
    const epochs = requireInt(request, "epochs", 1);
    const numClasses = requireInt(request, "num_classes", 2);
    // A real trainer goes here: build the decoded network, train it for
    // `epochs`, and measure the three metrics.  The reference worker
    // answers with the synthetic closed form instead.
    const metrics = syntheticMetrics(genome, numClasses, epochs);
    return JSON.stringify({
      id,
      mc_dice_train: metrics.mc_dice_train,
      mc_dice_val: metrics.mc_dice_val,
      e_max: metrics.e_max,
    });
  } catch (err) {
    if (err instanceof RequestError) {
      return JSON.stringify({ id, error: err.message });
    }
    throw err;
  }
}
