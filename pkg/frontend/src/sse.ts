// Server-sent-events parsing over fetch, so the same code runs in browsers
// and in the node-based test environment (no EventSource dependency).

import type { ProgressRecord } from "./types.js";

export async function* parseSse(
  chunks: AsyncIterable<Uint8Array | string>,
): AsyncGenerator<ProgressRecord> {
  const decoder = new TextDecoder();
  let buffer = "";
  for await (const chunk of chunks) {
    buffer += typeof chunk === "string" ? chunk : decoder.decode(chunk, { stream: true });
    let boundary;
    while ((boundary = buffer.indexOf("\n\n")) >= 0) {
      const frame = buffer.slice(0, boundary);
      buffer = buffer.slice(boundary + 2);
      for (const line of frame.split("\n")) {
        if (line.startsWith("data: ")) {
          yield JSON.parse(line.slice("data: ".length)) as ProgressRecord;
        }
      }
    }
  }
}

async function* bodyChunks(response: Response): AsyncIterable<Uint8Array | string> {
  const body: unknown = response.body;
  if (body && typeof (body as ReadableStream).getReader === "function") {
    const reader = (body as ReadableStream<Uint8Array>).getReader();
    while (true) {
      const { done, value } = await reader.read();
      if (done) break;
      if (value) yield value;
    }
    return;
  }
  if (body && typeof (body as AsyncIterable<Uint8Array>)[Symbol.asyncIterator] === "function") {
    yield* body as AsyncIterable<Uint8Array>;
    return;
  }
  // last resort: whole-body text (fine once the stream has already finished)
  yield await response.text();
}

export function streamRecords(response: Response): AsyncGenerator<ProgressRecord> {
  return parseSse(bodyChunks(response));
}
