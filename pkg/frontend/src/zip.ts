/**
 * Minimal ZIP reader for job result archives.
 *
 * Supports stored (method 0) and deflated (method 8) entries, which covers
 * everything the service emits. Inflation goes through the browser's
 * DecompressionStream, so no compression library is needed.
 */

const EOCD_SIGNATURE = 0x06054b50;
const CENTRAL_SIGNATURE = 0x02014b50;
const LOCAL_SIGNATURE = 0x04034b50;
const EOCD_MIN_SIZE = 22;
// EOCD sits within the last 64KiB + 22 bytes (max comment length)
const EOCD_SEARCH_WINDOW = 0x10000 + EOCD_MIN_SIZE;

export class ZipFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ZipFormatError";
  }
}

function findEocd(view: DataView): number {
  const lowest = Math.max(0, view.byteLength - EOCD_SEARCH_WINDOW);
  for (let offset = view.byteLength - EOCD_MIN_SIZE; offset >= lowest; offset--) {
    if (view.getUint32(offset, true) === EOCD_SIGNATURE) {
      return offset;
    }
  }
  throw new ZipFormatError("no end-of-central-directory record");
}

async function inflateRaw(compressed: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([compressed as BlobPart])
    .stream()
    .pipeThrough(new DecompressionStream("deflate-raw"));
  return new Uint8Array(await new Response(stream).arrayBuffer());
}

/** Read all entries of a ZIP archive into a name -> bytes map. */
export async function readZip(buffer: ArrayBuffer): Promise<Map<string, Uint8Array>> {
  const view = new DataView(buffer);
  const bytes = new Uint8Array(buffer);
  if (buffer.byteLength < EOCD_MIN_SIZE) {
    throw new ZipFormatError("too short to be a ZIP archive");
  }
  const eocd = findEocd(view);
  const entryCount = view.getUint16(eocd + 10, true);
  let cursor = view.getUint32(eocd + 16, true);

  const decoder = new TextDecoder("utf-8");
  const entries = new Map<string, Uint8Array>();

  for (let i = 0; i < entryCount; i++) {
    if (view.getUint32(cursor, true) !== CENTRAL_SIGNATURE) {
      throw new ZipFormatError(`bad central directory entry ${i}`);
    }
    const method = view.getUint16(cursor + 10, true);
    const compressedSize = view.getUint32(cursor + 20, true);
    const nameLength = view.getUint16(cursor + 28, true);
    const extraLength = view.getUint16(cursor + 30, true);
    const commentLength = view.getUint16(cursor + 32, true);
    const localOffset = view.getUint32(cursor + 42, true);
    const name = decoder.decode(bytes.subarray(cursor + 46, cursor + 46 + nameLength));
    cursor += 46 + nameLength + extraLength + commentLength;

    if (name.endsWith("/")) {
      continue; // directory entry
    }
    if (view.getUint32(localOffset, true) !== LOCAL_SIGNATURE) {
      throw new ZipFormatError(`bad local header for ${name}`);
    }
    const localNameLength = view.getUint16(localOffset + 26, true);
    const localExtraLength = view.getUint16(localOffset + 28, true);
    const dataStart = localOffset + 30 + localNameLength + localExtraLength;
    const compressed = bytes.subarray(dataStart, dataStart + compressedSize);

    if (method === 0) {
      entries.set(name, compressed.slice());
    } else if (method === 8) {
      entries.set(name, await inflateRaw(compressed));
    } else {
      throw new ZipFormatError(`unsupported compression method ${method} for ${name}`);
    }
  }
  return entries;
}

/** Decode one entry as UTF-8 text, or null when the entry is missing. */
export function entryText(entries: Map<string, Uint8Array>, name: string): string | null {
  const data = entries.get(name);
  if (data === undefined) {
    return null;
  }
  return new TextDecoder("utf-8").decode(data);
}
