// EMB1 binary embedding files: magic "EMB1", u32 LE dim, u32 LE count,
// then per record a u16 LE id byte-length, the UTF-8 id, and dim float32
// LE values. The layout matches the socialtyper engine byte for byte.

export interface Emb1Record {
  id: string;
  vector: ArrayLike<number>;
}

const MAGIC = 'EMB1';

export function writeEmb1(dim: number, records: Emb1Record[]): Buffer {
  if (!Number.isInteger(dim) || dim < 1) {
    throw new Error(`EMB1 dim must be a positive integer, got ${dim}`);
  }
  const seen = new Set<string>();
  const chunks: Buffer[] = [];
  const header = Buffer.alloc(12);
  header.write(MAGIC, 0, 'ascii');
  header.writeUInt32LE(dim, 4);
  header.writeUInt32LE(records.length, 8);
  chunks.push(header);
  for (const record of records) {
    if (!record.id) {
      throw new Error('EMB1 record id must be non-empty');
    }
    if (seen.has(record.id)) {
      throw new Error(`duplicate EMB1 record id ${JSON.stringify(record.id)}`);
    }
    seen.add(record.id);
    const idBytes = Buffer.from(record.id, 'utf-8');
    if (idBytes.length > 0xffff) {
      throw new Error(`EMB1 record id exceeds 65535 bytes: ${record.id}`);
    }
    if (record.vector.length !== dim) {
      throw new Error(
        `record ${record.id} has dim ${record.vector.length}, expected ${dim}`,
      );
    }
    const body = Buffer.alloc(2 + idBytes.length + 4 * dim);
    body.writeUInt16LE(idBytes.length, 0);
    idBytes.copy(body, 2);
    for (let i = 0; i < dim; i++) {
      const value = Number(record.vector[i]);
      if (!Number.isFinite(value)) {
        throw new Error(`record ${record.id} has a non-finite component`);
      }
      body.writeFloatLE(value, 2 + idBytes.length + 4 * i);
    }
    chunks.push(body);
  }
  return Buffer.concat(chunks);
}

export interface Emb1File {
  dim: number;
  records: { id: string; vector: Float32Array }[];
}

export function readEmb1(data: Buffer): Emb1File {
  if (data.length < 12) {
    throw new Error(`truncated EMB1 header at byte offset ${data.length}`);
  }
  if (data.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error(`bad EMB1 magic at byte offset 0`);
  }
  const dim = data.readUInt32LE(4);
  const count = data.readUInt32LE(8);
  let offset = 12;
  const records: { id: string; vector: Float32Array }[] = [];
  for (let r = 0; r < count; r++) {
    if (offset + 2 > data.length) {
      throw new Error(`truncated EMB1 record at byte offset ${offset}`);
    }
    const idLen = data.readUInt16LE(offset);
    offset += 2;
    if (offset + idLen + 4 * dim > data.length) {
      throw new Error(`truncated EMB1 record at byte offset ${offset}`);
    }
    const id = data.toString('utf-8', offset, offset + idLen);
    offset += idLen;
    const vector = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      vector[i] = data.readFloatLE(offset + 4 * i);
    }
    offset += 4 * dim;
    records.push({ id, vector });
  }
  if (offset !== data.length) {
    throw new Error(`trailing bytes at byte offset ${offset}`);
  }
  return { dim, records };
}
