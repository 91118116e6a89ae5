/**
 * Minimal ONNX interchange support: a writer for the exported encoder and a
 * parser/evaluator used to verify the written graph against the native
 * forward pass before the bundle leaves this tool.
 *
 * Wire format is hand-encoded protobuf, restricted to the fields the
 * consumer's runtime reads: graph (7) with node(1)/initializer(5)/input(11)/
 * output(12), tensors as dims(1) + data_type(2) + name(8) + raw_data(9),
 * nodes as input(1)/output(2)/op_type(4). Ops: MatMul, Add, Mul, Relu, Tanh,
 * Reshape, Identity.
 */

const WIRE_VARINT = 0;
const WIRE_I64 = 1;
const WIRE_LEN = 2;
const WIRE_I32 = 5;

const DTYPE_FLOAT32 = 1;
const DTYPE_INT64 = 7;

export const SUPPORTED_OPS = ["MatMul", "Add", "Mul", "Relu", "Tanh", "Reshape", "Identity"] as const;

export class OnnxError extends Error {}

// ------------------------------------------------------------------ writing

function varint(value: bigint): Buffer {
  let v = value;
  if (v < 0n) v += 1n << 64n;
  const out: number[] = [];
  for (;;) {
    const byte = Number(v & 0x7fn);
    v >>= 7n;
    if (v) {
      out.push(byte | 0x80);
    } else {
      out.push(byte);
      return Buffer.from(out);
    }
  }
}

function tag(fieldNumber: number, wire: number): Buffer {
  return varint(BigInt((fieldNumber << 3) | wire));
}

function lenField(fieldNumber: number, payload: Buffer): Buffer {
  return Buffer.concat([tag(fieldNumber, WIRE_LEN), varint(BigInt(payload.length)), payload]);
}

function stringField(fieldNumber: number, text: string): Buffer {
  return lenField(fieldNumber, Buffer.from(text, "utf-8"));
}

function dimsField(shape: number[]): Buffer {
  return lenField(1, Buffer.concat(shape.map((d) => varint(BigInt(d)))));
}

export function tensorF32(name: string, shape: number[], data: Float32Array): Buffer {
  const count = shape.reduce((a, b) => a * b, 1);
  if (data.length !== count) {
    throw new OnnxError(`tensor ${name}: ${data.length} values, shape says ${count}`);
  }
  const raw = Buffer.from(data.buffer, data.byteOffset, data.byteLength); // LE host assumed
  return Buffer.concat([
    dimsField(shape),
    Buffer.concat([tag(2, WIRE_VARINT), varint(BigInt(DTYPE_FLOAT32))]),
    stringField(8, name),
    lenField(9, Buffer.from(raw)),
  ]);
}

export function tensorI64(name: string, shape: number[], data: number[]): Buffer {
  const count = shape.reduce((a, b) => a * b, 1);
  if (data.length !== count) {
    throw new OnnxError(`tensor ${name}: ${data.length} values, shape says ${count}`);
  }
  const raw = Buffer.alloc(8 * data.length);
  data.forEach((v, i) => raw.writeBigInt64LE(BigInt(v), 8 * i));
  return Buffer.concat([
    dimsField(shape),
    Buffer.concat([tag(2, WIRE_VARINT), varint(BigInt(DTYPE_INT64))]),
    stringField(8, name),
    lenField(9, raw),
  ]);
}

export function nodeBytes(opType: string, inputs: string[], outputs: string[]): Buffer {
  return Buffer.concat([
    ...inputs.map((n) => stringField(1, n)),
    ...outputs.map((n) => stringField(2, n)),
    stringField(4, opType),
  ]);
}

export function valueInfoBytes(name: string, shape: number[]): Buffer {
  const dims = Buffer.concat(
    shape.map((d) => lenField(1, Buffer.concat([tag(1, WIRE_VARINT), varint(BigInt(d))])))
  );
  const tensorType = Buffer.concat([
    tag(1, WIRE_VARINT),
    varint(BigInt(DTYPE_FLOAT32)),
    lenField(2, dims),
  ]);
  return Buffer.concat([stringField(1, name), lenField(2, lenField(1, tensorType))]);
}

export function modelBytes(
  nodes: Buffer[],
  initializers: Buffer[],
  inputs: Buffer[],
  outputs: Buffer[],
  graphName = "encoder"
): Buffer {
  const graph = Buffer.concat([
    ...nodes.map((n) => lenField(1, n)),
    stringField(2, graphName),
    ...initializers.map((t) => lenField(5, t)),
    ...inputs.map((v) => lenField(11, v)),
    ...outputs.map((v) => lenField(12, v)),
  ]);
  const opset = Buffer.concat([stringField(1, ""), tag(2, WIRE_VARINT), varint(13n)]);
  return Buffer.concat([
    tag(1, WIRE_VARINT),
    varint(8n), // ir_version
    lenField(7, graph),
    lenField(8, opset),
  ]);
}

// ------------------------------------------------------------------ parsing

interface Field {
  number: number;
  wire: number;
  value: bigint | Buffer;
}

function readVarint(buf: Buffer, pos: number): [bigint, number] {
  let result = 0n;
  let shift = 0n;
  for (;;) {
    if (pos >= buf.length) throw new OnnxError("truncated varint");
    const byte = buf[pos++];
    result |= BigInt(byte & 0x7f) << shift;
    if (!(byte & 0x80)) return [result, pos];
    shift += 7n;
    if (shift > 70n) throw new OnnxError("varint too long");
  }
}

function* iterFields(buf: Buffer): Generator<Field> {
  let pos = 0;
  while (pos < buf.length) {
    let tagValue: bigint;
    [tagValue, pos] = readVarint(buf, pos);
    const number = Number(tagValue >> 3n);
    const wire = Number(tagValue & 0x7n);
    if (wire === WIRE_VARINT) {
      let v: bigint;
      [v, pos] = readVarint(buf, pos);
      yield { number, wire, value: v };
    } else if (wire === WIRE_LEN) {
      let size: bigint;
      [size, pos] = readVarint(buf, pos);
      const end = pos + Number(size);
      if (end > buf.length) throw new OnnxError("truncated length-delimited field");
      yield { number, wire, value: buf.subarray(pos, end) };
      pos = end;
    } else if (wire === WIRE_I64) {
      if (pos + 8 > buf.length) throw new OnnxError("truncated fixed64 field");
      yield { number, wire, value: buf.readBigUInt64LE(pos) };
      pos += 8;
    } else if (wire === WIRE_I32) {
      if (pos + 4 > buf.length) throw new OnnxError("truncated fixed32 field");
      yield { number, wire, value: BigInt(buf.readUInt32LE(pos)) };
      pos += 4;
    } else {
      throw new OnnxError(`unsupported wire type ${wire}`);
    }
  }
}

function signed64(v: bigint): bigint {
  return v >= 1n << 63n ? v - (1n << 64n) : v;
}

function repeatedInt64(field: Field): number[] {
  if (field.wire === WIRE_VARINT) return [Number(signed64(field.value as bigint))];
  const out: number[] = [];
  const buf = field.value as Buffer;
  let pos = 0;
  while (pos < buf.length) {
    let v: bigint;
    [v, pos] = readVarint(buf, pos);
    out.push(Number(signed64(v)));
  }
  return out;
}

export interface Tensor {
  shape: number[];
  data: Float64Array;
}

export function tensor(shape: number[], data: ArrayLike<number>): Tensor {
  const count = shape.reduce((a, b) => a * b, 1);
  if (data.length !== count) {
    throw new OnnxError(`tensor data has ${data.length} values, shape says ${count}`);
  }
  return { shape: [...shape], data: Float64Array.from(data as ArrayLike<number>) };
}

interface ParsedNode {
  opType: string;
  inputs: string[];
  outputs: string[];
}

export interface ParsedModel {
  nodes: ParsedNode[];
  initializers: Map<string, Tensor>;
  inputNames: string[];
  outputNames: string[];
}

function parseTensor(buf: Buffer): [string, Tensor] {
  const dims: number[] = [];
  let dataType = DTYPE_FLOAT32;
  let raw: Buffer | null = null;
  let name = "";
  for (const f of iterFields(buf)) {
    if (f.number === 1) dims.push(...repeatedInt64(f));
    else if (f.number === 2) dataType = Number(f.value as bigint);
    else if (f.number === 8) name = (f.value as Buffer).toString("utf-8");
    else if (f.number === 9) raw = f.value as Buffer;
  }
  if (raw === null) throw new OnnxError(`tensor ${name || "<unnamed>"} has no raw data`);
  let data: Float64Array;
  if (dataType === DTYPE_FLOAT32) {
    const f32 = new Float32Array(raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength));
    data = Float64Array.from(f32);
  } else if (dataType === DTYPE_INT64) {
    const i64 = new BigInt64Array(raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength));
    data = Float64Array.from(i64, (v) => Number(v));
  } else {
    throw new OnnxError(`unsupported tensor data_type ${dataType}`);
  }
  const expected = dims.reduce((a, b) => a * b, 1);
  if (dims.length && data.length !== expected) {
    throw new OnnxError(`tensor ${name} has ${data.length} values, dims say ${expected}`);
  }
  return [name, { shape: dims, data }];
}

function parseValueInfoName(buf: Buffer): string {
  for (const f of iterFields(buf)) {
    if (f.number === 1) return (f.value as Buffer).toString("utf-8");
  }
  return "";
}

function parseNode(buf: Buffer): ParsedNode {
  const node: ParsedNode = { opType: "", inputs: [], outputs: [] };
  for (const f of iterFields(buf)) {
    if (f.number === 1) node.inputs.push((f.value as Buffer).toString("utf-8"));
    else if (f.number === 2) node.outputs.push((f.value as Buffer).toString("utf-8"));
    else if (f.number === 4) node.opType = (f.value as Buffer).toString("utf-8");
  }
  return node;
}

export function parseModel(data: Buffer): ParsedModel {
  let graph: Buffer | null = null;
  for (const f of iterFields(data)) {
    if (f.number === 7 && f.wire === WIRE_LEN) graph = f.value as Buffer;
  }
  if (graph === null) throw new OnnxError("no graph found in model");

  const model: ParsedModel = {
    nodes: [],
    initializers: new Map(),
    inputNames: [],
    outputNames: [],
  };
  for (const f of iterFields(graph)) {
    if (f.number === 1) model.nodes.push(parseNode(f.value as Buffer));
    else if (f.number === 5) {
      const [name, t] = parseTensor(f.value as Buffer);
      model.initializers.set(name, t);
    } else if (f.number === 11) model.inputNames.push(parseValueInfoName(f.value as Buffer));
    else if (f.number === 12) model.outputNames.push(parseValueInfoName(f.value as Buffer));
  }
  model.inputNames = model.inputNames.filter((n) => !model.initializers.has(n));
  if (!model.inputNames.length || !model.outputNames.length) {
    throw new OnnxError("model must declare at least one input and one output");
  }
  return model;
}

// --------------------------------------------------------------- evaluation

function matmul(a: Tensor, b: Tensor): Tensor {
  if (a.shape.length !== 2 || b.shape.length !== 2 || a.shape[1] !== b.shape[0]) {
    throw new OnnxError(`MatMul shape mismatch: [${a.shape}] x [${b.shape}]`);
  }
  const [m, k] = a.shape;
  const n = b.shape[1];
  const out = new Float64Array(m * n);
  for (let i = 0; i < m; i++) {
    for (let p = 0; p < k; p++) {
      const av = a.data[i * k + p];
      const row = p * n;
      for (let j = 0; j < n; j++) {
        out[i * n + j] += av * b.data[row + j];
      }
    }
  }
  return { shape: [m, n], data: out };
}

function broadcastPair(a: Tensor, b: Tensor, op: (x: number, y: number) => number): Tensor {
  if (a.shape.join(",") === b.shape.join(",")) {
    const out = new Float64Array(a.data.length);
    for (let i = 0; i < out.length; i++) out[i] = op(a.data[i], b.data[i]);
    return { shape: [...a.shape], data: out };
  }
  // 1-D bias against trailing axis, the only broadcast these graphs use
  if (b.shape.length === 1 && a.shape[a.shape.length - 1] === b.shape[0]) {
    const width = b.shape[0];
    const out = new Float64Array(a.data.length);
    for (let i = 0; i < out.length; i++) out[i] = op(a.data[i], b.data[i % width]);
    return { shape: [...a.shape], data: out };
  }
  throw new OnnxError(`cannot broadcast shapes [${a.shape}] and [${b.shape}]`);
}

function reshape(data: Tensor, shapeSpec: Tensor): Tensor {
  const spec = Array.from(shapeSpec.data, (v) => Math.trunc(v));
  const resolved = spec.map((v, i) => (v === 0 ? data.shape[i] : v));
  const total = data.data.length;
  const negIdx = resolved.indexOf(-1);
  if (negIdx >= 0) {
    const rest = resolved.reduce((acc, v, i) => (i === negIdx ? acc : acc * v), 1);
    if (rest <= 0 || total % rest !== 0) {
      throw new OnnxError(`cannot reshape ${total} values into [${resolved}]`);
    }
    resolved[negIdx] = total / rest;
  }
  const count = resolved.reduce((a, b) => a * b, 1);
  if (count !== total) {
    throw new OnnxError(`cannot reshape ${total} values into [${resolved}]`);
  }
  return { shape: resolved, data: data.data };
}

function applyOp(opType: string, args: Tensor[]): Tensor {
  switch (opType) {
    case "MatMul":
      return matmul(args[0], args[1]);
    case "Add":
      return broadcastPair(args[0], args[1], (x, y) => x + y);
    case "Mul":
      return broadcastPair(args[0], args[1], (x, y) => x * y);
    case "Relu":
      return { shape: [...args[0].shape], data: args[0].data.map((v) => Math.max(v, 0)) };
    case "Tanh":
      return { shape: [...args[0].shape], data: args[0].data.map((v) => Math.tanh(v)) };
    case "Identity":
      return args[0];
    case "Reshape":
      return reshape(args[0], args[1]);
    default:
      throw new OnnxError(`unsupported op '${opType}'`);
  }
}

export function runModel(model: ParsedModel, feeds: Map<string, Tensor>): Map<string, Tensor> {
  const values = new Map(model.initializers);
  for (const name of model.inputNames) {
    const fed = feeds.get(name);
    if (!fed) throw new OnnxError(`missing input '${name}'`);
    values.set(name, fed);
  }
  for (const node of model.nodes) {
    const args = node.inputs.map((n) => {
      const v = values.get(n);
      if (!v) throw new OnnxError(`node input '${n}' not computed yet`);
      return v;
    });
    values.set(node.outputs[0], applyOp(node.opType, args));
  }
  const out = new Map<string, Tensor>();
  for (const name of model.outputNames) {
    const v = values.get(name);
    if (!v) throw new OnnxError(`graph never produced output '${name}'`);
    out.set(name, v);
  }
  return out;
}
