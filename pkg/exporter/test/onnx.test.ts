import { describe, expect, test } from "vitest";

import {
  modelBytes,
  nodeBytes,
  parseModel,
  runModel,
  tensor,
  tensorF32,
  tensorI64,
  valueInfoBytes,
} from "../src/onnx.js";
import { runPython } from "./helpers.js";

// y = relu(x W + b), x (1,2), W (2,3), b (3)
function tinyMlp(): Buffer {
  return modelBytes(
    [
      nodeBytes("MatMul", ["x", "w"], ["xw"]),
      nodeBytes("Add", ["xw", "b"], ["pre"]),
      nodeBytes("Relu", ["pre"], ["y"]),
    ],
    [
      tensorF32("w", [2, 3], Float32Array.from([1, -2, 0.5, 0.25, 3, -1])),
      tensorF32("b", [3], Float32Array.from([0.5, -0.5, 0])),
    ],
    [valueInfoBytes("x", [1, 2])],
    [valueInfoBytes("y", [1, 3])]
  );
}

describe("writer and parser", () => {
  test("round trip preserves graph structure", () => {
    const model = parseModel(tinyMlp());
    expect(model.nodes.map((n) => n.opType)).toEqual(["MatMul", "Add", "Relu"]);
    expect(model.inputNames).toEqual(["x"]);
    expect(model.outputNames).toEqual(["y"]);
    const w = model.initializers.get("w")!;
    expect(w.shape).toEqual([2, 3]);
    expect(w.data[1]).toBe(-2);
  });

  test("int64 tensors survive", () => {
    const bytes = modelBytes(
      [nodeBytes("Reshape", ["x", "shape"], ["y"])],
      [tensorI64("shape", [2], [3, -1])],
      [valueInfoBytes("x", [1, 6])],
      [valueInfoBytes("y", [3, 2])]
    );
    const model = parseModel(bytes);
    expect(Array.from(model.initializers.get("shape")!.data)).toEqual([3, -1]);
  });

  test("tensor data must match its shape", () => {
    expect(() => tensorF32("w", [2, 2], Float32Array.from([1, 2, 3]))).toThrow("shape says 4");
  });

  test("garbage bytes are rejected", () => {
    expect(() => parseModel(Buffer.from([0xff, 0xff, 0xff]))).toThrow();
    expect(() => parseModel(Buffer.from("not a model"))).toThrow();
  });
});

describe("evaluator", () => {
  test("MLP matches hand math", () => {
    const model = parseModel(tinyMlp());
    // x = [2, -4]: xW+b = [2-1+0.5, -4-12-0.5, 1+4+0] = [1.5, -16.5, 5]
    const out = runModel(model, new Map([["x", tensor([1, 2], [2, -4])]]));
    expect(Array.from(out.get("y")!.data)).toEqual([1.5, 0, 5]);
  });

  test("Reshape resolves 0 and -1", () => {
    const bytes = modelBytes(
      [nodeBytes("Reshape", ["x", "shape"], ["y"])],
      [tensorI64("shape", [2], [0, -1])],
      [valueInfoBytes("x", [2, 6])],
      [valueInfoBytes("y", [2, 6])]
    );
    const out = runModel(
      parseModel(bytes),
      new Map([["x", tensor([2, 2, 3], [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12])]])
    );
    expect(out.get("y")!.shape).toEqual([2, 6]);
  });

  test("missing input and unsupported op fail loudly", () => {
    const model = parseModel(tinyMlp());
    expect(() => runModel(model, new Map())).toThrow("missing input 'x'");

    const badOp = modelBytes(
      [nodeBytes("Softmax", ["x"], ["y"])],
      [],
      [valueInfoBytes("x", [1, 2])],
      [valueInfoBytes("y", [1, 2])]
    );
    expect(() => runModel(parseModel(badOp), new Map([["x", tensor([1, 2], [1, 2])]]))).toThrow(
      "unsupported op"
    );
  });

  test("matches the scoring package's runtime on the same bytes", () => {
    const bytes = modelBytes(
      [
        nodeBytes("MatMul", ["x", "w"], ["xw"]),
        nodeBytes("Add", ["xw", "b"], ["pre"]),
        nodeBytes("Tanh", ["pre"], ["y"]),
      ],
      [
        tensorF32("w", [3, 2], Float32Array.from([0.25, -1.5, 2.0, 0.125, -0.75, 1.0])),
        tensorF32("b", [2], Float32Array.from([0.0625, -0.25])),
      ],
      [valueInfoBytes("x", [1, 3])],
      [valueInfoBytes("y", [1, 2])]
    );
    const x = [0.5, -1.25, 2.0];

    const mine = runModel(parseModel(bytes), new Map([["x", tensor([1, 3], x)]]));
    const out = runPython(
      [
        "import sys, json",
        "import numpy as np",
        "from pamkit import onnx_rt",
        "model = onnx_rt.load_model(sys.stdin.buffer.read())",
        "x = np.asarray(json.loads(sys.argv[1]), dtype=np.float32).reshape(1, 3)",
        "y = model.run({'x': x})['y']",
        "print(json.dumps([float(v) for v in y.ravel()]))",
      ].join("\n"),
      [JSON.stringify(x)],
      bytes
    );
    const theirs: number[] = JSON.parse(out.toString("utf-8"));
    const got = Array.from(mine.get("y")!.data);
    expect(got.length).toBe(theirs.length);
    got.forEach((v, i) => expect(Math.abs(v - theirs[i])).toBeLessThan(1e-6));
  });
});
