import { describe, expect, test } from "vitest";

import { canonicalJson, canonicalJsonBytes, pyFloat, pythonFloatRepr } from "../src/pyjson.js";
import { splitmix64 } from "../src/rng.js";
import { runPython } from "./helpers.js";

describe("pythonFloatRepr", () => {
  test("matches CPython repr layout", () => {
    const cases: Array<[number, string]> = [
      [0, "0.0"],
      [-0, "-0.0"],
      [1, "1.0"],
      [-1, "-1.0"],
      [0.5, "0.5"],
      [33.37, "33.37"],
      [100, "100.0"],
      [0.0001, "0.0001"],
      [1e-5, "1e-05"],
      [1e-7, "1e-07"],
      [1e16, "1e+16"],
      [1234567890123456, "1234567890123456.0"],
      [1.5e21, "1.5e+21"],
      [5e-324, "5e-324"],
      [1.7976931348623157e308, "1.7976931348623157e+308"],
      [Math.log(1e-10), "-23.025850929940457"],
      [0.30000000000000004, "0.30000000000000004"],
    ];
    for (const [value, expected] of cases) {
      expect(pythonFloatRepr(value), `repr(${value})`).toBe(expected);
    }
  });

  test("rejects non-finite values", () => {
    expect(() => pythonFloatRepr(NaN)).toThrow("non-finite");
    expect(() => pythonFloatRepr(Infinity)).toThrow("non-finite");
    expect(() => pyFloat(-Infinity)).toThrow("non-finite");
  });
});

describe("canonicalJson", () => {
  test("sorts keys and indents like json.dumps(indent=2, sort_keys=True)", () => {
    const doc = { b: 1, a: [1, 2], c: { z: null, y: true } };
    expect(canonicalJson(doc)).toBe(
      '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1,\n  "c": {\n    "y": true,\n    "z": null\n  }\n}'
    );
  });

  test("empty containers stay inline", () => {
    expect(canonicalJson({ a: [], b: {} })).toBe('{\n  "a": [],\n  "b": {}\n}');
  });

  test("plain numbers must be safe integers; floats need pyFloat", () => {
    expect(canonicalJson(5)).toBe("5");
    expect(canonicalJson(pyFloat(5))).toBe("5.0");
    expect(() => canonicalJson(0.5)).toThrow("wrap floats");
    expect(() => canonicalJson(2 ** 53)).toThrow("wrap floats");
  });

  test("ensure_ascii escaping", () => {
    expect(canonicalJson('caf\u00e9 \u2615 \u{1f3a7} "q"\n\t\u0001')).toBe(
      '"caf\\u00e9 \\u2615 \\ud83c\\udfa7 \\"q\\"\\n\\t\\u0001"'
    );
  });

  test("python re-serialization is a byte-level fixed point", () => {
    // Random doubles from raw bit patterns hit subnormals, huge exponents
    // and every digit-length class, not just friendly values.
    const next = splitmix64(20240817n);
    const view = new DataView(new ArrayBuffer(8));
    const floats: number[] = [];
    while (floats.length < 300) {
      view.setBigUint64(0, next());
      const v = view.getFloat64(0);
      if (Number.isFinite(v)) floats.push(v);
    }
    const doc = {
      floats: floats.map(pyFloat),
      small: [pyFloat(1e-5), pyFloat(0.0001), pyFloat(1e16), pyFloat(-0)],
      ints: [0, 1, -1, 9007199254740991, -9007199254740991],
      strings: ["", "plain", 'quote " backslash \\', "caf\u00e9 \u{1f3a7}", "\u0000\u001f\u007f"],
      nested: { empty_list: [], empty_obj: {}, null_value: null, flags: [true, false] },
    };
    const mine = canonicalJsonBytes(doc);
    const theirs = runPython(
      "import sys, json\n" +
        "obj = json.load(sys.stdin)\n" +
        "sys.stdout.write(json.dumps(obj, indent=2, sort_keys=True) + '\\n')\n",
      [],
      mine
    );
    expect(theirs.equals(mine)).toBe(true);
  });
});
