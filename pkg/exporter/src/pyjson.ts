/**
 * Canonical JSON writer compatible with CPython's
 * `json.dumps(obj, indent=2, sort_keys=True) + "\n"`.
 *
 * The bundle loader on the Python side re-serializes manifests with exactly
 * those options, so emitting the same bytes here makes a load/save cycle of
 * an exported bundle the identity. That requires three things JSON.stringify
 * does not give us: Python float repr, ensure_ascii escaping, and sorted keys
 * compared by code point.
 */

export class PyFloat {
  constructor(readonly value: number) {
    if (!Number.isFinite(value)) {
      throw new Error(`cannot serialize non-finite float ${value}`);
    }
  }
}

export function pyFloat(value: number): PyFloat {
  return new PyFloat(value);
}

export type JsonValue =
  | null
  | boolean
  | number
  | PyFloat
  | string
  | JsonValue[]
  | { [key: string]: JsonValue };

/**
 * Python `repr()` for a finite double.
 *
 * JS `String(x)` already yields the shortest round-tripping digits, but its
 * layout rules differ (no ".0" on integers, scientific notation kicks in at
 * different exponents, single-digit exponents). We take the digits from
 * `String()` and re-layout them by CPython's rule: scientific iff the decimal
 * point falls at position <= -4 or > 16, exponent always signed and at least
 * two digits.
 */
export function pythonFloatRepr(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`cannot serialize non-finite float ${x}`);
  }
  if (x === 0) {
    return Object.is(x, -0) ? "-0.0" : "0.0";
  }

  const neg = x < 0;
  const s = String(Math.abs(x));

  // Normalize to (digits, decpt) with value = 0.<digits> * 10^decpt.
  let digits: string;
  let decpt: number;
  const eIdx = s.indexOf("e");
  if (eIdx >= 0) {
    const mant = s.slice(0, eIdx);
    const exp = parseInt(s.slice(eIdx + 1), 10);
    const dot = mant.indexOf(".");
    const intPart = dot >= 0 ? mant.slice(0, dot) : mant;
    const fracPart = dot >= 0 ? mant.slice(dot + 1) : "";
    digits = intPart + fracPart;
    decpt = exp + intPart.length;
  } else {
    const dot = s.indexOf(".");
    if (dot < 0) {
      const stripped = s.replace(/0+$/, "");
      digits = stripped;
      decpt = s.length;
    } else {
      const intPart = s.slice(0, dot);
      const fracPart = s.slice(dot + 1);
      if (intPart === "0") {
        const stripped = fracPart.replace(/^0+/, "");
        digits = stripped;
        decpt = -(fracPart.length - stripped.length);
      } else {
        digits = intPart + fracPart;
        decpt = intPart.length;
      }
    }
  }

  let body: string;
  if (decpt <= -4 || decpt > 16) {
    const e = decpt - 1;
    const mant = digits.length > 1 ? `${digits[0]}.${digits.slice(1)}` : digits;
    const sign = e < 0 ? "-" : "+";
    body = `${mant}e${sign}${String(Math.abs(e)).padStart(2, "0")}`;
  } else if (decpt <= 0) {
    body = `0.${"0".repeat(-decpt)}${digits}`;
  } else if (decpt >= digits.length) {
    body = `${digits}${"0".repeat(decpt - digits.length)}.0`;
  } else {
    body = `${digits.slice(0, decpt)}.${digits.slice(decpt)}`;
  }
  return neg ? `-${body}` : body;
}

const SHORT_ESCAPES: Record<string, string> = {
  '"': '\\"',
  "\\": "\\\\",
  "\b": "\\b",
  "\f": "\\f",
  "\n": "\\n",
  "\r": "\\r",
  "\t": "\\t",
};

// ensure_ascii escaping: every code unit outside printable ASCII becomes
// \uXXXX, astral characters as surrogate pairs, same as CPython.
function encodeString(text: string): string {
  let out = '"';
  for (let i = 0; i < text.length; i++) {
    const ch = text[i];
    const short = SHORT_ESCAPES[ch];
    if (short !== undefined) {
      out += short;
    } else {
      const code = text.charCodeAt(i);
      if (code < 0x20 || code > 0x7e) {
        out += `\\u${code.toString(16).padStart(4, "0")}`;
      } else {
        out += ch;
      }
    }
  }
  return out + '"';
}

// Python sorts str keys by code point; JS default sort compares UTF-16 code
// units, which disagrees once astral characters meet high BMP ones.
function codePointCompare(a: string, b: string): number {
  const ai = a[Symbol.iterator]();
  const bi = b[Symbol.iterator]();
  for (;;) {
    const an = ai.next();
    const bn = bi.next();
    if (an.done && bn.done) return 0;
    if (an.done) return -1;
    if (bn.done) return 1;
    const ac = an.value.codePointAt(0)!;
    const bc = bn.value.codePointAt(0)!;
    if (ac !== bc) return ac < bc ? -1 : 1;
  }
}

function encodeValue(value: JsonValue, level: number): string {
  if (value === null) return "null";
  if (value === true) return "true";
  if (value === false) return "false";
  if (value instanceof PyFloat) return pythonFloatRepr(value.value);
  if (typeof value === "number") {
    // Plain numbers are treated as Python ints. Anything float-valued must
    // be wrapped in PyFloat by the caller; guessing here would silently
    // change the manifest schema.
    if (!Number.isSafeInteger(value) || Object.is(value, -0)) {
      throw new Error(`plain number ${value} is not a safe integer; wrap floats in pyFloat()`);
    }
    return String(value);
  }
  if (typeof value === "string") return encodeString(value);

  const pad = "  ".repeat(level + 1);
  const closePad = "  ".repeat(level);
  if (Array.isArray(value)) {
    if (value.length === 0) return "[]";
    const items = value.map((v) => pad + encodeValue(v, level + 1));
    return `[\n${items.join(",\n")}\n${closePad}]`;
  }
  if (typeof value === "object") {
    const keys = Object.keys(value).sort(codePointCompare);
    if (keys.length === 0) return "{}";
    const items = keys.map(
      (k) => `${pad}${encodeString(k)}: ${encodeValue(value[k], level + 1)}`
    );
    return `{\n${items.join(",\n")}\n${closePad}}`;
  }
  throw new Error(`cannot serialize value of type ${typeof value}`);
}

export function canonicalJson(value: JsonValue): string {
  return encodeValue(value, 0);
}

export function canonicalJsonBytes(value: JsonValue): Buffer {
  return Buffer.from(canonicalJson(value) + "\n", "utf-8");
}
