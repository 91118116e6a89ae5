"""Tiny ONNX reader and executor for the bundled audio encoders.

Bundles carry small feed-forward encoders (MatMul/Add/Mul/Relu/Tanh/Reshape/
Identity over float32), so instead of depending on a runtime we parse the
protobuf wire format directly and evaluate the graph with numpy. A matching
writer lives here too; tests use it to build fixture models.

Only the protobuf fields this subset needs are understood; anything else in
the file is skipped field-by-field, and an unsupported op fails loudly at
execution time rather than producing wrong numbers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

_WIRE_VARINT = 0
_WIRE_I64 = 1
_WIRE_LEN = 2
_WIRE_I32 = 5

_DTYPE_FLOAT32 = 1
_DTYPE_INT32 = 6
_DTYPE_INT64 = 7
_DTYPE_FLOAT64 = 11

_NP_DTYPES = {
    _DTYPE_FLOAT32: np.dtype("<f4"),
    _DTYPE_INT32: np.dtype("<i4"),
    _DTYPE_INT64: np.dtype("<i8"),
    _DTYPE_FLOAT64: np.dtype("<f8"),
}

SUPPORTED_OPS = ("MatMul", "Add", "Mul", "Relu", "Tanh", "Reshape", "Identity")


class OnnxError(ValueError):
    pass


# ----------------------------------------------------------------- parsing

def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(buf):
            raise OnnxError("truncated varint")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 70:
            raise OnnxError("varint too long")


def _signed(value: int) -> int:
    return value - (1 << 64) if value >= 1 << 63 else value


def _iter_fields(buf: bytes):
    """Yield (field_number, wire_type, payload); payload is bytes for
    length-delimited fields and an int for the fixed/varint wires."""
    pos = 0
    while pos < len(buf):
        tag, pos = _read_varint(buf, pos)
        number, wire = tag >> 3, tag & 0x7
        if wire == _WIRE_VARINT:
            value, pos = _read_varint(buf, pos)
        elif wire == _WIRE_LEN:
            size, pos = _read_varint(buf, pos)
            if pos + size > len(buf):
                raise OnnxError("truncated length-delimited field")
            value = buf[pos : pos + size]
            pos += size
        elif wire == _WIRE_I64:
            value = int.from_bytes(buf[pos : pos + 8], "little")
            pos += 8
        elif wire == _WIRE_I32:
            value = int.from_bytes(buf[pos : pos + 4], "little")
            pos += 4
        else:
            raise OnnxError(f"unsupported wire type {wire}")
        yield number, wire, value


def _repeated_int64(wire: int, value) -> list[int]:
    if wire == _WIRE_VARINT:
        return [_signed(value)]
    out = []
    pos = 0
    while pos < len(value):
        v, pos = _read_varint(value, pos)
        out.append(_signed(v))
    return out


def _parse_tensor(buf: bytes) -> tuple[str, np.ndarray]:
    dims: list[int] = []
    data_type = _DTYPE_FLOAT32
    raw = b""
    float_data: list[float] = []
    int64_data: list[int] = []
    name = ""
    for number, wire, value in _iter_fields(buf):
        if number == 1:
            dims.extend(_repeated_int64(wire, value))
        elif number == 2:
            data_type = value
        elif number == 4:
            if wire == _WIRE_I32:
                float_data.append(struct.unpack("<f", value.to_bytes(4, "little"))[0])
            else:
                float_data.extend(np.frombuffer(value, dtype="<f4").tolist())
        elif number == 7:
            int64_data.extend(_repeated_int64(wire, value))
        elif number == 8:
            name = value.decode("utf-8")
        elif number == 9:
            raw = value
    if data_type not in _NP_DTYPES:
        raise OnnxError(f"unsupported tensor data_type {data_type}")
    dtype = _NP_DTYPES[data_type]
    if raw:
        array = np.frombuffer(raw, dtype=dtype)
    elif float_data:
        array = np.asarray(float_data, dtype=dtype)
    elif int64_data:
        array = np.asarray(int64_data, dtype=dtype)
    else:
        array = np.zeros(0, dtype=dtype)
    expected = int(np.prod(dims)) if dims else array.size
    if array.size != expected:
        raise OnnxError(f"tensor {name!r} has {array.size} values, dims say {expected}")
    return name, array.reshape(dims) if dims else array


def _parse_value_info_name(buf: bytes) -> str:
    for number, _, value in _iter_fields(buf):
        if number == 1:
            return value.decode("utf-8")
    return ""


@dataclass
class Node:
    op_type: str
    inputs: list[str]
    outputs: list[str]


@dataclass
class Graph:
    nodes: list[Node] = field(default_factory=list)
    initializers: dict[str, np.ndarray] = field(default_factory=dict)
    input_names: list[str] = field(default_factory=list)
    output_names: list[str] = field(default_factory=list)


def _parse_node(buf: bytes) -> Node:
    node = Node(op_type="", inputs=[], outputs=[])
    for number, _, value in _iter_fields(buf):
        if number == 1:
            node.inputs.append(value.decode("utf-8"))
        elif number == 2:
            node.outputs.append(value.decode("utf-8"))
        elif number == 4:
            node.op_type = value.decode("utf-8")
    return node


def _parse_graph(buf: bytes) -> Graph:
    graph = Graph()
    for number, _, value in _iter_fields(buf):
        if number == 1:
            graph.nodes.append(_parse_node(value))
        elif number == 5:
            name, array = _parse_tensor(value)
            graph.initializers[name] = array
        elif number == 11:
            graph.input_names.append(_parse_value_info_name(value))
        elif number == 12:
            graph.output_names.append(_parse_value_info_name(value))
    return graph


class OnnxModel:
    def __init__(self, graph: Graph):
        self.graph = graph
        self.input_names = [n for n in graph.input_names if n not in graph.initializers]
        self.output_names = list(graph.output_names)
        if not self.input_names or not self.output_names:
            raise OnnxError("model must declare at least one input and one output")

    def run(self, feeds: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        values: dict[str, np.ndarray] = dict(self.graph.initializers)
        for name in self.input_names:
            if name not in feeds:
                raise OnnxError(f"missing input {name!r}")
            values[name] = np.asarray(feeds[name])
        for node in self.graph.nodes:
            try:
                args = [values[n] for n in node.inputs]
            except KeyError as exc:
                raise OnnxError(f"node input {exc.args[0]!r} not computed yet") from exc
            values[node.outputs[0]] = _apply(node.op_type, args)
        missing = [n for n in self.output_names if n not in values]
        if missing:
            raise OnnxError(f"graph never produced outputs {missing}")
        return {n: values[n] for n in self.output_names}


def _apply(op_type: str, args: list[np.ndarray]) -> np.ndarray:
    if op_type == "MatMul":
        return np.matmul(args[0], args[1])
    if op_type == "Add":
        return args[0] + args[1]
    if op_type == "Mul":
        return args[0] * args[1]
    if op_type == "Relu":
        return np.maximum(args[0], 0)
    if op_type == "Tanh":
        return np.tanh(args[0])
    if op_type == "Identity":
        return args[0]
    if op_type == "Reshape":
        data, shape = args[0], [int(v) for v in args[1]]
        resolved = [data.shape[i] if v == 0 else v for i, v in enumerate(shape)]
        return data.reshape(resolved)
    raise OnnxError(f"unsupported op {op_type!r}")


def load_model(data: bytes) -> OnnxModel:
    graph = None
    for number, wire, value in _iter_fields(data):
        if number == 7 and wire == _WIRE_LEN:
            graph = _parse_graph(value)
    if graph is None:
        raise OnnxError("no graph found in model")
    return OnnxModel(graph)


# ----------------------------------------------------------------- writing

def _tag(field_number: int, wire: int) -> bytes:
    return _varint((field_number << 3) | wire)


def _varint(value: int) -> bytes:
    if value < 0:
        value += 1 << 64
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def _len_field(field_number: int, payload: bytes) -> bytes:
    return _tag(field_number, _WIRE_LEN) + _varint(len(payload)) + payload


def _string_field(field_number: int, text: str) -> bytes:
    return _len_field(field_number, text.encode("utf-8"))


_WRITE_DTYPES = {np.dtype("float32"): _DTYPE_FLOAT32, np.dtype("int64"): _DTYPE_INT64}


def tensor_bytes(name: str, array: np.ndarray) -> bytes:
    array = np.ascontiguousarray(array)
    if array.dtype not in _WRITE_DTYPES:
        raise OnnxError(f"can only write float32/int64 tensors, got {array.dtype}")
    parts = [
        _len_field(1, b"".join(_varint(int(d)) for d in array.shape)),
        _tag(2, _WIRE_VARINT) + _varint(_WRITE_DTYPES[array.dtype]),
        _string_field(8, name),
        _len_field(9, array.astype(array.dtype.newbyteorder("<")).tobytes()),
    ]
    return b"".join(parts)


def node_bytes(op_type: str, inputs: list[str], outputs: list[str]) -> bytes:
    parts = [_string_field(1, n) for n in inputs]
    parts += [_string_field(2, n) for n in outputs]
    parts.append(_string_field(4, op_type))
    return b"".join(parts)


def value_info_bytes(name: str, shape: tuple[int, ...]) -> bytes:
    dims = b"".join(
        _len_field(1, _tag(1, _WIRE_VARINT) + _varint(int(d))) for d in shape
    )
    tensor_type = (
        _tag(1, _WIRE_VARINT) + _varint(_DTYPE_FLOAT32) + _len_field(2, dims)
    )
    type_proto = _len_field(1, tensor_type)
    return _string_field(1, name) + _len_field(2, type_proto)


def model_bytes(
    nodes: list[bytes],
    initializers: list[bytes],
    inputs: list[bytes],
    outputs: list[bytes],
    graph_name: str = "encoder",
) -> bytes:
    graph = b"".join(
        [_len_field(1, n) for n in nodes]
        + [_string_field(2, graph_name)]
        + [_len_field(5, t) for t in initializers]
        + [_len_field(11, v) for v in inputs]
        + [_len_field(12, v) for v in outputs]
    )
    opset = _string_field(1, "") + _tag(2, _WIRE_VARINT) + _varint(13)
    return (
        _tag(1, _WIRE_VARINT)
        + _varint(8)
        + _len_field(7, graph)
        + _len_field(8, opset)
    )
