"""Neuron-to-truth-table compilation.

Every trained neuron reads F quantized inputs of beta_in bits each, so its
transfer function is fully described by a 2**(beta_in*F)-row table mapping
the concatenated input level codes to the output level code. The generator
runs through the vectorized kernel backend; `verify_table` recomputes every
row through the scalar reference path and must agree bit for bit before RTL
emission is allowed.

Code conventions: codes are unsigned level indices (the real values exist
only at the quantizer boundary), and the first selected input (lowest mask
index) occupies the most significant beta_in bits of the input code.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from sparselut import _backend
from sparselut.errors import CapacityError, FormatError, StateError
from sparselut.maskfile import _atomic_write_text
from sparselut.network import TrainedModel, monomial_slots, neuron_forward
from sparselut.numerics import QuantizerSpec

__all__ = [
    "TruthTable",
    "Netlist",
    "NetlistLayer",
    "lut_cost",
    "enumerate_truth_table",
    "verify_table",
    "compile_model",
    "write_table",
    "read_table",
]

ADDRESS_BIT_LIMIT = 24  # 16M entries; anything beyond is not desk-scale

TABLE_MAGIC = "LUTTBL v1"


def lut_cost(beta: int, fanin: int) -> int:
    """Truth-table entry count 2**(beta*fanin) of one neuron."""
    if beta < 1 or fanin < 1:
        raise ValueError(f"beta and fanin must be >= 1, got {beta}, {fanin}")
    bits = beta * fanin
    if bits > 63:
        raise CapacityError(f"2**{bits} entries exceeds the 2**63 cost ceiling")
    return 1 << bits


@dataclass
class TruthTable:
    """Exhaustive input-code -> output-code map of one neuron."""

    layer: int
    neuron: int
    in_bits_per_input: int
    out_bits: int
    input_indices: np.ndarray
    codes: np.ndarray
    verified: bool = False

    @property
    def fanin(self) -> int:
        return int(self.input_indices.shape[0])

    @property
    def input_bits(self) -> int:
        return self.in_bits_per_input * self.fanin

    @property
    def name(self) -> str:
        return f"{self.layer}.{self.neuron}"


def enumerate_truth_table(weights, bias, degree, input_indices,
                          in_quant: QuantizerSpec, out_quant: QuantizerSpec,
                          layer: int = 0, neuron: int = 0) -> TruthTable:
    """Generate the full table of one neuron via the vectorized kernel."""
    input_indices = np.ascontiguousarray(input_indices, dtype=np.int64)
    fanin = input_indices.shape[0]
    address_bits = in_quant.bits * fanin
    if address_bits > ADDRESS_BIT_LIMIT:
        raise CapacityError(
            f"table needs {address_bits} address bits "
            f"(limit {ADDRESS_BIT_LIMIT}); {in_quant.bits} bits x fan-in {fanin}")
    mono_a, mono_b = monomial_slots(fanin, degree)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if weights.shape[0] != mono_a.shape[0]:
        raise ValueError(
            f"{weights.shape[0]} weights for {mono_a.shape[0]} monomials")
    codes = np.empty(1 << address_bits, dtype=np.uint32)
    _backend.fill_table(
        in_quant.levels(), mono_a, mono_b, weights, float(bias),
        out_quant.interior_boundaries(), in_quant.bits, fanin, codes)
    return TruthTable(
        layer=layer, neuron=neuron, in_bits_per_input=in_quant.bits,
        out_bits=out_quant.bits, input_indices=input_indices, codes=codes)


def verify_table(table: TruthTable, weights, bias, degree,
                 in_quant: QuantizerSpec, out_quant: QuantizerSpec):
    """Recompute every row through the scalar path; (ok, first_mismatch).

    Independent oracle for the vectorized generator: levels are decoded with
    plain integer bit slicing and the sum runs through the scalar
    neuron_forward. On success the table is marked verified.
    """
    levels = [float(v) for v in in_quant.levels()]
    mask = (1 << in_quant.bits) - 1
    fanin = table.fanin
    weights = [float(w) for w in np.asarray(weights).ravel()]
    shifts = [in_quant.bits * (fanin - 1 - f) for f in range(fanin)]
    for row in range(table.codes.shape[0]):
        x = [levels[(row >> s) & mask] for s in shifts]
        value = neuron_forward(x, weights, bias, degree=degree, activation="clip")
        code = out_quant.index_scalar(value)
        if code != int(table.codes[row]):
            return False, row
    table.verified = True
    return True, -1


@dataclass
class NetlistLayer:
    """Interface of one emitted layer (all widths in bits)."""

    index: int
    n_in: int
    n_out: int
    in_bits: int
    out_bits: int
    table_names: list
    registered: bool = True

    @property
    def in_bus_width(self) -> int:
        return self.n_in * self.in_bits

    @property
    def out_bus_width(self) -> int:
        return self.n_out * self.out_bits


@dataclass
class Netlist:
    """Ordered layer interfaces plus their table references."""

    name: str
    layers: list = field(default_factory=list)

    def validate(self, tables: dict) -> None:
        for prev, cur in zip(self.layers, self.layers[1:]):
            if prev.out_bus_width != cur.in_bus_width:
                raise StateError(
                    f"bus width mismatch between layer {prev.index} "
                    f"({prev.out_bus_width}) and layer {cur.index} "
                    f"({cur.in_bus_width})")
        for layer in self.layers:
            for name in layer.table_names:
                if name not in tables:
                    raise StateError(f"missing table {name}")
                t = tables[name]
                if t.input_indices.min() < 0 or t.input_indices.max() >= layer.n_in:
                    raise StateError(
                        f"table {name} references inputs outside [0, {layer.n_in})")

    @property
    def pipeline_depth(self) -> int:
        return sum(1 for l in self.layers if l.registered)


def compile_model(model: TrainedModel, verify: bool = True):
    """Compile every neuron of a trained model; (netlist, {name: table}).

    The output layer is quantized like a hidden layer so it is table-
    realizable; argmax over the emitted codes happens outside the netlist.
    """
    tables = {}
    net = Netlist(name="sparselut")
    in_bits = model.input_bits
    n_in = model.n_inputs
    for k, layer in enumerate(model.layers):
        in_quant = QuantizerSpec(in_bits, 0.0, 1.0)
        out_quant = QuantizerSpec(layer.act_bits, 0.0, 1.0)
        names = []
        for j in range(layer.n_out):
            t = enumerate_truth_table(
                layer.coeffs[:, j], layer.bias[j], layer.degree, layer.idx[j],
                in_quant, out_quant, layer=k, neuron=j)
            if verify:
                ok, row = verify_table(t, layer.coeffs[:, j], layer.bias[j],
                                       layer.degree, in_quant, out_quant)
                if not ok:
                    raise StateError(
                        f"table {t.name} failed verification at row {row}")
            tables[t.name] = t
            names.append(t.name)
        net.layers.append(NetlistLayer(
            index=k, n_in=n_in, n_out=layer.n_out,
            in_bits=in_bits, out_bits=layer.act_bits, table_names=names))
        in_bits = layer.act_bits
        n_in = layer.n_out
    net.validate(tables)
    return net, tables


def _hex_width(bits: int) -> int:
    return max(1, (bits + 3) // 4)


def write_table(table: TruthTable, path) -> None:
    """Write the text table format (header line then one row per entry)."""
    inputs = ",".join(str(int(i)) for i in table.input_indices)
    header = (f"{TABLE_MAGIC} neuron={table.name} beta={table.out_bits} "
              f"fanin={table.fanin} inputs={inputs}")
    in_w = _hex_width(table.input_bits)
    out_w = _hex_width(table.out_bits)
    rows = "\n".join(
        f"{row:0{in_w}x} {int(code):0{out_w}x}"
        for row, code in enumerate(table.codes))
    _atomic_write_text(path, header + "\n" + rows + "\n")


def read_table(path) -> TruthTable:
    """Parse a table file; the input field width is implied by the row count."""
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith(TABLE_MAGIC + " "):
        raise FormatError(f"{path}:1: expected {TABLE_MAGIC!r} header")
    fields = dict(part.split("=", 1) for part in lines[0].split()[2:])
    try:
        layer_s, neuron_s = fields["neuron"].split(".")
        out_bits = int(fields["beta"])
        fanin = int(fields["fanin"])
        indices = np.array([int(s) for s in fields["inputs"].split(",")],
                           dtype=np.int64)
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}:1: malformed header ({exc})")
    rows = [l for l in lines[1:] if l.strip()]
    n_rows = len(rows)
    if indices.shape[0] != fanin:
        raise FormatError(f"{path}:1: {indices.shape[0]} inputs for fanin {fanin}")
    address_bits = max(1, (n_rows - 1).bit_length())
    if n_rows != 1 << address_bits or address_bits % fanin:
        raise FormatError(
            f"{path}: {n_rows} rows is not 2**(bits*fanin) for fanin {fanin}")
    codes = np.empty(n_rows, dtype=np.uint32)
    for i, line in enumerate(rows):
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"{path}:{i + 2}: expected '<in_hex> <out_hex>'")
        try:
            addr, code = int(parts[0], 16), int(parts[1], 16)
        except ValueError:
            raise FormatError(f"{path}:{i + 2}: bad hex")
        if addr != i:
            raise FormatError(f"{path}:{i + 2}: rows must be ascending from 0")
        if code >= 1 << out_bits:
            raise FormatError(f"{path}:{i + 2}: code {code} needs more than "
                              f"{out_bits} bits")
        codes[i] = code
    return TruthTable(
        layer=int(layer_s), neuron=int(neuron_s),
        in_bits_per_input=address_bits // fanin, out_bits=out_bits,
        input_indices=indices, codes=codes)


def write_tables(tables: dict, outdir) -> list:
    """Write every table under outdir; returns the file names."""
    os.makedirs(outdir, exist_ok=True)
    names = []
    for t in sorted(tables.values(), key=lambda t: (t.layer, t.neuron)):
        fname = f"lut_l{t.layer}_n{t.neuron}.tbl"
        write_table(t, os.path.join(outdir, fname))
        names.append(fname)
    return names
