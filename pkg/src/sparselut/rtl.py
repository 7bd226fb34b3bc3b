"""Synthesizable Verilog emission from a netlist plus verified tables.

One combinational case-statement module per neuron, one module per layer
wiring the neurons with a registered output stage, and a top module chaining
the layers, so the pipeline depth equals the layer count. Text output is a
pure function of the netlist and tables.

Bus convention: element i of an n-element, b-bit bus occupies bits
[i*b +: b]; a neuron's table address concatenates its selected input fields
with the first (lowest) selected index as the most significant field,
matching the table generator's packing.
"""

from __future__ import annotations

import os

from sparselut.errors import StateError
from sparselut.maskfile import _atomic_write_text
from sparselut.tables import Netlist, TruthTable, _hex_width

__all__ = ["emit_rtl", "write_rtl"]


def _neuron_module(prefix: str, table: TruthTable) -> str:
    in_bits = table.input_bits
    out_bits = table.out_bits
    in_w = _hex_width(in_bits)
    out_w = _hex_width(out_bits)
    name = f"{prefix}_l{table.layer}_n{table.neuron}"
    lines = [
        f"module {name} (",
        f"    input  wire [{in_bits - 1}:0] addr,",
        f"    output reg  [{out_bits - 1}:0] data",
        ");",
        "    always @(*) begin",
        "        case (addr)",
    ]
    for row, code in enumerate(table.codes):
        lines.append(
            f"            {in_bits}'h{row:0{in_w}x}: data = "
            f"{out_bits}'h{int(code):0{out_w}x};")
    lines += [
        f"            default: data = {{{out_bits}{{1'b0}}}};",
        "        endcase",
        "    end",
        "endmodule",
    ]
    return "\n".join(lines) + "\n"


def _layer_module(prefix: str, layer, tables: dict) -> str:
    name = f"{prefix}_layer{layer.index}"
    lines = [
        f"module {name} (",
        "    input  wire clk,",
        f"    input  wire [{layer.in_bus_width - 1}:0] in_bus,",
        f"    output reg  [{layer.out_bus_width - 1}:0] out_bus",
        ");",
    ]
    for j, tname in enumerate(layer.table_names):
        t = tables[tname]
        fields = [
            f"in_bus[{int(i) * layer.in_bits} +: {layer.in_bits}]"
            for i in t.input_indices
        ]
        concat = ", ".join(reversed(fields))  # first index = MSB field
        lines.append(f"    wire [{t.input_bits - 1}:0] n{j}_addr = {{{concat}}};")
        lines.append(f"    wire [{layer.out_bits - 1}:0] n{j}_data;")
        lines.append(
            f"    {prefix}_l{layer.index}_n{j} u_n{j} "
            f"(.addr(n{j}_addr), .data(n{j}_data));")
    lines.append("    always @(posedge clk) begin")
    for j in range(layer.n_out):
        lines.append(
            f"        out_bus[{j * layer.out_bits} +: {layer.out_bits}] <= n{j}_data;")
    lines += ["    end", "endmodule"]
    return "\n".join(lines) + "\n"


def _top_module(prefix: str, netlist: Netlist) -> str:
    first, last = netlist.layers[0], netlist.layers[-1]
    lines = [
        f"module {prefix}_top (",
        "    input  wire clk,",
        f"    input  wire [{first.in_bus_width - 1}:0] in_bus,",
        f"    output wire [{last.out_bus_width - 1}:0] out_bus",
        ");",
    ]
    bus = "in_bus"
    for layer in netlist.layers:
        out = f"bus_l{layer.index}" if layer is not last else "out_bus_r"
        lines.append(f"    wire [{layer.out_bus_width - 1}:0] {out};")
        lines.append(
            f"    {prefix}_layer{layer.index} u_layer{layer.index} "
            f"(.clk(clk), .in_bus({bus}), .out_bus({out}));")
        bus = out
    lines.append(f"    assign out_bus = {bus};")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def emit_rtl(netlist: Netlist, tables: dict) -> dict:
    """Render the design; returns {file name: verilog text}.

    Requires every referenced table to have passed verification.
    """
    netlist.validate(tables)
    for layer in netlist.layers:
        for tname in layer.table_names:
            if not tables[tname].verified:
                raise StateError(
                    f"table {tname} is unverified; run verify_table first")
    prefix = netlist.name
    files = {}
    for layer in netlist.layers:
        parts = [_neuron_module(prefix, tables[t]) for t in layer.table_names]
        parts.append(_layer_module(prefix, layer, tables))
        files[f"{prefix}_layer{layer.index}.v"] = "\n".join(parts)
    files[f"{prefix}_top.v"] = _top_module(prefix, netlist)
    return files


def write_rtl(netlist: Netlist, tables: dict, outdir) -> list:
    """Emit and write all RTL files under outdir; returns the file names."""
    files = emit_rtl(netlist, tables)
    os.makedirs(outdir, exist_ok=True)
    for fname in sorted(files):
        _atomic_write_text(outdir + os.sep + fname, files[fname])
    return sorted(files)
