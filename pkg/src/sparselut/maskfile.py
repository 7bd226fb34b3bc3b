"""Feature-mask text format.

    SPARSELUT-MASK v1
    layers <L>
    layer <k> in <N> out <M> fanin <F>
    <i1> <i2> ... <iF>        (one line per output neuron, ascending indices)
    ...

The format is canonical: indices are written ascending and a reader rejects
unsorted, duplicate, or out-of-range indices, so read(write(m)) == m holds
exactly. Writes go through a temp file plus rename.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from sparselut.errors import FormatError
from sparselut.rewiring import FeatureMask

__all__ = ["write_mask", "read_mask", "format_mask", "parse_mask"]

MAGIC = "SPARSELUT-MASK v1"


def format_mask(mask: FeatureMask) -> str:
    """Render a mask in the canonical text format."""
    lines = [MAGIC, f"layers {len(mask)}"]
    for k, m in enumerate(mask.layers):
        n_in, n_out = m.shape
        fanins = mask.column_fanins(k)
        if n_out == 0 or not np.all(fanins == fanins[0]):
            raise ValueError(f"layer {k}: fan-in is not uniform, cannot serialize")
        fanin = int(fanins[0])
        lines.append(f"layer {k} in {n_in} out {n_out} fanin {fanin}")
        for j in range(n_out):
            idx = np.nonzero(m[:, j])[0]
            lines.append(" ".join(str(int(i)) for i in idx))
    return "\n".join(lines) + "\n"


def write_mask(mask: FeatureMask, path) -> None:
    text = format_mask(mask)
    _atomic_write_text(path, text)


def _atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _LineReader:
    def __init__(self, text, source):
        self.lines = text.splitlines()
        self.source = source
        self.pos = 0

    def next(self, what):
        if self.pos >= len(self.lines):
            raise FormatError(f"{self.source}:{self.pos + 1}: missing {what}")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def error(self, message):
        raise FormatError(f"{self.source}:{self.pos}: {message}")


def parse_mask(text: str, source: str = "<string>") -> FeatureMask:
    """Parse the canonical mask format; FormatError carries line numbers."""
    r = _LineReader(text, source)
    if r.next("magic line").strip() != MAGIC:
        r.error(f"expected magic {MAGIC!r}")
    parts = r.next("layer count").split()
    if len(parts) != 2 or parts[0] != "layers" or not parts[1].isdigit():
        r.error("expected 'layers <count>'")
    n_layers = int(parts[1])

    mats = []
    for k in range(n_layers):
        head = r.next(f"header of layer {k}").split()
        if (len(head) != 8 or head[0] != "layer" or head[2] != "in"
                or head[4] != "out" or head[6] != "fanin"):
            r.error("expected 'layer <k> in <N> out <M> fanin <F>'")
        try:
            idx_k, n_in, n_out, fanin = (int(head[1]), int(head[3]),
                                         int(head[5]), int(head[7]))
        except ValueError:
            r.error("non-integer field in layer header")
        if idx_k != k:
            r.error(f"expected layer {k}, found layer {idx_k}")
        if n_in < 1 or n_out < 1 or not 1 <= fanin <= n_in:
            r.error(f"invalid layer geometry in={n_in} out={n_out} fanin={fanin}")
        m = np.zeros((n_in, n_out), dtype=np.uint8)
        for j in range(n_out):
            cells = r.next(f"neuron {j} of layer {k}").split()
            if len(cells) != fanin:
                r.error(f"expected {fanin} indices, got {len(cells)}")
            try:
                idx = [int(c) for c in cells]
            except ValueError:
                r.error("non-integer index")
            for a, b in zip(idx, idx[1:]):
                if a >= b:
                    r.error("indices must be strictly ascending")
            if idx[0] < 0 or idx[-1] >= n_in:
                r.error(f"index outside [0, {n_in})")
            m[idx, j] = 1
        mats.append(m)
    while r.pos < len(r.lines):
        if r.lines[r.pos].strip():
            r.error("trailing content after last layer")
        r.pos += 1
    return FeatureMask(mats)


def read_mask(path) -> FeatureMask:
    with open(path, "r", encoding="utf-8") as f:
        return parse_mask(f.read(), source=os.fspath(path))
