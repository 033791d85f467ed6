"""Lossless binary state snapshots.

Format: one ASCII header line

    CBY1 <mode> n=<n> L=<L> t=<t> [eos_w=<w> eos_p_ref=<p>] fields=<list>\n

followed by each field as raw little-endian 64-bit floats, x-fastest,
in header order.  Reading is the exact inverse; round trips are
bit-identical.
"""

import numpy as np

from .eos import Eos
from .errors import FormatError
from .fields import GridState, zero_state

FIELD_SHAPES = {
    "a": (3, 3),
    "b": (3,),
    "omega": (3, 3, 3),
    "X": (3, 3),
    "Y": (3,),
    "r_ss": (3, 6),
    "r_0s": (3, 6),
    "mu": (),
}

VACUUM_FIELDS = ("a", "b", "omega", "X", "r_ss", "r_0s")
FLUID_FIELDS = VACUUM_FIELDS + ("Y", "mu")


def _field_arrays(state, names):
    look = {
        "a": state.frame.a, "b": state.frame.b, "omega": state.conn.omega,
        "X": state.conn.X, "Y": state.conn.Y,
        "r_ss": state.curv.r_ss, "r_0s": state.curv.r_0s,
    }
    if state.fluid is not None:
        look["mu"] = state.fluid.mu
    return [look[name] for name in names]


def write_snapshot(state, path):
    """Write the state; returns the number of bytes written."""
    names = VACUUM_FIELDS if state.is_vacuum() else FLUID_FIELDS
    parts = [f"CBY1 {'vacuum' if state.is_vacuum() else 'fluid'}",
             f"n={state.n}", f"L={state.L!r}", f"t={state.t!r}"]
    if state.fluid is not None:
        parts += [f"eos_w={state.fluid.eos.w!r}",
                  f"eos_p_ref={state.fluid.eos.p_ref!r}"]
    parts.append("fields=" + ",".join(names))
    header = (" ".join(parts) + "\n").encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in _field_arrays(state, names):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
        return fh.tell()


def read_snapshot(path):
    """Read a snapshot back into a GridState."""
    with open(path, "rb") as fh:
        header = fh.readline()
        if not header.endswith(b"\n"):
            raise FormatError("unterminated header line", offset=len(header))
        try:
            text = header.decode("ascii").strip()
        except UnicodeDecodeError as exc:
            raise FormatError(f"header not ASCII: {exc}", offset=0)
        tokens = text.split()
        if len(tokens) < 5 or tokens[0] != "CBY1":
            raise FormatError(f"bad magic/header: {text!r}", offset=0)
        mode = tokens[1]
        if mode not in ("vacuum", "fluid"):
            raise FormatError(f"unknown mode {mode!r}", offset=0)
        kv = {}
        for tok in tokens[2:]:
            if "=" not in tok:
                raise FormatError(f"bad header token {tok!r}", offset=0)
            k, _, v = tok.partition("=")
            kv[k] = v
        try:
            n = int(kv["n"])
            L = float(kv["L"])
            t = float(kv["t"])
            names = tuple(kv["fields"].split(","))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad header fields: {exc}", offset=0)
        expected = FLUID_FIELDS if mode == "fluid" else VACUUM_FIELDS
        if names != expected:
            raise FormatError(f"unexpected field list {names}", offset=0)

        eos = None
        if mode == "fluid":
            try:
                eos = Eos(w=float(kv["eos_w"]), p_ref=float(kv["eos_p_ref"]))
            except (KeyError, ValueError) as exc:
                raise FormatError(f"bad eos header: {exc}", offset=0)

        state = zero_state(n, L, t=t,
                           fluid_mu=1.0 if mode == "fluid" else None, eos=eos)
        grid = (n, n, n)
        offset = len(header)
        arrays = _field_arrays(state, names)
        for name, arr in zip(names, arrays):
            shape = FIELD_SHAPES[name] + grid
            count = int(np.prod(shape))
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise FormatError(f"truncated field {name!r}", offset=offset + len(raw))
            arr[...] = np.frombuffer(raw, dtype="<f8").reshape(shape)
            offset += count * 8
        extra = fh.read(1)
        if extra:
            raise FormatError("trailing bytes after last field", offset=offset)
        return state
