"""Metrics CSV export and plain-text checkpoints."""

from __future__ import annotations

import csv
from dataclasses import astuple
from pathlib import Path

import numpy as np

from .nn import Mlp
from .qlearning import NET_ORDER, QuadraticQ
from .training import METRICS_HEADER

MAGIC = "lanechange-checkpoint 1"


class CheckpointError(ValueError):
    pass


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in (astuple(row) if hasattr(row, "__dataclass_fields__") else row)])


def export_metrics(rows, path):
    """Write one line per gradient step under the fixed metrics header."""
    write_csv(path, METRICS_HEADER, rows)


def read_metrics(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != METRICS_HEADER:
            raise ValueError(f"unexpected metrics header {header}")
        return [dict(zip(header, map(float, row))) for row in reader]


def save_checkpoint(q: QuadraticQ, path, meta: dict | None = None):
    """Write ``q`` as decimal text (17 significant digits, exact round trip).

    ``meta`` is echoed into the header (seed, step count, effective config...).
    """
    lines = [MAGIC, f"b_form {q.b_form}", f"action_limit {q.action_limit!r}"]
    for name, sizes, head in q.architecture():
        lines.append(f"net {name} {','.join(map(str, sizes))} {head}")
    for key, value in (meta or {}).items():
        for sub in str(value).splitlines():
            lines.append(f"meta {key} {sub}")
    flat = np.concatenate([q.nets[k].flat() for k in NET_ORDER])
    lines.append(f"params {flat.size}")
    lines.extend(format(float(v), ".17g") for v in flat)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_checkpoint(path, expect_architecture=None):
    """Read a checkpoint; optionally insist on an architecture as returned by ``QuadraticQ.architecture``.

    Returns:
        ``(q, meta)`` where ``meta`` maps header keys to their text.
    """
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    b_form, action_limit, nets_spec, meta = "clamp", 0.5, [], {}
    pos = 1
    while pos < len(text) and not text[pos].startswith("params "):
        tag, _, rest = text[pos].partition(" ")
        if tag == "b_form":
            b_form = rest
        elif tag == "action_limit":
            action_limit = float(rest)
        elif tag == "net":
            name, sizes, head = rest.split()
            nets_spec.append((name, tuple(int(s) for s in sizes.split(",")), head))
        elif tag == "meta":
            key, _, val = rest.partition(" ")
            meta[key] = meta[key] + "\n" + val if key in meta else val
        else:
            raise CheckpointError(f"{path}:{pos + 1}: unexpected header line {text[pos]!r}")
        pos += 1
    if pos >= len(text):
        raise CheckpointError(f"{path}: missing parameter block")
    if [n for n, _, _ in nets_spec] != list(NET_ORDER):
        raise CheckpointError(f"{path}: networks {[n for n, _, _ in nets_spec]} != {list(NET_ORDER)}")
    if expect_architecture is not None and [tuple(a) for a in expect_architecture] != nets_spec:
        raise CheckpointError(f"{path}: architecture {nets_spec} does not match requested {list(expect_architecture)}")
    nets = {name: Mlp(sizes, head) for name, sizes, head in nets_spec}
    declared = int(text[pos].split()[1])
    expected = sum(n.n_params for n in nets.values())
    values = [v for v in text[pos + 1:] if v.strip()]
    if declared != expected or len(values) != expected:
        raise CheckpointError(f"{path}: expected {expected} parameters, found {len(values)} "
                              f"(header declares {declared})")
    flat = np.array([float(v) for v in values])
    offset = 0
    for name in NET_ORDER:
        n = nets[name].n_params
        nets[name].set_flat(flat[offset:offset + n])
        offset += n
    return QuadraticQ(nets, b_form, action_limit), meta
