"""LongJump - Kernel CSV Files"""

import csv
from pathlib import Path
from typing import Union

import numpy as np

from src.groups.elements import GroupKind, GroupSpec, parse_element
from src.kernels.sparse import DictKernel, LatticeKernel, SparseKernel


def write_kernel_csv(kernel: SparseKernel, path: Union[str, Path]) -> Path:
    """
    Write a kernel as CSV: two comment lines (n, droppedMass), then
    element_coords,prob rows in element order.
    """
    path = Path(path)
    rows, values = kernel.items()
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# n={kernel.n}\n")
        f.write(f"# droppedMass={kernel.dropped:.17g}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["element_coords", "prob"])
        for row, value in zip(rows, values):
            writer.writerow([";".join(str(int(x)) for x in row), f"{value:.17g}"])
    return path


def read_kernel_csv(path: Union[str, Path], group: GroupSpec) -> SparseKernel:
    """Read a kernel written by write_kernel_csv."""
    n = 0
    dropped = 0.0
    elements = []
    values = []
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# n="):
            n = int(line[4:])
        elif line.startswith("# droppedMass="):
            dropped = float(line[len("# droppedMass="):])
        elif line.strip():
            body.append(line)
    for record in csv.DictReader(body):
        elements.append(parse_element(group, record["element_coords"]))
        values.append(float(record["prob"]))
    rows = np.asarray(elements, dtype=np.int64).reshape(len(elements), group.arity)
    if group.kind is GroupKind.ZK and rows.shape[0]:
        return LatticeKernel.from_atoms(group, rows, np.asarray(values), n, dropped)
    return DictKernel(group, rows, np.asarray(values), n, dropped)
