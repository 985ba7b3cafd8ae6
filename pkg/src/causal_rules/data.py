"""Binary observation tables, item catalogs and CSV/JSON ingestion.

A :class:`Dataset` is an immutable ``n x m`` boolean matrix whose columns are
named items. Every item carries a role (subpopulation, intervention, outcome
or covariate). Itemsets are plain tuples of column indices kept in ascending
order, so equal sets compare and hash equal.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import json
import os
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateItemName,
    EmptyDataset,
    InvalidItem,
    MissingRoleForItem,
    NonBinaryCell,
    OverlappingSets,
    RoleError,
)

ItemSet = tuple  # tuple[int, ...] in ascending order


class ItemRole(str, enum.Enum):
    SUBPOPULATION = "subpopulation"
    INTERVENTION = "intervention"
    OUTCOME = "outcome"
    COVARIATE = "covariate"


def itemset(items: Iterable[int] = ()) -> ItemSet:
    """Canonical itemset: duplicates removed, ascending order."""
    return tuple(sorted({int(i) for i in items}))


class Dataset:
    """Immutable binary observation table over a named item catalog.

    Parameters
    ----------
    names : sequence of str
        Item names, one per column.
    roles : sequence of ItemRole or str
        Role of each item, same order as ``names``.
    bits : array_like, shape (n, m)
        0/1 or boolean matrix; copied and frozen.
    """

    def __init__(self, names: Sequence[str], roles: Sequence, bits):
        names = [str(s) for s in names]
        seen = set()
        for name in names:
            if name in seen:
                raise DuplicateItemName(name)
            seen.add(name)
        roles = [ItemRole(r) for r in roles]
        if len(roles) != len(names):
            raise ValueError("roles and names differ in length")
        arr = np.asarray(bits)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise EmptyDataset("dataset has no rows")
        if arr.shape[1] != len(names):
            raise ValueError(
                f"bit matrix has {arr.shape[1]} columns, catalog has {len(names)}"
            )
        if arr.dtype != np.bool_:
            if not np.isin(arr, (0, 1)).all():
                raise ValueError("bit matrix must contain only 0/1")
        arr = np.ascontiguousarray(arr, dtype=bool)
        arr.setflags(write=False)
        n_outcome = sum(r is ItemRole.OUTCOME for r in roles)
        if n_outcome > 1:
            raise RoleError(f"expected at most one outcome item, found {n_outcome}")
        self._names = tuple(names)
        self._roles = tuple(roles)
        self._index = {name: i for i, name in enumerate(names)}
        self._bits = arr

    @property
    def names(self) -> tuple[str, ...]:
        return self._names

    @property
    def roles(self) -> tuple[ItemRole, ...]:
        return self._roles

    @property
    def bits(self) -> np.ndarray:
        """Read-only boolean matrix of shape (n, width)."""
        return self._bits

    @property
    def n(self) -> int:
        return self._bits.shape[0]

    @property
    def width(self) -> int:
        return self._bits.shape[1]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Dataset(n={self.n}, items={list(self._names)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self._names == other._names
            and self._roles == other._roles
            and np.array_equal(self._bits, other._bits)
        )

    __hash__ = None

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise InvalidItem(name) from None

    def items(self, names: Iterable[str]) -> ItemSet:
        return itemset(self.index(s) for s in names)

    def column(self, item: int) -> np.ndarray:
        self._check(item)
        return self._bits[:, item]

    def with_role(self, role) -> ItemSet:
        role = ItemRole(role)
        return tuple(i for i, r in enumerate(self._roles) if r is role)

    @property
    def outcome(self) -> int:
        out = self.with_role(ItemRole.OUTCOME)
        if not out:
            raise RoleError("dataset has no outcome item")
        return out[0]

    def _check(self, item) -> None:
        if not 0 <= int(item) < self.width:
            raise InvalidItem(item)

    def mask(self, all_true: Iterable[int] = (), all_false: Iterable[int] = ()) -> np.ndarray:
        """Boolean row mask: every ``all_true`` bit set, every ``all_false`` bit clear."""
        all_true = itemset(all_true)
        all_false = itemset(all_false)
        for i in all_true + all_false:
            self._check(i)
        overlap = set(all_true) & set(all_false)
        if overlap:
            raise OverlappingSets(sorted(overlap))
        m = np.ones(self.n, dtype=bool)
        if all_true:
            m &= self._bits[:, list(all_true)].all(axis=1)
        if all_false:
            m &= ~self._bits[:, list(all_false)].any(axis=1)
        return m

    def take(self, rows) -> "Dataset":
        """New dataset built from the given row indices (repeats allowed)."""
        return Dataset(self._names, self._roles, self._bits[np.asarray(rows)])

    def with_roles(self, roles: Mapping[str, str]) -> "Dataset":
        """Copy with some item roles replaced."""
        new = [ItemRole(roles.get(name, r)) for name, r in zip(self._names, self._roles)]
        return Dataset(self._names, new, self._bits)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps([self._names, [r.value for r in self._roles]]).encode())
        h.update(np.packbits(self._bits, axis=1).tobytes())
        h.update(str(self._bits.shape).encode())
        return h.hexdigest()

    def summary(self) -> dict:
        counts = {r.value: 0 for r in ItemRole}
        for r in self._roles:
            counts[r.value] += 1
        return {"rows": self.n, "columns": self.width, "roles": counts}


def support(ds: Dataset, items: Iterable[int]) -> float:
    """Fraction of rows in which every item of ``items`` is true."""
    return count_where(ds, items) / ds.n


def count_where(ds: Dataset, all_true: Iterable[int] = (), all_false: Iterable[int] = ()) -> int:
    """Number of rows with all ``all_true`` bits set and all ``all_false`` bits clear."""
    return int(ds.mask(all_true, all_false).sum())


def load_csv(path, roles_path) -> Dataset:
    """Read a 0/1 CSV with a header row plus a JSON name -> role map."""
    with open(roles_path, encoding="utf-8") as fh:
        role_map = json.load(fh)
    if not isinstance(role_map, dict):
        raise ValueError(f"{roles_path}: expected a JSON object mapping item name to role")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path}: file is empty") from None
        seen = set()
        for name in header:
            if name in seen:
                raise DuplicateItemName(name)
            seen.add(name)
        for name in header:
            if name not in role_map:
                raise MissingRoleForItem(name)
        rows = []
        for rownum, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != len(header):
                raise NonBinaryCell(rownum, header[min(len(record), len(header) - 1)],
                                    f"row has {len(record)} cells, expected {len(header)}")
            vals = []
            for col, cell in zip(header, record):
                cell = cell.strip()
                if cell == "1":
                    vals.append(True)
                elif cell == "0":
                    vals.append(False)
                else:
                    raise NonBinaryCell(rownum, col, cell)
            rows.append(vals)
    if not rows:
        raise EmptyDataset(f"{path}: no data rows")
    try:
        roles = [ItemRole(role_map[name]) for name in header]
    except ValueError as exc:
        raise RoleError(str(exc)) from None
    return Dataset(header, roles, np.array(rows, dtype=bool))


def write_csv(ds: Dataset, path, roles_path=None) -> None:
    """Write ``ds`` as a 0/1 CSV and (optionally) its roles JSON."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ds.names)
        w.writerows(ds.bits.astype(np.uint8).tolist())
    if roles_path is not None:
        with open(roles_path, "w", encoding="utf-8") as fh:
            json.dump({n: r.value for n, r in zip(ds.names, ds.roles)}, fh, indent=2)
            fh.write("\n")
