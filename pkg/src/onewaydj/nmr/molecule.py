"""Molecule description: chemical shifts, J couplings, relaxation times.

File format (``#`` starts a comment, blank lines ignored)::

    [shifts]                 # rotating-frame offset per nucleus, Hz
    C1   1200.0
    C2  -3400.0
    [jcouplings]             # strictly lower-triangular rows, Hz
    C2   72.0
    C3   1.5   69.0
    [relaxation]             # T1 and T2 per nucleus, seconds
    C1   12.37   0.3762
    [qubit_map]              # physical qubit -> nucleus
    1  C2

Rows of ``[jcouplings]`` may also be given as full matrix rows (one value per
nucleus); the table is then checked for symmetry. Internally every array is
indexed by physical qubit (qubit 1 first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence, Union

import numpy as np


class MoleculeSpecError(ValueError):
    """Malformed or inconsistent molecule description."""


@dataclass(frozen=True, eq=False)
class MoleculeSpec:
    """Spin system in physical-qubit order.

    ``shifts`` are offsets in Hz (angular frequency ``2*pi*shift``), ``jcoupling``
    a symmetric Hz matrix with zero diagonal, ``t1``/``t2`` in seconds.
    ``nuclei[i]`` names the nucleus that carries qubit ``i + 1``.
    """

    shifts: np.ndarray
    jcoupling: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    nuclei: tuple[str, ...]
    warnings: tuple[str, ...] = ()
    n: int = field(init=False)

    def __post_init__(self):
        shifts = np.asarray(self.shifts, dtype=float).reshape(-1)
        n = shifts.size
        j = np.asarray(self.jcoupling, dtype=float)
        t1 = np.asarray(self.t1, dtype=float).reshape(-1)
        t2 = np.asarray(self.t2, dtype=float).reshape(-1)
        if n < 1:
            raise MoleculeSpecError("molecule has no spins")
        if j.shape != (n, n):
            raise MoleculeSpecError(f"jcoupling must be {n}x{n}, got {j.shape}")
        if t1.size != n or t2.size != n:
            raise MoleculeSpecError("t1 and t2 need one value per spin")
        if len(self.nuclei) != n or len(set(self.nuclei)) != n:
            raise MoleculeSpecError(f"nuclei labels {self.nuclei} are not a permutation of {n} spins")
        for a in range(n):
            if j[a, a] != 0:
                raise MoleculeSpecError(f"jcoupling diagonal ({a + 1},{a + 1}) must be zero")
            for b in range(a):
                if not math.isclose(j[a, b], j[b, a], rel_tol=0, abs_tol=1e-12):
                    raise MoleculeSpecError(
                        f"jcoupling not symmetric at ({b + 1},{a + 1}): {j[b, a]} vs {j[a, b]}"
                    )
        for q in range(n):
            if not t2[q] > 0:
                raise MoleculeSpecError(f"t2 of qubit {q + 1} must be positive")
            if t1[q] < t2[q]:
                raise MoleculeSpecError(f"t1 < t2 for qubit {q + 1} ({t1[q]} < {t2[q]})")
        for name, arr in (("shifts", shifts), ("jcoupling", j), ("t1", t1), ("t2", t2)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "nuclei", tuple(self.nuclei))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        object.__setattr__(self, "n", n)

    @property
    def omega(self) -> np.ndarray:
        """Angular offset frequencies, rad/s."""
        return 2 * np.pi * self.shifts

    @classmethod
    def uncoupled(cls, n: int, shifts: Sequence[float] = None) -> "MoleculeSpec":
        """Homonuclear system without couplings or relaxation."""
        shifts = np.zeros(n) if shifts is None else np.asarray(shifts, dtype=float)
        inf = np.full(n, np.inf)
        return cls(shifts, np.zeros((n, n)), inf, inf, tuple(f"S{i + 1}" for i in range(n)))


def _fail(path, lineno, msg):
    raise MoleculeSpecError(f"{path}:{lineno}: {msg}")


def _float(tok, path, lineno):
    try:
        return float(tok)
    except ValueError:
        _fail(path, lineno, f"expected a number, got {tok!r}")


def parse_molecule_spec(text: str, path: str = "<string>") -> MoleculeSpec:
    sections: dict[str, list[tuple[int, list[str]]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                _fail(path, lineno, f"malformed section header {line!r}")
            current = line[1:-1].strip().lower()
            if current not in ("shifts", "jcouplings", "relaxation", "qubit_map"):
                _fail(path, lineno, f"unknown section [{current}]")
            if current in sections:
                _fail(path, lineno, f"duplicate section [{current}]")
            sections[current] = []
            continue
        if current is None:
            _fail(path, lineno, "content before the first section header")
        sections[current].append((lineno, line.split()))

    if "shifts" not in sections:
        raise MoleculeSpecError(f"{path}: missing [shifts] section")
    names: list[str] = []
    shifts: dict[str, float] = {}
    for lineno, toks in sections["shifts"]:
        if len(toks) != 2:
            _fail(path, lineno, "shift rows are '<nucleus> <Hz>'")
        if toks[0] in shifts:
            _fail(path, lineno, f"duplicate nucleus {toks[0]!r}")
        names.append(toks[0])
        shifts[toks[0]] = _float(toks[1], path, lineno)
    n = len(names)
    index = {name: i for i, name in enumerate(names)}

    jmat = np.zeros((n, n))
    given = np.zeros((n, n), dtype=bool)
    for lineno, toks in sections.get("jcouplings", []):
        name, vals = toks[0], [_float(t, path, lineno) for t in toks[1:]]
        if name not in index:
            _fail(path, lineno, f"unknown nucleus {name!r}")
        row = index[name]
        if len(vals) == n:
            cols = range(n)
        elif len(vals) == row:
            cols = range(row)
        else:
            _fail(path, lineno, f"row {name} needs {row} (lower-triangular) or {n} values, got {len(vals)}")
        for col, v in zip(cols, vals):
            if col == row:
                continue
            if given[row, col]:
                _fail(path, lineno, f"J({names[row]},{names[col]}) given twice")
            jmat[row, col] = v
            given[row, col] = True
    for a in range(n):
        for b in range(a):
            if given[a, b] and not given[b, a]:
                jmat[b, a] = jmat[a, b]
            elif given[b, a] and not given[a, b]:
                jmat[a, b] = jmat[b, a]
            elif given[a, b] and jmat[a, b] != jmat[b, a]:
                raise MoleculeSpecError(
                    f"{path}: asymmetric J table at ({names[b]},{names[a]}): "
                    f"{jmat[b, a]} vs {jmat[a, b]}"
                )

    warnings = []
    t1 = np.full(n, np.inf)
    t2 = np.full(n, np.inf)
    if "relaxation" in sections:
        seen = set()
        for lineno, toks in sections["relaxation"]:
            if len(toks) != 3 or toks[0] not in index:
                _fail(path, lineno, "relaxation rows are '<nucleus> <T1 s> <T2 s>'")
            i = index[toks[0]]
            t1[i], t2[i] = _float(toks[1], path, lineno), _float(toks[2], path, lineno)
            seen.add(toks[0])
        missing = [m for m in names if m not in seen]
        if missing:
            raise MoleculeSpecError(f"{path}: no relaxation times for {', '.join(missing)}")
    else:
        warnings.append("no [relaxation] section: T1 = T2 = inf for every spin")

    if "qubit_map" in sections:
        order = [None] * n
        for lineno, toks in sections["qubit_map"]:
            if len(toks) != 2:
                _fail(path, lineno, "qubit_map rows are '<qubit> <nucleus>'")
            try:
                q = int(toks[0])
            except ValueError:
                _fail(path, lineno, f"qubit index must be an integer, got {toks[0]!r}")
            if not 1 <= q <= n or toks[1] not in index:
                _fail(path, lineno, f"bad mapping {q} -> {toks[1]}")
            if order[q - 1] is not None:
                _fail(path, lineno, f"qubit {q} mapped twice")
            order[q - 1] = toks[1]
        if None in order or len(set(order)) != n:
            raise MoleculeSpecError(f"{path}: qubit_map is not a permutation of the nuclei")
    else:
        order = list(names)

    perm = [index[name] for name in order]
    return MoleculeSpec(
        shifts=np.array([shifts[names[p]] for p in perm]),
        jcoupling=jmat[np.ix_(perm, perm)],
        t1=t1[perm],
        t2=t2[perm],
        nuclei=tuple(order),
        warnings=tuple(warnings),
    )


def load_molecule_spec(path: Union[str, Path]) -> MoleculeSpec:
    """Read and validate a molecule file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MoleculeSpecError(f"{path}: {exc.strerror or exc}") from exc
    return parse_molecule_spec(text, str(path))


def crotonic_acid_path() -> Path:
    return Path(str(resources.files("onewaydj") / "data" / "crotonic_acid.spec"))


def crotonic_acid() -> MoleculeSpec:
    """Shipped example: measured relaxation times, placeholder shifts and couplings."""
    return load_molecule_spec(crotonic_acid_path())
