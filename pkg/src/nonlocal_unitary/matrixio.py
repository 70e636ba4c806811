"""Plain-text JSON files for matrices, states and Kronecker sums.

Complex entries are ``[re, im]`` pairs written with the shortest
round-tripping float repr, one matrix row per line, so emit -> parse ->
emit is byte-identical and files diff cleanly.

Matrix file::

    {
      "name": "cnot",
      "description": "...",
      "d_A": 2,
      "d_B": 2,
      "matrix": [
        [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        ...
      ]
    }

Local (single-party) operators use ``d_B = 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MatrixFileError
from .protocol import PureState
from .ranks import KroneckerSum


def _num(x: float) -> str:
    return json.dumps(float(x))


def _row(values) -> str:
    return "[" + ", ".join(f"[{_num(z.real)}, {_num(z.imag)}]" for z in values) + "]"


def _matrix_lines(M: np.ndarray, indent: str) -> str:
    rows = [indent + _row(r) for r in np.asarray(M, dtype=np.complex128)]
    return "[\n" + ",\n".join(rows) + "\n" + indent[:-2] + "]"


def _parse_complex(entry, where: str) -> complex:
    if not (isinstance(entry, list) and len(entry) == 2):
        raise MatrixFileError(f"{where}: expected an [re, im] pair, got {entry!r}")
    re, im = entry
    for v in (re, im):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise MatrixFileError(f"{where}: non-finite or non-numeric entry {entry!r}")
    return complex(float(re), float(im))


def _parse_matrix(rows, where: str) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise MatrixFileError(f"{where}: expected a non-empty list of rows")
    width = len(rows[0])
    if width == 0 or any(len(r) != width for r in rows):
        raise MatrixFileError(f"{where}: rows have unequal or zero length")
    return np.array(
        [[_parse_complex(z, f"{where}[{i}][{j}]") for j, z in enumerate(r)] for i, r in enumerate(rows)],
        dtype=np.complex128,
    )


def _load_json(text: str, kind: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MatrixFileError(f"{kind} file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MatrixFileError(f"{kind} file must hold a JSON object")
    return data


def _positive_int(data: dict, key: str) -> int:
    v = data.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise MatrixFileError(f"{key!r} must be a positive integer, got {v!r}")
    return v


@dataclass(frozen=True)
class MatrixFile:
    d_A: int
    d_B: int
    matrix: np.ndarray
    name: str | None = None
    description: str | None = None

    def __post_init__(self):
        M = np.array(self.matrix, dtype=np.complex128)
        n = self.d_A * self.d_B
        if M.shape != (n, n):
            raise MatrixFileError(f"matrix has shape {M.shape}, expected {(n, n)} for d_A={self.d_A}, d_B={self.d_B}")
        if not np.all(np.isfinite(M)):
            raise MatrixFileError("matrix has non-finite entries")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    def dumps(self) -> str:
        head = []
        if self.name is not None:
            head.append(f'  "name": {json.dumps(self.name)}')
        if self.description is not None:
            head.append(f'  "description": {json.dumps(self.description)}')
        head += [f'  "d_A": {self.d_A}', f'  "d_B": {self.d_B}', f'  "matrix": {_matrix_lines(self.matrix, "    ")}']
        return "{\n" + ",\n".join(head) + "\n}\n"

    @classmethod
    def loads(cls, text: str) -> "MatrixFile":
        data = _load_json(text, "matrix")
        unknown = set(data) - {"name", "description", "d_A", "d_B", "matrix"}
        if unknown:
            raise MatrixFileError(f"unknown keys {sorted(unknown)}")
        for key in ("name", "description"):
            if key in data and not isinstance(data[key], str):
                raise MatrixFileError(f"{key!r} must be a string")
        d_A, d_B = _positive_int(data, "d_A"), _positive_int(data, "d_B")
        if "matrix" not in data:
            raise MatrixFileError("missing 'matrix'")
        M = _parse_matrix(data["matrix"], "matrix")
        return cls(d_A, d_B, M, data.get("name"), data.get("description"))


def read_matrix_file(path) -> MatrixFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MatrixFileError(f"cannot read {path}: {exc}") from exc
    return MatrixFile.loads(text)


def write_matrix_file(path, mf: MatrixFile) -> None:
    Path(path).write_text(mf.dumps(), encoding="utf-8")


def dumps_state(state: PureState) -> str:
    amps = ",\n".join(f"    [{_num(z.real)}, {_num(z.imag)}]" for z in state.amplitudes)
    return (
        "{\n"
        f'  "labels": {json.dumps(list(state.labels))},\n'
        f'  "dims": {json.dumps(list(state.dims))},\n'
        f'  "amplitudes": [\n{amps}\n  ]\n'
        "}\n"
    )


def loads_state(text: str) -> PureState:
    """State file: ``labels``, ``dims`` and ``amplitudes`` (``[re, im]`` list).

    Amplitudes are renormalized on load.
    """
    data = _load_json(text, "state")
    try:
        labels, dims, amps = data["labels"], data["dims"], data["amplitudes"]
    except KeyError as exc:
        raise MatrixFileError(f"state file is missing {exc}") from None
    if not isinstance(amps, list):
        raise MatrixFileError("'amplitudes' must be a list")
    vec = np.array([_parse_complex(z, f"amplitudes[{i}]") for i, z in enumerate(amps)], dtype=np.complex128)
    if not np.any(vec):
        raise MatrixFileError("state has zero norm")
    try:
        return PureState.from_vector(labels, dims, vec)
    except (ValueError, TypeError) as exc:
        raise MatrixFileError(f"bad state file: {exc}") from exc


def loads_kronecker_sum(text: str) -> KroneckerSum:
    """File with ``r_ops`` and ``s_ops``, each a list of matrices."""
    data = _load_json(text, "Kronecker-sum")
    try:
        r = [_parse_matrix(m, f"r_ops[{i}]") for i, m in enumerate(data["r_ops"])]
        s = [_parse_matrix(m, f"s_ops[{i}]") for i, m in enumerate(data["s_ops"])]
    except KeyError as exc:
        raise MatrixFileError(f"Kronecker-sum file is missing {exc}") from None
    except TypeError as exc:
        raise MatrixFileError(f"bad Kronecker-sum file: {exc}") from exc
    try:
        return KroneckerSum(r, s)
    except ValueError as exc:
        raise MatrixFileError(str(exc)) from exc


def dumps_kronecker_sum(ks: KroneckerSum) -> str:
    def block(ops):
        return "[\n" + ",\n".join("    " + _matrix_lines(M, "      ") for M in ops) + "\n  ]"

    return "{\n" + f'  "r_ops": {block(ks.r_ops)},\n  "s_ops": {block(ks.s_ops)}\n' + "}\n"
