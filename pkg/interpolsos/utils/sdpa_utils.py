"""
SDPA sparse format (.dat-s) export and import.

Our equality form is the dual side of SDPA: F_i = A_i, c_i = b_i, F_0 = -C.
Free scalars are split into f = f+ - f- and stored as one diagonal block of
size 2K (written as -2K in the block structure); the header comment records
K so the split can be undone on import. SDPA matrices are symmetric, so an
off-diagonal coefficient v of ours is written as v/2 in the upper triangle.
"""

import re
from typing import List, Optional, Tuple

import numpy as np

from utils.errors import NothingToExportError, SdpaParseError, StructureMismatchError
from utils.logger_utils import log
from utils.sdp_utils import (
    SdpEquality,
    SdpProblem,
    SdpSolution,
    SdpStatus,
    SolverSettings,
    classify_point,
    verify_infeasibility_certificate,
)

HEADER_PREFIX = '"interpolsos'
_NFREE_RE = re.compile(r"nfree=(\d+)")


def export_sdpa(problem: SdpProblem, path: str) -> None:
    if not problem.equalities or (not problem.block_dims and not problem.nfree):
        raise NothingToExportError("nothing to export: the problem has no equalities or no unknowns")

    m = len(problem.equalities)
    nfree = problem.nfree
    struct = list(problem.block_dims) + ([-2 * nfree] if nfree else [])
    free_block = len(problem.block_dims) + 1

    lines = [
        f"{HEADER_PREFIX} nfree={nfree} psd_blocks={len(problem.block_dims)}",
        str(m),
        str(len(struct)),
        " ".join(str(n) for n in struct),
        " ".join(repr(float(eq.rhs)) for eq in problem.equalities),
    ]
    for blk, i, j, v in problem.objective:
        value = -v if i == j else -v / 2.0
        lines.append(f"0 {blk + 1} {j + 1} {i + 1} {value!r}")
    for idx, eq in enumerate(problem.equalities, start=1):
        for blk, i, j, v in eq.block_entries:
            value = v if i == j else v / 2.0
            lines.append(f"{idx} {blk + 1} {j + 1} {i + 1} {float(value)!r}")
        for k, v in eq.free_entries:
            lines.append(f"{idx} {free_block} {k + 1} {k + 1} {float(v)!r}")
            lines.append(f"{idx} {free_block} {nfree + k + 1} {nfree + k + 1} {-float(v)!r}")

    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    log(f"SDPA problem written to {path} ({m} constraints, blocks {struct}).")


def _numbers(line: str) -> List[str]:
    out = []
    for token in re.split(r"[\s,{}()=]+", line):
        if not token:
            continue
        try:
            float(token)
        except ValueError:
            continue
        out.append(token)
    return out


def import_sdpa(path: str) -> SdpProblem:
    """Reads a .dat-s file written by export_sdpa (or any SDPA file without LP blocks)."""
    with open(path, "r") as f:
        text = f.read()
    nfree = 0
    tokens: List[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith(('"', "*")):
            match = _NFREE_RE.search(stripped)
            if match:
                nfree = int(match.group(1))
            continue
        tokens.extend(_numbers(stripped))

    pos = 0

    def take(count: int) -> List[str]:
        nonlocal pos
        if pos + count > len(tokens):
            raise SdpaParseError("unexpected end of SDPA data")
        chunk = tokens[pos : pos + count]
        pos += count
        return chunk

    m = int(take(1)[0])
    nblocks = int(take(1)[0])
    struct = [int(float(t)) for t in take(nblocks)]
    rhs = [float(t) for t in take(m)]

    if nfree:
        if not struct or struct[-1] != -2 * nfree:
            raise StructureMismatchError(f"header announces {nfree} free scalars but the last block is {struct[-1:]}")
        dims = struct[:-1]
    else:
        dims = struct
    if any(n <= 0 for n in dims):
        raise StructureMismatchError("diagonal blocks are only supported for split free scalars")

    block_entries = [dict() for _ in range(m)]
    free_entries = [dict() for _ in range(m)]
    objective = {}
    while pos < len(tokens):
        mat, blk, i, j, v = take(5)
        mat, blk, i, j, v = int(mat), int(blk) - 1, int(i) - 1, int(j) - 1, float(v)
        if not 0 <= mat <= m or not 0 <= blk < len(struct):
            raise StructureMismatchError(f"entry refers to matrix {mat}, block {blk + 1}")
        if nfree and blk == len(dims):
            if mat and i == j and i < nfree:
                free_entries[mat - 1][i] = v
            continue
        a, b = max(i, j), min(i, j)
        value = v if a == b else 2.0 * v
        if mat == 0:
            objective[(blk, a, b)] = -value
        else:
            block_entries[mat - 1][(blk, a, b)] = value

    equalities = tuple(
        SdpEquality(
            tuple((blk, a, b, v) for (blk, a, b), v in sorted(block_entries[r].items())),
            tuple(sorted(free_entries[r].items())),
            rhs[r],
        )
        for r in range(m)
    )
    return SdpProblem(
        tuple(dims),
        nfree,
        equalities,
        tuple((blk, a, b, v) for (blk, a, b), v in sorted(objective.items())),
    )


class _BraceReader:
    """Reads SDPA-style nested brace lists: {a, b, {c d}} -> [a, b, [c, d]]."""

    def __init__(self, text: str, pos: int):
        self.text = text
        self.pos = pos

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n,":
            self.pos += 1

    def value(self):
        self.skip()
        if self.pos >= len(self.text):
            raise SdpaParseError("unexpected end of file", self.pos)
        if self.text[self.pos] == "{":
            self.pos += 1
            items = []
            while True:
                self.skip()
                if self.pos >= len(self.text):
                    raise SdpaParseError("unexpected end of file inside braces", self.pos)
                if self.text[self.pos] == "}":
                    self.pos += 1
                    return items
                items.append(self.value())
        match = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?").match(self.text, self.pos)
        if not match:
            raise SdpaParseError(f"unexpected character {self.text[self.pos]!r}", self.pos)
        self.pos = match.end()
        return float(match.group())


def parse_sdpa_output(text: str) -> dict:
    """Extracts phase.value, xVec, xMat and yMat from an SDPA result file."""
    out = {}
    phase = re.search(r"phase\.value\s*=\s*(\w+)", text)
    out["phase"] = phase.group(1) if phase else ""
    for key in ("xVec", "xMat", "yMat"):
        match = re.search(rf"\b{key}\s*=", text)
        if not match:
            raise SdpaParseError(f"missing '{key}' section", len(text.encode("utf-8")))
        out[key] = _BraceReader(text, match.end()).value()
    return out


def _dense_block(raw, n: int, which: str) -> np.ndarray:
    if not isinstance(raw, list) or len(raw) != n or any(not isinstance(r, list) or len(r) != n for r in raw):
        raise StructureMismatchError(f"{which}: expected a dense {n}x{n} block")
    X = np.asarray(raw, dtype=float)
    return (X + X.T) / 2.0


def import_solution(
    problem: SdpProblem, path: str, settings: Optional[SolverSettings] = None
) -> SdpSolution:
    """
    Reads an external solver's SDPA output for `problem` and classifies it with
    the same criteria as the embedded solver.
    """
    settings = settings or SolverSettings()
    with open(path, "r") as f:
        text = f.read()
    parsed = parse_sdpa_output(text)

    m = len(problem.equalities)
    xvec = parsed["xVec"]
    if not isinstance(xvec, list) or any(isinstance(v, list) for v in xvec) or len(xvec) != m:
        raise StructureMismatchError(f"xVec has {len(xvec) if isinstance(xvec, list) else '?'} entries, expected {m}")
    ymat = parsed["yMat"]
    expected = len(problem.block_dims) + (1 if problem.nfree else 0)
    if not isinstance(ymat, list) or len(ymat) != expected:
        raise StructureMismatchError(f"yMat has {len(ymat)} blocks, expected {expected}")

    grams = [_dense_block(raw, n, f"yMat block {k + 1}") for k, (raw, n) in enumerate(zip(ymat, problem.block_dims))]
    free = np.zeros(problem.nfree)
    if problem.nfree:
        diag = ymat[-1]
        if not isinstance(diag, list) or len(diag) != 2 * problem.nfree or any(isinstance(v, list) for v in diag):
            raise StructureMismatchError(f"free block must be a diagonal of length {2 * problem.nfree}")
        d = np.asarray(diag, dtype=float)
        free = d[: problem.nfree] - d[problem.nfree :]

    phase = parsed["phase"]
    feasible, residual, eigs = classify_point(problem, grams, free, settings)
    if feasible:
        return SdpSolution(
            SdpStatus.FEASIBLE, grams, free, residual, 0.0, eigs,
            message=f"imported from {path}", solver_status=phase,
        )
    y = -np.asarray(xvec, dtype=float)
    by = float(problem.rhs() @ y)
    if by > 0:
        ok, violation = verify_infeasibility_certificate(problem, y / by, settings.cert_tol)
        if ok:
            return SdpSolution(
                SdpStatus.INFEASIBLE, certificate=y / by, certificate_violation=violation,
                message=f"imported from {path}", solver_status=phase,
            )
    return SdpSolution(
        SdpStatus.UNKNOWN, primal_residual=residual, min_eigenvalues=eigs,
        message=f"imported point is neither feasible nor a certificate (phase {phase})",
        solver_status=phase,
    )
