"""Text formats for models, observation sequences and fit reports.

Model files are JSON documents::

    {
      "schema_version": 1,
      "n_states": 2,
      "emission": {"kind": "categorical", "n_symbols": 2, "probs": [[...], [...]]},
      "pi": [...],
      "trans": [[...], [...]]
    }

Gaussian models use ``{"kind": "gaussian", "means": [...], "variances": [...]}``.
Reals are written with 17 significant digits, which round-trips doubles
exactly.

Sequence files hold one sequence per line, tokens separated by commas or
whitespace. ``#`` starts a comment; blank lines are skipped.
"""

from __future__ import annotations

import json
import os
import re
from typing import Iterable, TextIO

import numpy as np

from .errors import ParseError, ValidationError
from .model import CategoricalEmission, GaussianEmission, HmmParameters, validate

SCHEMA_VERSION = 1
KINDS = ("categorical", "gaussian")
_SEPARATORS = re.compile(r"[,\s]+")


def format_real(x: float) -> str:
    return format(float(x), ".17g")


def _vector(values) -> str:
    return "[" + ", ".join(format_real(v) for v in values) + "]"


def _matrix(rows, indent: str) -> str:
    inner = (",\n" + indent + "  ").join(_vector(r) for r in rows)
    return "[\n" + indent + "  " + inner + "\n" + indent + "]"


def render_model(params: HmmParameters) -> str:
    em = params.emission
    if isinstance(em, CategoricalEmission):
        emission = (
            '{\n    "kind": "categorical",\n'
            f'    "n_symbols": {em.n_symbols},\n'
            f'    "probs": {_matrix(em.probs, "    ")}\n  }}'
        )
    else:
        emission = (
            '{\n    "kind": "gaussian",\n'
            f'    "means": {_vector(em.means)},\n'
            f'    "variances": {_vector(em.variances)}\n  }}'
        )
    return (
        "{\n"
        f'  "schema_version": {SCHEMA_VERSION},\n'
        f'  "n_states": {params.n_states},\n'
        f'  "emission": {emission},\n'
        f'  "pi": {_vector(params.pi)},\n'
        f'  "trans": {_matrix(params.trans, "  ")}\n'
        "}\n"
    )


def _field(doc: dict, key: str, where: str = "model"):
    if key not in doc:
        raise ParseError(f"{where}: missing field {key!r}")
    return doc[key]


def _reals(value, shape_desc: str, field: str) -> np.ndarray:
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"field {field!r}: expected {shape_desc} of numbers") from exc
    return arr


def parse_model(text: str) -> HmmParameters:
    """Parse and validate a model document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("model document must be a JSON object")

    version = _field(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r} (supported: {SCHEMA_VERSION})")
    unknown = set(doc) - {"schema_version", "n_states", "emission", "pi", "trans"}
    if unknown:
        raise ParseError(f"unknown top-level field(s): {', '.join(sorted(unknown))}")

    n_states = _field(doc, "n_states")
    if not isinstance(n_states, int) or isinstance(n_states, bool) or n_states < 1:
        raise ParseError(f"field 'n_states': expected a positive integer, got {n_states!r}")
    pi = _reals(_field(doc, "pi"), "a list", "pi")
    trans = _reals(_field(doc, "trans"), "a list of lists", "trans")
    if pi.shape != (n_states,):
        raise ValidationError(f"dimension mismatch: pi has shape {pi.shape}, expected ({n_states},)")
    if trans.shape != (n_states, n_states):
        raise ValidationError(
            f"dimension mismatch: trans has shape {trans.shape}, expected ({n_states}, {n_states})"
        )

    em = _field(doc, "emission")
    if not isinstance(em, dict):
        raise ParseError("field 'emission': expected an object")
    kind = _field(em, "kind", "emission")
    if kind == "categorical":
        probs = _reals(_field(em, "probs", "emission"), "a list of lists", "emission.probs")
        n_symbols = _field(em, "n_symbols", "emission")
        if probs.ndim != 2 or probs.shape != (n_states, n_symbols):
            raise ValidationError(
                f"dimension mismatch: emission probs have shape {probs.shape}, expected ({n_states}, {n_symbols})"
            )
        emission = CategoricalEmission(probs)
    elif kind == "gaussian":
        means = _reals(_field(em, "means", "emission"), "a list", "emission.means")
        variances = _reals(_field(em, "variances", "emission"), "a list", "emission.variances")
        if means.shape != (n_states,) or variances.shape != (n_states,):
            raise ValidationError(f"dimension mismatch: gaussian parameters must have length {n_states}")
        emission = GaussianEmission(means, variances)
    else:
        raise ParseError(f"field 'emission.kind': expected one of {KINDS}, got {kind!r}")

    return validate(HmmParameters(pi, trans, emission))


def save_model(params: HmmParameters, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_model(params))


def load_model(path: str | os.PathLike) -> HmmParameters:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def parse_sequences(lines: Iterable[str], kind: str) -> list[np.ndarray]:
    """Parse sequence records; categorical tokens must be non-negative integers."""
    if kind not in KINDS:
        raise ValidationError(f"unknown emission kind {kind!r}")
    sequences = []
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        tokens = [tok for tok in _SEPARATORS.split(body) if tok]
        if kind == "categorical":
            values = []
            for tok in tokens:
                if not tok.isdigit():
                    raise ParseError(f"line {lineno}: {tok!r} is not a non-negative integer")
                values.append(int(tok))
            sequences.append(np.array(values, dtype=np.int64))
        else:
            try:
                values = [float(tok) for tok in tokens]
            except ValueError as exc:
                raise ParseError(f"line {lineno}: malformed real ({exc})") from exc
            if not all(np.isfinite(values)):
                raise ParseError(f"line {lineno}: non-finite value")
            sequences.append(np.array(values, dtype=float))
    if not sequences:
        raise ParseError("empty sequence file: no records")
    return sequences


def load_sequences(path: str | os.PathLike, kind: str) -> list[np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        return parse_sequences(fh, kind)


def render_sequences(sequences: Iterable[np.ndarray]) -> str:
    lines = []
    for seq in sequences:
        seq = np.asarray(seq)
        if np.issubdtype(seq.dtype, np.integer):
            lines.append(" ".join(str(int(v)) for v in seq))
        else:
            lines.append(" ".join(format_real(v) for v in seq))
    return "\n".join(lines) + "\n"


def save_sequences(sequences, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_sequences(sequences))


class FitReport:
    """Writes one line per iteration, then a summary block.

    Iteration lines are tab-separated: index, total log-likelihood,
    relative change from the previous iteration (``nan`` for the first).
    """

    def __init__(self, stream: TextIO):
        self.stream = stream
        self._previous: float | None = None
        self.stream.write("# iteration\tlog_likelihood\trelative_change\n")

    def iteration(self, n: int, ll: float) -> None:
        if self._previous is None:
            change = "nan"
        else:
            change = format(abs(ll - self._previous) / (1.0 + abs(self._previous)), ".6e")
        self.stream.write(f"{n}\t{format_real(ll)}\t{change}\n")
        self._previous = ll

    def finish(self, converged: bool, iterations: int) -> None:
        self.stream.write(f"converged: {'true' if converged else 'false'}\n")
        self.stream.write(f"iterations: {iterations}\n")


def parse_fit_report(text: str) -> tuple[list[float], bool, int]:
    """Read back ``(trace, converged, iterations)`` from a fit report."""
    trace, converged, iterations = [], None, None
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        if line.startswith("converged:"):
            converged = line.split(":", 1)[1].strip() == "true"
        elif line.startswith("iterations:"):
            iterations = int(line.split(":", 1)[1])
        else:
            trace.append(float(line.split("\t")[1]))
    if converged is None or iterations is None:
        raise ParseError("fit report has no summary block")
    return trace, converged, iterations
