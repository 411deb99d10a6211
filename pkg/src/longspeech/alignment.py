"""Label casing formats, scoring normalization, and word-level alignment.

WER here is the minimum word edit distance over the reference length. Counts
of substitutions, deletions, and insertions come from a single backtraced
path; since several optimal paths can exist, the backtrace preference is
pinned (match > substitute > delete > insert) so the counts are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EmptyReferenceError

__all__ = [
    "CASING_AU",
    "CASING_FU",
    "CASING_RAW",
    "Transcript",
    "AlignmentResult",
    "apply_casing",
    "normalize_for_wer",
    "align",
    "align_texts",
    "corpus_wer",
]

CASING_AU = "AU"
CASING_FU = "FU"
CASING_RAW = "RAW"
_CASINGS = (CASING_AU, CASING_FU, CASING_RAW)

MATCH = "match"
SUBSTITUTE = "substitute"
DELETE = "delete"
INSERT = "insert"

DEFAULT_PUNCTUATION = ".,?!;:\"'()"


def apply_casing(text: str, casing: str) -> str:
    """Render text in a label casing format.

    AU uppercases every letter. FU lowercases everything, then uppercases
    the first alphabetic character of the whole string (not of each word).
    RAW leaves the text alone.
    """
    if casing == CASING_RAW:
        return text
    if casing == CASING_AU:
        return text.upper()
    if casing == CASING_FU:
        lowered = text.lower()
        for i, ch in enumerate(lowered):
            if ch.isalpha():
                return lowered[:i] + ch.upper() + lowered[i + 1:]
        return lowered
    raise ValueError(f"unknown casing format {casing!r}, expected one of {_CASINGS}")


def normalize_for_wer(text: str, punctuation: str = DEFAULT_PUNCTUATION) -> list[str]:
    """Tokenize text for scoring: lowercase, strip edge punctuation, drop empties.

    Only leading and trailing punctuation goes; interior characters (it's,
    co-op) survive. Scoring always runs on this form no matter which casing
    format the training labels use.
    """
    tokens = []
    for tok in text.lower().split():
        tok = tok.strip(punctuation)
        if tok:
            tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class Transcript:
    """A text plus its whitespace tokens and the casing format it is in."""

    raw: str
    tokens: tuple[str, ...]
    casing: str = CASING_RAW

    def __post_init__(self):
        if self.casing not in _CASINGS:
            raise ValueError(f"unknown casing format {self.casing!r}")
        if any(not t or t.split() != [t] for t in self.tokens):
            raise ValueError("tokens must be non-empty and contain no whitespace")

    @classmethod
    def from_text(cls, text: str, casing: str = CASING_RAW) -> "Transcript":
        return cls(raw=text, tokens=tuple(text.split()), casing=casing)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class AlignmentResult:
    """Edit-distance counts and the backtraced step sequence."""

    n_ref: int
    n_hyp: int
    correct: int
    substitutions: int
    deletions: int
    insertions: int
    wer: float
    path: tuple[str, ...] = field(repr=False)

    @property
    def distance(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __post_init__(self):
        assert self.correct + self.substitutions + self.deletions == self.n_ref
        assert self.correct + self.substitutions + self.insertions == self.n_hyp


def align(ref_tokens, hyp_tokens) -> AlignmentResult:
    """Minimum edit distance between token sequences, unit costs.

    Backtrace resolves ties as match > substitute > delete > insert; the
    split of the distance into S/D/I depends on this order, so downstream
    filters keying on I and D get stable counts.
    """
    ref = list(ref_tokens)
    hyp = list(hyp_tokens)
    n, m = len(ref), len(hyp)
    if n == 0 and m > 0:
        raise EmptyReferenceError("cannot score a hypothesis against an empty reference")
    if n == 0:
        return AlignmentResult(0, 0, 0, 0, 0, 0, 0.0, ())

    # d[i][j]: distance between ref[:i] and hyp[:j]
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        d[i][0] = i
    for j in range(1, m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        row, prev = d[i], d[i - 1]
        r = ref[i - 1]
        for j in range(1, m + 1):
            sub = prev[j - 1] + (0 if r == hyp[j - 1] else 1)
            row[j] = min(sub, prev[j] + 1, row[j - 1] + 1)

    steps = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and d[i][j] == d[i - 1][j - 1]:
            steps.append(MATCH)
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + 1:
            steps.append(SUBSTITUTE)
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            steps.append(DELETE)
            i -= 1
        else:
            steps.append(INSERT)
            j -= 1
    steps.reverse()

    correct = steps.count(MATCH)
    subs = steps.count(SUBSTITUTE)
    dels = steps.count(DELETE)
    ins = steps.count(INSERT)
    return AlignmentResult(
        n_ref=n,
        n_hyp=m,
        correct=correct,
        substitutions=subs,
        deletions=dels,
        insertions=ins,
        wer=(subs + dels + ins) / n,
        path=tuple(steps),
    )


def align_texts(ref_text: str, hyp_text: str,
                punctuation: str = DEFAULT_PUNCTUATION) -> AlignmentResult:
    """Normalize both texts for scoring, then align."""
    return align(normalize_for_wer(ref_text, punctuation),
                 normalize_for_wer(hyp_text, punctuation))


def corpus_wer(results) -> float:
    """Pooled WER: total errors over total reference words."""
    errors = sum(r.distance for r in results)
    words = sum(r.n_ref for r in results)
    if words == 0:
        return 0.0
    return errors / words
