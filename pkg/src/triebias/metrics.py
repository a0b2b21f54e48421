"""Word-level alignment and WER / U-WER / B-WER scoring.

Alignment is a standard unit-cost edit-distance DP. Error attribution
follows the convention of the public biasing-evaluation scripts this task
family uses: substitutions and deletions belong to the biased class when
the REFERENCE word is on the biasing list; an insertion is biased when the
inserted HYPOTHESIS word is on the list. Denominators come from reference
membership, so WER decomposes exactly into U-WER and B-WER parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

OP_MATCH = "match"
OP_SUB = "sub"
OP_DEL = "del"
OP_INS = "ins"


@dataclass(frozen=True)
class AlignmentOp:
    kind: str
    ref: str | None
    hyp: str | None


@dataclass(frozen=True)
class AlignmentReport:
    ops: tuple[AlignmentOp, ...]
    matches: int
    subs: int
    dels: int
    inss: int

    @property
    def edit_cost(self) -> int:
        return self.subs + self.dels + self.inss

    @property
    def ref_len(self) -> int:
        return self.matches + self.subs + self.dels

    @property
    def hyp_len(self) -> int:
        return self.matches + self.subs + self.inss


def align(ref: Sequence[str], hyp: Sequence[str]) -> AlignmentReport:
    """Minimal-cost alignment with unit costs.

    The DP is computed over suffixes so the trace can be emitted
    left-to-right with a deterministic tie preference of
    match > sub > del > ins.
    """
    n, m = len(ref), len(hyp)
    # cost[i][j] = edit distance between ref[i:] and hyp[j:]
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        cost[i][m] = n - i
    for j in range(m + 1):
        cost[n][j] = m - j
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if ref[i] == hyp[j]:
                best = cost[i + 1][j + 1]
            else:
                best = 1 + min(cost[i + 1][j + 1], cost[i + 1][j], cost[i][j + 1])
            cost[i][j] = best

    ops: list[AlignmentOp] = []
    counts = {OP_MATCH: 0, OP_SUB: 0, OP_DEL: 0, OP_INS: 0}
    i = j = 0
    while i < n or j < m:
        here = cost[i][j]
        if i < n and j < m and ref[i] == hyp[j] and cost[i + 1][j + 1] == here:
            kind, r, h = OP_MATCH, ref[i], hyp[j]
            i, j = i + 1, j + 1
        elif i < n and j < m and cost[i + 1][j + 1] + 1 == here:
            kind, r, h = OP_SUB, ref[i], hyp[j]
            i, j = i + 1, j + 1
        elif i < n and cost[i + 1][j] + 1 == here:
            kind, r, h = OP_DEL, ref[i], None
            i += 1
        else:
            kind, r, h = OP_INS, None, hyp[j]
            j += 1
        ops.append(AlignmentOp(kind, r, h))
        counts[kind] += 1
    return AlignmentReport(
        ops=tuple(ops),
        matches=counts[OP_MATCH],
        subs=counts[OP_SUB],
        dels=counts[OP_DEL],
        inss=counts[OP_INS],
    )


@dataclass(frozen=True)
class WerBreakdown:
    """Error counts split into biased (B) and unbiased (U) classes.

    Numerators and denominators are kept as integers; rates are derived.
    A zero-denominator class reports 0.0 when its numerator is zero and
    infinity otherwise.
    """

    b_sub: int = 0
    b_del: int = 0
    b_ins: int = 0
    u_sub: int = 0
    u_del: int = 0
    u_ins: int = 0
    b_ref: int = 0  # reference words on the biasing list
    u_ref: int = 0

    @property
    def b_errors(self) -> int:
        return self.b_sub + self.b_del + self.b_ins

    @property
    def u_errors(self) -> int:
        return self.u_sub + self.u_del + self.u_ins

    @property
    def errors(self) -> int:
        return self.b_errors + self.u_errors

    @property
    def ref_words(self) -> int:
        return self.b_ref + self.u_ref

    @staticmethod
    def _rate(num: int, den: int) -> float:
        if den == 0:
            return 0.0 if num == 0 else math.inf
        return num / den

    @property
    def wer(self) -> float:
        return self._rate(self.errors, self.ref_words)

    @property
    def u_wer(self) -> float:
        return self._rate(self.u_errors, self.u_ref)

    @property
    def b_wer(self) -> float:
        return self._rate(self.b_errors, self.b_ref)

    def as_dict(self) -> dict:
        def fmt(value: float) -> float | str:
            return "undefined" if math.isinf(value) else value

        return {
            "wer": fmt(self.wer),
            "u_wer": fmt(self.u_wer),
            "b_wer": fmt(self.b_wer),
            "errors": self.errors,
            "ref_words": self.ref_words,
            "b": {"sub": self.b_sub, "del": self.b_del, "ins": self.b_ins, "ref": self.b_ref},
            "u": {"sub": self.u_sub, "del": self.u_del, "ins": self.u_ins, "ref": self.u_ref},
        }


def score(report: AlignmentReport, bias_words: Iterable[str]) -> WerBreakdown:
    """Attribute alignment errors to the biased/unbiased classes."""
    bias = frozenset(bias_words)
    b_sub = b_del = b_ins = u_sub = u_del = u_ins = b_ref = u_ref = 0
    for op in report.ops:
        if op.ref is not None:
            if op.ref in bias:
                b_ref += 1
            else:
                u_ref += 1
        if op.kind == OP_SUB:
            if op.ref in bias:
                b_sub += 1
            else:
                u_sub += 1
        elif op.kind == OP_DEL:
            if op.ref in bias:
                b_del += 1
            else:
                u_del += 1
        elif op.kind == OP_INS:
            if op.hyp in bias:
                b_ins += 1
            else:
                u_ins += 1
    return WerBreakdown(
        b_sub=b_sub,
        b_del=b_del,
        b_ins=b_ins,
        u_sub=u_sub,
        u_del=u_del,
        u_ins=u_ins,
        b_ref=b_ref,
        u_ref=u_ref,
    )


def aggregate(per_utt: Iterable[WerBreakdown]) -> WerBreakdown:
    """Micro-average: sum numerators and denominators, then divide."""
    total = WerBreakdown()
    for wb in per_utt:
        total = WerBreakdown(
            b_sub=total.b_sub + wb.b_sub,
            b_del=total.b_del + wb.b_del,
            b_ins=total.b_ins + wb.b_ins,
            u_sub=total.u_sub + wb.u_sub,
            u_del=total.u_del + wb.u_del,
            u_ins=total.u_ins + wb.u_ins,
            b_ref=total.b_ref + wb.b_ref,
            u_ref=total.u_ref + wb.u_ref,
        )
    return total
