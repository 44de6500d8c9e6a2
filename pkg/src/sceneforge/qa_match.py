"""Strict and refined exact-match scoring for QA predictions.

Strict match is plain string equality against any ground truth. Refined
match additionally squeezes out all whitespace and accepts substring
containment in either direction, which stops open-ended phrasings like
"dark brown" vs "brown" or "4 chairs" vs "4" from being marked wrong.

Both protocols lowercase and trim by default; pass lowercase=False for
byte-faithful comparison.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import List, Sequence, Tuple

from .errors import IdMismatchError, ValidationError


def _norm(text: str, lowercase: bool) -> str:
    text = text.strip()
    return text.lower() if lowercase else text


def _squeeze(text: str) -> str:
    return "".join(text.split())


def strict_em(pred: str, gts: Sequence[str], lowercase: bool = True) -> bool:
    """True iff the prediction equals any ground truth exactly."""
    if not gts:
        raise ValidationError("strict_em needs at least one ground truth")
    p = _norm(pred, lowercase)
    return any(p == _norm(gt, lowercase) for gt in gts)


def refined_em(pred: str, gts: Sequence[str], lowercase: bool = True) -> bool:
    """Exact match relaxed by whitespace-squeezed substring containment."""
    if not gts:
        raise ValidationError("refined_em needs at least one ground truth")
    p = _norm(pred, lowercase)
    for gt in gts:
        g = _norm(gt, lowercase)
        if p == g:
            return True  # case 1
        if _squeeze(p) in _squeeze(g):
            return True  # case 2
        if _squeeze(g) in _squeeze(p):
            return True  # case 3
    return False


def _read_jsonl(path: str | Path) -> List[dict]:
    rows = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


def score_file(
    preds_path: str | Path,
    refs_path: str | Path,
    protocol: str = "refined",
    lowercase: bool = True,
) -> Tuple[float, List[dict]]:
    """EM@1 accuracy over aligned prediction / reference JSONL files.

    preds rows: {"id": str, "answer": str}; refs rows: {"id": str,
    "answers": [str, ...]}. Raises IdMismatchError when the id sets differ.
    """
    if protocol not in ("strict", "refined"):
        raise ValidationError(f"unknown protocol {protocol!r}")
    preds = {row["id"]: row["answer"] for row in _read_jsonl(preds_path)}
    refs = _read_jsonl(refs_path)
    ref_ids = [row["id"] for row in refs]
    missing = [i for i in ref_ids if i not in preds]
    extra = sorted(set(preds) - set(ref_ids))
    if missing or extra:
        raise IdMismatchError(
            f"prediction/reference ids do not align (missing={missing[:5]}, extra={extra[:5]})"
        )
    matcher = strict_em if protocol == "strict" else refined_em
    verdicts = []
    for row in refs:
        ok = matcher(preds[row["id"]], row["answers"], lowercase=lowercase)
        verdicts.append(
            {
                "id": row["id"],
                "match": ok,
                "answer": preds[row["id"]],
                "answers": row["answers"],
            }
        )
    accuracy = sum(v["match"] for v in verdicts) / len(verdicts) if verdicts else 0.0
    return accuracy, verdicts
