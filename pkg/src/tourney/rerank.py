"""Document reranking on top of BlitzRank.

Candidates are mapped to vertex ids in input order.  The oracle (usually an
:class:`~tourney.oracle.ExternalOracle` carrying document texts) compares
documents; the terminal graph becomes a tiered ranking with the prior
retrieval score breaking ties inside each tier.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .condensation import tiered_ranking
from .errors import FormatError, InvalidRequest
from .oracle import CountingOracle, ExternalOracle, OracleStats
from .scheduler import RunOptions, RunResult, blitzrank

RESULT_SCHEMA = {
    "type": "object",
    "required": ["query_id", "ranking", "oracle_calls", "rounds"],
    "properties": {
        "query_id": {"type": "string"},
        "ranking": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["doc_id", "tier", "inreach", "score"],
                "properties": {
                    "doc_id": {"type": "string"},
                    "tier": {"type": "integer", "minimum": 0},
                    "inreach": {"type": "integer", "minimum": 0},
                    "score": {"type": "number"},
                },
                "additionalProperties": False,
            },
        },
        "oracle_calls": {"type": "integer", "minimum": 0},
        "rounds": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class Candidate:
    doc_id: str
    text: str
    prior_score: float


@dataclass
class RerankRequest:
    query_id: str
    query_text: str
    candidates: Sequence[Candidate]
    k: int
    m: int

    def __post_init__(self):
        if not self.candidates:
            raise InvalidRequest("request has no candidates")
        seen = set()
        for c in self.candidates:
            if c.doc_id in seen:
                raise InvalidRequest(f"duplicate doc_id {c.doc_id!r}")
            seen.add(c.doc_id)
        if self.k < 2:
            raise InvalidRequest(f"k must be >= 2, got {self.k}")
        if not 1 <= self.m <= len(self.candidates):
            raise InvalidRequest(f"m must be in [1, {len(self.candidates)}], got {self.m}")

    def payloads(self) -> dict[int, str]:
        return {i: c.text for i, c in enumerate(self.candidates)}


@dataclass(frozen=True)
class RankedDoc:
    doc_id: str
    tier: int
    inreach: int
    score: float


@dataclass
class RerankResult:
    query_id: str
    ranking: list[RankedDoc]
    stats: OracleStats
    rounds: int
    run: Optional[RunResult] = field(default=None, repr=False, compare=False)

    @property
    def oracle_calls(self) -> int:
        return self.stats.query_count


def rerank(req: RerankRequest, oracle, batch: bool = False) -> RerankResult:
    n = len(req.candidates)
    scores = [c.prior_score for c in req.candidates]
    counter = oracle if isinstance(oracle, CountingOracle) else CountingOracle(oracle)
    opts = RunOptions(k=req.k, m=req.m, batch=batch)
    run = blitzrank(n, counter, opts)
    g = run.trace.graph
    s = g.structure()

    tiers = tiered_ranking(g, secondary_key=scores)
    ranking: list[RankedDoc] = []
    for t_idx, tier in enumerate(tiers.tiers):
        for v in tier:
            if len(ranking) == req.m:
                break
            c = req.candidates[v]
            ranking.append(RankedDoc(c.doc_id, t_idx, s.in_count[v], c.prior_score))
        if len(ranking) == req.m:
            break
    return RerankResult(req.query_id, ranking, counter.stats, run.rounds, run)


def external_oracle_for(req: RerankRequest, command, timeout: float = 30.0, retries: int = 1) -> ExternalOracle:
    """External oracle wired with the request's payloads.

    The query text reaches the child through ``TOURNEY_QUERY`` and
    ``TOURNEY_QUERY_ID`` in its environment.
    """
    env = {"TOURNEY_QUERY": req.query_text, "TOURNEY_QUERY_ID": req.query_id}
    return ExternalOracle(command, req.k, timeout=timeout, retries=retries,
                          payloads=req.payloads(), env=env, n=len(req.candidates))


def parse_candidates(lines) -> list[Candidate]:
    out = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise FormatError("expected a JSON object", lineno)
        for key in ("doc_id", "text", "score"):
            if key not in obj:
                raise FormatError(f"missing {key!r}", lineno)
        doc_id, text, score = obj["doc_id"], obj["text"], obj["score"]
        if not isinstance(doc_id, str) or not isinstance(text, str):
            raise FormatError("doc_id and text must be strings", lineno)
        if isinstance(score, bool) or not isinstance(score, (int, float)) or not math.isfinite(score):
            raise FormatError(f"score must be a finite number, got {score!r}", lineno)
        out.append(Candidate(doc_id, text, float(score)))
    return out


def load_candidates(path) -> list[Candidate]:
    with open(path, encoding="utf-8") as fh:
        return parse_candidates(fh)


def dump_candidates(cands: Sequence[Candidate], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in cands:
            fh.write(json.dumps({"doc_id": c.doc_id, "text": c.text, "score": c.prior_score}) + "\n")


def result_document(res: RerankResult) -> dict:
    return {
        "query_id": res.query_id,
        "ranking": [
            {"doc_id": d.doc_id, "tier": d.tier, "inreach": d.inreach, "score": d.score}
            for d in res.ranking
        ],
        "oracle_calls": res.oracle_calls,
        "rounds": res.rounds,
    }


def emit_result(res: RerankResult, path) -> None:
    Path(path).write_text(json.dumps(result_document(res), indent=2) + "\n", encoding="utf-8")
