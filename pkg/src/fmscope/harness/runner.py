"""Evaluation matrix: (model, blueprint, AO) triples, append-only record file, resume."""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from ..analysis import AoKind, AoResult, Oracle, run_ao
from ..blueprint import load_blueprint
from ..model import Configuration, FeatureModel, FmError
from .contract import FailureMode, extract_rationale, parse_answer, score
from .prompts import PromptTemplate, load_templates, render_prompts
from .providers import LlmExchange, Provider, ProviderConfig

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class RecordFileError(FmError):
    pass


@dataclass(frozen=True)
class BlueprintCase:
    """A named blueprint plus the extras AO11 (configuration) and AO16 (paired blueprint) need.

    For AO16 the case's own blueprint is the general candidate and
    ``pair_text`` the special one.
    """

    name: str
    text: str
    config: Configuration | None = None
    pair_text: str | None = None


@dataclass(frozen=True)
class RunRecord:
    model_id: str
    model_family: str
    blueprint: str
    ao: AoKind
    exchange: LlmExchange
    parsed: AoResult | None
    oracle: AoResult
    correct: bool
    failure: FailureMode
    rationale: str = ""

    def __post_init__(self):
        if self.correct != (self.failure is FailureMode.NONE):
            raise ValueError("correct records carry failure NONE and only they do")
        if self.parsed is None and self.failure not in (FailureMode.UNPARSEABLE,
                                                        FailureMode.PARTIAL_TRUNCATED):
            raise ValueError("a record without a parsed answer must be unparseable or truncated")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.model_id, self.blueprint, self.ao.code)

    def to_json(self) -> dict:
        ex = self.exchange
        return {
            "schema_version": SCHEMA_VERSION,
            "model_id": self.model_id,
            "model_family": self.model_family,
            "blueprint": self.blueprint,
            "ao": self.ao.code,
            "request": dict(ex.request),
            "response_text": ex.response_text,
            "prompt_tokens": ex.prompt_tokens,
            "completion_tokens": ex.completion_tokens,
            "wall_time": ex.wall_time,
            "transport_status": ex.status,
            "http_code": ex.http_code,
            "parsed": None if self.parsed is None else self.parsed.to_json(),
            "oracle": self.oracle.to_json(),
            "oracle_void": self.oracle.void,
            "correct": self.correct,
            "failure": self.failure.value,
            "rationale": self.rationale,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "RunRecord":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise RecordFileError(f"unsupported record schema_version {version!r}")
        ao = AoKind.parse(data["ao"])
        ex = LlmExchange(data.get("request") or {}, data.get("response_text", ""),
                         data.get("prompt_tokens", 0), data.get("completion_tokens", 0),
                         data.get("wall_time", 0.0), data.get("transport_status", "ok"),
                         data.get("http_code"))
        parsed = None if data.get("parsed") is None else AoResult.from_json(ao, data["parsed"])
        return cls(data["model_id"], data.get("model_family", "general"), data["blueprint"], ao, ex,
                   parsed, AoResult.from_json(ao, data["oracle"], data.get("oracle_void", False)),
                   bool(data["correct"]), FailureMode(data["failure"]), data.get("rationale", ""))


class RecordStore:
    """Append-only JSON-lines file; its keys form the completed-triple manifest."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._repair_tail()

    def _repair_tail(self) -> None:
        if not self.path.exists():
            return
        data = self.path.read_bytes()
        if data and not data.endswith(b"\n"):
            cut = data.rfind(b"\n") + 1
            log.warning("dropping partial trailing record in %s", self.path)
            with open(self.path, "r+b") as fh:
                fh.truncate(cut)

    def completed(self) -> set[tuple[str, str, str]]:
        return {r.key for r in read_records(self.path)} if self.path.exists() else set()

    def append(self, record: RunRecord) -> None:
        line = json.dumps(record.to_json(), sort_keys=True, ensure_ascii=False)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())


def read_records(path: str | Path) -> list[RunRecord]:
    out = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise RecordFileError(f"cannot read records file {path}: {exc}") from exc
    lines = text.split("\n")
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            out.append(RunRecord.from_json(json.loads(line)))
        except (ValueError, KeyError, TypeError) as exc:
            if lineno == len(lines):  # partial last line from an interrupted write
                log.warning("ignoring partial trailing record in %s", path)
                continue
            raise RecordFileError(f"{path}:{lineno}: bad record ({exc})") from exc
    return out


@dataclass(frozen=True)
class _Prepared:
    case: BlueprintCase
    model: FeatureModel
    oracles: dict[AoKind, AoResult]


def _prepare(case: BlueprintCase, aos: Sequence[AoKind]) -> _Prepared:
    fm = load_blueprint(case.text, case.name)
    oracle = Oracle(fm)
    results = {}
    for ao in aos:
        if ao is AoKind.AO11:
            if case.config is None:
                raise ValueError(f"blueprint {case.name!r} has no configuration for AO11")
            extra = case.config
        elif ao is AoKind.AO16:
            if case.pair_text is None:
                raise ValueError(f"blueprint {case.name!r} has no paired blueprint for AO16")
            extra = load_blueprint(case.pair_text, case.name + "-pair")
        else:
            extra = None
        res = run_ao(ao, oracle, extra)
        if not res.computed:
            raise ValueError(f"oracle for {case.name!r}/{ao.code} could not be computed")
        results[ao] = res
    return _Prepared(case, fm, results)


def evaluate_reply(ao: AoKind, raw: str, oracle: AoResult, fm: FeatureModel | None):
    parsed = parse_answer(ao, raw)
    correct, failure = score(ao, parsed, oracle, fm)
    return (parsed if isinstance(parsed, AoResult) else None), correct, failure


def run_matrix(models: Sequence[ProviderConfig], cases: Sequence[BlueprintCase],
               aos: Sequence[AoKind], provider: Provider, store: RecordStore | str | Path,
               concurrency: int = 4, templates: Mapping[AoKind, PromptTemplate] | None = None,
               study_mode: bool = True) -> Iterator[RunRecord]:
    """Run every missing (model, blueprint, AO) triple and yield its record.

    Triples already in ``store`` are skipped. Records are appended by the
    calling thread as each call finishes, so an interrupted run resumes
    without re-querying completed triples.
    """
    if not isinstance(store, RecordStore):
        store = RecordStore(store)
    if study_mode:
        hot = [m.model_id for m in models if m.temperature != 0]
        if hot:
            raise ValueError(f"study runs need temperature 0: {hot}")
    templates = templates or load_templates()
    prepared = [_prepare(c, aos) for c in cases]
    done = store.completed()
    queue = [(m, p, ao) for m in models for p in prepared for ao in aos
            if (m.model_id, p.case.name, ao.code) not in done]
    log.info("%d triples to run, %d already complete", len(queue), len(done))

    def call(item):
        model, prep, ao = item
        case = prep.case
        extra = case.config if ao is AoKind.AO11 else case.pair_text if ao is AoKind.AO16 else None
        system, user = render_prompts(templates[ao], case.text, extra)
        return provider.complete(model, system, user, blueprint=case.name, ao=ao)

    def build(item, exchange: LlmExchange) -> RunRecord:
        model, prep, ao = item
        oracle = prep.oracles[ao]
        parsed, correct, failure = evaluate_reply(ao, exchange.response_text, oracle, prep.model)
        return RunRecord(model.model_id, model.family, prep.case.name, ao, exchange, parsed,
                         oracle, correct, failure, extract_rationale(exchange.response_text))

    if concurrency <= 1:
        for item in queue:
            record = build(item, call(item))
            store.append(record)
            yield record
        return
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        # bounded window keeps at most `concurrency` calls in flight
        pending: list = []
        it = iter(queue)
        for item in it:
            pending.append((item, pool.submit(call, item)))
            if len(pending) >= concurrency:
                first, fut = pending.pop(0)
                record = build(first, fut.result())
                store.append(record)
                yield record
        for item, fut in pending:
            record = build(item, fut.result())
            store.append(record)
            yield record


def load_cases(directory: str | Path, names: Iterable[str] | None = None) -> list[BlueprintCase]:
    """Collect ``*.bp`` files with optional ``NAME.config.json`` and ``NAME.pair.bp`` sidecars."""
    directory = Path(directory)
    cases = []
    for path in sorted(directory.glob("*.bp")):
        if path.name.endswith(".pair.bp"):
            continue
        name = path.stem
        if names is not None and name not in names:
            continue
        cfg_path = directory / f"{name}.config.json"
        pair_path = directory / f"{name}.pair.bp"
        config = (Configuration.from_json(json.loads(cfg_path.read_text("utf-8")))
                  if cfg_path.exists() else None)
        pair = pair_path.read_text("utf-8") if pair_path.exists() else None
        cases.append(BlueprintCase(name, path.read_text("utf-8"), config, pair))
    return cases
