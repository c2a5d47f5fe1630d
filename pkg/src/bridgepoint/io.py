"""Vote-file ingestion and draw persistence (CSV per block plus a JSON manifest)."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import HYPER_NAMES, DataError, Legislator, PriorConfig, RollCallData, Vote
from .runner import ChainDraws, RunSettings

log = logging.getLogger(__name__)

NA_TOKEN = "NA"
_ID_COLUMNS = ("legislator_id", "legislator_name", "party")
_TOKENS = {"1": Vote.YEA, "0": Vote.NAY, NA_TOKEN: Vote.MISSING}
_BLOCKS = ("mu", "alpha", "beta0", "beta1", "zeta", "hypers")
MANIFEST = "manifest.json"


class ParseError(DataError):
    """Malformed vote or motion file; carries the 1-based line and column."""

    def __init__(self, path, line: int, column: int | None, message: str):
        where = f"{path}:{line}" + (f":{column}" if column is not None else "")
        super().__init__(f"{where}: {message}")
        self.path, self.line, self.column = str(path), line, column


@dataclass
class IngestionReport:
    n_legislators: int
    n_motions: int
    n_group0: int
    n_group1: int
    n_missing: int
    dropped_legislators: list[str] = field(default_factory=list)
    dropped_motions: list[str] = field(default_factory=list)

    @property
    def missing_rate(self) -> float:
        cells = self.n_legislators * self.n_motions
        return self.n_missing / cells if cells else 0.0

    def __str__(self) -> str:
        lines = [
            f"legislators: {self.n_legislators}",
            f"motions: {self.n_motions} (group 0: {self.n_group0}, group 1: {self.n_group1})",
            f"missing votes: {self.n_missing} ({100 * self.missing_rate:.2f}%)",
        ]
        if self.dropped_legislators:
            lines.append(f"dropped all-missing legislators: {', '.join(self.dropped_legislators)}")
        if self.dropped_motions:
            lines.append(f"dropped all-missing motions: {', '.join(self.dropped_motions)}")
        return "\n".join(lines)


def _read_rows(path: Path) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            return list(csv.reader(fh))
    except csv.Error as exc:
        raise ParseError(path, 0, None, str(exc)) from exc


def read_motions(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    rows = _read_rows(path)
    if not rows or [c.strip() for c in rows[0]] != ["motion_id", "group"]:
        raise ParseError(path, 1, 1, "expected header 'motion_id,group'")
    ids, groups = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ParseError(path, line, None, f"expected 2 fields, found {len(row)}")
        if row[1].strip() not in ("0", "1"):
            raise ParseError(path, line, 2, f"group must be 0 or 1, found {row[1]!r}")
        ids.append(row[0].strip())
        groups.append(int(row[1]))
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate motion ids")
    return ids, np.array(groups, dtype=np.int8)


def _resolve_anchor(token, ids: list[str]) -> int:
    if isinstance(token, (int, np.integer)):
        return int(token)
    if token not in ids:
        raise DataError(f"anchor {token!r} is not a legislator id")
    return ids.index(token)


def default_anchors(votes: np.ndarray) -> tuple[int, int]:
    """Legislators at the two ends of the first principal component of the centred vote matrix."""
    x = np.where(votes == Vote.MISSING, np.nan, votes.astype(float))
    col_mean = np.nanmean(x, axis=0)
    x = np.where(np.isnan(x), col_mean[None, :], x) - col_mean[None, :]
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    score = u[:, 0] * s[0]
    # SVD sign is arbitrary; orient so the largest-magnitude score is negative
    if score[np.argmax(np.abs(score))] > 0:
        score = -score
    neg, pos = int(np.argmin(score)), int(np.argmax(score))
    if neg == pos:
        raise DataError("cannot choose default anchors: the vote matrix has no spread")
    return neg, pos


def ingest(vote_path, motion_path, anchors=None) -> tuple[RollCallData, IngestionReport]:
    """Parse a vote CSV and its motion sidecar.

    ``anchors`` is ``(neg_id, pos_id)``; when omitted the extremes of the
    first principal component are used.  Legislators or motions with no
    recorded vote are dropped with a warning.
    """
    vote_path, motion_path = Path(vote_path), Path(motion_path)
    motion_ids, groups = read_motions(motion_path)
    rows = _read_rows(vote_path)
    if not rows:
        raise ParseError(vote_path, 1, None, "empty file")
    header = [c.strip() for c in rows[0]]
    if tuple(header[:3]) != _ID_COLUMNS:
        raise ParseError(vote_path, 1, 1, f"header must start with {','.join(_ID_COLUMNS)}")
    columns = header[3:]
    if len(columns) != len(motion_ids):
        raise DataError(
            f"dimension mismatch: {vote_path} has {len(columns)} motion columns, "
            f"{motion_path} lists {len(motion_ids)} motions"
        )
    if columns != motion_ids:
        bad = next(k for k, (a, b) in enumerate(zip(columns, motion_ids)) if a != b)
        raise DataError(f"motion column {columns[bad]!r} does not match sidecar row {motion_ids[bad]!r}")

    legislators, vote_rows = [], []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(vote_path, line, None, f"expected {len(header)} fields, found {len(row)}")
        values = []
        for col, tok in enumerate(row[3:], start=4):
            code = _TOKENS.get(tok.strip())
            if code is None:
                raise ParseError(vote_path, line, col, f"unknown vote token {tok!r} (allowed: 1, 0, NA)")
            values.append(code)
        legislators.append(Legislator(id=row[0].strip(), name=row[1].strip(), party=row[2].strip()))
        vote_rows.append(values)
    ids = [leg.id for leg in legislators]
    if len(set(ids)) != len(ids):
        raise DataError(f"{vote_path}: duplicate legislator ids")
    votes = np.array(vote_rows, dtype=np.int8).reshape(len(legislators), len(motion_ids))

    observed = votes != Vote.MISSING
    keep_rows = observed.any(axis=1)
    keep_cols = observed.any(axis=0)
    dropped_leg = [ids[i] for i in np.flatnonzero(~keep_rows)]
    dropped_mot = [motion_ids[j] for j in np.flatnonzero(~keep_cols)]
    for what, dropped in (("legislators", dropped_leg), ("motions", dropped_mot)):
        if dropped:
            log.warning("dropping %d all-missing %s: %s", len(dropped), what, ", ".join(dropped))
    votes = votes[np.ix_(keep_rows, keep_cols)]
    legislators = [leg for leg, k in zip(legislators, keep_rows) if k]
    motion_ids = [m for m, k in zip(motion_ids, keep_cols) if k]
    groups = groups[keep_cols]
    ids = [leg.id for leg in legislators]

    if anchors is None:
        neg, pos = default_anchors(votes)
    else:
        neg, pos = (_resolve_anchor(a, ids) for a in anchors)
    data = RollCallData(votes, groups, legislators, neg, pos, motion_ids)
    report = IngestionReport(
        n_legislators=len(legislators), n_motions=len(motion_ids),
        n_group0=int((groups == 0).sum()), n_group1=int((groups == 1).sum()),
        n_missing=int((votes == Vote.MISSING).sum()),
        dropped_legislators=dropped_leg, dropped_motions=dropped_mot,
    )
    return data, report


def write_votes(data: RollCallData, vote_path, motion_path) -> None:
    """Serialize roll-call data in the format ``ingest`` reads."""
    tokens = {Vote.YEA: "1", Vote.NAY: "0", Vote.MISSING: NA_TOKEN}
    with open(vote_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(_ID_COLUMNS) + list(data.motion_ids))
        for leg, row in zip(data.legislators, data.votes):
            w.writerow([leg.id, leg.name, leg.party] + [tokens[Vote(v)] for v in row])
    with open(motion_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["motion_id", "group"])
        for m, g in zip(data.motion_ids, data.group):
            w.writerow([m, int(g)])


def _block_columns(draws: ChainDraws, name: str) -> list[str]:
    if name == "hypers":
        return list(HYPER_NAMES)
    ids = draws.motion_ids if name in ("mu", "alpha") else draws.legislator_ids
    n = getattr(draws, name).shape[2]
    return list(ids) if len(ids) == n else [str(k) for k in range(n)]


def write_draws(draws: ChainDraws, directory, metadata: dict | None = None) -> Path:
    """One CSV per parameter block (rows = chain, iteration) and ``manifest.json``.

    ``metadata`` is stored verbatim in the manifest (e.g. the anchor ids).
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name in _BLOCKS:
        block = getattr(draws, name)
        fname = f"{name}.csv"
        with open(out / fname, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["chain", "draw"] + _block_columns(draws, name))
            for c in range(block.shape[0]):
                for k in range(block.shape[1]):
                    row = block[c, k]
                    cells = [str(int(v)) for v in row] if name == "zeta" else [repr(float(v)) for v in row]
                    w.writerow([c, k] + cells)
        files[name] = fname
    manifest = {
        "format": "bridgepoint-draws/1",
        "data_fingerprint": draws.data_fingerprint,
        "config_fingerprint": draws.config_fingerprint(),
        "prior": draws.config.to_dict(),
        "run": draws.settings.to_dict(),
        "fix_zeta": draws.fix_zeta,
        "stream_ids": draws.stream_ids,
        "n_chains": draws.n_chains,
        "n_kept": draws.n_kept,
        "legislator_ids": list(draws.legislator_ids),
        "motion_ids": list(draws.motion_ids),
        "files": files,
        "metadata": metadata or {},
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def read_manifest(directory) -> dict:
    mpath = Path(directory) / MANIFEST
    if not mpath.exists():
        raise FileNotFoundError(f"no draw manifest at {mpath}")
    return json.loads(mpath.read_text())


def read_draws(directory) -> ChainDraws:
    src = Path(directory)
    mpath = src / MANIFEST
    manifest = read_manifest(src)
    n_chains, n_kept = manifest["n_chains"], manifest["n_kept"]
    blocks = {}
    for name in _BLOCKS:
        with open(src / manifest["files"][name], newline="") as fh:
            rows = list(csv.reader(fh))
        width = len(rows[0]) - 2
        arr = np.array([[float(v) for v in r[2:]] for r in rows[1:]], dtype=float)
        arr = arr.reshape(n_chains, n_kept, width)
        blocks[name] = arr.astype(np.bool_) if name == "zeta" else arr
    draws = ChainDraws(
        **blocks,
        settings=RunSettings(**manifest["run"]),
        config=PriorConfig.from_dict(manifest["prior"]),
        data_fingerprint=manifest["data_fingerprint"],
        legislator_ids=manifest["legislator_ids"],
        motion_ids=manifest["motion_ids"],
        fix_zeta=manifest["fix_zeta"],
    )
    if draws.config_fingerprint() != manifest["config_fingerprint"]:
        raise DataError(f"{mpath}: config fingerprint does not match its recorded settings")
    return draws


def write_table(rows: list[dict], path) -> None:
    """Write a list of flat dicts as CSV, floats in shortest round-trip form."""
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v for k, v in r.items()})
