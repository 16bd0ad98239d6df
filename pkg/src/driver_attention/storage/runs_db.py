import sqlite3
from pathlib import Path
from typing import Any, Dict, List, Optional


SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS run_summaries (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  ts TEXT NOT NULL,
  command TEXT NOT NULL,
  architecture TEXT,
  predictor TEXT,
  split TEXT,
  seed INTEGER NOT NULL,
  steps INTEGER NOT NULL,
  loss1 REAL,
  loss2 REAL,
  cc_mean REAL,
  kl_mean REAL
);
"""

COLUMNS = [
    "ts",
    "command",
    "architecture",
    "predictor",
    "split",
    "seed",
    "steps",
    "loss1",
    "loss2",
    "cc_mean",
    "kl_mean",
]


def _connect(db_path: Path) -> sqlite3.Connection:
    db_path.parent.mkdir(parents=True, exist_ok=True)
    con = sqlite3.connect(str(db_path))
    con.execute("PRAGMA journal_mode=WAL;")
    con.execute("PRAGMA synchronous=NORMAL;")
    con.execute(SCHEMA_SQL)
    return con


def _optional_float(value: Any) -> Optional[float]:
    return None if value is None else float(value)


def insert_run(db_path: Path, summary: Dict[str, Any], command: str, seed: int, ts_iso: str) -> None:
    con = _connect(db_path)
    try:
        con.execute(
            f"INSERT INTO run_summaries ({', '.join(COLUMNS)}) VALUES ({', '.join('?' * len(COLUMNS))})",
            (
                ts_iso,
                command,
                summary.get("architecture"),
                summary.get("predictor"),
                summary.get("split"),
                int(seed),
                int(summary.get("steps", 0)),
                _optional_float(summary.get("loss1")),
                _optional_float(summary.get("loss2")),
                _optional_float(summary.get("cc_mean")),
                _optional_float(summary.get("kl_mean")),
            ),
        )
        con.commit()
    finally:
        con.close()


def list_runs(db_path: Path, limit: int = 200) -> List[Dict[str, Any]]:
    con = _connect(db_path)
    try:
        rows = con.execute(
            f"SELECT {', '.join(COLUMNS)} FROM run_summaries ORDER BY ts DESC, id DESC LIMIT ?",
            (limit,),
        ).fetchall()
        return [dict(zip(COLUMNS, r)) for r in rows]
    finally:
        con.close()
