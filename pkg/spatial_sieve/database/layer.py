"""A layer for the result ledger session.

This module contains the `ResultLedger` class.
It is used to make the ledger session easier to use.
It is also a context manager.
Generally, you should use this class instead of the session directly.

Typical usage example:
    ```py
    with ResultLedger.connect("sqlite:///results.db") as ledger:
        study_id = ledger.record_study(result)
        ledger.commit()
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import logging
import types
from typing import Any, Type

import sqlalchemy
from sqlalchemy import exc as sa_exc
from sqlalchemy import orm

from spatial_sieve.database import artifacts, const, models
from spatial_sieve.ext import exceptions, streams
from spatial_sieve.stats import experiments

_SIGN_BIT = 1 << 63


def _signed(seed: int) -> int:
    seed &= (1 << 64) - 1
    return seed - (1 << 64) if seed & _SIGN_BIT else seed


def _unsigned(seed: int) -> int:
    return seed & ((1 << 64) - 1)


class ResultLedger:
    """A convenience layer for the ledger session.

    This class is used to make the ledger session easier to use.
    It also handles the 'with' statement.
    Any and all commits have to be done manually.
    """

    def __init__(self, session: orm.Session) -> None:
        """Initialises the ledger session layer.

        Args:
            session: The database session.
        """
        self._session = session

    @classmethod
    def connect(cls, url: str) -> "ResultLedger":
        """Opens a ledger at a SQLAlchemy URL, creating tables if needed.

        Raises:
            `spatial_sieve.ext.exceptions.ArtifactError`: If the database
                cannot be opened.
        """
        try:
            engine = sqlalchemy.create_engine(url)
            models.Base.metadata.create_all(engine)
        except (sa_exc.SQLAlchemyError, ValueError) as exc:
            raise exceptions.ArtifactError(f"Cannot open result ledger {url}: {exc}") from exc
        logging.info("Opened result ledger at %s.", engine.url.render_as_string(hide_password=True))
        return cls(orm.Session(engine, expire_on_commit=False))

    def __enter__(self) -> "ResultLedger":
        return self

    def __exit__(self, exc_type: Type[BaseException] | None, exc_value: BaseException | None,
                 traceback: types.TracebackType | None) -> None:
        """Exit the 'with' statement.

        We roll back the session if an exception is raised.
        We then close the session regardless.
        """
        if exc_type:
            self.rollback()
        self.close()

    def close(self) -> None:
        """Close the ledger session."""
        self._session.close()

    def commit(self) -> None:
        """Commit the ledger session."""
        self._session.commit()

    def rollback(self) -> None:
        """Rollback the ledger session.

        Cleans all the non-committed changes.
        """
        self._session.rollback()

    def record_study(self, result: experiments.StudyResult) -> int:
        """Adds a finished study and its replications.

        We flush to obtain the study ID but do not commit.

        Args:
            result: The study result.

        Returns:
            int: The new study ID.
        """
        study = models.Study(kind=result.kind,
                             seed=_signed(result.config.seed),
                             version=const.VERSION,
                             rng=streams.RNG_NAME,
                             config=result.config.to_dict(),
                             report=artifacts.json_safe(result.to_report()))
        self._session.add(study)
        self._session.flush()
        for row in result.replications.to_dict(orient="records"):
            self.record_replication(study.study_id, row)
        self._session.flush()
        return study.study_id

    def record_replication(self, study_id: int, row: dict[str, Any]) -> models.ReplicationRecord:
        """Adds one replication row to a study."""
        record = models.ReplicationRecord(study_id=study_id,
                                          rung=int(row["rung"]),
                                          replication=int(row["replication"]),
                                          sup_error=float(row["sup_error"]),
                                          l2_error=float(row["l2_error"]),
                                          covered=[bool(v) for v in row["covered"]] if "covered" in row else None,
                                          width=[float(v) for v in row["width"]] if "width" in row else None)
        self._session.add(record)
        return record

    def load_study(self, study_id: int) -> dict[str, Any]:
        """Reads a study back as a plain dictionary.

        Raises:
            `spatial_sieve.ext.exceptions.ArtifactError`: If no such study.
        """
        study = self._session.get(models.Study, study_id, populate_existing=True)
        if study is None:
            raise exceptions.ArtifactError(f"No study with ID {study_id} in the ledger")
        return {
            "study_id": study.study_id,
            "kind": study.kind,
            "seed": _unsigned(study.seed),
            "version": study.version,
            "rng": study.rng,
            "config": study.config,
            "report": study.report,
            "replications": [{
                "rung": r.rung,
                "replication": r.replication,
                "sup_error": r.sup_error,
                "l2_error": r.l2_error,
                "covered": r.covered,
                "width": r.width,
            } for r in study.replications],
        }

    def list_studies(self) -> list[tuple[int, str, int]]:
        """(study_id, kind, seed) of every stored study."""
        rows = self._session.execute(
            sqlalchemy.select(models.Study.study_id, models.Study.kind,
                              models.Study.seed).order_by(models.Study.study_id)).all()
        return [(row[0], row[1], _unsigned(row[2])) for row in rows]

