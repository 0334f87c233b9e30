"""File for the result ledger models.

This file contains the SQLAlchemy models of the optional study ledger.
The ledger keeps every study we ran, with its resolved configuration and
one row per replication, so Monte Carlo results can be compared across
versions without rerunning them.
For more information on SQLAlchemy, please see the docs:
https://docs.sqlalchemy.org/en/20/

Typical usage example:
    ```py
    from spatial_sieve.database import models
    models.Base.metadata.create_all(engine)
    ```
"""
# License: EPL-2.0
# SPDX-License-Identifier: EPL-2.0
# Copyright (c) 2024-present The spatial-sieve Contributors

import datetime
from typing import Any

import sqlalchemy
from sqlalchemy import orm, sql


class Base(orm.DeclarativeBase):
    """Base of SQLAlchemy models

    This is the base class for all ledger models.
    Please see the SQLAlchemy docs for more information about
    how to use this class.
    """


class Study(Base):
    """One Monte Carlo study

    Attributes:
        study_id: Autoincremented study ID.
        kind: "rate" or "coverage".
        seed: The study seed.
        version: The spatial_sieve version that ran it.
        rng: The random generator name.
        config: The full resolved configuration.
        report: The aggregated report, written when the study completes.
        created_at: Creation time, database-side.
        replications: The relationship to the ReplicationRecord table.
    """

    __tablename__ = "studies"
    __table_args__ = {"comment": "Monte Carlo studies, the parent table of replications."}

    study_id: orm.Mapped[int] = orm.mapped_column(primary_key=True,
                                                  autoincrement=True,
                                                  comment="Unique study ID")
    kind: orm.Mapped[str] = orm.mapped_column(sqlalchemy.String(16), nullable=False, comment="Study kind")
    seed: orm.Mapped[int] = orm.mapped_column(sqlalchemy.BigInteger(),
                                              nullable=False,
                                              comment="The 64-bit study seed, stored signed")
    version: orm.Mapped[str] = orm.mapped_column(sqlalchemy.String(32),
                                                 nullable=False,
                                                 comment="Version that ran the study")
    rng: orm.Mapped[str] = orm.mapped_column(sqlalchemy.String(32), nullable=False, comment="Random generator name")
    config: orm.Mapped[dict[str, Any]] = orm.mapped_column(sqlalchemy.JSON(),
                                                           nullable=False,
                                                           comment="Full resolved configuration")
    report: orm.Mapped[dict[str, Any] | None] = orm.mapped_column(sqlalchemy.JSON(),
                                                                  nullable=True,
                                                                  comment="Aggregated report")
    created_at: orm.Mapped[datetime.datetime] = orm.mapped_column(sqlalchemy.DateTime(),
                                                                  server_default=sql.func.now(),
                                                                  nullable=False,
                                                                  comment="Creation time")

    # Relationships
    replications: orm.Mapped[list["ReplicationRecord"]] = orm.relationship(back_populates="study",
                                                                           lazy="selectin",
                                                                           cascade="all, delete-orphan",
                                                                           order_by="ReplicationRecord.record_id")


class ReplicationRecord(Base):
    """One replication of a study

    Attributes:
        record_id: Autoincremented record ID.
        study_id: The study it belongs to.
        rung: Ladder rung index.
        replication: Replication index within the rung.
        sup_error: Grid sup error.
        l2_error: L2(g) error.
        covered: Coverage hits per target, coverage studies only.
        width: Interval widths per target, coverage studies only.
        study: The relationship to the Study table.
    """

    __tablename__ = "replications"
    __table_args__ = (
        sqlalchemy.UniqueConstraint("study_id", "rung", "replication", name="uq_replication"),
        {
            "comment": "Per-replication errors and coverage hits."
        },
    )

    record_id: orm.Mapped[int] = orm.mapped_column(primary_key=True, autoincrement=True, comment="Unique record ID")
    study_id: orm.Mapped[int] = orm.mapped_column(sqlalchemy.ForeignKey("studies.study_id", ondelete="CASCADE"),
                                                  nullable=False,
                                                  comment="Parent study")
    rung: orm.Mapped[int] = orm.mapped_column(nullable=False, comment="Ladder rung index")
    replication: orm.Mapped[int] = orm.mapped_column(nullable=False, comment="Replication index")
    sup_error: orm.Mapped[float] = orm.mapped_column(sqlalchemy.Float(), nullable=False, comment="Grid sup error")
    l2_error: orm.Mapped[float] = orm.mapped_column(sqlalchemy.Float(), nullable=False, comment="L2(g) error")
    covered: orm.Mapped[list[bool] | None] = orm.mapped_column(sqlalchemy.JSON(),
                                                               nullable=True,
                                                               comment="Coverage hit per target")
    width: orm.Mapped[list[float] | None] = orm.mapped_column(sqlalchemy.JSON(),
                                                              nullable=True,
                                                              comment="Interval width per target")

    # Relationships
    study: orm.Mapped["Study"] = orm.relationship(back_populates="replications", lazy="joined")
