"""Results database."""

import logging
import os

import arrow

from pathlib import Path

from sqlalchemy import (
    Column,
    MetaData,
    Table,
    UniqueConstraint,
    create_engine,
    func,
    select,
)
from sqlalchemy.dialects.sqlite import insert as db_insert
from sqlalchemy.types import (
    DateTime,
    Float,
    Integer,
    String,
)
from xdg import BaseDirectory

DATABASE_FILE = 'results.db'

# Overrides the XDG data directory
DATA_HOME_VARIABLE = 'OTSP_DATA_HOME'

logger = logging.getLogger(__name__)


def default_path():
    """Location of the results database when none is given.

    :rtype: pathlib.Path

    """
    directory = os.environ.get(DATA_HOME_VARIABLE)
    if not directory:
        directory = BaseDirectory.save_data_path('otsp')
    return Path(directory) / DATABASE_FILE


class Database(object):
    """Generic database object.

    This class is subclassed to provide additional functionality specific to
    stored results.

    :param db_filename: Path to the sqlite database file
    :type db_filename: str

    """

    def __init__(self, db_filename):
        """Connect to database and create session object."""
        self.db_filename = db_filename
        self.engine = create_engine(
            'sqlite:///{}'.format(db_filename),
            connect_args={'check_same_thread': False},
            isolation_level='AUTOCOMMIT',
        )
        self.connection = None
        self.metadata = MetaData()

    def connect(self):
        """Create connection."""
        logger.debug('Connecting to SQLite database: %r', self.db_filename)
        self.connection = self.engine.connect()

    def disconnect(self):
        """Close connection."""
        if not self.connection:
            return
        assert not self.connection.closed
        logger.debug('Disconnecting from SQLite database: %r', self.db_filename)
        self.connection.close()

    def __enter__(self):
        """Connect on entering context."""
        self.connect()
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        """Disconnect on exiting context."""
        self.disconnect()

    def __getitem__(self, table_name):
        """Get table object in database.

        :param table_name: Name of the table
        :type table_name: str
        :return: Table object that can be used in queries
        :rtype: sqlalchemy.schema.Table

        """
        if not isinstance(table_name, str):
            raise TypeError('Unexpected table name: {}'.format(table_name))
        table = self.metadata.tables.get(table_name)
        if table is None:
            table = Table(table_name, self.metadata, autoload_with=self.engine)
        return table


class ResultsDB(Database):
    """Benchmark results database.

    One row per (run, instance, algorithm) with the tour cost, the LP value
    and the ratios reported by ``otsp bench``.

    :param db_file: Database file; :func:`default_path` when omitted
    :type db_file: str | pathlib.Path | None

    """

    def __init__(self, db_file=None):
        db_file = Path(db_file) if db_file else default_path()
        db_file.parent.mkdir(parents=True, exist_ok=True)
        Database.__init__(self, db_file)

        if db_file.exists() and db_file.stat().st_size:
            self.result_table = self['result']
        else:
            logger.debug('Creating results database %r...', str(db_file))

            self.result_table = Table(
                'result',
                self.metadata,
                Column('id', Integer, primary_key=True, autoincrement=True),
                Column('run', String),
                Column('instance', String),
                Column('algorithm', String),
                Column('n', Integer),
                Column('k', Integer),
                Column('cost', Integer),
                Column('c_lp', String),
                Column('ratio_lp', Float),
                Column('ratio_oracle', Float),
                Column('recorded', DateTime),
                UniqueConstraint(
                    'run', 'instance', 'algorithm',
                    name='uix_run_instance_algorithm'),
            )
            self.result_table.create(bind=self.engine)

    def insert(self, rows):
        """Insert rows in the result table; duplicates are ignored.

        :param rows: Rows to be inserted in the database
        :type rows: list(dict(str))
        :returns: Number of rows inserted
        :rtype: int

        """
        if not rows or not self.connection:
            return 0
        insert_query = db_insert(self.result_table).on_conflict_do_nothing()
        result = self.connection.execute(insert_query, rows)
        logger.debug('%d rows inserted', result.rowcount)
        return result.rowcount

    def delete(self, run):
        """Delete the rows of a run.

        :return: Number of rows deleted
        :rtype: int

        """
        table = self.result_table
        delete_query = table.delete().where(table.c.run == run)
        if self.connection:
            return self.connection.execute(delete_query).rowcount
        return 0

    def list_runs(self, runs=None):
        """Names of the stored runs, optionally restricted to ``runs``."""
        query = select(self.result_table.c.run).distinct()
        if runs:
            query = query.where(self.result_table.c.run.in_(runs))
        if self.connection:
            result = self.connection.execute(
                query.order_by(self.result_table.c.run))
            return [row.run for row in result]
        return []

    def count(self, run):
        """Number of rows stored for ``run``."""
        stmt = (
            select(func.count())
            .select_from(self.result_table)
            .filter(self.result_table.c.run == run)
        )
        if self.connection:
            return self.connection.execute(stmt).scalar()
        return 0

    def mean_ratio(self, run, algorithm=None):
        """Mean ratio to the LP value over a run, ``None`` without data."""
        table = self.result_table
        stmt = select(func.avg(table.c.ratio_lp)).where(table.c.run == run)
        if algorithm:
            stmt = stmt.where(table.c.algorithm == algorithm)
        if self.connection:
            return self.connection.execute(stmt).scalar()
        return None


def _float(text):
    if text is None or text == 'inf':
        return None
    return float(text)


def transform_entry_to_row(run, entry, recorded=None):
    """Transform a bench report entry into database rows.

    :param run: Label of the bench run
    :type run: str
    :param entry: Per-instance entry of a bench report document
    :type entry: dict
    :param recorded: Timestamp; now (UTC) by default
    :type recorded: arrow.Arrow | None
    :rtype: list(dict)

    """
    recorded = (recorded or arrow.utcnow()).datetime
    rows = []
    for algorithm, result in sorted(entry['algorithms'].items()):
        if 'cost' not in result:
            continue
        rows.append({
            'run': run,
            'instance': entry['instance'],
            'algorithm': algorithm,
            'n': entry['n'],
            'k': entry.get('k'),
            'cost': result['cost'],
            'c_lp': entry.get('c_lp'),
            'ratio_lp': _float(result.get('ratio_vs_lp')),
            'ratio_oracle': _float(result.get('ratio_vs_oracle')),
            'recorded': recorded,
        })
    return rows
