"""Test database functionality."""

import os
import shutil
import sqlite3
import tempfile
import unittest

from contextlib import closing
from datetime import datetime

import arrow

from dateutil.tz import tzutc
from mock import patch

from sqlalchemy.exc import NoSuchTableError
from sqlalchemy.types import (
    INTEGER,
    TEXT,
)

from otsp.db import (
    DATA_HOME_VARIABLE,
    Database,
    ResultsDB,
    default_path,
    transform_entry_to_row,
)


def make_row(run, instance, algorithm, ratio):
    return {
        'run': run,
        'instance': instance,
        'algorithm': algorithm,
        'n': 8,
        'k': 3,
        'cost': 120,
        'c_lp': '100/1',
        'ratio_lp': ratio,
        'ratio_oracle': None,
        'recorded': datetime(2024, 1, 1, 12, 34, 56),
    }


class DatabaseTest(unittest.TestCase):

    """Database wrapper test cases."""

    def test_get_table_metadata(self):
        """Table metadata can be retrieved using index notation."""
        with tempfile.NamedTemporaryFile() as db_file:
            with closing(sqlite3.connect(db_file.name)) as connection:
                with closing(connection.cursor()) as cursor:
                    cursor.execute(
                        'CREATE TABLE messages (id INTEGER, message TEXT)')

            database = Database(db_file.name)
            table = database['messages']
            schema = {column.name: type(column.type)
                      for column in table.columns}
            self.assertDictEqual(
                schema,
                {'id': INTEGER, 'message': TEXT})

    def test_get_unknown_table_metadata(self):
        """NoSuchTableError raised when table name is not found."""
        with tempfile.NamedTemporaryFile() as db_file:
            with closing(sqlite3.connect(db_file.name)) as connection:
                with closing(connection.cursor()) as cursor:
                    cursor.execute(
                        'CREATE TABLE messages (id INTEGER, message TEXT)')

            database = Database(db_file.name)

            with self.assertRaises(NoSuchTableError):
                database['unknown']

    def test_type_error_on_wrong_table_name(self):
        """TypeError raised when table name is not a string."""
        database = Database(':memory:')
        with self.assertRaises(TypeError):
            database[0]

    def test_context_manager(self):
        """Connection is opened/closed when used as a context manager."""
        database = Database(':memory:')

        # Connection is None when database object is created
        self.assertIsNone(database.connection)

        with database:
            # Connection is not closed inside the context
            self.assertFalse(database.connection.closed)

        # Connection is closed outside the context
        self.assertTrue(database.connection.closed)


class DefaultPathTest(unittest.TestCase):

    """Default database location."""

    def test_environment_override(self):
        """OTSP_DATA_HOME wins over the XDG directory."""
        with patch.dict(os.environ, {DATA_HOME_VARIABLE: '/some/where'}):
            self.assertEqual(
                str(default_path()), os.path.join('/some/where', 'results.db'))

    def test_xdg_directory(self):
        """XDG data directory used by default."""
        with patch.dict(os.environ, {DATA_HOME_VARIABLE: ''}), \
                patch('otsp.db.BaseDirectory') as base_directory:
            base_directory.save_data_path.return_value = '/xdg/otsp'
            self.assertEqual(
                str(default_path()), os.path.join('/xdg/otsp', 'results.db'))
            base_directory.save_data_path.assert_called_once_with('otsp')


class ResultsDBTest(unittest.TestCase):

    """Results database tests."""

    def setUp(self):
        """Create temporary directory."""
        self.directory = tempfile.mkdtemp()
        self.filename = os.path.join(self.directory, 'results.db')

    def tearDown(self):
        """Remove temporary directory."""
        shutil.rmtree(self.directory)

    def test_database_exists(self):
        """Database not created if exists."""
        with closing(sqlite3.connect(self.filename)) as connection:
            with closing(connection.cursor()) as cursor:
                cursor.execute(
                    'CREATE TABLE result (column_1 TEXT, column_2 TEXT)')

        results_db = ResultsDB(self.filename)
        self.assertListEqual(
            results_db.result_table.columns.keys(),
            ['column_1', 'column_2'],
        )

    def test_create_database(self):
        """Create database file."""
        ResultsDB(self.filename)
        self.assertTrue(os.path.isfile(self.filename))

    def test_default_location(self):
        """Database created in the data home when no file is given."""
        with patch.dict(os.environ, {DATA_HOME_VARIABLE: self.directory}):
            ResultsDB()
        self.assertTrue(os.path.isfile(self.filename))

    def test_insert(self):
        """Insert records in database."""
        rows = [
            make_row('nightly', 'a.json', 'derand', 1.25),
            make_row('nightly', 'b.json', 'derand', 1.5),
        ]
        with ResultsDB(self.filename) as results_db:
            results_db.insert(rows)

        with closing(sqlite3.connect(self.filename)) as connection:
            with closing(connection.cursor()) as cursor:
                result = cursor.execute('SELECT COUNT(*) FROM result')
                self.assertListEqual(result.fetchall(), [(2,)])

    def test_insert_duplicates_ignored(self):
        """Rows of the same run, instance and algorithm are stored once."""
        rows = [make_row('nightly', 'a.json', 'derand', 1.25)]
        with ResultsDB(self.filename) as results_db:
            results_db.insert(rows)
            results_db.insert(rows)
            self.assertEqual(results_db.count('nightly'), 1)

    def test_list_and_count(self):
        """Runs are listed in name order with their row counts."""
        rows = [
            make_row('b', 'a.json', 'derand', 1.0),
            make_row('b', 'a.json', 'baseline', 2.0),
            make_row('a', 'a.json', 'derand', 1.0),
        ]
        with ResultsDB(self.filename) as results_db:
            results_db.insert(rows)
            self.assertListEqual(results_db.list_runs(), ['a', 'b'])
            self.assertListEqual(results_db.list_runs(['b']), ['b'])
            self.assertEqual(results_db.count('b'), 2)
            self.assertEqual(results_db.count('missing'), 0)

    def test_mean_ratio(self):
        """Mean ratio to the LP over a run and per algorithm."""
        rows = [
            make_row('run', 'a.json', 'derand', 1.0),
            make_row('run', 'a.json', 'baseline', 2.0),
        ]
        with ResultsDB(self.filename) as results_db:
            results_db.insert(rows)
            self.assertAlmostEqual(results_db.mean_ratio('run'), 1.5)
            self.assertAlmostEqual(
                results_db.mean_ratio('run', 'baseline'), 2.0)
            self.assertIsNone(results_db.mean_ratio('missing'))

    def test_remove(self):
        """Delete rows of a run."""
        rows = [
            make_row('a', 'x.json', 'derand', 1.0),
            make_row('a', 'y.json', 'derand', 1.0),
            make_row('b', 'x.json', 'derand', 1.0),
        ]
        with ResultsDB(self.filename) as results_db:
            results_db.insert(rows)
            self.assertEqual(results_db.delete('a'), 2)
            self.assertListEqual(results_db.list_runs(), ['b'])

    def test_no_connection(self):
        """Queries outside the context return empty results."""
        results_db = ResultsDB(self.filename)
        self.assertEqual(results_db.insert([make_row('a', 'x', 'y', 1.0)]), 0)
        self.assertEqual(results_db.count('a'), 0)
        self.assertEqual(results_db.delete('a'), 0)


class TransformEntryToRowTest(unittest.TestCase):

    """Bench report entry to database row transformation tests."""

    def test_transform_entry(self):
        """Entries give one row per algorithm that produced a tour."""
        entry = {
            'instance': 'a.json',
            'n': 8,
            'k': 3,
            'c_lp': '40/1',
            'oracle': 44,
            'algorithms': {
                'derand': {
                    'cost': 50,
                    'ratio_vs_lp': '1.2500000000',
                    'ratio_vs_oracle': '1.1363636364',
                },
                'chains': {'skipped': 'needs a chain instance'},
            },
        }
        recorded = arrow.get(2024, 1, 1, 12, 34, 56)
        rows = transform_entry_to_row('nightly', entry, recorded)
        self.assertEqual(rows, [{
            'run': 'nightly',
            'instance': 'a.json',
            'algorithm': 'derand',
            'n': 8,
            'k': 3,
            'cost': 50,
            'c_lp': '40/1',
            'ratio_lp': 1.25,
            'ratio_oracle': 1.1363636364,
            'recorded': datetime(2024, 1, 1, 12, 34, 56, tzinfo=tzutc()),
        }])

    def test_infinite_ratio(self):
        """Infinite ratios are stored as missing values."""
        entry = {
            'instance': 'a.json',
            'n': 3,
            'c_lp': '0/1',
            'algorithms': {'baseline': {'cost': 2, 'ratio_vs_lp': 'inf'}},
        }
        rows = transform_entry_to_row('run', entry)
        self.assertIsNone(rows[0]['ratio_lp'])
        self.assertIsNone(rows[0]['k'])
