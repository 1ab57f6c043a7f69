"""Algorithm dispatch and benchmark test cases."""

import os
import shutil
import tempfile
import time
import unittest

from mock import patch

from otsp.bench import (
    CSV_FIELDS,
    BenchReport,
    applicable,
    run_bench,
    run_instance,
    solve_instance,
    tour_valid,
)
from otsp.errors import ConsistencyError, ParameterError, ResourceError
from otsp.formats import write_instance
from otsp.instance import ChainInstance, CostMatrix, Instance, Tour, generate

SQUARE = CostMatrix([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]])

# Wall clock allowed for the medium instance
MEDIUM_SECONDS = 300


class ApplicableTest(unittest.TestCase):

    """Which algorithms run on which instances."""

    def test_ordered_instance(self):
        """Chain algorithms need chains."""
        instance = Instance(SQUARE, (0, 2))
        self.assertIsNone(applicable(instance, 'derand'))
        self.assertIsNone(applicable(instance, 'exact'))
        self.assertEqual(applicable(instance, 'chains'), 'needs a chain instance')

    def test_vacuous_order(self):
        """Ordered algorithms need k >= 2."""
        instance = Instance(SQUARE, ())
        self.assertEqual(
            applicable(instance, 'baseline'),
            'needs k >= 2 (use christofides for plain TSP)')
        self.assertIsNone(applicable(instance, 'christofides'))

    def test_chain_instance(self):
        """Ordered algorithms do not take chains."""
        instance = ChainInstance(SQUARE, ((0, 1),))
        self.assertEqual(
            applicable(instance, 'approx'), 'needs an ordered instance')
        self.assertIsNone(applicable(instance, 'chains-blackbox'))

    def test_unknown(self):
        """Unknown names are reported."""
        self.assertEqual(
            applicable(Instance(SQUARE, (0, 1)), 'magic'),
            "unknown algorithm 'magic'")


class SolveInstanceTest(unittest.TestCase):

    """Running a single algorithm."""

    def test_not_applicable(self):
        """Refused algorithms raise a parameter error."""
        with self.assertRaises(ParameterError):
            solve_instance(Instance(SQUARE, (0, 1)), 'chains')

    def test_bad_trials(self):
        """At least one trial is needed."""
        with self.assertRaises(ParameterError):
            solve_instance(Instance(SQUARE, (0, 1)), 'approx', trials=0)

    def test_trials(self):
        """Several trials report their mean ratio."""
        instance = generate('euclidean', 6, k=2, seed=1)
        outcome = solve_instance(instance, 'approx', seed=3, trials=3)
        self.assertEqual(outcome.extra['trials'], 3)
        self.assertIn('mean_ratio_vs_lp', outcome.extra)
        self.assertIn(outcome.certificate.seed, (3, 4, 5))
        self.assertTrue(tour_valid(instance, outcome.tour))

    def test_baseline_note(self):
        """Baseline reports the method it fell back to."""
        outcome = solve_instance(Instance(SQUARE, (0, 1, 2, 3)), 'baseline')
        self.assertEqual(outcome.extra, {'note': 'cycle'})
        self.assertEqual(outcome.to_document()['cost'], 4)

    def test_exact_chains(self):
        """Exact dispatches on the instance type."""
        instance = ChainInstance(SQUARE, ((0, 2),))
        outcome = solve_instance(instance, 'exact')
        self.assertEqual(outcome.tour.cost, 4)
        self.assertIn('states', outcome.extra)

    def test_chains_extra(self):
        """Chain runs report the guess and the bound."""
        instance = generate('euclidean', 6, chain_sizes=[2, 2], seed=2)
        outcome = solve_instance(instance, 'chains')
        self.assertIn(outcome.extra['guess'],
                      [chain[0] for chain in instance.chains])
        self.assertTrue(outcome.extra['chain_bound'].startswith('2.63'))


class TourValidTest(unittest.TestCase):

    """Feasibility against ordered and chain instances."""

    def test_ordered(self):
        """Order violations make tours invalid."""
        instance = Instance(SQUARE, (0, 1, 2))
        self.assertTrue(tour_valid(instance, Tour((0, 1, 2, 3), 4)))
        self.assertFalse(tour_valid(instance, Tour((0, 2, 1, 3), 6)))

    def test_chains(self):
        """Chain violations make tours invalid."""
        instance = ChainInstance(SQUARE, ((0, 1, 2, 3),))
        self.assertTrue(tour_valid(instance, Tour((0, 1, 2, 3), 4)))
        self.assertFalse(tour_valid(instance, Tour((0, 2, 1, 3), 6)))


class RunBenchTest(unittest.TestCase):

    """Benchmark harness."""

    def setUp(self):
        """Write a few instance files."""
        self.directory = tempfile.mkdtemp()
        self.paths = []
        for seed in range(2):
            path = os.path.join(self.directory, 'ordered_{}.json'.format(seed))
            write_instance(generate('euclidean', 6, k=3, seed=seed), path)
            self.paths.append(path)
        self.chain_path = os.path.join(self.directory, 'chains.tsp')
        write_instance(
            generate('euclidean', 6, chain_sizes=[2, 1], seed=7),
            self.chain_path)

    def tearDown(self):
        """Remove temporary directory."""
        shutil.rmtree(self.directory)

    def test_run_instance(self):
        """Every result carries its ratios to the LP and to the optimum."""
        entry = run_instance(
            self.paths[0], ('derand', 'baseline', 'chains', 'exact'))
        self.assertEqual(entry['instance'], 'ordered_0.json')
        self.assertEqual(entry['n'], 6)
        self.assertEqual(entry['k'], 3)
        self.assertIn('c_lp', entry)
        results = entry['algorithms']
        self.assertEqual(results['chains'], {'skipped': 'needs a chain instance'})
        self.assertEqual(results['exact']['ratio_vs_oracle'], '1.0000000000')
        for algorithm in ('derand', 'baseline'):
            self.assertTrue(results[algorithm]['valid'])
            self.assertIn('ratio_vs_lp', results[algorithm])
            self.assertIn('ratio_vs_oracle', results[algorithm])
        self.assertListEqual(results['derand']['failed_checks'], [])
        self.assertNotIn('seconds', results['derand'])

    def test_chain_instance(self):
        """Chain files are profiled by their chain sizes."""
        entry = run_instance(self.chain_path, ('chains', 'derand', 'exact'))
        self.assertEqual(entry['chains'], [2, 1])
        self.assertIn('cost', entry['algorithms']['chains'])
        self.assertTrue(entry['algorithms']['chains']['valid'])
        self.assertIn('skipped', entry['algorithms']['derand'])

    def test_resource_error_skips(self):
        """Capped algorithms are skipped, not failed."""
        with patch('otsp.bench.solve_exact') as solve_exact:
            solve_exact.side_effect = ResourceError('exact oracle is capped')
            entry = run_instance(self.paths[0], ('baseline', 'exact'))
        self.assertEqual(
            entry['algorithms']['exact'], {'skipped': 'exact oracle is capped'})
        self.assertNotIn('oracle', entry)
        self.assertNotIn('ratio_vs_oracle', entry['algorithms']['baseline'])

    def test_errors_reported(self):
        """Other errors are reported in the algorithm slot."""
        with patch('otsp.bench.solve_derandomized') as solve_derandomized:
            solve_derandomized.side_effect = ConsistencyError('broken')
            entry = run_instance(self.paths[0], ('derand',))
        self.assertEqual(entry['algorithms']['derand'], {'error': 'broken'})

    def test_timings(self):
        """Timings are only reported on request."""
        entry = run_instance(self.paths[0], ('baseline',), timings=True)
        self.assertIn('seconds', entry['algorithms']['baseline'])

    def test_medium_instance(self):
        """An n=34, k=8 instance is solved and certified in bounded time."""
        path = os.path.join(self.directory, 'medium.json')
        write_instance(generate('euclidean', 34, k=8, seed=5), path)
        start = time.monotonic()
        entry = run_instance(path, ('derand', 'baseline'), timings=True)
        elapsed = time.monotonic() - start
        derand = entry['algorithms']['derand']
        self.assertTrue(derand['valid'], derand)
        self.assertListEqual(derand['failed_checks'], [])
        self.assertLess(elapsed, MEDIUM_SECONDS)

    def test_reproducible(self):
        """Reports only depend on the files and the seed."""
        algorithms = ('derand', 'approx', 'baseline')
        first = run_bench(self.paths, algorithms, seed=1, root=self.directory)
        second = run_bench(self.paths, algorithms, seed=1, root=self.directory)
        self.assertEqual(first.to_document(), second.to_document())
        self.assertEqual(
            [entry['instance'] for entry in first.entries],
            ['ordered_0.json', 'ordered_1.json'])

    def test_summary(self):
        """Summary rows count instances and check the guarantee."""
        report = run_bench(self.paths, ('derand', 'exact'))
        summary = report.summary()
        self.assertEqual(summary['derand']['instances'], 2)
        self.assertTrue(summary['derand']['within_guarantee'])
        self.assertIn('max_ratio_vs_oracle', summary['derand'])
        document = report.to_document()
        self.assertEqual(document['algorithms'], ['derand', 'exact'])
        self.assertEqual(document['guarantee'], '1.8678794412')

    def test_csv(self):
        """CSV has one row per produced tour."""
        report = run_bench(self.paths, ('derand', 'baseline'))
        lines = report.csv_text().splitlines()
        self.assertEqual(lines[0], ','.join(CSV_FIELDS))
        self.assertEqual(len(lines), 5)

    def test_bad_arguments(self):
        """Unknown algorithms, job counts and seeds are refused."""
        with self.assertRaises(ParameterError):
            run_bench(self.paths, ('magic',))
        with self.assertRaises(ParameterError):
            run_bench(self.paths, ('derand',), jobs=0)
        with self.assertRaises(ParameterError):
            run_bench(self.paths, ('derand',), seed=-1)

    def test_empty_report(self):
        """Empty benches still summarize."""
        report = BenchReport(('derand',), ())
        self.assertDictEqual(report.summary(), {'derand': {'instances': 0}})
