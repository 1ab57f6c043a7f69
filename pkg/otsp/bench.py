"""Algorithm dispatch and the benchmark harness.

A bench run reads every instance, runs the requested algorithms and reports
costs, exact ratios to the LP value and to the exact optimum (when the
oracle runs), plus a summary row per algorithm. Reports only depend on the
instance files, the seed and the flags unless timings are requested.

"""

import csv
import io
import logging
import os
import time

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from otsp.assembly import (
    GUARANTEE,
    prepare,
    solve_derandomized,
    solve_randomized,
)
from otsp.baseline import CHRISTOFIDES, baseline_52, baseline_method
from otsp.chains import (
    chain_bound,
    check_chain_order,
    solve_chains,
    solve_chains_blackbox,
)
from otsp.errors import OtspError, ParameterError, ResourceError
from otsp.formats import rational, rational_text, read_instance
from otsp.instance import ChainInstance, Tour
from otsp.oracle import solve_exact, solve_exact_chains
from otsp.spanning import christofides
from otsp.util import average, decimal_text, ratio_text

logger = logging.getLogger(__name__)

ORDERED_ALGORITHMS = ('approx', 'derand', 'baseline')
CHAIN_ALGORITHMS = ('chains', 'chains-blackbox')
ALGORITHMS = ORDERED_ALGORITHMS + CHAIN_ALGORITHMS + ('exact', 'christofides')

# Algorithms run by ``otsp bench`` when none are given
DEFAULT_ALGORITHMS = ('derand', 'approx', 'baseline', 'chains', 'exact')

CSV_FIELDS = ('instance', 'algorithm', 'n', 'cost', 'c_lp', 'ratio_vs_lp')


@dataclass(frozen=True)
class Outcome:

    """Tour produced by one algorithm, with whatever it certified."""

    algorithm: str
    tour: Tour
    certificate: object = None
    c_lp: Fraction = None
    extra: dict = field(default_factory=dict)

    def to_document(self):
        document = {
            'algorithm': self.algorithm,
            'cycle': list(self.tour.cycle),
            'cost': self.tour.cost,
        }
        if self.certificate is not None:
            document.update(self.certificate.to_document())
        elif self.c_lp is not None:
            document['c_lp'] = rational_text(self.c_lp)
            document['ratio_vs_lp'] = ratio_text(self.tour.cost, self.c_lp)
        document.update(self.extra)
        return document


def applicable(instance, algorithm):
    """Reason why ``algorithm`` cannot run on ``instance``, or ``None``."""
    if algorithm not in ALGORITHMS:
        return 'unknown algorithm {!r}'.format(algorithm)
    chained = isinstance(instance, ChainInstance)
    if algorithm in ORDERED_ALGORITHMS:
        if chained:
            return 'needs an ordered instance'
        if instance.k < 2:
            return 'needs k >= 2 (use christofides for plain TSP)'
    if algorithm in CHAIN_ALGORITHMS and not chained:
        return 'needs a chain instance'
    if algorithm == 'christofides' and instance.n < 3:
        return 'needs n >= 3'
    return None


def _approx_trials(instance, seed, trials, prepared):
    prepared = prepared or prepare(instance)
    runs = [
        solve_randomized(instance, seed + offset, prepared)
        for offset in range(trials)
    ]
    tour, certificate = min(runs, key=lambda run: (run[0].cost, run[1].seed))
    extra = {}
    if trials > 1:
        c_lp = prepared.solution.objective
        extra = {
            'trials': trials,
            'mean_ratio_vs_lp': decimal_text(
                average(runs, lambda run: run[0].cost) / c_lp),
        }
    return Outcome('approx', tour, certificate, certificate.c_lp, extra)


def solve_instance(instance, algorithm, seed=None, trials=1, prepared=None):
    """Run one algorithm on one instance.

    :param instance: Instance read from a document
    :type instance: otsp.instance.Instance | otsp.instance.ChainInstance
    :param algorithm: One of :data:`ALGORITHMS`
    :type algorithm: str
    :param seed: Sampling seed; chains derandomize when ``None``
    :type seed: int | None
    :param trials: Number of seeds tried by ``approx``
    :type trials: int
    :param prepared: Shared LP and decomposition for ``approx``/``derand``
    :rtype: Outcome
    :raises ParameterError: If the algorithm does not apply

    """
    reason = applicable(instance, algorithm)
    if reason:
        raise ParameterError('{}: {}'.format(algorithm, reason))
    if trials < 1:
        raise ParameterError('trials must be positive')

    if algorithm == 'approx':
        return _approx_trials(instance, seed or 0, trials, prepared)
    if algorithm == 'derand':
        tour, certificate = solve_derandomized(instance, prepared)
        return Outcome(algorithm, tour, certificate, certificate.c_lp)
    if algorithm == 'baseline':
        method = baseline_method(instance)
        extra = {} if method == CHRISTOFIDES else {'note': method}
        return Outcome(algorithm, baseline_52(instance), extra=extra)
    if algorithm == 'christofides':
        return Outcome(algorithm, christofides(instance.costs))
    if algorithm in CHAIN_ALGORITHMS:
        if algorithm == 'chains':
            result = solve_chains(instance, seed)
        else:
            result = solve_chains_blackbox(instance)
        certificate = result.best.certificate
        extra = {
            'guess': result.best.root,
            'chain_bound': decimal_text(chain_bound(instance.ell)),
        }
        return Outcome(
            algorithm, result.tour, certificate, certificate.c_lp, extra)

    if isinstance(instance, ChainInstance):
        result = solve_exact_chains(instance)
    else:
        result = solve_exact(instance)
    return Outcome(algorithm, result.tour, extra={'states': result.states})


def tour_valid(instance, tour):
    """Whether ``tour`` is feasible for ``instance``."""
    if isinstance(instance, ChainInstance):
        return not tour.problems(instance.costs) and \
            check_chain_order(tour, instance.chains)
    return not tour.problems(instance.costs, instance.order)


def _profile(instance):
    if isinstance(instance, ChainInstance):
        return {'chains': [len(chain) for chain in instance.chains]}
    return {'k': instance.k}


def run_instance(path, algorithms, seed=0, timings=False, name=None):
    """Bench entry for one instance file.

    ``exact`` runs first so every other algorithm gets a ratio to the
    optimum. Errors of one algorithm are reported in its slot.

    :rtype: dict

    """
    instance = read_instance(path)
    entry = {'instance': name or os.path.basename(path), 'n': instance.n}
    entry.update(_profile(instance))
    ordered = sorted(algorithms, key=lambda name: name != 'exact')
    results = {}
    optimum = None
    c_lp = None
    prepared = None
    for algorithm in ordered:
        reason = applicable(instance, algorithm)
        if reason:
            results[algorithm] = {'skipped': reason}
            continue
        start = time.perf_counter()
        try:
            if algorithm in ('approx', 'derand') and prepared is None:
                prepared = prepare(instance)
            run_seed = seed if algorithm == 'approx' else None
            outcome = solve_instance(
                instance, algorithm, run_seed, prepared=prepared)
        except ResourceError as error:
            logger.warning('%s on %s: %s', algorithm, entry['instance'], error)
            results[algorithm] = {'skipped': str(error)}
            continue
        except OtspError as error:
            logger.error('%s on %s: %s', algorithm, entry['instance'], error)
            results[algorithm] = {'error': str(error)}
            continue

        result = {
            'cost': outcome.tour.cost,
            'valid': tour_valid(instance, outcome.tour),
        }
        if outcome.certificate is not None:
            result['failed_checks'] = outcome.certificate.failed()
        result.update(
            (key, value) for key, value in outcome.extra.items()
            if key != 'states')
        if timings:
            result['seconds'] = round(time.perf_counter() - start, 3)
        if algorithm == 'exact':
            optimum = outcome.tour.cost
        if c_lp is None:
            c_lp = outcome.c_lp
        results[algorithm] = result

    if c_lp is not None:
        entry['c_lp'] = rational_text(c_lp)
    if optimum is not None:
        entry['oracle'] = optimum
    for result in results.values():
        if 'cost' not in result:
            continue
        if c_lp is not None:
            result['ratio_vs_lp'] = ratio_text(result['cost'], c_lp)
        if optimum is not None:
            result['ratio_vs_oracle'] = ratio_text(result['cost'], optimum)
    entry['algorithms'] = results
    logger.info('Benchmarked %s (n=%d)', entry['instance'], instance.n)
    return entry


def _run_entry(arguments):
    return run_instance(*arguments)


@dataclass(frozen=True)
class BenchReport:

    """Per-instance entries, in input order, and their summary."""

    algorithms: tuple
    entries: tuple
    seed: int = 0

    def summary(self):
        """Count, max and mean of the exact ratios per algorithm."""
        summary = {}
        for algorithm in self.algorithms:
            vs_lp = []
            vs_oracle = []
            for entry in self.entries:
                result = entry['algorithms'].get(algorithm, {})
                if 'cost' not in result:
                    continue
                if entry.get('c_lp') and rational(entry['c_lp']):
                    vs_lp.append(result['cost'] / rational(entry['c_lp']))
                if entry.get('oracle'):
                    vs_oracle.append(Fraction(result['cost'], entry['oracle']))
            row = {'instances': len(vs_lp)}
            if vs_lp:
                row['max_ratio_vs_lp'] = decimal_text(max(vs_lp))
                row['mean_ratio_vs_lp'] = decimal_text(average(vs_lp))
            if vs_oracle:
                row['max_ratio_vs_oracle'] = decimal_text(max(vs_oracle))
                row['mean_ratio_vs_oracle'] = decimal_text(average(vs_oracle))
            if algorithm == 'derand' and vs_lp:
                row['within_guarantee'] = max(vs_lp) <= GUARANTEE
            summary[algorithm] = row
        return summary

    def to_document(self):
        return {
            'algorithms': list(self.algorithms),
            'seed': self.seed,
            'guarantee': decimal_text(GUARANTEE),
            'instances': list(self.entries),
            'summary': self.summary(),
        }

    def csv_text(self):
        """Cost versus LP value, one row per instance and algorithm."""
        buffer = io.StringIO()
        writer = csv.DictWriter(
            buffer, fieldnames=CSV_FIELDS, extrasaction='ignore',
            lineterminator='\n')
        writer.writeheader()
        for entry in self.entries:
            for algorithm, result in sorted(entry['algorithms'].items()):
                if 'cost' not in result:
                    continue
                writer.writerow({
                    'instance': entry['instance'],
                    'algorithm': algorithm,
                    'n': entry['n'],
                    'cost': result['cost'],
                    'c_lp': decimal_text(rational(entry['c_lp']), upward=False)
                    if entry.get('c_lp') else '',
                    'ratio_vs_lp': result.get('ratio_vs_lp', ''),
                })
        return buffer.getvalue()


def run_bench(paths, algorithms=DEFAULT_ALGORITHMS, jobs=1, seed=0,
              timings=False, root=None):
    """Benchmark every instance file in ``paths``.

    :param paths: Instance files, reported in this order
    :type paths: list(str)
    :param jobs: Worker processes; ``1`` runs in this process
    :type jobs: int
    :param root: Directory instance names are made relative to
    :type root: str | None
    :rtype: BenchReport

    """
    algorithms = tuple(algorithms)
    for algorithm in algorithms:
        if algorithm not in ALGORITHMS:
            raise ParameterError('unknown algorithm {!r}'.format(algorithm))
    if jobs < 1:
        raise ParameterError('jobs must be positive')
    if seed < 0:
        raise ParameterError('seed must be nonnegative, got {}'.format(seed))
    tasks = [
        (path, algorithms, seed, timings,
         os.path.relpath(path, root) if root else None)
        for path in paths
    ]
    logger.info(
        'Benchmarking %d instances with %s (%d jobs)',
        len(tasks), ', '.join(algorithms), jobs)
    if jobs == 1:
        entries = [_run_entry(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            entries = list(executor.map(_run_entry, tasks))
    report = BenchReport(algorithms, tuple(entries), seed)
    summary = report.summary()
    derand = summary.get('derand', {}).get('mean_ratio_vs_lp')
    baseline = summary.get('baseline', {}).get('mean_ratio_vs_lp')
    if derand and baseline and Fraction(derand) > Fraction(baseline):
        logger.warning(
            'Derandomized mean ratio %s above baseline mean %s',
            derand, baseline)
    return report
