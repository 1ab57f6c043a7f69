"""Command Line Interface."""

import argparse
import logging
import os
import sys

from fractions import Fraction

from otsp.assembly import ConnectingTreeDistribution, prepare
from otsp.bench import (
    ALGORITHMS,
    DEFAULT_ALGORITHMS,
    run_bench,
    solve_instance,
    tour_valid,
)
from otsp.db import ResultsDB, transform_entry_to_row
from otsp.decomposition import verify_decomposition
from otsp.errors import (
    ConsistencyError,
    OtspError,
    ParameterError,
    ResourceError,
)
from otsp.formats import (
    dump_family,
    dump_solution,
    dump_tour,
    load_family,
    load_solution,
    load_tour,
    read_instance,
    read_json,
    serialize_json,
    write_instance,
    write_json,
)
from otsp.fs import InstanceExplorer
from otsp.instance import KINDS, ChainInstance, generate
from otsp.relaxation import held_karp_violations, solution_problems

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_RESOURCE = 2
EXIT_CONSISTENCY = 3
EXIT_USAGE = 64

logger = logging.getLogger(__name__)


class ArgumentParser(argparse.ArgumentParser):

    """Argument parser exiting with the usage status on bad arguments."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, '{}: error: {}\n'.format(self.prog, message))


def main(argv=None):
    """Entry point for the otsp script.

    :param argv: Command line arguments; ``sys.argv[1:]`` by default
    :type argv: list(str) | None
    :returns: Exit status
    :rtype: int

    """
    if argv is None:
        argv = sys.argv[1:]
    args = parse_arguments(argv)
    configure_logging(args.log_level)
    if not hasattr(args, 'func'):
        args.parser.print_help()
        return EXIT_USAGE
    try:
        status = args.func(args)
    except ResourceError as error:
        logger.error('%s', error)
        if error.stats:
            logger.error('Statistics: %s', error.stats)
        return EXIT_RESOURCE
    except ConsistencyError as error:
        logger.error('Internal error: %s', error)
        logger.debug('Traceback', exc_info=True)
        return EXIT_CONSISTENCY
    except OtspError as error:
        logger.error('%s', error)
        return EXIT_FAILURE
    return status or EXIT_OK


def solve(args):
    """Solve an instance with one algorithm."""
    instance = read_instance(args.instance)
    prepared = None
    if args.dump_lp or args.dump_decomposition:
        if args.algo not in ('approx', 'derand'):
            raise ParameterError(
                'LP and decomposition dumps need --algo approx or derand')
        prepared = prepare(instance)
        if args.dump_lp:
            write_json(dump_solution(prepared.solution), args.dump_lp)
        if args.dump_decomposition:
            write_json({
                'solution': dump_solution(prepared.solution),
                'families': [
                    dump_family(family)
                    for family in prepared.distribution.families],
            }, args.dump_decomposition)

    outcome = solve_instance(
        instance, args.algo, args.seed, args.trials, prepared)
    if args.output:
        write_json(dump_tour(outcome.tour), args.output)

    document = outcome.to_document()
    document.setdefault('scale', instance.costs.scale)
    if args.json:
        sys.stdout.write(write_json(document))
        return EXIT_OK

    print('algorithm: {}'.format(outcome.algorithm))
    print('cost: {}'.format(outcome.tour.cost))
    print('tour: {}'.format(' '.join(str(v) for v in outcome.tour.cycle)))
    for key in ('c_lp', 'ratio_vs_lp', 'mean_ratio_vs_lp', 'note'):
        if document.get(key) is not None:
            print('{}: {}'.format(key, document[key]))
    return EXIT_OK


def gen(args):
    """Generate a random metric instance."""
    instance = generate(
        args.kind, args.n, k=args.k, chain_sizes=args.chains, seed=args.seed)
    if args.output:
        write_instance(instance, args.output)
    else:
        sys.stdout.write(serialize_json(instance))
    return EXIT_OK


def bench(args):
    """Benchmark algorithms over every instance under a directory."""
    paths = InstanceExplorer(args.dir).paths()
    if not paths:
        raise ParameterError('no instance files under {!r}'.format(args.dir))
    report = run_bench(
        paths, args.algos, jobs=args.jobs, seed=args.seed,
        timings=args.timings, root=args.dir)

    text = write_json(report.to_document(), args.output)
    if not args.output:
        sys.stdout.write(text)
    if args.csv:
        with open(args.csv, 'w') as csv_file:
            csv_file.write(report.csv_text())

    if args.run:
        rows = [
            row for entry in report.entries
            for row in transform_entry_to_row(args.run, entry)
        ]
        with ResultsDB(args.db) as database:
            database.insert(rows)
        logger.info('Stored %d results as run %r', len(rows), args.run)

    for algorithm, row in sorted(report.summary().items()):
        logger.info(
            '%s: %d instances, max ratio vs LP %s, mean %s', algorithm,
            row['instances'], row.get('max_ratio_vs_lp', '-'),
            row.get('mean_ratio_vs_lp', '-'))

    broken = [
        (entry['instance'], algorithm)
        for entry in report.entries
        for algorithm, result in sorted(entry['algorithms'].items())
        if result.get('valid') is False or result.get('failed_checks')
    ]
    if broken:
        for name, algorithm in broken:
            logger.error('%s on %s broke a certified bound', algorithm, name)
        return EXIT_CONSISTENCY
    return EXIT_OK


def _verify_tour(instance, path):
    document = read_json(path)
    tour = load_tour(document, instance.costs)
    problems = []
    if 'cost' in document and Fraction(str(document['cost'])) != tour.cost:
        problems.append('stated cost {} differs from recomputed {}'.format(
            document['cost'], tour.cost))
    if not tour_valid(instance, tour):
        problems.extend(tour.problems(instance.costs) or [
            'ordered vertices are not visited in order'])
    return problems


def _require_ordered(instance):
    if isinstance(instance, ChainInstance):
        raise ParameterError('LP dumps belong to ordered instances')
    instance.require_ordered()


def _verify_lp(instance, path):
    _require_ordered(instance)
    solution = load_solution(read_json(path), instance)
    problems = solution_problems(instance, solution)
    if problems:
        return problems
    total = {}
    for point in solution.strolls:
        for e, value in point.x.items():
            total[e] = total.get(e, Fraction(0)) + value
    problems, _ = held_karp_violations(instance.n, total)
    return problems


def _verify_decomposition(instance, path):
    _require_ordered(instance)
    document = read_json(path)
    if not isinstance(document, dict) or \
            'solution' not in document or 'families' not in document:
        raise ParameterError(
            'decomposition documents need "solution" and "families"')
    solution = load_solution(document['solution'], instance)
    families = tuple(load_family(entry) for entry in document['families'])
    if len(families) != len(solution.strolls):
        return ['expected {} families, got {}'.format(
            len(solution.strolls), len(families))]
    problems = []
    for point, family in zip(solution.strolls, families):
        report = verify_decomposition(point, family)
        problems.extend(
            'stroll {}: {}'.format(point.index, problem)
            for problem in report.problems)
    if not problems:
        problems = ConnectingTreeDistribution(families).problems(
            instance.order, instance.n)
    return problems


def verify(args):
    """Re-check a tour, an LP solution or a decomposition."""
    instance = read_instance(args.instance)
    if args.tour:
        problems = _verify_tour(instance, args.tour)
    elif args.lp:
        problems = _verify_lp(instance, args.lp)
    else:
        problems = _verify_decomposition(instance, args.decomposition)

    if problems:
        for problem in problems:
            print(problem)
        logger.error('Verification failed with %d problems', len(problems))
        return EXIT_FAILURE
    print('OK')
    return EXIT_OK


def history(args):
    """List or remove benchmark runs stored in the results database."""
    with ResultsDB(args.db) as database:
        if args.remove:
            if not args.runs:
                raise ParameterError('name the runs to remove')
            for run in args.runs:
                count = database.delete(run)
                logger.info('Deleted run %r with %d rows', run, count)
            return EXIT_OK
        for run in database.list_runs(args.runs):
            mean = database.mean_ratio(run)
            print('{}: {} results, mean ratio vs LP {}'.format(
                run, database.count(run),
                '-' if mean is None else '{:.10f}'.format(mean)))
    return EXIT_OK


def valid_directory(path):
    """Directory validation."""
    if not os.path.isdir(path):
        raise argparse.ArgumentTypeError(
            '{!r} is not a valid directory'.format(path))

    if not os.access(path, os.R_OK | os.X_OK):
        raise argparse.ArgumentTypeError(
            'not enough permissions to explore {!r}'.format(path))

    return path


def algorithm_list(text):
    """Comma separated algorithm names."""
    algorithms = [name.strip() for name in text.split(',') if name.strip()]
    unknown = [name for name in algorithms if name not in ALGORITHMS]
    if unknown or not algorithms:
        raise argparse.ArgumentTypeError(
            'unknown algorithms {!r}; choose from {}'.format(
                unknown, ', '.join(ALGORITHMS)))
    return algorithms


def chain_sizes(text):
    """Comma separated positive chain lengths."""
    try:
        sizes = [int(size) for size in text.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(
            '{!r} is not a list of chain sizes'.format(text))
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError('chain sizes must be positive')
    return sizes


def configure_logging(log_level):
    """Configure logging based on command line argument.

    :param log_level: Log level passed form the command line
    :type log_level: int

    """
    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)

    # Log to sys.stderr using log level
    # passed through command line
    log_handler = logging.StreamHandler()
    formatter = logging.Formatter('%(levelname)s: %(message)s')
    log_handler.setFormatter(formatter)
    log_handler.setLevel(log_level)
    root_logger.addHandler(log_handler)


def parse_arguments(argv):
    """Parse command line arguments.

    :returns: Parsed arguments
    :rtype: argparse.Namespace

    """
    parser = ArgumentParser(
        description='Approximate Ordered TSP tours with certified bounds.')
    log_levels = ['debug', 'info', 'warning', 'error', 'critical']
    parser.add_argument(
        '-l', '--log-level',
        dest='log_level',
        choices=log_levels,
        default='info',
        help=('Log level. One of {0} or {1} '
              '(%(default)s by default)'
              .format(', '.join(log_levels[:-1]), log_levels[-1])))
    parser.set_defaults(parser=parser)

    subparsers = parser.add_subparsers(help='Subcommands')

    # SOLVE subcommand
    solve_parser = subparsers.add_parser('solve', help=solve.__doc__)
    solve_parser.add_argument('instance', help='Instance document')
    solve_parser.add_argument(
        '--algo', choices=ALGORITHMS, default='derand',
        help='Algorithm (%(default)s by default)')
    solve_parser.add_argument(
        '--seed', type=int, default=None,
        help='Sampling seed; chains derandomize when omitted')
    solve_parser.add_argument(
        '--trials', type=int, default=1,
        help='Seeds tried by approx, starting at --seed')
    solve_parser.add_argument(
        '--json', action='store_true', help='Print a JSON document')
    solve_parser.add_argument('-o', '--output', help='Write the tour here')
    solve_parser.add_argument(
        '--dump-lp', help='Write the stroll LP solution here')
    solve_parser.add_argument(
        '--dump-decomposition', help='Write the tree families here')
    solve_parser.set_defaults(func=solve)

    # GEN subcommand
    gen_parser = subparsers.add_parser('gen', help=gen.__doc__)
    gen_parser.add_argument('--kind', choices=KINDS, default='euclidean')
    gen_parser.add_argument('--n', type=int, required=True)
    constraint = gen_parser.add_mutually_exclusive_group(required=True)
    constraint.add_argument('--k', type=int, help='Number of ordered vertices')
    constraint.add_argument(
        '--chains', type=chain_sizes, help='Chain sizes, e.g. 2,3,1')
    gen_parser.add_argument('--seed', type=int, default=0)
    gen_parser.add_argument(
        '-o', '--output', help='Instance file (.json, .otsp or .tsp)')
    gen_parser.set_defaults(func=gen)

    # BENCH subcommand
    bench_parser = subparsers.add_parser('bench', help=bench.__doc__)
    bench_parser.add_argument('--dir', type=valid_directory, required=True)
    bench_parser.add_argument(
        '--algos', type=algorithm_list, default=list(DEFAULT_ALGORITHMS),
        help='Comma separated algorithms')
    bench_parser.add_argument('--jobs', type=int, default=1)
    bench_parser.add_argument('--seed', type=int, default=0)
    bench_parser.add_argument('-o', '--output', help='Report file (JSON)')
    bench_parser.add_argument('--csv', help='Cost versus LP value as CSV')
    bench_parser.add_argument(
        '--timings', action='store_true',
        help='Add runtimes (the report is then no longer reproducible)')
    bench_parser.add_argument(
        '--run', help='Store the results under this run label')
    bench_parser.add_argument('--db', help='Results database file')
    bench_parser.set_defaults(func=bench)

    # VERIFY subcommand
    verify_parser = subparsers.add_parser('verify', help=verify.__doc__)
    verify_parser.add_argument('instance', help='Instance document')
    checked = verify_parser.add_mutually_exclusive_group(required=True)
    checked.add_argument('--tour', help='Tour document')
    checked.add_argument('--lp', help='Stroll LP solution document')
    checked.add_argument('--decomposition', help='Decomposition document')
    verify_parser.set_defaults(func=verify)

    # HISTORY subcommand
    history_parser = subparsers.add_parser('history', help=history.__doc__)
    history_parser.add_argument(
        'runs', nargs='*',
        help='Runs to be listed (if omitted, all runs will be listed).')
    history_parser.add_argument(
        '--remove', action='store_true', help='Remove the named runs')
    history_parser.add_argument('--db', help='Results database file')
    history_parser.set_defaults(func=history)

    args = parser.parse_args(argv)
    args.log_level = getattr(logging, args.log_level.upper())
    return args


if __name__ == '__main__':
    sys.exit(main())
