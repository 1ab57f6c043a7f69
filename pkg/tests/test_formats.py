"""Instance document and result dump test cases."""

import json
import os
import shutil
import tempfile
import unittest

from fractions import Fraction

from otsp.decomposition import WeightedTree, WeightedTreeFamily
from otsp.errors import ParseError
from otsp.formats import (
    dump_family,
    dump_solution,
    format_of,
    load_family,
    load_solution,
    load_tour,
    parse_json,
    parse_text,
    rational,
    rational_text,
    read_instance,
    serialize_json,
    write_instance,
    write_json,
)
from otsp.instance import ChainInstance, CostMatrix, Instance
from otsp.relaxation import strolls_from_tour

SQUARE = [[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]]

TEXT_INSTANCE = """\
NAME: tiny
TYPE: OTSP
DIMENSION: 3
EDGE_WEIGHT_TYPE: EXPLICIT
EDGE_WEIGHT_FORMAT: FULL_MATRIX
EDGE_WEIGHT_SECTION
0 1 1
1 0 1
1 1 0
ORDER_SECTION
0 1 2 -1
EOF
"""


class ParseJsonTest(unittest.TestCase):

    """JSON instance documents."""

    def test_order_instance(self):
        """Costs and order are read."""
        instance = parse_json('{"costs": [[0, 3], [3, 0]], "order": [1, 0]}')
        self.assertEqual(instance.costs.cost, ((0, 3), (3, 0)))
        self.assertEqual(tuple(instance.order), (1, 0))
        self.assertEqual(instance.costs.scale, 1)

    def test_chain_instance(self):
        """Chains give a chain instance."""
        instance = parse_json(
            '{"costs": [[0, 1, 1], [1, 0, 1], [1, 1, 0]],'
            ' "chains": [[0, 2], [1]]}')
        self.assertIsInstance(instance, ChainInstance)
        self.assertEqual(instance.chains, ((0, 2), (1,)))

    def test_fraction_without_scale(self):
        """Non-integer costs need a declared scale."""
        with self.assertRaises(ParseError) as context:
            parse_json('{"costs": [[0, 1.5], [1.5, 0]], "order": [0, 1]}')
        self.assertEqual(context.exception.location, 'costs[0][1]')

    def test_fraction_with_scale(self):
        """Declared scales turn fractional costs into integers."""
        instance = parse_json(
            '{"scale": 10, "costs": [[0, 1.5], [1.5, 0]], "order": [0, 1]}')
        self.assertEqual(instance.costs(0, 1), 15)
        self.assertEqual(instance.costs.scale, 10)

    def test_too_fine_for_scale(self):
        """Costs finer than the scale are rejected."""
        with self.assertRaises(ParseError) as context:
            parse_json(
                '{"scale": 10, "costs": [[0, 1.25], [1.25, 0]],'
                ' "order": [0, 1]}')
        self.assertIn('1/10', str(context.exception))

    def test_scale_power_of_ten(self):
        """Scales other than powers of ten are rejected."""
        with self.assertRaises(ParseError):
            parse_json('{"scale": 3, "costs": [[0, 1], [1, 0]]}')

    def test_duplicate_order_vertex(self):
        """Duplicated ordered vertices are reported on the order field."""
        with self.assertRaises(ParseError) as context:
            parse_json(
                '{"costs": [[0, 1, 1], [1, 0, 1], [1, 1, 0]],'
                ' "order": [0, 1, 0]}')
        self.assertIn('twice', str(context.exception))
        self.assertEqual(context.exception.location, 'order')

    def test_asymmetric(self):
        """Asymmetric costs are reported on the costs field."""
        with self.assertRaises(ParseError) as context:
            parse_json('{"costs": [[0, 1], [2, 0]]}')
        self.assertEqual(context.exception.location, 'costs')

    def test_ragged_row(self):
        """Short rows name the row."""
        with self.assertRaises(ParseError) as context:
            parse_json('{"costs": [[0, 1], [1]]}')
        self.assertEqual(context.exception.location, 'costs[1]')

    def test_not_a_number(self):
        """Schema violations name the offending field."""
        with self.assertRaises(ParseError) as context:
            parse_json('{"costs": [[0, "a"], ["a", 0]]}')
        self.assertIn('costs', context.exception.location)

    def test_order_and_chains(self):
        """Order and chains exclude each other."""
        with self.assertRaises(ParseError):
            parse_json(
                '{"costs": [[0, 1], [1, 0]], "order": [0, 1],'
                ' "chains": [[0]]}')

    def test_invalid_json(self):
        """Syntax errors report the line."""
        with self.assertRaises(ParseError) as context:
            parse_json('{"costs": \n[[0, 1], [1, 0]')
        self.assertTrue(context.exception.location.startswith('line'))

    def test_not_an_object(self):
        """Top level must be an object."""
        with self.assertRaises(ParseError):
            parse_json('[1, 2]')

    def test_serialize_scaled(self):
        """Scaled costs are written back in user units."""
        instance = Instance(CostMatrix([[0, 15], [15, 0]], scale=10), (0, 1))
        text = serialize_json(instance)
        self.assertIn('[0, 1.5]', text)
        self.assertEqual(parse_json(text), instance)


class ParseTextTest(unittest.TestCase):

    """TSPLIB-like text documents."""

    def test_order_instance(self):
        """Matrix and order section are read."""
        instance = parse_text(TEXT_INSTANCE)
        self.assertEqual(instance.costs.cost, ((0, 1, 1), (1, 0, 1), (1, 1, 0)))
        self.assertEqual(tuple(instance.order), (0, 1, 2))

    def test_chain_section(self):
        """One chain per line, each ended by -1."""
        text = TEXT_INSTANCE.replace(
            'ORDER_SECTION\n0 1 2 -1', 'CHAIN_SECTION\n0 2 -1\n1 -1')
        instance = parse_text(text)
        self.assertEqual(instance.chains, ((0, 2), (1,)))

    def test_unterminated_chain(self):
        """Chains must end with -1."""
        text = TEXT_INSTANCE.replace(
            'ORDER_SECTION\n0 1 2 -1', 'CHAIN_SECTION\n0 2')
        with self.assertRaises(ParseError) as context:
            parse_text(text)
        self.assertEqual(context.exception.location, 'line 11')

    def test_missing_dimension(self):
        """DIMENSION is required."""
        with self.assertRaises(ParseError) as context:
            parse_text(TEXT_INSTANCE.replace('DIMENSION: 3\n', ''))
        self.assertEqual(context.exception.location, 'header')

    def test_weight_count(self):
        """The matrix must have n * n entries."""
        with self.assertRaises(ParseError) as context:
            parse_text(TEXT_INSTANCE.replace('1 1 0\n', '1 1\n'))
        self.assertEqual(context.exception.location, 'EDGE_WEIGHT_SECTION')

    def test_invalid_number(self):
        """Bad tokens report their line."""
        with self.assertRaises(ParseError) as context:
            parse_text(TEXT_INSTANCE.replace('1 0 1\n', '1 x 1\n'))
        self.assertEqual(context.exception.location, 'line 8')

    def test_unsupported_weight_type(self):
        """Only explicit matrices are understood."""
        with self.assertRaises(ParseError):
            parse_text(TEXT_INSTANCE.replace('EXPLICIT', 'EUC_2D'))


class FileTest(unittest.TestCase):

    """Reading and writing instance files."""

    def setUp(self):
        """Create temporary directory."""
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        """Remove temporary directory."""
        shutil.rmtree(self.directory)

    def test_format_of(self):
        """Extensions select the format."""
        self.assertEqual(format_of('a.json'), 'json')
        self.assertEqual(format_of('a.OTSP'), 'json')
        self.assertEqual(format_of('a.tsp'), 'text')
        with self.assertRaises(ParseError):
            format_of('a.csv')

    def test_text_file(self):
        """Instances written as text read back equal."""
        instance = Instance(CostMatrix(SQUARE), (0, 2, 3))
        path = os.path.join(self.directory, 'square.tsp')
        write_instance(instance, path)
        self.assertEqual(read_instance(path), instance)

    def test_missing_file(self):
        """Unreadable files are parse errors."""
        with self.assertRaises(ParseError):
            read_instance(os.path.join(self.directory, 'missing.json'))

    def test_error_names_file(self):
        """Errors are prefixed with the file name."""
        path = os.path.join(self.directory, 'bad.json')
        with open(path, 'w') as file_:
            file_.write('{"costs": [[0, 1], [2, 0]]}')
        with self.assertRaises(ParseError) as context:
            read_instance(path)
        self.assertTrue(str(context.exception).startswith('bad.json: '))

    def test_error_keeps_location(self):
        """File errors keep the location found by the parser."""
        path = os.path.join(self.directory, 'scaled.json')
        with open(path, 'w') as file_:
            file_.write('{"costs": [[0, 1.5], [1.5, 0]], "order": [0, 1]}')
        with self.assertRaises(ParseError) as context:
            read_instance(path)
        self.assertEqual(context.exception.location, 'costs[0][1]')
        self.assertEqual(
            str(context.exception).count('(at costs[0][1])'), 1)

    def test_write_json(self):
        """JSON output is sorted and newline terminated."""
        path = os.path.join(self.directory, 'out.json')
        text = write_json({'b': 1, 'a': [1, 2]}, path)
        self.assertTrue(text.endswith('}\n'))
        self.assertLess(text.index('"a"'), text.index('"b"'))
        with open(path) as file_:
            self.assertEqual(file_.read(), text)


class ResultDocumentTest(unittest.TestCase):

    """LP solutions, tree families and tours."""

    def setUp(self):
        """Square instance with the tour around its border."""
        self.instance = Instance(CostMatrix(SQUARE), (0, 1, 2, 3))

    def test_rational(self):
        """Rationals are written and read as p/q."""
        self.assertEqual(rational_text(Fraction(6, 4)), '3/2')
        self.assertEqual(rational_text(2), '2/1')
        self.assertEqual(rational('3/2'), Fraction(3, 2))
        with self.assertRaises(ParseError) as context:
            rational('1/0', 'objective')
        self.assertEqual(context.exception.location, 'objective')

    def test_solution(self):
        """Dumped solutions load back for the same instance."""
        solution = strolls_from_tour(self.instance, [0, 1, 2, 3])
        document = json.loads(write_json(dump_solution(solution)))
        self.assertEqual(document['objective'], '4/1')
        self.assertEqual(load_solution(document, self.instance), solution)

    def test_solution_bad_edge(self):
        """Edges outside the instance are rejected."""
        document = {
            'objective': '1/1',
            'strolls': [{'i': 0, 'x': [[0, 9, '1/1']]}],
        }
        with self.assertRaises(ParseError) as context:
            load_solution(document, self.instance)
        self.assertEqual(context.exception.location, 'strolls[0].x[0]')

    def test_solution_bad_index(self):
        """Stroll indices must be below k."""
        document = {'objective': '1/1', 'strolls': [{'i': 4, 'x': []}]}
        with self.assertRaises(ParseError):
            load_solution(document, self.instance)

    def test_family(self):
        """Dumped families load back."""
        family = WeightedTreeFamily(0, 2, (
            WeightedTree(frozenset({(0, 1), (1, 2)}), Fraction(1, 3)),
            WeightedTree(frozenset({(0, 2)}), Fraction(2, 3)),
        ), 1)
        document = dump_family(family)
        self.assertEqual(document['trees'][0]['mu'], '1/3')
        self.assertEqual(load_family(document), family)

    def test_family_bad_weight(self):
        """Bad weights name the tree."""
        document = {
            's': 0, 't': 1,
            'trees': [{'mu': 'half', 'edges': [[0, 1]]}],
        }
        with self.assertRaises(ParseError) as context:
            load_family(document)
        self.assertEqual(context.exception.location, 'trees[0].mu')

    def test_tour_cost_recomputed(self):
        """Stored tour costs are ignored."""
        tour = load_tour({'cycle': [0, 1, 2, 3], 'cost': 99},
                         self.instance.costs)
        self.assertEqual(tour.cost, 4)

    def test_tour_vertex_out_of_range(self):
        """Unknown vertices are reported with their position."""
        with self.assertRaises(ParseError) as context:
            load_tour({'cycle': [0, 1, 7]}, self.instance.costs)
        self.assertEqual(context.exception.location, 'cycle[2]')
