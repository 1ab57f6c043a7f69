"""Instance documents (JSON and TSPLIB-like text) and result dumps."""

import json
import logging

from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path

from voluptuous import (
    All,
    Any,
    Exclusive,
    Invalid,
    Length,
    MultipleInvalid,
    Optional,
    Range,
    Required,
    Schema,
)

from otsp.decomposition import WeightedTree, WeightedTreeFamily
from otsp.errors import ParameterError, ParseError
from otsp.instance import (
    ChainInstance, CostMatrix, Instance, OrderConstraint, Tour)
from otsp.relaxation import RelaxationSolution, StrollPoint, edge

logger = logging.getLogger(__name__)

# File extensions of instance documents, by format
EXTENSIONS = {
    '.json': 'json',
    '.otsp': 'json',
    '.tsp': 'text',
}

NUMBER = Any(int, Decimal, msg='expected a number')
VERTEX = All(int, Range(min=0))


def power_of_ten(value):
    """Validate that ``value`` is 1, 10, 100, ..."""
    text = str(value)
    if text != '1' + '0' * (len(text) - 1):
        raise Invalid('scale must be a power of ten')
    return value


INSTANCE_SCHEMA = Schema({
    Optional('name'): str,
    Optional('scale'): All(int, Range(min=1), power_of_ten),
    Required('costs'): All([[NUMBER]], Length(min=1)),
    Exclusive('order', 'constraint'): [VERTEX],
    Exclusive('chains', 'constraint'): All([[VERTEX]], Length(min=1)),
})

FAMILY_SCHEMA = Schema({
    Required('s'): VERTEX,
    Required('t'): VERTEX,
    Optional('i'): Any(None, VERTEX),
    Required('trees'): [{
        Required('mu'): str,
        Required('edges'): [All([VERTEX], Length(min=2, max=2))],
    }],
})

SOLUTION_SCHEMA = Schema({
    Required('objective'): str,
    Required('strolls'): [{
        Required('i'): VERTEX,
        Required('x'): [All(list, Length(min=3, max=3))],
        Optional('y'): list,
    }],
}, extra=True)

TOUR_SCHEMA = Schema({
    Required('cycle'): [VERTEX],
    Optional('cost'): NUMBER,
}, extra=True)


def _path(error):
    location = ''
    for key in error.path:
        location += '[{}]'.format(key) if isinstance(key, int) else \
            ('.' if location else '') + str(key)
    return location or None


def _validate(schema, document):
    try:
        return schema(document)
    except MultipleInvalid as errors:
        error = errors.errors[0]
        raise ParseError(error.error_message, _path(error))
    except Invalid as error:
        raise ParseError(error.error_message, _path(error))


def rational(text, location=None):
    """Parse a ``p/q`` string into a fraction."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError, TypeError):
        raise ParseError('invalid rational {!r}'.format(text), location)


def rational_text(value):
    """Render a fraction as ``p/q``."""
    value = Fraction(value)
    return '{}/{}'.format(value.numerator, value.denominator)


def _scaled(value, scale, declared, location):
    scaled = Decimal(value) * scale
    if scaled != scaled.to_integral_value():
        if not declared:
            raise ParseError(
                'non-integer cost {} without a declared scale'.format(value),
                location)
        raise ParseError(
            'cost {} is not a multiple of 1/{}'.format(value, scale), location)
    return int(scaled)


def _build(costs, scale, order=None, chains=None, location='order'):
    try:
        matrix = CostMatrix(costs, scale=scale)
    except ParameterError as error:
        raise ParseError(str(error), 'costs')
    try:
        if chains is not None:
            return ChainInstance(matrix, chains)
        return Instance(matrix, OrderConstraint(order or ()))
    except ParameterError as error:
        raise ParseError(str(error), location)


def load_document(document):
    """Build an instance from a decoded JSON document.

    Costs are given in user units and multiplied by ``scale``.

    :param document: Decoded JSON with numbers as ``int`` or ``Decimal``
    :type document: dict
    :rtype: Instance | ChainInstance
    :raises ParseError: On malformed fields, naming their path

    """
    document = _validate(INSTANCE_SCHEMA, document)
    declared = 'scale' in document
    scale = document.get('scale', 1)
    costs = document['costs']
    rows = []
    for u, row in enumerate(costs):
        if len(row) != len(costs):
            raise ParseError('row has {} entries, expected {}'.format(
                len(row), len(costs)), 'costs[{}]'.format(u))
        rows.append([
            _scaled(value, scale, declared, 'costs[{}][{}]'.format(u, v))
            for v, value in enumerate(row)
        ])
    if 'chains' in document:
        return _build(rows, scale, chains=document['chains'], location='chains')
    return _build(rows, scale, order=document.get('order', ()))


def _user_value(cost, scale):
    value = Fraction(cost, scale)
    if value.denominator == 1:
        return value.numerator
    sign, digits, _ = Decimal(cost).as_tuple()
    return Decimal((sign, digits, 1 - len(str(scale))))


def dump_document(instance):
    """Inverse of :func:`load_document`."""
    scale = instance.costs.scale
    document = {
        'scale': scale,
        'costs': [
            [_user_value(cost, scale) for cost in row]
            for row in instance.costs.cost
        ],
    }
    if isinstance(instance, ChainInstance):
        document['chains'] = [list(chain) for chain in instance.chains]
    else:
        document['order'] = list(instance.order)
    return document


class _DecimalEncoder(json.JSONEncoder):

    def default(self, o):
        if isinstance(o, Decimal):
            return float(o)
        return super().default(o)


def _json_text(document):
    """Serialize with one matrix row per line."""
    parts = ['{']
    items = list(document.items())
    for index, (key, value) in enumerate(items):
        comma = ',' if index < len(items) - 1 else ''
        if key in ('costs', 'chains') and value:
            rows = ',\n'.join(
                '    ' + _dumps_row(row) for row in value)
            parts.append('  "{}": [\n{}\n  ]{}'.format(key, rows, comma))
        else:
            parts.append('  "{}": {}{}'.format(
                key, json.dumps(value, cls=_DecimalEncoder), comma))
    parts.append('}')
    return '\n'.join(parts) + '\n'


def _dumps_row(row):
    return '[' + ', '.join(
        str(value) if isinstance(value, Decimal) else json.dumps(value)
        for value in row) + ']'


def parse_json(text):
    """Parse a JSON instance document.

    :raises ParseError: On invalid JSON or schema violations

    """
    try:
        document = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as error:
        raise ParseError(error.msg, 'line {}'.format(error.lineno))
    if not isinstance(document, dict):
        raise ParseError('expected a JSON object', 'line 1')
    return load_document(document)


def serialize_json(instance):
    return _json_text(dump_document(instance))


def parse_text(text):
    """Parse the TSPLIB-like text format.

    Recognized keys are ``NAME``, ``TYPE``, ``COMMENT``, ``DIMENSION``,
    ``SCALE``, ``EDGE_WEIGHT_TYPE`` (``EXPLICIT``) and ``EDGE_WEIGHT_FORMAT``
    (``FULL_MATRIX``); sections are ``EDGE_WEIGHT_SECTION``,
    ``ORDER_SECTION`` and ``CHAIN_SECTION`` (one chain per line, each ended
    by ``-1``).

    :raises ParseError: With the offending line number

    """
    header = {}
    tokens = []
    section = None
    chains = None
    order = None
    for number, line in enumerate(text.splitlines(), 1):
        location = 'line {}'.format(number)
        stripped = line.strip()
        if not stripped:
            continue
        if stripped == 'EOF':
            break
        if stripped in ('EDGE_WEIGHT_SECTION', 'ORDER_SECTION',
                        'CHAIN_SECTION'):
            section = stripped
            if section == 'ORDER_SECTION':
                order = []
            elif section == 'CHAIN_SECTION':
                chains = []
            continue
        if ':' in stripped and section is None:
            key, value = (part.strip() for part in stripped.split(':', 1))
            header[key.upper()] = (value, location)
            continue
        if section is None:
            raise ParseError('unexpected content {!r}'.format(stripped),
                             location)
        try:
            if section == 'EDGE_WEIGHT_SECTION':
                tokens.extend(
                    (Decimal(token), location) for token in stripped.split())
            elif section == 'ORDER_SECTION':
                order.extend(
                    int(token) for token in stripped.split() if token != '-1')
            else:
                values = [int(token) for token in stripped.split()]
                if values[-1] != -1:
                    raise ParseError('chain not terminated by -1', location)
                chains.append(values[:-1])
        except (InvalidOperation, ValueError):
            raise ParseError('invalid number in {!r}'.format(stripped),
                             location)

    for key, expected in (('EDGE_WEIGHT_TYPE', 'EXPLICIT'),
                          ('EDGE_WEIGHT_FORMAT', 'FULL_MATRIX')):
        if key in header and header[key][0] != expected:
            raise ParseError('unsupported {} {}'.format(key, header[key][0]),
                             header[key][1])
    if 'DIMENSION' not in header:
        raise ParseError('missing DIMENSION', 'header')
    try:
        n = int(header['DIMENSION'][0])
        scale = int(header['SCALE'][0]) if 'SCALE' in header else 1
        power_of_ten(scale)
    except (ValueError, Invalid) as error:
        raise ParseError(str(error), 'header')
    if len(tokens) != n * n:
        raise ParseError(
            'expected {} edge weights, found {}'.format(n * n, len(tokens)),
            'EDGE_WEIGHT_SECTION')
    if order is not None and chains is not None:
        raise ParseError('both ORDER_SECTION and CHAIN_SECTION given', 'header')
    if chains is not None and not chains:
        raise ParseError('empty CHAIN_SECTION', 'CHAIN_SECTION')

    rows = []
    for u in range(n):
        row = []
        for v in range(n):
            value, location = tokens[u * n + v]
            row.append(_scaled(value, scale, 'SCALE' in header, location))
        rows.append(row)
    if chains is not None:
        return _build(rows, scale, chains=chains, location='CHAIN_SECTION')
    return _build(rows, scale, order=order, location='ORDER_SECTION')


def serialize_text(instance, name='otsp'):
    scale = instance.costs.scale
    lines = [
        'NAME: {}'.format(name),
        'TYPE: {}'.format(
            'TSPPC' if isinstance(instance, ChainInstance) else 'OTSP'),
        'DIMENSION: {}'.format(instance.n),
        'SCALE: {}'.format(scale),
        'EDGE_WEIGHT_TYPE: EXPLICIT',
        'EDGE_WEIGHT_FORMAT: FULL_MATRIX',
        'EDGE_WEIGHT_SECTION',
    ]
    for row in instance.costs.cost:
        lines.append(' '.join(str(_user_value(cost, scale)) for cost in row))
    if isinstance(instance, ChainInstance):
        lines.append('CHAIN_SECTION')
        for chain in instance.chains:
            lines.append(' '.join(str(v) for v in chain) + ' -1')
    else:
        lines.append('ORDER_SECTION')
        lines.append(' '.join(str(d) for d in instance.order))
    lines.append('EOF')
    return '\n'.join(lines) + '\n'


def format_of(path):
    """Document format implied by the file extension (``json`` or ``text``)."""
    fmt = EXTENSIONS.get(Path(path).suffix.lower())
    if fmt is None:
        raise ParseError('unknown instance extension', str(path))
    return fmt


def read_instance(path):
    """Read an instance document from ``path``.

    :raises ParseError: If the file is unreadable or malformed

    """
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as error:
        raise ParseError(str(error), str(path))
    try:
        if format_of(path) == 'json':
            return parse_json(text)
        return parse_text(text)
    except ParseError as error:
        logger.debug('Failed to parse %s: %s', path, error)
        raise ParseError(
            '{}: {}'.format(path.name, error.message), error.location)


def write_instance(instance, path, fmt=None):
    """Write ``instance`` to ``path`` in ``fmt`` (default: by extension)."""
    path = Path(path)
    fmt = fmt or EXTENSIONS.get(path.suffix.lower(), 'json')
    text = serialize_json(instance) if fmt == 'json' else \
        serialize_text(instance, path.stem)
    path.write_text(text)
    logger.info('Instance written to %s', path)


def dump_solution(solution):
    """Exact stroll LP solution as a JSON-ready document."""
    return {
        'objective': rational_text(solution.objective),
        'rounds': solution.rounds,
        'cuts': solution.cuts,
        'strolls': [
            {
                'i': point.index,
                's': point.s,
                't': point.t,
                'x': [[u, v, rational_text(value)]
                      for (u, v), value in sorted(point.x.items())],
                'y': [[v, rational_text(value)]
                      for v, value in sorted(point.y.items())],
            }
            for point in solution.strolls
        ],
    }


def load_solution(document, instance):
    """Inverse of :func:`dump_solution` for ``instance``.

    :rtype: otsp.relaxation.RelaxationSolution

    """
    document = _validate(SOLUTION_SCHEMA, document)
    strolls = []
    for position, entry in enumerate(document['strolls']):
        i = entry['i']
        if i >= instance.k:
            raise ParseError('stroll index {} out of range'.format(i),
                             'strolls[{}].i'.format(position))
        s, t = instance.order.stroll_ends(i)
        x = {}
        for row, (u, v, value) in enumerate(entry['x']):
            location = 'strolls[{}].x[{}]'.format(position, row)
            if not all(isinstance(w, int) and 0 <= w < instance.n
                       for w in (u, v)) or u == v:
                raise ParseError('invalid edge', location)
            x[edge(u, v)] = rational(value, location)
        strolls.append(StrollPoint(i, s, t, x, instance.n))
    strolls.sort(key=lambda point: point.index)
    return RelaxationSolution(
        tuple(strolls), rational(document['objective'], 'objective'))


def dump_family(family):
    """Tree family as a JSON-ready document."""
    return {
        'i': family.index,
        's': family.s,
        't': family.t,
        'trees': [
            {
                'mu': rational_text(tree.mu),
                'edges': [list(e) for e in sorted(tree.edges)],
            }
            for tree in family.trees
        ],
    }


def load_family(document):
    """Inverse of :func:`dump_family`."""
    document = _validate(FAMILY_SCHEMA, document)
    trees = []
    for position, entry in enumerate(document['trees']):
        location = 'trees[{}].mu'.format(position)
        edges = frozenset(edge(u, v) for u, v in entry['edges'])
        trees.append(WeightedTree(edges, rational(entry['mu'], location)))
    return WeightedTreeFamily(
        document['s'], document['t'], tuple(trees), document.get('i'))


def dump_tour(tour):
    return {'cycle': list(tour.cycle), 'cost': tour.cost}


def load_tour(document, costs):
    """Read a tour document; the cost is always recomputed."""
    document = _validate(TOUR_SCHEMA, document)
    for position, v in enumerate(document['cycle']):
        if v >= costs.n:
            raise ParseError('vertex {} out of range'.format(v),
                             'cycle[{}]'.format(position))
    return Tour.from_cycle(costs, document['cycle'])


def read_json(path):
    """Decode a JSON result document (solution, family or tour)."""
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as error:
        raise ParseError(str(error), str(path))


def write_json(document, path=None):
    """Deterministic JSON text; written to ``path`` when given."""
    text = json.dumps(document, indent=2, sort_keys=True,
                      cls=_DecimalEncoder) + '\n'
    if path is not None:
        Path(path).write_text(text)
    return text

