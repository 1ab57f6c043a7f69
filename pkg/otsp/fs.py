"""Filesystem functionality."""

import logging
import os

from otsp.formats import EXTENSIONS

logger = logging.getLogger(__name__)


class InstanceExplorer(object):

    """Look for instance documents in a tree and return them.

    :param directory: Base directory for the tree to be explored.
    :type directory: str
    :param extensions: File extensions recognized as instances
    :type extensions: iterable(str)

    """

    def __init__(self, directory, extensions=None):
        """Initialize tree explorer."""

        # Save absolute path of directory
        if not os.path.isabs(directory):
            directory = os.path.abspath(directory)
        self.directory = directory
        if extensions is None:
            extensions = EXTENSIONS
        self.extensions = frozenset(ext.lower() for ext in extensions)

    def paths(self):
        """Return paths to instance files found under directory.

        :return: Paths to instance files, sorted
        :rtype: list(str)

        """
        paths = self._explore()
        logger.info(
            '%d instance files found under %s',
            len(paths),
            self.directory)

        return paths

    def _explore(self):
        """Walk from base directory and return files that match an extension.

        :returns: Instance files found under directory
        :rtype: list(str)

        """
        paths = []
        for (dirpath, dirnames, filenames) in os.walk(self.directory):
            logger.debug('Exploring %s...', dirpath)
            dirnames.sort()

            for filename in sorted(filenames):
                path = os.path.join(dirpath, filename)
                extension = os.path.splitext(filename)[1].lower()
                if extension not in self.extensions:
                    continue

                # Skip missing files like broken symbolic links
                if not os.path.isfile(path):
                    logger.warning('Unable to access file: %r', path)
                    continue

                if not os.access(path, os.R_OK):
                    logger.warning('Unable to read file: %r', path)
                    continue

                paths.append(path)

        return sorted(paths)
