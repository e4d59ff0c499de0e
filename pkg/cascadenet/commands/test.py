"""
Test command for running the cascadenet test suite.

Supports:
- Dotted names or file paths for specific tests
- --failfast to stop on first failure
- --verbosity levels (0, 1, 2)
- -k pattern matching
- Coverage reporting
"""
import fnmatch
import os
import re
import sys
import unittest
from io import StringIO
from typing import List, Optional

from cascadenet.commands.base import BaseCommand

TEST_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "tests")


class Command(BaseCommand):
    help = "Run the cascadenet tests"
    usage = """
Usage:
    cascadenet test                                   # Run all tests
    cascadenet test cascadenet.tests.test_gadgets     # Run one module
    cascadenet test cascadenet/tests/test_cpwl.py     # Run one file

Options:
    -v, --verbosity N   Verbosity level (0=minimal, 1=normal, 2=verbose)
    --failfast          Stop on first failure
    -k PATTERN          Only run tests matching pattern
    --cov, --coverage   Enable coverage reporting
    -q, --quiet         Quiet output (same as -v 0)
"""

    def _filter_suite_by_pattern(self, suite: unittest.TestSuite,
                                 pattern: str) -> unittest.TestSuite:
        """Filter test suite by pattern (-k option)."""
        filtered = unittest.TestSuite()

        for test in suite:
            if isinstance(test, unittest.TestSuite):
                filtered.addTests(self._filter_suite_by_pattern(test, pattern))
            else:
                test_name = str(test)
                if fnmatch.fnmatch(test_name, f"*{pattern}*") or re.search(pattern, test_name):
                    filtered.addTest(test)

        return filtered

    def build_suite(self, targets: List[str]) -> unittest.TestSuite:
        loader = unittest.TestLoader()
        if not targets:
            top_level = os.path.dirname(os.path.dirname(TEST_DIR))
            return loader.discover(TEST_DIR, pattern="test_*.py", top_level_dir=top_level)

        suite = unittest.TestSuite()
        for target in targets:
            if target.endswith(".py"):
                target = target[:-3].lstrip("./").replace(os.sep, ".")
            suite.addTests(loader.loadTestsFromName(target))
        return suite

    async def handle(self, args: List[str]) -> Optional[int]:
        if self.wants_help(args):
            return 0

        verbosity = 1
        failfast = False
        pattern = None
        use_coverage = False
        targets: List[str] = []

        i = 0
        while i < len(args):
            arg = args[i]
            if arg in ("-v", "--verbosity"):
                if i + 1 < len(args):
                    try:
                        verbosity = int(args[i + 1])
                    except ValueError:
                        self.error(f"Invalid verbosity '{args[i + 1]}'")
                        return 2
                    i += 1
            elif arg in ("-q", "--quiet"):
                verbosity = 0
            elif arg == "--failfast":
                failfast = True
            elif arg == "-k":
                if i + 1 < len(args):
                    pattern = args[i + 1]
                    i += 1
            elif arg in ("--cov", "--coverage"):
                use_coverage = True
            elif not arg.startswith("-"):
                targets.append(arg)
            i += 1

        cov = None
        if use_coverage or os.getenv('COVERAGE', 'false').lower() == 'true':
            try:
                import coverage
                cov = coverage.Coverage(source=["cascadenet"], branch=True)
                cov.start()
            except Exception as e:
                if verbosity > 0:
                    self.warning(f"coverage not started: {e}")

        try:
            suite = self.build_suite(targets)
            if pattern:
                suite = self._filter_suite_by_pattern(suite, pattern)

            count = suite.countTestCases()
            if count == 0:
                print("No tests found.")
                return 0
            if verbosity > 0:
                print(f"Running {count} test(s)...")
                if pattern:
                    print(f"  Pattern: {pattern}")

            stream = sys.stderr if verbosity > 0 else StringIO()
            runner = unittest.TextTestRunner(
                verbosity=verbosity,
                stream=stream,
                buffer=False,
                failfast=failfast,
            )
            result = await self.run_blocking(runner.run, suite)
            return 0 if result.wasSuccessful() else 1
        finally:
            if cov is not None:
                cov.stop()
                cov.save()
                if verbosity > 0:
                    cov.report()
