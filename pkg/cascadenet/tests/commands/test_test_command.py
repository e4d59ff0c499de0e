import io
import unittest
from contextlib import redirect_stderr, redirect_stdout

from cascadenet.commands import test as cmd_test


class TestTestCommand(unittest.IsolatedAsyncioTestCase):
    async def test_help(self):
        out = io.StringIO()
        with redirect_stdout(out):
            code = await cmd_test.Command().handle(["--help"])
        self.assertEqual(code, 0)
        self.assertIn("--failfast", out.getvalue())

    def test_build_suite_from_dotted_name(self):
        suite = cmd_test.Command().build_suite(["cascadenet.tests.test_masks"])
        self.assertGreater(suite.countTestCases(), 0)

    def test_build_suite_from_path(self):
        suite = cmd_test.Command().build_suite(["cascadenet/tests/test_masks.py"])
        self.assertGreater(suite.countTestCases(), 0)

    def test_pattern_filter(self):
        command = cmd_test.Command()
        suite = command.build_suite(["cascadenet.tests.test_masks"])
        filtered = command._filter_suite_by_pattern(suite, "wavelet_combo")
        self.assertEqual(filtered.countTestCases(), 1)

    async def test_bad_verbosity(self):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out):
            with redirect_stderr(err):
                code = await cmd_test.Command().handle(["-v", "loud"])
        self.assertEqual(code, 2)
