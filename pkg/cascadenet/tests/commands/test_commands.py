import csv
import io
import json
import os
import shutil
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

import cascadenet.cli as cli
from cascadenet.commands import compile as cmd_compile
from cascadenet.commands import converge as cmd_converge
from cascadenet.commands import report as cmd_report
from cascadenet.commands import verify as cmd_verify
from cascadenet.conf import DEFAULTS, settings
from cascadenet.exceptions import ImproperlyConfigured


class TestCommands(unittest.IsolatedAsyncioTestCase):
    def setUp(self):
        self.cwd = os.getcwd()
        self.tmpdir = tempfile.mkdtemp(prefix="cascadenet_cmds_")
        os.chdir(self.tmpdir)

    def tearDown(self):
        settings.configure()
        os.chdir(self.cwd)
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    async def run_command(self, command, args):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = await command.handle(args)
        return code, out.getvalue(), err.getvalue()

    async def test_discover_commands(self):
        cmds = cli.discover_commands()
        for name in ('compile', 'verify', 'converge', 'report', 'test'):
            self.assertIn(name, cmds)
        self.assertNotIn('base', cmds)

    async def test_compile_then_verify(self):
        code, out, _ = await self.run_command(cmd_compile.Command(), [
            "--mask", "hat", "--seed", "hat", "--n", "2", "--out", "net.json",
        ])
        self.assertEqual(code, 0)
        self.assertIn("net.json", out)
        self.assertTrue(os.path.isfile("net.json"))
        with open("net.report.json") as fh:
            report = json.load(fh)
        self.assertTrue(report["bounds_ok"])
        self.assertEqual(report["stage"], "general_Vng")
        self.assertEqual(report["n"], 2)

        code, out, _ = await self.run_command(cmd_verify.Command(), [
            "--net", "net.json", "--mask", "hat", "--seed", "hat", "--n", "2",
            "--out", "verify.json",
        ])
        self.assertEqual(code, 0)
        printed = json.loads(out)
        self.assertTrue(printed["passed"])
        with open("verify.json") as fh:
            self.assertEqual(json.load(fh), printed)

    async def test_compile_is_deterministic(self):
        args = ["--mask", "bspline3", "--seed", "hatN", "--n", "1"]
        await self.run_command(cmd_compile.Command(), args + ["--out", "a.json"])
        await self.run_command(cmd_compile.Command(), args + ["--out", "b.json"])
        with open("a.json", "rb") as a, open("b.json", "rb") as b:
            self.assertEqual(a.read(), b.read())

    async def test_converge_is_deterministic(self):
        args = ["--mask", "bspline3", "--seed", "hatN", "--nmax", "2", "--ref-extra", "1"]
        await self.run_command(cmd_converge.Command(), args + ["--out", "a.csv"])
        await self.run_command(cmd_converge.Command(), args + ["--out", "b.csv"])
        for first, second in (("a.csv", "b.csv"), ("a.summary.json", "b.summary.json")):
            with open(first, "rb") as a, open(second, "rb") as b:
                self.assertEqual(a.read(), b.read())

    async def test_settings_file_sets_default_tolerance(self):
        with open("settings.json", "w") as fh:
            json.dump({"TOL": 1e-6}, fh)
        await self.run_command(cmd_compile.Command(), [
            "--mask", "hat", "--seed", "hat", "--n", "1", "--out", "net.json",
        ])
        args = ["--net", "net.json", "--mask", "hat", "--seed", "hat", "--n", "1"]
        code, out, _ = await self.run_command(
            cmd_verify.Command(), args + ["--settings", "settings.json"],
        )
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)["tol"], 1e-6)
        code, out, _ = await self.run_command(cmd_verify.Command(), args)
        self.assertEqual(json.loads(out)["tol"], DEFAULTS["TOL"])
        with self.assertRaises(ImproperlyConfigured):
            await self.run_command(cmd_verify.Command(), args + ["--settings", "missing.json"])

    async def test_verify_reports_mismatch(self):
        await self.run_command(cmd_compile.Command(), [
            "--mask", "bspline3", "--seed", "hatN", "--n", "1", "--out", "net.json",
        ])
        code, out, err = await self.run_command(cmd_verify.Command(), [
            "--net", "net.json", "--mask", "bspline3", "--seed", "hatN", "--n", "2",
        ])
        self.assertEqual(code, 1)
        self.assertFalse(json.loads(out)["passed"])
        self.assertIn("Verification failed", err)

    async def test_chained_compile_with_config_file(self):
        with open("run.json", "w") as fh:
            json.dump({"mask": "hat", "seed": "H", "n": 2}, fh)
        code, _, _ = await self.run_command(cmd_compile.Command(), [
            "--config", "run.json", "--depth-heavy", "--tight-M", "--out", "net.json",
        ])
        self.assertEqual(code, 0)
        code, _, _ = await self.run_command(cmd_verify.Command(), [
            "--config", "run.json", "--depth-heavy", "--net", "net.json",
        ])
        self.assertEqual(code, 0)

    async def test_argument_errors(self):
        with self.assertRaises(ImproperlyConfigured):
            await self.run_command(cmd_compile.Command(), ["--mask", "hat", "--n", "2"])
        with self.assertRaises(ImproperlyConfigured):
            await self.run_command(cmd_compile.Command(), ["--bogus"])
        with self.assertRaises(ImproperlyConfigured):
            await self.run_command(cmd_compile.Command(), ["--n", "two", "--out", "x.json"])
        with self.assertRaises(ImproperlyConfigured):
            await self.run_command(cmd_verify.Command(), ["--n", "2"])
        with self.assertRaises(ImproperlyConfigured):
            await self.run_command(cmd_converge.Command(), ["--nmax", "2"])

    async def test_help_does_not_run(self):
        code, out, _ = await self.run_command(cmd_compile.Command(), ["--help"])
        self.assertEqual(code, 0)
        self.assertIn("Usage:", out)
        self.assertFalse(os.path.exists("--help"))

    async def test_converge_writes_csv_and_summary(self):
        code, out, _ = await self.run_command(cmd_converge.Command(), [
            "--mask", "bspline3", "--seed", "hatN", "--nmax", "2", "--ref-extra", "1",
            "--out", "conv.csv",
        ])
        self.assertEqual(code, 0)
        self.assertIn("fitted lambda", out)
        with open("conv.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        self.assertEqual(rows[0], ["n", "error", "width", "depth", "params"])
        self.assertEqual([row[0] for row in rows[1:]], ["1", "2"])
        with open("conv.summary.json") as fh:
            summary = json.load(fh)
        self.assertIn("fitted_lambda", summary)
        self.assertEqual(summary["n_max"], 2)

    async def test_report_table(self):
        code, _, _ = await self.run_command(cmd_report.Command(), [
            "--mask", "hat", "--seed", "hat", "--nmax", "2", "--out", "sizes.csv",
        ])
        self.assertEqual(code, 0)
        with open("sizes.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        self.assertEqual(rows[0], list(cmd_report.COLUMNS))
        self.assertEqual(len(rows), 3)
        self.assertTrue(all(row[-1] == "True" for row in rows[1:]))

        code, out, _ = await self.run_command(cmd_report.Command(), [
            "--mask", "hat", "--seed", "hat", "--nmax", "1",
        ])
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith("n,width,depth"))


class TestMain(unittest.TestCase):
    def setUp(self):
        self.cwd = os.getcwd()
        self.tmpdir = tempfile.mkdtemp(prefix="cascadenet_main_")
        os.chdir(self.tmpdir)

    def tearDown(self):
        os.chdir(self.cwd)
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def main(self, argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = cli.main(argv)
        return code, out.getvalue(), err.getvalue()

    def test_help_lists_commands(self):
        code, out, _ = self.main([])
        self.assertEqual(code, 0)
        self.assertIn("compile", out)
        self.assertIn("verify", out)

    def test_unknown_command(self):
        code, _, err = self.main(["frobnicate"])
        self.assertEqual(code, 2)
        self.assertIn("Unknown command", err)

    def test_invalid_input_exits_with_two(self):
        code, _, err = self.main(["compile", "--mask", "nosuchmask", "--n", "1", "--out", "n.json"])
        self.assertEqual(code, 2)
        self.assertIn("Error:", err)
        code, _, _ = self.main(["compile", "--n", "0", "--out", "n.json"])
        self.assertEqual(code, 2)
        code, _, _ = self.main(["verify", "--net", "missing.json", "--n", "1"])
        self.assertEqual(code, 2)

    def test_round_trip_exit_codes(self):
        code, _, _ = self.main(["compile", "--mask", "hat", "--seed", "H", "--n", "1",
                                "--out", "net.json"])
        self.assertEqual(code, 0)
        code, _, _ = self.main(["verify", "--mask", "hat", "--seed", "H", "--n", "1",
                                "--net", "net.json"])
        self.assertEqual(code, 0)
