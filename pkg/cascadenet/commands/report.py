"""
Report command: sizes of compiled V^n g0 networks for n = 1..nmax next to
their declared bounds, as CSV.

Usage:
  cascadenet report --mask bspline3 --seed hatN --nmax 4
"""
from typing import Any, Dict, List, Optional

from cascadenet.commands.base import BaseCommand, csv_text, write_csv
from cascadenet.compiler import size_table
from cascadenet.conf import RunConfig

COLUMNS = ("n", "width", "depth", "params", "width_bound", "depth_bound", "bounds_ok")


class Command(BaseCommand):
    help = "Tabulate network sizes against the declared bounds"
    usage = """
Usage:
    cascadenet report --mask NAME|PATH --seed H|hat|hatN|PATH --nmax N [--out sizes.csv]

Options:
    --settings PATH    JSON overlay of library settings

Prints the table when --out is not given. Exit status is 1 if any row
exceeds its bounds.
"""

    async def handle(self, args: List[str]) -> Optional[int]:
        if self.wants_help(args):
            return 0
        config = self.resolve('report', args)
        rows = await self.run_blocking(self.run, config)
        if not config.out:
            print(csv_text(COLUMNS, [[row[c] for c in COLUMNS] for row in rows]), end='')
        if not all(row["bounds_ok"] for row in rows):
            self.error("Some networks exceed their declared bounds.")
            return 1
        return 0

    def run(self, config: RunConfig) -> List[Dict[str, Any]]:
        mask, seed, _ = self.load_inputs(config)
        assembly = "chained" if config.depth_heavy else "stacked"
        rows = size_table(seed, mask, range(1, config.nmax + 1), assembly=assembly)
        if config.out:
            write_csv(config.out, COLUMNS, [[row[c] for c in COLUMNS] for row in rows])
        return rows
