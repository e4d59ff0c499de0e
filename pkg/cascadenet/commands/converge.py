"""
Converge command: measures how fast compiled V^n phi0 approach the
refinable function and fits a geometric rate.

Usage:
  cascadenet converge --mask d4 --nmax 6 --out d4.csv
"""
from typing import List, Optional

from cascadenet.approx import CSV_HEADER, ConvergenceRun, approximate_phi
from cascadenet.commands.base import BaseCommand, output_stem, write_csv
from cascadenet.conf import RunConfig
from cascadenet.encoders import write_json
from cascadenet.exceptions import ImproperlyConfigured


class Command(BaseCommand):
    help = "Measure E_n for n = 1..nmax and fit the decay rate"
    usage = """
Usage:
    cascadenet converge --mask NAME|PATH --seed hat|hatN|PATH --nmax N --out run.csv

Options:
    --ref-extra K      Extra oracle iterations for the reference (default 4)
    --settings PATH    JSON overlay of library settings

Writes the CSV (n,error,width,depth,params) to --out and the fitted rate
to <out stem>.summary.json.
"""

    async def handle(self, args: List[str]) -> Optional[int]:
        if self.wants_help(args):
            return 0
        config = self.resolve('converge', args)
        if not config.out:
            raise ImproperlyConfigured("converge needs --out.")
        run = await self.run_blocking(self.run, config)
        self.success(f"fitted lambda: {run.fitted_lambda}")
        return 0

    def run(self, config: RunConfig) -> ConvergenceRun:
        mask, seed, label = self.load_inputs(config)
        run = approximate_phi(mask, seed, config.nmax, config.ref_extra, label=label)
        write_csv(config.out, CSV_HEADER, run.to_rows())
        write_json(output_stem(config.out) + '.summary.json', run.summary())
        return run
