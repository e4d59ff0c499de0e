"""
Verify command: samples a compiled network against the cascade oracle.

Usage:
  cascadenet verify --net net.json --mask hat --seed hat --n 4
"""
from typing import List, Optional

from cascadenet.commands.base import BaseCommand
from cascadenet.compiler import Report, general_artifact, verify
from cascadenet.conf import RunConfig, settings
from cascadenet.encoders import dumps, write_json
from cascadenet.exceptions import ImproperlyConfigured
from cascadenet.network import ReluNet


class Command(BaseCommand):
    help = "Check a compiled network against the exact oracle V^n g0"
    usage = """
Usage:
    cascadenet verify --net net.json --mask NAME|PATH --seed H|hat|hatN|PATH --n N

Options:
    --grid-step H      Sampling step over [-1, N+1] (default 2^(-n-6))
    --tol T            Allowed max deviation (default 1e-9)
    --depth-heavy      The network was compiled with --depth-heavy
    --out PATH         Also write the report JSON here
    --settings PATH    JSON overlay of library settings

Exit status is 0 when the deviation is within tolerance and the size
bounds hold, 1 otherwise.
"""

    async def handle(self, args: List[str]) -> Optional[int]:
        if self.wants_help(args):
            return 0
        config = self.resolve('verify', args)
        if not config.net:
            raise ImproperlyConfigured("verify needs --net.")
        report = await self.run_blocking(self.run, config)
        print(dumps(report.to_dict()), end='')
        if config.out:
            write_json(config.out, report.to_dict())
        if not report.passed:
            self.error(
                f"Verification failed: max deviation {report.max_dev} (tol {report.tol}), "
                f"bounds {'ok' if report.bounds_ok else 'exceeded'}."
            )
            return 1
        return 0

    def run(self, config: RunConfig) -> Report:
        mask, seed, _ = self.load_inputs(config)
        net = ReluNet.load(config.net)
        assembly = "chained" if config.depth_heavy else "stacked"
        artifact = general_artifact(net, seed, config.n, mask, assembly=assembly)
        step = config.grid_step_for(config.n, settings.GRID_OFFSET)
        return verify(artifact, mask, seed, config.n, step, config.tol)
