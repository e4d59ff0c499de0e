"""
Compile command: builds the ReLU network for V^n g0 and writes it as JSON.

Usage:
  cascadenet compile --mask hat --seed hat --n 4 --out net.json
"""
from typing import Any, Dict, List, Optional

from cascadenet.commands.base import BaseCommand, output_stem
from cascadenet.compiler import compile_Vng
from cascadenet.conf import RunConfig
from cascadenet.encoders import write_json
from cascadenet.exceptions import ImproperlyConfigured, InvariantError


class Command(BaseCommand):
    help = "Compile V^n g0 into an explicit ReLU network"
    usage = """
Usage:
    cascadenet compile --mask NAME|PATH --seed H|hat|hatN|PATH --n N --out net.json

Options:
    --tight-M          Use the trajectory-based product bound
    --depth-heavy      Chain the coordinate networks instead of stacking them
    --config PATH      JSON file with defaults for any of the flags
    --settings PATH    JSON overlay of library settings (TOL, REF_EXTRA, ...)
    -v, --verbosity N  0=warnings, 1=info, 2=debug (stderr)

Writes the network to --out and its size report to <out stem>.report.json.
"""

    async def handle(self, args: List[str]) -> Optional[int]:
        if self.wants_help(args):
            return 0
        config = self.resolve('compile', args)
        if not config.out:
            raise ImproperlyConfigured("compile needs --out.")
        report = await self.run_blocking(self.run, config)
        self.success(
            f"Compiled V^{config.n} g: width {report['width']}, depth {report['depth']}, "
            f"params {report['params']} -> {config.out}"
        )
        return 0

    def run(self, config: RunConfig) -> Dict[str, Any]:
        mask, seed, label = self.load_inputs(config)
        assembly = "chained" if config.depth_heavy else "stacked"
        artifact = compile_Vng(seed, config.n, mask, assembly=assembly, tight_m=config.tight_m)
        report = {
            "mask": mask.name or config.mask,
            "seed": label,
            "n": config.n,
        }
        report.update(artifact.size_dict())
        if not artifact.bounds_ok():
            raise InvariantError(
                f"Compiled network exceeds its declared size: width {artifact.net.width} > "
                f"{artifact.width_bound} or depth {artifact.net.depth} > {artifact.depth_bound}."
            )
        artifact.net.save(config.out)
        write_json(output_stem(config.out) + '.report.json', report)
        return report
