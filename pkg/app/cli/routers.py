import argparse

from app.cli import experiments as experiments_module
from app.schemas.config import EXPERIMENT_KINDS

HELP = {
    'goe-factor': 'Return vs cross probability enhancement in GOE matrices',
    'gue-factor': 'Return vs cross probability enhancement in GUE matrices',
    'model-a-sweep': 'Block enhancement ratio of Model A against N_beta',
    'model-b-sweep': 'Block enhancement ratio of Model B against lambda',
    'saturation': 'Saturation of N(t) and 1/IPR(t) in a block model',
    'stadium': 'Wavepacket long-time density in the Bunimovich stadium',
    'spectral-characterization': 'Staircase, density of states, spacings and in-out ratios',
    'qb-prediction': 'Short-time corrected prediction of the joint probability',
}


def router(parser: argparse.ArgumentParser):
    """Registers one subcommand per experiment kind plus a generic `run`."""
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    subparsers.required = True
    for kind in EXPERIMENT_KINDS:
        sub = subparsers.add_parser(kind, help=HELP[kind])
        experiments_module.add_run_options(sub)
        sub.set_defaults(handler=experiments_module.execute, kind=kind)
    generic = subparsers.add_parser('run', help='Run the experiment named by the config file')
    experiments_module.add_run_options(generic)
    generic.set_defaults(handler=experiments_module.execute, kind=None)


__all__ = ['router']
