from .equilibrium import SolveOptions, run, verify_nash  # noqa
from .scenario import load_scenario, replica_scenario  # noqa

version = '0.1.0'
