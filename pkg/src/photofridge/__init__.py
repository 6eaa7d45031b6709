"""Simulator and thermodynamic audit for a photon-driven double-quantum-dot refrigerator."""

__version__ = "0.1.0"

from .errors import (BracketError, DivergenceError, DomainError, FridgeError,
                     MultipleSteadyStatesError, SolverError, SpecError, SpecMismatchError)
from .model import (DeviceSpec, Generator, QuenchMode, Side, State, bose, build_generator,
                    fermi, lead_rates, photon_rates, quench_rates)
from .steady import Method, SteadyState, residual, solve_steady
from .thermo import (CurrentReport, closed_form_heat, current_report, entropy_production,
                     heat_currents, particle_currents)
from .manifold import (Grid, SweepResult, find_no_charging, intersection_test,
                       no_charging_temperature, sweep)
from .audit import (CoolTrajectory, cooldown_integrate, cv_electron, estimate_zeta,
                    model_heat_law, power_law)
