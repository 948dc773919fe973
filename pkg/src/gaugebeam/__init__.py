"""Light-induced effective gauge fields for dark-state atoms in shaped laser beams."""

__version__ = "0.1.0"

from .adiabatic import AdiabaticReport, adiabatic_report, doppler_term
from .bessel import bessel_j
from .design import DesignResult, design_intensity_ratio
from .electronic import (ElectronicHamiltonian, TrapPotentials, bright_state, dark_state, eigensystem,
                         hamiltonian_matrix, mixing_angle)
from .errors import (ConfigError, DegenerateSystemError, DomainError, FeasibilityError, GaugeBeamError,
                     ParameterError, PoleError, StepperError)
from .fields import (NATURAL, BeamPair, BeamSpec, Grid, PhysicalConstants, SampledField, ZetaField,
                     sample_on_grid, zeta_at)
from .gauge import (GaugeFields, coupling_matrices, flux, gauge_fields, geometric_scalar, magnetic_field,
                    numeric_curl, phi_from_couplings, vector_potential)
from .scenarios import DerivedQuantities, Scenario, make_scenario, monopole_beam_intensities
from .dynamics import (LatticeHamiltonian, Observables, WavePacketState, build_lattice, evolve,
                       gauge_transform, gaussian_packet, observables, step)
