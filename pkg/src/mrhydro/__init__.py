"""mrhydro: modeling, analysis and simulation of an MR-clutch + hydrostatic
actuation line (transfer functions, bandwidth/stability analysis, and
time-domain force-control comparisons)."""

from .analysis import (BodeTable, RootLocusTrace, bandwidth_3db, bode,
                       max_stable_gain, root_locus, stability_margins)
from .params import (ActuationLineParams, BlockedLoad, CompliantLoad,
                     ConfigError, HardwareGeometry, JointSpec, LoadImpedance,
                     UnknownKeyError, ValidationError, derive_hydraulic_mass,
                     joint_torque, load_config, save_config)
from .sim import (ConstantWithDisturbance, Controller, ForcePI, LogChirp,
                  Metrics, Mixed, MultisineDisturbance, OpenLoop, PlantState,
                  PressurePI, SimResult, Step, drilling_scenario,
                  estimate_frf, generate_signal, measure_metrics,
                  mixed_reference, plant_derivative, run_simulation, tune_pi)
from .tf import (FrequencyResponse, LineBlocks, Polynomial, RationalTF,
                 evaluate_at_jw, force_response, line_blocks, magnetic_lag,
                 poles, polynomial_roots, pressure_response, unity_feedback,
                 zeros)

__version__ = "0.1.0"
