"""Numerical laboratory for virtual levels of many-body radial models.

The package has four computational layers and a CLI on top:

- :mod:`vlab.geometry` — mass-weighted configuration-space linear algebra,
  cluster projections, collision cones and the aperture ladder.
- :mod:`vlab.cutoffs` — smooth partition-of-unity pairs (radial and cone)
  with certified gradient bounds.
- :mod:`vlab.hardy` — Hardy constants, the one-dimensional three-fermion
  check, decay-rate bounds and the eigenvalue/resonance classifier.
- :mod:`vlab.spectral` — radial finite-difference operators, negative-mode
  counting, critical couplings, zero-energy profiles and decay fits.
- :mod:`vlab.cli` / :mod:`vlab.scenarios` — the ``vlab`` command and the
  config-driven scenario runners behind it.
"""

from .cutoffs import (ConeCutoffPair, RadialCutoffPair, build_cone_cutoff,
                      build_radial_cutoff, verify_cone_bound,
                      verify_radial_bound)
from .geometry import (ApertureLadder, LadderError, LadderRung, MassSystem,
                       build_aperture_ladder, check_cone_separation,
                       check_internal_lower_bound, cone_ratio, in_cone,
                       isotropic_relative, mass_inner, mass_norm,
                       project_cluster_centroid, project_cluster_internal,
                       project_partition, sample_cone_configurations,
                       to_relative)
from .hardy import (angular_hardy_constant, decay_bound, DecayQuery,
                    eigenvalue_or_resonance, hardy_constant,
                    three_fermion_1d_check)
from .partitions import (Partition, all_singletons, count_partitions,
                         iter_partitions, join, merge_clusters, one_cluster,
                         partition_of)
from .scenarios import ConfigError, run_scenario, validate_config
from .spectral import (FitError, RadialProblem, ResolutionError,
                       critical_coupling, fit_decay_exponent,
                       inverse_square_mode_counts, lowest_eigenvalues,
                       make_shape, mode_count_slope, negative_inertia,
                       shooting_critical_coupling, spectral_report,
                       sturm_count_below, sweep_kinetic_defect,
                       zero_energy_solution)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # partitions
    "Partition", "partition_of", "one_cluster", "all_singletons",
    "merge_clusters", "join", "iter_partitions", "count_partitions",
    # geometry
    "MassSystem", "mass_inner", "mass_norm", "to_relative",
    "project_cluster_internal", "project_cluster_centroid",
    "project_partition", "cone_ratio", "in_cone", "isotropic_relative",
    "sample_cone_configurations", "LadderError", "LadderRung",
    "ApertureLadder", "build_aperture_ladder", "check_internal_lower_bound",
    "check_cone_separation",
    # cutoffs
    "RadialCutoffPair", "build_radial_cutoff", "verify_radial_bound",
    "ConeCutoffPair", "build_cone_cutoff", "verify_cone_bound",
    # hardy
    "hardy_constant", "angular_hardy_constant", "three_fermion_1d_check",
    "DecayQuery", "decay_bound", "eigenvalue_or_resonance",
    # spectral
    "make_shape", "RadialProblem", "ResolutionError", "lowest_eigenvalues",
    "negative_inertia", "sturm_count_below", "spectral_report",
    "critical_coupling", "shooting_critical_coupling",
    "zero_energy_solution", "FitError",
    "fit_decay_exponent", "sweep_kinetic_defect",
    "inverse_square_mode_counts", "mode_count_slope",
    # scenarios
    "ConfigError", "validate_config", "run_scenario",
]
