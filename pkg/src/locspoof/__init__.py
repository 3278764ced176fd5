"""Location-privacy bounds for delay-angle shift precoding in MISO-OFDM localization."""

from .scene import (DEFAULT_C, LocationVector, PathParams, Position2D, Scene, ShiftPair,
                    default_scene, locations_from_params, params_from_locations,
                    pathloss_gains, paths_from_scene, scene_params, shift_params, wrap_interval)
from .waveform import (PilotSet, Precoder, channel_vector, shift_precoder, effective_pilots,
                       noiseless_samples, pilots, received_samples, snr_to_sigma, steering_vector)
from .fisher import (BoundReport, CrbResult, FisherMatrix, crb_bob, efim, fim_channel,
                     location_jacobian, psd_inverse, signal_gradient)
from .mcrb import (ClosedFormBound, KlGrid, McrbResult, PseudoTrueSolution, closed_form_bound,
                   generalized_fims, kl_pseudo_true_search, mcrb, pseudo_true_locations)
from .design import (AveragedBound, DesignGrid, DesignSurface, delay_only_baseline,
                     desired_angle_shift, grid_eval, optimal_delay_shift, random_shift_average)
from .robustness import (DeviationPoint, LeakageFim, SubArrayScene, deviation_sweep,
                         leakage_fim, lob_intersection, perceived_location, subarray_positions)
from .harness import (ExperimentConfig, PlotSpec, bound_sweep, emit_plot, load_config,
                      parse_config, run_experiment, serialize_config, write_csv)

__version__ = "0.1.0"
