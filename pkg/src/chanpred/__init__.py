"""Prony-based channel prediction for massive MIMO under user mobility."""

from .channel import (ArrayGeometry, ChannelSnapshot, ClusterScenario, PathParams,
                      SampleTrack, SubcarrierGrid, UeKinematics, add_sample_noise,
                      channel_snapshot, closed_form_inner_product, delay_response,
                      doppler_rate, generalized_steering, sample_track,
                      steering_3d, steering_horizontal, steering_vertical,
                      synthesize_cluster_paths)
from .denoise import (DenoiseFilter, SpatialCovariance, TruncationPolicy,
                      apply_filter, build_lmmse_filter, estimate_covariance,
                      estimate_noise_power, tk_solve, tk_solver)
from .evaluate import (ExperimentConfig, ExperimentResult, PredictionErrorReport,
                       SpectralEfficiencyReport, ezf_precoder, fir_wiener_predict,
                       mmse_irc_sinr, nmse_db, run_experiment, run_prediction_trace,
                       spectral_efficiency)
from .pad import (AngularDelayDims, SupportSet, inverse_project, pad_predict,
                  project_to_angular_delay, select_support)
from .prony import (pinv_solve, scalar_prony_fit, scalar_prony_predict,
                    vector_prony_fit, vector_prony_predict)

__version__ = "0.1.0"
