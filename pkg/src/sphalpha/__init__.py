"""Shape of data on spheres via kernel densities, transport and alpha complexes."""
from .alpha import SimplicialComplex, build_complex, nerve_oracle, simplex_alpha_test
from .embedding import NeighborGraph, kl_loss, metropolis_embed, target_probabilities
from .homology import betti_numbers, boundary_matrix, rank_gf2
from .kde import KdeModel, TransportedSample, conjugate_bruteforce, restrict_model
from .pipeline import PipelineConfig, run_pipeline, synth_torus
from .sampler import RngStream, quantile_threshold, sample_transported, select_landmarks, separation_radius

__version__ = "0.1.0"
