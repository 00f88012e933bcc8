//! Experiment drivers.
//!
//! Phase-transition grids over sampling rate and initialization distance,
//! component matching and scoring, Monte-Carlo checks of the sampling
//! bound, the rank-1 non-identifiability example, and entry-wise image
//! mixing. Every run is reproducible from its master seed.

mod campaign;
mod config;
mod example1;
mod images;
mod phase;
mod scoring;

pub use campaign::{run_theorem2_campaign, Theorem2Campaign, CAMPAIGN_SEARCH_BUDGET};
pub use config::parse_config;
pub use example1::{run_example1_suite, run_example1_with, Clause, Example1Data, Example1Report, RANK1_TOL};
pub use images::{mix_images, read_pgm, write_pgm, ImageMixture};
pub use phase::{
    run_phase_grid, run_trial, to_json_lines, PhaseGrid, PhaseRun, TrialRecord, TrialSetup, CSV_HEADER, DESK_DELTA,
    DESK_P, DESK_TRIALS, FULL_TRIALS, PRESET_LRMC_MAX_ITERS, PRESET_MAX_OUTER_ITERS, PRESET_RESTARTS, SUCCESS_THRESHOLD,
};
pub use scoring::{classification_error, match_and_score, match_components, match_greedy, Matching, MAX_EXACT_K};
