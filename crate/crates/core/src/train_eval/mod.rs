//! Training loops, full-protein reconstruction and scoring, and the
//! experiment runners built on them.

mod eval;
mod experiments;
mod train;

pub use eval::{
    evaluate, protein_rmse, reconstruct_prediction, window_for_position, ConstantPredictor,
    EvalReport, HelicityPredictor, Prediction, ProteinScore, WindowPredictor,
};
pub use experiments::{
    experiment_cross_species, experiment_losses, experiment_window_sizes, ExperimentConfig,
    ExperimentResult, LOSS_VARIANTS, WINDOW_SIZES,
};
pub use train::{
    global_helix_rate, model_file, rnn_model_file, train, train_rnn, Regime, RnnTrainOutcome,
    TrainConfig, TrainOutcome,
};
