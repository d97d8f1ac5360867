pub mod dataset;
pub mod model;
pub mod normalize;
pub mod train;

pub use dataset::{batch_tensors, SampleSource, TrainingSample};
pub use model::{table_inputs, table_layers, PredictorModel, Unflip, Variant, TABLE_PARAMS};
pub use normalize::{norm_scale, stack, unstack};
pub use train::{prediction_quality, train, validation_loss, EpochLog, PredictionQuality, TrainConfig, TrainOutcome};
