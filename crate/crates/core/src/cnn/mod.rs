//! Convolutional shape classifier built from scratch.
//!
//! Binary 64x64 images of polygons go through six Conv→Norm→ReLU blocks
//! (2, 4, …, 64 feature maps; 2x2 max pooling after the first five) and a
//! dense softmax head. Class `j` stands for the reference polygon with
//! `j + 3` vertices.

mod adam;
mod dataset;
mod gradcheck;
mod io;
mod layers;
mod network;
mod tensor;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dataset::{
    generate_dataset, generate_dataset_with, load_dataset, perturbed_polygon, save_dataset, split_dataset,
    Perturbation, Split,
};
pub use gradcheck::{check_layer_gradients, GradientCheck};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model};
pub use layers::{
    batchnorm_forward, conv_forward, cross_entropy, pool_forward, relu, softmax, softmax_cross_entropy, BatchNormLayer,
    BatchStats, ConvLayer, DenseLayer, NormMode,
};
pub use network::{argmax, BatchResult, ConvBlock, Gradients, LabeledImage, Network, BLOCK_WIDTHS, FIRST_LABEL};
pub use tensor::{FeatureBatch, Tensor3};
pub use train::{
    accuracy, confusion_csv, confusion_matrix, evaluate, train, train_classifier, train_on_dataset, EpochRecord,
    TrainConfig, TrainHistory, TrainedClassifier,
};
