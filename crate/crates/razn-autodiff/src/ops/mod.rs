mod activation;
mod conv;
mod linear;
mod loss;
mod norm;
mod pool;
mod resize;

pub use activation::{relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar};
pub use conv::{conv2d, conv2d_backward, ConvGeom, ConvGrads};
pub use linear::{linear, linear_backward, LinearGrads};
pub use loss::{
    softmax_cross_entropy_backward, softmax_cross_entropy_map, CrossEntropyOut,
};
pub use norm::{
    batchnorm2d_backward, batchnorm2d_eval, batchnorm2d_stats, batchnorm2d_train, BnCache,
    BnGrads,
};
pub use pool::{
    global_avg_pool, global_avg_pool_backward, maxpool2d, maxpool2d_backward, MaxPoolOut,
};
pub use resize::{bilinear_resize, bilinear_resize_backward};
