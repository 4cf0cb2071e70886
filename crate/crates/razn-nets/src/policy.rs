//! Policy network: the segmentation stem, one 3x3 conv + BN + ReLU per
//! stage, global average pooling and a linear head emitting one raw score
//! per image. No output activation here; the caller applies the sigmoid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use razn_autodiff::{
    global_avg_pool, global_avg_pool_backward, linear, linear_backward, linear_weight,
    maxpool2d, maxpool2d_backward, relu, relu_backward, BnCache, ParamStore, Tensor,
};

use crate::config::PolicyNetConfig;
use crate::error::{NetError, Result};
use crate::layers::{BatchNorm, Conv, ConvBnRelu, ConvBnReluCache};

pub const POLICY_MIN_INPUT: usize = 16;

pub struct PolicyNet {
    pub cfg: PolicyNetConfig,
    stem_conv: Conv,
    stem_bn: BatchNorm,
    blocks: Vec<ConvBnRelu>,
}

pub struct PolicyCache {
    stem_in: Tensor<f32>,
    stem_bn_cache: BnCache<f32>,
    stem_pre_relu: Tensor<f32>,
    pool_argmax: Vec<u32>,
    pool_in_shape: Vec<usize>,
    block_caches: Vec<ConvBnReluCache>,
    gap_in_shape: Vec<usize>,
    fc_in: Tensor<f32>,
}

impl PolicyNet {
    pub fn new(cfg: PolicyNetConfig) -> Self {
        let stem_conv = Conv::new("stem.conv", 3, cfg.widths[0], 7, 2, 1, false);
        let stem_bn = BatchNorm::new("stem.bn", cfg.widths[0]);
        let mut blocks = Vec::new();
        let mut in_ch = cfg.widths[0];
        for (bi, (&width, &stride)) in cfg.widths.iter().zip(cfg.strides.iter()).enumerate() {
            blocks.push(ConvBnRelu::new(
                &format!("block{}", bi + 1),
                in_ch,
                width,
                3,
                stride,
                1,
            ));
            in_ch = width;
        }
        PolicyNet {
            cfg,
            stem_conv,
            stem_bn,
            blocks,
        }
    }

    pub fn init_params(&self, seed: u64) -> Result<ParamStore> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        self.stem_conv.register(&mut store, &mut rng)?;
        self.stem_bn.register(&mut store)?;
        for block in &self.blocks {
            block.register(&mut store, &mut rng)?;
        }
        store.register("fc.w", linear_weight(&mut rng, 1, self.cfg.widths[3]), true)?;
        store.register("fc.b", Tensor::zeros(&[1]), true)?;
        Ok(store)
    }

    fn check_input(&self, x: &Tensor<f32>) -> Result<()> {
        let (_, c, h, w) = x.dims4();
        if c != 3 {
            return Err(NetError::ChannelMismatch { got: c, expected: 3 });
        }
        if h < POLICY_MIN_INPUT || w < POLICY_MIN_INPUT {
            return Err(NetError::TooSmall {
                h,
                w,
                min: POLICY_MIN_INPUT,
            });
        }
        Ok(())
    }

    /// Raw scores [N], training mode, with the cache for `backward`.
    pub fn forward_train(
        &self,
        store: &mut ParamStore,
        x: &Tensor<f32>,
    ) -> Result<(Vec<f32>, PolicyCache)> {
        self.check_input(x)?;
        let c = self.stem_conv.forward(store, x)?;
        let (stem_pre_relu, stem_bn_cache) = self.stem_bn.forward_train(store, &c)?;
        let r = relu(&stem_pre_relu);
        let pool_in_shape = r.shape().to_vec();
        let pooled = maxpool2d(&r, 3, 2, 1)?;

        let mut cur = pooled.output;
        let mut block_caches = Vec::new();
        for block in &self.blocks {
            let (next, cache) = block.forward_train(store, &cur)?;
            block_caches.push(cache);
            cur = next;
        }

        let gap_in_shape = cur.shape().to_vec();
        let fc_in = global_avg_pool(&cur)?;
        let scores = linear(&fc_in, store.value("fc.w")?, Some(store.value("fc.b")?))?;
        Ok((
            scores.data().to_vec(),
            PolicyCache {
                stem_in: x.clone(),
                stem_bn_cache,
                stem_pre_relu,
                pool_argmax: pooled.argmax,
                pool_in_shape,
                block_caches,
                gap_in_shape,
                fc_in,
            },
        ))
    }

    /// Raw scores [N] in eval mode.
    pub fn forward_eval(&self, store: &ParamStore, x: &Tensor<f32>) -> Result<Vec<f32>> {
        self.check_input(x)?;
        let c = self.stem_conv.forward(store, x)?;
        let r = relu(&self.stem_bn.forward_eval(store, &c)?);
        let mut cur = maxpool2d(&r, 3, 2, 1)?.output;
        for block in &self.blocks {
            cur = block.forward_eval(store, &cur)?;
        }
        let g = global_avg_pool(&cur)?;
        let scores = linear(&g, store.value("fc.w")?, Some(store.value("fc.b")?))?;
        Ok(scores.data().to_vec())
    }

    /// Accumulates parameter gradients from per-sample d loss / d score.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &PolicyCache,
        grad_scores: &[f32],
    ) -> Result<()> {
        let n = cache.fc_in.dims2().0;
        assert_eq!(grad_scores.len(), n, "one score gradient per sample");
        let go = Tensor::from_vec(&[n, 1], grad_scores.to_vec());

        let w = store.value("fc.w")?.clone();
        let grads = linear_backward(&go, &cache.fc_in, &w, true)?;
        store.accumulate_grad("fc.w", &grads.weight)?;
        store.accumulate_grad("fc.b", grads.bias.as_ref().expect("fc has bias"))?;

        let mut g = global_avg_pool_backward(&grads.input, &cache.gap_in_shape);
        for (block, bcache) in self.blocks.iter().zip(cache.block_caches.iter()).rev() {
            g = block.backward(store, bcache, &g)?;
        }

        let g = maxpool2d_backward(&g, &cache.pool_argmax, &cache.pool_in_shape);
        let g = relu_backward(&g, &cache.stem_pre_relu);
        let g = self.stem_bn.backward(store, &cache.stem_bn_cache, &g)?;
        self.stem_conv.backward(store, &cache.stem_in, &g)?;
        Ok(())
    }
}
