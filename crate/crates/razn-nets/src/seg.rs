//! Fully convolutional segmentation network: 7x7/2 stem with BN, ReLU and a
//! 3x3/2 max pool, four residual stages (stages 3 and 4 at stride 1), a 1x1
//! classifier head and bilinear upsampling back to the input extent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use razn_autodiff::{
    bilinear_resize, bilinear_resize_backward, maxpool2d, maxpool2d_backward, relu,
    relu_backward, BnCache, ParamStore, Tensor,
};

use crate::config::SegNetConfig;
use crate::error::{NetError, Result};
use crate::layers::{BasicBlock, BatchNorm, Conv};

pub struct SegNet {
    pub cfg: SegNetConfig,
    stem_conv: Conv,
    stem_bn: BatchNorm,
    stages: Vec<Vec<BasicBlock>>,
    head: Conv,
}

pub struct SegCache {
    input_hw: (usize, usize),
    stem_in: Tensor<f32>,
    stem_bn_cache: BnCache<f32>,
    stem_pre_relu: Tensor<f32>,
    pool_argmax: Vec<u32>,
    pool_in_shape: Vec<usize>,
    block_caches: Vec<crate::layers::BasicBlockCache>,
    head_in: Tensor<f32>,
    head_out_shape: Vec<usize>,
}

impl SegNet {
    pub fn new(cfg: SegNetConfig) -> Self {
        let stem_conv = Conv::new("stem.conv", 3, cfg.widths[0], 7, 2, 1, false);
        let stem_bn = BatchNorm::new("stem.bn", cfg.widths[0]);
        let geom = cfg.stage_geometry();
        let mut stages = Vec::new();
        let mut in_ch = cfg.widths[0];
        for (si, (&width, &count)) in cfg.widths.iter().zip(cfg.blocks.iter()).enumerate() {
            let (stride, dilation) = geom[si];
            let mut blocks = Vec::new();
            for bi in 0..count {
                let s = if bi == 0 { stride } else { 1 };
                blocks.push(BasicBlock::new(
                    &format!("stage{}.block{bi}", si + 1),
                    in_ch,
                    width,
                    s,
                    dilation,
                ));
                in_ch = width;
            }
            stages.push(blocks);
        }
        let head = Conv::new("head.conv", cfg.widths[3], cfg.classes, 1, 1, 1, true);
        SegNet {
            cfg,
            stem_conv,
            stem_bn,
            stages,
            head,
        }
    }

    /// Fresh parameter store with deterministic fan-in-scaled init.
    pub fn init_params(&self, seed: u64) -> Result<ParamStore> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        self.stem_conv.register(&mut store, &mut rng)?;
        self.stem_bn.register(&mut store)?;
        for stage in &self.stages {
            for block in stage {
                block.register(&mut store, &mut rng)?;
            }
        }
        self.head.register(&mut store, &mut rng)?;
        Ok(store)
    }

    fn check_input(&self, x: &Tensor<f32>) -> Result<(usize, usize)> {
        let (_, c, h, w) = x.dims4();
        if c != 3 {
            return Err(NetError::ChannelMismatch { got: c, expected: 3 });
        }
        let os = self.cfg.output_stride();
        if h % os != 0 || w % os != 0 {
            return Err(NetError::Indivisible { h, w, stride: os });
        }
        if h < os || w < os {
            return Err(NetError::TooSmall { h, w, min: os });
        }
        Ok((h, w))
    }

    /// Training-mode forward; updates batch-norm running statistics and
    /// returns the cache for `backward`.
    pub fn forward_train(
        &self,
        store: &mut ParamStore,
        x: &Tensor<f32>,
    ) -> Result<(Tensor<f32>, SegCache)> {
        let (h, w) = self.check_input(x)?;
        let c = self.stem_conv.forward(store, x)?;
        let (stem_pre_relu, stem_bn_cache) = self.stem_bn.forward_train(store, &c)?;
        let stem_relu_out = relu(&stem_pre_relu);
        let pool_in_shape = stem_relu_out.shape().to_vec();
        let pooled = maxpool2d(&stem_relu_out, 3, 2, 1)?;

        let mut cur = pooled.output;
        let mut block_caches = Vec::new();
        for stage in &self.stages {
            for block in stage {
                let (next, cache) = block.forward_train(store, &cur)?;
                block_caches.push(cache);
                cur = next;
            }
        }

        let head_in = cur;
        let logits_small = self.head.forward(store, &head_in)?;
        let logits = bilinear_resize(&logits_small, h, w)?;
        Ok((
            logits,
            SegCache {
                input_hw: (h, w),
                stem_in: x.clone(),
                stem_bn_cache,
                stem_pre_relu,
                pool_argmax: pooled.argmax,
                pool_in_shape,
                block_caches,
                head_in,
                head_out_shape: logits_small.shape().to_vec(),
            },
        ))
    }

    /// Pure eval-mode forward using running statistics.
    pub fn forward_eval(&self, store: &ParamStore, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let (h, w) = self.check_input(x)?;
        let c = self.stem_conv.forward(store, x)?;
        let r = relu(&self.stem_bn.forward_eval(store, &c)?);
        let mut cur = maxpool2d(&r, 3, 2, 1)?.output;
        for stage in &self.stages {
            for block in stage {
                cur = block.forward_eval(store, &cur)?;
            }
        }
        let logits_small = self.head.forward(store, &cur)?;
        Ok(bilinear_resize(&logits_small, h, w)?)
    }

    /// Pure forward normalized by batch statistics, leaving the store (and
    /// its running estimates) untouched. Loss probes use this: it reflects
    /// what a training-mode pass would compute, without the side effects.
    pub fn forward_stats(&self, store: &ParamStore, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let (h, w) = self.check_input(x)?;
        let c = self.stem_conv.forward(store, x)?;
        let r = relu(&self.stem_bn.forward_stats(store, &c)?);
        let mut cur = maxpool2d(&r, 3, 2, 1)?.output;
        for stage in &self.stages {
            for block in stage {
                cur = block.forward_stats(store, &cur)?;
            }
        }
        let logits_small = self.head.forward(store, &cur)?;
        Ok(bilinear_resize(&logits_small, h, w)?)
    }

    /// Accumulates parameter gradients from d loss / d logits.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &SegCache,
        grad_logits: &Tensor<f32>,
    ) -> Result<()> {
        let _ = cache.input_hw;
        let g = bilinear_resize_backward(grad_logits, &cache.head_out_shape);
        let mut g = self.head.backward(store, &cache.head_in, &g)?;

        let blocks: Vec<&BasicBlock> = self.stages.iter().flatten().collect();
        for (block, bcache) in blocks.iter().zip(cache.block_caches.iter()).rev() {
            g = block.backward(store, bcache, &g)?;
        }

        let g = maxpool2d_backward(&g, &cache.pool_argmax, &cache.pool_in_shape);
        let g = relu_backward(&g, &cache.stem_pre_relu);
        let g = self.stem_bn.backward(store, &cache.stem_bn_cache, &g)?;
        self.stem_conv.backward(store, &cache.stem_in, &g)?;
        Ok(())
    }
}
