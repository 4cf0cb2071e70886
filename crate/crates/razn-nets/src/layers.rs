//! Named layer wrappers over the op substrate. Each layer registers its
//! parameters under a fixed name prefix and accumulates gradients back into
//! the owning store.

use rand_chacha::ChaCha8Rng;

use razn_autodiff::{
    batchnorm2d_backward, batchnorm2d_eval, batchnorm2d_stats, batchnorm2d_train, conv2d,
    conv2d_backward, conv_weight, relu, relu_backward, BnCache, ConvGeom, ParamStore, Tensor,
};

use crate::error::Result;

pub const BN_EPS: f32 = 1e-5;
pub const BN_MOMENTUM: f32 = 0.9;

#[derive(Debug, Clone)]
pub struct Conv {
    pub name: String,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub geom: ConvGeom,
    pub bias: bool,
}

impl Conv {
    pub fn new(
        name: impl Into<String>,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        dilation: usize,
        bias: bool,
    ) -> Self {
        // "same"-style padding for odd kernels at stride 1; the stem and
        // strided convs use the conventional floor(k/2)*dilation padding.
        let pad = dilation * (kernel / 2);
        Conv {
            name: name.into(),
            in_ch,
            out_ch,
            kernel,
            geom: ConvGeom::new(stride, pad, dilation),
            bias,
        }
    }

    fn weight_name(&self) -> String {
        format!("{}.w", self.name)
    }

    fn bias_name(&self) -> String {
        format!("{}.b", self.name)
    }

    pub fn register(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Result<()> {
        store.register(
            &self.weight_name(),
            conv_weight(rng, self.out_ch, self.in_ch, self.kernel, self.kernel),
            true,
        )?;
        if self.bias {
            store.register(&self.bias_name(), Tensor::zeros(&[self.out_ch]), true)?;
        }
        Ok(())
    }

    pub fn forward(&self, store: &ParamStore, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let w = store.value(&self.weight_name())?;
        let b = if self.bias {
            Some(store.value(&self.bias_name())?)
        } else {
            None
        };
        Ok(conv2d(x, w, b, self.geom)?)
    }

    /// Accumulates weight/bias grads, returns the input gradient.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        x: &Tensor<f32>,
        grad_out: &Tensor<f32>,
    ) -> Result<Tensor<f32>> {
        let w = store.value(&self.weight_name())?.clone();
        let grads = conv2d_backward(grad_out, x, &w, self.bias, self.geom)?;
        store.accumulate_grad(&self.weight_name(), &grads.kernel)?;
        if let Some(gb) = &grads.bias {
            store.accumulate_grad(&self.bias_name(), gb)?;
        }
        Ok(grads.input)
    }
}

#[derive(Debug, Clone)]
pub struct BatchNorm {
    pub name: String,
    pub ch: usize,
}

impl BatchNorm {
    pub fn new(name: impl Into<String>, ch: usize) -> Self {
        BatchNorm {
            name: name.into(),
            ch,
        }
    }

    fn names(&self) -> (String, String, String, String) {
        (
            format!("{}.gamma", self.name),
            format!("{}.beta", self.name),
            format!("{}.rmean", self.name),
            format!("{}.rvar", self.name),
        )
    }

    pub fn register(&self, store: &mut ParamStore) -> Result<()> {
        let (g, b, rm, rv) = self.names();
        store.register(&g, Tensor::filled(&[self.ch], 1.0), true)?;
        store.register(&b, Tensor::zeros(&[self.ch]), true)?;
        store.register(&rm, Tensor::zeros(&[self.ch]), false)?;
        store.register(&rv, Tensor::filled(&[self.ch], 1.0), false)?;
        Ok(())
    }

    pub fn forward_train(
        &self,
        store: &mut ParamStore,
        x: &Tensor<f32>,
    ) -> Result<(Tensor<f32>, BnCache<f32>)> {
        let (g, b, rm, rv) = self.names();
        let gamma = store.value(&g)?.clone();
        let beta = store.value(&b)?.clone();
        let mut rmean = store.value(&rm)?.clone();
        let mut rvar = store.value(&rv)?.clone();
        let out = batchnorm2d_train(x, &gamma, &beta, &mut rmean, &mut rvar, BN_MOMENTUM, BN_EPS)?;
        store.get_mut(&rm)?.value = rmean;
        store.get_mut(&rv)?.value = rvar;
        Ok(out)
    }

    pub fn forward_eval(&self, store: &ParamStore, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let (g, b, rm, rv) = self.names();
        Ok(batchnorm2d_eval(
            x,
            store.value(&g)?,
            store.value(&b)?,
            store.value(&rm)?,
            store.value(&rv)?,
            BN_EPS,
        )?)
    }

    /// Batch statistics without touching the running estimates.
    pub fn forward_stats(&self, store: &ParamStore, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let (g, b, _, _) = self.names();
        Ok(batchnorm2d_stats(x, store.value(&g)?, store.value(&b)?, BN_EPS)?)
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &BnCache<f32>,
        grad_out: &Tensor<f32>,
    ) -> Result<Tensor<f32>> {
        let (g, b, _, _) = self.names();
        let gamma = store.value(&g)?.clone();
        let grads = batchnorm2d_backward(grad_out, cache, &gamma)?;
        store.accumulate_grad(&g, &grads.gamma)?;
        store.accumulate_grad(&b, &grads.beta)?;
        Ok(grads.input)
    }
}

/// Conv + BN + ReLU, the policy net's block and half of a residual block.
#[derive(Debug, Clone)]
pub struct ConvBnRelu {
    pub conv: Conv,
    pub bn: BatchNorm,
}

pub struct ConvBnReluCache {
    pub conv_in: Tensor<f32>,
    pub bn_cache: BnCache<f32>,
    pub pre_relu: Tensor<f32>,
}

impl ConvBnRelu {
    pub fn new(
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        dilation: usize,
    ) -> Self {
        ConvBnRelu {
            conv: Conv::new(format!("{name}.conv"), in_ch, out_ch, kernel, stride, dilation, false),
            bn: BatchNorm::new(format!("{name}.bn"), out_ch),
        }
    }

    pub fn register(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Result<()> {
        self.conv.register(store, rng)?;
        self.bn.register(store)
    }

    pub fn forward_train(
        &self,
        store: &mut ParamStore,
        x: &Tensor<f32>,
    ) -> Result<(Tensor<f32>, ConvBnReluCache)> {
        let c = self.conv.forward(store, x)?;
        let (pre_relu, bn_cache) = self.bn.forward_train(store, &c)?;
        let y = relu(&pre_relu);
        Ok((
            y,
            ConvBnReluCache {
                conv_in: x.clone(),
                bn_cache,
                pre_relu,
            },
        ))
    }

    pub fn forward_eval(&self, store: &ParamStore, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let c = self.conv.forward(store, x)?;
        Ok(relu(&self.bn.forward_eval(store, &c)?))
    }

    pub fn forward_stats(&self, store: &ParamStore, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let c = self.conv.forward(store, x)?;
        Ok(relu(&self.bn.forward_stats(store, &c)?))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &ConvBnReluCache,
        grad_out: &Tensor<f32>,
    ) -> Result<Tensor<f32>> {
        let g = relu_backward(grad_out, &cache.pre_relu);
        let g = self.bn.backward(store, &cache.bn_cache, &g)?;
        self.conv.backward(store, &cache.conv_in, &g)
    }
}

/// Two 3x3 convs with BN, identity or projected skip, ReLU after the sum.
#[derive(Debug, Clone)]
pub struct BasicBlock {
    pub conv1: Conv,
    pub bn1: BatchNorm,
    pub conv2: Conv,
    pub bn2: BatchNorm,
    pub proj: Option<(Conv, BatchNorm)>,
}

pub struct BasicBlockCache {
    pub input: Tensor<f32>,
    pub bn1_cache: BnCache<f32>,
    pub pre_relu1: Tensor<f32>,
    pub relu1_out: Tensor<f32>,
    pub bn2_cache: BnCache<f32>,
    pub proj_bn_cache: Option<BnCache<f32>>,
    pub pre_relu_out: Tensor<f32>,
}

impl BasicBlock {
    pub fn new(name: &str, in_ch: usize, out_ch: usize, stride: usize, dilation: usize) -> Self {
        let proj = if in_ch != out_ch || stride != 1 {
            Some((
                Conv::new(format!("{name}.proj.conv"), in_ch, out_ch, 1, stride, 1, false),
                BatchNorm::new(format!("{name}.proj.bn"), out_ch),
            ))
        } else {
            None
        };
        BasicBlock {
            conv1: Conv::new(format!("{name}.conv1"), in_ch, out_ch, 3, stride, dilation, false),
            bn1: BatchNorm::new(format!("{name}.bn1"), out_ch),
            conv2: Conv::new(format!("{name}.conv2"), out_ch, out_ch, 3, 1, dilation, false),
            bn2: BatchNorm::new(format!("{name}.bn2"), out_ch),
            proj,
        }
    }

    pub fn register(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> Result<()> {
        self.conv1.register(store, rng)?;
        self.bn1.register(store)?;
        self.conv2.register(store, rng)?;
        self.bn2.register(store)?;
        if let Some((c, b)) = &self.proj {
            c.register(store, rng)?;
            b.register(store)?;
        }
        Ok(())
    }

    pub fn forward_train(
        &self,
        store: &mut ParamStore,
        x: &Tensor<f32>,
    ) -> Result<(Tensor<f32>, BasicBlockCache)> {
        let c1 = self.conv1.forward(store, x)?;
        let (pre_relu1, bn1_cache) = self.bn1.forward_train(store, &c1)?;
        let relu1_out = relu(&pre_relu1);
        let c2 = self.conv2.forward(store, &relu1_out)?;
        let (main, bn2_cache) = self.bn2.forward_train(store, &c2)?;

        let (skip, proj_bn_cache) = match &self.proj {
            Some((c, b)) => {
                let p = c.forward(store, x)?;
                let (s, cache) = b.forward_train(store, &p)?;
                (s, Some(cache))
            }
            None => (x.clone(), None),
        };

        let mut pre_relu_out = main;
        pre_relu_out.add_assign(&skip);
        let y = relu(&pre_relu_out);
        Ok((
            y,
            BasicBlockCache {
                input: x.clone(),
                bn1_cache,
                pre_relu1,
                relu1_out,
                bn2_cache,
                proj_bn_cache,
                pre_relu_out,
            },
        ))
    }

    pub fn forward_eval(&self, store: &ParamStore, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let c1 = self.conv1.forward(store, x)?;
        let r1 = relu(&self.bn1.forward_eval(store, &c1)?);
        let c2 = self.conv2.forward(store, &r1)?;
        let main = self.bn2.forward_eval(store, &c2)?;
        let skip = match &self.proj {
            Some((c, b)) => b.forward_eval(store, &c.forward(store, x)?)?,
            None => x.clone(),
        };
        let mut out = main;
        out.add_assign(&skip);
        Ok(relu(&out))
    }

    pub fn forward_stats(&self, store: &ParamStore, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let c1 = self.conv1.forward(store, x)?;
        let r1 = relu(&self.bn1.forward_stats(store, &c1)?);
        let c2 = self.conv2.forward(store, &r1)?;
        let main = self.bn2.forward_stats(store, &c2)?;
        let skip = match &self.proj {
            Some((c, b)) => b.forward_stats(store, &c.forward(store, x)?)?,
            None => x.clone(),
        };
        let mut out = main;
        out.add_assign(&skip);
        Ok(relu(&out))
    }

    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &BasicBlockCache,
        grad_out: &Tensor<f32>,
    ) -> Result<Tensor<f32>> {
        let g_sum = relu_backward(grad_out, &cache.pre_relu_out);

        // main path
        let g = self.bn2.backward(store, &cache.bn2_cache, &g_sum)?;
        let g = self.conv2.backward(store, &cache.relu1_out, &g)?;
        let g = relu_backward(&g, &cache.pre_relu1);
        let g = self.bn1.backward(store, &cache.bn1_cache, &g)?;
        let mut grad_in = self.conv1.backward(store, &cache.input, &g)?;

        // skip path
        match (&self.proj, &cache.proj_bn_cache) {
            (Some((c, b)), Some(proj_cache)) => {
                let g = b.backward(store, proj_cache, &g_sum)?;
                let g = c.backward(store, &cache.input, &g)?;
                grad_in.add_assign(&g);
            }
            (None, None) => grad_in.add_assign(&g_sum),
            _ => unreachable!("projection cache does not match block wiring"),
        }
        Ok(grad_in)
    }
}
