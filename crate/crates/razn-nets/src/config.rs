use serde::{Deserialize, Serialize};

/// Segmentation backbone: stem + four residual stages. Stage 2 halves the
/// resolution; stages 3 and 4 keep stride 1 (dilated by 2 and 4 when
/// `dilated` is set), for an output stride of 8 recovered by bilinear
/// upsampling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegNetConfig {
    pub input_size: usize,
    pub classes: usize,
    pub widths: [usize; 4],
    pub blocks: [usize; 4],
    pub dilated: bool,
}

impl Default for SegNetConfig {
    fn default() -> Self {
        SegNetConfig::desk()
    }
}

impl SegNetConfig {
    /// Small CPU-trainable configuration.
    pub fn desk() -> Self {
        SegNetConfig {
            input_size: 64,
            classes: 4,
            widths: [8, 16, 32, 64],
            blocks: [1, 1, 1, 1],
            dilated: true,
        }
    }

    /// Full-width 18-layer configuration at 256x256 input.
    pub fn paper() -> Self {
        SegNetConfig {
            input_size: 256,
            classes: 4,
            widths: [64, 128, 256, 512],
            blocks: [2, 2, 2, 2],
            dilated: true,
        }
    }

    pub fn output_stride(&self) -> usize {
        8
    }

    /// Per-stage (stride, dilation) of the first block; later blocks in a
    /// stage keep stride 1 at the stage dilation.
    pub fn stage_geometry(&self) -> [(usize, usize); 4] {
        if self.dilated {
            [(1, 1), (2, 1), (1, 2), (1, 4)]
        } else {
            [(1, 1), (2, 1), (1, 1), (1, 1)]
        }
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "seg:in={};c={};w={},{},{},{};b={},{},{},{};dil={}",
            self.input_size,
            self.classes,
            self.widths[0],
            self.widths[1],
            self.widths[2],
            self.widths[3],
            self.blocks[0],
            self.blocks[1],
            self.blocks[2],
            self.blocks[3],
            u8::from(self.dilated),
        )
    }
}

/// Policy head: the same stem, then one 3x3 conv + BN + ReLU per stage,
/// global average pooling and a single-scalar linear head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyNetConfig {
    pub input_size: usize,
    pub widths: [usize; 4],
    pub strides: [usize; 4],
}

impl Default for PolicyNetConfig {
    fn default() -> Self {
        PolicyNetConfig::desk()
    }
}

impl PolicyNetConfig {
    pub fn desk() -> Self {
        PolicyNetConfig {
            input_size: 64,
            widths: [8, 16, 32, 64],
            strides: [1, 2, 2, 1],
        }
    }

    pub fn paper() -> Self {
        PolicyNetConfig {
            input_size: 256,
            widths: [64, 128, 256, 512],
            strides: [1, 2, 2, 1],
        }
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "pol:in={};w={},{},{},{};s={},{},{},{}",
            self.input_size,
            self.widths[0],
            self.widths[1],
            self.widths[2],
            self.widths[3],
            self.strides[0],
            self.strides[1],
            self.strides[2],
            self.strides[3],
        )
    }
}
