//! Trainable state: the parameter stores, nets, schedules, step counter and
//! the rng stream, with checkpoint save/load that restores all of it
//! bit-exactly.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use razn_autodiff::{
    read_checkpoint, write_checkpoint, AdamConfig, CheckpointMeta, LrSchedule, ParamStore,
};
use razn_nets::{PolicyNet, PolicyNetConfig, SegNet, SegNetConfig};

use crate::error::{CoreError, Result};
use crate::policy::{RewardSign, ZoomConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Razn,
    Scale1,
    Scale2,
    MultiScale,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Razn => "razn",
            ModelKind::Scale1 => "scale1",
            ModelKind::Scale2 => "scale2",
            ModelKind::MultiScale => "ms",
        }
    }

    pub fn parse(s: &str) -> Option<ModelKind> {
        match s {
            "razn" => Some(ModelKind::Razn),
            "scale1" => Some(ModelKind::Scale1),
            "scale2" => Some(ModelKind::Scale2),
            "ms" => Some(ModelKind::MultiScale),
            _ => None,
        }
    }

    /// Linear degradation factor of the simulated-resolution baselines.
    pub fn degrade_factor(&self) -> Option<usize> {
        match self {
            ModelKind::Scale1 => Some(4),
            ModelKind::Scale2 => Some(2),
            _ => None,
        }
    }
}

pub struct TrainState {
    pub kind: ModelKind,
    pub seg_net: SegNet,
    pub policy_net: Option<PolicyNet>,
    /// Coarse-scale segmentation parameters; the only store for baselines.
    pub seg0: ParamStore,
    /// Fine-scale segmentation parameters (selective-zoom training only).
    pub seg1: Option<ParamStore>,
    pub policy: Option<ParamStore>,
    pub zoom: ZoomConfig,
    pub schedule: LrSchedule,
    /// The policy head can train on its own (usually slower) schedule, so
    /// the segmentation nets converge before the acting probabilities
    /// commit; the alternating update rule itself is unchanged.
    pub policy_schedule: LrSchedule,
    pub adam: AdamConfig,
    pub step: u64,
    pub rng: ChaCha8Rng,
}

fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl TrainState {
    pub fn new(
        kind: ModelKind,
        seed: u64,
        seg_cfg: SegNetConfig,
        policy_cfg: PolicyNetConfig,
        zoom: ZoomConfig,
        schedule: LrSchedule,
        adam: AdamConfig,
    ) -> Result<TrainState> {
        Self::with_policy_schedule(kind, seed, seg_cfg, policy_cfg, zoom, schedule, schedule, adam)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_policy_schedule(
        kind: ModelKind,
        seed: u64,
        seg_cfg: SegNetConfig,
        policy_cfg: PolicyNetConfig,
        zoom: ZoomConfig,
        schedule: LrSchedule,
        policy_schedule: LrSchedule,
        adam: AdamConfig,
    ) -> Result<TrainState> {
        zoom.validate()?;
        let seg_net = SegNet::new(seg_cfg);
        let seg0 = seg_net.init_params(derive_seed(seed, 1))?;
        let (seg1, policy_net, policy) = if kind == ModelKind::Razn {
            let policy_net = PolicyNet::new(policy_cfg);
            (
                Some(seg_net.init_params(derive_seed(seed, 2))?),
                Some(PolicyNet::new(policy_net.cfg.clone())),
                Some(policy_net.init_params(derive_seed(seed, 3))?),
            )
        } else {
            (None, None, None)
        };
        Ok(TrainState {
            kind,
            seg_net,
            policy_net,
            seg0,
            seg1,
            policy,
            zoom,
            schedule,
            policy_schedule,
            adam,
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 4)),
        })
    }

    pub fn lr(&self) -> f32 {
        self.schedule.lr_at(self.step) as f32
    }

    pub fn policy_lr(&self) -> f32 {
        self.policy_schedule.lr_at(self.step) as f32
    }

    pub fn seg1_mut(&mut self) -> &mut ParamStore {
        self.seg1.as_mut().expect("seg1 store present")
    }

    pub fn policy_mut(&mut self) -> &mut ParamStore {
        self.policy.as_mut().expect("policy store present")
    }

    pub fn fingerprint(&self) -> String {
        let pol = self
            .policy_net
            .as_ref()
            .map(|n| n.cfg.fingerprint())
            .unwrap_or_default();
        format!("{}|{}", self.seg_net.cfg.fingerprint(), pol)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut meta = CheckpointMeta {
            step: self.step,
            extra: vec![],
        };
        meta.set("mode", self.kind.as_str());
        meta.set("seg_cfg", &self.seg_net.cfg.fingerprint());
        if let Some(pn) = &self.policy_net {
            meta.set("pol_cfg", &pn.cfg.fingerprint());
        }
        meta.set("alpha", &format!("{}", self.zoom.alpha));
        meta.set("zoom_rate", &format!("{}", self.zoom.zoom_rate));
        meta.set("max_zoom_steps", &format!("{}", self.zoom.max_zoom_steps));
        meta.set("reward_sign", &self.zoom.reward_sign.to_string());
        meta.set("j0_epsilon", &format!("{}", self.zoom.j0_epsilon));
        meta.set("reward_clamp", &format!("{}", self.zoom.reward_clamp));
        meta.set("lr_initial", &format!("{}", self.schedule.initial));
        meta.set("lr_decay_factor", &format!("{}", self.schedule.decay_factor));
        meta.set("lr_decay_period", &format!("{}", self.schedule.decay_period));
        meta.set("policy_lr_initial", &format!("{}", self.policy_schedule.initial));
        meta.set("adam_beta1", &format!("{}", self.adam.beta1));
        meta.set("adam_beta2", &format!("{}", self.adam.beta2));
        meta.set("adam_eps", &format!("{}", self.adam.eps));
        meta.set("adam_weight_decay", &format!("{}", self.adam.weight_decay));
        let seed_hex: String = self.rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        meta.set("rng_seed", &seed_hex);
        meta.set("rng_word_pos", &format!("{}", self.rng.get_word_pos()));

        let mut stores: Vec<(&str, &ParamStore)> = Vec::new();
        match self.kind {
            ModelKind::Razn => {
                stores.push(("seg0", &self.seg0));
                stores.push(("seg1", self.seg1.as_ref().expect("seg1")));
                stores.push(("policy", self.policy.as_ref().expect("policy")));
            }
            _ => stores.push(("seg", &self.seg0)),
        }
        write_checkpoint(path, &meta, &stores)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<TrainState> {
        let (meta, mut stores) = read_checkpoint(path)?;
        let get = |key: &str| -> Result<&str> {
            meta.get(key)
                .ok_or_else(|| CoreError::CheckpointIncomplete(format!("meta `{key}`")))
        };
        let kind = ModelKind::parse(get("mode")?)
            .ok_or_else(|| CoreError::CheckpointIncomplete("valid mode".into()))?;
        let seg_cfg = parse_seg_fingerprint(get("seg_cfg")?)?;

        let parse_f64 = |key: &str| -> Result<f64> {
            get(key)?
                .parse::<f64>()
                .map_err(|_| CoreError::CheckpointIncomplete(format!("numeric `{key}`")))
        };
        let parse_u64 = |key: &str| -> Result<u64> {
            get(key)?
                .parse::<u64>()
                .map_err(|_| CoreError::CheckpointIncomplete(format!("numeric `{key}`")))
        };

        let zoom = ZoomConfig {
            max_zoom_steps: parse_u64("max_zoom_steps")? as usize,
            zoom_rate: parse_u64("zoom_rate")? as usize,
            alpha: parse_f64("alpha")?,
            reward_sign: get("reward_sign")?
                .parse::<RewardSign>()
                .map_err(CoreError::CheckpointIncomplete)?,
            j0_epsilon: parse_f64("j0_epsilon")?,
            reward_clamp: meta
                .get("reward_clamp")
                .and_then(|v| v.parse::<f64>().ok())
                .unwrap_or(1.0),
        };
        let schedule = LrSchedule {
            initial: parse_f64("lr_initial")?,
            decay_factor: parse_f64("lr_decay_factor")?,
            decay_period: parse_u64("lr_decay_period")?,
        };
        let policy_schedule = LrSchedule {
            initial: meta
                .get("policy_lr_initial")
                .and_then(|v| v.parse::<f64>().ok())
                .unwrap_or(schedule.initial),
            ..schedule
        };
        let adam = AdamConfig {
            beta1: parse_f64("adam_beta1")? as f32,
            beta2: parse_f64("adam_beta2")? as f32,
            eps: parse_f64("adam_eps")? as f32,
            weight_decay: meta
                .get("adam_weight_decay")
                .and_then(|v| v.parse::<f64>().ok())
                .unwrap_or(0.0) as f32,
        };

        let seed_hex = get("rng_seed")?;
        if seed_hex.len() != 64 {
            return Err(CoreError::CheckpointIncomplete("32-byte rng seed".into()));
        }
        let mut seed = [0u8; 32];
        for (i, chunk) in seed_hex.as_bytes().chunks(2).enumerate() {
            let s = std::str::from_utf8(chunk).expect("hex is ascii");
            seed[i] = u8::from_str_radix(s, 16)
                .map_err(|_| CoreError::CheckpointIncomplete("hex rng seed".into()))?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        let word_pos: u128 = get("rng_word_pos")?
            .parse()
            .map_err(|_| CoreError::CheckpointIncomplete("rng word pos".into()))?;
        rng.set_word_pos(word_pos);

        let mut take = |ns: &str| -> Result<ParamStore> {
            let idx = stores
                .iter()
                .position(|(n, _)| n == ns)
                .ok_or_else(|| CoreError::CheckpointIncomplete(format!("store `{ns}`")))?;
            Ok(stores.swap_remove(idx).1)
        };

        let (seg0, seg1, policy_net, policy, policy_cfg) = match kind {
            ModelKind::Razn => {
                let pol_cfg = parse_policy_fingerprint(get("pol_cfg")?)?;
                (
                    take("seg0")?,
                    Some(take("seg1")?),
                    Some(PolicyNet::new(pol_cfg.clone())),
                    Some(take("policy")?),
                    Some(pol_cfg),
                )
            }
            _ => (take("seg")?, None, None, None, None),
        };
        let _ = policy_cfg;

        Ok(TrainState {
            kind,
            seg_net: SegNet::new(seg_cfg),
            policy_net,
            seg0,
            seg1,
            policy,
            zoom,
            schedule,
            policy_schedule,
            adam,
            step: meta.step,
            rng,
        })
    }

    /// Errors unless the checkpoint's architectures match the given configs.
    pub fn check_compatible(
        &self,
        seg_cfg: &SegNetConfig,
        policy_cfg: Option<&PolicyNetConfig>,
    ) -> Result<()> {
        if self.seg_net.cfg != *seg_cfg {
            return Err(CoreError::ConfigMismatch(format!(
                "segmentation net `{}` vs expected `{}`",
                self.seg_net.cfg.fingerprint(),
                seg_cfg.fingerprint()
            )));
        }
        if let (Some(pn), Some(expected)) = (&self.policy_net, policy_cfg) {
            if pn.cfg != *expected {
                return Err(CoreError::ConfigMismatch(format!(
                    "policy net `{}` vs expected `{}`",
                    pn.cfg.fingerprint(),
                    expected.fingerprint()
                )));
            }
        }
        Ok(())
    }
}

fn parse_kv_fields(s: &str) -> std::collections::HashMap<String, String> {
    s.split(';')
        .filter_map(|part| part.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn parse_usize_list<const N: usize>(s: &str) -> Option<[usize; N]> {
    let items: Vec<usize> = s.split(',').map(|v| v.parse().ok()).collect::<Option<_>>()?;
    items.try_into().ok()
}

pub fn parse_seg_fingerprint(s: &str) -> Result<SegNetConfig> {
    let body = s
        .strip_prefix("seg:")
        .ok_or_else(|| CoreError::CheckpointIncomplete(format!("seg fingerprint `{s}`")))?;
    let fields = parse_kv_fields(body);
    let missing = |k: &str| CoreError::CheckpointIncomplete(format!("seg fingerprint key `{k}`"));
    Ok(SegNetConfig {
        input_size: fields.get("in").and_then(|v| v.parse().ok()).ok_or_else(|| missing("in"))?,
        classes: fields.get("c").and_then(|v| v.parse().ok()).ok_or_else(|| missing("c"))?,
        widths: fields
            .get("w")
            .and_then(|v| parse_usize_list::<4>(v))
            .ok_or_else(|| missing("w"))?,
        blocks: fields
            .get("b")
            .and_then(|v| parse_usize_list::<4>(v))
            .ok_or_else(|| missing("b"))?,
        dilated: fields.get("dil").map(|v| v == "1").ok_or_else(|| missing("dil"))?,
    })
}

pub fn parse_policy_fingerprint(s: &str) -> Result<PolicyNetConfig> {
    let body = s
        .strip_prefix("pol:")
        .ok_or_else(|| CoreError::CheckpointIncomplete(format!("policy fingerprint `{s}`")))?;
    let fields = parse_kv_fields(body);
    let missing = |k: &str| CoreError::CheckpointIncomplete(format!("policy fingerprint key `{k}`"));
    Ok(PolicyNetConfig {
        input_size: fields.get("in").and_then(|v| v.parse().ok()).ok_or_else(|| missing("in"))?,
        widths: fields
            .get("w")
            .and_then(|v| parse_usize_list::<4>(v))
            .ok_or_else(|| missing("w"))?,
        strides: fields
            .get("s")
            .and_then(|v| parse_usize_list::<4>(v))
            .ok_or_else(|| missing("s"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprints_round_trip() {
        let seg = SegNetConfig::desk();
        assert_eq!(parse_seg_fingerprint(&seg.fingerprint()).unwrap(), seg);
        let pol = PolicyNetConfig::paper();
        assert_eq!(parse_policy_fingerprint(&pol.fingerprint()).unwrap(), pol);
    }

    #[test]
    fn state_checkpoint_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.rckpt");
        let mut state = TrainState::new(
            ModelKind::Razn,
            42,
            SegNetConfig::desk(),
            PolicyNetConfig::desk(),
            ZoomConfig::default(),
            LrSchedule::default(),
            AdamConfig::default(),
        )
        .unwrap();
        state.step = 17;
        // consume some rng so the stream position is non-trivial
        use rand::Rng;
        for _ in 0..13 {
            let _: f64 = state.rng.random();
        }
        state.save(&path).unwrap();

        let loaded = TrainState::load(&path).unwrap();
        assert_eq!(loaded.step, 17);
        assert_eq!(loaded.kind, ModelKind::Razn);
        assert!(loaded.seg0.bitwise_eq(&state.seg0));
        assert!(loaded.seg1.as_ref().unwrap().bitwise_eq(state.seg1.as_ref().unwrap()));
        assert!(loaded.policy.as_ref().unwrap().bitwise_eq(state.policy.as_ref().unwrap()));
        assert_eq!(loaded.rng.get_word_pos(), state.rng.get_word_pos());
        let mut a = loaded.rng.clone();
        let mut b = state.rng.clone();
        use rand::RngCore;
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn mismatched_config_is_detected() {
        let state = TrainState::new(
            ModelKind::Scale1,
            1,
            SegNetConfig::desk(),
            PolicyNetConfig::desk(),
            ZoomConfig::default(),
            LrSchedule::default(),
            AdamConfig::default(),
        )
        .unwrap();
        let other = SegNetConfig::paper();
        assert!(matches!(
            state.check_compatible(&other, None),
            Err(CoreError::ConfigMismatch(_))
        ));
    }
}
