//! Checkpoint container: a plain-text key/value header describing named
//! entries (shape, byte offset) followed by raw little-endian f32 payloads.
//! Round-trips are byte-exact, so resumed training continues bit-identically.
//!
//! Layout:
//! ```text
//! razn-checkpoint v1
//! step = 1200
//! meta rng_seed = 07000000...
//! store seg0 adam_t = 1200
//! entry seg0/stem.conv.w shape = 8,3,7,7 trainable = 1 offset = 0
//! entry seg0/stem.conv.w#m shape = 8,3,7,7 trainable = 1 offset = 4704
//! ...
//! payload_bytes = 123456
//! ---
//! <raw little-endian f32 data>
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{AutodiffError, Result};
use crate::store::ParamStore;
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &str = "razn-checkpoint v1";

#[derive(Debug, Clone, Default)]
pub struct CheckpointMeta {
    pub step: u64,
    /// Free-form metadata (rng state, mode, config fingerprint, ...).
    /// Order is preserved; keys and values must not contain newlines.
    pub extra: Vec<(String, String)>,
}

impl CheckpointMeta {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.extra
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.extra.push((key.to_string(), value.to_string()));
    }
}

fn shape_string(shape: &[usize]) -> String {
    shape
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|d| {
            d.trim()
                .parse::<usize>()
                .map_err(|_| AutodiffError::CheckpointFormat(format!("bad shape `{s}`")))
        })
        .collect()
}

fn format_err(msg: impl Into<String>) -> AutodiffError {
    AutodiffError::CheckpointFormat(msg.into())
}

pub fn write_checkpoint(
    path: &Path,
    meta: &CheckpointMeta,
    stores: &[(&str, &ParamStore)],
) -> Result<()> {
    let mut header = String::new();
    header.push_str(CHECKPOINT_MAGIC);
    header.push('\n');
    header.push_str(&format!("step = {}\n", meta.step));
    for (k, v) in &meta.extra {
        if k.contains('\n') || v.contains('\n') {
            return Err(format_err(format!("meta `{k}` contains a newline")));
        }
        header.push_str(&format!("meta {k} = {v}\n"));
    }

    let mut payload: Vec<u8> = Vec::new();
    for (ns, store) in stores {
        header.push_str(&format!("store {ns} adam_t = {}\n", store.adam_t));
        for p in store.params() {
            let mut emit = |suffix: &str, t: &Tensor<f32>| {
                header.push_str(&format!(
                    "entry {ns}/{}{suffix} shape = {} trainable = {} offset = {}\n",
                    p.name,
                    shape_string(t.shape()),
                    u8::from(p.trainable),
                    payload.len(),
                ));
                for v in t.data() {
                    payload.extend_from_slice(&v.to_le_bytes());
                }
            };
            emit("", &p.value);
            if p.trainable {
                emit("#m", &p.adam_m);
                emit("#v", &p.adam_v);
            }
        }
    }
    header.push_str(&format!("payload_bytes = {}\n---\n", payload.len()));

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(header.as_bytes())?;
    w.write_all(&payload)?;
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint back into per-namespace stores, in file order.
pub fn read_checkpoint(path: &Path) -> Result<(CheckpointMeta, Vec<(String, ParamStore)>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;

    let sep = b"\n---\n";
    let sep_pos = bytes
        .windows(sep.len())
        .position(|w| w == sep)
        .ok_or_else(|| format_err("missing header/payload separator"))?;
    let header = std::str::from_utf8(&bytes[..sep_pos])
        .map_err(|_| format_err("header is not utf-8"))?;
    let payload = &bytes[sep_pos + sep.len()..];

    let mut lines = header.lines();
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err(format_err("bad magic line"));
    }

    let mut meta = CheckpointMeta::default();
    let mut stores: Vec<(String, ParamStore)> = Vec::new();
    let mut declared_payload: Option<usize> = None;

    for line in lines {
        if let Some(rest) = line.strip_prefix("step = ") {
            meta.step = rest
                .parse()
                .map_err(|_| format_err(format!("bad step `{rest}`")))?;
        } else if let Some(rest) = line.strip_prefix("meta ") {
            let (k, v) = rest
                .split_once(" = ")
                .ok_or_else(|| format_err(format!("bad meta line `{line}`")))?;
            meta.extra.push((k.to_string(), v.to_string()));
        } else if let Some(rest) = line.strip_prefix("store ") {
            let (ns, t) = rest
                .split_once(" adam_t = ")
                .ok_or_else(|| format_err(format!("bad store line `{line}`")))?;
            let mut store = ParamStore::new();
            store.adam_t = t
                .parse()
                .map_err(|_| format_err(format!("bad adam_t `{t}`")))?;
            stores.push((ns.to_string(), store));
        } else if let Some(rest) = line.strip_prefix("entry ") {
            let mut parts = rest.split(" shape = ");
            let full_name = parts
                .next()
                .ok_or_else(|| format_err(format!("bad entry `{line}`")))?;
            let tail = parts
                .next()
                .ok_or_else(|| format_err(format!("bad entry `{line}`")))?;
            let (shape_s, tail) = tail
                .split_once(" trainable = ")
                .ok_or_else(|| format_err(format!("bad entry `{line}`")))?;
            let (trainable_s, offset_s) = tail
                .split_once(" offset = ")
                .ok_or_else(|| format_err(format!("bad entry `{line}`")))?;

            let shape = parse_shape(shape_s)?;
            let trainable = trainable_s == "1";
            let offset: usize = offset_s
                .parse()
                .map_err(|_| format_err(format!("bad offset `{offset_s}`")))?;
            let count: usize = shape.iter().product();
            let end = offset + count * 4;
            if end > payload.len() {
                return Err(format_err(format!(
                    "entry `{full_name}` runs past payload ({end} > {})",
                    payload.len()
                )));
            }
            let mut data = Vec::with_capacity(count);
            for i in 0..count {
                let at = offset + i * 4;
                data.push(f32::from_le_bytes([
                    payload[at],
                    payload[at + 1],
                    payload[at + 2],
                    payload[at + 3],
                ]));
            }
            let tensor = Tensor::from_vec(&shape, data);

            let (ns, name) = full_name
                .split_once('/')
                .ok_or_else(|| format_err(format!("entry `{full_name}` has no namespace")))?;
            let (_, store) = stores
                .iter_mut()
                .rev()
                .find(|(s, _)| s == ns)
                .ok_or_else(|| format_err(format!("entry before store `{ns}`")))?;

            if let Some(base) = name.strip_suffix("#m") {
                store.get_mut(base)?.adam_m = tensor;
            } else if let Some(base) = name.strip_suffix("#v") {
                store.get_mut(base)?.adam_v = tensor;
            } else {
                store.register(name, tensor, trainable)?;
            }
        } else if let Some(rest) = line.strip_prefix("payload_bytes = ") {
            declared_payload = Some(
                rest.parse()
                    .map_err(|_| format_err(format!("bad payload_bytes `{rest}`")))?,
            );
        } else if !line.is_empty() {
            return Err(format_err(format!("unrecognized line `{line}`")));
        }
    }

    if declared_payload != Some(payload.len()) {
        return Err(format_err(format!(
            "payload length {} does not match declared {:?}",
            payload.len(),
            declared_payload
        )));
    }
    Ok((meta, stores))
}
