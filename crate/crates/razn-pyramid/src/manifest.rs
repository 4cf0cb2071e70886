//! Dataset manifest: a small structured-text file at the pyramid root.

use std::fs;
use std::path::Path;

use crate::error::{io_err, PyramidError, Result};

pub const MANIFEST_MAGIC: &str = "razn-pyramid v1";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub zoom_rate: usize,
    pub tile_size: usize,
    pub classes: Vec<String>,
    pub seed: u64,
    /// (height, width) per level, coarsest first.
    pub level_dims: Vec<(usize, usize)>,
}

impl Manifest {
    pub fn levels(&self) -> usize {
        self.level_dims.len()
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(PyramidError::Manifest(msg));
        if self.zoom_rate < 2 {
            return err(format!("zoom rate must be >= 2, got {}", self.zoom_rate));
        }
        if self.level_dims.is_empty() {
            return err("no levels".into());
        }
        if self.classes.is_empty() || self.classes.len() > 255 {
            return err(format!("bad class count {}", self.classes.len()));
        }
        for (l, &(h, w)) in self.level_dims.iter().enumerate() {
            if h == 0 || w == 0 {
                return err(format!("level {l} has zero extent"));
            }
            if h % self.tile_size != 0 || w % self.tile_size != 0 {
                return err(format!(
                    "level {l} dims {h}x{w} not divisible by tile size {}",
                    self.tile_size
                ));
            }
            if l > 0 {
                let (ph, pw) = self.level_dims[l - 1];
                if h != ph * self.zoom_rate || w != pw * self.zoom_rate {
                    return err(format!(
                        "level {l} dims {h}x{w} are not rate x level {} dims {ph}x{pw}",
                        l - 1
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(MANIFEST_MAGIC);
        s.push('\n');
        s.push_str(&format!("zoom_rate = {}\n", self.zoom_rate));
        s.push_str(&format!("levels = {}\n", self.levels()));
        s.push_str(&format!("tile_size = {}\n", self.tile_size));
        s.push_str(&format!("classes = {}\n", self.classes.join(",")));
        s.push_str(&format!("seed = {}\n", self.seed));
        for (l, (h, w)) in self.level_dims.iter().enumerate() {
            s.push_str(&format!("level {l} dims = {h} {w}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Manifest> {
        let err = |msg: String| PyramidError::Manifest(msg);
        let mut lines = text.lines();
        if lines.next() != Some(MANIFEST_MAGIC) {
            return Err(err("bad magic line".into()));
        }
        let mut zoom_rate = None;
        let mut levels = None;
        let mut tile_size = None;
        let mut classes = None;
        let mut seed = None;
        let mut level_dims: Vec<(usize, usize)> = Vec::new();

        for line in lines {
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(" = ")
                .ok_or_else(|| err(format!("bad line `{line}`")))?;
            match key {
                "zoom_rate" => zoom_rate = Some(parse_num(value)?),
                "levels" => levels = Some(parse_num(value)?),
                "tile_size" => tile_size = Some(parse_num(value)?),
                "classes" => {
                    classes = Some(value.split(',').map(|s| s.to_string()).collect::<Vec<_>>())
                }
                "seed" => {
                    seed = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| err(format!("bad seed `{value}`")))?,
                    )
                }
                k if k.starts_with("level ") => {
                    let idx: usize = k
                        .trim_start_matches("level ")
                        .trim_end_matches(" dims")
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad level key `{k}`")))?;
                    if idx != level_dims.len() {
                        return Err(err(format!("level {idx} out of order")));
                    }
                    let mut dims = value.split_whitespace();
                    let h = parse_num(dims.next().unwrap_or(""))?;
                    let w = parse_num(dims.next().unwrap_or(""))?;
                    level_dims.push((h, w));
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }

        let manifest = Manifest {
            zoom_rate: zoom_rate.ok_or_else(|| err("missing zoom_rate".into()))?,
            tile_size: tile_size.ok_or_else(|| err("missing tile_size".into()))?,
            classes: classes.ok_or_else(|| err("missing classes".into()))?,
            seed: seed.ok_or_else(|| err("missing seed".into()))?,
            level_dims,
        };
        if Some(manifest.levels()) != levels {
            return Err(err(format!(
                "declared {levels:?} levels but listed {}",
                manifest.levels()
            )));
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn write_to(&self, root: &Path) -> Result<()> {
        self.validate()?;
        let path = root.join(MANIFEST_FILE);
        fs::write(&path, self.to_text()).map_err(|e| io_err(&path, e))
    }

    pub fn read_from(root: &Path) -> Result<Manifest> {
        let path = root.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        Manifest::from_text(&text)
    }
}

fn parse_num(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| PyramidError::Manifest(format!("bad number `{s}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Manifest {
        Manifest {
            zoom_rate: 2,
            tile_size: 128,
            classes: vec![
                "normal".into(),
                "benign".into(),
                "in_situ".into(),
                "invasive".into(),
            ],
            seed: 7,
            level_dims: vec![(256, 256), (512, 512), (1024, 1024)],
        }
    }

    #[test]
    fn text_round_trip() {
        let m = sample();
        let back = Manifest::from_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn rejects_non_doubling_levels() {
        let mut m = sample();
        m.level_dims[2] = (768, 1024);
        assert!(m.validate().is_err());
    }

    #[test]
    fn rejects_untiled_dims() {
        let mut m = sample();
        m.level_dims[0] = (200, 256);
        assert!(m.validate().is_err());
    }
}
