//! Finest-level tile rendering: glass and tissue base colors, then the
//! per-class dot fields. All placement is counter-based, so any tile renders
//! identically whether drawn alone or as part of the whole slide.

use crate::model::RegionModel;
use crate::rng::{domains, pixel_noise, KeyedRng};
use crate::spec::{Arrangement, ClassTexture, SynthSpec};

const GLASS: [f64; 3] = [246.0, 246.0, 244.0];
const WASH: [f64; 3] = [232.0, 200.0, 214.0];
const DOT: [f64; 3] = [92.0, 64.0, 120.0];
const DOT_OPACITY: f64 = 0.92;

pub struct TileRender {
    pub rgb: Vec<u8>,
    pub labels: Vec<u8>,
}

struct Dot {
    x: f64,
    y: f64,
    r: f64,
}

fn texture_for(spec: &SynthSpec, class: u8) -> &ClassTexture {
    match class {
        0 => &spec.texture.normal,
        1 => &spec.texture.benign,
        2 => &spec.texture.in_situ,
        _ => &spec.texture.invasive,
    }
}

/// Dots from the per-cell random fields whose centers fall near the window
/// [x0, x0+extent) x [y0, y0+extent).
fn random_dots(
    spec: &SynthSpec,
    model: &RegionModel,
    x0: f64,
    y0: f64,
    extent: f64,
    out: &mut Vec<Dot>,
) {
    let cell = spec.texture.cell_size as f64;
    let reach = 4.0;
    let cx_lo = ((x0 - reach) / cell).floor().max(0.0) as i64;
    let cy_lo = ((y0 - reach) / cell).floor().max(0.0) as i64;
    let cx_hi = ((x0 + extent + reach) / cell).floor() as i64;
    let cy_hi = ((y0 + extent + reach) / cell).floor() as i64;
    let max_cell = (spec.finest_dim as f64 / cell).ceil() as i64 - 1;

    for cy in cy_lo..=cy_hi.min(max_cell) {
        for cx in cx_lo..=cx_hi.min(max_cell) {
            let center_x = (cx as f64 + 0.5) * cell;
            let center_y = (cy as f64 + 0.5) * cell;
            let class = model.class_at(center_x, center_y);
            let tex = texture_for(spec, class);
            if tex.arrangement != Arrangement::Random || tex.dots_per_cell <= 0.0 {
                continue;
            }
            // class 0 covers both glass and normal tissue; dots sit on tissue
            if class == 0 && !model.tissue_at(center_x, center_y) {
                continue;
            }
            let mut rng = KeyedRng::new(spec.seed, domains::CELL_DOTS, cx as u64, cy as u64);
            let n = tex.dots_per_cell.floor() as usize
                + usize::from(rng.chance(tex.dots_per_cell.fract()));
            // contain dots fully inside the cell so every cell-integrated
            // quantity is position-independent
            let margin = (tex.dot_radius + 0.75).min(cell / 2.0 - 0.1);
            for _ in 0..n {
                let dx = rng.range(margin, cell - margin);
                let dy = rng.range(margin, cell - margin);
                let px = cx as f64 * cell + dx;
                let py = cy as f64 * cell + dy;
                let same_class = model.class_at(px, py) == class;
                let on_tissue = class != 0 || model.tissue_at(px, py);
                if same_class && on_tissue {
                    out.push(Dot {
                        x: px,
                        y: py,
                        r: tex.dot_radius,
                    });
                }
            }
        }
    }
}

/// Dots from the block-grid fields (the carcinoma analogues). One candidate
/// per block; the same jitter and direction draws are made for every block,
/// so two grid classes differ only by their displacement magnitude.
fn grid_dots(
    spec: &SynthSpec,
    model: &RegionModel,
    x0: f64,
    y0: f64,
    extent: f64,
    out: &mut Vec<Dot>,
) {
    let spacing = spec.texture.in_situ.spacing;
    debug_assert_eq!(
        spec.texture.in_situ.spacing, spec.texture.invasive.spacing,
        "grid classes share one block grid"
    );
    if spacing <= 0.0 {
        return;
    }
    let reach = 8.0;
    let bx_lo = ((x0 - reach) / spacing).floor().max(0.0) as i64;
    let by_lo = ((y0 - reach) / spacing).floor().max(0.0) as i64;
    let bx_hi = ((x0 + extent + reach) / spacing).floor() as i64;
    let by_hi = ((y0 + extent + reach) / spacing).floor() as i64;
    let max_block = (spec.finest_dim as f64 / spacing).ceil() as i64 - 1;

    const DIAGONALS: [(f64, f64); 4] = [
        (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
        (-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
        (std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
        (-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
    ];

    for by in by_lo..=by_hi.min(max_block) {
        for bx in bx_lo..=bx_hi.min(max_block) {
            let center_x = (bx as f64 + 0.5) * spacing;
            let center_y = (by as f64 + 0.5) * spacing;
            let class = model.class_at(center_x, center_y);
            let tex = texture_for(spec, class);
            if tex.arrangement != Arrangement::Grid {
                continue;
            }
            let mut rng = KeyedRng::new(spec.seed, domains::BLOCK_DOTS, bx as u64, by as u64);
            // the same draws are made for every grid class, so two grid
            // textures differ only by their displacement magnitude
            let jx = rng.range(-0.25, 0.25);
            let jy = rng.range(-0.25, 0.25);
            let dir = DIAGONALS[(rng.next_u64() % 4) as usize];
            let px = center_x + jx + tex.displacement * dir.0;
            let py = center_y + jy + tex.displacement * dir.1;
            if model.class_at(px, py) == class {
                out.push(Dot {
                    x: px,
                    y: py,
                    r: tex.dot_radius,
                });
            }
        }
    }
}

/// Renders one finest-level tile (image and annotation labels).
pub fn render_finest_tile(
    spec: &SynthSpec,
    model: &RegionModel,
    tile_row: usize,
    tile_col: usize,
) -> TileRender {
    let ts = spec.tile_size;
    let y0 = (tile_row * ts) as f64;
    let x0 = (tile_col * ts) as f64;

    let mut mottle_rng = KeyedRng::new(spec.seed, domains::MOTTLE, 0, 0);
    let mphase = [
        mottle_rng.range(0.0, std::f64::consts::TAU),
        mottle_rng.range(0.0, std::f64::consts::TAU),
    ];

    let mut rgb = vec![0u8; ts * ts * 3];
    let mut labels = vec![0u8; ts * ts];
    let mut base = vec![[0.0f64; 3]; ts * ts];

    for r in 0..ts {
        for c in 0..ts {
            let y = y0 + r as f64 + 0.5;
            let x = x0 + c as f64 + 0.5;
            let idx = r * ts + c;
            labels[idx] = model.label_at(x, y);

            let noise = pixel_noise(
                spec.seed,
                domains::PIXEL_NOISE,
                (x0 as usize) + c,
                (y0 as usize) + r,
                1.0,
            );
            if model.tissue_at(x, y) {
                let mottle =
                    5.0 * (x / 97.0 + mphase[0]).sin() * (y / 131.0 + mphase[1]).sin();
                for ch in 0..3 {
                    base[idx][ch] = WASH[ch] + mottle + noise * 3.0;
                }
            } else {
                for ch in 0..3 {
                    base[idx][ch] = GLASS[ch] + noise * 2.0;
                }
            }
        }
    }

    let mut dots = Vec::new();
    random_dots(spec, model, x0, y0, ts as f64, &mut dots);
    grid_dots(spec, model, x0, y0, ts as f64, &mut dots);

    for dot in &dots {
        let lo_r = ((dot.y - dot.r - 1.0 - y0).floor().max(0.0)) as usize;
        let hi_r = ((dot.y + dot.r + 1.0 - y0).ceil().min(ts as f64 - 1.0)) as usize;
        let lo_c = ((dot.x - dot.r - 1.0 - x0).floor().max(0.0)) as usize;
        let hi_c = ((dot.x + dot.r + 1.0 - x0).ceil().min(ts as f64 - 1.0)) as usize;
        if (dot.y + dot.r + 1.0) < y0 || (dot.x + dot.r + 1.0) < x0 {
            continue;
        }
        for r in lo_r..=hi_r {
            for c in lo_c..=hi_c {
                let py = y0 + r as f64 + 0.5;
                let px = x0 + c as f64 + 0.5;
                let dist = ((px - dot.x) * (px - dot.x) + (py - dot.y) * (py - dot.y)).sqrt();
                let cover = (dot.r + 0.5 - dist).clamp(0.0, 1.0);
                if cover > 0.0 {
                    let alpha = cover * DOT_OPACITY;
                    let cell = &mut base[r * ts + c];
                    for ch in 0..3 {
                        cell[ch] += (DOT[ch] - cell[ch]) * alpha;
                    }
                }
            }
        }
    }

    for (idx, px) in base.iter().enumerate() {
        for ch in 0..3 {
            rgb[idx * 3 + ch] = px[ch].round().clamp(0.0, 255.0) as u8;
        }
    }

    TileRender { rgb, labels }
}
