//! Zoom coordinate arithmetic, grid cropping, stitching and label
//! downsampling.

use crate::error::{PyramidError, Result};
use crate::types::{IntMask, PatchGrid, PatchRef};

/// Maps a window at level l to the window covering the same physical region
/// at level l+1: origin and extent scale by the zoom rate.
pub fn zoom_region(levels: usize, rate: usize, patch: &PatchRef) -> Result<PatchRef> {
    if patch.level + 1 >= levels {
        return Err(PyramidError::MaxMagnification {
            level: patch.level,
            levels,
        });
    }
    Ok(PatchRef::new(
        patch.level + 1,
        patch.row * rate,
        patch.col * rate,
        patch.h * rate,
        patch.w * rate,
    ))
}

/// Splits a zoomed window of extent (r*H, r*W) into r*r children of (H, W),
/// row-major. They partition the parent exactly.
pub fn crop_grid(parent: &PatchRef, rate: usize) -> Result<PatchGrid> {
    if rate == 0 || parent.h % rate != 0 || parent.w % rate != 0 {
        return Err(PyramidError::IndivisibleExtent {
            h: parent.h,
            w: parent.w,
            r: rate,
        });
    }
    let ch = parent.h / rate;
    let cw = parent.w / rate;
    let mut children = Vec::with_capacity(rate * rate);
    for gr in 0..rate {
        for gc in 0..rate {
            children.push(PatchRef::new(
                parent.level,
                parent.row + gr * ch,
                parent.col + gc * cw,
                ch,
                cw,
            ));
        }
    }
    Ok(PatchGrid {
        parent: *parent,
        rate,
        children,
    })
}

/// Reassembles r*r row-major child masks into the parent window. Exact
/// inverse of cropping a mask along `crop_grid`.
pub fn stitch(children: &[IntMask], rate: usize) -> Result<IntMask> {
    let expected = rate * rate;
    if children.is_empty() || children.len() != expected {
        return Err(PyramidError::StitchMismatch {
            expected,
            h: 0,
            w: 0,
            detail: format!("{} masks", children.len()),
        });
    }
    let (h, w) = (children[0].h, children[0].w);
    for (i, m) in children.iter().enumerate() {
        if (m.h, m.w) != (h, w) {
            return Err(PyramidError::StitchMismatch {
                expected,
                h,
                w,
                detail: format!("child {i} has extent {}x{}", m.h, m.w),
            });
        }
    }
    let mut out = IntMask::filled(h * rate, w * rate, 0);
    for gr in 0..rate {
        for gc in 0..rate {
            let child = &children[gr * rate + gc];
            for r in 0..h {
                let dst = (gr * h + r) * out.w + gc * w;
                let src = r * w;
                out.data[dst..dst + w].copy_from_slice(&child.data[src..src + w]);
            }
        }
    }
    Ok(out)
}

/// Majority vote per r*r block. Ties go to the largest class index present
/// in the block, which keeps the rule deterministic.
pub fn label_downsample(fine: &IntMask, rate: usize) -> Result<IntMask> {
    if rate == 0 || fine.h % rate != 0 || fine.w % rate != 0 {
        return Err(PyramidError::IndivisibleExtent {
            h: fine.h,
            w: fine.w,
            r: rate,
        });
    }
    let h = fine.h / rate;
    let w = fine.w / rate;
    let mut out = IntMask::filled(h, w, 0);
    let mut counts = [0u32; 256];
    for r in 0..h {
        for c in 0..w {
            let mut seen: Vec<u8> = Vec::with_capacity(rate * rate);
            for br in 0..rate {
                for bc in 0..rate {
                    let v = fine.at(r * rate + br, c * rate + bc);
                    if counts[v as usize] == 0 {
                        seen.push(v);
                    }
                    counts[v as usize] += 1;
                }
            }
            let mut best = 0u8;
            let mut best_count = 0u32;
            for &v in &seen {
                let n = counts[v as usize];
                if n > best_count || (n == best_count && v > best) {
                    best = v;
                    best_count = n;
                }
            }
            for &v in &seen {
                counts[v as usize] = 0;
            }
            out.set(r, c, best);
        }
    }
    Ok(out)
}

/// Nearest-neighbor upsample by integer replication; the degenerate inverse
/// of `label_downsample`.
pub fn replicate(mask: &IntMask, factor: usize) -> IntMask {
    assert!(factor >= 1);
    if factor == 1 {
        return mask.clone();
    }
    let mut out = IntMask::filled(mask.h * factor, mask.w * factor, 0);
    for r in 0..out.h {
        for c in 0..out.w {
            out.set(r, c, mask.at(r / factor, c / factor));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoom_scales_origin_and_extent() {
        let p = PatchRef::new(0, 10, 20, 256, 256);
        let z = zoom_region(3, 2, &p).unwrap();
        assert_eq!(z, PatchRef::new(1, 20, 40, 512, 512));
    }

    #[test]
    fn zoom_full_level_gives_full_next_level() {
        let p = PatchRef::new(0, 0, 0, 128, 96);
        let z = zoom_region(2, 2, &p).unwrap();
        assert_eq!(z, PatchRef::new(1, 0, 0, 256, 192));
    }

    #[test]
    fn zoom_past_top_is_rejected() {
        let p = PatchRef::new(2, 0, 0, 8, 8);
        assert!(matches!(
            zoom_region(3, 2, &p),
            Err(PyramidError::MaxMagnification { .. })
        ));
    }

    #[test]
    fn zoom_preserves_disjointness() {
        let a = PatchRef::new(0, 0, 0, 64, 64);
        let b = PatchRef::new(0, 64, 0, 64, 64);
        assert!(!a.overlaps(&b));
        let za = zoom_region(2, 2, &a).unwrap();
        let zb = zoom_region(2, 2, &b).unwrap();
        assert!(!za.overlaps(&zb));
    }

    #[test]
    fn crop_splits_into_children() {
        let p = PatchRef::new(1, 0, 0, 512, 512);
        let g = crop_grid(&p, 2).unwrap();
        assert_eq!(g.children.len(), 4);
        assert!(g.children.iter().all(|c| (c.h, c.w) == (256, 256)));
        assert_eq!(g.children[3], PatchRef::new(1, 256, 256, 256, 256));
    }

    #[test]
    fn crop_rate_one_is_identity() {
        let p = PatchRef::new(1, 8, 4, 32, 32);
        let g = crop_grid(&p, 1).unwrap();
        assert_eq!(g.children, vec![p]);
    }

    #[test]
    fn crop_children_partition_parent() {
        let p = PatchRef::new(0, 12, 24, 9, 9);
        let g = crop_grid(&p, 3).unwrap();
        let total: usize = g.children.iter().map(|c| c.area()).sum();
        assert_eq!(total, p.area());
        for i in 0..g.children.len() {
            for j in i + 1..g.children.len() {
                assert!(!g.children[i].overlaps(&g.children[j]));
            }
        }
    }

    #[test]
    fn crop_rejects_indivisible() {
        let p = PatchRef::new(0, 0, 0, 10, 10);
        assert!(matches!(
            crop_grid(&p, 3),
            Err(PyramidError::IndivisibleExtent { .. })
        ));
    }

    #[test]
    fn stitch_inverts_crop() {
        let mask = IntMask::new(4, 4, (0u8..16).map(|v| v % 4).collect());
        let children: Vec<IntMask> = crop_grid(&PatchRef::new(0, 0, 0, 4, 4), 2)
            .unwrap()
            .children
            .iter()
            .map(|c| mask.window(c.row, c.col, c.h, c.w).unwrap())
            .collect();
        let back = stitch(&children, 2).unwrap();
        assert_eq!(back, mask);
    }

    #[test]
    fn stitch_constant_children_stay_constant() {
        let children = vec![IntMask::filled(3, 3, 2); 4];
        let s = stitch(&children, 2).unwrap();
        assert!(s.data.iter().all(|&v| v == 2));
    }

    #[test]
    fn stitch_rate_one_is_identity() {
        let m = IntMask::new(2, 2, vec![1, 2, 3, 0]);
        assert_eq!(stitch(std::slice::from_ref(&m), 1).unwrap(), m);
    }

    #[test]
    fn stitch_rejects_mismatched_children() {
        let children = vec![
            IntMask::filled(2, 2, 0),
            IntMask::filled(2, 3, 0),
            IntMask::filled(2, 2, 0),
            IntMask::filled(2, 2, 0),
        ];
        assert!(matches!(
            stitch(&children, 2),
            Err(PyramidError::StitchMismatch { .. })
        ));
    }

    #[test]
    fn majority_vote_downsample() {
        let m = IntMask::new(2, 2, vec![0, 0, 0, 1]);
        assert_eq!(label_downsample(&m, 2).unwrap().data, vec![0]);
    }

    #[test]
    fn tie_break_takes_larger_class() {
        let m = IntMask::new(2, 2, vec![2, 2, 3, 3]);
        assert_eq!(label_downsample(&m, 2).unwrap().data, vec![3]);
    }

    #[test]
    fn uniform_mask_stays_uniform() {
        let m = IntMask::filled(6, 6, 1);
        let d = label_downsample(&m, 3).unwrap();
        assert!(d.data.iter().all(|&v| v == 1));
    }

    #[test]
    fn downsample_inverts_replication() {
        let m = IntMask::new(2, 3, vec![0, 1, 2, 3, 1, 0]);
        for factor in [2usize, 3, 4] {
            let up = replicate(&m, factor);
            let back = label_downsample(&up, factor).unwrap();
            assert_eq!(back, m);
        }
    }
}
