use razn_core::*;
use razn_pyramid::*;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let ckpt = &args[1];
    let ds = PyramidDataset::open(std::path::Path::new("/tmp/razn-desk/data")).unwrap();
    let mut reader = ds.reader();
    let state = TrainState::load(std::path::Path::new(ckpt)).unwrap();
    let sampler = GridSampler::build(&ds, 64, 4, 0.0).unwrap();
    let refs = sampler.refs_for(Split::All);
    let probs = policy_probabilities(&state, &ds, &refs).unwrap();

    let mut cats: std::collections::BTreeMap<&str, Vec<(f64, f64, f64)>> = Default::default();
    for (patch, p) in refs.iter().zip(probs.iter()) {
        let labels = reader.read_labels(patch).unwrap();
        let has = |c: u8| labels.data.iter().any(|&v| v == c);
        let cat = if has(2) || has(3) {
            "carcinoma"
        } else if has(1) {
            "benign"
        } else {
            "normal"
        };
        let sample = load_sample(&mut reader, patch, true, 2).unwrap();
        let img4 = razn_autodiff::Tensor::stack(&[&sample.image]);
        let logits = state.seg_net.forward_stats(&state.seg0, &img4).unwrap();
        let j0 = seg_loss(&logits, &[&sample.labels], 4).unwrap();
        let child_imgs: Vec<&razn_autodiff::Tensor<f32>> = sample.child_images.iter().collect();
        let child_labs: Vec<&IntMask> = sample.child_labels.iter().collect();
        let cb = razn_autodiff::Tensor::stack(&child_imgs);
        let logits1 = state
            .seg_net
            .forward_stats(state.seg1.as_ref().unwrap(), &cb)
            .unwrap();
        let j1 = seg_loss(&logits1, &child_labs, 4).unwrap();
        cats.entry(cat).or_default().push((*p, j0, j1));
    }
    for (cat, items) in cats {
        let n = items.len() as f64;
        let mp = items.iter().map(|x| x.0).sum::<f64>() / n;
        let mj0 = items.iter().map(|x| x.1).sum::<f64>() / n;
        let mj1 = items.iter().map(|x| x.2).sum::<f64>() / n;
        let r: f64 = items
            .iter()
            .map(|x| ((x.1 - x.2) / x.1.max(0.05)).clamp(-1.0, 1.0))
            .sum::<f64>()
            / n;
        println!(
            "{cat}: n={} p_tilde={mp:.3} J0={mj0:.4} J1={mj1:.4} clamped_R_ld={r:.3}",
            items.len()
        );
    }
}
