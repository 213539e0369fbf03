use tasklab::envs::default_suite;
use tasklab::oracles::{cosine_study, samples_to_cosine};

fn main() {
    let sizes: Vec<usize> = (0..=14).map(|e| 1usize << e).collect();
    let study = cosine_study(&default_suite(), &sizes, 64, 20_260_809);
    for (name, curve) in &study {
        let cross = samples_to_cosine(curve, 0.2);
        let non_dec = curve.windows(2).all(|w| w[1].cosine >= w[0].cosine - 1e-12);
        let points: Vec<String> = curve
            .iter()
            .step_by(2)
            .map(|p| format!("{}:{:.3}", p.n_episodes, p.cosine))
            .collect();
        println!("{name}: cross0.2={cross:?} monotone={non_dec} [{}]", points.join(" "));
    }
}
