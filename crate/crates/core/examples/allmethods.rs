use tasklab::envs::default_suite;
use tasklab::harness::{run_training, steps_to_threshold, ArchitectureKind, Method, RunConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let arch = args.get(1).map(|s| s.as_str()).unwrap_or("shared");
    let budget: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1_500_000);
    let n_seeds: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(8);
    let lr: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let eta: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let suite = default_suite();
    let methods: Vec<Method> = match args.get(6).map(|s| s.as_str()) {
        Some("rest") => vec![Method::HardFirst, Method::EasyFirst, Method::ReweightReturnGap],
        _ => vec![
            Method::ReturnGap,
            Method::Uniform,
            Method::LearningProgress,
            Method::LearningPotential,
            Method::HardFirst,
            Method::EasyFirst,
            Method::ReweightReturnGap,
        ],
    };
    for method in methods {
        let mut steps_list = Vec::new();
        let mut censored = 0;
        let mut final_success_sum = 0.0;
        for seed in 0..n_seeds {
            let mut cfg = RunConfig::new(method, seed, budget);
            cfg.learner.learning_rate = lr;
            cfg.sampler.eta = eta;
            if let Some(coef) = args.get(7).and_then(|s| s.parse::<f64>().ok()) {
                cfg.learner.entropy_coef = coef;
            }
            if method == Method::EasyFirst {
                cfg.sampler.easy_first.ranking = Some(vec![0, 1, 2, 3]);
            }
            if arch == "separate" {
                cfg.learner.architecture = ArchitectureKind::Separate;
            }
            let out = run_training(&cfg, &suite).unwrap();
            let steps = steps_to_threshold(&out.records, 0.95).unwrap_or_else(|| {
                censored += 1;
                budget
            });
            final_success_sum += out.records.last().map(|r| r.mean_success()).unwrap_or(0.0);
            steps_list.push(steps);
        }
        let mean = steps_list.iter().sum::<u64>() / n_seeds;
        steps_list.sort_unstable();
        println!(
            "{:<20} mean={:>8} median={:>8} max={:>8} censored={} final_succ={:.3}",
            method.name(), mean, steps_list[steps_list.len() / 2],
            steps_list.last().unwrap(), censored, final_success_sum / n_seeds as f64
        );
    }
}
