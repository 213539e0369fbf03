use tasklab::envs::default_suite;
use tasklab::harness::{run_training, ArchitectureKind, Method, RunConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let method = Method::parse(&args[1]).unwrap();
    let eta: f64 = args[2].parse().unwrap();
    let lr: f64 = args[3].parse().unwrap();
    let seed: u64 = args[4].parse().unwrap();
    let budget: u64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(2_000_000);
    let suite = default_suite();
    let mut cfg = RunConfig::new(method, seed, budget);
    cfg.sampler.eta = eta;
    cfg.learner.learning_rate = lr;
    cfg.learner.architecture = ArchitectureKind::Separate;
    let out = run_training(&cfg, &suite).unwrap();
    let n = out.records.len();
    for (i, r) in out.records.iter().enumerate() {
        if i % (n / 18).max(1) == 0 || r.mean_success() >= 0.95 {
            let succ: Vec<String> = r.per_task.iter().map(|t| format!("{:.2}", t.success_rate)).collect();
            let gaps: Vec<String> = r.per_task.iter().map(|t| format!("{:.2}", t.gap)).collect();
            let qs: Vec<String> = r.per_task.iter().map(|t| format!("{:.2}", t.q)).collect();
            let rets: Vec<String> = r.per_task.iter().map(|t| format!("{:.2}", t.return_mean)).collect();
            println!("it {:>5} steps {:>8} mean {:.3} succ [{}] ret [{}] gap [{}] q [{}]",
                r.iteration, r.env_steps, r.mean_success(), succ.join(" "), rets.join(" "), gaps.join(" "), qs.join(" "));
            if r.mean_success() >= 0.95 { break; }
        }
    }
}
