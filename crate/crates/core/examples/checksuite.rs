use tasklab::envs::{default_suite, shortest_path_len, success_probability, to_tabular, uniform_policy, Cell};

fn main() {
    let suite = default_suite();
    for spec in &suite.tasks {
        let mdp = to_tabular(spec, 0.99);
        let p = success_probability(&mdp, &uniform_policy(&mdp), spec.max_steps);
        println!("{}: {}x{} bfs={:?} random success {:.3e}",
            spec.name, spec.width, spec.height, shortest_path_len(spec), p);
    }
    for a in 0..suite.tasks.len() {
        for b in a + 1..suite.tasks.len() {
            let w = suite.tasks[0].width;
            let h = suite.tasks[0].height;
            let shared: Vec<Cell> = (0..w * h)
                .map(|i| Cell::new(i / w, i % w))
                .filter(|&c| !suite.tasks[a].is_wall(c) && !suite.tasks[b].is_wall(c))
                .collect();
            if !shared.is_empty() {
                println!("overlap {} & {}: {} cells", suite.tasks[a].name, suite.tasks[b].name, shared.len());
            }
        }
    }
}
