//! Human-readable suite files: ASCII board art plus metadata, in TOML.
//!
//! Legend: `S` start, `G` goal, `#` wall, `.` open floor. Example task entry:
//!
//! ```toml
//! version = 1
//! gamma = 0.99
//!
//! [[tasks]]
//! name = "span-3"
//! max_steps = 15
//! step_reward = -0.001
//! goal_reward = 1.0
//! map = """
//! S......
//! .......
//! .G.....
//! """
//! ```

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::gridworld::{Cell, EnvError, GridworldSpec};

/// A set of gridworld tasks trained together, plus the discount they share.
#[derive(Debug, Clone, PartialEq)]
pub struct GridworldSuite {
    pub gamma: f64,
    pub tasks: Vec<GridworldSpec>,
}

impl GridworldSuite {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SuiteDoc {
    version: u32,
    gamma: f64,
    tasks: Vec<TaskDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TaskDoc {
    name: String,
    max_steps: usize,
    step_reward: f64,
    goal_reward: f64,
    map: String,
}

fn parse_map(name: &str, map: &str) -> Result<(usize, usize, BTreeSet<Cell>, Cell, Cell), EnvError> {
    let rows: Vec<&str> = map.lines().filter(|l| !l.trim().is_empty()).collect();
    if rows.is_empty() {
        return Err(EnvError::BadMap(format!("{name}: empty map")));
    }
    let width = rows[0].chars().count();
    let height = rows.len();
    let mut walls = BTreeSet::new();
    let mut start = None;
    let mut goal = None;
    for (r, row) in rows.iter().enumerate() {
        if row.chars().count() != width {
            return Err(EnvError::BadMap(format!(
                "{name}: row {r} has width {} but expected {width}",
                row.chars().count()
            )));
        }
        for (c, ch) in row.chars().enumerate() {
            let cell = Cell::new(r, c);
            match ch {
                '.' => {}
                '#' => {
                    walls.insert(cell);
                }
                'S' => {
                    if start.replace(cell).is_some() {
                        return Err(EnvError::BadMap(format!("{name}: multiple starts")));
                    }
                }
                'G' => {
                    if goal.replace(cell).is_some() {
                        return Err(EnvError::BadMap(format!("{name}: multiple goals")));
                    }
                }
                other => {
                    return Err(EnvError::BadMap(format!(
                        "{name}: unexpected character {other:?} at row {r} col {c}"
                    )));
                }
            }
        }
    }
    let start = start.ok_or_else(|| EnvError::BadMap(format!("{name}: missing start")))?;
    let goal = goal.ok_or_else(|| EnvError::BadMap(format!("{name}: missing goal")))?;
    Ok((width, height, walls, start, goal))
}

fn render_map(spec: &GridworldSpec) -> String {
    let mut out = String::with_capacity((spec.width + 1) * spec.height);
    for row in 0..spec.height {
        for col in 0..spec.width {
            let cell = Cell::new(row, col);
            let ch = if cell == spec.start {
                'S'
            } else if cell == spec.goal {
                'G'
            } else if spec.is_wall(cell) {
                '#'
            } else {
                '.'
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out
}

/// Parses a suite file, validating every board.
pub fn parse_suite(text: &str) -> Result<GridworldSuite, EnvError> {
    let doc: SuiteDoc =
        toml::from_str(text).map_err(|e| EnvError::BadMap(format!("toml: {e}")))?;
    if doc.version != 1 {
        return Err(EnvError::BadMap(format!(
            "unsupported suite version {}",
            doc.version
        )));
    }
    let mut tasks = Vec::with_capacity(doc.tasks.len());
    for task in &doc.tasks {
        let (width, height, walls, start, goal) = parse_map(&task.name, &task.map)?;
        tasks.push(GridworldSpec::new(
            task.name.clone(),
            width,
            height,
            walls,
            start,
            goal,
            task.step_reward,
            task.goal_reward,
            task.max_steps,
        )?);
    }
    Ok(GridworldSuite {
        gamma: doc.gamma,
        tasks,
    })
}

/// Serializes a suite back to the file format.
pub fn write_suite(suite: &GridworldSuite) -> String {
    let mut out = String::new();
    writeln!(out, "version = 1").unwrap();
    writeln!(out, "gamma = {:?}", suite.gamma).unwrap();
    for task in &suite.tasks {
        writeln!(out).unwrap();
        writeln!(out, "[[tasks]]").unwrap();
        writeln!(out, "name = {:?}", task.name).unwrap();
        writeln!(out, "max_steps = {}", task.max_steps).unwrap();
        writeln!(out, "step_reward = {:?}", task.step_reward).unwrap();
        writeln!(out, "goal_reward = {:?}", task.goal_reward).unwrap();
        writeln!(out, "map = \"\"\"").unwrap();
        out.push_str(&render_map(task));
        writeln!(out, "\"\"\"").unwrap();
    }
    out
}

/// The checked-in four-task suite with shortest paths 3, 6, 9, 12.
pub fn default_suite() -> GridworldSuite {
    parse_suite(include_str!("default_suite.toml")).expect("embedded default suite is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::gridworld::{
        build_gridworld_suite, shortest_path_len, SuiteParams, DEFAULT_PROFILE,
    };

    #[test]
    fn round_trip_preserves_every_task() {
        let suite = GridworldSuite {
            gamma: 0.99,
            tasks: build_gridworld_suite(&DEFAULT_PROFILE, &SuiteParams::default()).unwrap(),
        };
        let text = write_suite(&suite);
        let parsed = parse_suite(&text).unwrap();
        assert_eq!(parsed, suite);
    }

    #[test]
    fn default_suite_has_the_standard_shape() {
        let suite = default_suite();
        assert_eq!(suite.gamma, 0.99);
        assert_eq!(suite.len(), DEFAULT_PROFILE.len());
        for (task, &want) in suite.tasks.iter().zip(DEFAULT_PROFILE.iter()) {
            assert_eq!(shortest_path_len(task), Some(want), "{}", task.name);
            assert_eq!((task.width, task.height), (9, 9));
            assert_eq!(task.max_steps, 15);
            assert_eq!(task.step_reward, -0.001);
            assert_eq!(task.goal_reward, 1.0);
        }
    }

    #[test]
    fn generated_suites_keep_the_requested_profile() {
        let generated = build_gridworld_suite(&DEFAULT_PROFILE, &SuiteParams::default()).unwrap();
        for (task, &want) in generated.iter().zip(DEFAULT_PROFILE.iter()) {
            assert_eq!(shortest_path_len(task), Some(want));
        }
    }

    #[test]
    fn parse_rejects_malformed_maps() {
        let base = |map: &str| {
            format!(
                "version = 1\ngamma = 0.99\n[[tasks]]\nname = \"x\"\nmax_steps = 15\nstep_reward = -0.001\ngoal_reward = 1.0\nmap = \"\"\"\n{map}\"\"\"\n"
            )
        };
        assert!(parse_suite(&base("S.G\n..\n")).is_err()); // ragged rows
        assert!(parse_suite(&base("S..\n...\n")).is_err()); // missing goal
        assert!(parse_suite(&base("S.G\nS..\n")).is_err()); // duplicate start
        assert!(parse_suite(&base("S?G\n...\n")).is_err()); // bad character
    }
}
